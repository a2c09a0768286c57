#include "spas/examples.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>

#include "spas/error.hpp"
#include "spas/parallel.hpp"

namespace spas::examples {
namespace {

std::vector<Point> target_samples(const TargetSet& target, const SamplingPlan& plan) {
  std::vector<Point> pts = target.representatives();
  if (const auto* ball = std::get_if<BallTarget>(&target.variant())) {
    for (const auto& d : unit_directions(target.dim(), plan.directions_per_shell,
                                         derive_seed(plan.rng_seed, 0x5a5au)))
      pts.push_back(ball->center + ball->radius * d);
  }
  return pts;
}

}  // namespace

BiasedGradientSystem ex1_reference_instance() {
  return BiasedGradientSystem{TargetSet::ball(Point::Zero(2), 1.0),
                              [](const Point& y) -> Vector { return y; }, 1.0,
                              ConstraintSet::all_space(2)};
}

double ex1_sstar(const BiasedGradientSystem& sys, const SamplingPlan& plan) {
  double s_star = 0.0;
  for (const auto& y : target_samples(sys.target, plan))
    s_star = std::max(s_star, sys.direction(sys.target.project(y)).squaredNorm());
  if (!(s_star > 1e-12))
    throw CertificationError(
        "s* vanishes: the search direction is zero on the sampled target set, so "
        "the target is a set of fixed points and the biased-method bound does not apply");
  return s_star;
}

double ex1_lipschitz(const BiasedGradientSystem& sys, double sigma_o,
                     const SamplingPlan& plan) {
  if (!(sigma_o > 0)) throw PreconditionError("ex1_lipschitz: sigma_o must be > 0");
  const auto pts = sample_region(sys.target, 0.0, sigma_o,
                                 ConstraintSet::all_space(sys.target.dim()), plan);
  const auto quotients = parallel_map(pts.size(), plan.threads, [&](std::size_t i) {
    const Point& y = pts[i];
    const double d = sys.target.distance(y);
    if (d <= plan.boundary_tol) return 0.0;
    return (sys.direction(y) - sys.direction(sys.target.project(y))).norm() / d;
  });
  double worst = 0.0;
  for (double q : quotients) worst = std::max(worst, q);
  return 1.1 * worst;
}

GainBounds ex1_gain_bounds(double tau, double lipschitz, double s_star,
                           double rho_o, double b_o) {
  if (!(tau > 0) || !(s_star > 0) || !(rho_o > 0) || !(b_o > 0))
    throw PreconditionError("ex1_gain_bounds: tau, s*, rho_o and b_o must be > 0");
  if (!(lipschitz >= 0))
    throw PreconditionError("ex1_gain_bounds: L_s must be >= 0");
  const double l2 = lipschitz * lipschitz;
  GainBounds g;
  g.alpha_bo = std::sqrt(b_o / s_star);
  g.alpha_rho_o = rho_o * rho_o * tau / (s_star + rho_o * rho_o * l2);
  g.alpha_w = l2 > 0 ? tau / l2 : std::numeric_limits<double>::infinity();
  g.alpha_hat = std::min({g.alpha_bo, g.alpha_rho_o, g.alpha_w});
  return g;
}

std::function<double(const Point&)> ex1_w_function(const TargetSet& target,
                                                   double tau, double lipschitz,
                                                   double s_star, double alpha) {
  const double lead = tau - alpha * lipschitz * lipschitz;
  if (!(lead > 0)) {
    std::ostringstream os;
    os << "ex1_w_function: alpha = " << alpha << " is not below tau / L_s^2";
    throw PreconditionError(os.str());
  }
  const double offset = alpha * s_star / lead;
  return [target, alpha, lead, offset](const Point& y) {
    const double d = target.distance(y);
    return alpha * lead * (d * d - offset);
  };
}

BuiltSystem ex1_build(const BiasedGradientSystem& sys, const SamplingPlan& plan,
                      double audit_radius) {
  if (sys.target.dim() != sys.constraint.dim())
    throw DimensionError("ex1_build: target and constraint differ in dimension");
  if (!(sys.tau > 0)) throw PreconditionError("ex1_build: tau must be > 0");
  const auto pts = sample_region(sys.target, 2.0 * plan.boundary_tol, audit_radius,
                                 ConstraintSet::all_space(sys.target.dim()), plan);
  const auto slack = parallel_map(pts.size(), plan.threads, [&](std::size_t i) {
    const Point& y = pts[i];
    const Vector r = y - sys.target.project(y);
    const double d2 = r.squaredNorm();
    return r.dot(sys.direction(y)) - sys.tau * d2 + 1e-9 * (1.0 + d2);
  });
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (slack[i] < 0) {
      std::ostringstream os;
      os << "search direction violates the pseudogradient inequality with tau = "
         << sys.tau << " at y = " << pts[i].transpose();
      throw CertificationError(os.str());
    }
  }
  auto direction = sys.direction;
  DynamicsMap map = [direction](const Point& y, const GainVector& g) -> Point {
    return y - g[0] * direction(y);
  };
  return BuiltSystem{ParamSystem(sys.target.dim(), 1, std::move(map), sys.constraint),
                     LyapunovFn::scaled_dist_squared(sys.target, 0.5)};
}

SpecFamily ex1_certificate_family(const BiasedGradientSystem& sys, double sigma_o,
                                  double rho_o, double b_o, const SamplingPlan& plan) {
  const double s_star = ex1_sstar(sys, plan);
  const double lip = ex1_lipschitz(sys, sigma_o, plan);
  const double tau = sys.tau;
  const TargetSet target = sys.target;
  return [=](double /*alpha*/) {
    CertificateSpec spec;
    spec.sigma_o = sigma_o;
    spec.eps_o = 0.0;
    spec.rho_o = rho_o;
    spec.b_o = b_o;
    spec.W = [=](const Point& y, const GainVector& g) {
      const double a = g[0];
      const double d = target.distance(y);
      return a * (tau - a * lip * lip) * d * d - a * a * s_star;
    };
    return spec;
  };
}

// ---------------------------------------------------------------------------

void validate_consensus_matrix(const Eigen::MatrixXd& weights) {
  if (weights.rows() != weights.cols() || weights.rows() == 0)
    throw DimensionError("consensus matrix must be square and nonempty");
  if ((weights - weights.transpose()).cwiseAbs().maxCoeff() > 1e-12)
    throw PreconditionError("consensus matrix must be symmetric");
  if ((weights.rowwise().sum().array() - 1.0).abs().maxCoeff() > 1e-12)
    throw PreconditionError("consensus matrix rows must sum to 1");
  if ((weights.array() < 0).any())
    throw PreconditionError("consensus matrix entries must be nonnegative");
}

double consensus_mu(const Eigen::MatrixXd& weights) {
  validate_consensus_matrix(weights);
  const Eigen::Index n = weights.rows();
  if (n == 1) return 0.0;
  // Orthonormal basis of 1⊥: the trailing columns of Q in a QR of 1.
  const Eigen::HouseholderQR<Eigen::MatrixXd> qr(Eigen::VectorXd::Ones(n));
  const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(n, n);
  const Eigen::MatrixXd basis = q.rightCols(n - 1);
  const Eigen::MatrixXd restricted = basis.transpose() * weights * basis;
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(
      0.5 * (restricted + restricted.transpose()), Eigen::EigenvaluesOnly);
  const double mu = eig.eigenvalues().array().square().maxCoeff();
  if (mu >= 1.0 - 1e-12) {
    std::ostringstream os;
    os << "mu = " << mu << ": the communication matrix does not contract "
       << "disagreement (disconnected or periodic topology)";
    throw CertificationError(os.str());
  }
  return mu;
}

Vector consensus_gradients(const Point& x,
                           const std::vector<QuadraticObjective>& objectives) {
  if (x.size() != static_cast<Eigen::Index>(objectives.size()))
    throw DimensionError("consensus_gradients: state size != number of agents");
  Vector s(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i)
    s[i] = objectives[static_cast<std::size_t>(i)].gradient(x[i]);
  return s;
}

AgreementSplit consensus_decompose(const Point& x) {
  if (x.size() == 0) throw DimensionError("consensus_decompose: empty state");
  AgreementSplit out;
  out.y = x.mean();
  out.z = x.array() - out.y;
  return out;
}

Point consensus_recompose(const AgreementSplit& split) {
  return split.z.array() + split.y;
}

AgreementSplit consensus_yz_step(const AgreementSplit& split, double alpha,
                                 const std::vector<QuadraticObjective>& objectives,
                                 const Eigen::MatrixXd& weights) {
  const auto n = static_cast<double>(split.z.size());
  if (weights.rows() != split.z.size() || weights.cols() != split.z.size())
    throw DimensionError("consensus_yz_step: matrix size != number of agents");
  const Vector s = consensus_gradients(consensus_recompose(split), objectives);
  AgreementSplit next;
  next.y = split.y - alpha / n * s.sum();
  const Vector ms = s.array() - s.mean();
  next.z = weights * split.z - alpha * ms;
  return next;
}

ConsensusBuilt consensus_build(const Eigen::MatrixXd& weights,
                               const std::vector<QuadraticObjective>& objectives) {
  return consensus_build(weights, objectives,
                         ConstraintSet::all_space(weights.rows()));
}

ConsensusBuilt consensus_build(const Eigen::MatrixXd& weights,
                               const std::vector<QuadraticObjective>& objectives,
                               const ConstraintSet& constraint) {
  consensus_mu(weights);
  const Eigen::Index n = weights.rows();
  if (static_cast<Eigen::Index>(objectives.size()) != n)
    throw DimensionError("consensus_build: one objective per agent is required");
  double num = 0.0, den = 0.0;
  for (const auto& j : objectives) {
    if (!(j.curvature > 0))
      throw PreconditionError("consensus_build: objective curvatures must be > 0");
    num += j.curvature * j.minimizer;
    den += j.curvature;
  }
  const double x_star = num / den;

  DynamicsMap map = [weights, objectives](const Point& x, const GainVector& g) -> Point {
    return weights * x - g[0] * consensus_gradients(x, objectives);
  };
  LyapunovFn v;
  const auto agents = static_cast<double>(n);
  v.value = [x_star, agents](const Point& x) {
    const auto split = consensus_decompose(x);
    return agents * (split.y - x_star) * (split.y - x_star) + split.z.squaredNorm();
  };
  v.gradient = [x_star](const Point& x) -> Vector {
    const auto split = consensus_decompose(x);
    return 2.0 * (split.z.array() + (split.y - x_star)).matrix();
  };
  return ConsensusBuilt{ParamSystem(n, 1, std::move(map), constraint), std::move(v),
                        x_star, TargetSet::singleton(Point::Constant(n, x_star))};
}

Eigen::MatrixXd load_consensus_matrix_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw PreconditionError("cannot open consensus matrix file " + path.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(cell, &used));
        if (cell.find_first_not_of(" \t\r", used) != std::string::npos)
          throw std::invalid_argument(cell);
      } catch (const std::exception&) {
        throw PreconditionError("consensus matrix file: bad number '" + cell + "'");
      }
    }
    rows.push_back(std::move(row));
  }
  const auto n = static_cast<Eigen::Index>(rows.size());
  if (n == 0) throw PreconditionError("consensus matrix file is empty");
  Eigen::MatrixXd m(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (static_cast<Eigen::Index>(rows[static_cast<std::size_t>(i)].size()) != n)
      throw DimensionError("consensus matrix file: expected N rows of N values");
    for (Eigen::Index j = 0; j < n; ++j)
      m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  }
  return m;
}

}  // namespace spas::examples

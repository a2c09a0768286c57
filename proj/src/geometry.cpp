#include "spas/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>
#include <cstring>
#include <string>

#include "spas/error.hpp"

namespace spas {
namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void require_dim(Eigen::Index expected, const Point& x, const char* what) {
  if (x.size() != expected) {
    std::ostringstream os;
    os << what << ": expected dimension " << expected << ", got " << x.size();
    throw DimensionError(os.str());
  }
}

Eigen::Index primitive_dim(const PrimitiveSet& p) {
  return std::visit(
      overloaded{[](const AllSpace& s) { return s.dim; },
                 [](const Box& s) { return s.lo.size(); },
                 [](const BallSet& s) { return s.center.size(); },
                 [](const Halfspace& s) { return s.normal.size(); },
                 [](const AffineSubspace& s) { return s.offset.size(); }},
      p);
}

void validate_primitive(const PrimitiveSet& p) {
  std::visit(
      overloaded{
          [](const AllSpace& s) {
            if (s.dim <= 0) throw PreconditionError("AllSpace: dim must be > 0");
          },
          [](const Box& s) {
            if (s.lo.size() != s.hi.size() || s.lo.size() == 0)
              throw DimensionError("Box: lo/hi sizes differ or are empty");
            if ((s.lo.array() > s.hi.array()).any())
              throw PreconditionError("Box: lo must be <= hi componentwise");
          },
          [](const BallSet& s) {
            if (s.center.size() == 0) throw DimensionError("Ball: empty center");
            if (!(s.radius > 0)) throw PreconditionError("Ball: radius must be > 0");
          },
          [](const Halfspace& s) {
            if (s.normal.size() == 0) throw DimensionError("Halfspace: empty normal");
            if (!(s.normal.norm() > 0))
              throw PreconditionError("Halfspace: normal must be nonzero");
          },
          [](const AffineSubspace& s) {
            if (s.basis.rows() != s.offset.size())
              throw DimensionError("AffineSubspace: basis rows != offset size");
            const Eigen::MatrixXd gram = s.basis.transpose() * s.basis;
            const Eigen::MatrixXd eye =
                Eigen::MatrixXd::Identity(s.basis.cols(), s.basis.cols());
            if (s.basis.cols() > 0 &&
                (gram - eye).cwiseAbs().maxCoeff() > kOrthonormalTol)
              throw PreconditionError(
                  "AffineSubspace: basis columns must be orthonormal");
          }},
      p);
}

Point project_primitive(const PrimitiveSet& p, const Point& x) {
  return std::visit(
      overloaded{
          [&](const AllSpace&) -> Point { return x; },
          [&](const Box& s) -> Point { return x.cwiseMax(s.lo).cwiseMin(s.hi); },
          [&](const BallSet& s) -> Point {
            const Vector d = x - s.center;
            const double n = d.norm();
            if (n <= s.radius) return x;
            return s.center + (s.radius / n) * d;
          },
          [&](const Halfspace& s) -> Point {
            const double excess = s.normal.dot(x) - s.offset;
            if (excess <= 0) return x;
            return x - (excess / s.normal.squaredNorm()) * s.normal;
          },
          [&](const AffineSubspace& s) -> Point {
            return s.offset + s.basis * (s.basis.transpose() * (x - s.offset));
          }},
      p);
}

double primitive_residual(const PrimitiveSet& p, const Point& x) {
  return std::visit(
      overloaded{
          [&](const AllSpace&) { return 0.0; },
          [&](const Box& s) {
            return std::max((s.lo - x).cwiseMax(0.0).maxCoeff(),
                            (x - s.hi).cwiseMax(0.0).maxCoeff());
          },
          [&](const BallSet& s) {
            return std::max(0.0, (x - s.center).norm() - s.radius);
          },
          [&](const Halfspace& s) {
            return std::max(0.0, (s.normal.dot(x) - s.offset) / s.normal.norm());
          },
          [&](const AffineSubspace& s) {
            const Vector d = x - s.offset;
            return (d - s.basis * (s.basis.transpose() * d)).norm();
          }},
      p);
}

// Dykstra's alternating projection; converges to the projection onto the
// intersection, not merely to a feasible point.
Point project_dykstra(const Intersection& set, const Point& x) {
  const std::size_t m = set.parts.size();
  if (m == 0) return x;
  if (m == 1) return project_primitive(set.parts.front(), x);
  std::vector<Vector> increments(m, Vector::Zero(x.size()));
  Point current = x;
  double residual = std::numeric_limits<double>::infinity();
  for (int sweep = 0; sweep < kDykstraMaxSweeps; ++sweep) {
    // The iterate can stall for a whole sweep while the increments still
    // move, so both must settle.
    const Point sweep_start = current;
    double increment_change = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      const Point shifted = current + increments[i];
      const Point next = project_primitive(set.parts[i], shifted);
      const Vector updated = shifted - next;
      increment_change += (updated - increments[i]).squaredNorm();
      increments[i] = updated;
      current = next;
    }
    residual = 0.0;
    for (const auto& part : set.parts)
      residual = std::max(residual, primitive_residual(part, current));
    if ((current - sweep_start).norm() <= kDykstraStepTol &&
        std::sqrt(increment_change) <= kDykstraStepTol &&
        residual <= kMembershipTol)
      return current;
  }
  if (residual <= kMembershipTol) return current;
  std::ostringstream os;
  os << "Intersection projection did not converge in " << kDykstraMaxSweeps
     << " sweeps (membership residual " << residual << ")";
  throw ConvergenceError(os.str(), residual);
}

// splitmix64 finalizer.
std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t double_bits(double v) {
  std::uint64_t bits = 0;
  static_assert(sizeof(bits) == sizeof(v));
  std::memcpy(&bits, &v, sizeof(v));
  return bits;
}

Vector random_unit(std::mt19937_64& rng, Eigen::Index n) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector v(n);
  do {
    for (Eigen::Index i = 0; i < n; ++i) v[i] = normal(rng);
  } while (v.norm() < 1e-12);
  return v.normalized();
}

}  // namespace

// ---------------------------------------------------------------------------

ConstraintSet::ConstraintSet(Variant v) : set_(std::move(v)) {
  std::visit(overloaded{[&](const Intersection& s) {
                          if (s.parts.empty())
                            throw PreconditionError("Intersection: no parts");
                          dim_ = primitive_dim(s.parts.front());
                          for (const auto& part : s.parts) {
                            validate_primitive(part);
                            if (primitive_dim(part) != dim_)
                              throw DimensionError(
                                  "Intersection: parts differ in dimension");
                          }
                        },
                        [&](const auto& s) {
                          const PrimitiveSet p{s};
                          validate_primitive(p);
                          dim_ = primitive_dim(p);
                        }},
             set_);
}

ConstraintSet ConstraintSet::all_space(Eigen::Index n) {
  return ConstraintSet(AllSpace{n});
}
ConstraintSet ConstraintSet::box(Vector lo, Vector hi) {
  return ConstraintSet(Box{std::move(lo), std::move(hi)});
}
ConstraintSet ConstraintSet::ball(Point center, double radius) {
  return ConstraintSet(BallSet{std::move(center), radius});
}
ConstraintSet ConstraintSet::halfspace(Vector normal, double offset) {
  return ConstraintSet(Halfspace{std::move(normal), offset});
}
ConstraintSet ConstraintSet::affine(Eigen::MatrixXd basis, Point offset) {
  return ConstraintSet(AffineSubspace{std::move(basis), std::move(offset)});
}
ConstraintSet ConstraintSet::intersection(std::vector<PrimitiveSet> parts) {
  return ConstraintSet(Intersection{std::move(parts)});
}

Point ConstraintSet::project(const Point& x) const {
  require_dim(dim_, x, "project_constraint");
  return std::visit(overloaded{[&](const Intersection& s) {
                                 return project_dykstra(s, x);
                               },
                               [&](const auto& s) {
                                 return project_primitive(PrimitiveSet{s}, x);
                               }},
                    set_);
}

double ConstraintSet::residual(const Point& x) const {
  require_dim(dim_, x, "constraint residual");
  return std::visit(overloaded{[&](const Intersection& s) {
                                 double r = 0.0;
                                 for (const auto& part : s.parts)
                                   r = std::max(r, primitive_residual(part, x));
                                 return r;
                               },
                               [&](const auto& s) {
                                 return primitive_residual(PrimitiveSet{s}, x);
                               }},
                    set_);
}

Point project_constraint(const ConstraintSet& set, const Point& x) {
  return set.project(x);
}

// ---------------------------------------------------------------------------

TargetSet::TargetSet(Variant v) : set_(std::move(v)) {
  std::visit(
      overloaded{
          [&](const Singleton& s) {
            if (s.point.size() == 0) throw DimensionError("Singleton: empty point");
            if (!s.point.allFinite())
              throw PreconditionError("Singleton: non-finite point");
            dim_ = s.point.size();
          },
          [&](const PointCloud& s) {
            if (s.points.empty())
              throw PreconditionError("PointCloud: needs at least one point");
            dim_ = s.points.front().size();
            for (const auto& p : s.points) {
              if (p.size() != dim_ || dim_ == 0)
                throw DimensionError("PointCloud: points differ in dimension");
              if (!p.allFinite())
                throw PreconditionError("PointCloud: non-finite point");
            }
          },
          [&](const BallTarget& s) {
            if (s.center.size() == 0) throw DimensionError("Ball: empty center");
            if (!(s.radius > 0)) throw PreconditionError("Ball: radius must be > 0");
            dim_ = s.center.size();
          }},
      set_);
}

TargetSet TargetSet::singleton(Point p) { return TargetSet(Singleton{std::move(p)}); }
TargetSet TargetSet::point_cloud(std::vector<Point> points) {
  return TargetSet(PointCloud{std::move(points)});
}
TargetSet TargetSet::ball(Point center, double radius) {
  return TargetSet(BallTarget{std::move(center), radius});
}

Point TargetSet::project(const Point& x) const {
  require_dim(dim_, x, "project_target");
  return std::visit(
      overloaded{[&](const Singleton& s) -> Point { return s.point; },
                 [&](const PointCloud& s) -> Point {
                   std::size_t best = 0;
                   double best_d = (x - s.points[0]).squaredNorm();
                   for (std::size_t i = 1; i < s.points.size(); ++i) {
                     const double d = (x - s.points[i]).squaredNorm();
                     if (d < best_d) {
                       best_d = d;
                       best = i;
                     }
                   }
                   return s.points[best];
                 },
                 [&](const BallTarget& s) -> Point {
                   const Vector d = x - s.center;
                   const double n = d.norm();
                   if (n <= s.radius) return x;
                   return s.center + (s.radius / n) * d;
                 }},
      set_);
}

double TargetSet::distance(const Point& x) const {
  require_dim(dim_, x, "dist_target");
  return std::visit(
      overloaded{[&](const Singleton& s) { return (x - s.point).norm(); },
                 [&](const PointCloud& s) {
                   double best = std::numeric_limits<double>::infinity();
                   for (const auto& p : s.points) best = std::min(best, (x - p).norm());
                   return best;
                 },
                 [&](const BallTarget& s) {
                   return std::max(0.0, (x - s.center).norm() - s.radius);
                 }},
      set_);
}

std::size_t TargetSet::anchor_count() const {
  if (const auto* cloud = std::get_if<PointCloud>(&set_)) return cloud->points.size();
  return 1;
}

Point TargetSet::ray_point(std::size_t anchor, const Vector& dir, double rho) const {
  return std::visit(
      overloaded{[&](const Singleton& s) -> Point { return s.point + rho * dir; },
                 [&](const PointCloud& s) -> Point {
                   return s.points.at(anchor) + rho * dir;
                 },
                 [&](const BallTarget& s) -> Point {
                   return s.center + (s.radius + rho) * dir;
                 }},
      set_);
}

std::vector<Point> TargetSet::representatives() const {
  return std::visit(
      overloaded{[](const Singleton& s) { return std::vector<Point>{s.point}; },
                 [](const PointCloud& s) { return s.points; },
                 [&](const BallTarget& s) {
                   std::vector<Point> reps{s.center};
                   for (Eigen::Index i = 0; i < dim_; ++i) {
                     for (double sign : {1.0, -1.0}) {
                       for (double frac : {1.0, 0.5}) {
                         Point p = s.center;
                         p[i] += sign * frac * s.radius;
                         reps.push_back(std::move(p));
                       }
                     }
                   }
                   return reps;
                 }},
      set_);
}

Point project_target(const TargetSet& target, const Point& x) { return target.project(x); }
double dist_target(const TargetSet& target, const Point& x) { return target.distance(x); }

double target_containment_gap(const TargetSet& target, const ConstraintSet& xi) {
  if (target.dim() != xi.dim())
    throw DimensionError("target and constraint set differ in dimension");
  double worst = 0.0;
  for (const auto& rep : target.representatives())
    worst = std::max(worst, (xi.project(rep) - rep).norm());
  return worst;
}

// ---------------------------------------------------------------------------

void SamplingPlan::validate(Eigen::Index n) const {
  if (directions_per_shell < static_cast<std::size_t>(2 * n))
    throw PreconditionError("SamplingPlan: directions_per_shell must be >= 2n");
  if (radial_refinements < 1)
    throw PreconditionError("SamplingPlan: radial_refinements must be >= 1");
  if (!(boundary_tol > 0))
    throw PreconditionError("SamplingPlan: boundary_tol must be > 0");
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t salt_a,
                          std::uint64_t salt_b) {
  return mix64(mix64(mix64(seed) ^ salt_a) ^ salt_b);
}

std::vector<Vector> unit_directions(Eigen::Index n, std::size_t count,
                                    std::uint64_t seed, bool staggered) {
  std::vector<Vector> dirs;
  if (n == 1) {
    dirs.push_back(Vector::Constant(1, 1.0));
    dirs.push_back(Vector::Constant(1, -1.0));
    return dirs;
  }
  if (n == 2) {
    const double step = 2.0 * std::numbers::pi / static_cast<double>(count);
    const double phase = staggered ? 0.5 * step : 0.0;
    dirs.reserve(count);
    for (std::size_t k = 0; k < count; ++k) {
      const double theta = phase + step * static_cast<double>(k);
      Vector d(2);
      // Snap the axis-aligned angles so axis directions are exact.
      d << std::cos(theta), std::sin(theta);
      for (Eigen::Index i = 0; i < 2; ++i)
        if (std::abs(d[i]) < 1e-15) d[i] = 0.0;
      dirs.push_back(d.normalized());
    }
    return dirs;
  }
  dirs.reserve(count);
  if (!staggered) {
    for (Eigen::Index i = 0; i < n; ++i) {
      for (double sign : {1.0, -1.0}) {
        Vector d = Vector::Zero(n);
        d[i] = sign;
        dirs.push_back(std::move(d));
      }
    }
  }
  std::mt19937_64 rng(derive_seed(seed, 0xd1u, staggered ? 1u : 0u));
  while (dirs.size() < count) dirs.push_back(random_unit(rng, n));
  return dirs;
}

std::vector<Point> sample_shell(const TargetSet& target, double r,
                                const SamplingPlan& plan, bool staggered) {
  if (!(r > 0)) throw PreconditionError("sample_shell: r must be > 0");
  plan.validate(target.dim());
  const auto dirs = unit_directions(target.dim(), plan.directions_per_shell,
                                    derive_seed(plan.rng_seed, double_bits(r)),
                                    staggered);
  std::vector<Point> out;
  out.reserve(dirs.size() * target.anchor_count());
  for (std::size_t a = 0; a < target.anchor_count(); ++a) {
    for (const auto& d : dirs) {
      Point p = target.ray_point(a, d, r);
      if (std::abs(target.distance(p) - r) <= plan.boundary_tol)
        out.push_back(std::move(p));
    }
  }
  return out;
}

std::vector<Point> sample_region(const TargetSet& target, double r_in,
                                 double r_out, const ConstraintSet& xi,
                                 const SamplingPlan& plan) {
  if (!(r_in >= 0) || !(r_out > r_in))
    throw PreconditionError("sample_region: requires r_out > r_in >= 0");
  if (xi.dim() != target.dim())
    throw DimensionError("sample_region: target and constraint differ in dimension");
  plan.validate(target.dim());
  const std::uint64_t stream =
      derive_seed(plan.rng_seed, double_bits(r_in), double_bits(r_out));
  const auto dirs =
      unit_directions(target.dim(), plan.directions_per_shell, stream);
  std::mt19937_64 rng(derive_seed(stream, 0x7261u));
  std::uniform_real_distribution<double> unif(r_in, r_out);

  const std::size_t layers = plan.radial_refinements + 1;
  std::vector<double> radii;
  for (std::size_t k = 0; k < layers; ++k) {
    const double rho = r_in + (r_out - r_in) * static_cast<double>(k) /
                                  static_cast<double>(layers - 1);
    if (rho > 0) radii.push_back(rho);
  }

  std::vector<Point> out;
  auto keep = [&](const Point& raw) {
    Point p = xi.project(raw);
    const double d = target.distance(p);
    if (d >= r_in - plan.boundary_tol && d <= r_out + plan.boundary_tol)
      out.push_back(std::move(p));
  };
  if (r_in == 0) {
    for (const auto& rep : target.representatives()) keep(rep);
  }
  for (std::size_t a = 0; a < target.anchor_count(); ++a) {
    for (const auto& d : dirs) {
      for (double rho : radii) keep(target.ray_point(a, d, rho));
      keep(target.ray_point(a, d, unif(rng)));
    }
  }
  return out;
}

std::vector<Point> sample_ball_seeds(const TargetSet& target, double r,
                                     const ConstraintSet& xi,
                                     const SamplingPlan& plan, std::size_t count,
                                     std::uint64_t salt) {
  if (!(r > 0)) throw PreconditionError("sample_ball_seeds: r must be > 0");
  if (xi.dim() != target.dim())
    throw DimensionError("sample_ball_seeds: target and constraint differ in dimension");
  std::mt19937_64 rng(derive_seed(plan.rng_seed, salt, double_bits(r)));
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> pick(0, target.anchor_count() - 1);
  const auto n = static_cast<double>(target.dim());
  std::vector<Point> seeds;
  seeds.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    const Vector dir = random_unit(rng, target.dim());
    const std::size_t anchor = pick(rng);
    const double rho = (k % 2 == 0) ? r : r * std::pow(unif(rng), 1.0 / n);
    seeds.push_back(xi.project(target.ray_point(anchor, dir, rho)));
  }
  return seeds;
}

}  // namespace spas

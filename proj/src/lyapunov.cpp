#include "spas/lyapunov.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>

#include "spas/error.hpp"
#include "spas/parallel.hpp"

namespace spas {

LyapunovFn LyapunovFn::scaled_dist_squared(const TargetSet& target, double c) {
  LyapunovFn fn;
  fn.value = [target, c](const Point& x) {
    const double d = target.distance(x);
    return c * d * d;
  };
  fn.gradient = [target, c](const Point& x) -> Vector {
    return 2.0 * c * (x - target.project(x));
  };
  return fn;
}

LyapunovFn LyapunovFn::weighted_quadratic(Vector weights, Point center) {
  if (weights.size() != center.size())
    throw DimensionError("weighted_quadratic: weights/center size mismatch");
  if ((weights.array() < 0).any())
    throw PreconditionError("weighted_quadratic: weights must be nonnegative");
  LyapunovFn fn;
  fn.value = [weights, center](const Point& x) {
    return (weights.array() * (x - center).array().square()).sum();
  };
  fn.gradient = [weights, center](const Point& x) -> Vector {
    return 2.0 * (weights.array() * (x - center).array()).matrix();
  };
  return fn;
}

double delta_v(const ParamSystem& sys, const LyapunovFn& V, const Point& xi,
               const GainVector& gain) {
  return V(step(sys, xi, gain)) - V(xi);
}

namespace {

constexpr std::size_t kRayGrid = 64;
constexpr int kMaxDoublings = 64;
constexpr int kBisectionSteps = 200;

// Initial pattern-search step: roughly the spacing between neighbouring shell
// samples.
double initial_pattern_step(Eigen::Index n, std::size_t directions, double r) {
  if (n == 2) return r * 2.0 * std::numbers::pi / static_cast<double>(directions);
  return 2.0 * r *
         std::pow(static_cast<double>(directions), -1.0 / static_cast<double>(n - 1));
}

std::optional<Point> retract_to_shell(const TargetSet& A, const Point& q,
                                      double r, double tol) {
  const Point a = A.project(q);
  const Vector v = q - a;
  const double len = v.norm();
  if (len < std::numeric_limits<double>::min()) return std::nullopt;
  Point p = a + (r / len) * v;
  if (std::abs(A.distance(p) - r) > tol) return std::nullopt;
  return p;
}

// sense = +1 maximizes, -1 minimizes.
LevelEstimate extremize_on_shell(const LyapunovFn& V, const TargetSet& A,
                                 double r, const SamplingPlan& plan,
                                 double sense) {
  if (!(r > 0)) throw PreconditionError("shell extremizer: r must be > 0");
  const auto shell = sample_shell(A, r, plan);
  if (shell.empty())
    throw CertificationError("shell extremizer: no samples landed on the shell");
  const auto values = parallel_map(shell.size(), plan.threads,
                                   [&](std::size_t i) { return V(shell[i]); });

  std::size_t best_i = 0;
  for (std::size_t i = 1; i < values.size(); ++i)
    if (sense * values[i] > sense * values[best_i]) best_i = i;

  LevelEstimate est;
  est.level = values[best_i];
  est.achieved_at = shell[best_i];
  est.samples_used = shell.size();

  const Eigen::Index n = A.dim();
  if (n == 1) {
    est.tol = 0.0;
    return est;
  }
  double h = initial_pattern_step(n, plan.directions_per_shell, r);
  for (std::size_t level = 0; level < plan.radial_refinements; ++level) {
    for (int iter = 0; iter < 100; ++iter) {
      bool improved = false;
      for (Eigen::Index i = 0; i < n && !improved; ++i) {
        for (double sign : {1.0, -1.0}) {
          Point q = est.achieved_at;
          q[i] += sign * h;
          const auto cand = retract_to_shell(A, q, r, plan.boundary_tol);
          if (!cand) continue;
          const double v = V(*cand);
          ++est.samples_used;
          if (sense * v > sense * est.level) {
            est.level = v;
            est.achieved_at = *cand;
            improved = true;
            break;
          }
        }
      }
      if (!improved) break;
    }
    h *= 0.5;
  }
  est.tol = h;
  return est;
}

struct RayCrossing {
  Point point;
  double rho = 0.0;
  double width = 0.0;
  bool nonmonotone = false;
};

// Crossing of V = l along the ray from `anchor` in direction `dir`. With
// `last` the last crossing below the doubling cap, otherwise the first.
RayCrossing ray_crossing(const LyapunovFn& V, const TargetSet& A,
                         std::size_t anchor, const Vector& dir, double l,
                         bool last) {
  auto g = [&](double rho) { return V(A.ray_point(anchor, dir, rho)); };
  double cap = 1.0;
  int k = 0;
  while (g(cap) <= l) {
    if (++k > kMaxDoublings) {
      std::ostringstream os;
      os << "V stays below level " << l << " along a ray out to radius " << cap
         << " (radial unboundedness violated along this direction)";
      throw LevelSetError(os.str(), dir);
    }
    cap *= 2.0;
  }
  std::vector<double> vals(kRayGrid + 1);
  for (std::size_t j = 0; j <= kRayGrid; ++j)
    vals[j] = g(cap * static_cast<double>(j) / kRayGrid);

  std::size_t changes = 0;
  for (std::size_t j = 0; j < kRayGrid; ++j)
    if ((vals[j] <= l) != (vals[j + 1] <= l)) ++changes;

  std::size_t lo_j = 0;
  if (last) {
    for (std::size_t j = 0; j < kRayGrid; ++j)
      if (vals[j] <= l) lo_j = j;
  } else {
    // First grid point above the level; vals[0] = V(anchor) is ~0.
    std::size_t j = 0;
    while (j < kRayGrid && vals[j + 1] <= l) ++j;
    lo_j = j;
  }
  double lo = cap * static_cast<double>(lo_j) / kRayGrid;
  double hi = cap * static_cast<double>(lo_j + 1) / kRayGrid;
  const double stop = 1e-14 * std::max(1.0, cap);
  for (int it = 0; it < kBisectionSteps && hi - lo > stop; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (g(mid) <= l)
      lo = mid;
    else
      hi = mid;
  }
  RayCrossing out;
  out.rho = lo;
  out.point = A.ray_point(anchor, dir, lo);
  out.width = hi - lo;
  out.nonmonotone = changes > 1 || vals[0] > l;
  return out;
}

std::vector<RayCrossing> all_crossings(const LyapunovFn& V, const TargetSet& A,
                                       double l, const SamplingPlan& plan,
                                       bool last, bool staggered) {
  if (!(l > 0)) throw PreconditionError("level-set search: l must be > 0");
  plan.validate(A.dim());
  const auto dirs = unit_directions(A.dim(), plan.directions_per_shell,
                                    derive_seed(plan.rng_seed, 0x1e7e1u), staggered);
  const std::size_t rays = dirs.size() * A.anchor_count();
  return parallel_map(rays, plan.threads, [&](std::size_t i) {
    return ray_crossing(V, A, i / dirs.size(), dirs[i % dirs.size()], l, last);
  });
}

RadiusEstimate reduce_radius(const TargetSet& A,
                             const std::vector<RayCrossing>& rays, double sense) {
  RadiusEstimate est;
  est.samples_used = rays.size();
  bool first = true;
  for (const auto& c : rays) {
    const double d = A.distance(c.point);
    if (first || sense * d > sense * est.radius) {
      est.radius = d;
      est.achieved_at = c.point;
      first = false;
    }
    est.tol = std::max(est.tol, c.width);
    if (c.nonmonotone) ++est.nonmonotone_rays;
  }
  return est;
}

}  // namespace

AuditReport audit_positive_definite(const LyapunovFn& V, const TargetSet& A,
                                    double r_max, const SamplingPlan& plan) {
  if (!(r_max > 0)) throw PreconditionError("audit_positive_definite: r_max must be > 0");
  AuditReport rep;
  rep.worst_margin = std::numeric_limits<double>::infinity();
  for (const auto& a : A.representatives()) {
    const double margin = kMembershipTol - V(a);
    ++rep.samples_used;
    if (margin < rep.worst_margin) {
      rep.worst_margin = margin;
      rep.witness = a;
    }
    if (margin < 0) rep.note = "V does not vanish on the target set";
  }
  const double r_in = std::min(2.0 * plan.boundary_tol, 0.5 * r_max);
  const auto pts = sample_region(A, r_in, r_max, ConstraintSet::all_space(A.dim()), plan);
  const auto vals = parallel_map(pts.size(), plan.threads,
                                 [&](std::size_t i) { return V(pts[i]); });
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (A.distance(pts[i]) <= plan.boundary_tol) continue;
    ++rep.samples_used;
    if (vals[i] < rep.worst_margin) {
      rep.worst_margin = vals[i];
      rep.witness = pts[i];
    }
    if (!(vals[i] > 0) && rep.note.empty()) rep.note = "V is not positive off the target set";
  }
  rep.pass = rep.worst_margin > 0;
  return rep;
}

AuditReport audit_radially_unbounded(const LyapunovFn& V, const TargetSet& A,
                                     const std::vector<double>& radii,
                                     const SamplingPlan& plan,
                                     double growth_factor) {
  if (radii.size() < 2)
    throw PreconditionError("audit_radially_unbounded: needs at least two radii");
  for (std::size_t i = 1; i < radii.size(); ++i)
    if (!(radii[i] > radii[i - 1]))
      throw PreconditionError("audit_radially_unbounded: radii must increase");
  if (!(radii.front() > 0))
    throw PreconditionError("audit_radially_unbounded: radii must be positive");

  AuditReport rep;
  rep.note = "heuristic growth audit, not a proof";
  rep.worst_margin = std::numeric_limits<double>::infinity();
  for (double r : radii) {
    const auto est = min_V_on_shell(V, A, r, plan);
    rep.samples_used += est.samples_used;
    if (!rep.shell_minima.empty()) {
      const double step_margin = est.level - rep.shell_minima.back();
      if (step_margin < rep.worst_margin) {
        rep.worst_margin = step_margin;
        rep.witness = est.achieved_at;
      }
    }
    rep.shell_minima.push_back(est.level);
  }
  const double growth = rep.shell_minima.back() - growth_factor * rep.shell_minima.front();
  rep.pass = rep.worst_margin > 0 && growth >= 0;
  if (growth < rep.worst_margin) rep.worst_margin = growth;
  return rep;
}

LevelEstimate max_V_on_shell(const LyapunovFn& V, const TargetSet& A, double r,
                             const SamplingPlan& plan) {
  return extremize_on_shell(V, A, r, plan, 1.0);
}

LevelEstimate min_V_on_shell(const LyapunovFn& V, const TargetSet& A, double r,
                             const SamplingPlan& plan) {
  return extremize_on_shell(V, A, r, plan, -1.0);
}

RadiusEstimate max_dist_on_levelset(const LyapunovFn& V, const TargetSet& A,
                                    double l, const SamplingPlan& plan) {
  return reduce_radius(A, all_crossings(V, A, l, plan, true, false), 1.0);
}

RadiusEstimate min_dist_on_levelset(const LyapunovFn& V, const TargetSet& A,
                                    double l, const SamplingPlan& plan) {
  return reduce_radius(A, all_crossings(V, A, l, plan, false, false), -1.0);
}

std::vector<Point> levelset_boundary(const LyapunovFn& V, const TargetSet& A,
                                     double l, const SamplingPlan& plan,
                                     bool staggered) {
  const auto rays = all_crossings(V, A, l, plan, true, staggered);
  std::vector<Point> out;
  out.reserve(rays.size());
  for (const auto& c : rays) out.push_back(c.point);
  return out;
}

}  // namespace spas

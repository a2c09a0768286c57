#pragma once

// Lyapunov function evaluation, ΔV along the dynamics, sampled audits, and the
// four shell/level-set extremizers used by the level-set constructions.
//
// All extremizers are sampling estimates, not certificates: each result
// carries the number of samples and the numerical tolerance it was computed
// with so callers can tighten the plan.

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "spas/geometry.hpp"
#include "spas/system.hpp"

namespace spas {

struct LyapunovFn {
  std::function<double(const Point&)> value;
  /// Optional; only the pseudogradient check needs it.
  std::function<Vector(const Point&)> gradient;

  double operator()(const Point& x) const { return value(x); }
  bool has_gradient() const { return static_cast<bool>(gradient); }

  /// c · dist_target(x)²  (gradient 2c (x − P_A x)).
  static LyapunovFn scaled_dist_squared(const TargetSet& target, double c);
  /// Σ w_i (x_i − center_i)².
  static LyapunovFn weighted_quadratic(Vector weights, Point center);
};

struct LevelEstimate {
  double level = 0.0;
  Point achieved_at;
  std::size_t samples_used = 0;
  double tol = 0.0;
};

struct RadiusEstimate {
  double radius = 0.0;
  Point achieved_at;
  std::size_t samples_used = 0;
  double tol = 0.0;
  /// Rays along which V crossed the level more than once.
  std::size_t nonmonotone_rays = 0;
};

/// Outcome of a sampled audit. `worst_margin` is signed so that a negative
/// value is a violation; `witness` attains it.
struct AuditReport {
  bool pass = true;
  double worst_margin = 0.0;
  Point witness;
  std::size_t samples_used = 0;
  std::string note;
  std::vector<double> shell_minima;  // radial audit only
};

double delta_v(const ParamSystem& sys, const LyapunovFn& V, const Point& xi,
               const GainVector& gain);

/// V vanishes on the target's representatives and is positive on sampled
/// points of B̄_{r_max}(A) farther than plan.boundary_tol from A.
AuditReport audit_positive_definite(const LyapunovFn& V, const TargetSet& A,
                                    double r_max, const SamplingPlan& plan);

/// Heuristic growth audit: shell minima over `radii` must strictly increase
/// and the last must be at least `growth_factor` times the first. Not a proof
/// of radial unboundedness.
AuditReport audit_radially_unbounded(const LyapunovFn& V, const TargetSet& A,
                                     const std::vector<double>& radii,
                                     const SamplingPlan& plan,
                                     double growth_factor = 4.0);

/// max V on {dist_target = r}: sampled shell plus a shell-constrained
/// coordinate pattern search whose step is halved plan.radial_refinements
/// times.
LevelEstimate max_V_on_shell(const LyapunovFn& V, const TargetSet& A, double r,
                             const SamplingPlan& plan);
LevelEstimate min_V_on_shell(const LyapunovFn& V, const TargetSet& A, double r,
                             const SamplingPlan& plan);

/// Radius of the smallest ball around A containing {V <= l}: per ray, the
/// last crossing of V = l below the doubling cap.
RadiusEstimate max_dist_on_levelset(const LyapunovFn& V, const TargetSet& A,
                                    double l, const SamplingPlan& plan);
/// Radius of the largest ball around A inside {V <= l}: per ray, the first
/// crossing of V = l.
RadiusEstimate min_dist_on_levelset(const LyapunovFn& V, const TargetSet& A,
                                    double l, const SamplingPlan& plan);

/// Points on {V = l} found along the shell directions (one per ray, the last
/// crossing). Used for boundary plots and containment checks.
std::vector<Point> levelset_boundary(const LyapunovFn& V, const TargetSet& A,
                                     double l, const SamplingPlan& plan,
                                     bool staggered = false);

}  // namespace spas

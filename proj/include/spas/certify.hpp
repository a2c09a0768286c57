#pragma once

// Sampled verification of the Lyapunov decrease conditions, scalar gain
// search, and empirical stability/attractivity checks on rollouts.
//
// Every "pass" here means "no violation found at this sampling resolution";
// reports carry the sample counts so a pass can be reproduced or tightened.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "spas/constructions.hpp"
#include "spas/geometry.hpp"
#include "spas/lyapunov.hpp"
#include "spas/system.hpp"

namespace spas {

inline constexpr double kStrictMargin = 1e-9;
inline constexpr double kContainmentMargin = 1e-6;

/// Margin function W(ξ, π).
using MarginFn = std::function<double(const Point&, const GainVector&)>;

struct CertificateSpec {
  double sigma_o = 0.0;
  double eps_o = 0.0;
  double rho_o = 0.0;
  double b_o = 0.0;
  MarginFn W;

  /// Throws PreconditionError unless σ_o > ε_o + ρ_o, ρ_o > 0, b_o > 0,
  /// ε_o >= 0 and W is set.
  void validate() const;
};

struct ConditionResult {
  bool pass = false;
  /// Signed slack of the condition; negative means violated. For P1 this is
  /// min W, for P2 min(−W − ΔV), for P3 min(b_o − ΔV).
  double worst_margin = 0.0;
  Point witness;
  std::size_t samples_used = 0;
  std::string note;
};

struct VerificationReport {
  std::map<std::string, ConditionResult> conditions;  // "P1", "P2", "P3"
  bool pass() const;
};

/// P1: W > strict margin on Ξ ∩ (B̄_σo \ B_{εo+ρo});
/// P2: ΔV <= −W + margin on the same region;
/// P3: ΔV <= b_o + margin on Ξ ∩ B̄_{εo+ρo}.
/// An empty sample region fails its conditions with an explanatory note.
VerificationReport verify_conditions(const ParamSystem& sys, const LyapunovFn& V,
                                     const TargetSet& A, const CertificateSpec& spec,
                                     const GainVector& gain,
                                     const SamplingPlan& plan,
                                     double margin = kStrictMargin);

using SpecFamily = std::function<CertificateSpec(double alpha)>;

struct GainSearchStep {
  double alpha = 0.0;
  bool pass = false;
};

struct GainSearchResult {
  GainBox box;
  double alpha_hat = 0.0;
  std::vector<GainSearchStep> trace;
};

/// Bisection for the largest α in (0, α_max] at which verify_conditions
/// passes (relative tolerance 1e-3), assuming the predicate is down-closed.
/// The result is spot-checked at α̂/2 and α̂/10. Throws CertificationError
/// when no admissible gain exists down to α_max·1e-6 or a spot check fails.
GainSearchResult gain_search(const ParamSystem& sys, const LyapunovFn& V,
                             const TargetSet& A, const SpecFamily& spec_family,
                             const SamplingPlan& plan, double alpha_max,
                             double rel_tol = 1e-3);

// ---------------------------------------------------------------------------
// Rollout checks.
// ---------------------------------------------------------------------------

struct ExitEvent {
  std::size_t seed = 0;
  std::size_t t = 0;
  Point state;
  double value = 0.0;  // V or dist_target at the exit, depending on the check
};

struct InvarianceReport {
  bool pass = true;
  double level = 0.0;
  double sampling_radius = 0.0;  // σ̂ of the rejection-sampling ball
  std::size_t seeds = 0;
  std::size_t horizon = 0;
  std::size_t exits = 0;          // trajectories that left Γ_l
  double worst_excess = 0.0;      // max over trajectories of V − l
  std::vector<ExitEvent> first_exits;  // at most 16, in seed order
};

/// Draws `n_seeds` states of Γ_l ∩ Ξ by rejection over B̄_σ̂(A) and reports
/// any V(ξ(t)) > l + margin within `horizon` steps. Throws CertificationError
/// if rejection sampling starves.
InvarianceReport check_forward_invariance(const ParamSystem& sys,
                                          const LyapunovFn& V, const TargetSet& A,
                                          double l, const GainVector& gain,
                                          const SamplingPlan& plan,
                                          std::size_t horizon, std::size_t n_seeds,
                                          double margin = kContainmentMargin);

struct StabilityReport {
  bool pass = true;
  double delta = 0.0;
  double rho_s = 0.0;
  std::size_t seeds = 0;
  std::size_t horizon = 0;
  std::size_t violations = 0;
  double max_excursion = 0.0;
  std::size_t worst_seed = 0;
  std::size_t worst_t = 0;
};

/// Rolls out the given initial states and checks dist_target <= ρ_s + margin.
StabilityReport check_practical_stability(const ParamSystem& sys,
                                          const TargetSet& A, double delta,
                                          double rho_s, const GainVector& gain,
                                          const std::vector<Point>& seeds,
                                          std::size_t horizon,
                                          double margin = kContainmentMargin);

/// Seeds drawn from B̄_δ(A) ∩ Ξ.
StabilityReport check_practical_stability(const ParamSystem& sys,
                                          const TargetSet& A, double delta,
                                          double rho_s, const GainVector& gain,
                                          const SamplingPlan& plan,
                                          std::size_t horizon, std::size_t n_seeds,
                                          double margin = kContainmentMargin);

struct AttractivityReport {
  bool pass = true;
  double sigma = 0.0;
  double rho_a = 0.0;
  double eps = 0.0;
  std::size_t seeds = 0;
  std::size_t horizon = 0;
  /// Smallest T after which every trajectory stays in B̄_{ρa+ε}(A).
  std::size_t hitting_time = 0;
  std::size_t failures = 0;
  std::optional<std::size_t> failing_seed;
  std::string note;
};

/// "Enters and stays" semantics: a trajectory that enters B̄_{ρa+ε}(A) and
/// later leaves within the horizon fails, as does one that never enters.
AttractivityReport check_uniform_attractivity(
    const ParamSystem& sys, const TargetSet& A, double sigma, double rho_a,
    double eps, const GainVector& gain, const std::vector<Point>& seeds,
    std::size_t horizon, double margin = kContainmentMargin);

/// Seeds drawn from B̄_σ(A) ∩ Ξ. Also checks on shell samples that
/// B̄_ε(B̄_ρa(A)) ∩ Ξ ⊂ B̄_σ(A) ∩ Ξ.
AttractivityReport check_uniform_attractivity(
    const ParamSystem& sys, const TargetSet& A, double sigma, double rho_a,
    double eps, const GainVector& gain, const SamplingPlan& plan,
    std::size_t horizon, std::size_t n_seeds, double margin = kContainmentMargin);

struct DescentBound {
  double gamma = 0.0;
  Point gamma_at;
  double v_sup = 0.0;
  std::size_t time_bound = 0;  // ⌈V_sup / γ⌉
  std::size_t samples_used = 0;
};

/// γ = sampled min of W over (B̄_σ̂(A) \ B_{ρa+ε}(A)) ∩ Ξ (the ε-inflation of
/// B̄_ρa(A) is B̄_{ρa+ε}(A) in the Euclidean metric). When `v_sup` is not
/// given it defaults to max V on the σ̂ shell. Throws CertificationError if
/// γ <= 0 or the region is empty.
DescentBound gamma_and_time_bound(const MarginFn& W, const TargetSet& A,
                                  double sigma_hat, double rho_a, double eps,
                                  const ConstraintSet& xi, const GainVector& gain,
                                  const SamplingPlan& plan, const LyapunovFn& V,
                                  std::optional<double> v_sup = std::nullopt);

struct SpspSample {
  Point y;
  Vector s;
};

struct SpspReport {
  bool pass = true;
  ConditionResult inner;  // ∇Vᵀs >= −b on B̄_ε(A)
  ConditionResult outer;  // ∇Vᵀs >= φ(y) > 0 on B̄_σ \ B_ε
  std::size_t skipped = 0;  // outside B̄_σ(A) or outside Ξ
};

/// Sampled check of the semiglobal practical strict-pseudogradient
/// inequalities for the given (point, direction) pairs.
SpspReport check_spsp(const std::vector<SpspSample>& samples, const LyapunovFn& V,
                      const TargetSet& A, double eps, double b, double sigma,
                      const std::function<double(const Point&)>& phi,
                      const std::optional<ConstraintSet>& xi = std::nullopt,
                      double margin = kStrictMargin);

}  // namespace spas

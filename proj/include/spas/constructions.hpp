#pragma once

// Level-set constructions that turn radii around the target set into
// sublevel sets of V and back:
//
//   outer:    σ̃   -> l̂ (smallest sublevel set containing B̄_σ̃)  -> σ̂
//   inner:    ε_o -> l_o -> δ̌ -> ľ -> ρ̌_s
//   backward: ρ_s -> l_ρs (largest sublevel set inside B̄_ρs) -> δ -> l_δ -> ρ_os
//
// and a sampled check of the backward containment chain
//   B̄_ρs ⊇ Γ_lρs ⊇ B̄_δ ⊇ Γ_lδ ⊇ B̄_{ε_o+ρ_os}.

#include <cstddef>
#include <string>
#include <vector>

#include "spas/lyapunov.hpp"

namespace spas {

/// Absolute slack applied when a construction compares radii.
inline constexpr double kConstructionSlack = 1e-6;

struct OuterConstruction {
  double sigma_tilde = 0.0;
  LevelEstimate level_hat;   // l̂
  RadiusEstimate sigma_hat;  // σ̂
};

struct InnerConstruction {
  double eps_o = 0.0;
  double l_o = 0.0;
  double delta_check = 0.0;
  double l_check = 0.0;
  double rho_s_check = 0.0;
  std::size_t samples_used = 0;
};

struct BackwardConstruction {
  double rho_s = 0.0;
  double eps_o = 0.0;
  double l_rho_s = 0.0;
  double delta = 0.0;
  double l_delta = 0.0;
  double rho_o_s = 0.0;
  /// ρ̌_s of the inner construction for the same ε_o (0 when not computed).
  double rho_s_check = 0.0;
  std::size_t samples_used = 0;
};

OuterConstruction construct_outer(const LyapunovFn& V, const TargetSet& A,
                                  double sigma_tilde, const SamplingPlan& plan);

/// ε_o = 0 yields the degenerate all-zero result.
InnerConstruction construct_inner(const LyapunovFn& V, const TargetSet& A,
                                  double eps_o, const SamplingPlan& plan);

/// The backward chain without the ρ_s > ρ̌_s admissibility check and without
/// the positivity requirement on ρ_os. Useful at the pivot ρ_s = ρ̌_s.
BackwardConstruction backward_chain(const LyapunovFn& V, const TargetSet& A,
                                    double rho_s, double eps_o,
                                    const SamplingPlan& plan);

/// Throws CertificationError if ρ_s <= ρ̌_s(ε_o) or if the resulting ρ_os is
/// not positive; the message says which of the two happened.
BackwardConstruction construct_backward(const LyapunovFn& V, const TargetSet& A,
                                        double rho_s, double eps_o,
                                        const SamplingPlan& plan);

struct ContainmentLink {
  std::string name;
  double worst_violation = 0.0;  // > 0 means the outer set was exceeded
  Point witness;
  std::size_t samples_used = 0;
};

struct ContainmentReport {
  std::vector<ContainmentLink> links;
  double tolerance = 0.0;
  std::size_t violations = 0;  // links whose worst violation exceeds tolerance
  bool pass() const { return violations == 0; }
};

/// Samples the boundary of each set in the chain (on a grid staggered from
/// the one that produced the construction) and measures how far it pokes out
/// of its predecessor. Ball-inside-sublevel links are measured in V units,
/// sublevel-inside-ball links in distance units.
ContainmentReport verify_containment_chain(const BackwardConstruction& result,
                                           const LyapunovFn& V,
                                           const TargetSet& A,
                                           const SamplingPlan& plan,
                                           double tolerance = kConstructionSlack);

}  // namespace spas

#pragma once

// Built-in systems with closed-form certificate quantities:
//
//  * a biased projected iterative method  y⁺ = P_Ξ(y − α s(y))  whose search
//    direction satisfies (y − P_A y)ᵀ s(y) >= τ dist(y)² but need not vanish
//    on A, certified with V = ½ dist² and an explicit admissible step range;
//  * decentralized consensus optimization  x⁺ = A x − α s(x)  with quadratic
//    local objectives, analysed through the agreement/disagreement split
//    x = 1·y + z.

#include <cstddef>
#include <filesystem>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "spas/certify.hpp"
#include "spas/geometry.hpp"
#include "spas/lyapunov.hpp"
#include "spas/system.hpp"

namespace spas::examples {

using DirectionField = std::function<Vector(const Point&)>;

struct BiasedGradientSystem {
  TargetSet target;
  DirectionField direction;
  double tau = 1.0;  // pseudogradient modulus
  ConstraintSet constraint;
};

/// The reference instance: unit ball in R², s = identity, τ = 1, Ξ = R².
BiasedGradientSystem ex1_reference_instance();

/// s* = max over target samples of ‖s(P_A y)‖². Throws CertificationError if
/// s vanishes on the sampled target (s* <= 1e-12).
double ex1_sstar(const BiasedGradientSystem& sys, const SamplingPlan& plan);

/// Empirical local Lipschitz constant of y ↦ s(y) − s(P_A y) relative to
/// dist(y) over B̄_σo(A), inflated by 1.1. May be 0 for constant s.
double ex1_lipschitz(const BiasedGradientSystem& sys, double sigma_o,
                     const SamplingPlan& plan);

struct GainBounds {
  double alpha_bo = 0.0;
  double alpha_rho_o = 0.0;
  double alpha_w = 0.0;  // +inf when L_s = 0
  double alpha_hat = 0.0;
};

/// α_bo = √(b_o/s*), α_ρo = ρ_o²τ/(s* + ρ_o²L_s²), α_W = τ/L_s², α̂ = min.
GainBounds ex1_gain_bounds(double tau, double lipschitz, double s_star,
                           double rho_o, double b_o);

/// y ↦ α(τ − αL_s²)(dist(y)² − αs*/(τ − αL_s²)). Throws PreconditionError
/// when α >= τ/L_s².
std::function<double(const Point&)> ex1_w_function(const TargetSet& target,
                                                   double tau, double lipschitz,
                                                   double s_star, double alpha);

struct BuiltSystem {
  ParamSystem system;
  LyapunovFn lyapunov;
};

/// Map (y, α) ↦ y − α s(y) on Ξ with V = ½ dist². Audits the τ-inequality on
/// samples of B̄_{audit_radius}(A) first and throws CertificationError with
/// the violating point when it fails.
BuiltSystem ex1_build(const BiasedGradientSystem& sys, const SamplingPlan& plan,
                      double audit_radius = 4.0);

/// α ↦ certificate (σ_o, 0, ρ_o, b_o, W_α) with W in its expanded form
/// α(τ − αL²)dist² − α²s*, which is defined for every α and turns
/// nonpositive once α passes τ/L².
SpecFamily ex1_certificate_family(const BiasedGradientSystem& sys, double sigma_o,
                                  double rho_o, double b_o, const SamplingPlan& plan);

// ---------------------------------------------------------------------------
// Consensus optimization.
// ---------------------------------------------------------------------------

/// J(x) = ½ c (x − a)².
struct QuadraticObjective {
  double curvature = 1.0;
  double minimizer = 0.0;

  double gradient(double x) const { return curvature * (x - minimizer); }
};

/// Validates a communication matrix: square, symmetric and row-stochastic to
/// 1e-12, nonnegative entries.
void validate_consensus_matrix(const Eigen::MatrixXd& weights);

/// μ = max λ² over the eigenvalues of the weight matrix restricted to 1⊥.
/// Throws CertificationError when μ >= 1 (no strict disagreement contraction).
double consensus_mu(const Eigen::MatrixXd& weights);

struct ConsensusBuilt {
  ParamSystem system;
  LyapunovFn lyapunov;  // N (y − x*)² + ‖z‖²
  double x_star = 0.0;
  TargetSet target;  // {x* · 1}
};

ConsensusBuilt consensus_build(const Eigen::MatrixXd& weights,
                               const std::vector<QuadraticObjective>& objectives);
ConsensusBuilt consensus_build(const Eigen::MatrixXd& weights,
                               const std::vector<QuadraticObjective>& objectives,
                               const ConstraintSet& constraint);

/// Stacked local gradients (∇J_1(x_1), …, ∇J_N(x_N)).
Vector consensus_gradients(const Point& x,
                           const std::vector<QuadraticObjective>& objectives);

/// x = 1·y + z with y the mean and z ⊥ 1 (z = M x, M = I − 11ᵀ/N).
struct AgreementSplit {
  double y = 0.0;
  Vector z;
};

AgreementSplit consensus_decompose(const Point& x);
Point consensus_recompose(const AgreementSplit& split);

/// y⁺ = y − (α/N) 1ᵀs(z + 1y),  z⁺ = A z − α M s(z + 1y).
AgreementSplit consensus_yz_step(const AgreementSplit& split, double alpha,
                                 const std::vector<QuadraticObjective>& objectives,
                                 const Eigen::MatrixXd& weights);

/// N rows of N comma-separated reals.
Eigen::MatrixXd load_consensus_matrix_csv(const std::filesystem::path& path);

}  // namespace spas::examples

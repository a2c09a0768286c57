#pragma once

// Gain-parametrized constrained dynamics  ξ⁺ = P_Ξ[f(ξ; π)]  and rollouts.

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <vector>

#include <Eigen/Dense>

#include "spas/geometry.hpp"

namespace spas {

/// Algorithm gains (step sizes and the like).
struct GainVector {
  Eigen::VectorXd values;

  GainVector() = default;
  explicit GainVector(Eigen::VectorXd v) : values(std::move(v)) {}
  static GainVector scalar(double alpha) {
    return GainVector(Eigen::VectorXd::Constant(1, alpha));
  }

  Eigen::Index size() const { return values.size(); }
  double operator[](Eigen::Index i) const { return values[i]; }
  bool all_finite() const { return values.allFinite(); }
};

/// Product of half-open intervals (0, upper_i].
struct GainBox {
  Eigen::VectorXd upper;

  static GainBox interval(double upper);
  bool contains(const GainVector& g) const;
};

using DynamicsMap = std::function<Point(const Point&, const GainVector&)>;

/// Immutable after construction. The map must be safe to call concurrently.
class ParamSystem {
 public:
  ParamSystem(Eigen::Index state_dim, Eigen::Index gain_dim, DynamicsMap map,
              ConstraintSet constraint);

  Eigen::Index state_dim() const { return state_dim_; }
  Eigen::Index gain_dim() const { return gain_dim_; }
  const ConstraintSet& constraint() const { return constraint_; }
  const DynamicsMap& map() const { return map_; }

 private:
  Eigen::Index state_dim_;
  Eigen::Index gain_dim_;
  DynamicsMap map_;
  ConstraintSet constraint_;
};

struct Trajectory {
  std::vector<Point> states;  // states[t], t = 0..T
  GainVector gain;
  /// ‖P_Ξ(ξ0) − ξ0‖; nonzero when an infeasible seed was corrected.
  double initial_correction = 0.0;
};

/// One projected step. Throws NonFiniteError (step index 0) if the map
/// returns a non-finite vector.
Point step(const ParamSystem& sys, const Point& xi, const GainVector& gain);

/// Trajectory of length horizon + 1 starting at P_Ξ(ξ0). Throws
/// NonFiniteError carrying the offending time index.
Trajectory rollout(const ParamSystem& sys, const Point& xi0,
                   const GainVector& gain, std::size_t horizon);

}  // namespace spas

#include "spas/system.hpp"

#include <sstream>

#include "spas/error.hpp"

namespace spas {

GainBox GainBox::interval(double upper) {
  if (!(upper > 0)) throw PreconditionError("GainBox: upper bound must be > 0");
  return GainBox{Eigen::VectorXd::Constant(1, upper)};
}

bool GainBox::contains(const GainVector& g) const {
  if (g.size() != upper.size()) return false;
  return (g.values.array() > 0).all() && (g.values.array() <= upper.array()).all();
}

ParamSystem::ParamSystem(Eigen::Index state_dim, Eigen::Index gain_dim,
                         DynamicsMap map, ConstraintSet constraint)
    : state_dim_(state_dim),
      gain_dim_(gain_dim),
      map_(std::move(map)),
      constraint_(std::move(constraint)) {
  if (state_dim_ <= 0 || gain_dim_ <= 0)
    throw PreconditionError("ParamSystem: dimensions must be positive");
  if (!map_) throw PreconditionError("ParamSystem: empty dynamics map");
  if (constraint_.dim() != state_dim_)
    throw DimensionError("ParamSystem: constraint dimension != state dimension");
}

namespace {

Point step_at(const ParamSystem& sys, const Point& xi, const GainVector& gain,
              std::size_t t) {
  if (xi.size() != sys.state_dim())
    throw DimensionError("step: state dimension mismatch");
  if (gain.size() != sys.gain_dim())
    throw DimensionError("step: gain dimension mismatch");
  if (!gain.all_finite()) throw PreconditionError("step: non-finite gain");
  Point next = sys.map()(xi, gain);
  if (next.size() != sys.state_dim())
    throw DimensionError("step: map returned a vector of the wrong size");
  if (!next.allFinite()) {
    std::ostringstream os;
    os << "dynamics produced a non-finite state at t=" << t;
    throw NonFiniteError(os.str(), t, xi);
  }
  return sys.constraint().project(next);
}

}  // namespace

Point step(const ParamSystem& sys, const Point& xi, const GainVector& gain) {
  return step_at(sys, xi, gain, 0);
}

Trajectory rollout(const ParamSystem& sys, const Point& xi0,
                   const GainVector& gain, std::size_t horizon) {
  if (horizon < 1) throw PreconditionError("rollout: horizon must be >= 1");
  if (xi0.size() != sys.state_dim())
    throw DimensionError("rollout: initial state dimension mismatch");
  Trajectory traj;
  traj.gain = gain;
  traj.states.reserve(horizon + 1);
  Point start = sys.constraint().project(xi0);
  traj.initial_correction = (start - xi0).norm();
  traj.states.push_back(std::move(start));
  for (std::size_t t = 0; t < horizon; ++t)
    traj.states.push_back(step_at(sys, traj.states.back(), gain, t + 1));
  return traj;
}

}  // namespace spas

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace spas {

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand dimensions disagree with the owning set/system.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A documented precondition was violated by the caller.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// An iterative projection did not reach its stopping rule.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double residual)
      : Error(what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

/// The dynamics produced a non-finite state.
class NonFiniteError : public Error {
 public:
  NonFiniteError(const std::string& what, std::size_t step,
                 Eigen::VectorXd state)
      : Error(what), step_(step), state_(std::move(state)) {}
  std::size_t step() const { return step_; }
  const Eigen::VectorXd& state() const { return state_; }

 private:
  std::size_t step_;
  Eigen::VectorXd state_;
};

/// A level-set ray search failed (V never exceeded the level along a ray).
class LevelSetError : public Error {
 public:
  LevelSetError(const std::string& what, Eigen::VectorXd direction)
      : Error(what), direction_(std::move(direction)) {}
  const Eigen::VectorXd& direction() const { return direction_; }

 private:
  Eigen::VectorXd direction_;
};

/// A construction or certificate could not be completed (e.g. a nonpositive
/// radius, or no admissible gain).
class CertificationError : public Error {
 public:
  using Error::Error;
};

}  // namespace spas

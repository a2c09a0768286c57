#pragma once

// Constraint sets, target sets, Euclidean projections and seeded samplers.
//
// Every set here is described by value and every operation is a pure function
// of its arguments. Samplers are deterministic functions of the plan's seed.

#include <cstddef>
#include <cstdint>
#include <variant>
#include <vector>

#include <Eigen/Dense>

namespace spas {

using Point = Eigen::VectorXd;
using Vector = Eigen::VectorXd;

/// Tolerances used throughout the geometry layer.
inline constexpr double kMembershipTol = 1e-9;
inline constexpr double kDykstraStepTol = 1e-10;
inline constexpr int kDykstraMaxSweeps = 10000;
inline constexpr double kOrthonormalTol = 1e-10;

// ---------------------------------------------------------------------------
// Constraint sets (closed, convex).
// ---------------------------------------------------------------------------

struct AllSpace {
  Eigen::Index dim;
};

/// {x : lo <= x <= hi} componentwise.
struct Box {
  Vector lo;
  Vector hi;
};

/// Closed Euclidean ball.
struct BallSet {
  Point center;
  double radius;
};

/// {x : normal . x <= offset}.
struct Halfspace {
  Vector normal;
  double offset;
};

/// {offset + basis * t}; basis columns are orthonormal.
struct AffineSubspace {
  Eigen::MatrixXd basis;
  Point offset;
};

using PrimitiveSet =
    std::variant<AllSpace, Box, BallSet, Halfspace, AffineSubspace>;

struct Intersection {
  std::vector<PrimitiveSet> parts;
};

class ConstraintSet {
 public:
  using Variant = std::variant<AllSpace, Box, BallSet, Halfspace,
                               AffineSubspace, Intersection>;

  static ConstraintSet all_space(Eigen::Index n);
  static ConstraintSet box(Vector lo, Vector hi);
  static ConstraintSet ball(Point center, double radius);
  static ConstraintSet halfspace(Vector normal, double offset);
  static ConstraintSet affine(Eigen::MatrixXd basis, Point offset);
  static ConstraintSet intersection(std::vector<PrimitiveSet> parts);

  /// Validates `v` (ordering of box bounds, positive radius, orthonormal
  /// basis, matching dimensions) and wraps it.
  explicit ConstraintSet(Variant v);

  Eigen::Index dim() const { return dim_; }
  const Variant& variant() const { return set_; }
  bool is_all_space() const { return std::holds_alternative<AllSpace>(set_); }

  /// Euclidean projection. Throws DimensionError on size mismatch and
  /// ConvergenceError if Dykstra's scheme stalls on an Intersection.
  Point project(const Point& x) const;

  /// Distance-like membership violation; zero inside the set.
  double residual(const Point& x) const;

  bool contains(const Point& x, double tol = kMembershipTol) const {
    return residual(x) <= tol;
  }

 private:
  Variant set_;
  Eigen::Index dim_ = 0;
};

Point project_constraint(const ConstraintSet& set, const Point& x);

// ---------------------------------------------------------------------------
// Target sets (compact).
// ---------------------------------------------------------------------------

struct Singleton {
  Point point;
};

struct PointCloud {
  std::vector<Point> points;
};

struct BallTarget {
  Point center;
  double radius;
};

class TargetSet {
 public:
  using Variant = std::variant<Singleton, PointCloud, BallTarget>;

  static TargetSet singleton(Point p);
  static TargetSet point_cloud(std::vector<Point> points);
  static TargetSet ball(Point center, double radius);

  explicit TargetSet(Variant v);

  Eigen::Index dim() const { return dim_; }
  const Variant& variant() const { return set_; }

  /// Nearest point; ties in a PointCloud go to the lowest index.
  Point project(const Point& x) const;
  double distance(const Point& x) const;

  /// Number of ray anchors: 1 for Singleton and Ball, m for a PointCloud.
  std::size_t anchor_count() const;

  /// The point reached from anchor `anchor` by travelling `rho` along the unit
  /// vector `dir`, measured so that its distance to the set is `rho` whenever
  /// the anchor is the nearest part of the set (always true for convex
  /// targets). For a Ball the anchor is the boundary point in direction `dir`.
  Point ray_point(std::size_t anchor, const Vector& dir, double rho) const;

  /// Points of the set used for audits: the point, the cloud, or the ball's
  /// center plus boundary and half-radius points along the axes.
  std::vector<Point> representatives() const;

 private:
  Variant set_;
  Eigen::Index dim_ = 0;
};

Point project_target(const TargetSet& target, const Point& x);
double dist_target(const TargetSet& target, const Point& x);

/// Checks that every representative of `target` lies in `xi`; returns the
/// worst projection displacement.
double target_containment_gap(const TargetSet& target, const ConstraintSet& xi);

// ---------------------------------------------------------------------------
// Sampling.
// ---------------------------------------------------------------------------

struct SamplingPlan {
  std::size_t directions_per_shell = 256;
  std::size_t radial_refinements = 12;
  std::uint64_t rng_seed = 0x5eed;
  double boundary_tol = 1e-6;
  /// Worker threads for sample evaluation; 0 means hardware concurrency.
  unsigned threads = 1;

  /// Throws PreconditionError unless directions_per_shell >= 2n,
  /// radial_refinements >= 1 and boundary_tol > 0.
  void validate(Eigen::Index n) const;
};

/// Mixes a seed with call-specific salts into a fresh 64-bit stream seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t salt_a,
                          std::uint64_t salt_b = 0);

/// Unit directions in R^n. In R^1 this is {+1, -1}; in R^2 an evenly spaced
/// angular grid (phase 0 puts the first directions on the axes, a staggered
/// grid is rotated by half a step); in higher dimension the 2n signed axes
/// followed by seeded uniform directions.
std::vector<Vector> unit_directions(Eigen::Index n, std::size_t count,
                                    std::uint64_t seed, bool staggered = false);

/// Points at distance r from the target (to plan.boundary_tol).
std::vector<Point> sample_shell(const TargetSet& target, double r,
                                const SamplingPlan& plan,
                                bool staggered = false);

/// Points of xi whose distance to the target lies in [r_in, r_out] (to
/// plan.boundary_tol). Raw samples fill the annulus in radial layers and are
/// projected onto xi; projections that fall inside B_{r_in} are discarded.
/// May be empty when the annulus misses xi.
std::vector<Point> sample_region(const TargetSet& target, double r_in,
                                 double r_out, const ConstraintSet& xi,
                                 const SamplingPlan& plan);

/// Seeded points of B̄_r(target) ∩ xi. Even-indexed draws sit on the outer
/// shell, odd-indexed draws are uniform in radius^n.
std::vector<Point> sample_ball_seeds(const TargetSet& target, double r,
                                     const ConstraintSet& xi,
                                     const SamplingPlan& plan, std::size_t count,
                                     std::uint64_t salt);

}  // namespace spas

#pragma once

#include <vector>

#include "mfg/vec.hpp"

namespace mfg {

enum class DomainKind { interval, box, disc };

/// Closed compact domain in dimension one or two with a piecewise-smooth
/// boundary. Supported shapes: an interval [a,b], an axis-aligned box, and a
/// disc. All three are convex, so the chord constant of internal paths is 1.
///
/// The oriented boundary distance b(x) is negative inside, zero on the
/// boundary and positive outside; its gradient is the unit outward direction
/// wherever the nearest boundary point is unique. Boundary projection is only
/// trusted inside a tube of radius tube_radius() around the boundary.
class Domain {
 public:
  static Domain interval(double a, double b);
  static Domain box(Vec2 lo, Vec2 hi);
  static Domain disc(Vec2 center, double radius);

  DomainKind kind() const { return kind_; }
  int dim() const { return dim_; }
  double diameter() const;
  Vec2 centroid() const;
  double volume() const;

  /// Chord constant: internal paths between x and y need length at most
  /// chord_constant() * |x - y|. Equals 1 for the convex shapes shipped here.
  double chord_constant() const { return 1.0; }

  /// Radius of the boundary tube on which the oriented distance is smooth.
  double tube_radius() const { return tube_radius_; }

  /// Oriented boundary distance b(x): negative inside, positive outside.
  double signed_distance(Vec2 p) const;

  /// Distance to the closed domain; zero inside, equals b(x) outside.
  double outer_distance(Vec2 p) const;

  /// Gradient of the oriented distance (unit vector toward the exterior).
  /// At points where the nearest boundary point is not unique a fixed
  /// representative subgradient is returned.
  Vec2 distance_gradient(Vec2 p) const;

  bool contains(Vec2 p, double tol = 1e-12) const;

  /// Nearest-point projection onto the closed domain. Throws TubeExceeded
  /// when p lies further outside than tube_radius().
  Vec2 project(Vec2 p) const;

  /// True when p lies within tol of two box faces at once. Such points have
  /// no well-defined outward normal. Always false for intervals and discs.
  bool near_box_corner(Vec2 p, double tol) const;

  // Bounds of the smallest axis-aligned box containing the domain.
  Vec2 bounds_lo() const;
  Vec2 bounds_hi() const;

  Vec2 disc_center() const { return center_; }
  double disc_radius() const { return radius_; }

 private:
  Domain() = default;
  DomainKind kind_ = DomainKind::interval;
  int dim_ = 1;
  Vec2 lo_, hi_;       // interval / box
  Vec2 center_;        // disc
  double radius_ = 0;  // disc
  double tube_radius_ = 0;
};

/// Constant-speed polyline staying inside the domain, as produced by
/// feasible_path. Samples are equally spaced in time.
struct FeasiblePath {
  double duration = 0;           // travel time at unit speed bound
  std::vector<Vec2> samples;     // includes both endpoints
};

/// Path from x to y inside the closed domain with speed at most one and
/// duration at most chord_constant() * |x - y|. For the convex shapes here
/// this is the straight segment. n_samples >= 2 controls the sampling.
FeasiblePath feasible_path(const Domain& dom, Vec2 x, Vec2 y, int n_samples = 33);

/// Discrete check of the chain rule for the distance-to-domain function along
/// a sampled curve: away from boundary crossings, the difference quotient of
/// t -> outer_distance(curve(t)) must match <distance_gradient, velocity>
/// restricted to the closed exterior, up to O(dt).
///
/// Samples must be equally spaced in time with step dt. Sample points whose
/// immediate neighbours straddle the boundary are skipped: there the
/// difference quotient averages two one-sided slopes and carries an O(1)
/// error on an O(dt) time set.
double distance_derivative_defect(const Domain& dom,
                                  const std::vector<Vec2>& samples, double dt);

}  // namespace mfg

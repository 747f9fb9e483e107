#include "mfg/geometry.hpp"

#include <algorithm>
#include <cmath>

#include "mfg/errors.hpp"

namespace mfg {

Domain Domain::interval(double a, double b) {
  Domain d;
  d.kind_ = DomainKind::interval;
  d.dim_ = 1;
  d.lo_ = {a, 0};
  d.hi_ = {b, 0};
  d.tube_radius_ = std::min(0.5 * (b - a), 0.5);
  return d;
}

Domain Domain::box(Vec2 lo, Vec2 hi) {
  Domain d;
  d.kind_ = DomainKind::box;
  d.dim_ = 2;
  d.lo_ = lo;
  d.hi_ = hi;
  d.tube_radius_ = 0.5 * std::min(hi.x - lo.x, hi.y - lo.y) / 2.0;
  return d;
}

Domain Domain::disc(Vec2 center, double radius) {
  Domain d;
  d.kind_ = DomainKind::disc;
  d.dim_ = 2;
  d.center_ = center;
  d.radius_ = radius;
  d.tube_radius_ = radius / 2.0;
  return d;
}

double Domain::diameter() const {
  switch (kind_) {
    case DomainKind::interval: return hi_.x - lo_.x;
    case DomainKind::box: return norm(hi_ - lo_);
    case DomainKind::disc: return 2.0 * radius_;
  }
  return 0;
}

Vec2 Domain::centroid() const {
  if (kind_ == DomainKind::disc) return center_;
  return midpoint(lo_, hi_);
}

double Domain::volume() const {
  switch (kind_) {
    case DomainKind::interval: return hi_.x - lo_.x;
    case DomainKind::box: return (hi_.x - lo_.x) * (hi_.y - lo_.y);
    case DomainKind::disc: return M_PI * radius_ * radius_;
  }
  return 0;
}

double Domain::signed_distance(Vec2 p) const {
  switch (kind_) {
    case DomainKind::interval:
      return std::max(lo_.x - p.x, p.x - hi_.x);
    case DomainKind::box: {
      const double qx = std::max(lo_.x - p.x, p.x - hi_.x);
      const double qy = std::max(lo_.y - p.y, p.y - hi_.y);
      const double ox = std::max(qx, 0.0), oy = std::max(qy, 0.0);
      const double outside = std::sqrt(ox * ox + oy * oy);
      return outside + std::min(std::max(qx, qy), 0.0);
    }
    case DomainKind::disc:
      return norm(p - center_) - radius_;
  }
  return 0;
}

double Domain::outer_distance(Vec2 p) const {
  return std::max(signed_distance(p), 0.0);
}

Vec2 Domain::distance_gradient(Vec2 p) const {
  switch (kind_) {
    case DomainKind::interval:
      return {(p.x - hi_.x >= lo_.x - p.x) ? 1.0 : -1.0, 0.0};
    case DomainKind::box: {
      const double qx = std::max(lo_.x - p.x, p.x - hi_.x);
      const double qy = std::max(lo_.y - p.y, p.y - hi_.y);
      const double sx = (p.x - hi_.x >= lo_.x - p.x) ? 1.0 : -1.0;
      const double sy = (p.y - hi_.y >= lo_.y - p.y) ? 1.0 : -1.0;
      if (qx > 0 && qy > 0) {  // outside past a corner
        Vec2 g{sx * qx, sy * qy};
        return g / norm(g);
      }
      // Nearest face decides; ties pick the x face.
      if (qx >= qy) return {sx, 0.0};
      return {0.0, sy};
    }
    case DomainKind::disc: {
      const Vec2 r = p - center_;
      const double n = norm(r);
      if (n < 1e-15) return {1.0, 0.0};
      return r / n;
    }
  }
  return {1.0, 0.0};
}

bool Domain::contains(Vec2 p, double tol) const {
  return signed_distance(p) <= tol;
}

Vec2 Domain::project(Vec2 p) const {
  const double d = outer_distance(p);
  if (d > tube_radius_) {
    throw TubeExceeded("projection requested at distance " + std::to_string(d) +
                       " outside the boundary tube of radius " +
                       std::to_string(tube_radius_));
  }
  if (d == 0.0) return p;
  return p - d * distance_gradient(p);
}

bool Domain::near_box_corner(Vec2 p, double tol) const {
  if (kind_ != DomainKind::box) return false;
  const bool on_x = std::min(std::abs(p.x - lo_.x), std::abs(p.x - hi_.x)) <= tol;
  const bool on_y = std::min(std::abs(p.y - lo_.y), std::abs(p.y - hi_.y)) <= tol;
  return on_x && on_y;
}

Vec2 Domain::bounds_lo() const {
  if (kind_ == DomainKind::disc) return center_ - Vec2{radius_, radius_};
  return lo_;
}

Vec2 Domain::bounds_hi() const {
  if (kind_ == DomainKind::disc) return center_ + Vec2{radius_, radius_};
  return hi_;
}

FeasiblePath feasible_path(const Domain& dom, Vec2 x, Vec2 y, int n_samples) {
  if (!dom.contains(x) || !dom.contains(y)) {
    throw Error("feasible_path endpoints must lie in the closed domain");
  }
  n_samples = std::max(n_samples, 2);
  FeasiblePath path;
  path.duration = norm(y - x) * dom.chord_constant();
  path.samples.reserve(static_cast<size_t>(n_samples));
  for (int i = 0; i < n_samples; ++i) {
    const double s = static_cast<double>(i) / (n_samples - 1);
    path.samples.push_back(x + s * (y - x));
  }
  return path;
}

double distance_derivative_defect(const Domain& dom,
                                  const std::vector<Vec2>& samples, double dt) {
  if (samples.size() < 3 || dt <= 0) {
    throw Error("distance_derivative_defect needs at least three samples and dt > 0");
  }
  auto outside = [&](Vec2 p) { return dom.signed_distance(p) >= -1e-14; };
  double defect = 0.0;
  for (size_t i = 1; i + 1 < samples.size(); ++i) {
    // Skip samples whose neighbourhood straddles the boundary; the quotient
    // there mixes the interior and exterior one-sided slopes.
    const bool o0 = outside(samples[i - 1]), o1 = outside(samples[i]),
               o2 = outside(samples[i + 1]);
    if (o0 != o1 || o1 != o2) continue;
    const double quotient =
        (dom.outer_distance(samples[i + 1]) - dom.outer_distance(samples[i - 1])) /
        (2.0 * dt);
    const Vec2 velocity = (samples[i + 1] - samples[i - 1]) / (2.0 * dt);
    const double analytic =
        o1 ? dot(dom.distance_gradient(samples[i]), velocity) : 0.0;
    defect = std::max(defect, std::abs(quotient - analytic));
  }
  return defect;
}

}  // namespace mfg

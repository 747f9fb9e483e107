#include "mfg/grid.hpp"

#include <algorithm>
#include <cmath>

#include "mfg/errors.hpp"

namespace mfg {

Grid Grid::make(const Domain& dom, int nodes_per_axis) {
  if (nodes_per_axis < 3) throw Error("grid needs at least three nodes per axis");
  Grid g;
  g.domain_ = dom;
  const Vec2 lo = dom.bounds_lo(), hi = dom.bounds_hi();
  g.origin_ = lo;
  g.nx_ = nodes_per_axis;
  g.h_ = (hi.x - lo.x) / (nodes_per_axis - 1);
  if (dom.dim() == 1) {
    g.ny_ = 1;
  } else {
    // Keep the spacing equal on both axes; the y count follows from it.
    g.ny_ = static_cast<int>(std::lround((hi.y - lo.y) / g.h_)) + 1;
    const double hy = (hi.y - lo.y) / (g.ny_ - 1);
    if (std::abs(hy - g.h_) > 1e-9 * g.h_) {
      throw Error("box aspect ratio incompatible with a square lattice at this resolution");
    }
  }

  g.lattice_.assign(static_cast<size_t>(g.nx_) * g.ny_, -1);
  const double keep_tol = 1e-12;
  for (int iy = 0; iy < g.ny_; ++iy) {
    for (int ix = 0; ix < g.nx_; ++ix) {
      Vec2 p{lo.x + ix * g.h_, dom.dim() == 1 ? 0.0 : lo.y + iy * g.h_};
      if (ix == g.nx_ - 1) p.x = hi.x;
      if (dom.dim() == 2 && iy == g.ny_ - 1) p.y = hi.y;
      if (dom.signed_distance(p) > keep_tol) continue;
      g.lattice_[static_cast<size_t>(iy) * g.nx_ + ix] = static_cast<int>(g.nodes_.size());
      g.nodes_.push_back(p);
      g.ij_.emplace_back(ix, iy);
    }
  }
  if (g.nodes_.empty()) throw Error("grid construction produced no nodes");

  g.boundary_.resize(g.nodes_.size());
  g.quad_.resize(g.nodes_.size());
  const double layer = g.h_ * (1.0 - 1e-9);
  for (size_t id = 0; id < g.nodes_.size(); ++id) {
    const double b = dom.signed_distance(g.nodes_[id]);
    g.boundary_[id] = std::abs(b) < layer;
    double w = g.h_;
    if (dom.dim() == 2) w *= g.h_;
    if (dom.kind() != DomainKind::disc) {
      auto [ix, iy] = g.ij_[id];
      if (ix == 0 || ix == g.nx_ - 1) w *= 0.5;
      if (dom.dim() == 2 && (iy == 0 || iy == g.ny_ - 1)) w *= 0.5;
    }
    g.quad_[id] = w;
  }

  const Vec2 c = dom.centroid();
  double best = 1e300;
  for (size_t id = 0; id < g.nodes_.size(); ++id) {
    const double d = norm2(g.nodes_[id] - c);
    if (d < best - 1e-15) {
      best = d;
      g.ref_node_ = static_cast<int>(id);
    }
  }
  return g;
}

int Grid::nearest_node(Vec2 p) const {
  int ix = static_cast<int>(std::lround((p.x - origin_.x) / h_));
  int iy = domain_.dim() == 1 ? 0 : static_cast<int>(std::lround((p.y - origin_.y) / h_));
  ix = std::clamp(ix, 0, nx_ - 1);
  iy = std::clamp(iy, 0, ny_ - 1);
  const int direct = lattice_node(ix, iy);
  if (direct >= 0) return direct;
  // Disc cut: fall back to a scan.
  int best_id = 0;
  double best = 1e300;
  for (int id = 0; id < size(); ++id) {
    const double d = norm2(nodes_[static_cast<size_t>(id)] - p);
    if (d < best - 1e-15) {
      best = d;
      best_id = id;
    }
  }
  return best_id;
}

bool Grid::same_layout(const Grid& other) const {
  return domain_.kind() == other.domain_.kind() && nx_ == other.nx_ &&
         ny_ == other.ny_ && size() == other.size() &&
         std::abs(h_ - other.h_) <= 1e-12 * h_ &&
         norm(origin_ - other.origin_) <= 1e-12 * (1.0 + norm(origin_));
}

}  // namespace mfg

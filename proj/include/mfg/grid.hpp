#pragma once

#include <utility>
#include <vector>

#include "mfg/geometry.hpp"

namespace mfg {

/// Uniform lattice covering the closed domain. Intervals and boxes keep every
/// lattice point; discs keep the points of the bounding-box lattice that lie
/// inside. Nodes are numbered row-major (x fastest), which for intervals means
/// ascending coordinate.
///
/// A node belongs to the boundary layer when its distance to the boundary is
/// strictly less than the spacing; for intervals and boxes these are exactly
/// the nodes on the boundary, for discs the cut cells next to the circle.
class Grid {
 public:
  static Grid make(const Domain& dom, int nodes_per_axis);

  const Domain& domain() const { return domain_; }
  double spacing() const { return h_; }
  int size() const { return static_cast<int>(nodes_.size()); }
  int nx() const { return nx_; }
  int ny() const { return ny_; }

  Vec2 node(int id) const { return nodes_[static_cast<size_t>(id)]; }
  std::pair<int, int> node_ij(int id) const { return ij_[static_cast<size_t>(id)]; }

  /// Node id at lattice coordinates, or -1 when that lattice point is not part
  /// of the domain (disc cut).
  int lattice_node(int ix, int iy) const {
    if (ix < 0 || ix >= nx_ || iy < 0 || iy >= ny_) return -1;
    return lattice_[static_cast<size_t>(iy) * nx_ + ix];
  }

  bool is_boundary(int id) const { return boundary_[static_cast<size_t>(id)]; }

  /// Node closest to the domain centroid; value fields are pinned here.
  int reference_node() const { return ref_node_; }

  /// Quadrature weight of the node: trapezoidal for intervals and boxes,
  /// plain cell volume for disc cut lattices.
  double quad_weight(int id) const { return quad_[static_cast<size_t>(id)]; }

  int nearest_node(Vec2 p) const;

  /// Coordinate of a half-lattice point. Midpoints of node pairs live on the
  /// half lattice: pair (i, j) maps to half index i + j per axis.
  Vec2 half_point(int hx, int hy) const {
    return {origin_.x + 0.5 * h_ * hx, origin_.y + 0.5 * h_ * hy};
  }
  int half_nx() const { return 2 * nx_ - 1; }
  int half_ny() const { return 2 * ny_ - 1; }

  bool same_layout(const Grid& other) const;

 private:
  Domain domain_ = Domain::interval(0, 1);
  double h_ = 0;
  int nx_ = 0, ny_ = 1;
  Vec2 origin_;
  std::vector<Vec2> nodes_;
  std::vector<std::pair<int, int>> ij_;
  std::vector<int> lattice_;
  std::vector<bool> boundary_;
  std::vector<double> quad_;
  int ref_node_ = 0;
};

}  // namespace mfg

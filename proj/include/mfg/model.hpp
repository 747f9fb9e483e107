#pragma once

#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "mfg/grid.hpp"

namespace mfg {

/// One additive term of a potential W(x). The shipped family is
///   quadratic    coeff * |x - center|^2
///   gaussian     coeff * exp(-|x - center|^2 / width^2)
///   constant     coeff
///   radial_well  coeff * (|x - center| - width)^2
///   flat_well    coeff * max(|x - center| - width, 0)^2
struct PotentialTerm {
  enum class Kind { quadratic, gaussian, constant, radial_well, flat_well };
  Kind kind = Kind::quadratic;
  Vec2 center{0, 0};
  double coeff = 0.5;
  double width = 1.0;
};

using PotentialSpec = std::vector<PotentialTerm>;

double potential_value(const PotentialSpec& spec, Vec2 x);
Vec2 potential_gradient(const PotentialSpec& spec, Vec2 x);

/// Bounds extracted by sampling the Lagrangian over the closed domain times
/// the velocity ball |v| <= 5.
///
/// c1 conditions the velocity Hessian from both sides, c2 bounds the mixed
/// second derivatives against 1 + |v|, c3 bounds the values and first
/// derivatives at v = 0. alpha and beta give the two-sided quadratic
/// envelope |v|^2 / (4 beta) - alpha <= L <= 4 beta |v|^2 + alpha.
struct StructuralConstants {
  double c1 = 1;
  double c2 = 0;
  double c3 = 0;
  double alpha = 0;
  double beta = 0.5;
};

/// Convex, superlinear Lagrangian with its convex dual. Built-in models are
/// separable, L(x, v) = k(|v|) + W(x) with k(s) = s^2/2 + quartic * s^4, and
/// carry the pieces so that solvers can evaluate the potential on tables
/// instead of going through the type-erased closures.
struct SeparableParts {
  double quartic = 0.0;
  std::function<double(Vec2)> potential;
  double kinetic(double speed2) const {
    return 0.5 * speed2 + quartic * speed2 * speed2;
  }
};

struct TonelliModel {
  std::function<double(Vec2, Vec2)> L;
  std::function<Vec2(Vec2, Vec2)> dL_dv;
  std::function<Vec2(Vec2, Vec2)> dL_dx;
  std::function<double(Vec2, Vec2)> H;
  std::function<Vec2(Vec2, Vec2)> dH_dp;
  StructuralConstants constants;
  bool reversible = true;
  std::optional<SeparableParts> separable;
};

/// Builds the separable model k(|v|) + W(x) with closed-form dual when
/// quartic == 0 and a guarded scalar Newton inversion otherwise. Structural
/// constants are sampled over dom x {|v| <= 5}.
TonelliModel make_kinetic_model(const Domain& dom, PotentialSpec potential,
                                double quartic = 0.0);

/// Value and maximising velocity of sup_v { <p, v> - L(x, v) }.
/// Closed form for the quadratic family, Newton on the velocity gradient
/// otherwise. Throws NonConvergence when the iteration stalls.
std::pair<double, Vec2> legendre_hamiltonian(const TonelliModel& model, Vec2 x,
                                             Vec2 p);

/// Probability measure supported on grid nodes. Weights are nonnegative and
/// sum to one within 1e-12; construction validates both.
class GridMeasure {
 public:
  GridMeasure(const Grid* grid, std::vector<double> weights);
  static GridMeasure dirac(const Grid& grid, int node);
  static GridMeasure dirac_at(const Grid& grid, Vec2 p);
  static GridMeasure uniform(const Grid& grid);
  static GridMeasure mix(const GridMeasure& a, const GridMeasure& b, double wb);

  const Grid& grid() const { return *grid_; }
  const std::vector<double>& weights() const { return w_; }
  double weight(int id) const { return w_[static_cast<size_t>(id)]; }
  std::vector<int> support(double tol = 0.0) const;

 private:
  const Grid* grid_;
  std::vector<double> w_;
};

/// Mean field coupling F(x, m). The default is the smoothing Gaussian kernel
///   F(x, m) = weight * integral of exp(-|x - y|^2 / sigma^2) dm(y),
/// which is monotone in the sense that pairing F differences with measure
/// differences is nonnegative. A separable profile f(x) g(m) is available as
/// a deliberately non-monotone control, and `none` drops the coupling.
///
/// With a3_normalize set, solvers subtract per measure the constant
/// min_z { L(z, 0) + F(z, m) } over grid nodes, so the coupled running cost
/// has pointwise minimum zero and the critical value vanishes.
class Coupling {
 public:
  enum class Kind { none, gaussian, separable_profile };

  static Coupling none();
  static Coupling gaussian(double sigma = 0.5, double weight = 1.0,
                           bool a3_normalize = false);
  static Coupling separable_profile(std::function<double(Vec2)> f,
                                    std::function<double(const GridMeasure&)> g);

  Kind kind() const { return kind_; }
  bool active() const { return kind_ != Kind::none; }
  bool a3_normalize() const { return a3_; }
  double sigma() const { return sigma_; }
  double weight() const { return weight_; }

  /// Raw coupling value, without any normalisation shift.
  double eval(Vec2 x, const GridMeasure& m) const;

  /// Normalisation constant min over m's grid nodes of L(z,0) + F(z,m);
  /// zero when a3_normalize is off.
  double a3_constant(const TonelliModel& model, const GridMeasure& m) const;

 private:
  Kind kind_ = Kind::none;
  double sigma_ = 0.5, weight_ = 1.0;
  bool a3_ = false;
  std::function<double(Vec2)> profile_f_;
  std::function<double(const GridMeasure&)> profile_g_;
};

/// Gaussian-kernel evaluation tables bound to one grid. Evaluating F on the
/// half lattice is a pair of small matrix products thanks to the separable
/// kernel; other coupling kinds fall back to direct summation.
class CouplingKernel {
 public:
  CouplingKernel(const Coupling& coupling, const Grid& grid);

  /// F(., m) at every half-lattice point of the bounding box, row-major,
  /// size half_nx * half_ny. Node values sit at even half indices.
  void eval_half_lattice(const GridMeasure& m, std::vector<double>& out) const;

  /// F(., m) at grid nodes only.
  void eval_nodes(const GridMeasure& m, std::vector<double>& out) const;

 private:
  const Coupling* coupling_;
  const Grid* grid_;
  std::vector<double> kx_;  // (2 nx - 1) x nx
  std::vector<double> ky_;  // (2 ny - 1) x ny
};

/// Lagrangian with the coupling at a frozen measure folded in:
/// L_m = L + F(., m) - kappa, H_m = H - F(., m) + kappa, where kappa is the
/// a3 normalisation constant (zero unless enabled). Position-dependent
/// structural constants are resampled; the velocity structure is unchanged.
TonelliModel mean_field_lagrangian(const TonelliModel& model,
                                   const Coupling& coupling,
                                   const GridMeasure& m);

struct MonotonicityResult {
  double pairing;    // integral of the F difference against the measure difference
  double quadratic;  // grid quadrature of the squared F difference
  double ratio;      // pairing / quadratic, +inf when quadratic vanishes
};

/// Evaluates the monotonicity pairing of a coupling on one measure pair.
/// A monotone coupling gives pairing >= 0; the ratio lower-bounds the
/// coercivity constant when the quadratic term is nonzero.
MonotonicityResult check_coupling_monotonicity(const Coupling& coupling,
                                               const GridMeasure& m1,
                                               const GridMeasure& m2);

/// Exact 1-Wasserstein distance between measures on a common grid.
/// Dimension one integrates the absolute difference of the cumulative
/// functions; dimension two solves the transport program on the support
/// atoms. Throws GridMismatch when the grids differ.
double wasserstein1(const GridMeasure& a, const GridMeasure& b);

/// Dimension-one closed form, exact for any atom count.
double wasserstein1_cdf(const GridMeasure& a, const GridMeasure& b);

/// Transport linear program via successive shortest paths; exact in any
/// dimension, dual potentials recovered along the way.
struct TransportResult {
  double primal;            // optimal transport cost
  double dual;              // value of the recovered dual potentials
  double gap;               // primal - dual, a roundoff-level certificate
  double max_lipschitz_excess;  // worst violation of the dual Lipschitz constraint
};
TransportResult wasserstein1_lp(const GridMeasure& a, const GridMeasure& b);

}  // namespace mfg

#include "mfg/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mfg/errors.hpp"

namespace mfg {

double potential_value(const PotentialSpec& spec, Vec2 x) {
  double w = 0.0;
  for (const auto& t : spec) {
    switch (t.kind) {
      case PotentialTerm::Kind::quadratic:
        w += t.coeff * norm2(x - t.center);
        break;
      case PotentialTerm::Kind::gaussian:
        w += t.coeff * std::exp(-norm2(x - t.center) / (t.width * t.width));
        break;
      case PotentialTerm::Kind::constant:
        w += t.coeff;
        break;
      case PotentialTerm::Kind::radial_well: {
        const double r = norm(x - t.center) - t.width;
        w += t.coeff * r * r;
        break;
      }
      case PotentialTerm::Kind::flat_well: {
        const double r = std::max(norm(x - t.center) - t.width, 0.0);
        w += t.coeff * r * r;
        break;
      }
    }
  }
  return w;
}

Vec2 potential_gradient(const PotentialSpec& spec, Vec2 x) {
  Vec2 g{0, 0};
  for (const auto& t : spec) {
    const Vec2 r = x - t.center;
    switch (t.kind) {
      case PotentialTerm::Kind::quadratic:
        g = g + 2.0 * t.coeff * r;
        break;
      case PotentialTerm::Kind::gaussian:
        g = g + (-2.0 * t.coeff / (t.width * t.width)) *
                    std::exp(-norm2(r) / (t.width * t.width)) * r;
        break;
      case PotentialTerm::Kind::constant:
        break;
      case PotentialTerm::Kind::radial_well: {
        const double n = norm(r);
        if (n > 1e-15) g = g + (2.0 * t.coeff * (n - t.width) / n) * r;
        // Kink at the center: keep the symmetric choice zero.
        break;
      }
      case PotentialTerm::Kind::flat_well: {
        const double n = norm(r);
        if (n > t.width && n > 1e-15)
          g = g + (2.0 * t.coeff * (n - t.width) / n) * r;
        break;
      }
    }
  }
  return g;
}

namespace {

// Speed of the maximising velocity for k(s) = s^2/2 + q s^4:
// solve s (1 + 4 q s^2) = |p| by monotone Newton.
double invert_kinetic_slope(double pnorm, double quartic) {
  if (quartic == 0.0) return pnorm;
  double s = pnorm / (1.0 + 4.0 * quartic * pnorm * pnorm / 3.0);
  if (s <= 0) s = pnorm;
  for (int it = 0; it < 80; ++it) {
    const double f = s + 4.0 * quartic * s * s * s - pnorm;
    const double fp = 1.0 + 12.0 * quartic * s * s;
    const double step = f / fp;
    s -= step;
    if (std::abs(step) <= 1e-15 * (1.0 + std::abs(s))) return s;
  }
  throw NonConvergence("velocity inversion stalled at |p| = " + std::to_string(pnorm));
}

std::pair<double, Vec2> separable_legendre(const SeparableParts& parts, Vec2 x,
                                           Vec2 p) {
  const double pn = norm(p);
  double s = 0.0;
  if (pn > 0) s = invert_kinetic_slope(pn, parts.quartic);
  const Vec2 v = (pn > 0) ? (s / pn) * p : Vec2{0, 0};
  const double value = dot(p, v) - parts.kinetic(norm2(v)) - parts.potential(x);
  return {value, v};
}

StructuralConstants sample_constants(const Domain& dom,
                                     const PotentialSpec& potential,
                                     double quartic) {
  StructuralConstants k;
  const double vmax = 5.0;
  // Velocity Hessian eigenvalues are 1 + 4 q s^2 and 1 + 12 q s^2.
  const double lam_hi = 1.0 + 12.0 * quartic * vmax * vmax;
  const double lam_lo = 1.0;
  k.c1 = std::max(lam_hi, 1.0 / lam_lo);
  k.c2 = 0.0;  // separable: no mixed second derivatives

  const Vec2 lo = dom.bounds_lo(), hi = dom.bounds_hi();
  const int ns = 41;
  double wmax = 0.0, c3 = 0.0;
  for (int iy = 0; iy < (dom.dim() == 1 ? 1 : ns); ++iy) {
    for (int ix = 0; ix < ns; ++ix) {
      Vec2 x{lo.x + (hi.x - lo.x) * ix / (ns - 1.0),
             dom.dim() == 1 ? 0.0 : lo.y + (hi.y - lo.y) * iy / (ns - 1.0)};
      if (!dom.contains(x, 1e-9)) continue;
      const double w = potential_value(potential, x);
      wmax = std::max(wmax, std::abs(w));
      c3 = std::max(c3, std::abs(w) + norm(potential_gradient(potential, x)));
    }
  }
  k.c3 = c3;
  k.alpha = wmax;
  // Envelope: L - alpha <= s^2/2 + q s^4 <= (1/2 + q vmax^2) s^2 on |v| <= vmax.
  k.beta = std::max(0.5, (0.5 + quartic * vmax * vmax) / 4.0 + 0.125);
  return k;
}

}  // namespace

TonelliModel make_kinetic_model(const Domain& dom, PotentialSpec potential,
                                double quartic) {
  TonelliModel m;
  SeparableParts parts;
  parts.quartic = quartic;
  parts.potential = [potential](Vec2 x) { return potential_value(potential, x); };
  m.separable = parts;
  m.constants = sample_constants(dom, potential, quartic);
  m.reversible = true;

  m.L = [potential, quartic](Vec2 x, Vec2 v) {
    const double s2 = norm2(v);
    return 0.5 * s2 + quartic * s2 * s2 + potential_value(potential, x);
  };
  m.dL_dv = [quartic](Vec2, Vec2 v) {
    return (1.0 + 4.0 * quartic * norm2(v)) * v;
  };
  m.dL_dx = [potential](Vec2 x, Vec2) { return potential_gradient(potential, x); };
  if (quartic == 0.0) {
    m.H = [potential](Vec2 x, Vec2 p) {
      return 0.5 * norm2(p) - potential_value(potential, x);
    };
    m.dH_dp = [](Vec2, Vec2 p) { return p; };
  } else {
    const SeparableParts sp = parts;
    m.H = [sp](Vec2 x, Vec2 p) { return separable_legendre(sp, x, p).first; };
    m.dH_dp = [sp](Vec2 x, Vec2 p) { return separable_legendre(sp, x, p).second; };
  }
  return m;
}

std::pair<double, Vec2> legendre_hamiltonian(const TonelliModel& model, Vec2 x,
                                             Vec2 p) {
  if (model.separable) return separable_legendre(*model.separable, x, p);
  // General strictly convex case: Newton on dL_dv(x, v) = p with a numerical
  // Jacobian, damped toward the quadratic-model initial guess.
  Vec2 v = p;
  const double eps = 1e-6;
  for (int it = 0; it < 100; ++it) {
    const Vec2 r = model.dL_dv(x, v) - p;
    if (norm(r) <= 1e-12 * (1.0 + norm(p))) {
      return {dot(p, v) - model.L(x, v), v};
    }
    const Vec2 rx = model.dL_dv(x, v + Vec2{eps, 0}) - p;
    const Vec2 ry = model.dL_dv(x, v + Vec2{0, eps}) - p;
    const double a = (rx.x - r.x) / eps, b = (ry.x - r.x) / eps;
    const double c = (rx.y - r.y) / eps, d = (ry.y - r.y) / eps;
    const double det = a * d - b * c;
    if (std::abs(det) < 1e-14) break;
    v = v - Vec2{(d * r.x - b * r.y) / det, (a * r.y - c * r.x) / det};
  }
  throw NonConvergence("Legendre inversion failed for the supplied model");
}

GridMeasure::GridMeasure(const Grid* grid, std::vector<double> weights)
    : grid_(grid), w_(std::move(weights)) {
  if (static_cast<int>(w_.size()) != grid_->size()) {
    throw Error("measure weight vector does not match the grid size");
  }
  double sum = 0.0;
  for (double& w : w_) {
    if (w < 0) {
      if (w < -1e-12) throw Error("measure has a negative weight");
      w = 0.0;
    }
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-12) {
    throw Error("measure weights sum to " + std::to_string(sum) + ", not one");
  }
}

GridMeasure GridMeasure::dirac(const Grid& grid, int node) {
  std::vector<double> w(static_cast<size_t>(grid.size()), 0.0);
  w[static_cast<size_t>(node)] = 1.0;
  return GridMeasure(&grid, std::move(w));
}

GridMeasure GridMeasure::dirac_at(const Grid& grid, Vec2 p) {
  return dirac(grid, grid.nearest_node(p));
}

GridMeasure GridMeasure::uniform(const Grid& grid) {
  std::vector<double> w(static_cast<size_t>(grid.size()),
                        1.0 / grid.size());
  return GridMeasure(&grid, std::move(w));
}

GridMeasure GridMeasure::mix(const GridMeasure& a, const GridMeasure& b,
                             double wb) {
  if (!a.grid().same_layout(b.grid())) {
    throw GridMismatch("cannot mix measures on different grids");
  }
  std::vector<double> w(a.w_.size());
  double sum = 0.0;
  for (size_t i = 0; i < w.size(); ++i) {
    w[i] = (1.0 - wb) * a.w_[i] + wb * b.w_[i];
    sum += w[i];
  }
  for (double& x : w) x /= sum;  // absorb roundoff drift
  return GridMeasure(a.grid_, std::move(w));
}

std::vector<int> GridMeasure::support(double tol) const {
  std::vector<int> s;
  for (int i = 0; i < static_cast<int>(w_.size()); ++i) {
    if (w_[static_cast<size_t>(i)] > tol) s.push_back(i);
  }
  return s;
}

Coupling Coupling::none() { return Coupling{}; }

Coupling Coupling::gaussian(double sigma, double weight, bool a3_normalize) {
  Coupling c;
  c.kind_ = Kind::gaussian;
  c.sigma_ = sigma;
  c.weight_ = weight;
  c.a3_ = a3_normalize;
  return c;
}

Coupling Coupling::separable_profile(std::function<double(Vec2)> f,
                                     std::function<double(const GridMeasure&)> g) {
  Coupling c;
  c.kind_ = Kind::separable_profile;
  c.profile_f_ = std::move(f);
  c.profile_g_ = std::move(g);
  return c;
}

double Coupling::eval(Vec2 x, const GridMeasure& m) const {
  switch (kind_) {
    case Kind::none:
      return 0.0;
    case Kind::gaussian: {
      double s = 0.0;
      const auto& w = m.weights();
      const double inv = 1.0 / (sigma_ * sigma_);
      for (int id = 0; id < m.grid().size(); ++id) {
        if (w[static_cast<size_t>(id)] == 0.0) continue;
        s += w[static_cast<size_t>(id)] *
             std::exp(-norm2(x - m.grid().node(id)) * inv);
      }
      return weight_ * s;
    }
    case Kind::separable_profile:
      return profile_f_(x) * profile_g_(m);
  }
  return 0.0;
}

double Coupling::a3_constant(const TonelliModel& model,
                             const GridMeasure& m) const {
  if (!a3_ || kind_ == Kind::none) return 0.0;
  double best = std::numeric_limits<double>::infinity();
  for (int id = 0; id < m.grid().size(); ++id) {
    const Vec2 z = m.grid().node(id);
    best = std::min(best, model.L(z, Vec2{0, 0}) + eval(z, m));
  }
  return best;
}

CouplingKernel::CouplingKernel(const Coupling& coupling, const Grid& grid)
    : coupling_(&coupling), grid_(&grid) {
  if (coupling.kind() != Coupling::Kind::gaussian) return;
  const int hx = grid.half_nx(), hy = grid.half_ny();
  const double inv = 1.0 / (coupling.sigma() * coupling.sigma());
  kx_.resize(static_cast<size_t>(hx) * grid.nx());
  for (int u = 0; u < hx; ++u) {
    for (int j = 0; j < grid.nx(); ++j) {
      const double dxv = grid.half_point(u, 0).x - grid.half_point(2 * j, 0).x;
      kx_[static_cast<size_t>(u) * grid.nx() + j] =
          coupling.weight() * std::exp(-dxv * dxv * inv);
    }
  }
  if (grid.domain().dim() == 2) {
    ky_.resize(static_cast<size_t>(hy) * grid.ny());
    for (int u = 0; u < hy; ++u) {
      for (int j = 0; j < grid.ny(); ++j) {
        const double dyv = grid.half_point(0, u).y - grid.half_point(0, 2 * j).y;
        ky_[static_cast<size_t>(u) * grid.ny() + j] = std::exp(-dyv * dyv * inv);
      }
    }
  }
}

void CouplingKernel::eval_half_lattice(const GridMeasure& m,
                                       std::vector<double>& out) const {
  const Grid& g = *grid_;
  const int hx = g.half_nx(), hy = g.half_ny();
  out.assign(static_cast<size_t>(hx) * hy, 0.0);
  if (coupling_->kind() == Coupling::Kind::none) return;
  if (coupling_->kind() != Coupling::Kind::gaussian) {
    for (int vy = 0; vy < hy; ++vy)
      for (int vx = 0; vx < hx; ++vx)
        out[static_cast<size_t>(vy) * hx + vx] =
            coupling_->eval(g.half_point(vx, vy), m);
    return;
  }
  if (g.domain().dim() == 1) {
    for (int u = 0; u < hx; ++u) {
      double s = 0.0;
      const double* row = &kx_[static_cast<size_t>(u) * g.nx()];
      for (int id = 0; id < g.size(); ++id) {
        const double w = m.weights()[static_cast<size_t>(id)];
        if (w != 0.0) s += row[g.node_ij(id).first] * w;
      }
      out[static_cast<size_t>(u)] = s;
    }
    return;
  }
  // Separable kernel: accumulate masses on the x-lattice per row, then two
  // dense passes.
  const int nx = g.nx(), ny = g.ny();
  std::vector<double> mass(static_cast<size_t>(nx) * ny, 0.0);
  for (int id = 0; id < g.size(); ++id) {
    const auto [ix, iy] = g.node_ij(id);
    mass[static_cast<size_t>(iy) * nx + ix] = m.weights()[static_cast<size_t>(id)];
  }
  std::vector<double> a(static_cast<size_t>(hx) * ny, 0.0);
  for (int u = 0; u < hx; ++u) {
    const double* row = &kx_[static_cast<size_t>(u) * nx];
    for (int iy = 0; iy < ny; ++iy) {
      double s = 0.0;
      const double* mrow = &mass[static_cast<size_t>(iy) * nx];
      for (int ix = 0; ix < nx; ++ix) s += row[ix] * mrow[ix];
      a[static_cast<size_t>(u) * ny + iy] = s;
    }
  }
  for (int v = 0; v < hy; ++v) {
    const double* col = &ky_[static_cast<size_t>(v) * ny];
    for (int u = 0; u < hx; ++u) {
      double s = 0.0;
      const double* arow = &a[static_cast<size_t>(u) * ny];
      for (int iy = 0; iy < ny; ++iy) s += col[iy] * arow[iy];
      out[static_cast<size_t>(v) * hx + u] = s;
    }
  }
}

void CouplingKernel::eval_nodes(const GridMeasure& m,
                                std::vector<double>& out) const {
  std::vector<double> half;
  eval_half_lattice(m, half);
  const Grid& g = *grid_;
  out.resize(static_cast<size_t>(g.size()));
  for (int id = 0; id < g.size(); ++id) {
    const auto [ix, iy] = g.node_ij(id);
    out[static_cast<size_t>(id)] =
        half[static_cast<size_t>(2 * iy) * g.half_nx() + 2 * ix];
  }
}

TonelliModel mean_field_lagrangian(const TonelliModel& model,
                                   const Coupling& coupling,
                                   const GridMeasure& m) {
  if (!coupling.active()) return model;
  const double kappa = coupling.a3_constant(model, m);
  TonelliModel out = model;
  const Coupling coup = coupling;
  const GridMeasure frozen = m;
  auto F = [coup, frozen, kappa](Vec2 x) { return coup.eval(x, frozen) - kappa; };

  const TonelliModel base = model;
  out.L = [base, F](Vec2 x, Vec2 v) { return base.L(x, v) + F(x); };
  out.H = [base, F](Vec2 x, Vec2 p) { return base.H(x, p) - F(x); };
  out.dL_dv = base.dL_dv;
  out.dH_dp = base.dH_dp;
  out.dL_dx = [base, coup, frozen](Vec2 x, Vec2 v) {
    // Gradient of the Gaussian kernel part; other kinds fall back to a
    // symmetric difference.
    Vec2 g = base.dL_dx(x, v);
    if (coup.kind() == Coupling::Kind::gaussian) {
      const double inv = 1.0 / (coup.sigma() * coup.sigma());
      const auto& w = frozen.weights();
      for (int id = 0; id < frozen.grid().size(); ++id) {
        if (w[static_cast<size_t>(id)] == 0.0) continue;
        const Vec2 r = x - frozen.grid().node(id);
        g = g + (-2.0 * coup.weight() * inv * w[static_cast<size_t>(id)] *
                 std::exp(-norm2(r) * inv)) * r;
      }
    } else {
      const double eps = 1e-6;
      g.x += (coup.eval(x + Vec2{eps, 0}, frozen) -
              coup.eval(x - Vec2{eps, 0}, frozen)) / (2 * eps);
      g.y += (coup.eval(x + Vec2{0, eps}, frozen) -
              coup.eval(x - Vec2{0, eps}, frozen)) / (2 * eps);
    }
    return g;
  };
  if (model.separable) {
    SeparableParts parts = *model.separable;
    auto base_pot = parts.potential;
    parts.potential = [base_pot, F](Vec2 x) { return base_pot(x) + F(x); };
    out.separable = parts;
  }
  // Shift the position-dependent bounds by the coupling amplitude.
  double fmax = 0.0;
  for (int id = 0; id < m.grid().size(); ++id) {
    fmax = std::max(fmax, std::abs(F(m.grid().node(id))));
  }
  out.constants.alpha = model.constants.alpha + fmax;
  out.constants.c3 = model.constants.c3 + fmax;
  return out;
}

MonotonicityResult check_coupling_monotonicity(const Coupling& coupling,
                                               const GridMeasure& m1,
                                               const GridMeasure& m2) {
  if (!m1.grid().same_layout(m2.grid())) {
    throw GridMismatch("monotonicity check needs measures on one grid");
  }
  const Grid& g = m1.grid();
  MonotonicityResult r{0.0, 0.0, 0.0};
  for (int id = 0; id < g.size(); ++id) {
    const Vec2 x = g.node(id);
    const double df = coupling.eval(x, m1) - coupling.eval(x, m2);
    const double dm = m1.weight(id) - m2.weight(id);
    r.pairing += df * dm;
    r.quadratic += df * df * g.quad_weight(id);
  }
  r.ratio = (r.quadratic > 1e-15)
                ? r.pairing / r.quadratic
                : std::numeric_limits<double>::infinity();
  return r;
}

}  // namespace mfg

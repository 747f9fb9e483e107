#include "mfg/hjsolver.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <limits>
#include <thread>

#include "mfg/errors.hpp"

namespace mfg {

double ValueField::max_abs() const {
  double m = 0;
  for (double v : values) m = std::max(m, std::abs(v));
  return m;
}

double ValueField::oscillation() const {
  auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  return values.empty() ? 0.0 : *hi - *lo;
}

namespace {

struct Offset {
  int djx, djy;
  double dist2;
  double kin;  // dt * kinetic((|dj| h / dt)^2), filled when separable
};

// Admissible jumps sorted so that a strict first-wins minimum realises the
// tie-break: smallest jump length, then smallest partner node id.
std::vector<Offset> build_offsets(const Grid& grid, double dt, double speed_cap,
                                  const TonelliModel& model) {
  const double radius = speed_cap * dt;
  const double h = grid.spacing();
  const int rc = static_cast<int>(std::floor(radius / h + 1e-9));
  if (rc < 1) {
    throw IncompatibleResolution(
        "reachable radius " + std::to_string(radius) +
        " is below the grid spacing " + std::to_string(h));
  }
  const int rcy = grid.domain().dim() == 2 ? rc : 0;
  std::vector<Offset> offs;
  for (int djy = -rcy; djy <= rcy; ++djy) {
    for (int djx = -rc; djx <= rc; ++djx) {
      const double d2 = static_cast<double>(djx) * djx + static_cast<double>(djy) * djy;
      if (d2 * h * h > radius * radius + 1e-12) continue;
      Offset o{djx, djy, d2, 0.0};
      if (model.separable) {
        const double s2 = d2 * h * h / (dt * dt);
        o.kin = dt * model.separable->kinetic(s2);
      }
      offs.push_back(o);
    }
  }
  std::sort(offs.begin(), offs.end(), [](const Offset& a, const Offset& b) {
    if (a.dist2 != b.dist2) return a.dist2 < b.dist2;
    if (a.djy != b.djy) return a.djy < b.djy;
    return a.djx < b.djx;
  });
  return offs;
}

std::vector<double> potential_on_half_lattice(const Grid& grid,
                                              const TonelliModel& model) {
  const int hx = grid.half_nx(), hy = grid.half_ny();
  std::vector<double> pot(static_cast<size_t>(hx) * hy, 0.0);
  for (int v = 0; v < hy; ++v) {
    for (int u = 0; u < hx; ++u) {
      pot[static_cast<size_t>(v) * hx + u] =
          model.separable->potential(grid.half_point(u, v));
    }
  }
  return pot;
}

void parallel_over_nodes(int n, int threads, const std::function<void(int, int)>& fn) {
  if (threads <= 1) {
    fn(0, n);
    return;
  }
  std::vector<std::thread> pool;
  const int chunk = (n + threads - 1) / threads;
  for (int t = 0; t < threads; ++t) {
    const int lo = t * chunk, hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back(fn, lo, hi);
  }
  for (auto& th : pool) th.join();
}

// One step of the evolution operator. `extra_half` (may be null) is added to
// the separable potential on the half lattice; the generic path evaluates the
// Lagrangian closure per candidate pair.
void dp_step(const TonelliModel& model, const Grid& grid,
             const std::vector<double>& u, double dt,
             const std::vector<Offset>& offsets,
             const std::vector<double>* pot_half,
             const std::vector<double>* extra_half, std::vector<double>& out,
             StepRecord* rec, bool record_ties, int threads) {
  const int n = grid.size();
  const int hx = grid.half_nx();
  out.resize(static_cast<size_t>(n));
  if (rec) {
    rec->best.assign(static_cast<size_t>(n), -1);
    if (record_ties) {
      rec->tie_offsets.assign(static_cast<size_t>(n) + 1, 0);
      rec->tie_nodes.clear();
    } else {
      rec->tie_offsets.clear();
      rec->tie_nodes.clear();
    }
  }

  std::vector<std::vector<int>> tie_buf(record_ties ? static_cast<size_t>(n) : 0);

  auto body = [&](int lo, int hi) {
    std::vector<std::pair<int, double>> local;
    for (int id = lo; id < hi; ++id) {
      const auto [ix, iy] = grid.node_ij(id);
      double best = std::numeric_limits<double>::infinity();
      int best_node = -1;
      local.clear();
      for (const Offset& o : offsets) {
        const int y = grid.lattice_node(ix + o.djx, iy + o.djy);
        if (y < 0) continue;
        double cost;
        if (pot_half) {
          const int uhx = 2 * ix + o.djx, uhy = 2 * iy + o.djy;
          const size_t uh = static_cast<size_t>(uhy) * hx + uhx;
          double pot = (*pot_half)[uh];
          if (extra_half) pot += (*extra_half)[uh];
          cost = u[static_cast<size_t>(y)] + o.kin + dt * pot;
        } else {
          const Vec2 x = grid.node(id), yy = grid.node(y);
          cost = u[static_cast<size_t>(y)] +
                 dt * model.L(midpoint(x, yy), (x - yy) / dt);
        }
        if (cost < best) {
          best = cost;
          best_node = y;
        }
        if (record_ties) local.emplace_back(y, cost);
      }
      out[static_cast<size_t>(id)] = best;
      if (rec) rec->best[static_cast<size_t>(id)] = best_node;
      if (record_ties) {
        const double tol = 1e-12 * (1.0 + std::abs(best));
        auto& ties = tie_buf[static_cast<size_t>(id)];
        for (const auto& [y, cost] : local) {
          if (cost <= best + tol) ties.push_back(y);
        }
      }
    }
  };
  parallel_over_nodes(n, threads, body);

  if (record_ties && rec) {
    for (int id = 0; id < n; ++id) {
      rec->tie_offsets[static_cast<size_t>(id) + 1] =
          rec->tie_offsets[static_cast<size_t>(id)] +
          static_cast<int>(tie_buf[static_cast<size_t>(id)].size());
    }
    rec->tie_nodes.reserve(static_cast<size_t>(rec->tie_offsets.back()));
    for (int id = 0; id < n; ++id) {
      for (int y : tie_buf[static_cast<size_t>(id)]) rec->tie_nodes.push_back(y);
    }
  }
}

}  // namespace

LaxOleinikResult lax_oleinik_step(const TonelliModel& model, const Grid& grid,
                                  const ValueField& u, double dt,
                                  double speed_cap, bool record_ties,
                                  int threads) {
  if (dt <= 0) throw Error("time step must be positive");
  const auto offsets = build_offsets(grid, dt, speed_cap, model);
  std::vector<double> pot;
  const std::vector<double>* pot_ptr = nullptr;
  if (model.separable) {
    pot = potential_on_half_lattice(grid, model);
    pot_ptr = &pot;
  }
  LaxOleinikResult res;
  res.updated.grid = &grid;
  dp_step(model, grid, u.values, dt, offsets, pot_ptr, nullptr,
          res.updated.values, &res.record, record_ties, threads);
  return res;
}

ErgodicSolution ergodic_solve(const TonelliModel& model, const Grid& grid,
                              double dt, const ErgodicOptions& opts) {
  if (dt <= 0) throw Error("time step must be positive");
  const auto offsets = build_offsets(grid, dt, opts.speed_cap, model);
  std::vector<double> pot;
  const std::vector<double>* pot_ptr = nullptr;
  if (model.separable) {
    pot = potential_on_half_lattice(grid, model);
    pot_ptr = &pot;
  }
  const int n = grid.size();
  const int ref = opts.ref_node >= 0 ? opts.ref_node : grid.reference_node();

  std::vector<double> u(static_cast<size_t>(n), 0.0);
  int start_iter = 0;
  if (opts.warm_start) {
    u = opts.warm_start->values;
    const double shift = u[static_cast<size_t>(ref)];
    for (double& v : u) v -= shift;
    start_iter = opts.warm_iteration;
  }

  // Drift history for the averaged constant estimate.
  constexpr int kDriftWindow = 50;
  std::vector<double> drifts;
  drifts.reserve(kDriftWindow);
  int drift_pos = 0;

  std::vector<double> w;
  bool converged = false;
  double last_ck = 0.0;
  int iter = start_iter;
  for (; iter < opts.max_iter; ++iter) {
    dp_step(model, grid, u, dt, offsets, pot_ptr, nullptr, w, nullptr, false,
            opts.threads);
    const double drift = w[static_cast<size_t>(ref)];
    const double ck = -drift / dt;
    last_ck = ck;
    if (static_cast<int>(drifts.size()) < kDriftWindow) {
      drifts.push_back(ck);
    } else {
      drifts[static_cast<size_t>(drift_pos)] = ck;
      drift_pos = (drift_pos + 1) % kDriftWindow;
    }
    double residual = 0.0;
    for (int id = 0; id < n; ++id) {
      const double nv = w[static_cast<size_t>(id)] - drift;
      residual = std::max(residual, std::abs(nv - u[static_cast<size_t>(id)]));
      u[static_cast<size_t>(id)] = nv;
    }
    if (residual <= opts.tol * dt) {
      converged = true;
      ++iter;
      break;
    }
  }

  // Once the normalized iteration has settled, the drift of the final sweep
  // is the gain itself. The windowed average only matters when the sweep
  // budget runs out first; a fast-converging coarse solve would otherwise
  // fold its early transients into the estimate.
  double c = last_ck;
  if (!converged) {
    c = 0.0;
    for (double d : drifts) c += d;
    if (!drifts.empty()) c /= static_cast<double>(drifts.size());
  }

  ErgodicSolution sol;
  sol.u.grid = &grid;
  sol.u.values = u;
  sol.c = c;
  sol.dt = dt;
  sol.iterations = iter;
  sol.converged = converged;

  // Verification sweep: residual against the averaged constant, and the
  // argmin partners of the converged profile for curve extraction.
  dp_step(model, grid, u, dt, offsets, pot_ptr, nullptr, w, &sol.record, false,
          opts.threads);
  double residual = 0.0;
  for (int id = 0; id < n; ++id) {
    residual = std::max(residual, std::abs(w[static_cast<size_t>(id)] + c * dt -
                                           u[static_cast<size_t>(id)]));
  }
  sol.residual = residual;

  if (!converged && opts.throw_on_failure) {
    throw NoConvergence("value iteration reached " + std::to_string(iter) +
                        " sweeps with residual " + std::to_string(residual));
  }
  return sol;
}

FiniteHorizonResult finite_horizon_solve(
    const TonelliModel& model,
    const std::vector<std::vector<double>>& coupling_half, bool a3_normalize,
    const ValueField& u_f, double T, double dt, double speed_cap,
    bool record_ties, int threads) {
  const Grid& grid = *u_f.grid;
  const int K = static_cast<int>(std::lround(T / dt));
  if (std::abs(K * dt - T) > 1e-9 * std::max(1.0, T)) {
    throw IncompatibleResolution("horizon is not a whole number of steps");
  }
  const bool coupled = !coupling_half.empty();
  if (coupled && static_cast<int>(coupling_half.size()) != K) {
    throw Error("coupling tables must have one entry per step");
  }
  const auto offsets = build_offsets(grid, dt, speed_cap, model);
  if (!model.separable) {
    throw Error("finite-horizon solve requires a separable model");
  }
  const auto pot = potential_on_half_lattice(grid, model);

  FiniteHorizonResult res;
  res.slices.resize(static_cast<size_t>(K) + 1);
  res.records.resize(static_cast<size_t>(K));
  res.kappas.assign(static_cast<size_t>(K), 0.0);
  res.slices[static_cast<size_t>(K)] = u_f;

  std::vector<double> shifted;
  for (int k = K - 1; k >= 0; --k) {
    const std::vector<double>* extra = nullptr;
    if (coupled) {
      const auto& fhalf = coupling_half[static_cast<size_t>(k)];
      if (a3_normalize) {
        // kappa = min over nodes of L(z, 0) + F(z, m); node entries sit at
        // even half indices.
        double kap = std::numeric_limits<double>::infinity();
        for (int id = 0; id < grid.size(); ++id) {
          const auto [ix, iy] = grid.node_ij(id);
          const size_t uh = static_cast<size_t>(2 * iy) * grid.half_nx() + 2 * ix;
          kap = std::min(kap, pot[uh] + fhalf[uh]);
        }
        res.kappas[static_cast<size_t>(k)] = kap;
        shifted.resize(fhalf.size());
        for (size_t i = 0; i < fhalf.size(); ++i) shifted[i] = fhalf[i] - kap;
        extra = &shifted;
      } else {
        extra = &fhalf;
      }
    }
    auto& slice = res.slices[static_cast<size_t>(k)];
    slice.grid = &grid;
    dp_step(model, grid, res.slices[static_cast<size_t>(k) + 1].values, dt,
            offsets, &pot, extra, slice.values,
            &res.records[static_cast<size_t>(k)], record_ties, threads);
  }
  return res;
}

FiniteHorizonResult finite_horizon_solve(const TonelliModel& model,
                                         const Coupling& coupling,
                                         const std::vector<GridMeasure>& m_path,
                                         const ValueField& u_f, double T,
                                         double dt, double speed_cap,
                                         bool record_ties, int threads) {
  const Grid& grid = *u_f.grid;
  const int K = static_cast<int>(std::lround(T / dt));
  if (std::abs(K * dt - T) > 1e-9 * std::max(1.0, T)) {
    throw IncompatibleResolution("horizon is not a whole number of steps");
  }
  std::vector<std::vector<double>> tables;
  if (coupling.active()) {
    if (static_cast<int>(m_path.size()) != K + 1) {
      throw Error("measure path must have one entry per time node");
    }
    const CouplingKernel kernel(coupling, grid);
    tables.resize(static_cast<size_t>(K));
    for (int k = 0; k < K; ++k) {
      kernel.eval_half_lattice(m_path[static_cast<size_t>(k)],
                               tables[static_cast<size_t>(k)]);
    }
  }
  return finite_horizon_solve(model, tables, coupling.a3_normalize(), u_f, T,
                              dt, speed_cap, record_ties, threads);
}

CalibratedCurve calibrated_curve(const TonelliModel& model, const Grid& grid,
                                 const ErgodicSolution& sol, int start_node,
                                 double horizon) {
  const int K = static_cast<int>(std::lround(horizon / sol.dt));
  if (K < 1) throw Error("horizon shorter than one step");
  CalibratedCurve curve;
  curve.dt = sol.dt;
  curve.nodes.assign(static_cast<size_t>(K) + 1, -1);
  curve.nodes[static_cast<size_t>(K)] = start_node;
  for (int k = K; k > 0; --k) {
    const int cur = curve.nodes[static_cast<size_t>(k)];
    curve.nodes[static_cast<size_t>(k) - 1] = sol.record.best[static_cast<size_t>(cur)];
  }
  // Balance check along every subinterval via the running discrepancy.
  double action = 0.0;
  double dmin = std::numeric_limits<double>::infinity(), dmax = -dmin;
  for (int k = 0; k <= K; ++k) {
    const int id = curve.nodes[static_cast<size_t>(k)];
    const double disc = sol.u[id] - action - sol.c * (k * sol.dt);
    dmin = std::min(dmin, disc);
    dmax = std::max(dmax, disc);
    if (k < K) {
      const Vec2 a = grid.node(id);
      const Vec2 b = grid.node(curve.nodes[static_cast<size_t>(k) + 1]);
      action += sol.dt * model.L(midpoint(a, b), (b - a) / sol.dt);
    }
  }
  curve.defect = dmax - dmin;
  return curve;
}

GradientVelocity gradient_and_velocity(const TonelliModel& model,
                                       const Grid& grid, const ValueField& u,
                                       int node) {
  if (grid.is_boundary(node)) {
    throw BoundaryNode("central differences undefined on the boundary layer");
  }
  const auto [ix, iy] = grid.node_ij(node);
  const double h = grid.spacing();
  Vec2 du{0, 0};
  const int xp = grid.lattice_node(ix + 1, iy), xm = grid.lattice_node(ix - 1, iy);
  if (xp < 0 || xm < 0) throw BoundaryNode("missing lattice neighbour");
  du.x = (u[xp] - u[xm]) / (2 * h);
  if (grid.domain().dim() == 2) {
    const int yp = grid.lattice_node(ix, iy + 1), ym = grid.lattice_node(ix, iy - 1);
    if (yp < 0 || ym < 0) throw BoundaryNode("missing lattice neighbour");
    du.y = (u[yp] - u[ym]) / (2 * h);
  }
  return {du, model.dH_dp(grid.node(node), du)};
}

namespace {

// Interpolated field value at an off-node point: bilinear over the lattice
// cell, renormalised over the corners present (disc cuts drop some).
double interpolate(const Grid& grid, const ValueField& u, Vec2 p) {
  const double h = grid.spacing();
  const Vec2 lo = grid.domain().bounds_lo();
  double fx = (p.x - lo.x) / h, fy = grid.domain().dim() == 2 ? (p.y - lo.y) / h : 0.0;
  int ix = static_cast<int>(std::floor(fx)), iy = static_cast<int>(std::floor(fy));
  ix = std::clamp(ix, 0, grid.nx() - (grid.nx() > 1 ? 2 : 1));
  iy = std::clamp(iy, 0, std::max(grid.ny() - 2, 0));
  const double ax = fx - ix, ay = fy - iy;
  double total = 0.0, weight = 0.0;
  for (int cy = 0; cy <= (grid.domain().dim() == 2 ? 1 : 0); ++cy) {
    for (int cx = 0; cx <= 1; ++cx) {
      const int id = grid.lattice_node(ix + cx, iy + cy);
      if (id < 0) continue;
      const double wgt = (cx ? ax : 1 - ax) * (cy ? ay : (grid.domain().dim() == 2 ? 1 - ay : 1));
      total += wgt * u[id];
      weight += wgt;
    }
  }
  if (weight <= 1e-14) throw Error("interpolation cell has no grid nodes");
  return total / weight;
}

}  // namespace

BoundaryGradient boundary_gradient(const TonelliModel& model, const Grid& grid,
                                   const ValueField& u, int node, double c) {
  if (!grid.is_boundary(node)) {
    throw BoundaryNode("boundary data requested at an interior node");
  }
  const Domain& dom = grid.domain();
  const double h = grid.spacing();
  const Vec2 x = grid.node(node);
  BoundaryGradient out;

  if (dom.kind() == DomainKind::interval) {
    const auto [ix, iy] = grid.node_ij(node);
    out.normal = {ix == 0 ? -1.0 : 1.0, 0.0};
    const int in_id = grid.lattice_node(ix == 0 ? 1 : grid.nx() - 2, 0);
    out.lambda_plus = (u[node] - u[in_id]) / h;
    out.tangential = {0, 0};
  } else if (dom.kind() == DomainKind::box) {
    if (dom.near_box_corner(x, 0.5 * h)) {
      throw CornerNode("outward normal undefined at a box corner");
    }
    const auto [ix, iy] = grid.node_ij(node);
    int sx = 0, sy = 0;
    if (ix == 0) sx = -1;
    if (ix == grid.nx() - 1) sx = 1;
    if (iy == 0) sy = -1;
    if (iy == grid.ny() - 1) sy = 1;
    out.normal = {static_cast<double>(sx), static_cast<double>(sy)};
    const int in_id = grid.lattice_node(ix - sx, iy - sy);
    out.lambda_plus = (u[node] - u[in_id]) / h;
    // Central difference along the face.
    const int tp = grid.lattice_node(ix + (sx == 0 ? 1 : 0), iy + (sy == 0 ? 1 : 0));
    const int tm = grid.lattice_node(ix - (sx == 0 ? 1 : 0), iy - (sy == 0 ? 1 : 0));
    if (tp < 0 || tm < 0) throw CornerNode("face stencil leaves the lattice");
    const double dtan = (u[tp] - u[tm]) / (2 * h);
    out.tangential = sx == 0 ? Vec2{dtan, 0} : Vec2{0, dtan};
  } else {
    // Disc: one-sided difference along the inward normal, interpolated
    // central difference along the tangent, both projected into the domain.
    const Vec2 nu = dom.distance_gradient(x);
    const Vec2 tau{-nu.y, nu.x};
    out.normal = nu;
    const double u_in = interpolate(grid, u, x - h * nu);
    out.lambda_plus = (u[node] - u_in) / h;
    Vec2 pp = x + h * tau, pm = x - h * tau;
    if (!dom.contains(pp)) pp = dom.project(pp);
    if (!dom.contains(pm)) pm = dom.project(pm);
    const double dtan = (interpolate(grid, u, pp) - interpolate(grid, u, pm)) / (2 * h);
    out.tangential = dtan * tau;
  }
  out.p = out.tangential + out.lambda_plus * out.normal;
  out.defect = std::abs(model.H(x, out.p) - c);
  return out;
}

std::vector<SemiconcavityRatio> semiconcavity_check(
    const Grid& grid, const ValueField& u,
    const std::vector<int>& step_multiples) {
  const double h = grid.spacing();
  std::vector<SemiconcavityRatio> out;
  for (int k : step_multiples) {
    double worst = -std::numeric_limits<double>::infinity();
    const double step = k * h;
    const double scale = std::pow(step, 1.5);
    for (int id = 0; id < grid.size(); ++id) {
      const auto [ix, iy] = grid.node_ij(id);
      for (int axis = 0; axis < grid.domain().dim(); ++axis) {
        const int djx = axis == 0 ? k : 0, djy = axis == 0 ? 0 : k;
        const int p = grid.lattice_node(ix + djx, iy + djy);
        const int m = grid.lattice_node(ix - djx, iy - djy);
        if (p < 0 || m < 0) continue;
        worst = std::max(worst, (u[p] + u[m] - 2 * u[id]) / scale);
      }
    }
    out.push_back({step, worst});
  }
  return out;
}

namespace {
constexpr std::uint64_t kCheckpointMagic = 0x314b434647464d31ull;  // "1MFGFGCK1"-ish tag
}

void save_checkpoint(const std::string& path, const Grid& grid,
                     const ValueField& u, int iteration, double c, double dt) {
  static_assert(std::endian::native == std::endian::little,
                "checkpoint layout assumes a little-endian host");
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error("cannot open checkpoint file for writing: " + path);
  auto put_u64 = [&](std::uint64_t v) {
    f.write(reinterpret_cast<const char*>(&v), 8);
  };
  auto put_f64 = [&](double v) {
    f.write(reinterpret_cast<const char*>(&v), 8);
  };
  put_u64(kCheckpointMagic);
  put_u64(static_cast<std::uint64_t>(grid.domain().dim()));
  put_u64(static_cast<std::uint64_t>(grid.nx()));
  put_u64(static_cast<std::uint64_t>(grid.ny()));
  put_u64(static_cast<std::uint64_t>(grid.size()));
  put_u64(static_cast<std::uint64_t>(iteration));
  put_f64(c);
  put_f64(dt);
  f.write(reinterpret_cast<const char*>(u.values.data()),
          static_cast<std::streamsize>(u.values.size() * 8));
  if (!f) throw Error("checkpoint write failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error("cannot open checkpoint file: " + path);
  auto get_u64 = [&]() {
    std::uint64_t v = 0;
    f.read(reinterpret_cast<char*>(&v), 8);
    return v;
  };
  auto get_f64 = [&]() {
    double v = 0;
    f.read(reinterpret_cast<char*>(&v), 8);
    return v;
  };
  if (get_u64() != kCheckpointMagic) throw Error("not a checkpoint file: " + path);
  Checkpoint ck;
  get_u64();  // dimension, implied by the shape
  ck.nx = static_cast<int>(get_u64());
  ck.ny = static_cast<int>(get_u64());
  ck.node_count = static_cast<int>(get_u64());
  ck.iteration = static_cast<int>(get_u64());
  ck.c = get_f64();
  ck.dt = get_f64();
  ck.values.resize(static_cast<size_t>(ck.node_count));
  f.read(reinterpret_cast<char*>(ck.values.data()),
         static_cast<std::streamsize>(ck.values.size() * 8));
  if (!f) throw Error("checkpoint truncated: " + path);
  return ck;
}

double max_adjacent_slope(const Grid& grid, const ValueField& u) {
  double worst = 0.0;
  const double h = grid.spacing();
  for (int id = 0; id < grid.size(); ++id) {
    const auto [ix, iy] = grid.node_ij(id);
    const int xp = grid.lattice_node(ix + 1, iy);
    if (xp >= 0) worst = std::max(worst, std::abs(u[xp] - u[id]) / h);
    if (grid.domain().dim() == 2) {
      const int yp = grid.lattice_node(ix, iy + 1);
      if (yp >= 0) worst = std::max(worst, std::abs(u[yp] - u[id]) / h);
    }
  }
  return worst;
}

}  // namespace mfg

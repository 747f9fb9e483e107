#include "mfg/finite_mfg.hpp"

#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "mfg/errors.hpp"

namespace mfg {

namespace {

int step_count(double T, double dt) {
  const int K = static_cast<int>(std::lround(T / dt));
  if (K < 1 || std::abs(K * dt - T) > 1e-9 * std::max(1.0, T)) {
    throw IncompatibleResolution("horizon is not a whole number of steps");
  }
  return K;
}

std::vector<double> potential_table(const Grid& grid, const TonelliModel& model) {
  if (!model.separable) {
    throw Error("population flows require a separable model");
  }
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

// dt * kinetic cost per lattice jump, indexed by (djy + rc) * (2 rc + 1)
// + djx + rc. Matches the per-offset table used by the backward solver, so
// forward cost accounting reproduces the solver's numbers.
struct JumpCosts {
  int rc = 0;
  std::vector<double> kin;

  double operator()(int djx, int djy) const {
    return kin[static_cast<size_t>(djy + rc) * (2 * rc + 1) + djx + rc];
  }
};

JumpCosts jump_costs(const Grid& grid, const TonelliModel& model, double dt,
                     double speed_cap) {
  JumpCosts jc;
  const double h = grid.spacing();
  jc.rc = static_cast<int>(std::floor(speed_cap * dt / h + 1e-9));
  if (jc.rc < 1) {
    throw IncompatibleResolution("reachable radius is below the grid spacing");
  }
  const int w = 2 * jc.rc + 1;
  jc.kin.assign(static_cast<size_t>(w) * w,
                std::numeric_limits<double>::quiet_NaN());
  for (int djy = -jc.rc; djy <= jc.rc; ++djy) {
    for (int djx = -jc.rc; djx <= jc.rc; ++djx) {
      const double d2 = static_cast<double>(djx) * djx +
                        static_cast<double>(djy) * djy;
      const double s2 = d2 * h * h / (dt * dt);
      jc.kin[static_cast<size_t>(djy + jc.rc) * w + djx + jc.rc] =
          dt * model.separable->kinetic(s2);
    }
  }
  return jc;
}

double terminal_pairing(const std::vector<double>& mass, const ValueField& u_f) {
  double s = 0.0;
  for (size_t i = 0; i < mass.size(); ++i) s += mass[i] * u_f.values[i];
  return s;
}

// Coupling values on the half lattice for each step of a population path.
std::vector<std::vector<double>> coupling_tables(const CouplingKernel& kernel,
                                                 const FlowPath& population,
                                                 int K) {
  std::vector<std::vector<double>> tables(static_cast<size_t>(K));
  for (int k = 0; k < K; ++k) {
    kernel.eval_half_lattice(population.marginals[static_cast<size_t>(k)],
                             tables[static_cast<size_t>(k)]);
  }
  return tables;
}

// Best response against a population whose coupling tables are already
// known. The backward solve and the population cost read the same tables,
// so the exploitability gap cannot go negative beyond roundoff.
BestResponse best_response_tabulated(
    const TonelliModel& model, const Coupling& coupling,
    const std::vector<std::vector<double>>& tables, const FlowPath& population,
    const ValueField& u_f, double speed_cap, int threads) {
  const Grid& grid = *u_f.grid;
  const double T = population.T, dt = population.dt;
  const int K = step_count(T, dt);
  const int n = grid.size();
  const int hx = grid.half_nx();
  const size_t nhalf = static_cast<size_t>(hx) * grid.half_ny();

  FiniteHorizonResult back =
      finite_horizon_solve(model, tables, coupling.a3_normalize(), u_f, T, dt,
                           speed_cap, /*record_ties=*/true, threads);

  // Population cost in the same field the backward solve optimised:
  // belief-free part, plus the coupling paid at the move midpoints, minus
  // the per-step normalisation.
  double pop_cost = population.base_cost;
  for (int k = 0; k < static_cast<int>(tables.size()); ++k) {
    const auto& fhalf = tables[static_cast<size_t>(k)];
    const auto& mu = population.midpoints[static_cast<size_t>(k)];
    double dot = 0.0;
    for (size_t i = 0; i < nhalf; ++i) {
      if (mu[i] != 0.0) dot += fhalf[i] * mu[i];
    }
    pop_cost += dt * (dot - back.kappas[static_cast<size_t>(k)]);
  }

  double optimum = 0.0;
  for (int id = 0; id < n; ++id) {
    optimum += population.marginals[0].weight(id) * back.slices[0][id];
  }

  // Forward rollout of the optimal flow; mass splits equally across tied
  // successors so the flow is independent of the tie-break order.
  const auto pot = potential_table(grid, model);
  const auto jc = jump_costs(grid, model, dt, speed_cap);

  FlowPath flow;
  flow.T = T;
  flow.dt = dt;
  flow.marginals.reserve(static_cast<size_t>(K) + 1);
  flow.marginals.push_back(population.marginals[0]);
  flow.midpoints.reserve(static_cast<size_t>(K));

  std::vector<double> cur = population.marginals[0].weights();
  std::vector<double> next(static_cast<size_t>(n));
  std::vector<double> mu(nhalf);
  double base = 0.0;
  for (int k = 0; k < K; ++k) {
    std::fill(next.begin(), next.end(), 0.0);
    std::fill(mu.begin(), mu.end(), 0.0);
    const StepRecord& rec = back.records[static_cast<size_t>(k)];
    for (int id = 0; id < n; ++id) {
      const double mass = cur[static_cast<size_t>(id)];
      if (mass <= 0.0) continue;
      const auto [tb, te] = rec.ties(id);
      const double share = mass / static_cast<double>(te - tb);
      const auto [ix, iy] = grid.node_ij(id);
      for (const int* t = tb; t != te; ++t) {
        const int y = *t;
        next[static_cast<size_t>(y)] += share;
        const auto [jx, jy] = grid.node_ij(y);
        const size_t uh =
            static_cast<size_t>(iy + jy) * hx + static_cast<size_t>(ix + jx);
        mu[uh] += share;
        base += share * (jc(jx - ix, jy - iy) + dt * pot[uh]);
      }
    }
    flow.midpoints.push_back(mu);
    flow.marginals.emplace_back(&grid, next);
    cur = next;
  }
  base += terminal_pairing(cur, u_f);
  flow.base_cost = base;

  BestResponse out;
  out.flow = std::move(flow);
  out.slices = std::move(back.slices);
  out.records = std::move(back.records);
  out.exploitability = pop_cost - optimum;
  return out;
}

}  // namespace

FlowPath resting_flow(const TonelliModel& model, const GridMeasure& m0,
                      const ValueField& u_f, double T, double dt) {
  const Grid& grid = m0.grid();
  const int K = step_count(T, dt);
  const int hx = grid.half_nx();

  FlowPath flow;
  flow.T = T;
  flow.dt = dt;
  flow.marginals.assign(static_cast<size_t>(K) + 1, m0);

  std::vector<double> mu(static_cast<size_t>(hx) * grid.half_ny(), 0.0);
  for (int id = 0; id < grid.size(); ++id) {
    const auto [ix, iy] = grid.node_ij(id);
    mu[static_cast<size_t>(2 * iy) * hx + 2 * ix] = m0.weight(id);
  }
  flow.midpoints.assign(static_cast<size_t>(K), mu);

  double base = 0.0;
  for (int id = 0; id < grid.size(); ++id) {
    const Vec2 x = grid.node(id);
    base += m0.weight(id) * (T * model.L(x, {0, 0}) + u_f[id]);
  }
  flow.base_cost = base;
  return flow;
}

BestResponse best_response(const TonelliModel& model, const Coupling& coupling,
                           const FlowPath& population, const ValueField& u_f,
                           double speed_cap, int threads) {
  const Grid& grid = *u_f.grid;
  const int K = step_count(population.T, population.dt);
  std::vector<std::vector<double>> tables;
  if (coupling.active()) {
    tables = coupling_tables(CouplingKernel(coupling, grid), population, K);
  }
  return best_response_tabulated(model, coupling, tables, population, u_f,
                                 speed_cap, threads);
}

MildSolutionPath equilibrium_fixed_point(const TonelliModel& model,
                                         const Coupling& coupling,
                                         const GridMeasure& m0,
                                         const ValueField& u_f, double T,
                                         double dt,
                                         const FictitiousPlayOptions& opts) {
  const Grid& grid = m0.grid();
  if (u_f.grid != &grid) {
    throw GridMismatch("terminal datum lives on a different grid");
  }
  const int K = step_count(T, dt);

  FlowPath pop = resting_flow(model, m0, u_f, T, dt);

  // The coupling is linear in the measure, so the tables of the averaged
  // population can be averaged alongside it. Each round then prices exactly
  // one kernel evaluation per step (for the fresh response) instead of
  // several.
  std::optional<CouplingKernel> kernel;
  std::vector<std::vector<double>> tables;
  if (coupling.active()) {
    kernel.emplace(coupling, grid);
    tables.assign(static_cast<size_t>(K), {});
    kernel->eval_half_lattice(m0, tables[0]);
    for (int k = 1; k < K; ++k) tables[static_cast<size_t>(k)] = tables[0];
  }

  MildSolutionPath out;
  out.T = T;
  out.dt = dt;
  for (int round = 0;; ++round) {
    BestResponse br = best_response_tabulated(model, coupling, tables, pop, u_f,
                                              opts.speed_cap, opts.threads);
    out.exploitability_trace.push_back(br.exploitability);
    if (br.exploitability <= opts.tol_expl || round >= opts.max_outer) {
      out.slices = std::move(br.slices);
      out.records = std::move(br.records);
      out.marginals = std::move(pop.marginals);
      out.exploitability = br.exploitability;
      out.converged = br.exploitability <= opts.tol_expl;
      if (!out.converged && opts.throw_on_failure) {
        throw NoConvergence("fictitious play stalled at exploitability " +
                            std::to_string(br.exploitability) + " after " +
                            std::to_string(round) + " rounds");
      }
      return out;
    }

    // Weight 1/(round + 1): the first response replaces the starting
    // population outright, later ones fold into the running average. The
    // incremental form leaves slices where the response equals the current
    // belief bitwise unchanged, in particular the initial marginal.
    const double a =
        opts.raw_best_response ? 1.0 : 1.0 / static_cast<double>(round + 1);
    std::vector<double> bt;
    for (int k = 0; k < static_cast<int>(tables.size()); ++k) {
      kernel->eval_half_lattice(br.flow.marginals[static_cast<size_t>(k)], bt);
      auto& tab = tables[static_cast<size_t>(k)];
      if (a == 1.0) {
        tab.swap(bt);
      } else {
        for (size_t i = 0; i < tab.size(); ++i) tab[i] += a * (bt[i] - tab[i]);
      }
    }
    if (a == 1.0) {
      pop = std::move(br.flow);
      continue;
    }
    std::vector<GridMeasure> mixed;
    mixed.reserve(static_cast<size_t>(K) + 1);
    for (int t = 0; t <= K; ++t) {
      std::vector<double> w = pop.marginals[static_cast<size_t>(t)].weights();
      const auto& bw = br.flow.marginals[static_cast<size_t>(t)].weights();
      for (size_t i = 0; i < w.size(); ++i) w[i] += a * (bw[i] - w[i]);
      mixed.emplace_back(&grid, std::move(w));
    }
    pop.marginals = std::move(mixed);
    for (int t = 0; t < K; ++t) {
      auto& mu = pop.midpoints[static_cast<size_t>(t)];
      const auto& bmu = br.flow.midpoints[static_cast<size_t>(t)];
      for (size_t i = 0; i < mu.size(); ++i) mu[i] += a * (bmu[i] - mu[i]);
    }
    pop.base_cost += a * (br.flow.base_cost - pop.base_cost);
  }
}

double energy_estimate_eval(const MildSolutionPath& path,
                            const Coupling& coupling,
                            const GridMeasure& m_bar) {
  if (!coupling.active() || path.marginals.empty()) return 0.0;
  const Grid& grid = m_bar.grid();
  if (!grid.same_layout(path.marginals[0].grid())) {
    throw GridMismatch("stationary measure lives on a different grid");
  }
  CouplingKernel kernel(coupling, grid);
  std::vector<double> fbar;
  kernel.eval_nodes(m_bar, fbar);

  const size_t K = path.marginals.size() - 1;
  std::vector<double> fk;
  double total = 0.0;
  for (size_t k = 0; k < K; ++k) {
    const GridMeasure& mk = path.marginals[k];
    kernel.eval_nodes(mk, fk);
    double pairing = 0.0;
    for (int id = 0; id < grid.size(); ++id) {
      pairing += (fk[static_cast<size_t>(id)] - fbar[static_cast<size_t>(id)]) *
                 (mk.weight(id) - m_bar.weight(id));
    }
    total += path.dt * pairing;
  }
  return total;
}

}  // namespace mfg

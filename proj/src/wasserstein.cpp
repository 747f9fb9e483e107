#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <unordered_map>
#include <vector>

#include "mfg/errors.hpp"
#include "mfg/model.hpp"

namespace mfg {

namespace {

void require_same_grid(const GridMeasure& a, const GridMeasure& b) {
  if (!a.grid().same_layout(b.grid())) {
    throw GridMismatch("Wasserstein distance needs measures on one grid");
  }
}

}  // namespace

double wasserstein1_cdf(const GridMeasure& a, const GridMeasure& b) {
  require_same_grid(a, b);
  const Grid& g = a.grid();
  if (g.domain().dim() != 1) {
    throw Error("the cumulative-function route is one-dimensional");
  }
  // Nodes are in ascending coordinate order in dimension one.
  double cum = 0.0, dist = 0.0;
  for (int id = 0; id + 1 < g.size(); ++id) {
    cum += a.weight(id) - b.weight(id);
    dist += std::abs(cum) * (g.node(id + 1).x - g.node(id).x);
  }
  return dist;
}

TransportResult wasserstein1_lp(const GridMeasure& a, const GridMeasure& b) {
  require_same_grid(a, b);
  const Grid& g = a.grid();

  // Shared mass stays in place at zero cost; transport only the excess.
  std::vector<int> src_id, snk_id;
  std::vector<double> supply, demand;
  for (int id = 0; id < g.size(); ++id) {
    const double d = a.weight(id) - b.weight(id);
    if (d > 1e-16) {
      src_id.push_back(id);
      supply.push_back(d);
    } else if (d < -1e-16) {
      snk_id.push_back(id);
      demand.push_back(-d);
    }
  }
  const int n = static_cast<int>(src_id.size());
  const int m = static_cast<int>(snk_id.size());
  if (n == 0 || m == 0) return {0.0, 0.0, 0.0, 0.0};

  auto cost = [&](int i, int j) {
    return norm(g.node(src_id[static_cast<size_t>(i)]) -
                g.node(snk_id[static_cast<size_t>(j)]));
  };

  // Successive shortest paths with potentials. Graph nodes: sources 0..n-1,
  // sinks n..n+m-1. Forward arcs i -> j are always admissible; backward arcs
  // j -> i while flow(i, j) > 0.
  std::vector<double> pot(static_cast<size_t>(n + m), 0.0);
  std::vector<double> rem_supply = supply, rem_demand = demand;
  std::unordered_map<long long, double> flow;
  auto fkey = [m](int i, int j) { return static_cast<long long>(i) * m + j; };

  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> dist(static_cast<size_t>(n + m));
  std::vector<int> prev(static_cast<size_t>(n + m));
  std::vector<char> done(static_cast<size_t>(n + m));

  double total_moved = 0.0, need = 0.0;
  for (double s : supply) need += s;

  while (total_moved < need - 1e-15) {
    std::fill(dist.begin(), dist.end(), inf);
    std::fill(prev.begin(), prev.end(), -1);
    std::fill(done.begin(), done.end(), 0);
    using QE = std::pair<double, int>;
    std::priority_queue<QE, std::vector<QE>, std::greater<QE>> queue;
    for (int i = 0; i < n; ++i) {
      if (rem_supply[static_cast<size_t>(i)] > 1e-15) {
        dist[static_cast<size_t>(i)] = 0.0;
        queue.emplace(0.0, i);
      }
    }
    int reached = -1;
    while (!queue.empty()) {
      const auto [du, u] = queue.top();
      queue.pop();
      if (done[static_cast<size_t>(u)]) continue;
      done[static_cast<size_t>(u)] = 1;
      if (u >= n && rem_demand[static_cast<size_t>(u - n)] > 1e-15) {
        reached = u;
        break;
      }
      if (u < n) {
        for (int j = 0; j < m; ++j) {
          const double rc = cost(u, j) - pot[static_cast<size_t>(u)] +
                            pot[static_cast<size_t>(n + j)];
          const double nd = du + std::max(rc, 0.0);
          if (nd < dist[static_cast<size_t>(n + j)] - 1e-18) {
            dist[static_cast<size_t>(n + j)] = nd;
            prev[static_cast<size_t>(n + j)] = u;
            queue.emplace(nd, n + j);
          }
        }
      } else {
        const int j = u - n;
        for (int i = 0; i < n; ++i) {
          auto it = flow.find(fkey(i, j));
          if (it == flow.end() || it->second <= 1e-15) continue;
          const double rc = -cost(i, j) - pot[static_cast<size_t>(u)] +
                            pot[static_cast<size_t>(i)];
          const double nd = du + std::max(rc, 0.0);
          if (nd < dist[static_cast<size_t>(i)] - 1e-18) {
            dist[static_cast<size_t>(i)] = nd;
            prev[static_cast<size_t>(i)] = u;
            queue.emplace(nd, i);
          }
        }
      }
    }
    if (reached < 0) {
      throw Error("transport program ran out of augmenting paths");
    }
    // Capping by the target distance keeps reduced costs nonnegative for
    // nodes the early-terminated search never finalised.
    const double dcap = dist[static_cast<size_t>(reached)];
    for (int u = 0; u < n + m; ++u) {
      pot[static_cast<size_t>(u)] -= std::min(dist[static_cast<size_t>(u)], dcap);
    }
    // Trace the augmenting path, find the bottleneck, then push.
    int path_start = reached;
    while (prev[static_cast<size_t>(path_start)] >= 0) {
      path_start = prev[static_cast<size_t>(path_start)];
    }
    double amount = std::min(rem_demand[static_cast<size_t>(reached - n)],
                             rem_supply[static_cast<size_t>(path_start)]);
    for (int u = reached; prev[static_cast<size_t>(u)] >= 0;) {
      const int p = prev[static_cast<size_t>(u)];
      if (u < n) amount = std::min(amount, flow[fkey(u, p - n)]);
      u = p;
    }
    for (int u = reached; prev[static_cast<size_t>(u)] >= 0;) {
      const int p = prev[static_cast<size_t>(u)];
      if (u >= n) {
        flow[fkey(p, u - n)] += amount;
      } else {
        flow[fkey(u, p - n)] -= amount;
      }
      u = p;
    }
    rem_supply[static_cast<size_t>(path_start)] -= amount;
    rem_demand[static_cast<size_t>(reached - n)] -= amount;
    total_moved += amount;
  }

  TransportResult r{0.0, 0.0, 0.0, 0.0};
  for (const auto& [key, f] : flow) {
    if (f <= 0) continue;
    const int i = static_cast<int>(key / m), j = static_cast<int>(key % m);
    r.primal += f * cost(i, j);
  }
  // The potentials solve the dual with convention f(src) - f(snk) <= cost.
  for (int i = 0; i < n; ++i) {
    r.dual += pot[static_cast<size_t>(i)] * supply[static_cast<size_t>(i)];
  }
  for (int j = 0; j < m; ++j) {
    r.dual -= pot[static_cast<size_t>(n + j)] * demand[static_cast<size_t>(j)];
  }
  r.gap = r.primal - r.dual;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < m; ++j) {
      r.max_lipschitz_excess = std::max(
          r.max_lipschitz_excess,
          pot[static_cast<size_t>(i)] - pot[static_cast<size_t>(n + j)] - cost(i, j));
    }
  }
  return r;
}

double wasserstein1(const GridMeasure& a, const GridMeasure& b) {
  require_same_grid(a, b);
  if (a.grid().domain().dim() == 1) return wasserstein1_cdf(a, b);
  return wasserstein1_lp(a, b).primal;
}

}  // namespace mfg

#include "steiner_pf/eikonal.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <queue>
#include <stdexcept>
#include <string>

namespace steiner_pf {

namespace {

struct Upwind {
  std::int64_t node = kNoParent;
  double value = kUnreached;
};

// Smaller frozen value of the two neighbours along one axis; ties go to the lower index.
Upwind axis_min(const ScalarField& u, const std::vector<char>& frozen, std::int64_t lo,
                std::int64_t hi) {
  Upwind best;
  if (lo >= 0 && frozen[lo]) best = {lo, u[lo]};
  if (hi >= 0 && frozen[hi] && u[hi] < best.value) best = {hi, u[hi]};
  return best;
}

UpdateRecord solve_update(const Grid2D& g, const ScalarField& u, const std::vector<char>& frozen,
                          double phi_here, std::size_t idx) {
  const Node n = g.node(idx);
  const auto at = [&](int i, int j) -> std::int64_t {
    return g.in_range(i, j) ? static_cast<std::int64_t>(g.index(i, j)) : kNoParent;
  };
  const Upwind ha = axis_min(u, frozen, at(n.i - 1, n.j), at(n.i + 1, n.j));
  const Upwind vb = axis_min(u, frozen, at(n.i, n.j - 1), at(n.i, n.j + 1));
  const double hp = g.h() * phi_here;

  UpdateRecord r;
  r.a = ha.value;
  r.b = vb.value;
  if (ha.node == kNoParent && vb.node == kNoParent) {
    r.u = kUnreached;
    return r;
  }
  if (ha.node != kNoParent && vb.node != kNoParent && std::abs(ha.value - vb.value) < hp) {
    const double diff = ha.value - vb.value;
    r.two_sided = true;
    r.parent_a = ha.node;
    r.parent_b = vb.node;
    r.u = 0.5 * (ha.value + vb.value + std::sqrt(2.0 * hp * hp - diff * diff));
    return r;
  }
  const Upwind& m = (vb.node == kNoParent || (ha.node != kNoParent && ha.value <= vb.value)) ? ha : vb;
  r.parent_a = m.node;
  r.u = m.value + hp;
  return r;
}

}  // namespace

DistanceResult fast_march(const ScalarField& phi, std::size_t source) {
  const Grid2D& g = phi.grid();
  if (source >= g.size()) {
    throw std::invalid_argument("fast_march: source node " + std::to_string(source) +
                                " is outside the grid");
  }
  for (std::size_t k = 0; k < phi.size(); ++k) {
    if (!(phi[k] > 0.0) || !std::isfinite(phi[k])) {
      Node n = g.node(k);
      throw std::invalid_argument("fast_march: phi must be positive and finite, got " +
                                  std::to_string(phi[k]) + " at node (" + std::to_string(n.i) +
                                  ", " + std::to_string(n.j) + ")");
    }
  }

  DistanceResult res{ScalarField(g, kUnreached), phi, {}, source};
  ScalarField& u = res.u;
  FmmTape& tape = res.tape;
  tape.records.assign(g.size(), UpdateRecord{});
  tape.acceptance_order.reserve(g.size());
  std::vector<char> frozen(g.size(), 0);

  using Entry = std::pair<double, std::size_t>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> heap;
  u[source] = 0.0;
  heap.push({0.0, source});

  double last = 0.0;
  while (!heap.empty()) {
    const auto [value, idx] = heap.top();
    heap.pop();
    if (frozen[idx] || value != u[idx]) continue;
    frozen[idx] = 1;
    if (value < last) throw std::logic_error("fast_march: acceptance order is not monotone");
    last = value;
    tape.acceptance_order.push_back(idx);
    if (idx == source) {
      tape.records[idx] = UpdateRecord{};
    } else {
      // Re-solving with the neighbours frozen so far reproduces the latest tentative value.
      tape.records[idx] = solve_update(g, u, frozen, phi[idx], idx);
    }

    const Node n = g.node(idx);
    constexpr int di[4] = {-1, 1, 0, 0};
    constexpr int dj[4] = {0, 0, -1, 1};
    for (int k = 0; k < 4; ++k) {
      const int i = n.i + di[k];
      const int j = n.j + dj[k];
      if (!g.in_range(i, j)) continue;
      const std::size_t nb = g.index(i, j);
      if (frozen[nb]) continue;
      const UpdateRecord r = solve_update(g, u, frozen, phi[nb], nb);
      if (r.u < u[nb]) {
        u[nb] = r.u;
        heap.push({r.u, nb});
      }
    }
  }
  return res;
}

std::vector<double> distance_at(const DistanceResult& result,
                                const std::vector<SnappedNode>& terminals) {
  std::vector<double> out;
  out.reserve(terminals.size());
  for (const SnappedNode& t : terminals) {
    out.push_back(t.index == result.source_node ? 0.0 : result.u[t.index]);
  }
  return out;
}

ScalarField adjoint_gradient(const DistanceResult& result,
                             const std::vector<WeightedNode>& terminal_weights) {
  const Grid2D& g = result.u.grid();
  const double h = g.h();
  std::vector<double> sens(g.size(), 0.0);
  for (const WeightedNode& t : terminal_weights) {
    if (!std::isfinite(t.weight)) throw std::invalid_argument("adjoint_gradient: weight not finite");
    sens.at(t.node) += t.weight;
  }

  ScalarField grad(g, 0.0);
  const auto& order = result.tape.acceptance_order;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const std::size_t idx = *it;
    const double s = sens[idx];
    if (s == 0.0 || idx == result.source_node) continue;
    const UpdateRecord& r = result.tape.records[idx];
    if (r.two_sided) {
      const double denom = 2.0 * r.u - r.a - r.b;
      sens[r.parent_a] += s * (r.u - r.a) / denom;
      sens[r.parent_b] += s * (r.u - r.b) / denom;
      grad[idx] += s * h * h * result.phi[idx] / denom;
    } else {
      sens[r.parent_a] += s;
      grad[idx] += s * h;
    }
  }
  return grad;
}

namespace {

// Downhill direction at a node in grid units, from one-sided differences toward the smaller
// neighbour on each axis. Zero on an axis where the node is not above either neighbour.
std::pair<double, double> downhill(const ScalarField& u, int i, int j) {
  const Grid2D& g = u.grid();
  const double c = u(i, j);
  auto axis = [&](int di, int dj) {
    const double lo = g.in_range(i - di, j - dj) ? u(i - di, j - dj) : kUnreached;
    const double hi = g.in_range(i + di, j + dj) ? u(i + di, j + dj) : kUnreached;
    const double m = std::min(lo, hi);
    if (!(m < c)) return 0.0;
    return lo <= hi ? -(c - lo) : (c - hi);
  };
  return {axis(1, 0), axis(0, 1)};
}

std::size_t lowest_neighbour(const ScalarField& u, std::size_t cur) {
  const Grid2D& g = u.grid();
  const Node n = g.node(cur);
  std::size_t best = cur;
  for (int dj = -1; dj <= 1; ++dj) {
    for (int di = -1; di <= 1; ++di) {
      if ((di == 0 && dj == 0) || !g.in_range(n.i + di, n.j + dj)) continue;
      const std::size_t nb = g.index(n.i + di, n.j + dj);
      if (u[nb] < u[best]) best = nb;
    }
  }
  return best;
}

}  // namespace

std::vector<std::size_t> backtrack_geodesic(const DistanceResult& result, std::size_t from) {
  const Grid2D& g = result.u.grid();
  const ScalarField& u = result.u;
  if (from >= g.size() || !(u[from] < kUnreached)) {
    throw std::invalid_argument("backtrack_geodesic: start node not reached");
  }
  std::vector<std::size_t> path{from};
  std::size_t cur = from;
  // Continuous position in grid units; rounding it gives the node sequence. Half-node steps
  // keep consecutive nodes 8-adjacent.
  double px = g.node(from).i, py = g.node(from).j;
  const Node src = g.node(result.source_node);
  while (cur != result.source_node) {
    if (path.size() > g.size()) {
      throw std::runtime_error("backtrack_geodesic: no progress from node " + std::to_string(cur));
    }
    const Node n = g.node(cur);
    std::size_t next = cur;
    if (std::abs(n.i - src.i) <= 1 && std::abs(n.j - src.j) <= 1) {
      next = result.source_node;
    } else {
      const auto [dx, dy] = downhill(u, n.i, n.j);
      const double len = std::hypot(dx, dy);
      if (len > 0.0) {
        const double qx = px + 0.5 * dx / len, qy = py + 0.5 * dy / len;
        const int qi = static_cast<int>(std::lround(qx)), qj = static_cast<int>(std::lround(qy));
        if (g.in_range(qi, qj)) {
          const std::size_t q = g.index(qi, qj);
          if (q == cur || u[q] < u[cur]) {
            px = qx;
            py = qy;
            if (q == cur) continue;
            next = q;
          }
        }
      }
      if (next == cur) {
        next = lowest_neighbour(u, cur);
        if (next == cur) {
          throw std::runtime_error("backtrack_geodesic: descent stalled at node " +
                                   std::to_string(cur));
        }
        px = g.node(next).i;
        py = g.node(next).j;
      }
    }
    cur = next;
    // Cut the corner when the node before last is already adjacent.
    if (path.size() >= 2) {
      const Node a = g.node(path[path.size() - 2]), b = g.node(cur);
      if (std::abs(a.i - b.i) <= 1 && std::abs(a.j - b.j) <= 1) path.pop_back();
    }
    path.push_back(cur);
  }
  return path;
}

ScalarField path_subgradient(const DistanceResult& result,
                             const std::vector<WeightedNode>& terminal_weights) {
  const Grid2D& g = result.u.grid();
  ScalarField grad(g, 0.0);
  for (const WeightedNode& t : terminal_weights) {
    if (t.node == result.source_node) continue;
    const auto path = backtrack_geodesic(result, t.node);
    for (std::size_t k = 1; k < path.size(); ++k) {
      const double half = 0.5 * t.weight * distance(g.position(path[k - 1]), g.position(path[k]));
      grad[path[k - 1]] += half;
      grad[path[k]] += half;
    }
  }
  return grad;
}

double path_integral(const ScalarField& phi, const std::vector<std::size_t>& path) {
  const Grid2D& g = phi.grid();
  double sum = 0.0;
  for (std::size_t k = 1; k < path.size(); ++k) {
    sum += 0.5 * (phi[path[k - 1]] + phi[path[k]]) *
           distance(g.position(path[k - 1]), g.position(path[k]));
  }
  return sum;
}

double path_length(const Grid2D& grid, const std::vector<std::size_t>& path) {
  double sum = 0.0;
  for (std::size_t k = 1; k < path.size(); ++k) {
    sum += distance(grid.position(path[k - 1]), grid.position(path[k]));
  }
  return sum;
}

}  // namespace steiner_pf

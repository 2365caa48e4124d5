#include <algorithm>
#include <cmath>
#include <queue>
#include <random>

#include "doctest.h"
#include "steiner_pf/eikonal.hpp"
#include "support.hpp"

using namespace steiner_pf;
using namespace test_support;

namespace {

// Plain Dijkstra on the 4- or 8-neighbour graph; `edge` gives the weight of p -> q.
template <class EdgeWeight>
std::vector<double> dijkstra(const Grid2D& g, std::size_t source, bool eight, EdgeWeight edge,
                             std::vector<std::size_t>* parent = nullptr) {
  std::vector<double> d(g.size(), kUnreached);
  if (parent) parent->assign(g.size(), source);
  using Item = std::pair<double, std::size_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
  d[source] = 0.0;
  pq.push({0.0, source});
  while (!pq.empty()) {
    const auto [dist, k] = pq.top();
    pq.pop();
    if (dist > d[k]) continue;
    const Node n = g.node(k);
    for (int dj = -1; dj <= 1; ++dj) {
      for (int di = -1; di <= 1; ++di) {
        if ((di == 0 && dj == 0) || (!eight && di != 0 && dj != 0)) continue;
        if (!g.in_range(n.i + di, n.j + dj)) continue;
        const std::size_t q = g.index(n.i + di, n.j + dj);
        const double nd = dist + edge(k, q);
        if (nd < d[q]) {
          d[q] = nd;
          if (parent) (*parent)[q] = k;
          pq.push({nd, q});
        }
      }
    }
  }
  return d;
}

double point_segment_distance(Point p, Point a, Point b) {
  const double vx = b.x - a.x, vy = b.y - a.y;
  const double t = std::clamp(((p.x - a.x) * vx + (p.y - a.y) * vy) / (vx * vx + vy * vy), 0.0, 1.0);
  return distance(p, {a.x + t * vx, a.y + t * vy});
}

// Nodes whose horizontal or vertical upwind minimum is attained twice.
std::vector<char> shock_nodes(const DistanceResult& r) {
  const Grid2D& g = r.u.grid();
  std::vector<char> shock(g.size(), 0);
  for (int j = 1; j < g.ny() - 1; ++j) {
    for (int i = 1; i < g.nx() - 1; ++i) {
      const bool hx = std::abs(r.u(i - 1, j) - r.u(i + 1, j)) < 1e-9;
      const bool hy = std::abs(r.u(i, j - 1) - r.u(i, j + 1)) < 1e-9;
      if (hx || hy) shock[g.index(i, j)] = 1;
    }
  }
  return shock;
}

}  // namespace

TEST_CASE("fast_march with unit speed approximates the Euclidean distance") {
  const Grid2D g = unit_grid(129);
  const std::size_t src = g.index(64, 64);
  const DistanceResult r = fast_march(ScalarField(g, 1.0), src);
  CHECK(r.u[src] == 0.0);
  CHECK(r.source_node == src);
  double err = 0.0;
  for (std::size_t k = 0; k < g.size(); ++k) {
    err = std::max(err, std::abs(r.u[k] - distance(g.position(k), g.position(src))));
  }
  CHECK(err <= 2.0 * g.h());
  // Axis directions are exact.
  CHECK(r.u(64 + 10, 64) == doctest::Approx(10 * g.h()).epsilon(1e-12));
}

TEST_CASE("fast_march rejects bad input") {
  const Grid2D g = unit_grid(9);
  ScalarField phi(g, 1.0);
  CHECK_THROWS_AS(fast_march(phi, g.size()), std::invalid_argument);
  phi(4, 4) = 0.0;
  CHECK_THROWS_AS(fast_march(phi, 0), std::invalid_argument);
  phi(4, 4) = -1.0;
  CHECK_THROWS_AS(fast_march(phi, 0), std::invalid_argument);
}

TEST_CASE("fast_march is 1-homogeneous in phi") {
  std::mt19937_64 rng(17);
  const Grid2D g = unit_grid(33);
  const ScalarField phi = random_admissible(g, 0.05, rng);
  const DistanceResult base = fast_march(phi, g.index(5, 20));
  for (double c : {0.5, 2.0, 10.0}) {
    ScalarField scaled = phi;
    for (double& v : scaled.values()) v *= c;
    const DistanceResult r = fast_march(scaled, g.index(5, 20));
    for (std::size_t k = 0; k < g.size(); ++k) {
      CHECK(std::abs(r.u[k] - c * base.u[k]) <= 1e-10 * std::max(c * base.u[k], 1e-300));
    }
  }
}

TEST_CASE("fast_march is bracketed by 4-neighbour graph distances") {
  // Every update satisfies min(a,b) + h phi / sqrt(2) <= u <= min(a,b) + h phi, so u lies
  // between D/sqrt(2) and D for the graph whose edges cost h times the head node's phi.
  std::mt19937_64 rng(99);
  const Grid2D g = unit_grid(33);
  const double h = g.h();
  for (int t = 0; t < 5; ++t) {
    const ScalarField phi = random_admissible(g, 0.02, rng);
    const std::size_t src = g.index(3 + 5 * t, 29 - 4 * t);
    const DistanceResult r = fast_march(phi, src);
    const auto d = dijkstra(g, src, false, [&](std::size_t, std::size_t q) { return h * phi[q]; });
    int bad = 0;
    for (std::size_t k = 0; k < g.size(); ++k) {
      if (r.u[k] > d[k] * (1 + 1e-12) || r.u[k] < d[k] / std::sqrt(2.0) * (1 - 1e-12)) ++bad;
    }
    CHECK(bad == 0);
  }
}

TEST_CASE("unit-speed diagonal neighbour falls outside the 8-neighbour graph bounds") {
  const Grid2D g = unit_grid(9);
  const DistanceResult r = fast_march(ScalarField(g, 1.0), g.index(4, 4));
  const double h = g.h();
  CHECK(r.u(5, 5) == doctest::Approx((1 + 1 / std::sqrt(2.0)) * h));
  CHECK(r.u(5, 5) > std::sqrt(2.0) * h);
  CHECK(r.u(5, 5) < 2 * h);
}

TEST_CASE("fast_march is monotone in phi") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> extra(0.0, 0.5);
  const Grid2D g = unit_grid(33);
  for (int t = 0; t < 5; ++t) {
    const ScalarField lo = random_admissible(g, 0.05, rng);
    ScalarField hi = lo;
    for (double& v : hi.values()) v += extra(rng);
    const auto u1 = fast_march(lo, g.index(16, 16)).u;
    const auto u2 = fast_march(hi, g.index(16, 16)).u;
    for (std::size_t k = 0; k < g.size(); ++k) CHECK(u1[k] <= u2[k] + 1e-12);
  }
}

TEST_CASE("tape order is monotone and causal") {
  std::mt19937_64 rng(8);
  const Grid2D g = unit_grid(33);
  const ScalarField phi = random_admissible(g, 0.05, rng);
  const DistanceResult r = fast_march(phi, g.index(7, 11));
  const auto& order = r.tape.acceptance_order;
  REQUIRE(order.size() == g.size());
  CHECK(order.front() == g.index(7, 11));
  std::vector<std::size_t> rank(g.size());
  for (std::size_t k = 0; k < order.size(); ++k) rank[order[k]] = k;
  for (std::size_t k = 1; k < order.size(); ++k) CHECK(r.u[order[k - 1]] <= r.u[order[k]]);
  for (std::size_t k = 0; k < g.size(); ++k) {
    const UpdateRecord& rec = r.tape.records[k];
    if (rec.parent_a != kNoParent) CHECK(rank[rec.parent_a] < rank[k]);
    if (rec.parent_b != kNoParent) CHECK(rank[rec.parent_b] < rank[k]);
    CHECK(rec.u == r.u[k]);
  }
}

TEST_CASE("distance_at") {
  const Grid2D g = unit_grid(65);
  const double h = g.h();
  std::vector<SnappedNode> t{snap_to_grid({0.0, 0.0}, g), snap_to_grid({1.0, 1.0}, g)};
  const DistanceResult r = fast_march(ScalarField(g, 1.0), t[0].index);
  auto d = distance_at(r, t);
  CHECK(d[0] == 0.0);
  CHECK(std::abs(d[1] - std::sqrt(2.0)) <= 2 * h * std::sqrt(2.0));

  const double eps = 0.03;
  d = distance_at(fast_march(ScalarField(g, eps), t[0].index), t);
  CHECK(d[0] == 0.0);
  CHECK(std::abs(d[1] - eps * std::sqrt(2.0)) <= eps * 2 * h * std::sqrt(2.0));
}

TEST_CASE("adjoint gradient basics") {
  const Grid2D g = unit_grid(65);
  const double h = g.h();
  const std::size_t src = g.index(10, 12);
  const DistanceResult r = fast_march(ScalarField(g, 1.0), src);

  const ScalarField at_source = adjoint_gradient(r, {{src, 1.0}});
  for (std::size_t k = 0; k < g.size(); ++k) CHECK(at_source[k] == 0.0);

  SUBCASE("axis-aligned terminal: supported on the segment") {
    const std::size_t term = g.index(50, 12);
    const ScalarField grad = adjoint_gradient(r, {{term, 1.0}});
    double sum = 0.0;
    for (std::size_t k = 0; k < g.size(); ++k) {
      if (grad[k] != 0.0) CHECK(g.node(k).j == 12);
      sum += grad[k];
    }
    CHECK(sum == doctest::Approx(r.u[term]).epsilon(1e-12));
  }
  SUBCASE("oblique terminal") {
    // Sensitivity spreads like a diffusion across the characteristic, width ~ sqrt(L h).
    const std::size_t term = g.index(50, 41);
    const double len = distance(g.position(src), g.position(term));
    const ScalarField grad = adjoint_gradient(r, {{term, 1.0}});
    double sum = 0.0, near = 0.0;
    for (std::size_t k = 0; k < g.size(); ++k) {
      CHECK(grad[k] >= 0.0);
      sum += grad[k];
      if (point_segment_distance(g.position(k), g.position(src), g.position(term)) <=
          3 * std::sqrt(len * h))
        near += grad[k];
    }
    CHECK(rel_err(sum, r.u[term]) <= 0.05);
    CHECK(near >= 0.95 * sum);
  }
}

TEST_CASE("Euler identity for the adjoint") {
  std::mt19937_64 rng(1234);
  std::uniform_int_distribution<int> node(1, 31);
  std::uniform_real_distribution<double> weight(0.1, 2.0);
  const Grid2D g = unit_grid(33);
  for (int t = 0; t < 20; ++t) {
    const ScalarField phi = random_admissible(g, 0.01, rng);
    const DistanceResult r = fast_march(phi, g.index(node(rng), node(rng)));
    std::vector<WeightedNode> w;
    double value = 0.0;
    for (int k = 0; k < 4; ++k) {
      w.push_back({g.index(node(rng), node(rng)), weight(rng)});
      value += w.back().weight * r.u[w.back().node];
    }
    CHECK(rel_err(dot(adjoint_gradient(r, w), phi), value) <= 1e-6);
  }
}

TEST_CASE("adjoint gradient matches finite differences away from shocks") {
  std::mt19937_64 rng(77);
  std::uniform_int_distribution<int> node(2, 14);
  const Grid2D g = unit_grid(17);
  int checked = 0;
  for (int t = 0; t < 10; ++t) {
    const ScalarField phi = random_admissible(g, 0.1, rng);
    const std::size_t src = g.index(node(rng), node(rng));
    const DistanceResult r = fast_march(phi, src);
    const std::vector<WeightedNode> w{{g.index(node(rng), node(rng)), 1.0},
                                      {g.index(node(rng), node(rng)), 0.5}};
    const ScalarField grad = adjoint_gradient(r, w);
    const auto shock = shock_nodes(r);
    auto value = [&](const ScalarField& f) {
      const DistanceResult rr = fast_march(f, src);
      return w[0].weight * rr.u[w[0].node] + w[1].weight * rr.u[w[1].node];
    };
    for (int k = 0; k < 10; ++k) {
      const ScalarField d = bump(g, node(rng), node(rng), 1.0);
      bool near_shock = false;
      for (std::size_t q = 0; q < g.size(); ++q) near_shock |= d[q] > 0.0 && shock[q];
      if (near_shock) continue;
      const double s = 1e-6;
      const double fd = (value(axpy(phi, s, d)) - value(axpy(phi, -s, d))) / (2 * s);
      CHECK(std::abs(dot(grad, d) - fd) <= 1e-3 * std::max(std::abs(fd), 1e-6));
      ++checked;
    }
  }
  CHECK(checked >= 50);
}

TEST_CASE("path subgradient deposits the path length") {
  const Grid2D g = unit_grid(65);
  const std::size_t src = g.index(8, 8);
  const DistanceResult r = fast_march(ScalarField(g, 1.0), src);
  const std::size_t term = g.index(56, 30);
  const ScalarField sub = path_subgradient(r, {{term, 1.0}});
  double sum = 0.0;
  for (double v : sub.values()) sum += v;
  CHECK(sum == doctest::Approx(path_length(g, backtrack_geodesic(r, term))).epsilon(1e-12));
  CHECK(rel_err(sum, r.u[term]) <= 0.1);
}

TEST_CASE("backtracked geodesics") {
  const Grid2D g = unit_grid(129);
  const double h = g.h();
  const std::size_t src = g.index(20, 30);
  const DistanceResult r = fast_march(ScalarField(g, 1.0), src);

  CHECK(backtrack_geodesic(r, src) == std::vector<std::size_t>{src});

  for (std::size_t from : {g.index(110, 100), g.index(20, 120), g.index(100, 31)}) {
    const auto path = backtrack_geodesic(r, from);
    CHECK(path.front() == from);
    CHECK(path.back() == src);
    CHECK(path.size() <= g.size());
    for (std::size_t n : path)
      CHECK(point_segment_distance(g.position(n), g.position(src), g.position(from)) <= 2 * h);
    const double len = path_integral(ScalarField(g, 1.0), path);
    CHECK(len >= r.u[from] - 2 * h);
    CHECK(len <= r.u[from] + 2 * h * path.size());
  }
}

TEST_CASE("geodesic follows an L-shaped channel") {
  const Grid2D g = unit_grid(65);
  ScalarField phi(g, 1.0);
  std::vector<char> channel(g.size(), 0);
  // Vertical leg i in [8,11], j in [8,56]; horizontal leg j in [53,56], i in [8,56].
  for (int j = 8; j <= 56; ++j)
    for (int i = 8; i <= 11; ++i) channel[g.index(i, j)] = 1;
  for (int j = 53; j <= 56; ++j)
    for (int i = 8; i <= 56; ++i) channel[g.index(i, j)] = 1;
  for (std::size_t k = 0; k < g.size(); ++k)
    if (channel[k]) phi[k] = 0.05;

  const std::size_t src = g.index(10, 10), dst = g.index(54, 54);
  const DistanceResult r = fast_march(phi, src);
  const auto path = backtrack_geodesic(r, dst);
  for (std::size_t n : path) CHECK(channel[n]);

  // The graph shortest path goes through the channel as well.
  std::vector<std::size_t> parent;
  const auto d = dijkstra(g, src, true, [&](std::size_t p, std::size_t q) {
    return 0.5 * (phi[p] + phi[q]) * distance(g.position(p), g.position(q));
  }, &parent);
  for (std::size_t n = dst; n != src; n = parent[n]) CHECK(channel[n]);
  CHECK(r.u[dst] <= d[dst] + 1e-12);
}

TEST_CASE("distance map is Lipschitz") {
  std::mt19937_64 rng(31);
  const Grid2D g = unit_grid(65);
  const ScalarField phi = random_admissible(g, 0.05, rng);
  const DistanceResult r = fast_march(phi, g.index(30, 12));
  std::uniform_int_distribution<std::size_t> pick(0, g.size() - 1);
  for (int k = 0; k < 500; ++k) {
    const std::size_t p = pick(rng), q = pick(rng);
    CHECK(std::abs(r.u[p] - r.u[q]) <=
          distance(g.position(p), g.position(q)) * std::sqrt(2.0) + 2 * g.h());
  }
}

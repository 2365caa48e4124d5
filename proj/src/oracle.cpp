#include "steiner_pf/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace steiner_pf {

namespace {

constexpr double kMoveTol = 1e-12;

double angle_at(Point apex, Point p, Point q) {
  const double ux = p.x - apex.x, uy = p.y - apex.y;
  const double vx = q.x - apex.x, vy = q.y - apex.y;
  const double nu = std::hypot(ux, uy), nv = std::hypot(vx, vy);
  const double c = std::clamp((ux * vx + uy * vy) / (nu * nv), -1.0, 1.0);
  return std::acos(c);
}

void grow(std::vector<SteinerTopology>& out, SteinerTopology t, int next_terminal, int n) {
  if (next_terminal == n) {
    out.push_back(std::move(t));
    return;
  }
  const std::size_t edge_count = t.edges.size();
  for (std::size_t e = 0; e < edge_count; ++e) {
    SteinerTopology child = t;
    const int s = n + child.steiner;
    const auto [a, b] = child.edges[e];
    child.edges[e] = {a, s};
    child.edges.push_back({s, b});
    child.edges.push_back({next_terminal, s});
    ++child.steiner;
    grow(out, std::move(child), next_terminal + 1, n);
  }
}

std::vector<std::vector<int>> neighbours(const SteinerTopology& t) {
  std::vector<std::vector<int>> nb(t.vertex_count());
  for (const auto& [a, b] : t.edges) {
    nb[a].push_back(b);
    nb[b].push_back(a);
  }
  return nb;
}

double length_of(const SteinerTopology& t, const std::vector<Point>& pos) {
  double len = 0.0;
  for (const auto& [a, b] : t.edges) len += distance(pos[a], pos[b]);
  return len;
}

// Gauss-Seidel Fermat sweeps; returns the number of sweeps used.
long settle(const std::vector<std::vector<int>>& nb, int n_terminals, std::vector<Point>& pos,
            long max_sweeps, double scale) {
  for (long sweep = 1; sweep <= max_sweeps; ++sweep) {
    double moved = 0.0;
    for (std::size_t v = n_terminals; v < pos.size(); ++v) {
      const Point next = fermat_point(pos[nb[v][0]], pos[nb[v][1]], pos[nb[v][2]]);
      moved = std::max(moved, distance(next, pos[v]));
      pos[v] = next;
    }
    if (moved < kMoveTol * scale) return sweep;
  }
  double residual = 0.0;
  for (std::size_t v = n_terminals; v < pos.size(); ++v) {
    residual = std::max(
        residual, distance(fermat_point(pos[nb[v][0]], pos[nb[v][1]], pos[nb[v][2]]), pos[v]));
  }
  std::ostringstream msg;
  msg << "Steiner point placement did not converge after " << max_sweeps
      << " sweeps (last movement " << residual << ")";
  throw std::runtime_error(msg.str());
}

}  // namespace

void SteinerTopology::validate() const {
  const int v = vertex_count();
  if (terminals < 2) throw std::invalid_argument("topology needs at least 2 terminals");
  if (static_cast<int>(edges.size()) != v - 1) {
    throw std::invalid_argument("topology is not a tree: wrong edge count");
  }
  std::vector<int> parent(v);
  for (int k = 0; k < v; ++k) parent[k] = k;
  const auto find = [&](int k) {
    while (parent[k] != k) k = parent[k] = parent[parent[k]];
    return k;
  };
  std::vector<int> degree(v, 0);
  for (const auto& [a, b] : edges) {
    if (a < 0 || b < 0 || a >= v || b >= v || a == b) {
      throw std::invalid_argument("topology has an invalid edge");
    }
    ++degree[a];
    ++degree[b];
    const int ra = find(a), rb = find(b);
    if (ra == rb) throw std::invalid_argument("topology contains a cycle");
    parent[ra] = rb;
  }
  for (int k = 0; k < v; ++k) {
    if (k < terminals && degree[k] < 1) throw std::invalid_argument("isolated terminal");
    if (k >= terminals && degree[k] != 3) {
      throw std::invalid_argument("Steiner vertex without degree 3");
    }
  }
}

std::vector<SteinerTopology> enumerate_topologies(int n) {
  if (n < 2 || n > 5) {
    throw std::invalid_argument("exact Steiner oracle supports 2 to 5 terminals, got " +
                                std::to_string(n));
  }
  std::vector<SteinerTopology> out;
  if (n == 2) {
    out.push_back({2, 0, {{0, 1}}});
    return out;
  }
  SteinerTopology base{n, 1, {{0, n}, {1, n}, {2, n}}};
  grow(out, base, 3, n);
  return out;
}

Point fermat_point(Point a, Point b, Point c) {
  const double ab = distance(a, b), bc = distance(b, c), ca = distance(c, a);
  const double scale = std::max({ab, bc, ca});
  if (scale == 0.0) return a;
  const double tiny = 1e-15 * scale;
  if (ab <= tiny || ca <= tiny) return a;
  if (bc <= tiny) return b;

  const double third = 2.0 * std::numbers::pi / 3.0;
  const double A = angle_at(a, b, c);
  const double B = angle_at(b, c, a);
  const double C = angle_at(c, a, b);
  if (A >= third) return a;
  if (B >= third) return b;
  if (C >= third) return c;
  const double wa = bc / std::sin(A + std::numbers::pi / 3.0);
  const double wb = ca / std::sin(B + std::numbers::pi / 3.0);
  const double wc = ab / std::sin(C + std::numbers::pi / 3.0);
  const double w = wa + wb + wc;
  return {(wa * a.x + wb * b.x + wc * c.x) / w, (wa * a.y + wb * b.y + wc * c.y) / w};
}

SteinerSolution optimize_points(const SteinerTopology& topology, const std::vector<Point>& terminals,
                                long max_sweeps) {
  topology.validate();
  if (static_cast<int>(terminals.size()) != topology.terminals) {
    throw std::invalid_argument("terminal count does not match the topology");
  }
  const int n = topology.terminals;
  const auto nb = neighbours(topology);

  double scale = 0.0;
  Point centroid{0.0, 0.0};
  for (Point p : terminals) {
    centroid.x += p.x / n;
    centroid.y += p.y / n;
  }
  for (Point p : terminals) scale = std::max(scale, distance(p, centroid));
  if (scale == 0.0) scale = 1.0;

  // Each Steiner point starts at the mean of its terminal neighbours, pulled toward the centroid.
  std::vector<Point> pos(terminals);
  for (int s = 0; s < topology.steiner; ++s) {
    Point acc = centroid;
    int count = 1;
    for (int v : nb[n + s]) {
      if (v < n) {
        acc.x += terminals[v].x;
        acc.y += terminals[v].y;
        ++count;
      }
    }
    pos.push_back({acc.x / count, acc.y / count});
  }

  long sweeps = settle(nb, n, pos, max_sweeps, scale);

  // Sweeps can stall with two Steiner points glued together; nudging one apart toward each of
  // its other neighbours and re-settling escapes that when it is not optimal.
  const double merge_tol = 1e-9 * scale;
  for (int attempt = 0; attempt < 8; ++attempt) {
    bool improved = false;
    double best_len = length_of(topology, pos);
    for (int s = n; s < n + topology.steiner && !improved; ++s) {
      for (int other : nb[s]) {
        if (other < n || distance(pos[s], pos[other]) > merge_tol) continue;
        for (int target : nb[s]) {
          if (target == other) continue;
          std::vector<Point> trial = pos;
          trial[s].x += 0.05 * (pos[target].x - pos[s].x);
          trial[s].y += 0.05 * (pos[target].y - pos[s].y);
          sweeps += settle(nb, n, trial, max_sweeps, scale);
          const double len = length_of(topology, trial);
          if (len < best_len - 1e-13 * scale) {
            best_len = len;
            pos = trial;
            improved = true;
          }
        }
      }
    }
    if (!improved) break;
  }

  SteinerSolution sol;
  sol.topology = topology;
  sol.terminals = terminals;
  sol.steiner_points.assign(pos.begin() + n, pos.end());
  sol.length = length_of(topology, pos);
  sol.sweeps = sweeps;
  const double collapse_tol = 1e-8 * scale;
  for (int s = n; s < n + topology.steiner; ++s) {
    bool degenerate = false;
    for (int v = 0; v < n + topology.steiner; ++v) {
      if (v != s && distance(pos[s], pos[v]) <= collapse_tol) degenerate = true;
    }
    sol.degenerate.push_back(degenerate);
    std::vector<double> angles;
    if (!degenerate) {
      std::vector<double> headings;
      double rx = 0.0, ry = 0.0;
      for (int v : nb[s]) {
        const double dx = pos[v].x - pos[s].x, dy = pos[v].y - pos[s].y;
        const double len = std::hypot(dx, dy);
        rx += dx / len;
        ry += dy / len;
        headings.push_back(std::atan2(dy, dx));
      }
      sol.max_direction_residual = std::max(sol.max_direction_residual, std::hypot(rx, ry));
      std::sort(headings.begin(), headings.end());
      for (std::size_t k = 0; k < headings.size(); ++k) {
        const double next = k + 1 < headings.size() ? headings[k + 1]
                                                    : headings[0] + 2.0 * std::numbers::pi;
        angles.push_back((next - headings[k]) * 180.0 / std::numbers::pi);
      }
    }
    sol.angles.push_back(std::move(angles));
  }
  return sol;
}

SteinerSolution solve_exact(const std::vector<Point>& terminals) {
  TerminalSet check{terminals, 0};
  check.validate();
  const auto topologies = enumerate_topologies(static_cast<int>(terminals.size()));
  SteinerSolution best;
  best.length = std::numeric_limits<double>::infinity();
  for (const auto& t : topologies) {
    SteinerSolution s = optimize_points(t, terminals);
    if (s.length < best.length) best = std::move(s);
  }
  return best;
}

double tree_length(const SteinerSolution& solution) {
  double len = 0.0;
  for (const auto& [a, b] : solution.topology.edges) {
    len += distance(solution.vertex(a), solution.vertex(b));
  }
  return len;
}

double mst_length(const std::vector<Point>& points) {
  const std::size_t n = points.size();
  if (n < 2) return 0.0;
  std::vector<double> best(n, std::numeric_limits<double>::infinity());
  std::vector<char> in(n, 0);
  best[0] = 0.0;
  double total = 0.0;
  for (std::size_t step = 0; step < n; ++step) {
    std::size_t pick = n;
    for (std::size_t k = 0; k < n; ++k) {
      if (!in[k] && (pick == n || best[k] < best[pick])) pick = k;
    }
    in[pick] = 1;
    total += best[pick];
    for (std::size_t k = 0; k < n; ++k) {
      if (!in[k]) best[k] = std::min(best[k], distance(points[pick], points[k]));
    }
  }
  return total;
}

}  // namespace steiner_pf

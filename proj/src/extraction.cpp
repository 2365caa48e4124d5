#include "steiner_pf/extraction.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <set>
#include <stdexcept>
#include <thread>
#include <unordered_map>

namespace steiner_pf {

namespace {

class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n) {
    for (std::size_t k = 0; k < n; ++k) parent_[k] = k;
  }
  std::size_t find(std::size_t k) {
    while (parent_[k] != k) {
      parent_[k] = parent_[parent_[k]];
      k = parent_[k];
    }
    return k;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent_[std::max(a, b)] = std::min(a, b);
  }

 private:
  std::vector<std::size_t> parent_;
};

using Adjacency = std::map<std::size_t, std::vector<std::size_t>>;

void add_edge(Adjacency& adj, std::size_t a, std::size_t b) {
  auto& na = adj[a];
  if (std::find(na.begin(), na.end(), b) != na.end()) return;
  na.push_back(b);
  adj[b].push_back(a);
}

// 4-adjacent pairs always; diagonal pairs only when no 4-path of length two joins them.
Adjacency mask_graph(const Grid2D& g, const std::vector<char>& mask) {
  Adjacency adj;
  const auto in = [&](int i, int j) { return g.in_range(i, j) && mask[g.index(i, j)]; };
  for (int j = 0; j < g.ny(); ++j) {
    for (int i = 0; i < g.nx(); ++i) {
      if (!in(i, j)) continue;
      const std::size_t k = g.index(i, j);
      adj.try_emplace(k);
      if (in(i + 1, j)) add_edge(adj, k, g.index(i + 1, j));
      if (in(i, j + 1)) add_edge(adj, k, g.index(i, j + 1));
      for (int di : {-1, 1}) {
        if (in(i + di, j + 1) && !in(i + di, j) && !in(i, j + 1)) {
          add_edge(adj, k, g.index(i + di, j + 1));
        }
      }
    }
  }
  return adj;
}

double chord_length(const Grid2D& g, const std::vector<std::size_t>& chain, int stride) {
  if (chain.size() < 2) return 0.0;
  const std::size_t s = static_cast<std::size_t>(std::max(1, stride));
  double len = 0.0;
  std::size_t prev = 0;
  for (std::size_t k = s; k < chain.size(); k += s) {
    len += distance(g.position(chain[prev]), g.position(chain[k]));
    prev = k;
  }
  if (prev != chain.size() - 1) {
    len += distance(g.position(chain[prev]), g.position(chain.back()));
  }
  return len;
}

using EdgeKey = std::pair<std::size_t, std::size_t>;
EdgeKey edge_key(std::size_t a, std::size_t b) { return {std::min(a, b), std::max(a, b)}; }

// Splits the graph into chains between nodes of degree != 2 (plus bare cycles).
std::vector<std::vector<std::size_t>> chains_of(const Adjacency& adj) {
  std::vector<std::vector<std::size_t>> out;
  std::set<EdgeKey> used;
  const auto is_key = [&](std::size_t n) { return adj.at(n).size() != 2; };
  const auto walk = [&](std::size_t start, std::size_t next) {
    std::vector<std::size_t> chain{start, next};
    used.insert(edge_key(start, next));
    std::size_t prev = start;
    std::size_t cur = next;
    while (!is_key(cur) && cur != start) {
      const auto& nb = adj.at(cur);
      const std::size_t nxt = nb[0] == prev ? nb[1] : nb[0];
      if (used.count(edge_key(cur, nxt))) break;
      used.insert(edge_key(cur, nxt));
      chain.push_back(nxt);
      prev = cur;
      cur = nxt;
    }
    return chain;
  };
  for (const auto& [node, nbs] : adj) {
    if (!is_key(node)) continue;
    for (std::size_t nb : nbs) {
      if (!used.count(edge_key(node, nb))) out.push_back(walk(node, nb));
    }
  }
  for (const auto& [node, nbs] : adj) {
    for (std::size_t nb : nbs) {
      if (!used.count(edge_key(node, nb))) out.push_back(walk(node, nb));
    }
  }
  return out;
}

double graph_length(const Grid2D& g, const Adjacency& adj, int stride) {
  double len = 0.0;
  for (const auto& chain : chains_of(adj)) len += chord_length(g, chain, stride);
  return len;
}

}  // namespace

bool ExtractedSet::contains_all_terminals() const {
  return std::all_of(contains_terminals.begin(), contains_terminals.end(),
                     [](const TerminalCoverage& c) { return c.covered; });
}

int count_components(const Grid2D& g, const std::vector<char>& mask) {
  DisjointSets ds(g.size());
  for (int j = 0; j < g.ny(); ++j) {
    for (int i = 0; i < g.nx(); ++i) {
      const std::size_t k = g.index(i, j);
      if (!mask[k]) continue;
      const int di[4] = {1, -1, 0, 1};
      const int dj[4] = {0, 1, 1, 1};
      for (int d = 0; d < 4; ++d) {
        const int a = i + di[d];
        const int b = j + dj[d];
        if (g.in_range(a, b) && mask[g.index(a, b)]) ds.unite(k, g.index(a, b));
      }
    }
  }
  int count = 0;
  for (std::size_t k = 0; k < g.size(); ++k) {
    if (mask[k] && ds.find(k) == k) ++count;
  }
  return count;
}

ExtractedSet extract_set(const ScalarField& u, double tau, const TerminalSet& terminals) {
  if (!(tau > 0.0)) throw std::invalid_argument("extract_set: tau must be positive");
  const Grid2D& g = u.grid();
  ExtractedSet set;
  set.grid = g;
  set.threshold_used = tau;
  set.mask.assign(g.size(), 0);
  for (std::size_t k = 0; k < g.size(); ++k) {
    if (u[k] <= tau) {
      set.mask[k] = 1;
      set.cells.push_back(k);
    }
  }
  set.components = count_components(g, set.mask);
  set.connected = set.components == 1;
  for (Point p : terminals.points) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t k : set.cells) best = std::min(best, distance(p, g.position(k)));
    set.contains_terminals.push_back({best <= 2.0 * g.h(), best});
  }
  return set;
}

double default_threshold(const SolveReport& report) {
  double m = 0.0;
  for (double d : report.terminal_distances) m = std::max(m, d);
  return m + 3.0 * report.grid.h() * report.eps_min();
}

std::vector<std::vector<std::size_t>> terminal_geodesics(const DistanceResult& result,
                                                         const SnappedTerminals& terminals) {
  const Grid2D& g = result.u.grid();
  const ScalarField& u = result.u;
  std::vector<std::vector<std::size_t>> out;
  // node -> (path, position) for the paths traced so far
  std::unordered_map<std::size_t, std::pair<std::size_t, std::size_t>> traced;
  for (std::size_t k = 0; k < terminals.nodes.size(); ++k) {
    if (k == terminals.source_index) continue;
    std::vector<std::size_t> path = backtrack_geodesic(result, terminals.nodes[k].index);
    // Splice onto an earlier path at the first node within two nodes of it, so that geodesics
    // sharing a channel share nodes too (side by side in a flat channel they can stay 2 apart).
    for (std::size_t m = 0; m < path.size() && !traced.empty(); ++m) {
      const Node n = g.node(path[m]);
      std::size_t hit = g.size();
      for (int dj = -2; dj <= 2; ++dj) {
        for (int di = -2; di <= 2; ++di) {
          if (!g.in_range(n.i + di, n.j + dj)) continue;
          const std::size_t q = g.index(n.i + di, n.j + dj);
          if (traced.count(q) && (hit == g.size() || u[q] < u[hit])) hit = q;
        }
      }
      if (hit == g.size()) continue;
      path.resize(m + 1);
      const auto [owner, pos] = traced.at(hit);
      const auto& tail = out[owner];
      if (hit != path.back()) path.push_back(hit);
      path.insert(path.end(), tail.begin() + static_cast<std::ptrdiff_t>(pos) + 1, tail.end());
      break;
    }
    for (std::size_t m = 0; m < path.size(); ++m) traced.emplace(path[m], std::pair{out.size(), m});
    out.push_back(std::move(path));
  }
  return out;
}

double union_length(const Grid2D& grid, const std::vector<std::vector<std::size_t>>& paths,
                    int chord_stride) {
  Adjacency adj;
  for (const auto& path : paths) {
    for (std::size_t k = 1; k < path.size(); ++k) add_edge(adj, path[k - 1], path[k]);
  }
  return graph_length(grid, adj, chord_stride);
}

std::vector<char> skeletonize(const Grid2D& g, const std::vector<char>& mask) {
  std::vector<char> img = mask;
  const auto at = [&](int i, int j) -> int {
    return g.in_range(i, j) && img[g.index(i, j)] ? 1 : 0;
  };
  std::vector<std::size_t> doomed;
  bool changed = true;
  while (changed) {
    changed = false;
    for (int pass = 0; pass < 2; ++pass) {
      doomed.clear();
      for (int j = 0; j < g.ny(); ++j) {
        for (int i = 0; i < g.nx(); ++i) {
          if (!at(i, j)) continue;
          // Neighbours P2..P9 clockwise from north.
          const int p[8] = {at(i, j + 1), at(i + 1, j + 1), at(i + 1, j), at(i + 1, j - 1),
                            at(i, j - 1), at(i - 1, j - 1), at(i - 1, j), at(i - 1, j + 1)};
          int count = 0;
          int transitions = 0;
          for (int k = 0; k < 8; ++k) {
            count += p[k];
            if (!p[k] && p[(k + 1) % 8]) ++transitions;
          }
          if (count < 2 || count > 6 || transitions != 1) continue;
          const bool ok = pass == 0 ? (!(p[0] && p[2] && p[4]) && !(p[2] && p[4] && p[6]))
                                    : (!(p[0] && p[2] && p[6]) && !(p[0] && p[4] && p[6]));
          if (ok) doomed.push_back(g.index(i, j));
        }
      }
      for (std::size_t k : doomed) img[k] = 0;
      if (!doomed.empty()) changed = true;
    }
  }
  return img;
}

std::vector<char> prune_spurs(const Grid2D& g, const std::vector<char>& skeleton, int spur_nodes) {
  std::vector<char> img = skeleton;
  for (int round = 0; round < 4; ++round) {
    const Adjacency adj = mask_graph(g, img);
    bool changed = false;
    for (const auto& [node, nbs] : adj) {
      if (nbs.size() != 1 || !img[node]) continue;
      std::vector<std::size_t> branch{node};
      std::size_t prev = node;
      std::size_t cur = nbs[0];
      while (adj.at(cur).size() == 2) {
        branch.push_back(cur);
        const auto& nb = adj.at(cur);
        const std::size_t nxt = nb[0] == prev ? nb[1] : nb[0];
        prev = cur;
        cur = nxt;
      }
      // Isolated chains (ending in another endpoint) are kept.
      if (adj.at(cur).size() >= 3 && static_cast<int>(branch.size()) < spur_nodes) {
        for (std::size_t b : branch) img[b] = 0;
        changed = true;
      }
    }
    if (!changed) break;
  }
  return img;
}

double skeleton_length(const Grid2D& grid, const std::vector<char>& skeleton, int chord_stride) {
  return graph_length(grid, mask_graph(grid, skeleton), chord_stride);
}

LengthEstimate estimate_length(const ExtractedSet& set, const DistanceResult& result,
                               const SnappedTerminals& terminals, double via_energy,
                               const LengthOptions& options) {
  LengthEstimate est;
  est.via_energy = via_energy;
  est.disconnected = !set.connected;
  est.via_graph =
      union_length(set.grid, terminal_geodesics(result, terminals), options.chord_stride);
  const auto skel = prune_spurs(set.grid, skeletonize(set.grid, set.mask), options.spur_nodes);
  est.via_skeleton = skeleton_length(set.grid, skel, options.chord_stride);
  return est;
}

double i_lambda(const Grid2D& g, const std::vector<char>& mask, double lambda, int n_directions,
                const ILambdaOptions& options) {
  if (!(lambda > 0.0)) throw std::invalid_argument("i_lambda: lambda must be positive");
  if (n_directions < 1) throw std::invalid_argument("i_lambda: need at least one direction");

  std::vector<std::pair<Point, Point>> edges;
  for (int j = 0; j < g.ny(); ++j) {
    for (int i = 0; i < g.nx(); ++i) {
      if (!mask[g.index(i, j)]) continue;
      const int di[4] = {1, -1, 0, 1};
      const int dj[4] = {0, 1, 1, 1};
      for (int d = 0; d < 4; ++d) {
        const int a = i + di[d];
        const int b = j + dj[d];
        if (g.in_range(a, b) && mask[g.index(a, b)]) {
          edges.push_back({g.position(i, j), g.position(a, b)});
        }
      }
    }
  }
  if (edges.empty()) return 0.0;

  const double pitch = g.h() / std::max(1, options.supersample);
  const auto swept_area = [&](int dir) {
    const double theta = 2.0 * std::numbers::pi * dir / n_directions;
    const double cx = std::cos(theta);
    const double sy = std::sin(theta);
    // Scanlines run along nu; s is the coordinate across them, t the one along.
    struct Span {
      long bin;
      double lo;
      double hi;
    };
    std::vector<Span> spans;
    for (const auto& [p, q] : edges) {
      double sp = -sy * p.x + cx * p.y;
      double sq = -sy * q.x + cx * q.y;
      double tp = cx * p.x + sy * p.y;
      double tq = cx * q.x + sy * q.y;
      if (sp > sq) {
        std::swap(sp, sq);
        std::swap(tp, tq);
      }
      if (sq - sp <= 0.0) continue;
      const long first = static_cast<long>(std::ceil(sp / pitch - 0.5));
      for (long b = first;; ++b) {
        const double s = (b + 0.5) * pitch;
        if (s >= sq) break;
        if (s < sp) continue;
        const double t = tp + (tq - tp) * (s - sp) / (sq - sp);
        spans.push_back({b, t - lambda, t + lambda});
      }
    }
    std::sort(spans.begin(), spans.end(), [](const Span& a, const Span& b) {
      return a.bin != b.bin ? a.bin < b.bin : a.lo < b.lo;
    });
    double covered = 0.0;
    std::size_t k = 0;
    while (k < spans.size()) {
      const long bin = spans[k].bin;
      double lo = spans[k].lo;
      double hi = spans[k].hi;
      for (++k; k < spans.size() && spans[k].bin == bin; ++k) {
        if (spans[k].lo > hi) {
          covered += hi - lo;
          lo = spans[k].lo;
        }
        hi = std::max(hi, spans[k].hi);
      }
      covered += hi - lo;
    }
    return covered * pitch;
  };

  std::vector<double> areas(n_directions, 0.0);
  const int workers = std::clamp(options.threads, 1, n_directions);
  if (workers == 1) {
    for (int d = 0; d < n_directions; ++d) areas[d] = swept_area(d);
  } else {
    std::vector<std::jthread> pool;
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (int d = w; d < n_directions; d += workers) areas[d] = swept_area(d);
      });
    }
  }
  double total = 0.0;
  for (double a : areas) total += a;
  return total / (n_directions * lambda);
}

std::vector<Junction> junctions_of_skeleton(const Grid2D& g, const std::vector<char>& skeleton,
                                            const JunctionOptions& options) {
  const auto pruned = prune_spurs(g, skeleton, options.spur_nodes);
  const Adjacency adj = mask_graph(g, pruned);

  std::vector<std::size_t> hubs;
  for (const auto& [node, nbs] : adj) {
    if (nbs.size() >= 3) hubs.push_back(node);
  }
  // Hub nodes within two grid steps of each other form one junction.
  DisjointSets ds(hubs.size());
  for (std::size_t a = 0; a < hubs.size(); ++a) {
    for (std::size_t b = a + 1; b < hubs.size(); ++b) {
      const Node na = g.node(hubs[a]);
      const Node nb = g.node(hubs[b]);
      if (std::max(std::abs(na.i - nb.i), std::abs(na.j - nb.j)) <= 2) ds.unite(a, b);
    }
  }
  std::map<std::size_t, std::vector<std::size_t>> clusters;
  for (std::size_t a = 0; a < hubs.size(); ++a) clusters[ds.find(a)].push_back(hubs[a]);

  std::vector<Junction> out;
  for (const auto& [root, members] : clusters) {
    const std::set<std::size_t> inside(members.begin(), members.end());
    Point c{0.0, 0.0};
    for (std::size_t m : members) {
      c.x += g.position(m).x;
      c.y += g.position(m).y;
    }
    c.x /= members.size();
    c.y /= members.size();

    std::vector<double> headings;
    std::set<std::size_t> seen(inside.begin(), inside.end());
    for (std::size_t m : members) {
      for (std::size_t start : adj.at(m)) {
        if (seen.count(start)) continue;
        std::vector<std::size_t> branch{start};
        seen.insert(start);
        std::size_t prev = m;
        std::size_t cur = start;
        const std::size_t want = static_cast<std::size_t>(options.skip + options.window);
        while (branch.size() < want && adj.at(cur).size() == 2) {
          const auto& nb = adj.at(cur);
          const std::size_t nxt = nb[0] == prev ? nb[1] : nb[0];
          if (inside.count(nxt)) break;
          prev = cur;
          cur = nxt;
          branch.push_back(cur);
          seen.insert(cur);
        }
        const std::size_t lo = std::min<std::size_t>(options.skip, branch.size() - 1);
        // Principal axis of the window, oriented away from the junction.
        double mx = 0.0, my = 0.0;
        const std::size_t n = branch.size() - lo;
        for (std::size_t k = lo; k < branch.size(); ++k) {
          mx += g.position(branch[k]).x;
          my += g.position(branch[k]).y;
        }
        mx /= n;
        my /= n;
        double sxx = 0.0, sxy = 0.0, syy = 0.0;
        for (std::size_t k = lo; k < branch.size(); ++k) {
          const double dx = g.position(branch[k]).x - mx;
          const double dy = g.position(branch[k]).y - my;
          sxx += dx * dx;
          sxy += dx * dy;
          syy += dy * dy;
        }
        double ax = mx - c.x;
        double ay = my - c.y;
        if (n >= 3) {
          const double phi = 0.5 * std::atan2(2.0 * sxy, sxx - syy);
          double ux = std::cos(phi), uy = std::sin(phi);
          if (ux * ax + uy * ay < 0.0) {
            ux = -ux;
            uy = -uy;
          }
          ax = ux;
          ay = uy;
        }
        headings.push_back(std::atan2(ay, ax));
      }
    }
    if (headings.size() < 3) continue;
    std::sort(headings.begin(), headings.end());
    Junction jn;
    jn.branches = static_cast<int>(headings.size());
    jn.position = c;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t m : members) {
      const double d = distance(g.position(m), c);
      if (d < best) {
        best = d;
        jn.node = m;
      }
    }
    for (std::size_t k = 0; k < headings.size(); ++k) {
      const double next = k + 1 < headings.size() ? headings[k + 1]
                                                  : headings[0] + 2.0 * std::numbers::pi;
      jn.angles.push_back((next - headings[k]) * 180.0 / std::numbers::pi);
    }
    out.push_back(jn);
  }
  return out;
}

std::vector<Junction> junction_angles(const ExtractedSet& set, const JunctionOptions& options) {
  return junctions_of_skeleton(set.grid, skeletonize(set.grid, set.mask), options);
}

}  // namespace steiner_pf

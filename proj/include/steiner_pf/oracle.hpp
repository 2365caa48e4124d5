#pragma once

#include <utility>
#include <vector>

#include "steiner_pf/grid.hpp"

namespace steiner_pf {

/// Tree over `terminals` terminal vertices (0..N-1) and `steiner` Steiner vertices (N..N+s-1).
struct SteinerTopology {
  int terminals = 0;
  int steiner = 0;
  std::vector<std::pair<int, int>> edges;

  int vertex_count() const { return terminals + steiner; }
  /// Throws std::invalid_argument unless the edges form a tree with Steiner degrees of 3.
  void validate() const;
};

/// Full topologies on n terminals (n - 2 Steiner points each); n = 2 gives the single edge.
/// (2n - 5)!! topologies for n >= 3. Throws for n outside [2, 5].
std::vector<SteinerTopology> enumerate_topologies(int n);

struct SteinerSolution {
  SteinerTopology topology;
  std::vector<Point> terminals;
  std::vector<Point> steiner_points;
  /// Steiner points that collapsed onto a terminal or another Steiner point.
  std::vector<bool> degenerate;
  double length = 0.0;
  /// Per Steiner point: the three angles (degrees) between consecutive incident edges.
  /// Empty for degenerate points.
  std::vector<std::vector<double>> angles;
  /// Largest |sum of unit edge directions| over non-degenerate Steiner points.
  double max_direction_residual = 0.0;
  long sweeps = 0;

  Point vertex(int v) const {
    return v < topology.terminals ? terminals[v] : steiner_points[v - topology.terminals];
  }
};

/// Fermat-Torricelli point of a triangle; the obtuse vertex when an angle reaches 120 degrees.
Point fermat_point(Point a, Point b, Point c);

/// Places the Steiner points by repeated Fermat re-centering against their three neighbours.
/// Throws std::runtime_error when the sweep does not settle within max_sweeps.
SteinerSolution optimize_points(const SteinerTopology& topology, const std::vector<Point>& terminals,
                                long max_sweeps = 1'000'000);

/// Shortest tree over all full topologies (degenerate trees arise by collapse). 2 <= N <= 5.
SteinerSolution solve_exact(const std::vector<Point>& terminals);

double tree_length(const SteinerSolution& solution);
double mst_length(const std::vector<Point>& points);

}  // namespace steiner_pf

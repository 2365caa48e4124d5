#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "steiner_pf/grid.hpp"

namespace steiner_pf {

inline constexpr std::int64_t kNoParent = -1;

/// Update that froze one node: the upwind parents and the quadratic branch taken.
struct UpdateRecord {
  std::int64_t parent_a = kNoParent;  // horizontal upwind minimum (or the single parent)
  std::int64_t parent_b = kNoParent;  // vertical upwind minimum, two-sided branch only
  bool two_sided = false;
  double a = 0.0;
  double b = 0.0;
  double u = 0.0;
};

struct FmmTape {
  std::vector<std::size_t> acceptance_order;
  std::vector<UpdateRecord> records;  // indexed by node
};

struct DistanceResult {
  ScalarField u;
  ScalarField phi;
  FmmTape tape;
  std::size_t source_node = 0;
};

/// First-order fast marching for |grad u| = phi, u(source) = 0.
/// Throws std::invalid_argument when phi <= 0 somewhere or the source is out of range.
DistanceResult fast_march(const ScalarField& phi, std::size_t source);

std::vector<double> distance_at(const DistanceResult& result,
                                const std::vector<SnappedNode>& terminals);

struct WeightedNode {
  std::size_t node;
  double weight;
};

/// d(sum_k weight_k * u(node_k)) / d phi, by a reverse sweep over the tape.
/// The tape must come from the phi the caller is differentiating at.
ScalarField adjoint_gradient(const DistanceResult& result,
                             const std::vector<WeightedNode>& terminal_weights);

/// Cheaper alternative to adjoint_gradient: each backtracked geodesic deposits half of every
/// step length on both of its endpoints.
ScalarField path_subgradient(const DistanceResult& result,
                             const std::vector<WeightedNode>& terminal_weights);

/// Descent path from `from` to the source: follows the upwind gradient of u with half-node
/// steps rounded to nodes, u strictly decreasing along the path (falling back to the lowest
/// 8-neighbour when a rounded step would not descend).
std::vector<std::size_t> backtrack_geodesic(const DistanceResult& result, std::size_t from);

/// Integral of phi along a node polyline with the trapezoid rule per segment.
double path_integral(const ScalarField& phi, const std::vector<std::size_t>& path);
double path_length(const Grid2D& grid, const std::vector<std::size_t>& path);

}  // namespace steiner_pf

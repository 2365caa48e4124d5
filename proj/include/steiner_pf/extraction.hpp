#pragma once

#include <cstddef>
#include <vector>

#include "steiner_pf/eikonal.hpp"
#include "steiner_pf/functional.hpp"
#include "steiner_pf/grid.hpp"

namespace steiner_pf {

struct TerminalCoverage {
  bool covered = false;
  double distance = 0.0;  // from the terminal to the nearest cell of the set
};

/// Candidate Steiner set: the nodes of a sublevel set of the distance map.
struct ExtractedSet {
  Grid2D grid;
  std::vector<char> mask;
  std::vector<std::size_t> cells;  // ascending node indices
  double threshold_used = 0.0;
  bool connected = false;
  int components = 0;  // 8-connectivity
  std::vector<TerminalCoverage> contains_terminals;

  bool contains_all_terminals() const;
};

/// {u <= tau}; a terminal counts as covered when a cell lies within 2h of it.
ExtractedSet extract_set(const ScalarField& u, double tau, const TerminalSet& terminals);

/// Default sublevel threshold: the largest terminal distance plus 3 h eps_min.
double default_threshold(const SolveReport& report);

/// Number of 8-connected components of a node mask.
int count_components(const Grid2D& grid, const std::vector<char>& mask);

struct LengthOptions {
  /// Branch polylines are measured by chords spanning this many nodes.
  int chord_stride = 4;
  /// Skeleton end branches with fewer nodes than this are pruned before measuring.
  int spur_nodes = 6;
};

struct LengthEstimate {
  double via_energy = 0.0;
  double via_skeleton = 0.0;
  double via_graph = 0.0;
  bool disconnected = false;
};

/// Backtracked geodesic from every non-source terminal.
std::vector<std::vector<std::size_t>> terminal_geodesics(const DistanceResult& result,
                                                         const SnappedTerminals& terminals);

/// Length of the union of node polylines, shared steps counted once.
double union_length(const Grid2D& grid, const std::vector<std::vector<std::size_t>>& paths,
                    int chord_stride = 4);

/// Homotopy-preserving thinning (Zhang-Suen) of a node mask.
std::vector<char> skeletonize(const Grid2D& grid, const std::vector<char>& mask);

/// Skeleton with end branches shorter than spur_nodes removed.
std::vector<char> prune_spurs(const Grid2D& grid, const std::vector<char>& skeleton,
                              int spur_nodes);

/// Polyline length of a thin mask, each branch measured by chords.
double skeleton_length(const Grid2D& grid, const std::vector<char>& skeleton,
                       int chord_stride = 4);

LengthEstimate estimate_length(const ExtractedSet& set, const DistanceResult& result,
                               const SnappedTerminals& terminals, double via_energy,
                               const LengthOptions& options = {});

struct ILambdaOptions {
  int supersample = 4;
  int threads = 1;
};

/// (1 / 2 pi lambda) * integral over directions nu of the area of the set swept along
/// [-lambda, lambda] nu. Cells are joined into the polyline graph of their 8-adjacency, and each
/// direction's area is integrated on scanlines spaced h / supersample.
double i_lambda(const Grid2D& grid, const std::vector<char>& mask, double lambda,
                int n_directions, const ILambdaOptions& options = {});

struct Junction {
  std::size_t node = 0;
  Point position;
  int branches = 0;
  /// Angles in degrees between consecutive branch directions, counter-clockwise.
  std::vector<double> angles;
};

struct JunctionOptions {
  int spur_nodes = 6;
  /// Branch directions are fitted to the nodes [skip, skip + window) away from the junction.
  int skip = 2;
  int window = 10;
};

std::vector<Junction> junction_angles(const ExtractedSet& set, const JunctionOptions& options = {});
std::vector<Junction> junctions_of_skeleton(const Grid2D& grid, const std::vector<char>& skeleton,
                                            const JunctionOptions& options = {});

}  // namespace steiner_pf

#pragma once

#include <iosfwd>
#include <utility>
#include <optional>
#include <string>
#include <vector>

#include "steiner_pf/extraction.hpp"
#include "steiner_pf/functional.hpp"
#include "steiner_pf/oracle.hpp"

namespace steiner_pf {

/// Every knob of a solve run. Keys of the `key = value` config file use the same names with
/// dashes replaced by underscores (grid, h, margin, eps0, eps_ratio, eps_min, ...).
struct RunConfig {
  int grid = 129;
  std::optional<double> h;  // overrides grid when set
  double margin = 0.25;     // times the terminal hull diameter
  std::optional<double> eps0;
  double eps_ratio = 0.7;
  std::optional<double> eps_min;
  int max_iters = 2000;
  double tol = 1e-6;
  WeightRule weight_rule = WeightRule::inv_sqrt_eps;
  double custom_weight = 1.0;
  bool preg = false;
  double preg_exponent = 3.0;
  std::optional<double> tau;
  std::string out = "out";
  /// Save phi every `snapshots` stages (the last stage always); 0 saves only the last.
  int snapshots = 1;
  int threads = 1;
  /// Distance source; the terminal file's choice (or 0) when unset.
  std::optional<std::size_t> source;
  /// Solve once per terminal as source and keep the shortest connected result.
  bool source_search = false;

  void set(const std::string& key, const std::string& value);
  void validate() const;
};

RunConfig parse_config(std::istream& in);
RunConfig load_config(const std::string& path);

Grid2D make_grid(const TerminalSet& terminals, const RunConfig& config);
ContinuationSchedule make_schedule(const Grid2D& grid, const RunConfig& config);
OptimizeOptions make_options(const RunConfig& config);

struct SourceTrial {
  std::size_t source = 0;
  double length = 0.0;  // via_graph
  bool valid = false;   // connected and covering every terminal
  double energy = 0.0;
};

struct SolveArtifacts {
  SolveReport report;
  /// (stage, phi) for the stages selected by the snapshot cadence.
  std::vector<std::pair<std::size_t, ScalarField>> snapshots;
  std::vector<SourceTrial> trials;  // one per source tried
  ExtractedSet set;
  LengthEstimate lengths;
  std::vector<Junction> junctions;
  std::vector<std::vector<std::size_t>> geodesics;
  std::optional<SteinerSolution> oracle;  // for N <= 5
};

/// `options` supplies callbacks and optimizer knobs not covered by the config.
/// optimize -> extract_set -> estimate_length -> junction_angles (+ exact oracle when N <= 5).
SolveArtifacts run_solve(const TerminalSet& terminals, const RunConfig& config,
                         OptimizeOptions options);
SolveArtifacts run_solve(const TerminalSet& terminals, const RunConfig& config);

/// report.txt, phi_stage<k>.csv/.pgm, u_final.csv/.pgm, K.csv, K.pgm, geodesics.csv,
/// junctions.txt (and oracle.txt when available) under config.out.
void write_artifacts(const SolveArtifacts& artifacts, const RunConfig& config);

struct DiagnoseInputs {
  ScalarField phi;
  std::optional<ScalarField> u;
  std::optional<TerminalSet> terminals;
  std::optional<double> eps;  // defaults to the smallest interior phi
  std::optional<double> tau;
  int threads = 1;
  int directions = 360;
};

struct ILambdaRow {
  double lambda = 0.0;
  double value = 0.0;
  double ratio_to_graph = 0.0;  // 0 when via_graph is unknown
};

struct DiagnoseResult {
  double eps = 0.0;
  double worst_slack = 0.0;
  Point worst_position;
  std::optional<std::size_t> set_cells;
  std::optional<double> via_graph;
  std::vector<ILambdaRow> i_lambda;
  std::string i_lambda_of;  // "geodesics" or "set"
};

/// P-inequality slack, and with a distance map (given or marched from the terminals' source)
/// I_lambda for lambda in {4h, 8h, 16h}: of the geodesic union when terminals are known, of the
/// extracted set otherwise.
DiagnoseResult run_diagnose(const DiagnoseInputs& inputs);
void write_diagnose(std::ostream& out, const DiagnoseResult& result);

}  // namespace steiner_pf

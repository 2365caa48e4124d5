#include "steiner_pf/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>

#include "steiner_pf/io.hpp"
#include "steiner_pf/mm_energy.hpp"

namespace steiner_pf {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const char* first = v.data();
  const char* last = v.data() + v.size();
  if (first != last && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, out);
  if (v.empty() || ec != std::errc() || ptr != last || !std::isfinite(out)) {
    throw std::invalid_argument(key + ": expected a number, got '" + v + "'");
  }
  return out;
}

int parse_int(const std::string& key, const std::string& v) {
  int out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || ec != std::errc() || ptr != v.data() + v.size()) {
    throw std::invalid_argument(key + ": expected an integer, got '" + v + "'");
  }
  return out;
}

bool parse_switch(const std::string& key, const std::string& v) {
  if (v == "on" || v == "true" || v == "1") return true;
  if (v == "off" || v == "false" || v == "0") return false;
  throw std::invalid_argument(key + ": expected on or off, got '" + v + "'");
}

void write_file(const std::filesystem::path& path, const std::function<void(std::ostream&)>& body) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  body(out);
}

struct Measured {
  SolveReport report;
  ExtractedSet set;
  LengthEstimate lengths;
  std::vector<std::vector<std::size_t>> geodesics;
  std::vector<std::pair<std::size_t, ScalarField>> snapshots;
};

Measured solve_once(const TerminalSet& terminals, const RunConfig& config,
                    OptimizeOptions options) {
  const Grid2D grid = make_grid(terminals, config);
  const ContinuationSchedule schedule = make_schedule(grid, config);
  const std::size_t last = schedule.eps_values.size() - 1;

  Measured m;
  const auto user_stage_end = options.on_stage_end;
  options.on_stage_end = [&](std::size_t stage, const ScalarField& phi) {
    const bool cadence = config.snapshots > 0 && stage % config.snapshots == 0;
    if (cadence || stage == last) m.snapshots.emplace_back(stage, phi);
    if (user_stage_end) user_stage_end(stage, phi);
  };
  m.report = optimize(terminals, schedule, grid, options);
  const double tau = config.tau ? *config.tau : default_threshold(m.report);
  m.set = extract_set(m.report.distance.u, tau, terminals);
  m.lengths = estimate_length(m.set, m.report.distance, m.report.snapped,
                              m.report.final_stage().energy);
  m.geodesics = terminal_geodesics(m.report.distance, m.report.snapped);
  return m;
}

}  // namespace

void RunConfig::set(const std::string& raw_key, const std::string& raw_value) {
  std::string key = trim(raw_key);
  std::replace(key.begin(), key.end(), '-', '_');
  const std::string v = trim(raw_value);
  if (key == "grid") {
    grid = parse_int(key, v);
  } else if (key == "h") {
    h = parse_double(key, v);
  } else if (key == "margin") {
    margin = parse_double(key, v);
  } else if (key == "eps0") {
    eps0 = parse_double(key, v);
  } else if (key == "eps_ratio") {
    eps_ratio = parse_double(key, v);
  } else if (key == "eps_min") {
    eps_min = parse_double(key, v);
  } else if (key == "max_iters") {
    max_iters = parse_int(key, v);
  } else if (key == "tol") {
    tol = parse_double(key, v);
  } else if (key == "weight_rule") {
    if (v == "inv_sqrt_eps") {
      weight_rule = WeightRule::inv_sqrt_eps;
    } else if (v.rfind("custom:", 0) == 0) {
      weight_rule = WeightRule::custom;
      custom_weight = parse_double(key, v.substr(7));
    } else {
      throw std::invalid_argument(key + ": expected inv_sqrt_eps or custom:V, got '" + v + "'");
    }
  } else if (key == "preg") {
    preg = parse_switch(key, v);
  } else if (key == "preg_exponent") {
    preg_exponent = parse_double(key, v);
  } else if (key == "tau") {
    tau = parse_double(key, v);
  } else if (key == "out") {
    if (v.empty()) throw std::invalid_argument("out: empty path");
    out = v;
  } else if (key == "snapshots") {
    snapshots = parse_int(key, v);
  } else if (key == "threads") {
    threads = parse_int(key, v);
  } else if (key == "source") {
    const int s = parse_int(key, v);
    if (s < 0) throw std::invalid_argument("source: must be non-negative");
    source = static_cast<std::size_t>(s);
  } else if (key == "source_search") {
    source_search = parse_switch(key, v);
  } else {
    throw std::invalid_argument("unknown setting '" + raw_key + "'");
  }
}

void RunConfig::validate() const {
  if (grid < 3) throw std::invalid_argument("grid must be at least 3");
  if (h && !(*h > 0.0)) throw std::invalid_argument("h must be positive");
  if (!(margin > 0.0)) throw std::invalid_argument("margin must be positive");
  if (eps0 && !(*eps0 > 0.0 && *eps0 < 1.0)) throw std::invalid_argument("eps0 must lie in (0, 1)");
  if (!(eps_ratio > 0.0 && eps_ratio < 1.0)) {
    throw std::invalid_argument("eps ratio must lie in (0, 1)");
  }
  if (eps_min && !(*eps_min > 0.0)) throw std::invalid_argument("eps_min must be positive");
  if (max_iters < 1) throw std::invalid_argument("max_iters must be at least 1");
  if (!(tol > 0.0)) throw std::invalid_argument("tol must be positive");
  if (weight_rule == WeightRule::custom && !(custom_weight >= 0.0)) {
    throw std::invalid_argument("custom weight must be non-negative");
  }
  if (!(preg_exponent > 2.0)) throw std::invalid_argument("preg exponent must exceed 2");
  if (tau && !(*tau > 0.0)) throw std::invalid_argument("tau must be positive");
  if (snapshots < 0) throw std::invalid_argument("snapshots must be non-negative");
  if (threads < 1) throw std::invalid_argument("threads must be at least 1");
}

RunConfig parse_config(std::istream& in) {
  RunConfig config;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    const std::string s = trim(line.substr(0, hash));
    if (s.empty()) continue;
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ParseError("expected 'key = value'", lineno);
    try {
      config.set(s.substr(0, eq), s.substr(eq + 1));
    } catch (const std::invalid_argument& e) {
      throw ParseError(e.what(), lineno);
    }
  }
  return config;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return parse_config(in);
}

Grid2D make_grid(const TerminalSet& terminals, const RunConfig& config) {
  config.validate();
  if (config.h) return fit_square_grid_h(terminals, *config.h, config.margin);
  return fit_square_grid(terminals, config.grid, config.margin);
}

ContinuationSchedule make_schedule(const Grid2D& grid, const RunConfig& config) {
  const ContinuationSchedule defaults = ContinuationSchedule::defaults_for(grid);
  const double eps0 = config.eps0 ? *config.eps0 : defaults.eps_values.front();
  const double eps_min = config.eps_min ? *config.eps_min : 2.0 * grid.h();
  ContinuationSchedule s = ContinuationSchedule::geometric(eps0, config.eps_ratio, eps_min);
  s.max_iters = config.max_iters;
  s.tol = config.tol;
  s.validate(grid);
  return s;
}

OptimizeOptions make_options(const RunConfig& config) {
  OptimizeOptions o;
  o.weight_rule = config.weight_rule;
  o.custom_weight = config.custom_weight;
  o.p_reg_enabled = config.preg;
  o.p_reg_exponent = config.preg_exponent;
  return o;
}

SolveArtifacts run_solve(const TerminalSet& terminals, const RunConfig& config,
                         OptimizeOptions options) {
  config.validate();
  terminals.validate();
  options.weight_rule = config.weight_rule;
  options.custom_weight = config.custom_weight;
  options.p_reg_enabled = config.preg;
  options.p_reg_exponent = config.preg_exponent;

  TerminalSet base = terminals;
  if (config.source) {
    if (*config.source >= terminals.points.size()) {
      throw std::invalid_argument("source index " + std::to_string(*config.source) +
                                  " out of range");
    }
    base.source_index = *config.source;
  }

  std::vector<std::size_t> sources{base.source_index};
  if (config.source_search) {
    sources.clear();
    for (std::size_t k = 0; k < terminals.points.size(); ++k) sources.push_back(k);
  }

  SolveArtifacts out;
  std::optional<Measured> best;
  std::size_t best_trial = 0;
  for (std::size_t src : sources) {
    TerminalSet t = base;
    t.source_index = src;
    Measured m = solve_once(t, config, options);
    SourceTrial trial;
    trial.source = src;
    trial.length = m.lengths.via_graph;
    trial.valid = m.set.connected && m.set.contains_all_terminals();
    trial.energy = m.report.final_stage().energy;
    out.trials.push_back(trial);
    const bool better = !best || (trial.valid && !out.trials[best_trial].valid) ||
                        (trial.valid == out.trials[best_trial].valid &&
                         trial.length < out.trials[best_trial].length);
    if (better) {
      best = std::move(m);
      best_trial = out.trials.size() - 1;
    }
  }

  out.report = std::move(best->report);
  out.set = std::move(best->set);
  out.lengths = best->lengths;
  out.geodesics = std::move(best->geodesics);
  out.snapshots = std::move(best->snapshots);
  out.junctions = junction_angles(out.set);
  if (terminals.points.size() <= 5) out.oracle = solve_exact(terminals.points);
  return out;
}

SolveArtifacts run_solve(const TerminalSet& terminals, const RunConfig& config) {
  return run_solve(terminals, config, make_options(config));
}

void write_artifacts(const SolveArtifacts& a, const RunConfig& config) {
  namespace fs = std::filesystem;
  const fs::path dir(config.out);
  fs::create_directories(dir);
  const SolveReport& r = a.report;

  ReportExtras extras;
  extras.set = &a.set;
  extras.lengths = &a.lengths;
  extras.junctions = &a.junctions;
  if (a.oracle) extras.oracle_length = a.oracle->length;
  write_file(dir / "report.txt", [&](std::ostream& o) {
    write_report(o, r, extras);
    if (a.trials.size() > 1) {
      for (const SourceTrial& t : a.trials) {
        o << "source_trial " << t.source << ": length=" << t.length
          << " valid=" << (t.valid ? "yes" : "no") << " energy=" << t.energy << '\n';
      }
    }
  });

  for (const auto& [stage, phi] : a.snapshots) {
    const std::string stem = "phi_stage" + std::to_string(stage);
    write_file(dir / (stem + ".csv"), [&](std::ostream& o) { write_field_csv(o, phi); });
    write_file(dir / (stem + ".pgm"), [&](std::ostream& o) { write_pgm(o, phi); });
  }
  write_file(dir / "u_final.csv", [&](std::ostream& o) { write_field_csv(o, r.distance.u); });
  write_file(dir / "u_final.pgm", [&](std::ostream& o) { write_pgm(o, r.distance.u); });
  write_file(dir / "K.csv", [&](std::ostream& o) { write_set_csv(o, a.set); });
  write_file(dir / "K.pgm", [&](std::ostream& o) { write_mask_pgm(o, a.set.grid, a.set.mask); });
  write_file(dir / "geodesics.csv",
             [&](std::ostream& o) { write_polylines_csv(o, r.grid, a.geodesics); });
  write_file(dir / "junctions.txt", [&](std::ostream& o) { write_junctions(o, a.junctions); });
  if (a.oracle) {
    write_file(dir / "oracle.txt", [&](std::ostream& o) { write_solution_text(o, *a.oracle); });
  }
}

DiagnoseResult run_diagnose(const DiagnoseInputs& in) {
  const Grid2D& grid = in.phi.grid();
  DiagnoseResult res;

  double eps = std::numeric_limits<double>::infinity();
  if (in.eps) {
    eps = *in.eps;
  } else {
    for (int j = 1; j + 1 < grid.ny(); ++j) {
      for (int i = 1; i + 1 < grid.nx(); ++i) eps = std::min(eps, in.phi(i, j));
    }
  }
  if (!(eps > 0.0) || !std::isfinite(eps)) {
    throw std::invalid_argument("cannot infer a positive eps from phi; pass it explicitly");
  }
  res.eps = eps;
  MmParams mm;
  mm.eps = eps;
  const PDiagnostic p = p_diagnostic(in.phi, mm);
  res.worst_slack = p.worst_slack;
  res.worst_position = grid.position(p.worst_node);

  std::optional<DistanceResult> dist;
  std::optional<SnappedTerminals> snapped;
  if (in.terminals) snapped = SnappedTerminals::from(*in.terminals, grid);
  if (in.u) {
    if (in.u->grid().nx() != grid.nx() || in.u->grid().ny() != grid.ny()) {
      throw std::invalid_argument("u and phi are on different grids");
    }
    DistanceResult d;
    d.u = *in.u;
    d.phi = in.phi;
    if (snapped) d.source_node = snapped->source_node();
    dist = std::move(d);
  } else if (snapped) {
    dist = fast_march(in.phi, snapped->source_node());
  }
  if (!dist) return res;

  double tau = 0.0;
  if (in.tau) {
    tau = *in.tau;
  } else if (snapped) {
    for (const auto& s : snapped->nodes) tau = std::max(tau, dist->u[s.index]);
    tau += 3.0 * grid.h() * eps;
  } else {
    tau = 3.0 * grid.h() * eps;
  }
  const TerminalSet terms = in.terminals ? *in.terminals : TerminalSet{};
  ExtractedSet set;
  if (in.terminals) {
    set = extract_set(dist->u, tau, terms);
  } else {
    set.grid = grid;
    set.mask.assign(grid.size(), 0);
    for (std::size_t k = 0; k < grid.size(); ++k) {
      if (dist->u[k] <= tau) {
        set.mask[k] = 1;
        set.cells.push_back(k);
      }
    }
    set.threshold_used = tau;
  }
  res.set_cells = set.cells.size();
  // With terminals, I_lambda is taken over the union of geodesics (a thin set); otherwise over
  // the sublevel set, whose width adds about width * length / lambda.
  std::vector<char> gamma = set.mask;
  res.i_lambda_of = "set";
  if (snapped) {
    const auto paths = terminal_geodesics(*dist, *snapped);
    res.via_graph = union_length(grid, paths);
    gamma.assign(grid.size(), 0);
    for (const auto& path : paths)
      for (std::size_t n : path) gamma[n] = 1;
    res.i_lambda_of = "geodesics";
  }

  ILambdaOptions opts;
  opts.threads = in.threads;
  for (double k : {4.0, 8.0, 16.0}) {
    ILambdaRow row;
    row.lambda = k * grid.h();
    row.value = i_lambda(grid, gamma, row.lambda, in.directions, opts);
    if (res.via_graph && *res.via_graph > 0.0) row.ratio_to_graph = row.value / *res.via_graph;
    res.i_lambda.push_back(row);
  }
  return res;
}

void write_diagnose(std::ostream& out, const DiagnoseResult& r) {
  out << std::setprecision(10);
  out << "eps: " << r.eps << '\n';
  out << "p_worst_slack: " << r.worst_slack << '\n';
  out << "p_worst_at: " << r.worst_position.x << ',' << r.worst_position.y << '\n';
  if (r.set_cells) out << "set_cells: " << *r.set_cells << '\n';
  if (r.via_graph) out << "length_via_graph: " << *r.via_graph << '\n';
  if (!r.i_lambda.empty()) out << "i_lambda_of: " << r.i_lambda_of << '\n';
  for (const ILambdaRow& row : r.i_lambda) {
    out << "i_lambda " << row.lambda << ": " << row.value;
    if (row.ratio_to_graph > 0.0) out << " ratio=" << row.ratio_to_graph;
    out << '\n';
  }
}

}  // namespace steiner_pf

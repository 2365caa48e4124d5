#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "steiner_pf/io.hpp"
#include "steiner_pf/pipeline.hpp"

using namespace steiner_pf;

namespace {

struct SolveFlags {
  std::string terminals;
  std::string config_file;
  // Strings so that only flags actually given override the config file.
  std::optional<std::string> grid, h, margin, eps0, eps_ratio, eps_min, weight_rule, preg, tau,
      out, snapshots, threads, max_iters, tol, source, source_search;
  bool quiet = false;
};

int cmd_solve(const SolveFlags& f) {
  RunConfig config = f.config_file.empty() ? RunConfig{} : load_config(f.config_file);
  const std::pair<const char*, const std::optional<std::string>*> overrides[] = {
      {"grid", &f.grid},           {"h", &f.h},
      {"margin", &f.margin},       {"eps0", &f.eps0},
      {"eps_ratio", &f.eps_ratio}, {"eps_min", &f.eps_min},
      {"weight_rule", &f.weight_rule}, {"preg", &f.preg},
      {"tau", &f.tau},             {"out", &f.out},
      {"snapshots", &f.snapshots}, {"threads", &f.threads},
      {"max_iters", &f.max_iters}, {"tol", &f.tol},
      {"source", &f.source},       {"source_search", &f.source_search},
  };
  for (const auto& [key, value] : overrides) {
    if (*value) config.set(key, **value);
  }
  config.validate();
  const TerminalSet terminals = load_terminals(f.terminals);

  OptimizeOptions options = make_options(config);
  if (!f.quiet) {
    options.on_stage_end = [](std::size_t stage, const ScalarField&) {
      std::cerr << "stage " << stage << " done\n";
    };
  }
  const SolveArtifacts a = run_solve(terminals, config, options);
  write_artifacts(a, config);

  const auto& fin = a.report.final_stage();
  std::cout << "eps_min: " << fin.eps << '\n';
  std::cout << "energy: " << fin.energy << '\n';
  std::cout << "connected: " << (a.set.connected ? "yes" : "no") << '\n';
  std::cout << "contains_terminals: " << (a.set.contains_all_terminals() ? "yes" : "no") << '\n';
  std::cout << "length_via_graph: " << a.lengths.via_graph << '\n';
  std::cout << "junctions: " << a.junctions.size() << '\n';
  if (a.oracle) std::cout << "oracle_length: " << a.oracle->length << '\n';
  std::cout << "output: " << config.out << '\n';
  return 0;
}

int cmd_oracle(const std::string& path, const std::string& out) {
  const TerminalSet terminals = load_terminals(path);
  if (terminals.points.size() > 5) {
    std::cerr << "error: the exact oracle handles at most 5 terminals, got "
              << terminals.points.size() << '\n';
    return 2;
  }
  const SteinerSolution s = solve_exact(terminals.points);
  write_solution_text(std::cout, s);
  std::cout << "mst_length: " << mst_length(terminals.points) << '\n';
  if (!out.empty()) {
    std::filesystem::create_directories(out);
    std::ofstream text(std::filesystem::path(out) / "oracle.txt");
    write_solution_text(text, s);
    std::ofstream edges(std::filesystem::path(out) / "oracle_edges.csv");
    write_solution_edges_csv(edges, s);
  }
  return 0;
}

struct DiagnoseFlags {
  std::string phi;
  std::string u;
  std::string terminals;
  std::optional<double> eps;
  std::optional<double> tau;
  int threads = 1;
  int directions = 360;
};

int cmd_diagnose(const DiagnoseFlags& f) {
  DiagnoseInputs in;
  in.phi = load_field_csv(f.phi);
  if (!f.u.empty()) in.u = load_field_csv(f.u);
  if (!f.terminals.empty()) in.terminals = load_terminals(f.terminals);
  in.eps = f.eps;
  in.tau = f.tau;
  in.threads = f.threads;
  in.directions = f.directions;
  write_diagnose(std::cout, run_diagnose(in));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Phase-field approximation of the Steiner problem"};
  app.require_subcommand(1);

  SolveFlags sf;
  auto* solve = app.add_subcommand("solve", "optimize, extract the set and write the artifacts");
  // -h is taken by the grid spacing here.
  solve->set_help_flag("--help", "Print this help message and exit");
  solve->add_option("terminals", sf.terminals, "terminal file (x,y per line)")
      ->required()
      ->check(CLI::ExistingFile);
  solve->add_option("--config", sf.config_file, "key = value settings file")
      ->check(CLI::ExistingFile);
  solve->add_option("--grid", sf.grid, "nodes per side (default 129)");
  solve->add_option("--h", sf.h, "target grid spacing, overrides --grid");
  solve->add_option("--margin", sf.margin, "padding around the terminals, times their diameter");
  solve->add_option("--eps0", sf.eps0, "first eps of the continuation");
  solve->add_option("--eps-ratio", sf.eps_ratio, "geometric eps ratio (default 0.7)");
  solve->add_option("--eps-min", sf.eps_min, "last eps (default 2h)");
  solve->add_option("--weight-rule", sf.weight_rule, "inv_sqrt_eps or custom:V");
  solve->add_option("--preg", sf.preg, "gradient regularizer on or off");
  solve->add_option("--tau", sf.tau, "sublevel threshold for the extracted set");
  solve->add_option("--out", sf.out, "output directory (default out)");
  solve->add_option("--snapshots", sf.snapshots, "save phi every K stages; 0 keeps the last");
  solve->add_option("--threads", sf.threads, "worker threads");
  solve->add_option("--max-iters", sf.max_iters, "iteration cap per stage");
  solve->add_option("--tol", sf.tol, "stop when a step moves phi by less than this");
  solve->add_option("--source", sf.source, "terminal index used as the distance source");
  solve->add_option("--source-search", sf.source_search,
                    "on: solve from every terminal and keep the shortest set");
  solve->add_flag("--quiet", sf.quiet, "no progress lines");

  std::string oracle_file, oracle_out;
  auto* oracle = app.add_subcommand("oracle", "exact Steiner tree for up to 5 terminals");
  oracle->add_option("terminals", oracle_file, "terminal file")->required()->check(CLI::ExistingFile);
  oracle->add_option("--out", oracle_out, "also write oracle.txt and oracle_edges.csv here");

  DiagnoseFlags df;
  auto* diag = app.add_subcommand("diagnose", "P-inequality slack and I_lambda of saved fields");
  diag->add_option("phi", df.phi, "phi field CSV")->required()->check(CLI::ExistingFile);
  diag->add_option("--u", df.u, "distance field CSV")->check(CLI::ExistingFile);
  diag->add_option("--terminals", df.terminals, "terminal file")->check(CLI::ExistingFile);
  diag->add_option("--eps", df.eps, "eps (default: smallest interior phi)");
  diag->add_option("--tau", df.tau, "sublevel threshold");
  diag->add_option("--threads", df.threads, "worker threads")->check(CLI::PositiveNumber);
  diag->add_option("--directions", df.directions, "directions for I_lambda")
      ->check(CLI::PositiveNumber);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*solve) return cmd_solve(sf);
    if (*oracle) return cmd_oracle(oracle_file, oracle_out);
    if (*diag) return cmd_diagnose(df);
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

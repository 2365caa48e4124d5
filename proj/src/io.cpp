#include "steiner_pf/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

namespace steiner_pf {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream ss(s);
  while (std::getline(ss, cur, sep)) out.push_back(trim(cur));
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

double to_double(const std::string& s, int line) {
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (first != last && *first == '+') ++first;
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || s.empty()) {
    throw ParseError("expected a number, got '" + s + "'", line);
  }
  return v;
}

int to_int(const std::string& s, int line) {
  int v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
    throw ParseError("expected an integer, got '" + s + "'", line);
  }
  return v;
}

std::ostream& full_precision(std::ostream& out) {
  return out << std::setprecision(std::numeric_limits<double>::max_digits10);
}

}  // namespace

void write_field_csv(std::ostream& out, const ScalarField& f) {
  const Grid2D& g = f.grid();
  full_precision(out);
  out << g.nx() << ',' << g.ny() << ',' << g.h() << ',' << g.origin().x << ',' << g.origin().y
      << '\n';
  for (int j = 0; j < g.ny(); ++j) {
    for (int i = 0; i < g.nx(); ++i) {
      if (i) out << ',';
      out << f(i, j);
    }
    out << '\n';
  }
}

ScalarField read_field_csv(std::istream& in) {
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!trim(line).empty()) break;
  }
  const auto head = split(trim(line), ',');
  if (head.size() != 5) throw ParseError("field header must be nx,ny,h,origin_x,origin_y", lineno);
  const int nx = to_int(head[0], lineno);
  const int ny = to_int(head[1], lineno);
  const double h = to_double(head[2], lineno);
  const Point origin{to_double(head[3], lineno), to_double(head[4], lineno)};
  Grid2D grid;
  try {
    grid = Grid2D(nx, ny, h, origin);
  } catch (const std::invalid_argument& e) {
    throw ParseError(e.what(), lineno);
  }
  std::vector<double> values;
  values.reserve(grid.size());
  int rows = 0;
  while (rows < ny && std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto cells = split(trim(line), ',');
    if (static_cast<int>(cells.size()) != nx) {
      throw ParseError("expected " + std::to_string(nx) + " values, got " +
                           std::to_string(cells.size()),
                       lineno);
    }
    for (const auto& c : cells) values.push_back(to_double(c, lineno));
    ++rows;
  }
  if (rows != ny) throw ParseError("expected " + std::to_string(ny) + " rows of values", lineno);
  return ScalarField(grid, std::move(values));
}

void save_field_csv(const std::string& path, const ScalarField& f) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  write_field_csv(out, f);
}

ScalarField load_field_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return read_field_csv(in);
}

void write_pgm(std::ostream& out, const ScalarField& f) {
  const Grid2D& g = f.grid();
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (double v : f.values()) {
    if (v >= kUnreached) continue;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  const double span = hi > lo ? hi - lo : 1.0;
  out << "P2\n" << g.nx() << ' ' << g.ny() << "\n255\n";
  for (int j = g.ny() - 1; j >= 0; --j) {
    for (int i = 0; i < g.nx(); ++i) {
      const double v = f(i, j);
      const int level = v >= kUnreached ? 255 : static_cast<int>(std::lround(255.0 * (v - lo) / span));
      if (i) out << ' ';
      out << std::clamp(level, 0, 255);
    }
    out << '\n';
  }
}

void write_mask_pgm(std::ostream& out, const Grid2D& g, const std::vector<char>& mask) {
  ScalarField f(g, 0.0);
  for (std::size_t k = 0; k < g.size(); ++k) f[k] = mask[k] ? 0.0 : 1.0;
  write_pgm(out, f);
}

TerminalSet parse_terminals(std::istream& in) {
  TerminalSet t;
  std::string line;
  int lineno = 0;
  bool source_given = false;
  int source_line = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string s = trim(line);
    if (s.empty()) continue;
    if (s[0] == '#') {
      std::istringstream ss(s.substr(1));
      std::string word;
      ss >> word;
      if (word == "source") {
        if (!t.points.empty()) throw ParseError("'# source' must precede the points", lineno);
        std::string idx;
        ss >> idx;
        const int k = to_int(idx, lineno);
        if (k < 0) throw ParseError("source index must be non-negative", lineno);
        t.source_index = static_cast<std::size_t>(k);
        source_given = true;
        source_line = lineno;
      }
      continue;
    }
    const auto cells = split(s, ',');
    if (cells.size() != 2) throw ParseError("expected 'x,y'", lineno);
    t.points.push_back({to_double(cells[0], lineno), to_double(cells[1], lineno)});
  }
  if (t.points.empty()) throw ParseError("no terminals found", lineno);
  if (source_given && t.source_index >= t.points.size()) {
    throw ParseError("source index " + std::to_string(t.source_index) + " out of range",
                     source_line);
  }
  try {
    t.validate();
  } catch (const std::invalid_argument& e) {
    throw ParseError(e.what(), 0);
  }
  return t;
}

TerminalSet load_terminals(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return parse_terminals(in);
}

void write_polylines_csv(std::ostream& out, const Grid2D& grid,
                         const std::vector<std::vector<std::size_t>>& paths) {
  full_precision(out);
  for (std::size_t k = 0; k < paths.size(); ++k) {
    out << "# path " << k << '\n';
    for (std::size_t n : paths[k]) {
      const Point p = grid.position(n);
      out << p.x << ',' << p.y << '\n';
    }
  }
}

void write_set_csv(std::ostream& out, const ExtractedSet& set) {
  full_precision(out);
  for (std::size_t n : set.cells) {
    const Point p = set.grid.position(n);
    out << p.x << ',' << p.y << '\n';
  }
}

void write_junctions(std::ostream& out, const std::vector<Junction>& junctions) {
  out << "junctions: " << junctions.size() << '\n';
  for (std::size_t k = 0; k < junctions.size(); ++k) {
    const Junction& j = junctions[k];
    out << "junction " << k << ": x=" << j.position.x << " y=" << j.position.y
        << " branches=" << j.branches << " angles=";
    for (std::size_t a = 0; a < j.angles.size(); ++a) {
      out << (a ? "," : "") << std::fixed << std::setprecision(2) << j.angles[a];
    }
    out.unsetf(std::ios::fixed);
    out << std::setprecision(6) << '\n';
  }
}

void write_solution_text(std::ostream& out, const SteinerSolution& s) {
  full_precision(out);
  out << "length: " << s.length << '\n';
  out << "terminals: " << s.terminals.size() << '\n';
  out << "steiner_points: " << s.steiner_points.size() << '\n';
  for (std::size_t k = 0; k < s.steiner_points.size(); ++k) {
    out << "steiner " << k << ": x=" << s.steiner_points[k].x << " y=" << s.steiner_points[k].y
        << (s.degenerate[k] ? " degenerate" : "");
    if (!s.angles[k].empty()) {
      out << " angles=";
      for (std::size_t a = 0; a < s.angles[k].size(); ++a) {
        out << (a ? "," : "") << s.angles[k][a];
      }
    }
    out << '\n';
  }
  out << "direction_residual: " << s.max_direction_residual << '\n';
  out << "edges: " << s.topology.edges.size() << '\n';
}

void write_solution_edges_csv(std::ostream& out, const SteinerSolution& s) {
  full_precision(out);
  for (const auto& [a, b] : s.topology.edges) {
    const Point p = s.vertex(a), q = s.vertex(b);
    out << p.x << ',' << p.y << ',' << q.x << ',' << q.y << '\n';
  }
}

void write_report(std::ostream& out, const SolveReport& r, const ReportExtras& extras) {
  full_precision(out);
  const Grid2D& g = r.grid;
  out << "grid: " << g.nx() << 'x' << g.ny() << '\n';
  out << "h: " << g.h() << '\n';
  out << "origin: " << g.origin().x << ',' << g.origin().y << '\n';
  out << "terminals: " << r.terminals.size() << '\n';
  out << "source_index: " << r.terminals.source_index << '\n';
  for (std::size_t k = 0; k < r.snapped.nodes.size(); ++k) {
    const auto& s = r.snapped.nodes[k];
    out << "terminal " << k << ": x=" << r.terminals.points[k].x
        << " y=" << r.terminals.points[k].y << " node=" << s.node.i << ',' << s.node.j
        << " snap=" << s.displacement << '\n';
  }
  out << "stages: " << r.stages.size() << '\n';
  for (std::size_t k = 0; k < r.stages.size(); ++k) {
    const StageReport& s = r.stages[k];
    out << "[stage " << k << "]\n";
    out << "eps: " << s.eps << '\n';
    out << "connectivity_weight: " << s.connectivity_weight << '\n';
    out << "energy: " << s.energy << '\n';
    out << "well: " << s.terms.well << '\n';
    out << "dirichlet: " << s.terms.dirichlet << '\n';
    out << "connectivity: " << s.terms.connectivity << '\n';
    out << "regularizer: " << s.terms.regularizer << '\n';
    out << "iterations: " << s.iterations << '\n';
    out << "final_step: " << s.final_step << '\n';
    out << "stop: " << to_string(s.stop) << '\n';
    out << "terminal_distances: ";
    for (std::size_t t = 0; t < s.terminal_distances.size(); ++t) {
      out << (t ? "," : "") << s.terminal_distances[t];
    }
    out << '\n';
    out << "seconds: " << s.seconds << '\n';
  }
  out << "[result]\n";
  if (extras.set) {
    out << "threshold: " << extras.set->threshold_used << '\n';
    out << "set_cells: " << extras.set->cells.size() << '\n';
    out << "components: " << extras.set->components << '\n';
    out << "connected: " << (extras.set->connected ? "yes" : "no") << '\n';
    out << "contains_terminals: " << (extras.set->contains_all_terminals() ? "yes" : "no")
        << '\n';
  }
  if (extras.lengths) {
    out << "length_via_graph: " << extras.lengths->via_graph << '\n';
    out << "length_via_skeleton: " << extras.lengths->via_skeleton << '\n';
    out << "length_via_energy: " << extras.lengths->via_energy << '\n';
  }
  if (extras.junctions) out << "junctions: " << extras.junctions->size() << '\n';
  if (extras.oracle_length > 0.0) {
    out << "oracle_length: " << extras.oracle_length << '\n';
    if (extras.lengths) {
      out << "oracle_gap: " << (extras.lengths->via_graph - extras.oracle_length) / extras.oracle_length
          << '\n';
    }
  }
}

}  // namespace steiner_pf

#pragma once

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "steiner_pf/extraction.hpp"
#include "steiner_pf/functional.hpp"
#include "steiner_pf/grid.hpp"
#include "steiner_pf/oracle.hpp"

namespace steiner_pf {

/// Malformed input; `line` is 1-based, 0 when the problem is not tied to a line.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, int line)
      : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

// Field CSV: header `nx,ny,h,origin_x,origin_y`, then ny rows of nx values, row j = 0 first.
void write_field_csv(std::ostream& out, const ScalarField& f);
ScalarField read_field_csv(std::istream& in);
void save_field_csv(const std::string& path, const ScalarField& f);
ScalarField load_field_csv(const std::string& path);

/// Plain graymap, min-max scaled to 0..255, top image row is j = ny - 1.
void write_pgm(std::ostream& out, const ScalarField& f);
void write_mask_pgm(std::ostream& out, const Grid2D& grid, const std::vector<char>& mask);

/// One `x,y` per line; blank lines and `#` comments are skipped. A first line `# source K`
/// makes point K (0-based) the distance source.
TerminalSet parse_terminals(std::istream& in);
TerminalSet load_terminals(const std::string& path);

/// `x,y` rows; polylines are separated by a `# path k` comment line.
void write_polylines_csv(std::ostream& out, const Grid2D& grid,
                         const std::vector<std::vector<std::size_t>>& paths);
void write_set_csv(std::ostream& out, const ExtractedSet& set);
void write_junctions(std::ostream& out, const std::vector<Junction>& junctions);

void write_solution_text(std::ostream& out, const SteinerSolution& s);
/// `x0,y0,x1,y1` per edge.
void write_solution_edges_csv(std::ostream& out, const SteinerSolution& s);

struct ReportExtras {
  const ExtractedSet* set = nullptr;
  const LengthEstimate* lengths = nullptr;
  const std::vector<Junction>* junctions = nullptr;
  double oracle_length = 0.0;  // <= 0 when unavailable
};

/// `key: value` lines, one block per stage followed by the extraction summary.
void write_report(std::ostream& out, const SolveReport& report, const ReportExtras& extras = {});

}  // namespace steiner_pf

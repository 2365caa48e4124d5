#include <random>
#include <sstream>

#include "doctest.h"
#include "steiner_pf/io.hpp"
#include "support.hpp"

using namespace steiner_pf;
using namespace test_support;

namespace {

int error_line(const std::string& text) {
  std::istringstream in(text);
  try {
    parse_terminals(in);
  } catch (const ParseError& e) {
    return e.line();
  }
  return -1;
}

}  // namespace

TEST_CASE("field CSV round trip is exact") {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> n(0.0, 1e3);
  const Grid2D g(13, 7, 0.0123456789, {-1.1, 3.3});
  ScalarField f(g);
  for (double& v : f.values()) v = n(rng);
  f[5] = kUnreached;
  f[6] = 1e-300;
  std::stringstream ss;
  write_field_csv(ss, f);
  const ScalarField back = read_field_csv(ss);
  CHECK(back.grid() == g);
  CHECK(back == f);
}

TEST_CASE("field CSV errors carry line numbers") {
  auto line_of = [](const std::string& text) {
    std::istringstream in(text);
    try {
      read_field_csv(in);
    } catch (const ParseError& e) {
      return e.line();
    }
    return -1;
  };
  CHECK(line_of("3,3,0.5,0,0\n1,1,1\n1,x,1\n1,1,1\n") == 3);
  CHECK(line_of("3,3,0.5,0,0\n1,1,1\n1,1\n") == 3);
  CHECK(line_of("3,3,0.5\n") == 1);
  CHECK(line_of("3,3,0.5,0,0\n1,1,1\n") >= 2);
  CHECK(line_of("2,3,0.5,0,0\n1,1\n1,1\n1,1\n") == 1);
  CHECK(line_of("") != -1);
}

TEST_CASE("terminal files") {
  std::istringstream in("# a comment\n\n0.25, 0.5\n0.75,0.5\n");
  const TerminalSet t = parse_terminals(in);
  REQUIRE(t.points.size() == 2);
  CHECK(t.points[0] == Point{0.25, 0.5});
  CHECK(t.source_index == 0);

  std::istringstream marked("# source 1\n0,0\n1,0\n0.5,0.8\n");
  CHECK(parse_terminals(marked).source_index == 1);

  CHECK(error_line("") == 0);
  CHECK(error_line("0,0\n1,0\nfoo,1\n") == 3);
  CHECK(error_line("0,0\n1\n") == 2);
  CHECK(error_line("0,0\n1,2,3\n") == 2);
  CHECK(error_line("# source 5\n0,0\n1,0\n") == 1);
  CHECK(error_line("0,0\n# source 1\n1,0\n") == 2);
  CHECK(error_line("0,0\n") == 0);       // a single point
  CHECK(error_line("0,0\n0,0\n") == 0);  // duplicates
}

TEST_CASE("graymap export") {
  const Grid2D g(3, 3, 1.0);
  ScalarField f(g, 0.0);
  f(2, 2) = 2.0;
  f(1, 0) = 1.0;
  f(0, 1) = kUnreached;
  std::ostringstream out;
  write_pgm(out, f);
  CHECK(out.str() == "P2\n3 3\n255\n0 0 255\n255 0 0\n0 128 0\n");
}

TEST_CASE("report lists every stage") {
  SolveReport r;
  r.grid = Grid2D(5, 5, 0.25);
  r.terminals.points = {{0.5, 0.5}, {0.75, 0.5}};
  r.snapped = SnappedTerminals::from(r.terminals, r.grid);
  StageReport s;
  s.eps = 0.5;
  s.energy = 1.25;
  s.stop = StopReason::tolerance;
  r.stages = {s, s};
  std::ostringstream out;
  write_report(out, r);
  const std::string text = out.str();
  CHECK(text.find("stages: 2") != std::string::npos);
  CHECK(text.find("[stage 1]") != std::string::npos);
  CHECK(text.find("stop: tolerance") != std::string::npos);
  CHECK(text.find("energy: 1.25") != std::string::npos);
}

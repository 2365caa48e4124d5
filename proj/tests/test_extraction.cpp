#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "steiner_pf/extraction.hpp"
#include "steiner_pf/functional.hpp"
#include "support.hpp"

using namespace steiner_pf;
using namespace test_support;

namespace {

constexpr double kPi = std::numbers::pi;

// Marks the nodes of a rasterized segment (DDA with one node per step of the major axis).
void draw(const Grid2D& g, std::vector<char>& mask, Point a, Point b, int thickness = 0) {
  const double h = g.h();
  const double steps = std::ceil(std::max(std::abs(b.x - a.x), std::abs(b.y - a.y)) / h);
  for (int s = 0; s <= steps; ++s) {
    const double t = steps > 0 ? s / steps : 0.0;
    const int ci = static_cast<int>(std::lround((a.x + t * (b.x - a.x) - g.origin().x) / h));
    const int cj = static_cast<int>(std::lround((a.y + t * (b.y - a.y) - g.origin().y) / h));
    for (int dj = -thickness; dj <= thickness; ++dj)
      for (int di = -thickness; di <= thickness; ++di)
        if (g.in_range(ci + di, cj + dj)) mask[g.index(ci + di, cj + dj)] = 1;
  }
}

ExtractedSet set_of(const Grid2D& g, const std::vector<char>& mask) {
  ExtractedSet s;
  s.grid = g;
  s.mask = mask;
  for (std::size_t k = 0; k < g.size(); ++k)
    if (mask[k]) s.cells.push_back(k);
  s.components = count_components(g, mask);
  s.connected = s.components == 1;
  return s;
}

// Monte Carlo estimate of (1 / 2 pi lambda) * mean-over-directions area of the segment union
// swept along [-lambda, lambda] nu. Segments are given explicitly, not as a raster.
double i_lambda_monte_carlo(const std::vector<std::pair<Point, Point>>& segs, double lambda,
                            int n_dir, int samples, std::mt19937_64& rng) {
  double lo_x = 1e300, lo_y = 1e300, hi_x = -1e300, hi_y = -1e300;
  for (auto [a, b] : segs) {
    lo_x = std::min({lo_x, a.x, b.x});
    lo_y = std::min({lo_y, a.y, b.y});
    hi_x = std::max({hi_x, a.x, b.x});
    hi_y = std::max({hi_y, a.y, b.y});
  }
  lo_x -= lambda;
  lo_y -= lambda;
  hi_x += lambda;
  hi_y += lambda;
  std::uniform_real_distribution<double> ux(lo_x, hi_x), uy(lo_y, hi_y);
  const double box = (hi_x - lo_x) * (hi_y - lo_y);
  double total = 0.0;
  for (int d = 0; d < n_dir; ++d) {
    const double th = 2 * kPi * (d + 0.5) / n_dir;
    const double nx = std::cos(th), ny = std::sin(th);
    int hit = 0;
    for (int s = 0; s < samples; ++s) {
      const Point p{ux(rng), uy(rng)};
      bool in = false;
      for (auto [a, b] : segs) {
        // p - t nu on segment ab for some |t| <= lambda: solve the 2x2 system.
        const double ex = b.x - a.x, ey = b.y - a.y;
        const double det = ex * (-ny) - ey * (-nx);
        if (std::abs(det) < 1e-14) continue;
        const double rx = p.x - a.x, ry = p.y - a.y;
        const double sa = (rx * (-ny) - ry * (-nx)) / det;
        const double t = (ex * ry - ey * rx) / det;
        if (sa >= 0 && sa <= 1 && std::abs(t) <= lambda) {
          in = true;
          break;
        }
      }
      hit += in;
    }
    total += box * hit / samples;
  }
  return total / n_dir / (2 * lambda) * 2;  // mean area over directions times 2 pi / (2 pi lambda)
}

}  // namespace

TEST_CASE("extract_set thresholds") {
  const Grid2D g = unit_grid(65);
  const double h = g.h();
  const std::size_t src = g.index(32, 32);
  const DistanceResult r = fast_march(ScalarField(g, 1.0), src);
  TerminalSet t;
  t.points = {g.position(src), g.position(40, 32)};

  const ExtractedSet all = extract_set(r.u, 1e9, t);
  CHECK(all.cells.size() == g.size());
  CHECK(all.connected);
  CHECK(all.components == 1);
  CHECK(all.contains_all_terminals());

  const ExtractedSet disk = extract_set(r.u, h, t);
  CHECK(disk.cells.size() == 5);
  CHECK(disk.connected);
  CHECK(disk.contains_terminals[0].covered);
  CHECK_FALSE(disk.contains_terminals[1].covered);
  CHECK(disk.contains_terminals[1].distance == doctest::Approx(7 * h));
  CHECK_FALSE(disk.contains_all_terminals());

  CHECK_THROWS_AS(extract_set(r.u, 0.0, t), std::invalid_argument);

  std::size_t previous = 0;
  std::vector<char> prev_mask(g.size(), 0);
  for (double tau : {0.01, 0.05, 0.1, 0.3, 0.7}) {
    const ExtractedSet s = extract_set(r.u, tau, t);
    for (std::size_t k = 0; k < g.size(); ++k) CHECK(s.mask[k] >= prev_mask[k]);
    CHECK(s.cells.size() >= previous);
    previous = s.cells.size();
    prev_mask = s.mask;
  }
}

TEST_CASE("count_components uses 8-connectivity") {
  const Grid2D g = unit_grid(9);
  std::vector<char> m(g.size(), 0);
  m[g.index(1, 1)] = m[g.index(2, 2)] = 1;
  CHECK(count_components(g, m) == 1);
  m[g.index(5, 5)] = 1;
  CHECK(count_components(g, m) == 2);
  CHECK(count_components(g, std::vector<char>(g.size(), 0)) == 0);
}

TEST_CASE("union_length counts shared steps once") {
  const Grid2D g = unit_grid(65);
  const double h = g.h();
  std::vector<std::size_t> a, b;
  for (int i = 40; i >= 10; --i) a.push_back(g.index(i, 20));
  for (int j = 50; j > 20; --j) b.push_back(g.index(25, j));
  for (int i = 25; i >= 10; --i) b.push_back(g.index(i, 20));
  CHECK(union_length(g, {a}) == doctest::Approx(30 * h));
  CHECK(union_length(g, {a, b}) == doctest::Approx(60 * h));
  CHECK(union_length(g, {a, a}) == doctest::Approx(30 * h));
}

TEST_CASE("terminal geodesics merge into shared paths") {
  const Grid2D g = unit_grid(129);
  // Channel shaped like a Y: stem from the source, two arms.
  ScalarField phi(g, 1.0);
  std::vector<char> chan(g.size(), 0);
  draw(g, chan, g.position(64, 20), g.position(64, 64), 1);
  draw(g, chan, g.position(64, 64), g.position(30, 110), 1);
  draw(g, chan, g.position(64, 64), g.position(98, 110), 1);
  for (std::size_t k = 0; k < g.size(); ++k)
    if (chan[k]) phi[k] = 0.02;
  TerminalSet t;
  t.points = {g.position(64, 20), g.position(30, 110), g.position(98, 110)};
  const SnappedTerminals st = SnappedTerminals::from(t, g);
  const DistanceResult r = fast_march(phi, st.source_node());
  const auto paths = terminal_geodesics(r, st);
  REQUIRE(paths.size() == 2);
  const double stem = 44 * g.h();
  const double arm = distance(g.position(64, 64), g.position(30, 110));
  const double len = union_length(g, paths);
  CHECK(len == doctest::Approx(stem + 2 * arm).epsilon(0.05));
  CHECK(len < path_length(g, paths[0]) + path_length(g, paths[1]) - 0.8 * stem);
}

TEST_CASE("skeletonize thins a thick bar to a line") {
  const Grid2D g = unit_grid(65);
  std::vector<char> bar(g.size(), 0);
  for (int j = 30; j <= 34; ++j)
    for (int i = 10; i <= 50; ++i) bar[g.index(i, j)] = 1;
  const auto skel = skeletonize(g, bar);
  CHECK(count_components(g, skel) == 1);
  int cells = 0;
  for (int i = 0; i < 65; ++i) {
    int column = 0;
    for (int j = 0; j < 65; ++j) column += skel[g.index(i, j)];
    CHECK(column <= 1);
    cells += column;
  }
  CHECK(cells >= 30);
  const double len = skeleton_length(g, prune_spurs(g, skel, 6), 4);
  CHECK(len == doctest::Approx(40 * g.h()).epsilon(0.12));
}

TEST_CASE("length estimates of a straight channel") {
  const Grid2D g = unit_grid(257);
  const double h = g.h();
  const double eps = 4 * h;
  TerminalSet t;
  t.points = {g.position(64, 128), g.position(192, 128)};
  const double gap = distance(t.points[0], t.points[1]);
  ScalarField phi(g, 1.0);
  for (std::size_t k = 0; k < g.size(); ++k) {
    if (g.on_boundary(k)) continue;
    const Point p = g.position(k);
    const double dx = std::max({t.points[0].x - p.x, 0.0, p.x - t.points[1].x});
    const double d = std::hypot(dx, p.y - t.points[0].y);
    phi[k] = std::max(eps, 1.0 - (1.0 - eps) * std::exp(-d / (2 * eps)));
  }
  const SnappedTerminals st = SnappedTerminals::from(t, g);
  FunctionalParams p;
  p.mm.eps = eps;
  const Evaluation ev = s_eps_value(phi, st, p);
  const ExtractedSet set = extract_set(ev.distance.u, ev.terminal_distances[1] + 3 * h * eps, t);
  REQUIRE(set.connected);
  REQUIRE(set.contains_all_terminals());
  const LengthEstimate e = estimate_length(set, ev.distance, st, ev.value);
  CHECK_FALSE(e.disconnected);
  CHECK(e.via_graph == doctest::Approx(gap).epsilon(0.05));
  CHECK(e.via_skeleton == doctest::Approx(gap).epsilon(0.05));
  // S_eps carries the distance term w * eps * gap = sqrt(eps) * gap on top of the length.
  CHECK(e.via_energy == ev.value);
  CHECK(e.via_energy - ev.terms.connectivity == doctest::Approx(gap).epsilon(0.05));
  CHECK(e.via_graph >= gap - 4 * h);

  CHECK(junction_angles(set).empty());
}

TEST_CASE("via_graph is at least the widest terminal gap") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> c(0.2, 0.8);
  const Grid2D g = unit_grid(65);
  for (int trial = 0; trial < 10; ++trial) {
    TerminalSet t;
    for (int k = 0; k < 4; ++k) t.points.push_back({c(rng), c(rng)});
    const ScalarField phi = random_admissible(g, 0.05, rng);
    const SnappedTerminals st = SnappedTerminals::from(t, g);
    const DistanceResult r = fast_march(phi, st.source_node());
    double widest = 0.0;
    for (const auto& a : t.points)
      for (const auto& b : t.points) widest = std::max(widest, distance(a, b));
    CHECK(union_length(g, terminal_geodesics(r, st)) >= widest - 4 * g.h());
  }
}

TEST_CASE("i_lambda of segments") {
  const Grid2D g = unit_grid(257);
  const double h = g.h();
  std::mt19937_64 rng(42);

  SUBCASE("unit-like horizontal segment against the closed form and Monte Carlo") {
    std::vector<char> m(g.size(), 0);
    const Point a = g.position(64, 128), b = g.position(192, 128);
    draw(g, m, a, b);
    const double len = distance(a, b);
    const double lambda = 16 * h;
    const double v = i_lambda(g, m, lambda, 360);
    CHECK(v == doctest::Approx(4 / kPi * len).epsilon(0.02));
    const double mc = i_lambda_monte_carlo({{a, b}}, lambda, 36, 20000, rng);
    CHECK(v == doctest::Approx(mc).epsilon(0.02));
  }
  SUBCASE("two far-apart parallel segments add up") {
    std::vector<char> m(g.size(), 0);
    draw(g, m, g.position(40, 40), g.position(168, 40));
    draw(g, m, g.position(40, 200), g.position(168, 200));
    const double len = 128 * h;
    CHECK(i_lambda(g, m, 16 * h, 360) == doctest::Approx(8 / kPi * len).epsilon(0.02));
  }
  SUBCASE("a single cell is negligible") {
    std::vector<char> m(g.size(), 0);
    m[g.index(100, 100)] = 1;
    const double v = i_lambda(g, m, 16 * h, 360);
    CHECK(v >= 0.0);
    CHECK(v <= 2 * h);
  }
}

TEST_CASE("i_lambda rotation and scaling") {
  const Grid2D g = unit_grid(257);
  const double h = g.h();
  const Point c = g.position(128, 128);
  auto l_shape = [&](double angle, double scale) {
    std::vector<char> m(g.size(), 0);
    auto at = [&](double x, double y) {
      const double ca = std::cos(angle), sa = std::sin(angle);
      return Point{c.x + scale * (ca * x - sa * y), c.y + scale * (sa * x + ca * y)};
    };
    draw(g, m, at(-0.12, -0.1), at(0.12, -0.1));
    draw(g, m, at(-0.12, -0.1), at(-0.12, 0.12));
    return m;
  };
  const double base = i_lambda(g, l_shape(0.0, 1.0), 8 * h, 360);
  for (double deg : {90.0, 45.0, 30.0, 17.0}) {
    CHECK(i_lambda(g, l_shape(deg * kPi / 180, 1.0), 8 * h, 360) ==
          doctest::Approx(base).epsilon(0.02));
  }
  for (double s : {2.0, 3.0}) {
    CHECK(i_lambda(g, l_shape(0.0, s), s * 8 * h, 360) == doctest::Approx(s * base).epsilon(0.02));
  }
}

TEST_CASE("i_lambda is reproducible across thread counts") {
  const Grid2D g = unit_grid(129);
  std::vector<char> m(g.size(), 0);
  draw(g, m, g.position(20, 20), g.position(100, 70));
  ILambdaOptions one, four;
  four.threads = 4;
  CHECK(i_lambda(g, m, 8 * g.h(), 90, one) == i_lambda(g, m, 8 * g.h(), 90, four));
}

TEST_CASE("junction angles of drawn trees") {
  const Grid2D g = unit_grid(257);
  const Point c = g.position(128, 128);
  auto ray = [&](double deg, double len) {
    return Point{c.x + len * std::cos(deg * kPi / 180), c.y + len * std::sin(deg * kPi / 180)};
  };

  SUBCASE("Y at 120 degrees") {
    std::vector<char> m(g.size(), 0);
    for (double deg : {90.0, 210.0, 330.0}) draw(g, m, c, ray(deg, 0.3), 1);
    const auto js = junction_angles(set_of(g, m));
    REQUIRE(js.size() == 1);
    CHECK(js[0].branches == 3);
    CHECK(distance(js[0].position, c) <= 3 * g.h());
    for (double a : js[0].angles) CHECK(a == doctest::Approx(120.0).epsilon(10.0 / 120));
  }
  SUBCASE("T shape") {
    std::vector<char> m(g.size(), 0);
    draw(g, m, ray(180, 0.3), ray(0, 0.3), 1);
    draw(g, m, c, ray(90, 0.3), 1);
    const auto js = junction_angles(set_of(g, m));
    REQUIRE(js.size() == 1);
    std::vector<double> a = js[0].angles;
    std::sort(a.begin(), a.end());
    CHECK(a[0] == doctest::Approx(90).epsilon(0.05));
    CHECK(a[1] == doctest::Approx(90).epsilon(0.05));
    CHECK(a[2] == doctest::Approx(180).epsilon(0.05));
  }
  SUBCASE("two junctions of the square tree") {
    std::vector<char> m(g.size(), 0);
    const double s = 0.5, off = s / (2 * std::sqrt(3.0));
    const Point p{c.x - s / 2 + off, c.y}, q{c.x + s / 2 - off, c.y};
    const Point corners[4] = {{c.x - s / 2, c.y - s / 2}, {c.x - s / 2, c.y + s / 2},
                              {c.x + s / 2, c.y - s / 2}, {c.x + s / 2, c.y + s / 2}};
    draw(g, m, p, q, 1);
    draw(g, m, p, corners[0], 1);
    draw(g, m, p, corners[1], 1);
    draw(g, m, q, corners[2], 1);
    draw(g, m, q, corners[3], 1);
    const auto js = junction_angles(set_of(g, m));
    REQUIRE(js.size() == 2);
    for (const auto& j : js) {
      CHECK(j.branches == 3);
      for (double a : j.angles) CHECK(a == doctest::Approx(120.0).epsilon(10.0 / 120));
    }
  }
}

#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "steiner_pf/grid.hpp"

namespace test_support {

using steiner_pf::Grid2D;
using steiner_pf::ScalarField;

inline Grid2D unit_grid(int n) { return steiner_pf::square_grid(n, 1.0); }

// Interior values uniform in [lo, 1], boundary pinned at 1.
inline ScalarField random_admissible(const Grid2D& g, double lo, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(lo, 1.0);
  ScalarField f(g, 1.0);
  for (int j = 1; j < g.ny() - 1; ++j)
    for (int i = 1; i < g.nx() - 1; ++i) f(i, j) = dist(rng);
  return f;
}

// Smooth bump of radius r nodes centred on an interior node, zero on the boundary.
inline ScalarField bump(const Grid2D& g, int ci, int cj, double r) {
  ScalarField d(g, 0.0);
  for (int j = 1; j < g.ny() - 1; ++j) {
    for (int i = 1; i < g.nx() - 1; ++i) {
      const double s2 = (i - ci) * (i - ci) + (j - cj) * (j - cj);
      if (s2 <= 4 * r * r) d(i, j) = std::exp(-s2 / (r * r));
    }
  }
  return d;
}

inline double dot(const ScalarField& a, const ScalarField& b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

inline ScalarField axpy(const ScalarField& x, double t, const ScalarField& d) {
  ScalarField y = x;
  for (std::size_t k = 0; k < y.size(); ++k) y[k] += t * d[k];
  return y;
}

inline double rel_err(double got, double want, double floor = 1e-12) {
  return std::abs(got - want) / std::max(std::abs(want), floor);
}

}  // namespace test_support

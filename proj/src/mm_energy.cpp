#include "steiner_pf/mm_energy.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace steiner_pf {

namespace {

void require_finite(const ScalarField& phi) {
  const Grid2D& g = phi.grid();
  for (std::size_t k = 0; k < phi.size(); ++k) {
    if (!std::isfinite(phi[k])) {
      Node n = g.node(k);
      throw std::invalid_argument("phi is not finite at node (" + std::to_string(n.i) + ", " +
                                  std::to_string(n.j) + ")");
    }
  }
}

// Area weight of the edge from (i,j) along one axis: h^2, halved on a boundary line.
double edge_weight(const Grid2D& g, bool horizontal, int i, int j) {
  const double h2 = g.h() * g.h();
  if (horizontal) return (j == 0 || j == g.ny() - 1) ? 0.5 * h2 : h2;
  return (i == 0 || i == g.nx() - 1) ? 0.5 * h2 : h2;
}

struct CellGradient {
  double gx;
  double gy;
};

CellGradient cell_gradient(const ScalarField& phi, int i, int j) {
  const double inv = 0.5 / phi.grid().h();
  const double a = phi(i, j), b = phi(i + 1, j), c = phi(i, j + 1), d = phi(i + 1, j + 1);
  return {((b - a) + (d - c)) * inv, ((c - a) + (d - b)) * inv};
}

}  // namespace

double MmParams::regularizer_coeff() const { return p_reg_coeff.value_or(std::pow(eps, 10.0)); }

void MmParams::validate() const {
  if (!(eps > 0.0)) throw std::invalid_argument("MmParams: eps must be positive");
  if (p_reg_enabled) {
    if (!(p_reg_exponent > 2.0)) throw std::invalid_argument("MmParams: p must exceed 2");
    if (!(regularizer_coeff() >= 0.0)) {
      throw std::invalid_argument("MmParams: regularizer coefficient must be >= 0");
    }
  }
}

MmTerms mm_terms(const ScalarField& phi, const MmParams& params) {
  params.validate();
  require_finite(phi);
  const Grid2D& g = phi.grid();
  const double h = g.h();
  const bool reg = params.p_reg_enabled && params.regularizer_coeff() != 0.0;
  const double half_p = 0.5 * params.p_reg_exponent;

  double well = 0.0;
  double dir = 0.0;
  double preg = 0.0;
  for (int j = 0; j < g.ny(); ++j) {
    for (int i = 0; i < g.nx(); ++i) {
      const double v = phi(i, j);
      well += g.quadrature_weight(i, j) * (1.0 - v) * (1.0 - v);
      if (i + 1 < g.nx()) {
        const double d = (phi(i + 1, j) - v) / h;
        dir += edge_weight(g, true, i, j) * d * d;
      }
      if (j + 1 < g.ny()) {
        const double d = (phi(i, j + 1) - v) / h;
        dir += edge_weight(g, false, i, j) * d * d;
      }
      if (reg && i + 1 < g.nx() && j + 1 < g.ny()) {
        const CellGradient cg = cell_gradient(phi, i, j);
        preg += h * h * std::pow(cg.gx * cg.gx + cg.gy * cg.gy, half_p);
      }
    }
  }
  MmTerms t;
  t.well = well / (4.0 * params.eps);
  t.dirichlet = params.eps * dir;
  if (reg) t.regularizer = params.regularizer_coeff() * preg;
  return t;
}

double mm_value(const ScalarField& phi, const MmParams& params) {
  return mm_terms(phi, params).total();
}

ScalarField mm_gradient(const ScalarField& phi, const MmParams& params) {
  params.validate();
  require_finite(phi);
  const Grid2D& g = phi.grid();
  const double h = g.h();
  const bool reg = params.p_reg_enabled && params.regularizer_coeff() != 0.0;
  const double p = params.p_reg_exponent;
  const double reg_coeff = reg ? params.regularizer_coeff() : 0.0;
  const double eps = params.eps;

  ScalarField grad(g, 0.0);
  for (int j = 0; j < g.ny(); ++j) {
    for (int i = 0; i < g.nx(); ++i) {
      const std::size_t k = g.index(i, j);
      const double v = phi[k];
      grad[k] += -g.quadrature_weight(i, j) * (1.0 - v) / (2.0 * eps);
      if (i + 1 < g.nx()) {
        const std::size_t q = g.index(i + 1, j);
        const double t = 2.0 * eps * edge_weight(g, true, i, j) * (phi[q] - v) / (h * h);
        grad[q] += t;
        grad[k] -= t;
      }
      if (j + 1 < g.ny()) {
        const std::size_t q = g.index(i, j + 1);
        const double t = 2.0 * eps * edge_weight(g, false, i, j) * (phi[q] - v) / (h * h);
        grad[q] += t;
        grad[k] -= t;
      }
      if (reg && i + 1 < g.nx() && j + 1 < g.ny()) {
        const CellGradient cg = cell_gradient(phi, i, j);
        const double gsq = cg.gx * cg.gx + cg.gy * cg.gy;
        const double f = reg_coeff * h * h * p * std::pow(gsq, 0.5 * p - 1.0) * 0.5 / h;
        const double tx = f * cg.gx;
        const double ty = f * cg.gy;
        grad[g.index(i, j)] += -tx - ty;
        grad[g.index(i + 1, j)] += tx - ty;
        grad[g.index(i, j + 1)] += -tx + ty;
        grad[g.index(i + 1, j + 1)] += tx + ty;
      }
    }
  }
  for (std::size_t b : boundary_mask(g)) grad[b] = 0.0;
  return grad;
}

PDiagnostic p_diagnostic(const ScalarField& phi, const MmParams& params) {
  params.validate();
  const Grid2D& g = phi.grid();
  ScalarField prim(g);
  for (std::size_t k = 0; k < phi.size(); ++k) prim[k] = phi[k] - 0.5 * phi[k] * phi[k];
  const ScalarField grad_phi = gradient_sq(phi);
  const ScalarField grad_prim = gradient_sq(prim);

  PDiagnostic d{ScalarField(g), ScalarField(g), 0.0, 0};
  d.worst_slack = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < phi.size(); ++k) {
    d.lhs[k] = (1.0 - phi[k]) * (1.0 - phi[k]) / (4.0 * params.eps) + params.eps * grad_phi[k];
    d.rhs[k] = std::sqrt(grad_prim[k]);
    const double slack = d.lhs[k] - d.rhs[k];
    if (slack < d.worst_slack) {
      d.worst_slack = slack;
      d.worst_node = k;
    }
  }
  return d;
}

}  // namespace steiner_pf

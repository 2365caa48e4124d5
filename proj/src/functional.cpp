#include "steiner_pf/functional.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iostream>
#include <sstream>
#include <stdexcept>

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/Sparse>

namespace steiner_pf {

double FunctionalParams::connectivity_weight() const {
  if (weight_rule == WeightRule::inv_sqrt_eps) return 1.0 / std::sqrt(mm.eps);
  return custom_weight;
}

void FunctionalParams::validate() const {
  mm.validate();
  if (weight_rule == WeightRule::custom && !(custom_weight >= 0.0)) {
    throw std::invalid_argument("connectivity weight must be non-negative");
  }
}

SnappedTerminals SnappedTerminals::from(const TerminalSet& terminals, const Grid2D& grid) {
  terminals.validate(grid);
  SnappedTerminals s;
  s.nodes = snap_terminals(terminals, grid);
  s.source_index = terminals.source_index;
  for (std::size_t a = 0; a < s.nodes.size(); ++a) {
    for (std::size_t b = a + 1; b < s.nodes.size(); ++b) {
      if (s.nodes[a].index == s.nodes[b].index) {
        throw std::invalid_argument("terminals " + std::to_string(a) + " and " +
                                    std::to_string(b) + " snap to the same grid node");
      }
    }
  }
  return s;
}

void check_admissible(const ScalarField& phi, double eps) {
  const Grid2D& g = phi.grid();
  for (std::size_t k = 0; k < phi.size(); ++k) {
    const double v = phi[k];
    const Node n = g.node(k);
    const auto fail = [&](const char* what) {
      std::ostringstream msg;
      msg << "phi is not admissible at node (" << n.i << ", " << n.j << "): value " << v << " "
          << what;
      throw std::invalid_argument(msg.str());
    };
    if (!(v >= eps)) fail("is below the lower bound eps");
    if (!(v <= 1.0)) fail("exceeds the upper bound 1");
    if (g.on_boundary(n.i, n.j) && v != 1.0) fail("violates phi = 1 on the boundary");
  }
}

ScalarField project_admissible(const ScalarField& phi, double eps) {
  ScalarField out = phi;
  const Grid2D& g = phi.grid();
  for (std::size_t k = 0; k < out.size(); ++k) {
    double v = out[k];
    if (std::isnan(v)) v = 1.0;
    out[k] = g.on_boundary(k) ? 1.0 : std::clamp(v, eps, 1.0);
  }
  return out;
}

namespace {

void require_terminals(const SnappedTerminals& terminals) {
  if (terminals.nodes.size() < 2) {
    throw std::invalid_argument("the connectivity term needs at least 2 terminals");
  }
}

std::vector<WeightedNode> unit_weights(const SnappedTerminals& terminals, double w) {
  std::vector<WeightedNode> out;
  for (std::size_t k = 0; k < terminals.nodes.size(); ++k) {
    if (k == terminals.source_index) continue;
    out.push_back({terminals.nodes[k].index, w});
  }
  return out;
}

}  // namespace

Evaluation s_eps_value(const ScalarField& phi, const SnappedTerminals& terminals,
                       const FunctionalParams& params) {
  require_terminals(terminals);
  params.validate();
  check_admissible(phi, params.mm.eps);

  Evaluation ev;
  const MmTerms mm = mm_terms(phi, params.mm);
  ev.distance = fast_march(phi, terminals.source_node());
  ev.terminal_distances = distance_at(ev.distance, terminals.nodes);
  double sum = 0.0;
  for (double d : ev.terminal_distances) sum += d;
  ev.terms.well = mm.well;
  ev.terms.dirichlet = mm.dirichlet;
  ev.terms.regularizer = mm.regularizer;
  ev.terms.connectivity = params.connectivity_weight() * sum;
  ev.value = ev.terms.total();
  return ev;
}

ScalarField s_eps_gradient(const ScalarField& phi, const SnappedTerminals& terminals,
                           const FunctionalParams& params, const Evaluation& eval,
                           GradientMode mode) {
  require_terminals(terminals);
  ScalarField grad = mm_gradient(phi, params.mm);
  const double w = params.connectivity_weight();
  if (w != 0.0) {
    const auto weights = unit_weights(terminals, w);
    const ScalarField conn = mode == GradientMode::adjoint
                                 ? adjoint_gradient(eval.distance, weights)
                                 : path_subgradient(eval.distance, weights);
    for (std::size_t k = 0; k < grad.size(); ++k) grad[k] += conn[k];
  }
  for (std::size_t b : boundary_mask(phi.grid())) grad[b] = 0.0;
  return grad;
}

ScalarField s_eps_gradient(const ScalarField& phi, const SnappedTerminals& terminals,
                           const FunctionalParams& params, GradientMode mode) {
  const Evaluation ev = s_eps_value(phi, terminals, params);
  return s_eps_gradient(phi, terminals, params, ev, mode);
}

ContinuationSchedule ContinuationSchedule::geometric(double eps0, double ratio, double eps_min) {
  if (!(eps0 > 0.0) || !(eps_min > 0.0)) throw std::invalid_argument("eps values must be positive");
  if (!(ratio > 0.0 && ratio < 1.0)) throw std::invalid_argument("eps ratio must lie in (0, 1)");
  ContinuationSchedule s;
  double e = eps0;
  // Within 1% of eps_min counts as having reached it.
  while (e > eps_min * 1.01) {
    s.eps_values.push_back(e);
    e *= ratio;
  }
  s.eps_values.push_back(eps_min);
  return s;
}

ContinuationSchedule ContinuationSchedule::defaults_for(const Grid2D& grid) {
  // The admissible band [eps, 1] is empty for eps >= 1.
  const double eps0 = std::min(0.5 * grid.diameter(), kMaxInitialEps);
  return geometric(eps0, 0.7, 2.0 * grid.h());
}

void ContinuationSchedule::validate(const Grid2D& grid) const {
  if (eps_values.empty()) throw std::invalid_argument("continuation schedule is empty");
  for (std::size_t k = 0; k < eps_values.size(); ++k) {
    if (!(eps_values[k] > 0.0)) throw std::invalid_argument("eps values must be positive");
    if (!(eps_values[k] < 1.0)) throw std::invalid_argument("eps values must be below 1");
    if (k > 0 && !(eps_values[k] < eps_values[k - 1])) {
      throw std::invalid_argument("eps values must be strictly decreasing");
    }
  }
  if (eps_values.back() < grid.h()) {
    throw std::invalid_argument("smallest eps is below the grid spacing h");
  }
  if (max_iters < 1) throw std::invalid_argument("max_iters must be >= 1");
  if (!(tol > 0.0)) throw std::invalid_argument("tol must be positive");
}

std::string to_string(StopReason r) {
  switch (r) {
    case StopReason::tolerance: return "tolerance";
    case StopReason::line_search: return "line_search";
    case StopReason::stalled: return "stalled";
    case StopReason::max_iters: return "max_iters";
  }
  return "unknown";
}

namespace {

double sup_diff(const ScalarField& a, const ScalarField& b) {
  double m = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) m = std::max(m, std::abs(a[k] - b[k]));
  return m;
}

double sup_norm(const ScalarField& a) {
  double m = 0.0;
  for (double v : a.values()) m = std::max(m, std::abs(v));
  return m;
}

void check_terminal_margin(const TerminalSet& terminals, const Grid2D& grid) {
  const double margin = 2.0 * grid.h();
  const Point o = grid.origin();
  for (std::size_t k = 0; k < terminals.size(); ++k) {
    const Point p = terminals.points[k];
    const double gap = std::min({p.x - o.x, p.y - o.y, o.x + grid.width() - p.x,
                                 o.y + grid.height() - p.y});
    if (gap < margin) {
      std::ostringstream msg;
      msg << "terminal " << k << " (" << p.x << ", " << p.y << ") is closer than 2h to the "
          << "domain boundary";
      throw std::invalid_argument(msg.str());
    }
  }
}

}  // namespace

ScalarField mm_hessian_direction(const ScalarField& grad, const ScalarField& phi, double eps,
                                 double band) {
  const Grid2D& g = phi.grid();
  const double h = g.h();
  const double a = h * h / (2.0 * eps);
  const double b = 2.0 * eps;
  ScalarField d(g, 0.0);

  std::vector<int> slot(g.size(), -1);
  int free_count = 0;
  for (int j = 1; j + 1 < g.ny(); ++j) {
    for (int i = 1; i + 1 < g.nx(); ++i) {
      const std::size_t k = g.index(i, j);
      const bool at_low = phi[k] <= eps + band && grad[k] > 0.0;
      const bool at_high = phi[k] >= 1.0 - band && grad[k] < 0.0;
      if (at_low || at_high) {
        d[k] = grad[k] / (a + 4.0 * b);
      } else {
        slot[k] = free_count++;
      }
    }
  }
  if (free_count == 0) return d;

  std::vector<Eigen::Triplet<double>> entries;
  entries.reserve(5 * static_cast<std::size_t>(free_count));
  Eigen::VectorXd rhs(free_count);
  for (int j = 1; j + 1 < g.ny(); ++j) {
    for (int i = 1; i + 1 < g.nx(); ++i) {
      const std::size_t k = g.index(i, j);
      const int r = slot[k];
      if (r < 0) continue;
      rhs[r] = grad[k];
      entries.emplace_back(r, r, a + 4.0 * b);
      const std::size_t nbrs[4] = {g.index(i - 1, j), g.index(i + 1, j), g.index(i, j - 1),
                                   g.index(i, j + 1)};
      for (std::size_t q : nbrs) {
        if (slot[q] >= 0) entries.emplace_back(r, slot[q], -b);
      }
    }
  }
  Eigen::SparseMatrix<double> m(free_count, free_count);
  m.setFromTriplets(entries.begin(), entries.end());
  Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper,
                           Eigen::IncompleteCholesky<double>>
      cg;
  cg.setTolerance(1e-8);
  cg.compute(m);
  const Eigen::VectorXd x = cg.solve(rhs);
  for (std::size_t k = 0; k < g.size(); ++k) {
    if (slot[k] >= 0) d[k] = x[slot[k]];
  }
  return d;
}

SolveReport optimize(const TerminalSet& terminals, const ContinuationSchedule& schedule,
                     const Grid2D& grid, const OptimizeOptions& options) {
  terminals.validate(grid);
  check_terminal_margin(terminals, grid);
  schedule.validate(grid);

  const auto warn = [&](const std::string& m) {
    if (options.warn) {
      options.warn(m);
    } else {
      std::cerr << "warning: " << m << "\n";
    }
  };
  if (options.weight_rule == WeightRule::custom) {
    warn("custom connectivity weight is constant in eps; convergence needs a coefficient of "
         "order o((eps ln eps)^-1) that still blows up as eps -> 0");
  }

  SolveReport report;
  report.grid = grid;
  report.terminals = terminals;
  report.snapped = SnappedTerminals::from(terminals, grid);
  const SnappedTerminals& term = report.snapped;

  ScalarField phi = options.initial_phi ? *options.initial_phi : ScalarField(grid, 1.0);
  if (phi.grid().nx() != grid.nx() || phi.grid().ny() != grid.ny()) {
    throw std::invalid_argument("initial phi does not match the grid");
  }
  double step = 0.0;

  for (std::size_t stage = 0; stage < schedule.eps_values.size(); ++stage) {
    const auto t0 = std::chrono::steady_clock::now();
    FunctionalParams params;
    params.mm.eps = schedule.eps_values[stage];
    params.mm.p_reg_enabled = options.p_reg_enabled;
    params.mm.p_reg_exponent = options.p_reg_exponent;
    params.mm.p_reg_coeff = options.p_reg_coeff;
    params.weight_rule = options.weight_rule;
    params.custom_weight = options.custom_weight;

    phi = project_admissible(phi, params.mm.eps);
    Evaluation ev = s_eps_value(phi, term, params);
    ScalarField grad = s_eps_gradient(phi, term, params, ev, options.gradient_mode);
    const auto direction = [&]() {
      if (options.metric == DescentMetric::euclidean) return grad;
      return mm_hessian_direction(grad, phi, params.mm.eps, 1e-3 * params.mm.eps);
    };
    ScalarField dir = direction();
    if (options.metric == DescentMetric::mm_hessian) {
      step = 1.0;
    } else if (step == 0.0) {
      const double gmax = sup_norm(grad);
      step = gmax > 0.0 ? options.initial_move / gmax : 1.0;
    }

    StageReport sr;
    sr.eps = params.mm.eps;
    sr.connectivity_weight = params.connectivity_weight();
    std::vector<double> history{ev.value};

    int it = 0;
    for (; it < schedule.max_iters; ++it) {
      bool accepted = false;
      int halvings = 0;
      const double step_before = step;
      double moved = 0.0;
      ScalarField trial;
      Evaluation trial_ev;
      while (true) {
        trial = phi;
        for (std::size_t k = 0; k < trial.size(); ++k) trial[k] -= step * dir[k];
        trial = project_admissible(trial, params.mm.eps);
        moved = sup_diff(trial, phi);
        if (moved < schedule.tol) break;
        double slope = 0.0;
        for (std::size_t k = 0; k < trial.size(); ++k) slope += grad[k] * (trial[k] - phi[k]);
        trial_ev = s_eps_value(trial, term, params);
        if (trial_ev.value <= ev.value + options.armijo_c * slope) {
          accepted = true;
          break;
        }
        step *= 0.5;
        ++halvings;
      }
      if (!accepted) {
        sr.stop = halvings == 0 ? StopReason::tolerance : StopReason::line_search;
        step = step_before;
        break;
      }

      if (options.check_invariants) {
        check_admissible(trial, params.mm.eps);
        if (trial_ev.value > ev.value) {
          std::ostringstream msg;
          msg << "energy increased at stage " << stage << " iteration " << it << ": "
              << ev.value << " -> " << trial_ev.value << " (step " << step << ")";
          throw SolverInvariantError(msg.str());
        }
      }
      phi = std::move(trial);
      ev = std::move(trial_ev);
      grad = s_eps_gradient(phi, term, params, ev, options.gradient_mode);
      dir = direction();
      history.push_back(ev.value);
      if (options.on_iteration) options.on_iteration({stage, it, params.mm.eps, ev.value, step});

      step *= options.step_growth;

      const int win = options.stall_window;
      if (win > 0 && static_cast<int>(history.size()) > win) {
        const double old = history[history.size() - 1 - win];
        if (old - ev.value <= options.stall_rtol * std::abs(ev.value)) {
          sr.stop = StopReason::stalled;
          ++it;
          break;
        }
      }
    }

    sr.iterations = it;
    sr.energy = ev.value;
    sr.terms = ev.terms;
    sr.final_step = step;
    sr.terminal_distances = ev.terminal_distances;
    sr.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    report.stages.push_back(sr);
    if (options.on_stage_end) options.on_stage_end(stage, phi);

    if (stage + 1 == schedule.eps_values.size()) {
      report.distance = std::move(ev.distance);
      report.terminal_distances = ev.terminal_distances;
    }
  }
  report.phi = std::move(phi);
  return report;
}

}  // namespace steiner_pf

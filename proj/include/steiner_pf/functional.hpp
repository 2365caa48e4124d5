#pragma once

#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "steiner_pf/eikonal.hpp"
#include "steiner_pf/grid.hpp"
#include "steiner_pf/mm_energy.hpp"

namespace steiner_pf {

enum class WeightRule { inv_sqrt_eps, custom };
enum class GradientMode { adjoint, path };
/// Metric in which descent steps are taken. mm_hessian scales the gradient by the inverse of
/// the (constant) Modica-Mortola Hessian on the free nodes and diagonally on the active ones.
enum class DescentMetric { euclidean, mm_hessian };

struct FunctionalParams {
  MmParams mm;
  WeightRule weight_rule = WeightRule::inv_sqrt_eps;
  double custom_weight = 1.0;

  /// Coefficient of sum_i d_phi(x_i, x_1): eps^(-1/2) or the custom constant.
  double connectivity_weight() const;
  void validate() const;
};

struct TermBreakdown {
  double well = 0.0;
  double dirichlet = 0.0;
  double connectivity = 0.0;
  double regularizer = 0.0;

  double total() const { return well + dirichlet + connectivity + regularizer; }
};

/// Terminals after snapping, with the source node singled out.
struct SnappedTerminals {
  std::vector<SnappedNode> nodes;
  std::size_t source_index = 0;

  std::size_t source_node() const { return nodes.at(source_index).index; }
  static SnappedTerminals from(const TerminalSet& terminals, const Grid2D& grid);
};

struct Evaluation {
  double value = 0.0;
  TermBreakdown terms;
  DistanceResult distance;
  std::vector<double> terminal_distances;
};

/// Throws std::invalid_argument naming the first node that leaves [eps, 1] or is not 1 on the
/// boundary.
void check_admissible(const ScalarField& phi, double eps);
ScalarField project_admissible(const ScalarField& phi, double eps);

Evaluation s_eps_value(const ScalarField& phi, const SnappedTerminals& terminals,
                       const FunctionalParams& params);

/// Gradient reusing the distance map stored in `eval` (which must belong to `phi`).
ScalarField s_eps_gradient(const ScalarField& phi, const SnappedTerminals& terminals,
                           const FunctionalParams& params, const Evaluation& eval,
                           GradientMode mode = GradientMode::adjoint);
ScalarField s_eps_gradient(const ScalarField& phi, const SnappedTerminals& terminals,
                           const FunctionalParams& params,
                           GradientMode mode = GradientMode::adjoint);

/// Cap on the default starting eps.
inline constexpr double kMaxInitialEps = 0.5;

struct ContinuationSchedule {
  std::vector<double> eps_values;
  int max_iters = 2000;
  /// Inner loop stops once an accepted projected step moves phi by less than this (sup norm).
  double tol = 1e-6;

  /// eps0 * ratio^k while above eps_min, then eps_min itself.
  static ContinuationSchedule geometric(double eps0, double ratio, double eps_min);
  /// eps0 = min(diam/2, kMaxInitialEps), ratio 0.7, eps_min = 2h.
  static ContinuationSchedule defaults_for(const Grid2D& grid);

  void validate(const Grid2D& grid) const;
};

struct IterationInfo {
  std::size_t stage = 0;
  int iteration = 0;
  double eps = 0.0;
  double energy = 0.0;
  double step = 0.0;
};

struct OptimizeOptions {
  WeightRule weight_rule = WeightRule::inv_sqrt_eps;
  double custom_weight = 1.0;
  bool p_reg_enabled = false;
  double p_reg_exponent = 3.0;
  std::optional<double> p_reg_coeff;
  GradientMode gradient_mode = GradientMode::adjoint;
  DescentMetric metric = DescentMetric::mm_hessian;
  /// Starting field for the first stage; phi = 1 when empty.
  std::optional<ScalarField> initial_phi;

  double armijo_c = 1e-4;
  double step_growth = 1.2;
  /// Sup-norm size of the very first trial move.
  double initial_move = 0.1;
  /// Stage ends early when the energy drops by less than stall_rtol (relative) over
  /// stall_window accepted iterations; 0 disables.
  int stall_window = 100;
  double stall_rtol = 1e-6;

  /// Re-check admissibility and energy monotonicity every iteration.
  bool check_invariants = true;

  std::function<void(const IterationInfo&)> on_iteration;
  std::function<void(std::size_t stage, const ScalarField& phi)> on_stage_end;
  std::function<void(const std::string&)> warn;
};

enum class StopReason { tolerance, line_search, stalled, max_iters };
std::string to_string(StopReason r);

struct StageReport {
  double eps = 0.0;
  double connectivity_weight = 0.0;
  double energy = 0.0;
  TermBreakdown terms;
  int iterations = 0;
  double final_step = 0.0;
  StopReason stop = StopReason::max_iters;
  std::vector<double> terminal_distances;
  double seconds = 0.0;
};

struct SolveReport {
  Grid2D grid;
  TerminalSet terminals;
  SnappedTerminals snapped;
  std::vector<StageReport> stages;
  ScalarField phi;
  DistanceResult distance;  // of the final phi
  std::vector<double> terminal_distances;

  const StageReport& final_stage() const { return stages.back(); }
  double eps_min() const { return stages.back().eps; }
};

/// Internal invariant failure during optimisation (energy increase, inadmissible iterate).
class SolverInvariantError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Descent direction for `grad` at `phi`: nodes within `band` of a bound whose gradient pushes
/// outward are active and get the diagonal of the Hessian; the rest solve
/// (h^2 / 2 eps + 2 eps L) d = grad with Dirichlet zero on active and boundary nodes.
ScalarField mm_hessian_direction(const ScalarField& grad, const ScalarField& phi, double eps,
                                 double band);

/// Projected gradient descent with Armijo backtracking over the continuation schedule, warm
/// started from phi = 1.
SolveReport optimize(const TerminalSet& terminals, const ContinuationSchedule& schedule,
                     const Grid2D& grid, const OptimizeOptions& options = {});

}  // namespace steiner_pf

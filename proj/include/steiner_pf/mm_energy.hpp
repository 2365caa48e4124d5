#pragma once

#include <optional>

#include "steiner_pf/grid.hpp"

namespace steiner_pf {

struct MmParams {
  double eps = 0.1;
  bool p_reg_enabled = false;
  double p_reg_exponent = 3.0;
  /// Unset means eps^10.
  std::optional<double> p_reg_coeff;

  double regularizer_coeff() const;
  void validate() const;
};

struct MmTerms {
  double well = 0.0;       // (1/4eps) * int (1-phi)^2
  double dirichlet = 0.0;  // eps * sum over edges of (difference / h)^2, area weighted
  double regularizer = 0.0;

  double total() const { return well + dirichlet + regularizer; }
};

MmTerms mm_terms(const ScalarField& phi, const MmParams& params);
double mm_value(const ScalarField& phi, const MmParams& params);

/// Exact derivative of the discrete mm_value with respect to each nodal value.
/// Boundary entries are zero since phi is pinned there.
ScalarField mm_gradient(const ScalarField& phi, const MmParams& params);

struct PDiagnostic {
  ScalarField lhs;  // (1/4eps)(1-phi)^2 + eps |grad phi|^2
  ScalarField rhs;  // |grad P(phi)|, P(t) = t - t^2/2
  double worst_slack = 0.0;
  std::size_t worst_node = 0;
};

PDiagnostic p_diagnostic(const ScalarField& phi, const MmParams& params);

}  // namespace steiner_pf

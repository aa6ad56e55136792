#pragma once

#include "tvmcf/flow.hpp"

#include <string>
#include <vector>

namespace tvmcf {

struct DerivativeCheck {
  std::string name;
  double finite_difference = 0.0;
  double finite_difference_half = 0.0;
  double analytic = 0.0;
  /// Error at dt_fd and at dt_fd / 2.
  double abs_error = 0.0;
  double abs_error_half = 0.0;
  double rel_error = 0.0;
  double order_ratio = 0.0;
  /// Relative error of the Richardson combination (4 D(dt/2) - D(dt)) / 3.
  double richardson_rel_error = 0.0;
  /// Quantities whose analytic derivative vanishes are judged on the absolute error only.
  bool absolute_only = false;
  bool passed = false;
};

struct DerivativeReport {
  double dt_fd = 0.0;
  std::vector<DerivativeCheck> checks;
  bool passed = false;
};

struct DerivativeTolerances {
  double rel_tol = 1e-4;
  double abs_tol = 1e-10;
  double ratio_lo = 3.5;
  double ratio_hi = 4.5;
};

/// Centered differences along the explicit flow (no volume projection) of volume, perimeter, ||H-bar - H||^2,
/// ||grad H||^2 and D_F against their first-variation formulas.
DerivativeReport verify_time_derivatives(const ReferenceSurface& f, const FieldBundle& psi, double dt_fd,
                                         const DerivativeTolerances& tol = {});

/// Centered differences of nu, J and H under the normal displacement x + s V nu of the parametrized surface.
DerivativeReport verify_normal_kinematics(const ReferenceSurface& f, const FieldBundle& psi, double dt_fd,
                                          const DerivativeTolerances& tol = {});

}  // namespace tvmcf

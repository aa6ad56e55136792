#pragma once

#include "tvmcf/fields.hpp"

#include <limits>

namespace tvmcf {

constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// Pointwise Frobenius norm squared of the order-j chart derivative tensor.
ScalarField derivative_tensor_sq(const Spectrum& s, int j);

/// (sum_{j<=k} ||D^j f||_p^p)^{1/p} over all components; p = infinity gives the max of sup norms.
double sobolev_norm(const FieldBundle& f, int k, double p);
double lp_norm(const FieldBundle& f, double p);
double c1_norm(const FieldBundle& f);
/// Max over node pairs at chart distance >= 2h of |Df(x) - Df(y)| / d^alpha.
double holder_gradient_seminorm(const FieldBundle& f, double alpha = 0.25);

struct ResolutionReport {
  bool resolved = true;
  double tail_fraction = 0.0;  // worst component
  double tail_norm = 0.0;      // sqrt of the worst tail energy
};

/// Fraction of H^k energy carried by the outer third of the resolved shell.
ResolutionReport check_resolution(const FieldBundle& f, int k = 3, double max_fraction = 1e-6,
                                  double noise_floor = 1e-8);

struct InterpolationReport {
  double lhs = 0.0;
  double rhs = 0.0;
  double ratio = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
  double constant = 1.0;
  bool holds = true;
};

/// Solves 1/p = j/d + (1/r - m/d) alpha + (1 - alpha)/q for alpha with d = n - 1 and validates the tuple.
double interpolation_alpha(int n, int j, int m, double p, double r, double q);
void validate_interpolation_exponents(int n, int j, int m, double p, double r, double q, double alpha);

/// lhs = ||D^j f||_p; rhs = ||D^m f||_r^alpha ||f||_q^(1 - alpha) + beta ||f||_1.
InterpolationReport check_basic_interpolation(const FieldBundle& f, int j, int m, double p, double r, double q,
                                              double alpha);

/// ||D T||_{2p}^2 <= N (2p - 2 + n - 1) ||D^2 T||_r ||T||_q with T = D^order f.
InterpolationReport check_tensor_interpolation(const FieldBundle& f, double p, double q, double r,
                                               int tensor_order = 0);

struct LaplaceBoundsReport {
  double hessian_sq = 0.0;
  double laplacian_sq = 0.0;
  double curvature_term = 0.0;  // int |B|^2 |D f|^2
  double third_sq = 0.0;
  double grad_laplacian_sq = 0.0;
  double h2_sq = 0.0;
  /// Smallest constants making the two inequalities hold for this field.
  double required_c_n = 0.0;
  double required_c_sigma = 0.0;
  bool holds(double c_n, double c_sigma, double tol = 1e-10) const;
};

LaplaceBoundsReport check_laplace_bounds(const FieldBundle& f, const FieldBundle& b_sq);

}  // namespace tvmcf

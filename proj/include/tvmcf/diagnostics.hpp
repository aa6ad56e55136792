#pragma once

#include "tvmcf/graph_surface.hpp"

#include <string>
#include <vector>

namespace tvmcf {

struct TranslateFit {
  Vec3 p = Vec3::Zero();
  /// D_{F+p}(E) at the returned p.
  double residual = 0.0;
  /// D_F(E), the residual of p = 0.
  double residual_zero = 0.0;
  std::string method = "linear_projection";
  /// Graph of E over F + p.
  FieldBundle phi;
  bool regraph_failed = false;
  int evaluations = 0;
};

/// L2 projection of psi onto the translation fields, refined by coordinate descent on D_{F+p}.
TranslateFit fit_translate(const ReferenceSurface& f, const FieldBundle& psi, double step_tol = 1e-12);

struct DiagnosticsRecord {
  double t = 0.0;
  double volume = 0.0;
  double perimeter = 0.0;
  double v_l2 = 0.0;
  double grad_h_l2 = 0.0;
  double lyapunov = 0.0;
  double d_ref = 0.0;
  double d_fit = 0.0;
  double psi_h3 = 0.0;
  double psi_c1 = 0.0;
  double phi_w25 = 0.0;
  Vec3 p = Vec3::Zero();
  /// ||Delta H||^2 on the surface, for the sharper form of the Lyapunov inequality.
  double lap_h_sq = 0.0;
  /// sup |dpsi/dt|
  double dpsi_sup = 0.0;
  bool fit_flagged = false;
};

/// All monitored quantities for the graph psi with geometry g (from build_geometry_param).
DiagnosticsRecord record(const ReferenceSurface& f, const FieldBundle& psi, const SurfaceGeometry& g, double c0,
                         double t = 0.0);

/// H-bar - H per node.
FieldBundle normal_velocity(const SurfaceGeometry& g);

/// Rejects W^{2,q} exponents outside the admissible range for ambient dimension n.
void validate_w2q_exponent(int n, double q);
/// j/3 + (n-1)/10
double decay_interpolation_alpha(int n, int j);
/// (sigma1/2)(1/3 - (n-1)/10), taken with the positive sign.
double sigma0(double sigma1, int n);
/// ||phi||_{W^{2,q}} on the charts of F + p.
double w2q_norm(const FieldBundle& phi, int n, double q);

struct DecayFit {
  double t_a = 0.0;
  double t_b = 0.0;
  double rate = 0.0;
  double amplitude = 0.0;
  double r_squared = 0.0;
  int samples = 0;
};

/// Least squares fit of log y = log A - rate t over the samples with t in [t_a, t_b].
DecayFit fit_decay(const std::vector<double>& t, const std::vector<double>& y, double t_a, double t_b);

/// Smallest eigenvalue of the flat chart Laplacian on the reference charts.
double chart_lambda1(const ReferenceSurface& f);

}  // namespace tvmcf

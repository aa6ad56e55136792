#pragma once

#include "tvmcf/graph_surface.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace tvmcf {

struct TranslationBasis {
  /// Ambient directions e_i whose normal components survived.
  std::vector<int> directions;
  std::vector<FieldBundle> fields;
  /// L2(surface) Gram matrix of the kept fields.
  Eigen::MatrixXd gram;
  std::size_t size() const { return fields.size(); }
};

/// <nu, e_i> per node for each ambient axis; fields with L2 norm below drop_tol are discarded.
TranslationBasis translation_fields(const SurfaceGeometry& g, double drop_tol = 1e-12);

/// Surface-weighted mean subtraction; throws if |int phi| exceeds reject_tol * int |phi|.
FieldBundle mean_free(const SurfaceGeometry& g, const FieldBundle& phi, double reject_tol = 1e-8);

/// int <grad a, grad b> - |B|^2 a b over the surface, after mean removal.
double second_variation_bilinear(const SurfaceGeometry& g, const FieldBundle& a, const FieldBundle& b);
double second_variation(const SurfaceGeometry& g, const FieldBundle& phi);
double h1_norm_sq(const SurfaceGeometry& g, const FieldBundle& phi);
double rayleigh_quotient(const SurfaceGeometry& g, const FieldBundle& phi);

struct StabilityOptions {
  /// Fourier modes with |k_a| <= mode_cutoff on every chart axis span the trial space.
  int mode_cutoff = 4;
  int certify_samples = 20;
  std::uint64_t seed = 1;
};

struct StabilityReport {
  double sigma1 = 0.0;
  FieldBundle minimizer;
  int admissible_dim = 0;
  int basis_dim = 0;
  int translation_dim = 0;
  double residual = 0.0;
  /// Smallest grid-evaluated Rayleigh quotient over random admissible directions.
  double certified_min = 0.0;
  bool mean_zero_enforced = false;
  bool translation_orthogonality_enforced = false;
};

StabilityReport sigma1(const SurfaceGeometry& g, const StabilityOptions& opt = {});

struct TranslationKernelReport {
  double laplace_residual = 0.0;
  double second_variation_max = 0.0;
  bool passed = false;
};

TranslationKernelReport verify_translation_kernel(const SurfaceGeometry& g, double laplace_tol = 1e-8,
                                                  double form_tol = 1e-10);

}  // namespace tvmcf

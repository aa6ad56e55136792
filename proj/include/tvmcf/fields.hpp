#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <random>
#include <vector>

namespace tvmcf {

struct PeriodicGrid {
  int dim = 1;
  std::array<int, 2> n{8, 1};
  std::array<double, 2> length{1.0, 1.0};

  /// Validated constructor: dim in {1,2}, resolutions even and >= 8, positive periods.
  static PeriodicGrid make(int dim, std::array<int, 2> n, std::array<double, 2> length);

  std::size_t size() const { return static_cast<std::size_t>(n[0]) * (dim == 2 ? n[1] : 1); }
  double spacing(int axis) const { return length[axis] / n[axis]; }
  /// Quadrature weight of one node (product of spacings).
  double cell() const { return dim == 2 ? spacing(0) * spacing(1) : spacing(0); }
  double area() const { return dim == 2 ? length[0] * length[1] : length[0]; }
  std::array<double, 2> node(std::size_t idx) const;
  double min_spacing() const;

  bool operator==(const PeriodicGrid& o) const = default;
};

struct ScalarField {
  PeriodicGrid grid;
  std::vector<double> values;

  ScalarField() = default;
  explicit ScalarField(const PeriodicGrid& g) : grid(g), values(g.size(), 0.0) {}
  ScalarField(const PeriodicGrid& g, std::vector<double> v);

  std::size_t size() const { return values.size(); }
  double& operator[](std::size_t i) { return values[i]; }
  double operator[](std::size_t i) const { return values[i]; }
};

using FieldBundle = std::vector<ScalarField>;

struct MultiIndex {
  int a0 = 0;
  int a1 = 0;
  int order() const { return a0 + a1; }
};

/// All chart multi-indices of total order k, sorted by decreasing a0.
std::vector<MultiIndex> multi_indices(int dim, int k);
/// Number of ordered index tuples represented by a multi-index (tensor multiplicity).
int multiplicity(const MultiIndex& a);

/// Fourier coefficients of a real field in r2c layout, normalised so f = sum c_k e^{2 pi i k.x/L}.
struct Spectrum {
  PeriodicGrid grid;
  std::vector<std::complex<double>> c;

  /// Number of stored modes along the halved last axis.
  int half() const { return grid.n[grid.dim - 1] / 2 + 1; }
  /// Signed wavenumbers of a stored mode, and Nyquist flags per axis.
  void mode(std::size_t idx, std::array<int, 2>& k, std::array<bool, 2>& nyquist) const;
  /// Multiplicity of a stored mode in the full (Hermitian) spectrum.
  double weight(std::size_t idx) const;
};

Spectrum forward(const ScalarField& f);
ScalarField inverse(const Spectrum& s);

Spectrum differentiate(const Spectrum& s, MultiIndex a);
ScalarField spectral_derivative(const ScalarField& f, MultiIndex a);
ScalarField spectral_derivative(const Spectrum& s, MultiIndex a);
ScalarField flat_laplacian(const ScalarField& f);

/// Fourier interpolation or truncation onto another resolution of the same chart.
ScalarField resample(const ScalarField& f, std::array<int, 2> n);
/// Resolution for products formed without quadratic aliasing (3/2 rule, rounded up to even).
std::array<int, 2> padded_resolution(const PeriodicGrid& g);

/// Evaluates the Fourier interpolant at an arbitrary chart point.
double evaluate(const Spectrum& s, std::array<double, 2> xi);
/// Shifts a field by a chart vector: returns f(xi + shift), exact for the interpolant.
ScalarField shift(const ScalarField& f, std::array<double, 2> shift);

/// sum f * w * cell, accumulated serially in node order.
double quadrature(const ScalarField& f, const ScalarField& weight);
double quadrature(const ScalarField& f);

/// Compensated sum in index order.
double ordered_sum(const std::vector<double>& v);

struct FourierMode {
  std::array<int, 2> k{0, 0};
  double amplitude = 0.0;
  double phase = 0.0;
};

/// Sum of amplitude * cos(2 pi k.x / L + phase) sampled on the grid.
ScalarField fourier_modes(const PeriodicGrid& g, const std::vector<FourierMode>& modes);

/// Uniform double in [0, 1) from the top 53 bits.
double uniform01(std::mt19937_64& rng);

/// Random real trigonometric polynomial with |k_a| <= band_limit and coefficients uniform in [-1, 1].
ScalarField random_band_limited(const PeriodicGrid& g, int band_limit, std::mt19937_64& rng,
                                bool include_mean = true);

}  // namespace tvmcf

#include "tvmcf/norms.hpp"

#include "tvmcf/torus.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace tvmcf {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double integrate_power(const ScalarField& sq, double p) {
  // sq holds |T|^2 pointwise; returns int |T|^p
  std::vector<double> v(sq.size());
  for (std::size_t i = 0; i < sq.size(); ++i) v[i] = std::pow(std::max(sq.values[i], 0.0), 0.5 * p);
  return ordered_sum(v) * sq.grid.cell();
}

double sup_of_sq(const ScalarField& sq) {
  double m = 0.0;
  for (double v : sq.values) m = std::max(m, v);
  return std::sqrt(m);
}

// ||T||_p over the bundle from pointwise squared norms.
double bundle_norm(const std::vector<ScalarField>& sq, double p) {
  if (std::isinf(p)) {
    double m = 0.0;
    for (const auto& s : sq) m = std::max(m, sup_of_sq(s));
    return m;
  }
  double acc = 0.0;
  for (const auto& s : sq) acc += integrate_power(s, p);
  return std::pow(acc, 1.0 / p);
}

std::vector<ScalarField> tensor_sq(const FieldBundle& f, int j) {
  std::vector<ScalarField> out;
  out.reserve(f.size());
  for (const auto& c : f) out.push_back(derivative_tensor_sq(forward(c), j));
  return out;
}

bool close(double a, double b) { return std::abs(a - b) <= 1e-12 * std::max({1.0, std::abs(a), std::abs(b)}); }

double inv(double p) { return std::isinf(p) ? 0.0 : 1.0 / p; }

}  // namespace

ScalarField derivative_tensor_sq(const Spectrum& s, int j) {
  ScalarField out(s.grid);
  for (const MultiIndex& a : multi_indices(s.grid.dim, j)) {
    const ScalarField d = j == 0 ? inverse(s) : spectral_derivative(s, a);
    const double m = multiplicity(a);
    for (std::size_t i = 0; i < out.size(); ++i) out.values[i] += m * d.values[i] * d.values[i];
  }
  return out;
}

double sobolev_norm(const FieldBundle& f, int k, double p) {
  if (k < 0 || k > 3) throw std::invalid_argument("sobolev_norm: k must lie in 0..3");
  if (!(p >= 1.0)) throw std::invalid_argument("sobolev_norm: p must be >= 1");
  if (std::isinf(p)) {
    double m = 0.0;
    for (int j = 0; j <= k; ++j) m = std::max(m, bundle_norm(tensor_sq(f, j), p));
    return m;
  }
  double acc = 0.0;
  for (int j = 0; j <= k; ++j) {
    for (const auto& s : tensor_sq(f, j)) acc += integrate_power(s, p);
  }
  return std::pow(acc, 1.0 / p);
}

double lp_norm(const FieldBundle& f, double p) { return bundle_norm(tensor_sq(f, 0), p); }

double c1_norm(const FieldBundle& f) { return bundle_norm(tensor_sq(f, 0), kInfinity) + bundle_norm(tensor_sq(f, 1), kInfinity); }

double holder_gradient_seminorm(const FieldBundle& f, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("holder exponent must lie in (0,1)");
  double best = 0.0;
  for (const auto& c : f) {
    const PeriodicGrid& g = c.grid;
    const Spectrum s = forward(c);
    std::vector<ScalarField> grad;
    for (int a = 0; a < g.dim; ++a) grad.push_back(spectral_derivative(s, a == 0 ? MultiIndex{1, 0} : MultiIndex{0, 1}));
    const double dmin = 2.0 * g.min_spacing();
    const std::size_t n = g.size();
    for (std::size_t i = 0; i < n; ++i) {
      const auto xi = g.node(i);
      for (std::size_t j = i + 1; j < n; ++j) {
        const auto xj = g.node(j);
        double d2 = 0.0;
        double v2 = 0.0;
        for (int a = 0; a < g.dim; ++a) {
          const double d = g.length[a] * wrap_difference((xi[a] - xj[a]) / g.length[a]);
          d2 += d * d;
          const double dv = grad[a].values[i] - grad[a].values[j];
          v2 += dv * dv;
        }
        const double d = std::sqrt(d2);
        if (d < dmin * (1.0 - 1e-12)) continue;
        best = std::max(best, std::sqrt(v2) / std::pow(d, alpha));
      }
    }
  }
  return best;
}

ResolutionReport check_resolution(const FieldBundle& f, int k, double max_fraction, double noise_floor) {
  ResolutionReport rep;
  for (const auto& c : f) {
    const Spectrum s = forward(c);
    const PeriodicGrid& g = c.grid;
    double total = 0.0;
    double tail = 0.0;
    for (std::size_t idx = 0; idx < s.c.size(); ++idx) {
      std::array<int, 2> kk;
      std::array<bool, 2> nyq;
      s.mode(idx, kk, nyq);
      double kap2 = 0.0;
      double shell = 0.0;
      for (int a = 0; a < g.dim; ++a) {
        const double w = kTwoPi * kk[a] / g.length[a];
        kap2 += w * w;
        shell = std::max(shell, std::abs(kk[a]) / (0.5 * g.n[a]));
      }
      double factor = 0.0;
      double pw = 1.0;
      for (int j = 0; j <= k; ++j) {
        factor += pw;
        pw *= kap2;
      }
      const double e = s.weight(idx) * std::norm(s.c[idx]) * factor * g.area();
      total += e;
      if (shell > 2.0 / 3.0) tail += e;
    }
    const double frac = total > 0.0 ? tail / total : 0.0;
    const double tnorm = std::sqrt(tail);
    if (frac > rep.tail_fraction) rep.tail_fraction = frac;
    rep.tail_norm = std::max(rep.tail_norm, tnorm);
    if (frac >= max_fraction && tnorm > noise_floor) rep.resolved = false;
  }
  return rep;
}

double interpolation_alpha(int n, int j, int m, double p, double r, double q) {
  const double d = n - 1;
  const double num = inv(p) - j / d - 1.0 / q;
  const double den = 1.0 / r - m / d - 1.0 / q;
  if (std::abs(den) < 1e-14) throw std::invalid_argument("interpolation exponents do not determine alpha");
  const double alpha = num / den;
  validate_interpolation_exponents(n, j, m, p, r, q, alpha);
  return alpha;
}

void validate_interpolation_exponents(int n, int j, int m, double p, double r, double q, double alpha) {
  if (n < 2) throw std::invalid_argument("interpolation: ambient dimension must be >= 2");
  if (!(j >= 0 && j < m)) throw std::invalid_argument("interpolation: need 0 <= j < m");
  if (!(r >= 1.0 && std::isfinite(r)) || !(q >= 1.0 && std::isfinite(q)))
    throw std::invalid_argument("interpolation: need 1 <= r, q < infinity");
  if (!(p >= 1.0)) throw std::invalid_argument("interpolation: need p >= 1");
  const double d = n - 1;
  const double rhs = j / d + (1.0 / r - m / d) * alpha + (1.0 - alpha) / q;
  if (!close(inv(p), rhs)) throw std::invalid_argument("interpolation: exponent identity violated");
  const double lo = static_cast<double>(j) / m;
  if (alpha < lo - 1e-12 || alpha > 1.0 + 1e-12) throw std::invalid_argument("interpolation: alpha outside [j/m, 1]");
  const double crit = d / (m - j);
  if (close(r, crit) && !close(crit, 1.0) && close(alpha, 1.0))
    throw std::invalid_argument("interpolation: excluded endpoint r = (n-1)/(m-j), alpha = 1");
}

InterpolationReport check_basic_interpolation(const FieldBundle& f, int j, int m, double p, double r, double q,
                                              double alpha) {
  if (f.empty()) throw std::invalid_argument("empty field bundle");
  const int n = f.front().grid.dim + 1;
  validate_interpolation_exponents(n, j, m, p, r, q, alpha);
  InterpolationReport rep;
  rep.alpha = alpha;
  rep.lhs = bundle_norm(tensor_sq(f, j), p);
  const double top = bundle_norm(tensor_sq(f, m), r);
  const double low = bundle_norm(tensor_sq(f, 0), q);
  double beta = 1.0;
  if (j >= 1) {
    beta = 0.0;
  } else if (f.size() == 1) {
    const double mean = quadrature(f.front());
    const double l1 = bundle_norm(tensor_sq(f, 0), 1.0);
    if (std::abs(mean) <= 1e-12 * std::max(l1, 1e-300)) beta = 0.0;
  }
  rep.beta = beta;
  const double l1 = beta > 0.0 ? bundle_norm(tensor_sq(f, 0), 1.0) : 0.0;
  rep.rhs = std::pow(top, alpha) * std::pow(low, 1.0 - alpha) + beta * l1;
  rep.ratio = rep.rhs > 0.0 ? rep.lhs / rep.rhs : 0.0;
  return rep;
}

InterpolationReport check_tensor_interpolation(const FieldBundle& f, double p, double q, double r, int tensor_order) {
  if (f.empty()) throw std::invalid_argument("empty field bundle");
  if (!(p >= 1.0 && q >= 1.0 && r >= 1.0)) throw std::invalid_argument("tensor interpolation: exponents must be >= 1");
  if (!close(inv(p), inv(q) + inv(r))) throw std::invalid_argument("tensor interpolation: need 1/p = 1/q + 1/r");
  if (tensor_order < 0 || tensor_order > 1) throw std::invalid_argument("tensor interpolation: order must be 0 or 1");
  const int n = f.front().grid.dim + 1;
  InterpolationReport rep;
  rep.constant = static_cast<double>(f.size()) * (2.0 * p - 2.0 + n - 1);
  const double grad = bundle_norm(tensor_sq(f, tensor_order + 1), 2.0 * p);
  rep.lhs = grad * grad;
  rep.rhs = rep.constant * bundle_norm(tensor_sq(f, tensor_order + 2), r) * bundle_norm(tensor_sq(f, tensor_order), q);
  rep.ratio = rep.rhs > 0.0 ? rep.lhs / rep.rhs : 0.0;
  const double scale = std::max(rep.lhs, rep.rhs);
  rep.holds = rep.lhs <= rep.rhs + 1e-12 * scale + 1e-300;
  return rep;
}

bool LaplaceBoundsReport::holds(double c_n, double c_sigma, double tol) const {
  const bool first = hessian_sq <= laplacian_sq + c_n * curvature_term + tol * std::max(hessian_sq, 1e-300);
  const bool second = third_sq <= grad_laplacian_sq + c_sigma * h2_sq + tol * std::max(third_sq, 1e-300);
  return first && second;
}

LaplaceBoundsReport check_laplace_bounds(const FieldBundle& f, const FieldBundle& b_sq) {
  if (f.size() != b_sq.size()) throw std::invalid_argument("check_laplace_bounds: component mismatch");
  LaplaceBoundsReport rep;
  for (std::size_t c = 0; c < f.size(); ++c) {
    if (!(f[c].grid == b_sq[c].grid)) throw std::invalid_argument("check_laplace_bounds: grid mismatch");
    const Spectrum s = forward(f[c]);
    rep.hessian_sq += quadrature(derivative_tensor_sq(s, 2));
    rep.third_sq += quadrature(derivative_tensor_sq(s, 3));
    const ScalarField lap = flat_laplacian(f[c]);
    ScalarField l2(lap.grid);
    for (std::size_t i = 0; i < lap.size(); ++i) l2.values[i] = lap.values[i] * lap.values[i];
    rep.laplacian_sq += quadrature(l2);
    rep.grad_laplacian_sq += quadrature(derivative_tensor_sq(forward(lap), 1));
    const ScalarField g1 = derivative_tensor_sq(s, 1);
    rep.curvature_term += quadrature(g1, b_sq[c]);
    rep.h2_sq += quadrature(derivative_tensor_sq(s, 0)) + quadrature(g1) + quadrature(derivative_tensor_sq(s, 2));
  }
  auto required = [](double lhs, double base, double term) {
    const double excess = lhs - base;
    if (excess <= 1e-12 * std::max(lhs, 1e-300)) return 0.0;
    return term > 0.0 ? excess / term : kInfinity;
  };
  rep.required_c_n = required(rep.hessian_sq, rep.laplacian_sq, rep.curvature_term);
  rep.required_c_sigma = required(rep.third_sq, rep.grad_laplacian_sq, rep.h2_sq);
  return rep;
}

}  // namespace tvmcf

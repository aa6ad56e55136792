#include "tvmcf/fields.hpp"

#include <fftw3.h>

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <tuple>

namespace tvmcf {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct Plans {
  fftw_plan r2c = nullptr;
  fftw_plan c2r = nullptr;
};

class PlanCache {
 public:
  const Plans& get(const PeriodicGrid& g) {
    const auto key = std::make_tuple(g.dim, g.n[0], g.dim == 2 ? g.n[1] : 1);
    std::lock_guard<std::mutex> lock(mu_);
    auto it = plans_.find(key);
    if (it != plans_.end()) return it->second;
    const std::size_t nr = g.size();
    const std::size_t nc = complex_size(g);
    double* in = fftw_alloc_real(nr);
    fftw_complex* out = fftw_alloc_complex(nc);
    Plans p;
    const unsigned flags = FFTW_ESTIMATE | FFTW_DESTROY_INPUT;
    if (g.dim == 1) {
      p.r2c = fftw_plan_dft_r2c_1d(g.n[0], in, out, flags);
      p.c2r = fftw_plan_dft_c2r_1d(g.n[0], out, in, flags);
    } else {
      p.r2c = fftw_plan_dft_r2c_2d(g.n[0], g.n[1], in, out, flags);
      p.c2r = fftw_plan_dft_c2r_2d(g.n[0], g.n[1], out, in, flags);
    }
    fftw_free(in);
    fftw_free(out);
    if (!p.r2c || !p.c2r) throw std::runtime_error("fftw planning failed");
    return plans_.emplace(key, p).first->second;
  }

  static std::size_t complex_size(const PeriodicGrid& g) {
    if (g.dim == 1) return static_cast<std::size_t>(g.n[0] / 2 + 1);
    return static_cast<std::size_t>(g.n[0]) * (g.n[1] / 2 + 1);
  }

 private:
  std::mutex mu_;
  std::map<std::tuple<int, int, int>, Plans> plans_;
};

PlanCache& plan_cache() {
  static PlanCache cache;
  return cache;
}

struct RealBuffer {
  explicit RealBuffer(std::size_t n) : p(fftw_alloc_real(n)) {}
  ~RealBuffer() { fftw_free(p); }
  RealBuffer(const RealBuffer&) = delete;
  RealBuffer& operator=(const RealBuffer&) = delete;
  double* p;
};

struct ComplexBuffer {
  explicit ComplexBuffer(std::size_t n) : p(fftw_alloc_complex(n)) {}
  ~ComplexBuffer() { fftw_free(p); }
  ComplexBuffer(const ComplexBuffer&) = delete;
  ComplexBuffer& operator=(const ComplexBuffer&) = delete;
  fftw_complex* p;
};

int signed_index(int i, int n) { return i <= n / 2 ? i : i - n; }
int array_index(int k, int n) { return ((k % n) + n) % n; }

// Full (non-halved) complex spectrum, row-major n0 x n1 (n1 = 1 for dim 1).
std::vector<std::complex<double>> to_full(const Spectrum& s) {
  const PeriodicGrid& g = s.grid;
  const int n0 = g.n[0];
  const int n1 = g.dim == 2 ? g.n[1] : 1;
  std::vector<std::complex<double>> full(static_cast<std::size_t>(n0) * n1);
  if (g.dim == 1) {
    for (int i = 0; i < n0; ++i) {
      full[i] = i <= n0 / 2 ? s.c[i] : std::conj(s.c[n0 - i]);
    }
    return full;
  }
  const int h = n1 / 2 + 1;
  for (int i0 = 0; i0 < n0; ++i0) {
    for (int i1 = 0; i1 < n1; ++i1) {
      std::complex<double> v;
      if (i1 < h) {
        v = s.c[static_cast<std::size_t>(i0) * h + i1];
      } else {
        v = std::conj(s.c[static_cast<std::size_t>((n0 - i0) % n0) * h + (n1 - i1)]);
      }
      full[static_cast<std::size_t>(i0) * n1 + i1] = v;
    }
  }
  return full;
}

Spectrum from_full(const PeriodicGrid& g, const std::vector<std::complex<double>>& full) {
  Spectrum s;
  s.grid = g;
  const int n0 = g.n[0];
  if (g.dim == 1) {
    s.c.assign(full.begin(), full.begin() + (n0 / 2 + 1));
    return s;
  }
  const int n1 = g.n[1];
  const int h = n1 / 2 + 1;
  s.c.resize(static_cast<std::size_t>(n0) * h);
  for (int i0 = 0; i0 < n0; ++i0)
    for (int i1 = 0; i1 < h; ++i1)
      s.c[static_cast<std::size_t>(i0) * h + i1] = full[static_cast<std::size_t>(i0) * n1 + i1];
  return s;
}

struct Target {
  int k;
  double w;
};

// Where a mode of signed wavenumber k lands on an axis resampled from n to m.
std::vector<Target> axis_targets(int k, int n, int m) {
  if (m == n) return {{k, 1.0}};
  const bool nyq = std::abs(k) == n / 2;
  if (m > n) {
    if (nyq) return {{n / 2, 0.5}, {-n / 2, 0.5}};
    return {{k, 1.0}};
  }
  if (std::abs(k) < m / 2) return {{k, 1.0}};
  if (std::abs(k) == m / 2) return {{m / 2, 1.0}};
  return {};
}

}  // namespace

PeriodicGrid PeriodicGrid::make(int dim, std::array<int, 2> n, std::array<double, 2> length) {
  if (dim != 1 && dim != 2) throw std::invalid_argument("grid dimension must be 1 or 2");
  PeriodicGrid g;
  g.dim = dim;
  g.n = {n[0], dim == 2 ? n[1] : 1};
  g.length = {length[0], dim == 2 ? length[1] : 1.0};
  for (int a = 0; a < dim; ++a) {
    if (g.n[a] < 8) throw std::invalid_argument("grid resolution must be at least 8");
    if (g.n[a] % 2 != 0) throw std::invalid_argument("grid resolution must be even");
    if (!(g.length[a] > 0.0) || !std::isfinite(g.length[a]))
      throw std::invalid_argument("grid period must be positive");
  }
  return g;
}

std::array<double, 2> PeriodicGrid::node(std::size_t idx) const {
  if (dim == 1) return {static_cast<double>(idx) * spacing(0), 0.0};
  const std::size_t i0 = idx / n[1];
  const std::size_t i1 = idx % n[1];
  return {static_cast<double>(i0) * spacing(0), static_cast<double>(i1) * spacing(1)};
}

double PeriodicGrid::min_spacing() const { return dim == 2 ? std::min(spacing(0), spacing(1)) : spacing(0); }

ScalarField::ScalarField(const PeriodicGrid& g, std::vector<double> v) : grid(g), values(std::move(v)) {
  if (values.size() != grid.size()) throw std::invalid_argument("field length does not match grid");
}

std::vector<MultiIndex> multi_indices(int dim, int k) {
  std::vector<MultiIndex> out;
  if (dim == 1) {
    out.push_back({k, 0});
    return out;
  }
  for (int a0 = k; a0 >= 0; --a0) out.push_back({a0, k - a0});
  return out;
}

int multiplicity(const MultiIndex& a) {
  int num = 1;
  for (int i = 2; i <= a.order(); ++i) num *= i;
  int den = 1;
  for (int i = 2; i <= a.a0; ++i) den *= i;
  for (int i = 2; i <= a.a1; ++i) den *= i;
  return num / den;
}

void Spectrum::mode(std::size_t idx, std::array<int, 2>& k, std::array<bool, 2>& nyquist) const {
  if (grid.dim == 1) {
    const int i0 = static_cast<int>(idx);
    k = {i0, 0};
    nyquist = {i0 == grid.n[0] / 2, false};
    return;
  }
  const int h = half();
  const int i0 = static_cast<int>(idx / h);
  const int i1 = static_cast<int>(idx % h);
  k = {signed_index(i0, grid.n[0]), i1};
  nyquist = {i0 == grid.n[0] / 2, i1 == grid.n[1] / 2};
}

double Spectrum::weight(std::size_t idx) const {
  const int last = grid.n[grid.dim - 1];
  const int il = static_cast<int>(idx % static_cast<std::size_t>(half()));
  return (il == 0 || il == last / 2) ? 1.0 : 2.0;
}

Spectrum forward(const ScalarField& f) {
  const PeriodicGrid& g = f.grid;
  const Plans& plans = plan_cache().get(g);
  const std::size_t nr = g.size();
  const std::size_t nc = PlanCache::complex_size(g);
  RealBuffer in(nr);
  ComplexBuffer out(nc);
  for (std::size_t i = 0; i < nr; ++i) in.p[i] = f.values[i];
  fftw_execute_dft_r2c(plans.r2c, in.p, out.p);
  Spectrum s;
  s.grid = g;
  s.c.resize(nc);
  const double scale = 1.0 / static_cast<double>(nr);
  for (std::size_t i = 0; i < nc; ++i) s.c[i] = std::complex<double>(out.p[i][0] * scale, out.p[i][1] * scale);
  return s;
}

ScalarField inverse(const Spectrum& s) {
  const PeriodicGrid& g = s.grid;
  const Plans& plans = plan_cache().get(g);
  const std::size_t nr = g.size();
  const std::size_t nc = s.c.size();
  ComplexBuffer in(nc);
  RealBuffer out(nr);
  for (std::size_t i = 0; i < nc; ++i) {
    in.p[i][0] = s.c[i].real();
    in.p[i][1] = s.c[i].imag();
  }
  fftw_execute_dft_c2r(plans.c2r, in.p, out.p);
  ScalarField f(g);
  for (std::size_t i = 0; i < nr; ++i) f.values[i] = out.p[i];
  return f;
}

Spectrum differentiate(const Spectrum& s, MultiIndex a) {
  if (a.a0 < 0 || a.a1 < 0 || a.order() > 4) throw std::invalid_argument("derivative order must be in 0..4");
  if (s.grid.dim == 1 && a.a1 != 0) throw std::invalid_argument("second axis derivative on 1D grid");
  Spectrum d = s;
  if (a.order() == 0) return d;
  const std::array<int, 2> ord{a.a0, a.a1};
  for (std::size_t idx = 0; idx < d.c.size(); ++idx) {
    std::array<int, 2> k;
    std::array<bool, 2> nyq;
    s.mode(idx, k, nyq);
    std::complex<double> sym(1.0, 0.0);
    for (int ax = 0; ax < s.grid.dim; ++ax) {
      if (ord[ax] == 0) continue;
      if (nyq[ax] && ord[ax] % 2 == 1) {
        sym = 0.0;
        break;
      }
      const std::complex<double> ik(0.0, kTwoPi * k[ax] / s.grid.length[ax]);
      for (int j = 0; j < ord[ax]; ++j) sym *= ik;
    }
    d.c[idx] *= sym;
  }
  return d;
}

ScalarField spectral_derivative(const Spectrum& s, MultiIndex a) { return inverse(differentiate(s, a)); }

ScalarField spectral_derivative(const ScalarField& f, MultiIndex a) {
  if (a.order() == 0) {
    if (a.a0 < 0 || a.a1 < 0) throw std::invalid_argument("negative derivative order");
    return f;
  }
  return spectral_derivative(forward(f), a);
}

ScalarField flat_laplacian(const ScalarField& f) {
  const Spectrum s = forward(f);
  Spectrum l = differentiate(s, {2, 0});
  if (f.grid.dim == 2) {
    const Spectrum l1 = differentiate(s, {0, 2});
    for (std::size_t i = 0; i < l.c.size(); ++i) l.c[i] += l1.c[i];
  }
  return inverse(l);
}

ScalarField resample(const ScalarField& f, std::array<int, 2> n) {
  const PeriodicGrid& g = f.grid;
  const PeriodicGrid ng = PeriodicGrid::make(g.dim, n, g.length);
  if (ng == g) return f;
  const Spectrum s = forward(f);
  const std::vector<std::complex<double>> full = to_full(s);
  const int n0 = g.n[0];
  const int n1 = g.dim == 2 ? g.n[1] : 1;
  const int m0 = ng.n[0];
  const int m1 = g.dim == 2 ? ng.n[1] : 1;
  std::vector<std::complex<double>> out(static_cast<std::size_t>(m0) * m1);
  for (int i0 = 0; i0 < n0; ++i0) {
    const auto t0 = axis_targets(signed_index(i0, n0), n0, m0);
    for (int i1 = 0; i1 < n1; ++i1) {
      const std::complex<double> v = full[static_cast<std::size_t>(i0) * n1 + i1];
      if (v == 0.0) continue;
      const auto t1 = g.dim == 2 ? axis_targets(signed_index(i1, n1), n1, m1) : std::vector<Target>{{0, 1.0}};
      for (const Target& a : t0)
        for (const Target& b : t1)
          out[static_cast<std::size_t>(array_index(a.k, m0)) * m1 + array_index(b.k, m1)] += v * (a.w * b.w);
    }
  }
  return inverse(from_full(ng, out));
}

std::array<int, 2> padded_resolution(const PeriodicGrid& g) {
  std::array<int, 2> m{1, 1};
  for (int a = 0; a < g.dim; ++a) {
    int v = (3 * g.n[a] + 1) / 2;
    if (v % 2) ++v;
    m[a] = v;
  }
  return m;
}

double evaluate(const Spectrum& s, std::array<double, 2> xi) {
  const PeriodicGrid& g = s.grid;
  double acc = 0.0;
  for (std::size_t idx = 0; idx < s.c.size(); ++idx) {
    std::array<int, 2> k;
    std::array<bool, 2> nyq;
    s.mode(idx, k, nyq);
    std::complex<double> m(1.0, 0.0);
    for (int ax = 0; ax < g.dim; ++ax) {
      const double th = kTwoPi * k[ax] * xi[ax] / g.length[ax];
      // Nyquist factors are read as cosines, matching the split used by resample.
      m *= nyq[ax] ? std::complex<double>(std::cos(th), 0.0) : std::polar(1.0, th);
    }
    acc += s.weight(idx) * (s.c[idx] * m).real();
  }
  return acc;
}

ScalarField shift(const ScalarField& f, std::array<double, 2> sh) {
  Spectrum s = forward(f);
  const PeriodicGrid& g = f.grid;
  for (std::size_t idx = 0; idx < s.c.size(); ++idx) {
    std::array<int, 2> k;
    std::array<bool, 2> nyq;
    s.mode(idx, k, nyq);
    std::complex<double> fac(1.0, 0.0);
    for (int ax = 0; ax < g.dim; ++ax) {
      const double th = kTwoPi * k[ax] * sh[ax] / g.length[ax];
      fac *= nyq[ax] ? std::complex<double>(std::cos(th), 0.0) : std::polar(1.0, th);
    }
    s.c[idx] *= fac;
  }
  return inverse(s);
}

double ordered_sum(const std::vector<double>& v) {
  double sum = 0.0;
  double comp = 0.0;
  for (double x : v) {
    const double t = sum + x;
    if (std::abs(sum) >= std::abs(x)) {
      comp += (sum - t) + x;
    } else {
      comp += (x - t) + sum;
    }
    sum = t;
  }
  return sum + comp;
}

double quadrature(const ScalarField& f, const ScalarField& weight) {
  if (!(f.grid == weight.grid)) throw std::invalid_argument("quadrature: grid mismatch");
  std::vector<double> prod(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) prod[i] = f.values[i] * weight.values[i];
  return ordered_sum(prod) * f.grid.cell();
}

double quadrature(const ScalarField& f) { return ordered_sum(f.values) * f.grid.cell(); }

ScalarField fourier_modes(const PeriodicGrid& g, const std::vector<FourierMode>& modes) {
  ScalarField f(g);
  for (std::size_t i = 0; i < f.size(); ++i) {
    const auto x = g.node(i);
    double v = 0.0;
    for (const FourierMode& m : modes) {
      double th = m.phase;
      for (int a = 0; a < g.dim; ++a) th += kTwoPi * m.k[a] * x[a] / g.length[a];
      v += m.amplitude * std::cos(th);
    }
    f.values[i] = v;
  }
  return f;
}

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

ScalarField random_band_limited(const PeriodicGrid& g, int band_limit, std::mt19937_64& rng, bool include_mean) {
  if (band_limit < 0) throw std::invalid_argument("band limit must be non-negative");
  for (int a = 0; a < g.dim; ++a)
    if (band_limit >= g.n[a] / 2) throw std::invalid_argument("band limit must lie below the Nyquist mode");
  std::vector<FourierMode> modes;
  const int k1max = g.dim == 2 ? band_limit : 0;
  for (int k0 = 0; k0 <= band_limit; ++k0) {
    for (int k1 = -k1max; k1 <= k1max; ++k1) {
      if (k0 == 0 && k1 < 0) continue;
      if (k0 == 0 && k1 == 0) {
        const double c = 2.0 * uniform01(rng) - 1.0;
        if (include_mean) modes.push_back({{0, 0}, c, 0.0});
        continue;
      }
      const double a = 2.0 * uniform01(rng) - 1.0;
      const double b = 2.0 * uniform01(rng) - 1.0;
      modes.push_back({{k0, k1}, std::hypot(a, b), std::atan2(-b, a)});
    }
  }
  return fourier_modes(g, modes);
}

}  // namespace tvmcf

#include "tvmcf/graph_surface.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace tvmcf {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct Jet {
  ScalarField f;
  std::array<ScalarField, 2> d;
  std::array<std::array<ScalarField, 2>, 2> dd;
};

Jet jet(const ScalarField& f) {
  Jet j;
  j.f = f;
  const Spectrum s = forward(f);
  const int dim = f.grid.dim;
  j.d[0] = spectral_derivative(s, {1, 0});
  j.dd[0][0] = spectral_derivative(s, {2, 0});
  if (dim == 2) {
    j.d[1] = spectral_derivative(s, {0, 1});
    j.dd[1][1] = spectral_derivative(s, {0, 2});
    j.dd[0][1] = spectral_derivative(s, {1, 1});
    j.dd[1][0] = j.dd[0][1];
  } else {
    j.d[1] = ScalarField(f.grid);
    j.dd[1][1] = ScalarField(f.grid);
    j.dd[0][1] = ScalarField(f.grid);
    j.dd[1][0] = ScalarField(f.grid);
  }
  return j;
}

std::vector<ScalarField> gradient_fields(const ScalarField& f) {
  const Spectrum s = forward(f);
  std::vector<ScalarField> out{spectral_derivative(s, {1, 0})};
  if (f.grid.dim == 2) out.push_back(spectral_derivative(s, {0, 1}));
  return out;
}

void check_graph_validity(const SurfaceGeometry& g, const GeometryOptions& opt) {
  for (const auto& c : g.comps) {
    for (std::size_t i = 0; i < c.size(); ++i) {
      if (!std::isfinite(c.mean_curvature[i]) || !std::isfinite(c.area_element[i]))
        throw GeometryError(GeometryError::Kind::GraphInvalid, "non-finite geometry");
      if (opt.validate && !(c.alignment[i] >= opt.a_min))
        throw GeometryError(GeometryError::Kind::GraphInvalid, "graph validity violated: normal alignment below a_min");
    }
  }
}

void check_psi(const ReferenceSurface& f, const FieldBundle& psi, const GeometryOptions& opt) {
  validate_bundle(f, psi);
  for (const auto& c : psi)
    for (double v : c.values)
      if (!std::isfinite(v)) throw GeometryError(GeometryError::Kind::GraphInvalid, "non-finite graph function");
  if (opt.check_resolution && !check_resolution(psi).resolved)
    throw GeometryError(GeometryError::Kind::UnderResolved, "graph function under-resolved");
}

// Fills metric, normal, second form and curvature from tangents and second derivatives at one node.
void node_geometry(int dim, int orientation, const std::array<Vec3, 2>& t, const std::array<std::array<Vec3, 2>, 2>& tt,
                   const Vec3& ref_normal, ComponentGeometry& out, std::size_t i) {
  Mat2 g = Mat2::Identity();
  for (int a = 0; a < dim; ++a)
    for (int b = 0; b < dim; ++b) g(a, b) = t[a].dot(t[b]);
  Vec3 raw = dim == 1 ? Vec3(t[0][1], -t[0][0], 0.0) : Vec3(t[0].cross(t[1]));
  const double jac = raw.norm();
  const Vec3 nrm = (orientation * raw) / jac;
  Mat2 bf = Mat2::Zero();
  for (int a = 0; a < dim; ++a)
    for (int b = 0; b < dim; ++b) bf(a, b) = -tt[a][b].dot(nrm);
  const Mat2 gi = g.inverse();
  const Mat2 w = gi * bf * gi;
  Mat3 shape = Mat3::Zero();
  for (int a = 0; a < dim; ++a)
    for (int b = 0; b < dim; ++b) shape += w(a, b) * t[a] * t[b].transpose();
  out.tangent[i] = t;
  out.metric[i] = g;
  out.metric_inv[i] = gi;
  out.area_element[i] = jac;
  out.normal[i] = nrm;
  out.second_form[i] = bf;
  out.shape[i] = shape;
  out.mean_curvature[i] = (gi * bf).trace();
  out.b_sq[i] = (gi * bf * gi * bf).trace();
  out.alignment[i] = nrm.dot(ref_normal);
}

// Value and derivative of a 1D real Fourier series given by its r2c coefficients.
void eval_series(const std::vector<std::complex<double>>& c, int n, double length, double x, double& val, double& der) {
  const double w = kTwoPi / length;
  const std::complex<double> e1 = std::polar(1.0, w * x);
  std::complex<double> e = e1;
  val = c[0].real();
  der = 0.0;
  for (int k = 1; k < n / 2; ++k) {
    const std::complex<double> t = c[k] * e;
    val += 2.0 * t.real();
    der -= 2.0 * k * w * t.imag();
    e *= e1;
  }
  val += c[n / 2].real() * std::cos(w * (n / 2) * x);
}

FieldBundle scaled(const FieldBundle& b, double s) {
  FieldBundle out = b;
  for (auto& c : out)
    for (double& v : c.values) v *= s;
  return out;
}

}  // namespace

void ComponentGeometry::resize(std::size_t n) {
  position.assign(n, Vec3::Zero());
  tangent.assign(n, {Vec3::Zero(), Vec3::Zero()});
  metric.assign(n, Mat2::Identity());
  metric_inv.assign(n, Mat2::Identity());
  area_element.assign(n, 0.0);
  normal.assign(n, Vec3::Zero());
  second_form.assign(n, Mat2::Zero());
  shape.assign(n, Mat3::Zero());
  mean_curvature.assign(n, 0.0);
  b_sq.assign(n, 0.0);
  alignment.assign(n, 0.0);
}

FieldBundle SurfaceGeometry::mean_curvature() const {
  FieldBundle out;
  for (const auto& c : comps) out.emplace_back(c.grid, c.mean_curvature);
  return out;
}

FieldBundle SurfaceGeometry::area_element() const {
  FieldBundle out;
  for (const auto& c : comps) out.emplace_back(c.grid, c.area_element);
  return out;
}

FieldBundle SurfaceGeometry::b_sq() const {
  FieldBundle out;
  for (const auto& c : comps) out.emplace_back(c.grid, c.b_sq);
  return out;
}

FieldBundle SurfaceGeometry::alignment() const {
  FieldBundle out;
  for (const auto& c : comps) out.emplace_back(c.grid, c.alignment);
  return out;
}

double SurfaceGeometry::mean_curvature_average() const { return surface_average(*this, mean_curvature()); }

double SurfaceGeometry::min_alignment() const {
  double m = kInfinity;
  for (const auto& c : comps)
    for (double a : c.alignment) m = std::min(m, a);
  return m;
}

PeriodicGrid chart_grid(const ReferenceSurface& f, int comp, int n_per_axis) {
  const ChartShape ch = f.chart(comp);
  return PeriodicGrid::make(ch.dim, {n_per_axis, n_per_axis}, ch.period);
}

FieldBundle zero_bundle(const ReferenceSurface& f, int n_per_axis) {
  FieldBundle b;
  for (int c = 0; c < f.num_components(); ++c) b.emplace_back(chart_grid(f, c, n_per_axis));
  return b;
}

void validate_bundle(const ReferenceSurface& f, const FieldBundle& psi) {
  if (static_cast<int>(psi.size()) != f.num_components())
    throw std::invalid_argument("field bundle does not match the component count");
  for (int c = 0; c < f.num_components(); ++c) {
    const ChartShape ch = f.chart(c);
    const PeriodicGrid& g = psi[c].grid;
    if (g.dim != ch.dim) throw std::invalid_argument("field grid dimension does not match the chart");
    for (int a = 0; a < ch.dim; ++a)
      if (std::abs(g.length[a] - ch.period[a]) > 1e-12 * ch.period[a])
        throw std::invalid_argument("field grid period does not match the chart");
    if (psi[c].values.size() != g.size()) throw std::invalid_argument("field length does not match grid");
  }
}

std::vector<EmbeddingJet> graph_embedding(const ReferenceSurface& f, const FieldBundle& psi) {
  validate_bundle(f, psi);
  std::vector<EmbeddingJet> out;
  const int dim = f.chart_dim();
  for (int c = 0; c < f.num_components(); ++c) {
    const PeriodicGrid& g = psi[c].grid;
    const Jet j = jet(psi[c]);
    const std::size_t n = g.size();
    EmbeddingJet e;
    e.grid = g;
    e.orientation = f.orientation(c);
    e.x.resize(n);
    e.reference_normal.resize(n);
    for (int a = 0; a < 2; ++a) {
      e.dx[a].assign(n, Vec3::Zero());
      for (int b = 0; b < 2; ++b) e.ddx[a][b].assign(n, Vec3::Zero());
    }
#pragma omp parallel for schedule(static)
    for (std::size_t i = 0; i < n; ++i) {
      const RefFrame fr = f.frame(c, g.node(i));
      const double p = j.f[i];
      e.x[i] = fr.x + p * fr.nu;
      e.reference_normal[i] = fr.nu;
      for (int a = 0; a < dim; ++a) {
        e.dx[a][i] = fr.dx[a] + j.d[a][i] * fr.nu + p * fr.dnu[a];
        for (int b = 0; b < dim; ++b) {
          e.ddx[a][b][i] = fr.ddx[a][b] + j.dd[a][b][i] * fr.nu + j.d[a][i] * fr.dnu[b] + j.d[b][i] * fr.dnu[a] +
                           p * fr.ddnu[a][b];
        }
      }
    }
    out.push_back(std::move(e));
  }
  return out;
}

SurfaceGeometry geometry_from_embedding(const ReferenceSurface& f, const std::vector<EmbeddingJet>& jets,
                                        const GeometryOptions& opt) {
  SurfaceGeometry geo(f);
  const int dim = f.chart_dim();
  for (const EmbeddingJet& e : jets) {
    ComponentGeometry cg;
    cg.grid = e.grid;
    const std::size_t n = e.grid.size();
    cg.resize(n);
#pragma omp parallel for schedule(static)
    for (std::size_t i = 0; i < n; ++i) {
      std::array<Vec3, 2> t{e.dx[0][i], e.dx[1][i]};
      std::array<std::array<Vec3, 2>, 2> tt{{{e.ddx[0][0][i], e.ddx[0][1][i]}, {e.ddx[1][0][i], e.ddx[1][1][i]}}};
      cg.position[i] = e.x[i];
      node_geometry(dim, e.orientation, t, tt, e.reference_normal[i], cg, i);
    }
    geo.comps.push_back(std::move(cg));
  }
  check_graph_validity(geo, opt);
  return geo;
}

SurfaceGeometry build_geometry_param(const ReferenceSurface& f, const FieldBundle& psi, const GeometryOptions& opt) {
  check_psi(f, psi, opt);
  return geometry_from_embedding(f, graph_embedding(f, psi), opt);
}

SurfaceGeometry build_geometry_sdf(const ReferenceSurface& f, const FieldBundle& psi, const GeometryOptions& opt) {
  check_psi(f, psi, opt);
  SurfaceGeometry geo(f);
  const int dim = f.chart_dim();
  const Mat3 id = Mat3::Identity();
  for (int c = 0; c < f.num_components(); ++c) {
    const PeriodicGrid& g = psi[c].grid;
    const Jet j = jet(psi[c]);
    ComponentGeometry cg;
    cg.grid = g;
    const std::size_t n = g.size();
    cg.resize(n);
#pragma omp parallel for schedule(static)
    for (std::size_t i = 0; i < n; ++i) {
      const auto xi = g.node(i);
      const RefFrame fr = f.frame(c, xi);
      const Vec3& nu = fr.nu;
      const Mat3 b = f.shape_ambient(c, xi);
      const double p = j.f[i];
      Vec3 grad = Vec3::Zero();
      Mat3 hess = Mat3::Zero();
      for (int a = 0; a < dim; ++a) {
        grad += j.d[a][i] * fr.dx[a];
        for (int bb = 0; bb < dim; ++bb) hess += j.dd[a][bb][i] * fr.dx[a] * fr.dx[bb].transpose();
      }
      const Vec3 bgrad = b * grad;
      const Mat3 d2psi = -nu * bgrad.transpose() - bgrad * nu.transpose() + hess;
      const Mat3 amat = (id + p * b).inverse();
      const Vec3 w = nu - amat * grad;
      const Mat3 d3 = f.shape_derivative(c, xi, w);
      const Mat3 d2u = amat * (b - p * d3 - d2psi) * amat;
      const double wn = w.norm();
      const Vec3 nrm = w / wn;
      const Mat3 proj = id - nrm * nrm.transpose();
      const Mat3 shape = proj * d2u * proj / wn;

      std::array<Vec3, 2> t{Vec3::Zero(), Vec3::Zero()};
      for (int a = 0; a < dim; ++a) t[a] = fr.dx[a] + p * (b * fr.dx[a]) + j.d[a][i] * nu;
      Mat2 gm = Mat2::Identity();
      Mat2 bf = Mat2::Zero();
      for (int a = 0; a < dim; ++a)
        for (int bb = 0; bb < dim; ++bb) {
          gm(a, bb) = t[a].dot(t[bb]);
          bf(a, bb) = t[a].dot(shape * t[bb]);
        }
      const Vec3 raw = dim == 1 ? Vec3(t[0][1], -t[0][0], 0.0) : Vec3(t[0].cross(t[1]));
      cg.position[i] = fr.x + p * nu;
      cg.tangent[i] = t;
      cg.metric[i] = gm;
      cg.metric_inv[i] = gm.inverse();
      cg.area_element[i] = raw.norm();
      cg.normal[i] = nrm;
      cg.second_form[i] = bf;
      cg.shape[i] = shape;
      cg.mean_curvature[i] = shape.trace();
      cg.b_sq[i] = shape.squaredNorm();
      cg.alignment[i] = nrm.dot(nu);
    }
    geo.comps.push_back(std::move(cg));
  }
  check_graph_validity(geo, opt);
  return geo;
}

CurvatureGap curvature_gap(const SurfaceGeometry& a, const SurfaceGeometry& b) {
  if (a.comps.size() != b.comps.size()) throw std::invalid_argument("geometries have different components");
  CurvatureGap gap;
  for (std::size_t c = 0; c < a.comps.size(); ++c) {
    if (a.comps[c].size() != b.comps[c].size()) throw std::invalid_argument("geometries have different grids");
    for (std::size_t i = 0; i < a.comps[c].size(); ++i) {
      const double dh = std::abs(a.comps[c].mean_curvature[i] - b.comps[c].mean_curvature[i]);
      const double db = (a.comps[c].shape[i] - b.comps[c].shape[i]).cwiseAbs().maxCoeff();
      if (std::isnan(dh) || dh > gap.mean_curvature) gap.mean_curvature = dh;
      if (std::isnan(db) || db > gap.shape) gap.shape = db;
    }
  }
  return gap;
}

std::array<double, 3> volume_polynomial(const ReferenceSurface& f, const FieldBundle& psi) {
  validate_bundle(f, psi);
  std::array<double, 3> a{f.enclosed_volume(), 0.0, 0.0};
  for (int c = 0; c < f.num_components(); ++c) {
    const double k = f.fiber_curvature(c);
    const ScalarField& p = psi[c];
    std::vector<double> v0(p.size()), v1(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) {
      v0[i] = p[i] + 0.5 * k * p[i] * p[i];
      v1[i] = 1.0 + k * p[i];
    }
    const double cell = p.grid.cell();
    a[0] += ordered_sum(v0) * cell;
    a[1] += ordered_sum(v1) * cell;
    a[2] += 0.5 * k * p.grid.area();
  }
  return a;
}

double volume(const ReferenceSurface& f, const FieldBundle& psi) { return volume_polynomial(f, psi)[0]; }

double perimeter(const SurfaceGeometry& g) {
  double s = 0.0;
  for (const auto& c : g.comps) s += quadrature(ScalarField(c.grid, c.area_element));
  return s;
}

double weak_distance(const ReferenceSurface& f, const FieldBundle& psi) {
  validate_bundle(f, psi);
  double s = 0.0;
  for (int c = 0; c < f.num_components(); ++c) {
    const double k = f.fiber_curvature(c);
    const ScalarField& p = psi[c];
    std::vector<double> v(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) v[i] = 0.5 * p[i] * p[i] + k * p[i] * p[i] * p[i] / 3.0;
    s += ordered_sum(v) * p.grid.cell();
  }
  return s;
}

double surface_integral(const SurfaceGeometry& g, const FieldBundle& f) {
  if (f.size() != g.comps.size()) throw std::invalid_argument("surface_integral: component mismatch");
  double s = 0.0;
  for (std::size_t c = 0; c < f.size(); ++c) {
    if (!(f[c].grid == g.comps[c].grid)) throw std::invalid_argument("surface_integral: grid mismatch");
    s += quadrature(f[c], ScalarField(g.comps[c].grid, g.comps[c].area_element));
  }
  return s;
}

double surface_average(const SurfaceGeometry& g, const FieldBundle& f) { return surface_integral(g, f) / perimeter(g); }

double surface_lp_norm(const SurfaceGeometry& g, const FieldBundle& f, double p) {
  if (f.size() != g.comps.size()) throw std::invalid_argument("surface_lp_norm: component mismatch");
  if (std::isinf(p)) {
    double m = 0.0;
    for (const auto& c : f)
      for (double v : c.values) m = std::max(m, std::abs(v));
    return m;
  }
  FieldBundle a = f;
  for (auto& c : a)
    for (double& v : c.values) v = std::pow(std::abs(v), p);
  return std::pow(surface_integral(g, a), 1.0 / p);
}

std::vector<std::vector<Vec3>> surface_gradient(const SurfaceGeometry& g, const FieldBundle& f) {
  if (f.size() != g.comps.size()) throw std::invalid_argument("surface_gradient: component mismatch");
  const int dim = g.chart_dim();
  std::vector<std::vector<Vec3>> out;
  for (std::size_t c = 0; c < f.size(); ++c) {
    const auto& cg = g.comps[c];
    if (!(f[c].grid == cg.grid)) throw std::invalid_argument("surface_gradient: grid mismatch");
    const auto d = gradient_fields(f[c]);
    std::vector<Vec3> v(cg.size(), Vec3::Zero());
    for (std::size_t i = 0; i < cg.size(); ++i)
      for (int a = 0; a < dim; ++a)
        for (int b = 0; b < dim; ++b) v[i] += cg.metric_inv[i](a, b) * d[b][i] * cg.tangent[i][a];
    out.push_back(std::move(v));
  }
  return out;
}

FieldBundle surface_gradient_sq(const SurfaceGeometry& g, const FieldBundle& f) {
  if (f.size() != g.comps.size()) throw std::invalid_argument("surface_gradient_sq: component mismatch");
  const int dim = g.chart_dim();
  FieldBundle out;
  for (std::size_t c = 0; c < f.size(); ++c) {
    const auto& cg = g.comps[c];
    if (!(f[c].grid == cg.grid)) throw std::invalid_argument("surface_gradient_sq: grid mismatch");
    const auto d = gradient_fields(f[c]);
    ScalarField s(cg.grid);
    for (std::size_t i = 0; i < cg.size(); ++i) {
      double v = 0.0;
      for (int a = 0; a < dim; ++a)
        for (int b = 0; b < dim; ++b) v += cg.metric_inv[i](a, b) * d[a][i] * d[b][i];
      s[i] = v;
    }
    out.push_back(std::move(s));
  }
  return out;
}

FieldBundle surface_laplacian(const SurfaceGeometry& g, const FieldBundle& f) {
  if (f.size() != g.comps.size()) throw std::invalid_argument("surface_laplacian: component mismatch");
  const int dim = g.chart_dim();
  FieldBundle out;
  for (std::size_t c = 0; c < f.size(); ++c) {
    const auto& cg = g.comps[c];
    if (!(f[c].grid == cg.grid)) throw std::invalid_argument("surface_laplacian: grid mismatch");
    const auto d = gradient_fields(f[c]);
    ScalarField lap(cg.grid);
    for (int a = 0; a < dim; ++a) {
      ScalarField flux(cg.grid);
      for (std::size_t i = 0; i < cg.size(); ++i) {
        double v = 0.0;
        for (int b = 0; b < dim; ++b) v += cg.metric_inv[i](a, b) * d[b][i];
        flux[i] = cg.area_element[i] * v;
      }
      const ScalarField div = spectral_derivative(flux, a == 0 ? MultiIndex{1, 0} : MultiIndex{0, 1});
      for (std::size_t i = 0; i < cg.size(); ++i) lap[i] += div[i];
    }
    for (std::size_t i = 0; i < cg.size(); ++i) lap[i] /= cg.area_element[i];
    out.push_back(std::move(lap));
  }
  return out;
}

SurfaceScalarOps surface_scalar_ops(const SurfaceGeometry& g, const FieldBundle& f) {
  SurfaceScalarOps ops;
  ops.integral = surface_integral(g, f);
  ops.average = ops.integral / perimeter(g);
  ops.gradient_sq = surface_gradient_sq(g, f);
  ops.laplacian = surface_laplacian(g, f);
  ops.l2 = surface_lp_norm(g, f, 2.0);
  return ops;
}

NormTransferReport norm_transfer_check(const ReferenceSurface& f, const FieldBundle& psi, const FieldBundle& h,
                                       double p, double c_star) {
  const SurfaceGeometry geo = build_geometry_param(f, psi);
  const SurfaceGeometry ref = build_geometry_param(f, zero_bundle(f, psi.front().grid.n[0]));
  NormTransferReport rep;
  const double on_ref = surface_lp_norm(ref, h, p);
  const double on_graph = surface_lp_norm(geo, h, p);
  rep.value_ratio = on_graph > 0.0 ? on_ref / on_graph : 1.0;
  FieldBundle gref = surface_gradient_sq(ref, h);
  FieldBundle ggeo = surface_gradient_sq(geo, h);
  for (auto* b : {&gref, &ggeo})
    for (auto& c : *b)
      for (double& v : c.values) v = std::sqrt(std::max(v, 0.0));
  const double dref = surface_lp_norm(ref, gref, p);
  const double dgeo = surface_lp_norm(geo, ggeo, p);
  rep.gradient_ratio = dgeo > 0.0 ? dref / dgeo : 1.0;
  auto inside = [&](double r) { return r >= 1.0 / c_star && r <= c_star; };
  rep.within = inside(rep.value_ratio) && inside(rep.gradient_ratio);
  return rep;
}

H3ControlReport h3_control_check(const ReferenceSurface& f, const FieldBundle& psi, double k_star) {
  H3ControlReport rep;
  rep.lhs = sobolev_norm(psi, 3, 2.0);
  const SurfaceGeometry geo = build_geometry_param(f, psi);
  const double grad_h = std::sqrt(surface_integral(geo, surface_gradient_sq(geo, geo.mean_curvature())));
  rep.rhs = grad_h + std::sqrt(std::max(weak_distance(f, psi), 0.0));
  rep.ratio = rep.rhs > 0.0 ? rep.lhs / rep.rhs : 0.0;
  rep.within = rep.rhs == 0.0 ? rep.lhs == 0.0 : (rep.ratio >= 1.0 / k_star && rep.ratio <= k_star);
  return rep;
}

std::vector<double> linearization_residual(const ReferenceSurface& f, const FieldBundle& psi,
                                           const std::vector<double>& eps) {
  validate_bundle(f, psi);
  FieldBundle lin;
  for (int c = 0; c < f.num_components(); ++c) {
    const double k = f.fiber_curvature(c);
    ScalarField l = flat_laplacian(psi[c]);
    for (std::size_t i = 0; i < l.size(); ++i) l[i] = -l[i] - k * k * psi[c][i];
    lin.push_back(std::move(l));
  }
  const double hf = f.mean_curvature();
  std::vector<double> out;
  for (double e : eps) {
    const SurfaceGeometry geo = build_geometry_param(f, scaled(psi, e));
    double m = 0.0;
    for (std::size_t c = 0; c < geo.comps.size(); ++c)
      for (std::size_t i = 0; i < lin[c].size(); ++i)
        m = std::max(m, std::abs((geo.comps[c].mean_curvature[i] - hf) / e - lin[c][i]));
    out.push_back(m);
  }
  return out;
}

LaplaceBoundsReport check_laplace_bounds_on_graph(const SurfaceGeometry& geo, const FieldBundle& f) {
  if (f.size() != geo.comps.size()) throw std::invalid_argument("check_laplace_bounds_on_graph: component mismatch");
  const int d = geo.chart_dim();
  LaplaceBoundsReport rep;
  for (std::size_t c = 0; c < f.size(); ++c) {
    const auto& cg = geo.comps[c];
    const PeriodicGrid& grid = cg.grid;
    if (!(f[c].grid == grid)) throw std::invalid_argument("check_laplace_bounds_on_graph: grid mismatch");
    const std::size_t n = grid.size();
    auto deriv = [&](const ScalarField& s, int a) {
      return spectral_derivative(s, a == 0 ? MultiIndex{1, 0} : MultiIndex{0, 1});
    };
    // dg[k][i][j] = d_k g_ij
    std::array<std::array<std::array<ScalarField, 2>, 2>, 2> dg;
    for (int i = 0; i < d; ++i)
      for (int j = i; j < d; ++j) {
        ScalarField gij(grid);
        for (std::size_t q = 0; q < n; ++q) gij[q] = cg.metric[q](i, j);
        for (int k = 0; k < d; ++k) {
          dg[k][i][j] = deriv(gij, k);
          dg[k][j][i] = dg[k][i][j];
        }
      }
    // Christoffel symbols gam[k][i][j] = Gamma^k_ij
    std::array<std::array<std::array<std::vector<double>, 2>, 2>, 2> gam;
    for (int k = 0; k < d; ++k)
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
          gam[k][i][j].assign(n, 0.0);
          for (std::size_t q = 0; q < n; ++q) {
            double v = 0.0;
            for (int l = 0; l < d; ++l)
              v += 0.5 * cg.metric_inv[q](k, l) * (dg[i][j][l][q] + dg[j][i][l][q] - dg[l][i][j][q]);
            gam[k][i][j][q] = v;
          }
        }
    const auto df = gradient_fields(f[c]);
    // covariant Hessian h_ij
    std::array<std::array<ScalarField, 2>, 2> h;
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) {
        h[i][j] = deriv(df[j], i);
        for (std::size_t q = 0; q < n; ++q)
          for (int k = 0; k < d; ++k) h[i][j][q] -= gam[k][i][j][q] * df[k][q];
      }
    ScalarField lap(grid);
    for (std::size_t q = 0; q < n; ++q)
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) lap[q] += cg.metric_inv[q](i, j) * h[i][j][q];
    std::array<std::array<std::array<ScalarField, 2>, 2>, 2> dh;  // dh[k][i][j] = d_k h_ij
    for (int k = 0; k < d; ++k)
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) dh[k][i][j] = deriv(h[i][j], k);
    const auto dlap = gradient_fields(lap);

    ScalarField hess_sq(grid), lap_sq(grid), curv(grid), third(grid), glap(grid), h2(grid);
    for (std::size_t q = 0; q < n; ++q) {
      const Mat2& gi = cg.metric_inv[q];
      double grad2 = 0.0, gl2 = 0.0, hs = 0.0, t3 = 0.0;
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
          grad2 += gi(i, j) * df[i][q] * df[j][q];
          gl2 += gi(i, j) * dlap[i][q] * dlap[j][q];
          for (int a = 0; a < d; ++a)
            for (int b = 0; b < d; ++b) hs += gi(i, a) * gi(j, b) * h[i][j][q] * h[a][b][q];
        }
      // third covariant derivative t_kij = d_k h_ij - Gamma^l_ki h_lj - Gamma^l_kj h_il
      double tk[2][2][2] = {};
      for (int k = 0; k < d; ++k)
        for (int i = 0; i < d; ++i)
          for (int j = 0; j < d; ++j) {
            double v = dh[k][i][j][q];
            for (int l = 0; l < d; ++l) v -= gam[l][k][i][q] * h[l][j][q] + gam[l][k][j][q] * h[i][l][q];
            tk[k][i][j] = v;
          }
      for (int k = 0; k < d; ++k)
        for (int i = 0; i < d; ++i)
          for (int j = 0; j < d; ++j)
            for (int a = 0; a < d; ++a)
              for (int b = 0; b < d; ++b)
                for (int e = 0; e < d; ++e) t3 += gi(k, a) * gi(i, b) * gi(j, e) * tk[k][i][j] * tk[a][b][e];
      const double jac = cg.area_element[q];
      hess_sq[q] = hs * jac;
      lap_sq[q] = lap[q] * lap[q] * jac;
      curv[q] = cg.b_sq[q] * grad2 * jac;
      third[q] = t3 * jac;
      glap[q] = gl2 * jac;
      h2[q] = (f[c][q] * f[c][q] + grad2 + hs) * jac;
    }
    rep.hessian_sq += quadrature(hess_sq);
    rep.laplacian_sq += quadrature(lap_sq);
    rep.curvature_term += quadrature(curv);
    rep.third_sq += quadrature(third);
    rep.grad_laplacian_sq += quadrature(glap);
    rep.h2_sq += quadrature(h2);
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

FieldBundle regraph(const ReferenceSurface& source, const FieldBundle& psi, const ReferenceSurface& target) {
  validate_bundle(source, psi);
  if (source.kind() != target.kind() || (source.curved() && source.radius() != target.radius()))
    throw std::invalid_argument("regraph: references are not translates of each other");
  FieldBundle out;
  if (!source.curved()) {
    const int n = source.ambient_dim();
    const Vec3 dof = target.chart_offset() - source.chart_offset();
    const auto hs = source.heights();
    const auto ht = target.heights();
    for (int c = 0; c < 2; ++c) {
      const double sgn = c == 0 ? -1.0 : 1.0;
      ScalarField phi = shift(psi[c], {dof[0], n == 3 ? dof[1] : 0.0});
      const double off = sgn * wrap_difference(hs[c] - ht[c]);
      for (double& v : phi.values) v += off;
      out.push_back(std::move(phi));
    }
    return out;
  }
  const double R = source.radius();
  const PeriodicGrid& g = psi[0].grid;
  const bool cyl = source.kind() == SurfaceKind::Cylinder;
  const double dz = cyl ? target.chart_offset()[2] - source.chart_offset()[2] : 0.0;
  const ScalarField shifted = cyl ? shift(psi[0], {0.0, dz}) : psi[0];
  const int n0 = g.n[0];
  const int n1 = cyl ? g.n[1] : 1;
  const PeriodicGrid row_grid = PeriodicGrid::make(1, {n0, 1}, {g.length[0], 1.0});
  std::vector<std::vector<std::complex<double>>> rows(n1);
  for (int i1 = 0; i1 < n1; ++i1) {
    ScalarField row(row_grid);
    for (int i0 = 0; i0 < n0; ++i0) row[i0] = shifted[static_cast<std::size_t>(i0) * n1 + i1];
    rows[i1] = forward(row).c;
  }
  const Vec3 cs = source.center();
  const Vec3 ct = target.center();
  const double d0x = wrap_difference(ct[0] - cs[0]);
  const double d0y = wrap_difference(ct[1] - cs[1]);
  ScalarField phi(g);
  bool failed = false;
#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < g.size(); ++i) {
    const auto xi = g.node(i);
    const int i1 = cyl ? static_cast<int>(i % n1) : 0;
    const double th = xi[0] / R;
    const double ex = std::cos(th), ey = std::sin(th);
    double ph = 0.0;
    bool ok = false;
    for (int it = 0; it < 60; ++it) {
      const double vx = d0x + (R + ph) * ex;
      const double vy = d0y + (R + ph) * ey;
      const double r = std::hypot(vx, vy);
      double s = R * std::atan2(vy, vx);
      if (s < 0.0) s += g.length[0];
      double val, der;
      eval_series(rows[i1], n0, g.length[0], s, val, der);
      const double fval = r - R - val;
      const double dth = (vx * ey - vy * ex) / (r * r);
      const double fder = (vx * ex + vy * ey) / r - der * R * dth;
      const double step = fval / fder;
      ph -= step;
      if (std::abs(step) <= 1e-15 * (R + std::abs(ph))) {
        ok = true;
        break;
      }
    }
    if (!ok || !std::isfinite(ph)) {
#pragma omp atomic write
      failed = true;
    }
    phi[i] = ph;
  }
  if (failed) throw GeometryError(GeometryError::Kind::GraphInvalid, "re-graphing did not converge");
  out.push_back(std::move(phi));
  return out;
}

FieldBundle translation_graph(const ReferenceSurface& f, const Vec3& p, int n_per_axis) {
  const ReferenceSurface moved = f.translated(p);
  return regraph(moved, zero_bundle(moved, n_per_axis), f);
}

}  // namespace tvmcf

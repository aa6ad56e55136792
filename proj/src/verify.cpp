#include "tvmcf/verify.hpp"

#include "tvmcf/stability.hpp"

#include <cmath>
#include <functional>

namespace tvmcf {

namespace {

struct FlowQuantities {
  double volume, perimeter, v_sq, grad_h_sq, distance;
};

FlowQuantities measure(const ReferenceSurface& f, const FieldBundle& psi) {
  const SurfaceGeometry g = build_geometry_param(f, psi);
  FlowQuantities q;
  q.volume = volume(f, psi);
  q.perimeter = perimeter(g);
  const FieldBundle v = normal_velocity(g);
  const double vl2 = surface_lp_norm(g, v, 2.0);
  q.v_sq = vl2 * vl2;
  q.grad_h_sq = surface_integral(g, surface_gradient_sq(g, g.mean_curvature()));
  q.distance = weak_distance(f, psi);
  return q;
}

FieldBundle product(const FieldBundle& a, const FieldBundle& b) {
  FieldBundle out = a;
  for (std::size_t c = 0; c < out.size(); ++c)
    for (std::size_t i = 0; i < out[c].size(); ++i) out[c][i] *= b[c][i];
  return out;
}

void finalize(DerivativeCheck& c, double scale, const DerivativeTolerances& tol) {
  c.rel_error = scale > 0.0 ? c.abs_error / scale : kInfinity;
  c.order_ratio = c.abs_error_half > 0.0 ? c.abs_error / c.abs_error_half : kInfinity;
  if (c.absolute_only)
    c.passed = c.abs_error <= tol.abs_tol && c.abs_error_half <= tol.abs_tol;
  else
    c.passed = c.rel_error <= tol.rel_tol && c.order_ratio >= tol.ratio_lo && c.order_ratio <= tol.ratio_hi;
}

void finalize_report(DerivativeReport& r) {
  r.passed = true;
  for (const auto& c : r.checks) r.passed = r.passed && c.passed;
}

FieldBundle field_of(const SurfaceGeometry& g, const std::function<double(const ComponentGeometry&, std::size_t)>& fn) {
  FieldBundle out;
  for (const auto& cg : g.comps) {
    ScalarField s(cg.grid);
    for (std::size_t i = 0; i < cg.size(); ++i) s[i] = fn(cg, i);
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<EmbeddingJet> displaced(const std::vector<EmbeddingJet>& base, const std::vector<std::array<ScalarField, 3>>& w,
                                    double s) {
  std::vector<EmbeddingJet> out = base;
  for (std::size_t c = 0; c < base.size(); ++c) {
    const PeriodicGrid& g = base[c].grid;
    std::array<Spectrum, 3> spec;
    for (int d = 0; d < 3; ++d) spec[d] = forward(w[c][d]);
    auto deriv = [&](int d, MultiIndex a) { return spectral_derivative(spec[d], a); };
    std::array<std::array<std::array<ScalarField, 3>, 2>, 2> dd;
    std::array<std::array<ScalarField, 3>, 2> d1;
    for (int d = 0; d < 3; ++d) {
      d1[0][d] = deriv(d, {1, 0});
      dd[0][0][d] = deriv(d, {2, 0});
      if (g.dim == 2) {
        d1[1][d] = deriv(d, {0, 1});
        dd[1][1][d] = deriv(d, {0, 2});
        dd[0][1][d] = deriv(d, {1, 1});
        dd[1][0][d] = dd[0][1][d];
      }
    }
    for (std::size_t i = 0; i < g.size(); ++i) {
      out[c].x[i] += s * Vec3(w[c][0][i], w[c][1][i], w[c][2][i]);
      for (int a = 0; a < g.dim; ++a) {
        out[c].dx[a][i] += s * Vec3(d1[a][0][i], d1[a][1][i], d1[a][2][i]);
        for (int b = 0; b < g.dim; ++b) out[c].ddx[a][b][i] += s * Vec3(dd[a][b][0][i], dd[a][b][1][i], dd[a][b][2][i]);
      }
    }
  }
  return out;
}

}  // namespace

DerivativeReport verify_time_derivatives(const ReferenceSurface& f, const FieldBundle& psi, double dt_fd,
                                         const DerivativeTolerances& tol) {
  FlowOptions opt;
  opt.scheme = Scheme::Explicit;
  const SurfaceGeometry g = build_geometry_param(f, psi);
  const FieldBundle v = normal_velocity(g);
  const FieldBundle h = g.mean_curvature();
  const FieldBundle lap = surface_laplacian(g, h);
  const auto grad = surface_gradient(g, h);
  const FieldBundle bsq = g.b_sq();

  const double a_volume = surface_integral(g, v);
  const double a_perimeter = surface_integral(g, product(h, v));
  const double a_vsq = -2.0 * second_variation(g, v) + surface_integral(g, product(h, product(v, product(v, v))));
  FieldBundle gh_integrand = field_of(g, [&](const ComponentGeometry& cg, std::size_t i) {
    const std::size_t c = static_cast<std::size_t>(&cg - g.comps.data());
    const double vv = v[c][i];
    const double l = lap[c][i];
    const Vec3& gr = grad[c][i];
    return -2.0 * (l * l - vv * bsq[c][i] * l) - 2.0 * vv * gr.dot(cg.shape[i] * gr) + gr.squaredNorm() * vv * h[c][i];
  });
  const double a_gradh = surface_integral(g, gh_integrand);
  const double a_distance = surface_integral(g, product(psi, v));

  auto differences = [&](double dt) {
    const FlowQuantities p = measure(f, advance(f, psi, dt, Scheme::Explicit, opt));
    const FlowQuantities m = measure(f, advance(f, psi, -dt, Scheme::Explicit, opt));
    const double s = 0.5 / dt;
    return std::array<double, 5>{(p.volume - m.volume) * s, (p.perimeter - m.perimeter) * s, (p.v_sq - m.v_sq) * s,
                                 (p.grad_h_sq - m.grad_h_sq) * s, (p.distance - m.distance) * s};
  };
  const auto full = differences(dt_fd);
  const auto half = differences(0.5 * dt_fd);
  const std::array<const char*, 5> names{"volume", "perimeter", "velocity_l2_sq", "grad_h_l2_sq", "weak_distance"};
  const std::array<double, 5> analytic{a_volume, a_perimeter, a_vsq, a_gradh, a_distance};

  DerivativeReport rep;
  rep.dt_fd = dt_fd;
  for (int k = 0; k < 5; ++k) {
    DerivativeCheck c;
    c.name = names[k];
    c.finite_difference = full[k];
    c.finite_difference_half = half[k];
    c.analytic = analytic[k];
    c.richardson_rel_error = std::abs((4.0 * half[k] - full[k]) / 3.0 - analytic[k]) / std::abs(analytic[k]);
    c.abs_error = std::abs(full[k] - analytic[k]);
    c.abs_error_half = std::abs(half[k] - analytic[k]);
    c.absolute_only = k == 0;
    finalize(c, std::abs(analytic[k]), tol);
    rep.checks.push_back(c);
  }
  finalize_report(rep);
  return rep;
}

DerivativeReport verify_normal_kinematics(const ReferenceSurface& f, const FieldBundle& psi, double dt_fd,
                                          const DerivativeTolerances& tol) {
  const std::vector<EmbeddingJet> jets = graph_embedding(f, psi);
  GeometryOptions loose;
  loose.validate = false;
  const SurfaceGeometry g = geometry_from_embedding(f, jets, loose);
  const FieldBundle v = normal_velocity(g);
  const FieldBundle h = g.mean_curvature();
  const FieldBundle lap = surface_laplacian(g, h);
  const auto grad = surface_gradient(g, h);
  std::vector<std::array<ScalarField, 3>> w;
  for (std::size_t c = 0; c < g.comps.size(); ++c) {
    std::array<ScalarField, 3> comp;
    for (int d = 0; d < 3; ++d) {
      comp[d] = ScalarField(g.comps[c].grid);
      for (std::size_t i = 0; i < comp[d].size(); ++i) comp[d][i] = v[c][i] * g.comps[c].normal[i][d];
    }
    w.push_back(std::move(comp));
  }

  struct Errors {
    double normal = 0.0, jacobian = 0.0, curvature = 0.0;
  };
  double scale_n = 0.0, scale_j = 0.0, scale_h = 0.0;
  for (std::size_t c = 0; c < g.comps.size(); ++c)
    for (std::size_t i = 0; i < g.comps[c].size(); ++i) {
      scale_n = std::max(scale_n, grad[c][i].norm());
      scale_j = std::max(scale_j, std::abs(v[c][i] * h[c][i]));
      scale_h = std::max(scale_h, std::abs(lap[c][i] - v[c][i] * g.comps[c].b_sq[i]));
    }
  auto errors = [&](double s) {
    const SurfaceGeometry gp = geometry_from_embedding(f, displaced(jets, w, s), loose);
    const SurfaceGeometry gm = geometry_from_embedding(f, displaced(jets, w, -s), loose);
    Errors e;
    for (std::size_t c = 0; c < g.comps.size(); ++c) {
      const auto& cg = g.comps[c];
      for (std::size_t i = 0; i < cg.size(); ++i) {
        const Vec3 dn = (gp.comps[c].normal[i] - gm.comps[c].normal[i]) / (2.0 * s);
        e.normal = std::max(e.normal, (dn - grad[c][i]).norm());
        const double dj = (gp.comps[c].area_element[i] - gm.comps[c].area_element[i]) / (2.0 * s) / cg.area_element[i];
        e.jacobian = std::max(e.jacobian, std::abs(dj - v[c][i] * h[c][i]));
        const double dh = (gp.comps[c].mean_curvature[i] - gm.comps[c].mean_curvature[i]) / (2.0 * s);
        e.curvature = std::max(e.curvature, std::abs(dh - (lap[c][i] - v[c][i] * cg.b_sq[i])));
      }
    }
    return e;
  };
  const Errors full = errors(dt_fd);
  const Errors half = errors(0.5 * dt_fd);

  DerivativeReport rep;
  rep.dt_fd = dt_fd;
  auto add = [&](const char* name, double e, double eh, double scale) {
    DerivativeCheck c;
    c.name = name;
    c.analytic = scale;
    c.abs_error = e;
    c.abs_error_half = eh;
    c.absolute_only = scale < 1e-9;
    finalize(c, scale, tol);
    rep.checks.push_back(c);
  };
  add("normal", full.normal, half.normal, scale_n);
  add("area_element", full.jacobian, half.jacobian, scale_j);
  add("mean_curvature", full.curvature, half.curvature, scale_h);
  finalize_report(rep);
  return rep;
}

}  // namespace tvmcf

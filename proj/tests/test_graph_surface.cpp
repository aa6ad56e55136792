#include <doctest.h>

#include "test_support.hpp"

#include <numbers>

using namespace tvmcf;
using namespace tvmcf::testing;

namespace {

constexpr double kPi = std::numbers::pi;

FieldBundle sample_bundle(const ReferenceSurface& f, int n, auto fn) {
  FieldBundle b = zero_bundle(f, n);
  for (int c = 0; c < f.num_components(); ++c)
    for (std::size_t i = 0; i < b[c].size(); ++i) {
      const auto x = b[c].grid.node(i);
      b[c][i] = fn(c, x[0], x[1]);
    }
  return b;
}

FieldBundle constant_bundle(const ReferenceSurface& f, int n, double v) {
  return sample_bundle(f, n, [v](int, double, double) { return v; });
}

double geometry_gap(const SurfaceGeometry& a, const SurfaceGeometry& b, bool shape) {
  double m = 0.0;
  for (std::size_t c = 0; c < a.comps.size(); ++c)
    for (std::size_t i = 0; i < a.comps[c].size(); ++i) {
      if (shape)
        m = std::max(m, (a.comps[c].shape[i] - b.comps[c].shape[i]).cwiseAbs().maxCoeff());
      else
        m = std::max(m, std::abs(a.comps[c].mean_curvature[i] - b.comps[c].mean_curvature[i]));
    }
  return m;
}

}  // namespace

TEST_CASE("identity graph reproduces the reference") {
  for (const auto& f : all_surfaces()) {
    CAPTURE(kind_name(f.kind()));
    const FieldBundle zero = zero_bundle(f, 32);
    for (const auto& geo : {build_geometry_param(f, zero), build_geometry_sdf(f, zero)}) {
      for (int c = 0; c < f.num_components(); ++c) {
        const auto& cg = geo.comps[c];
        for (std::size_t i = 0; i < cg.size(); i += 7) {
          const auto ref = f.reference_geometry(c, cg.grid.node(i));
          CHECK(cg.mean_curvature[i] == doctest::Approx(f.mean_curvature()).epsilon(1e-13));
          CHECK(cg.area_element[i] == doctest::Approx(1.0).epsilon(1e-13));
          CHECK((cg.normal[i] - ref.normal).norm() < 1e-13);
          CHECK((cg.shape[i] - f.shape_ambient(c, cg.grid.node(i))).cwiseAbs().maxCoeff() < 1e-12);
          CHECK(cg.alignment[i] == doctest::Approx(1.0));
        }
      }
    }
  }
}

TEST_CASE("concentric circle") {
  const double r = 0.2;
  const auto f = ReferenceSurface::circle(0.4, 0.6, r);
  for (double c : {0.03, -0.05}) {
    const FieldBundle psi = constant_bundle(f, 32, c);
    const auto p = build_geometry_param(f, psi);
    const auto s = build_geometry_sdf(f, psi);
    for (std::size_t i = 0; i < p.comps[0].size(); ++i) {
      CHECK(p.comps[0].mean_curvature[i] == doctest::Approx(1.0 / (r + c)).epsilon(1e-12));
      CHECK(std::abs(s.comps[0].mean_curvature[i] - 1.0 / (r + c)) < 1e-10);
      CHECK(p.comps[0].area_element[i] == doctest::Approx((r + c) / r).epsilon(1e-12));
    }
    CHECK(volume(f, psi) == doctest::Approx(kPi * (r + c) * (r + c)).epsilon(1e-12));
    CHECK(perimeter(p) == doctest::Approx(2.0 * kPi * (r + c)).epsilon(1e-12));
  }
  const double c = 0.03;
  CHECK(weak_distance(f, constant_bundle(f, 32, c)) ==
        doctest::Approx(2.0 * kPi * (r * c * c / 2.0 + c * c * c / 3.0)).epsilon(1e-12));
}

TEST_CASE("graph over a plane matches the classical curvature formula") {
  const auto f = ReferenceSurface::lamella(0.25, 0.75);
  const double eps = 0.02;
  const double w = 2.0 * kPi;
  const FieldBundle psi = sample_bundle(f, 64, [&](int c, double x, double) { return c == 1 ? eps * std::sin(w * x) : 0.0; });
  for (const auto& geo : {build_geometry_param(f, psi), build_geometry_sdf(f, psi)}) {
    const auto& cg = geo.comps[1];
    double err = 0.0;
    for (std::size_t i = 0; i < cg.size(); ++i) {
      const double x = cg.grid.node(i)[0];
      const double d1 = eps * w * std::cos(w * x);
      const double d2 = -eps * w * w * std::sin(w * x);
      err = std::max(err, std::abs(cg.mean_curvature[i] + d2 / std::pow(1.0 + d1 * d1, 1.5)));
    }
    CHECK(err < 1e-8);
    for (double h : geo.comps[0].mean_curvature) CHECK(std::abs(h) < 1e-14);
  }
}

TEST_CASE("curvature paths agree on random graphs") {
  std::mt19937_64 rng(11);
  for (const auto& f : all_surfaces()) {
    CAPTURE(kind_name(f.kind()));
    for (int trial = 0; trial < 4; ++trial) {
      const FieldBundle psi = random_bundle(f, 64, 4, 0.1, rng);
      const auto p = build_geometry_param(f, psi);
      const auto s = build_geometry_sdf(f, psi);
      CHECK(geometry_gap(p, s, false) < 1e-7);
      CHECK(geometry_gap(p, s, true) < 1e-7);
      for (const auto& cg : p.comps)
        for (std::size_t i = 0; i < cg.size(); ++i) {
          CHECK(std::abs(cg.normal[i].norm() - 1.0) < 1e-14);
          CHECK(cg.alignment[i] > 0.0);
          CHECK(std::abs(cg.shape[i].trace() - cg.mean_curvature[i]) < 1e-10);
        }
    }
  }
}

TEST_CASE("flipped curvature sign breaks path agreement") {
  std::mt19937_64 rng(5);
  const auto f = ReferenceSurface::circle(0.5, 0.5, 0.2);
  const FieldBundle psi = random_bundle(f, 64, 4, 0.05, rng);
  const auto p = build_geometry_param(f, psi);
  const auto s = build_geometry_sdf(f.with_flipped_curvature_sign(), psi);
  CHECK(geometry_gap(p, s, false) > 1.0);
}

TEST_CASE("graph validity guard") {
  const auto f = ReferenceSurface::lamella(0.25, 0.75);
  const FieldBundle steep = sample_bundle(f, 32, [](int, double x, double) { return 0.5 * std::sin(2.0 * kPi * x); });
  CHECK_THROWS_AS(build_geometry_param(f, steep), GeometryError);
  try {
    build_geometry_sdf(f, steep);
  } catch (const GeometryError& e) {
    CHECK(e.kind() == GeometryError::Kind::GraphInvalid);
  }
  GeometryOptions loose;
  loose.validate = false;
  CHECK_NOTHROW(build_geometry_param(f, steep, loose));

  std::mt19937_64 rng(3);
  FieldBundle noisy = zero_bundle(f, 32);
  for (auto& c : noisy)
    for (double& v : c.values) v = 1e-3 * (uniform01(rng) - 0.5);
  GeometryOptions strict;
  strict.check_resolution = true;
  try {
    build_geometry_param(f, noisy, strict);
    FAIL("expected an under-resolution error");
  } catch (const GeometryError& e) {
    CHECK(e.kind() == GeometryError::Kind::UnderResolved);
  }
  CHECK_THROWS_AS(build_geometry_param(f, zero_bundle(ReferenceSurface::circle(0.5, 0.5, 0.2), 32)),
                  std::invalid_argument);
}

TEST_CASE("linearization of the mean curvature") {
  const auto lam = ReferenceSurface::lamella(0.25, 0.75);
  const FieldBundle s = sample_bundle(lam, 64, [](int, double x, double) { return std::sin(2.0 * kPi * x); });
  const auto res = linearization_residual(lam, s, {1e-2, 1e-3, 1e-4});
  // Exact residual from the closed-form curvature of a graph over a plane.
  const double k = 2.0 * kPi;
  for (int j = 0; j < 3; ++j) {
    const double e = std::pow(10.0, -2 - j);
    double exact = 0.0;
    for (int i = 0; i < 64; ++i) {
      const double x = i / 64.0;
      const double d1 = e * k * std::cos(k * x);
      exact = std::max(exact, std::abs(k * k * std::sin(k * x) * (std::pow(1.0 + d1 * d1, -1.5) - 1.0)));
    }
    CHECK(res[j] == doctest::Approx(exact).epsilon(1e-6));
  }
  CHECK(res[1] <= 1e-3);
  CHECK(res[0] / res[1] > 5.0);
  CHECK(res[1] / res[2] > 5.0);
  CHECK(linearization_residual(lam, zero_bundle(lam, 32), {1e-3})[0] == 0.0);

  // Infinitesimal translations lie in the kernel of the linearization.
  const auto cyl = ReferenceSurface::cylinder(0.5, 0.5, 0.25);
  const Vec3 p(0.3, -0.7, 0.4);
  const FieldBundle tr = sample_bundle(cyl, 64, [&](int, double s0, double) {
    const double th = s0 / 0.25;
    return p[0] * std::cos(th) + p[1] * std::sin(th);
  });
  const auto rt = linearization_residual(cyl, tr, {1e-2, 1e-3, 1e-4});
  for (int k = 0; k < 3; ++k) CHECK(rt[k] / std::pow(10.0, -2 - k) < 100.0);
}

TEST_CASE("volume and its offset polynomial") {
  CHECK(volume(ReferenceSurface::strip(0.3, 0.7), zero_bundle(ReferenceSurface::strip(0.3, 0.7), 16)) ==
        doctest::Approx(0.4));
  const auto cyl = ReferenceSurface::cylinder(0.5, 0.5, 0.25);
  CHECK(volume(cyl, zero_bundle(cyl, 16)) == doctest::Approx(kPi * 0.0625));
  const auto lam = ReferenceSurface::lamella(0.25, 0.75);
  const FieldBundle top = sample_bundle(lam, 32, [](int c, double x, double) { return c == 1 ? 0.01 * std::sin(2 * kPi * x) : 0.0; });
  CHECK(std::abs(volume(lam, top) - 0.5) < 1e-15);

  std::mt19937_64 rng(17);
  for (const auto& f : all_surfaces()) {
    CAPTURE(kind_name(f.kind()));
    const FieldBundle psi = random_bundle(f, 32, 3, 0.05, rng);
    const auto a = volume_polynomial(f, psi);
    double prev = -kInfinity;
    for (double c = -0.02; c <= 0.02 + 1e-12; c += 0.005) {
      FieldBundle shifted = psi;
      for (auto& comp : shifted)
        for (double& v : comp.values) v += c;
      const double v = volume(f, shifted);
      CHECK(v == doctest::Approx(a[0] + a[1] * c + a[2] * c * c).epsilon(1e-14));
      CHECK(v > prev);
      prev = v;
    }
  }

  // Enclosed area of a perturbed circle from the spectral shoelace formula.
  const auto circ = ReferenceSurface::circle(0.5, 0.5, 0.2);
  const FieldBundle psi = random_bundle(circ, 64, 5, 0.05, rng);
  const auto jets = graph_embedding(circ, psi);
  std::vector<double> integrand(psi[0].size());
  for (std::size_t i = 0; i < integrand.size(); ++i) {
    const Vec3 x = jets[0].x[i] - circ.center();
    const Vec3 t = jets[0].dx[0][i];
    integrand[i] = 0.5 * (x[0] * t[1] - x[1] * t[0]);
  }
  CHECK(ordered_sum(integrand) * psi[0].grid.cell() == doctest::Approx(volume(circ, psi)).epsilon(1e-13));
}

TEST_CASE("perimeter of reference surfaces") {
  const auto circ = ReferenceSurface::circle(0.5, 0.5, 0.2);
  CHECK(perimeter(build_geometry_param(circ, zero_bundle(circ, 16))) == doctest::Approx(2 * kPi * 0.2));
  const auto lam = ReferenceSurface::lamella(0.25, 0.75);
  CHECK(perimeter(build_geometry_param(lam, zero_bundle(lam, 16))) == doctest::Approx(2.0));
  const auto cyl = ReferenceSurface::cylinder(0.5, 0.5, 0.25);
  CHECK(perimeter(build_geometry_param(cyl, zero_bundle(cyl, 16))) == doctest::Approx(2 * kPi * 0.25));
}

TEST_CASE("weak distance is comparable to the squared L2 norm") {
  std::mt19937_64 rng(23);
  for (const auto& f : all_surfaces()) {
    CAPTURE(kind_name(f.kind()));
    CHECK(weak_distance(f, zero_bundle(f, 16)) == 0.0);
    for (int trial = 0; trial < 10; ++trial) {
      const FieldBundle psi = random_bundle(f, 32, 4, 0.05, rng);
      const double l2 = lp_norm(psi, 2.0);
      const double d = weak_distance(f, psi);
      CHECK(d >= l2 * l2 / 2.2);
      CHECK(d <= 2.2 * l2 * l2);
      const double ratio = d / (0.5 * l2 * l2);
      CHECK(ratio >= 1.0 / 1.1);
      CHECK(ratio <= 1.1);
    }
  }
}

TEST_CASE("surface scalar operators") {
  const auto lam = ReferenceSurface::lamella(0.25, 0.75);
  const auto flat = build_geometry_param(lam, zero_bundle(lam, 32));
  const FieldBundle one = constant_bundle(lam, 32, 2.5);
  const auto ops = surface_scalar_ops(flat, one);
  CHECK(ops.average == doctest::Approx(2.5));
  for (const auto& c : ops.laplacian)
    for (double v : c.values) CHECK(std::abs(v) < 1e-12);
  for (const auto& c : ops.gradient_sq)
    for (double v : c.values) CHECK(std::abs(v) < 1e-20);

  const FieldBundle s = sample_bundle(lam, 32, [](int, double x, double) { return std::sin(2 * kPi * x); });
  const auto lap = surface_laplacian(flat, s);
  for (int c = 0; c < 2; ++c)
    for (std::size_t i = 0; i < s[c].size(); ++i)
      CHECK(std::abs(lap[c][i] + 4 * kPi * kPi * s[c][i]) < 1e-10);

  const double r = 0.2;
  const auto circ = ReferenceSurface::circle(0.5, 0.5, r);
  const auto cg = build_geometry_param(circ, zero_bundle(circ, 32));
  const FieldBundle f = sample_bundle(circ, 32, [r](int, double s0, double) { return std::sin(s0 / r); });
  const auto lc = surface_laplacian(cg, f);
  for (std::size_t i = 0; i < f[0].size(); ++i) CHECK(std::abs(lc[0][i] + f[0][i] / (r * r)) < 1e-9);

  CHECK_THROWS_AS(surface_laplacian(cg, zero_bundle(circ, 16)), std::invalid_argument);
}

TEST_CASE("divergence theorem and integration by parts on graphs") {
  std::mt19937_64 rng(29);
  const double w = 2 * kPi;
  for (const auto& f : all_surfaces()) {
    CAPTURE(kind_name(f.kind()));
    const FieldBundle psi = random_bundle(f, 64, 4, 0.05, rng);
    const auto geo = build_geometry_param(f, psi);
    // X(x) = (sin 2pi y, cos 2pi x + sin 2pi z, cos 2pi y) on the torus.
    FieldBundle div, flux;
    for (const auto& cg : geo.comps) {
      ScalarField d(cg.grid), q(cg.grid);
      for (std::size_t i = 0; i < cg.size(); ++i) {
        const Vec3& x = cg.position[i];
        const Vec3 xv(std::sin(w * x[1]), std::cos(w * x[0]) + std::sin(w * x[2]), std::cos(w * x[1]));
        Mat3 dx = Mat3::Zero();
        dx(0, 1) = w * std::cos(w * x[1]);
        dx(1, 0) = -w * std::sin(w * x[0]);
        dx(1, 2) = w * std::cos(w * x[2]);
        dx(2, 1) = -w * std::sin(w * x[1]);
        const Vec3& n = cg.normal[i];
        d[i] = dx.trace() - n.dot(dx * n);
        q[i] = cg.mean_curvature[i] * xv.dot(n);
      }
      div.push_back(std::move(d));
      flux.push_back(std::move(q));
    }
    CHECK(std::abs(surface_integral(geo, div) - surface_integral(geo, flux)) < 1e-8);

    FieldBundle phi, chi;
    for (const auto& cg : geo.comps) {
      phi.push_back(random_band_limited(cg.grid, 3, rng));
      chi.push_back(random_band_limited(cg.grid, 3, rng));
    }
    const auto lap = surface_laplacian(geo, chi);
    const auto gphi = surface_gradient(geo, phi);
    const auto gchi = surface_gradient(geo, chi);
    FieldBundle lhs, rhs;
    for (std::size_t c = 0; c < geo.comps.size(); ++c) {
      ScalarField a(phi[c].grid), b(phi[c].grid);
      for (std::size_t i = 0; i < a.size(); ++i) {
        a[i] = phi[c][i] * lap[c][i];
        b[i] = gphi[c][i].dot(gchi[c][i]);
      }
      lhs.push_back(std::move(a));
      rhs.push_back(std::move(b));
    }
    CHECK(std::abs(surface_integral(geo, lhs) + surface_integral(geo, rhs)) < 1e-8);
  }
}

TEST_CASE("norm transfer") {
  const auto circ = ReferenceSurface::circle(0.5, 0.5, 0.2);
  std::mt19937_64 rng(31);
  const FieldBundle h = {random_band_limited(chart_grid(circ, 0, 32), 3, rng)};
  const auto id = norm_transfer_check(circ, zero_bundle(circ, 32), h);
  CHECK(id.value_ratio == doctest::Approx(1.0));
  CHECK(id.gradient_ratio == doctest::Approx(1.0));
  const double c = 0.04;
  const auto rep = norm_transfer_check(circ, constant_bundle(circ, 32, c), h);
  CHECK(rep.value_ratio == doctest::Approx(std::sqrt(0.2 / (0.2 + c))).epsilon(1e-12));
  for (const auto& f : all_surfaces()) {
    for (int trial = 0; trial < 5; ++trial) {
      const FieldBundle psi = random_bundle(f, 32, 4, 0.05, rng);
      FieldBundle g;
      for (const auto& comp : psi) g.push_back(random_band_limited(comp.grid, 3, rng));
      const auto r = norm_transfer_check(f, psi, g);
      CHECK(r.within);
      CHECK(r.value_ratio >= 0.9);
      CHECK(r.value_ratio <= 1.1);
      CHECK(r.gradient_ratio >= 0.9);
      CHECK(r.gradient_ratio <= 1.1);
    }
  }
}

TEST_CASE("H3 control") {
  const auto lam = ReferenceSurface::lamella(0.25, 0.75);
  const auto zero = h3_control_check(lam, zero_bundle(lam, 32), 5.0);
  CHECK(zero.lhs == 0.0);
  CHECK(zero.rhs == 0.0);
  CHECK(zero.within);

  const double eps = 1e-3;
  const FieldBundle pair = sample_bundle(lam, 32, [eps](int, double x, double) { return eps * std::sin(2 * kPi * x); });
  const auto rep = h3_control_check(lam, pair, 5.0);
  const double grad_h = eps * std::pow(2 * kPi, 3) * std::sqrt(2.0 * 0.5);
  CHECK(rep.rhs == doctest::Approx(grad_h + eps * std::sqrt(0.5)).epsilon(1e-4));
  CHECK(std::isfinite(rep.ratio));

  std::mt19937_64 rng(37);
  double lo = kInfinity, hi = 0.0;
  for (int trial = 0; trial < 40; ++trial) {
    const auto r = h3_control_check(lam, random_bundle(lam, 32, 4, 0.02, rng), 5.0);
    lo = std::min(lo, r.ratio);
    hi = std::max(hi, r.ratio);
  }
  CHECK(hi / lo <= 25.0);
}

TEST_CASE("Laplace bounds on graph metrics") {
  std::mt19937_64 rng(41);
  const auto cyl = ReferenceSurface::cylinder(0.5, 0.5, 0.25);
  const auto flat = build_geometry_param(cyl, zero_bundle(cyl, 32));
  const FieldBundle f = {random_band_limited(flat.comps[0].grid, 3, rng)};
  const auto on_ref = check_laplace_bounds_on_graph(flat, f);
  const auto chart = check_laplace_bounds(f, {ScalarField(f[0].grid)});
  CHECK(on_ref.hessian_sq == doctest::Approx(chart.hessian_sq).epsilon(1e-10));
  CHECK(on_ref.laplacian_sq == doctest::Approx(chart.laplacian_sq).epsilon(1e-10));

  const auto geo = build_geometry_param(cyl, random_bundle(cyl, 32, 3, 0.05, rng));
  const auto rep = check_laplace_bounds_on_graph(geo, f);
  CHECK(rep.hessian_sq > 0.0);
  CHECK(std::isfinite(rep.required_c_n));
  CHECK(std::isfinite(rep.required_c_sigma));
  CHECK(rep.holds(rep.required_c_n, rep.required_c_sigma, 1e-12));
}

TEST_CASE("translation graphs and re-graphing") {
  const auto lam = ReferenceSurface::lamella(0.25, 0.75);
  const auto tl = translation_graph(lam, Vec3(0.1, 0.2, 0.03), 16);
  for (double v : tl[0].values) CHECK(v == doctest::Approx(-0.03));
  for (double v : tl[1].values) CHECK(v == doctest::Approx(0.03));

  const double r = 0.2;
  const auto circ = ReferenceSurface::circle(0.5, 0.5, r);
  const Vec3 p(0.02, -0.015, 0.0);
  const auto tc = translation_graph(circ, p, 64);
  for (std::size_t i = 0; i < tc[0].size(); ++i) {
    const double th = tc[0].grid.node(i)[0] / r;
    const double pe = p[0] * std::cos(th) + p[1] * std::sin(th);
    const double exact = pe - r + std::sqrt(r * r - p.squaredNorm() + pe * pe);
    CHECK(std::abs(tc[0][i] - exact) < 1e-13);
  }

  std::mt19937_64 rng(43);
  for (const auto& f : all_surfaces()) {
    CAPTURE(kind_name(f.kind()));
    const FieldBundle psi = random_bundle(f, 64, 3, 0.02, rng);
    const Vec3 q(0.011, -0.007, f.ambient_dim() == 3 ? 0.013 : 0.0);
    const auto moved = f.translated(q);
    const auto there = regraph(f, psi, moved);
    const auto back = regraph(moved, there, f);
    for (std::size_t c = 0; c < psi.size(); ++c) CHECK(max_abs(back[c].values, psi[c].values) < 1e-9);
    // Both graphs describe the same set: volumes agree.
    CHECK(volume(moved, there) == doctest::Approx(volume(f, psi)).epsilon(1e-9));
  }
  CHECK_THROWS_AS(regraph(circ, zero_bundle(circ, 16), ReferenceSurface::circle(0.5, 0.5, 0.3)), std::invalid_argument);
}

#include <doctest.h>

#include "test_support.hpp"
#include "tvmcf/diagnostics.hpp"

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

}  // namespace

TEST_CASE("translate fit recovers exact translates") {
  for (const auto& f : all_surfaces()) {
    CAPTURE(kind_name(f.kind()));
    const Vec3 p = f.ambient_dim() == 3 ? Vec3(0.012, -0.008, 0.005) : Vec3(0.012, -0.008, 0.0);
    const FieldBundle psi = translation_graph(f, p, 32);
    const TranslateFit fit = fit_translate(f, psi);
    Vec3 expect = p;
    if (!f.curved()) expect.head(f.ambient_dim() - 1).setZero();
    if (f.kind() == SurfaceKind::Cylinder) expect[2] = 0.0;
    CHECK((fit.p - expect).norm() < 1e-10);
    CHECK(fit.residual <= 1e-18);
    CHECK(fit.residual <= fit.residual_zero);
    CHECK(fit.method == "refined");
    CHECK_FALSE(fit.regraph_failed);
  }
}

TEST_CASE("translate fit on lamella modes") {
  const auto lam = ReferenceSurface::lamella(0.25, 0.75);
  const FieldBundle mode = sample_bundle(lam, 32, [](int, double x, double y) { return 1e-3 * std::sin(2 * kPi * x) * std::cos(2 * kPi * y); });
  CHECK(fit_translate(lam, mode).p.norm() < 1e-14);

  const double c = 2e-3, eps = 1e-3;
  const FieldBundle shifted = sample_bundle(lam, 32, [&](int comp, double x, double) {
    return (comp == 0 ? -c : c) + eps * std::sin(2 * kPi * x);
  });
  const TranslateFit fit = fit_translate(lam, shifted);
  CHECK(std::abs(fit.p[2] - c) <= 10 * eps * eps);
  CHECK(fit.residual <= fit.residual_zero);
}

TEST_CASE("diagnostics record") {
  const auto circ = ReferenceSurface::circle(0.5, 0.5, 0.2);
  const FieldBundle zero = zero_bundle(circ, 32);
  const auto r0 = record(circ, zero, build_geometry_param(circ, zero), 10.0);
  CHECK(r0.v_l2 < 1e-13);
  CHECK(r0.lyapunov < 1e-24);
  CHECK(r0.d_ref == 0.0);
  CHECK(r0.perimeter == doctest::Approx(2 * kPi * 0.2));

  const FieldBundle moved = translation_graph(circ, Vec3(0.01, 0.02, 0.0), 32);
  const auto rt = record(circ, moved, build_geometry_param(circ, moved), 10.0);
  CHECK(rt.v_l2 < 1e-10);
  CHECK(rt.d_ref > 1e-6);
  CHECK(rt.d_fit < 1e-18);
  CHECK(rt.phi_w25 < 1e-8);
  CHECK(rt.p[0] == doctest::Approx(0.01));

  const auto lam = ReferenceSurface::lamella(0.25, 0.75);
  const double eps = 1e-4;
  const FieldBundle top = sample_bundle(lam, 32, [eps](int c, double x, double) { return c == 1 ? eps * std::sin(2 * kPi * x) : 0.0; });
  const auto rl = record(lam, top, build_geometry_param(lam, top), 10.0);
  CHECK(rl.v_l2 == doctest::Approx(eps * std::pow(2 * kPi, 2) / std::sqrt(2.0)).epsilon(1e-4));
  CHECK(rl.grad_h_l2 == doctest::Approx(eps * std::pow(2 * kPi, 3) / std::sqrt(2.0)).epsilon(1e-4));
  CHECK(rl.lyapunov == doctest::Approx(rl.grad_h_l2 * rl.grad_h_l2 + 10.0 * rl.v_l2 * rl.v_l2));
  CHECK(rl.volume == doctest::Approx(0.5));
  CHECK(rl.psi_c1 == doctest::Approx(eps * (1 + 2 * kPi)));
}

TEST_CASE("normal velocity") {
  const auto circ = ReferenceSurface::circle(0.5, 0.5, 0.2);
  for (const auto& c : normal_velocity(build_geometry_param(circ, zero_bundle(circ, 16))))
    for (double v : c.values) CHECK(std::abs(v) < 1e-12);
  const auto lam = ReferenceSurface::lamella(0.25, 0.75);
  const double eps = 1e-4;
  const FieldBundle top = sample_bundle(lam, 32, [eps](int c, double x, double) { return c == 1 ? eps * std::sin(2 * kPi * x) : 0.0; });
  const auto v = normal_velocity(build_geometry_param(lam, top));
  for (std::size_t i = 0; i < v[1].size(); ++i) {
    const double x = v[1].grid.node(i)[0];
    CHECK(std::abs(v[1][i] + eps * 4 * kPi * kPi * std::sin(2 * kPi * x)) < 1e-5 * eps);
  }
  std::mt19937_64 rng(5);
  for (const auto& f : all_surfaces()) {
    const auto g = build_geometry_param(f, random_bundle(f, 32, 4, 0.05, rng));
    CHECK(std::abs(surface_integral(g, normal_velocity(g))) < 1e-12);
  }
}

TEST_CASE("decay fits") {
  std::vector<double> t, y, flat;
  for (int i = 0; i <= 20; ++i) {
    t.push_back(0.1 * i);
    y.push_back(3.0 * std::exp(-2.0 * 0.1 * i));
    flat.push_back(0.7);
  }
  const DecayFit fit = fit_decay(t, y, 0.0, 2.0);
  CHECK(fit.rate == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(fit.amplitude == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(fit.r_squared == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(fit.samples == 21);
  CHECK(std::abs(fit_decay(t, flat, 0.5, 1.5).rate) < 1e-14);
  y[5] = 0.0;
  CHECK_THROWS_AS(fit_decay(t, y, 0.0, 1.0), std::invalid_argument);
  CHECK_NOTHROW(fit_decay(t, y, 0.6, 1.0));
}

TEST_CASE("decay exponents and W2q norms") {
  CHECK(decay_interpolation_alpha(4, 2) == doctest::Approx(29.0 / 30.0));
  CHECK(sigma0(1.0, 3) == doctest::Approx((1.0 / 3.0 - 0.2) / 2.0));
  CHECK(sigma0(1.0, 3) > 0.0);
  CHECK_THROWS_AS(validate_w2q_exponent(4, 6.0), std::invalid_argument);
  CHECK_NOTHROW(validate_w2q_exponent(4, 5.9));
  CHECK_NOTHROW(validate_w2q_exponent(3, 50.0));
  CHECK_THROWS_AS(validate_w2q_exponent(3, 0.5), std::invalid_argument);
  const auto lam = ReferenceSurface::lamella(0.25, 0.75);
  CHECK(w2q_norm(zero_bundle(lam, 16), 3, 5.0) == 0.0);
  CHECK(chart_lambda1(lam) == doctest::Approx(4 * kPi * kPi));
  CHECK(chart_lambda1(ReferenceSurface::cylinder(0.5, 0.5, 0.25)) == doctest::Approx(16.0));
  CHECK(chart_lambda1(ReferenceSurface::circle(0.5, 0.5, 0.2)) == doctest::Approx(25.0));
}

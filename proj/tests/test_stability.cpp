#include <doctest.h>

#include "test_support.hpp"
#include "tvmcf/stability.hpp"

#include <numbers>

using namespace tvmcf;
using namespace tvmcf::testing;

namespace {

constexpr double kPi = std::numbers::pi;

SurfaceGeometry reference_geometry(const ReferenceSurface& f, int n) { return build_geometry_param(f, zero_bundle(f, n)); }

FieldBundle sample_bundle(const ReferenceSurface& f, int n, auto fn) {
  FieldBundle b = zero_bundle(f, n);
  for (int c = 0; c < f.num_components(); ++c)
    for (std::size_t i = 0; i < b[c].size(); ++i) {
      const auto x = b[c].grid.node(i);
      b[c][i] = fn(c, x[0], x[1]);
    }
  return b;
}

FieldBundle project_mean(const SurfaceGeometry& g, FieldBundle f) {
  const double m = surface_average(g, f);
  for (auto& c : f)
    for (double& v : c.values) v -= m;
  return f;
}

double cylinder_sigma(double r) {
  const double z = (4 * kPi * kPi - 1 / (r * r)) / (1 + 4 * kPi * kPi);
  const double ang = (3 / (r * r)) / (1 + 4 / (r * r));
  return std::min(z, ang);
}

}  // namespace

TEST_CASE("translation fields") {
  const auto lam = ReferenceSurface::lamella(0.25, 0.75);
  const auto tl = translation_fields(reference_geometry(lam, 16));
  REQUIRE(tl.size() == 1);
  CHECK(tl.directions[0] == 2);
  for (double v : tl.fields[0][0].values) CHECK(v == doctest::Approx(-1.0));
  for (double v : tl.fields[0][1].values) CHECK(v == doctest::Approx(1.0));
  CHECK(tl.gram(0, 0) == doctest::Approx(2.0));

  const double r = 0.2;
  const auto circ = ReferenceSurface::circle(0.5, 0.5, r);
  const auto tc = translation_fields(reference_geometry(circ, 32));
  REQUIRE(tc.size() == 2);
  for (std::size_t i = 0; i < 32; ++i) {
    const double th = tc.fields[0][0].grid.node(i)[0] / r;
    CHECK(tc.fields[0][0][i] == doctest::Approx(std::cos(th)));
    CHECK(tc.fields[1][0][i] == doctest::Approx(std::sin(th)));
  }
  CHECK(tc.gram(0, 1) == doctest::Approx(0.0).epsilon(1e-14));

  const auto cyl = ReferenceSurface::cylinder(0.5, 0.5, 0.25);
  const auto ty = translation_fields(reference_geometry(cyl, 16));
  REQUIRE(ty.size() == 2);
  CHECK(ty.directions == std::vector<int>{0, 1});
  CHECK(ty.gram.ldlt().isPositive());
}

TEST_CASE("second variation examples") {
  for (const auto& f : all_surfaces()) {
    CAPTURE(kind_name(f.kind()));
    const auto g = reference_geometry(f, 32);
    for (const auto& t : translation_fields(g).fields) CHECK(std::abs(second_variation(g, t)) < 1e-10);
  }
  const auto lam = ReferenceSurface::lamella(0.25, 0.75);
  const FieldBundle top = sample_bundle(lam, 32, [](int c, double x, double) { return c == 1 ? std::sin(2 * kPi * x) : 0.0; });
  CHECK(second_variation(reference_geometry(lam, 32), top) == doctest::Approx(4 * kPi * kPi * 0.5).epsilon(1e-12));

  const double r = 0.2;
  const auto circ = ReferenceSurface::circle(0.5, 0.5, r);
  const FieldBundle c2 = sample_bundle(circ, 32, [r](int, double s, double) { return std::cos(2 * s / r); });
  CHECK(second_variation(reference_geometry(circ, 32), c2) == doctest::Approx(3 * kPi / r).epsilon(1e-12));

  const FieldBundle shifted = sample_bundle(circ, 32, [r](int, double s, double) { return 1.0 + std::cos(2 * s / r); });
  CHECK_THROWS_AS(second_variation(reference_geometry(circ, 32), shifted), std::invalid_argument);
}

TEST_CASE("second variation is symmetric bilinear") {
  std::mt19937_64 rng(3);
  for (const auto& f : all_surfaces()) {
    CAPTURE(kind_name(f.kind()));
    const auto g = build_geometry_param(f, random_bundle(f, 32, 3, 0.05, rng));
    for (int trial = 0; trial < 5; ++trial) {
      FieldBundle a, b;
      for (const auto& cg : g.comps) {
        a.push_back(random_band_limited(cg.grid, 4, rng));
        b.push_back(random_band_limited(cg.grid, 4, rng));
      }
      a = project_mean(g, a);
      b = project_mean(g, b);
      FieldBundle sum = a, diff = a;
      for (std::size_t c = 0; c < a.size(); ++c)
        for (std::size_t i = 0; i < a[c].size(); ++i) {
          sum[c][i] += b[c][i];
          diff[c][i] -= b[c][i];
        }
      const double bab = second_variation_bilinear(g, a, b);
      const double polar = 0.25 * (second_variation(g, sum) - second_variation(g, diff));
      CHECK(std::abs(bab - polar) <= 1e-12 * (std::abs(second_variation(g, a)) + std::abs(second_variation(g, b))));
      CHECK(bab == doctest::Approx(second_variation_bilinear(g, b, a)).epsilon(1e-13));
    }
  }
}

TEST_CASE("sigma1 of the lamella") {
  const auto g = reference_geometry(ReferenceSurface::lamella(0.25, 0.75), 32);
  const auto rep = sigma1(g);
  const double exact = 4 * kPi * kPi / (1 + 4 * kPi * kPi);
  CHECK(std::abs(rep.sigma1 - exact) < 1e-10);
  CHECK(rep.residual <= 1e-9);
  CHECK(rep.certified_min >= rep.sigma1 - 1e-9);
  CHECK(rep.mean_zero_enforced);
  CHECK(rep.translation_orthogonality_enforced);
  CHECK(rep.admissible_dim == rep.basis_dim - 2);
  CHECK(rayleigh_quotient(g, rep.minimizer) == doctest::Approx(rep.sigma1).epsilon(1e-10));
}

TEST_CASE("sigma1 of curved references") {
  for (double r : {0.1, 0.2, 0.3, 0.45}) {
    const auto rep = sigma1(reference_geometry(ReferenceSurface::circle(0.5, 0.5, r), 32));
    CHECK(rep.sigma1 == doctest::Approx(3.0 / (r * r + 4.0)).epsilon(1e-10));
    CHECK(rep.sigma1 > 0.0);
  }
  for (double r : {0.12, 0.15, 0.17, 0.25}) {
    CAPTURE(r);
    const auto rep = sigma1(reference_geometry(ReferenceSurface::cylinder(0.5, 0.5, r), 32));
    CHECK(rep.sigma1 == doctest::Approx(cylinder_sigma(r)).epsilon(1e-10));
    CHECK(rep.residual <= 1e-9);
    CHECK((rep.sigma1 > 0.0) == (r > 1.0 / (2 * kPi)));
  }
}

TEST_CASE("sigma1 lower-bounds random admissible Rayleigh quotients") {
  std::mt19937_64 rng(7);
  const auto cyl = ReferenceSurface::cylinder(0.5, 0.5, 0.25);
  const auto g = build_geometry_param(cyl, random_bundle(cyl, 32, 3, 0.05, rng));
  StabilityOptions opt;
  opt.certify_samples = 100;
  const auto rep = sigma1(g, opt);
  CHECK(rep.certified_min >= rep.sigma1 - 1e-9);
  CHECK(rep.residual <= 1e-9);
  const auto tb = translation_fields(g);
  for (const auto& t : tb.fields) {
    FieldBundle prod = t;
    for (std::size_t i = 0; i < prod[0].size(); ++i) prod[0][i] *= rep.minimizer[0][i];
    CHECK(std::abs(surface_integral(g, prod)) < 1e-10);
  }
  CHECK(std::abs(surface_integral(g, rep.minimizer)) < 1e-10);
}

TEST_CASE("sigma1 is invariant under translation and refinement") {
  for (const auto& f : all_surfaces()) {
    CAPTURE(kind_name(f.kind()));
    const double s = sigma1(reference_geometry(f, 32)).sigma1;
    const auto moved = f.translated(Vec3(0.13, -0.21, f.ambient_dim() == 3 ? 0.07 : 0.0));
    CHECK(std::abs(sigma1(reference_geometry(moved, 32)).sigma1 - s) < 1e-10);
    CHECK(std::abs(sigma1(reference_geometry(f, 64)).sigma1 - s) < 1e-8);
  }
  StabilityOptions bad;
  bad.mode_cutoff = 8;
  CHECK_THROWS_AS(sigma1(reference_geometry(ReferenceSurface::circle(0.5, 0.5, 0.2), 16), bad), std::invalid_argument);
}

TEST_CASE("translation kernel") {
  for (const auto& f : all_surfaces()) {
    CAPTURE(kind_name(f.kind()));
    const auto rep = verify_translation_kernel(reference_geometry(f, 32));
    CHECK(rep.passed);
    CHECK(rep.laplace_residual <= 1e-8);
    CHECK(rep.second_variation_max <= 1e-10);
  }
}

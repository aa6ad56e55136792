#include <doctest.h>

#include "test_support.hpp"
#include "tvmcf/verify.hpp"

#include <numbers>

using namespace tvmcf;
using namespace tvmcf::testing;

namespace {

void report(const DerivativeReport& r) {
  for (const auto& c : r.checks) {
    CAPTURE(c.name);
    CAPTURE(c.rel_error);
    CAPTURE(c.abs_error);
    CAPTURE(c.order_ratio);
    CHECK(c.passed);
  }
  CHECK(r.passed);
}

}  // namespace

TEST_CASE("time derivative identities") {
  std::mt19937_64 rng(19);
  for (const auto& f : all_surfaces()) {
    CAPTURE(kind_name(f.kind()));
    const FieldBundle psi = random_bundle(f, 64, 3, 0.05, rng);
    const auto rep = verify_time_derivatives(f, psi, 1e-5);
    report(rep);
    CHECK(rep.checks.size() == 5);
    CHECK(std::abs(rep.checks[0].analytic) < 1e-12);
  }
}

TEST_CASE("perimeter derivative equals minus the squared velocity") {
  std::mt19937_64 rng(2);
  const auto lam = ReferenceSurface::lamella(0.25, 0.75);
  const FieldBundle psi = random_bundle(lam, 64, 3, 0.05, rng);
  const auto rep = verify_time_derivatives(lam, psi, 1e-5);
  const auto g = build_geometry_param(lam, psi);
  const double v = surface_lp_norm(g, normal_velocity(g), 2.0);
  CHECK(rep.checks[1].analytic == doctest::Approx(-v * v).epsilon(1e-10));
  CHECK(rep.checks[1].rel_error <= 1e-4);
  CHECK(rep.checks[1].richardson_rel_error <= 1e-6);
}

TEST_CASE("normal kinematics") {
  std::mt19937_64 rng(23);
  for (const auto& f : all_surfaces()) {
    CAPTURE(kind_name(f.kind()));
    report(verify_normal_kinematics(f, random_bundle(f, 64, 3, 0.05, rng), 1e-5));
  }
  const auto circ = ReferenceSurface::circle(0.5, 0.5, 0.2);
  const auto crit = verify_normal_kinematics(circ, zero_bundle(circ, 32), 1e-5);
  for (const auto& c : crit.checks) {
    CHECK(c.absolute_only);
    CHECK(c.abs_error < 1e-10);
  }
  CHECK(crit.passed);
}

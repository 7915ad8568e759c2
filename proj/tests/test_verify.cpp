#include <cmath>
#include <numbers>

#include "doctest.h"
#include "hpot/verify.hpp"

using namespace hpot;

TEST_CASE("residual report pass rule") {
  ResidualReport r;
  r.residual = Complex(0.03, 0.04);
  r.normalization = 1.0;
  r.tolerance = 0.05;
  CHECK(r.pass());
  r.tolerance = 0.049;
  CHECK_FALSE(r.pass());
  r.residual = Complex(std::nan(""), 0);
  r.tolerance = 1e9;
  CHECK_FALSE(r.pass());
}

TEST_CASE("convergence table") {
  ConvergenceTable t;
  t.add(8, 0.4);
  t.add(16, 0.1);
  t.add(32, 0.025);
  CHECK(std::isnan(t.rows[0].order));
  CHECK(t.rows[1].order == doctest::Approx(2.0));
  CHECK(t.strictly_decreasing());
  CHECK(t.final_residual() == 0.025);
  t.add(64, 0.025);
  CHECK_FALSE(t.strictly_decreasing());
}

TEST_CASE("bump data") {
  const Bump b{GroupPoint::xyt(0.1, 0, 0), 0.5, 2.0};
  CHECK(std::abs(b.value(b.center) - 2.0 * std::exp(0.0)) < 1e-15);
  CHECK(b.value(GroupPoint::xyt(0.7, 0, 0)) == 0.0);
  const ScalarField f = b.field();
  const ScalarField plain{f.eval, {}};
  const GroupPoint p = GroupPoint::xyt(0.2, 0.1, -0.15);
  CHECK(std::abs(apply_field(FieldId::X(1), f, p) - apply_field(FieldId::X(1), plain, p)) < 1e-5);
  CHECK(interior_probes(b).size() == 8);
}

TEST_CASE("boundary probes are deterministic and non-characteristic") {
  const Surface s = Surface::make(SurfaceKind::GaugeSphere, 1.0);
  const auto a = boundary_probes(s, 16, 5), b = boundary_probes(s, 16, 5);
  REQUIRE(a.size() == 16);
  for (std::size_t k = 0; k < a.size(); ++k) {
    CHECK(coordinate_distance(a[k], b[k]) == 0.0);
    CHECK(std::abs(s.level(a[k])) < 1e-12);
    CHECK(characteristic_measure(s, s.params_of(a[k])) >= 0.1);
  }
}

TEST_CASE("boundary condition of order one") {
  const KernelParams p = KernelParams::make(2, 0.5, 0.5).with_c(Complex(-2 * std::numbers::pi, 0));
  const Surface s = Surface::make(SurfaceKind::GaugeSphere, 1.0);
  const GroupPoint z = boundary_probes(s, 1, 1)[0];
  const LayerConfig cfg{{24, 48}};
  const SurfaceDensity zero = SurfaceDensity::direct(ScalarField::zero());
  CHECK(std::abs(bc_residual_first(p, zero, s, z, 1.0, {}, cfg).residual) == 0.0);
  const SurfaceDensity one = SurfaceDensity::direct(ScalarField::constant(1.0));
  const ResidualReport r = bc_residual_first(p, one, s, z, 1.0, {}, cfg);
  CHECK(std::abs(r.residual - p.c()) < 0.02 * std::abs(p.c()));
}

TEST_CASE("Gauss identity inside and outside") {
  const KernelParams p = KernelParams::make(2, 0.3, 0.7).with_c(Complex(-4.11239817295253, -2.98783216474156));
  const Surface s = Surface::make(SurfaceKind::GaugeSphere, 1.5);
  CHECK(gauss_identity(p, s, GroupPoint::xyt(0.2, -0.3, 0.4), true, {32, 64}, 0.01).pass());
  CHECK(gauss_identity(p, s, GroupPoint::xyt(3.0, 0.0, 0.0), false, {32, 64}, 0.01).pass());
}

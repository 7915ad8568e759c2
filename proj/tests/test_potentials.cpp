#include <cmath>
#include <numbers>

#include "doctest.h"
#include "hpot/verify.hpp"

using namespace hpot;

namespace {

KernelParams half() {
  return KernelParams::make(2, 0.5, 0.5).with_c(Complex(-2 * std::numbers::pi, 0));
}

const ScalarField kSmooth{[](const GroupPoint& p) {
                            return Complex(1.0 + 0.5 * p.x() - 0.3 * p.t(), 0.2 * p.y());
                          },
                          {}};

}  // namespace

TEST_CASE("double layer of constants") {
  const KernelParams p = half();
  const Surface s = Surface::make(SurfaceKind::GaugeSphere, 1.0);
  const GroupPoint z = s.point(1.4, 0.7);
  const LayerConfig cfg{{24, 48}};
  const PvReport one = double_layer_pv(p, ScalarField::constant(1.0), s, z, {}, cfg);
  const PvReport hr = half_residue(p, s, z, {}, cfg);
  CHECK(std::abs(one.value - hr.value) < 1e-12);
  CHECK(std::abs(double_layer_pv(p, ScalarField::zero(), s, z, {}, cfg).value) == 0.0);
  CHECK(std::abs(single_layer_flux(p, ScalarField::constant(2.0), s, z, cfg)) < 1e-12);

  const LimitReport inside = double_layer_limit(p, ScalarField::constant(1.0), s, z, Side::Inside, {}, cfg);
  const LimitReport outside = double_layer_limit(p, ScalarField::constant(1.0), s, z, Side::Outside, {}, cfg);
  CHECK(std::abs(inside.value - p.c()) < 0.02 * std::abs(p.c()));
  CHECK(std::abs(outside.value) < 0.02 * std::abs(p.c()));
}

TEST_CASE("layer potentials are linear in the density") {
  const KernelParams p = KernelParams::make(2, 0.3, 0.7).with_c(Complex(-4.11239817295253, -2.98783216474156));
  const Surface s = Surface::make(SurfaceKind::EuclideanSphere, 1.0);
  const GroupPoint z = s.point(1.3, 2.0);
  const LayerConfig cfg{{24, 48}};
  const Complex w1 = double_layer_pv(p, kSmooth, s, z, {}, cfg).value;
  const Complex w3 = double_layer_pv(p, kSmooth.scaled(Complex(0, 3)), s, z, {}, cfg).value;
  CHECK(std::abs(w3 - Complex(0, 3) * w1) < 1e-12 * (1 + std::abs(w1)));
  const GroupPoint inner = GroupPoint::xyt(0.1, 0.2, -0.1);
  const Complex s1 = single_layer_flux(p, kSmooth, s, inner, cfg);
  const Complex s2 = single_layer_flux(p, kSmooth.scaled(-2.0), s, inner, cfg);
  CHECK(std::abs(s2 + 2.0 * s1) < 1e-12 * (1 + std::abs(s1)));
}

TEST_CASE("jump relations for a smooth density") {
  const KernelParams p = half();
  const Surface s = Surface::make(SurfaceKind::GaugeSphere, 1.0);
  const GroupPoint z = s.point(1.7, 4.0);
  const JumpReport j = jump_relations_report(p, kSmooth, s, z, {}, {}, LayerConfig{{24, 48}});
  const double scale = std::abs(p.c()) * 1.6;
  CHECK(std::abs(j.residual1) < 0.02 * scale);
  CHECK(std::abs(j.residual2) < 0.02 * scale);
  CHECK(std::abs(j.residual3 - (j.residual1 - j.residual2)) < 1e-12);
}

TEST_CASE("unconverged principal values raise a numerical error") {
  PvReport r;
  r.converged = false;
  r.levels = {1.0, 2.0};
  r.deltas = {0.2, 0.1};
  try {
    require_converged(r);
    FAIL("expected NumericalError");
  } catch (const NumericalError& e) {
    CHECK(e.code() == "pv-not-converged");
  }
}

TEST_CASE("Newton potentials") {
  const KernelParams p = half();
  const auto mesh = build_volume_mesh(DomainKind::GaugeBall, 0.5, {}, {8, 8, 16});
  const GroupPoint z = GroupPoint::xyt(0.1, 0.0, 0.05);
  CHECK(std::abs(newton_potential(p, ScalarField::zero(), *mesh, z).value) == 0.0);
  const NewtonPotential zero(p, ScalarField::zero(), mesh);
  CHECK(std::abs(zero(z)) == 0.0);

  // Order one of the generalized potential is the plain Newton potential.
  const ScalarField f{[](const GroupPoint& q) { return Complex(1.0 - q.x() * q.x()); }, {}};
  VolumeOptions opts;
  const NewtonPotential u(p, f, mesh, opts);
  const GeneralizedNewtonPotential g(1, p, f, mesh, mesh, opts);
  CHECK(std::abs(g.jet(0, z).value - u(z)) < 1e-12 * std::abs(u(z)));

  // Newton potentials are linear in f.
  const NewtonPotential u2(p, f.scaled(2.5), mesh, opts);
  CHECK(std::abs(u2(z) - 2.5 * u(z)) < 1e-12 * std::abs(u(z)));
}

TEST_CASE("bump round trip of order one") {
  const KernelParams p = half();
  RoundtripSpec spec;
  const ConvergenceTable t = bump_roundtrip(1, p, spec);
  REQUIRE(t.rows.size() == 3);
  CHECK(t.strictly_decreasing());
  CHECK(t.final_residual() <= 0.02);

  spec.bump.amplitude = 0.0;
  for (const auto& row : bump_roundtrip(1, p, spec).rows) CHECK(row.residual == 0.0);
}

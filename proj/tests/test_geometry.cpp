#include <cmath>
#include <numbers>

#include "doctest.h"
#include "hpot/geometry.hpp"

using namespace hpot;

TEST_CASE("interior product pullback on a flat chart") {
  SurfaceNode node;
  node.t1 = {1.0, 0.0, 0.0};
  node.t2 = {0.0, 1.0, 0.0};
  CHECK(std::abs(interior_product_pullback({0.0, 0.0, 1.0}, node).value - 1.0) < 1e-15);
  CHECK(std::abs(interior_product_pullback({1.0, 0.0, 0.0}, node).value) < 1e-15);
}

TEST_CASE("constant field has zero flux through closed surfaces") {
  const VectorField dt = [](const GroupPoint&) { return CoordVector{0.0, 0.0, 1.0}; };
  for (auto kind : {SurfaceKind::GaugeSphere, SurfaceKind::EuclideanSphere}) {
    const Surface s = Surface::make(kind, 1.3, GroupPoint::xyt(0.2, 0.0, -0.1));
    CHECK(std::abs(integrate_flux(dt, s, {32, 64}).value) < 1e-8);
  }
}

TEST_CASE("surfaces are closed level sets") {
  const Surface s = Surface::make(SurfaceKind::GaugeSphere, 1.0);
  for (double s1 : {0.3, 1.2, 2.5})
    for (double s2 : {0.0, 2.0, 4.0}) CHECK(std::abs(s.level(s.point(s1, s2))) < 1e-12);
  CHECK(s.level(GroupPoint{}) < 0);
  CHECK(s.level(GroupPoint::xyt(2, 0, 0)) > 0);
}

TEST_CASE("exclusion larger than the surface removes every node") {
  const Surface s = Surface::make(SurfaceKind::GaugeSphere, 1.0);
  const SurfaceQuadrature q = surface_quadrature(s, {16, 32}, Exclusion{s.point(1.5, 0.0), 10.0});
  double total = 0.0;
  for (const auto& n : q.nodes) total += std::abs(n.weight);
  CHECK(total == 0.0);
  CHECK_THROWS_AS(surface_quadrature(s, {4, 8}), std::invalid_argument);
}

TEST_CASE("volume quadrature") {
  for (auto kind : {DomainKind::GaugeBall, DomainKind::EuclideanBall}) {
    const auto mesh = build_volume_mesh(kind, 0.8, {}, {12, 12, 24});
    const QuadratureResult one = integrate_volume(ScalarField::constant(1.0), *mesh);
    CHECK(std::abs(one.value - mesh->exact_volume()) < 1e-8 * mesh->exact_volume());
    const ScalarField odd{[](const GroupPoint& p) { return Complex(p.x() + p.t() * p.y() * p.y()); }, {}};
    CHECK(std::abs(integrate_volume(odd, *mesh).value) < 1e-12);
  }
  const auto small = build_volume_mesh(DomainKind::GaugeBall, 1e-3, {}, {8, 8, 16});
  double w = 0.0;
  for (const auto& n : small->nodes()) w += n.weight;
  CHECK(w < 1e-10);
  CHECK_THROWS_AS(build_volume_mesh(DomainKind::GaugeBall, -1.0, {}, {8, 8, 16}), std::invalid_argument);
}

TEST_CASE("gauge sphere characteristic points are the poles") {
  const Surface s = Surface::make(SurfaceKind::GaugeSphere, 1.0);
  const auto found = find_characteristic_points(s, {32, 64}, 1e-6);
  REQUIRE(found.size() == 2);
  double lo = std::min(found[0].s1, found[1].s1), hi = std::max(found[0].s1, found[1].s1);
  CHECK(lo < 1e-3);
  CHECK(std::abs(hi - s.s1_max()) < 1e-3);
  CHECK(characteristic_measure(s, {std::numbers::pi / 2, 0.0}) > 0.1);
}

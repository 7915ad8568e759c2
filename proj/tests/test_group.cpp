#include <cmath>

#include "doctest.h"
#include "hpot/kernels.hpp"
#include "hpot/verify.hpp"

using namespace hpot;

namespace {

bool near(const GroupPoint& p, const GroupPoint& q, double tol = 1e-14) {
  return coordinate_distance(p, q) <= tol;
}

ScalarField field_of(ScalarField::Eval f) { return ScalarField{std::move(f), {}}; }

}  // namespace

TEST_CASE("group law examples") {
  const GroupPoint p = GroupPoint::xyt(1.0, 0.0, 0.0);
  const GroupPoint q = GroupPoint::xyt(0.0, 1.0, 0.0);
  CHECK(near(group_mul(GroupPoint{}, p), p));
  CHECK(near(group_mul(p, q), GroupPoint::xyt(1.0, 1.0, -2.0)));
  const GroupPoint r = GroupPoint::xyt(0.3, -0.7, 1.1);
  CHECK(group_mul(r, group_inv(r)).is_identity());
  CHECK(near(group_inv(GroupPoint::xyt(1.0, 2.0, 3.0)), GroupPoint::xyt(-1.0, -2.0, -3.0)));
  CHECK(near(group_inv(group_inv(r)), r));
}

TEST_CASE("group law is associative to rounding") { CHECK(group_law_defect(200, 7) <= 1e-10); }

TEST_CASE("dilation and gauge norm") {
  const GroupPoint p = GroupPoint::xyt(0.4, -0.2, 0.9);
  CHECK(near(dilate(1.0, p), p));
  CHECK(near(dilate(2.0, GroupPoint::xyt(1.0, 0.0, 3.0)), GroupPoint::xyt(2.0, 0.0, 12.0)));
  CHECK(gauge_norm(GroupPoint::xyt(0.0, 0.0, 4.0)) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(gauge_norm(GroupPoint::xyt(1.0, 0.0, 0.0)) == doctest::Approx(1.0));
  CHECK(gauge_norm(GroupPoint::xyt(1.0, 0.0, 1.0)) == doctest::Approx(1.189207115002721).epsilon(1e-14));
  CHECK(gauge_norm(dilate(3.0, p)) == doctest::Approx(3.0 * gauge_norm(p)).epsilon(1e-14));
  CHECK_THROWS(dilate(0.0, p));
}

TEST_CASE("vector fields on coordinate functions") {
  const ScalarField t = field_of([](const GroupPoint& p) { return Complex(p.t()); });
  const ScalarField z = field_of([](const GroupPoint& p) { return p.zeta(0); });
  const GroupPoint p = GroupPoint::xyt(1.0, 0.0, 0.0);
  const GroupPoint q = GroupPoint::xyt(0.3, -0.4, 0.2);
  CHECK(std::abs(apply_field(FieldId::T(), t, q) - 1.0) < 1e-9);
  CHECK(std::abs(apply_field(FieldId::X(1), t, p) - Complex(0.0, 1.0)) < 1e-9);
  CHECK(std::abs(apply_field(FieldId::X(1), z, q) - 1.0) < 1e-9);
  CHECK(std::abs(apply_field(FieldId::Xbar(1), z, q)) < 1e-9);
  CHECK_THROWS_AS(check_field(FieldId::X(2), 1), std::out_of_range);
}

TEST_CASE("Kohn Laplacian of t is i(b - a)") {
  const ScalarField t = field_of([](const GroupPoint& p) { return Complex(p.t()); });
  const GroupPoint p = GroupPoint::xyt(0.2, 0.5, -0.3);
  const KernelParams half = KernelParams::make(2, 0.5, 0.5);
  const KernelParams skew = KernelParams::make(2, 0.3, 0.7);
  CHECK(std::abs(kohn_laplacian(half, t, p)) < 1e-8);
  CHECK(std::abs(kohn_laplacian(skew, t, p) - Complex(0.0, 0.4)) < 1e-8);
}

TEST_CASE("box powers") {
  const KernelParams params = KernelParams::make(2, 0.3, 0.7);
  const ScalarField f = field_of([](const GroupPoint& p) {
    return std::exp(Complex(0.2 * p.x(), 0.1 * p.t())) * (1.0 + p.y() * p.y());
  });
  const GroupPoint p = GroupPoint::xyt(0.1, 0.2, 0.3);
  CHECK(box_power(1, params, f, p) == kohn_laplacian(params, f, p));
  const ScalarField z = field_of([](const GroupPoint& q) { return q.zeta(0); });
  CHECK(std::abs(box_power(2, params, z, p, FdConfig{1e-2})) < 1e-6);
}

TEST_CASE("nabla of a constant vanishes") {
  const KernelParams params = KernelParams::make(2, 0.5, 0.5);
  const CoordVector v = nabla_ab(params, ScalarField::constant(3.0), GroupPoint::xyt(0.1, 0.2, 0.3));
  for (const Complex& c : v) CHECK(std::abs(c) < 1e-12);
}

TEST_CASE("field identities converge at second order") {
  const GroupPoint p = GroupPoint::xyt(0.3, -0.2, 0.4);
  CHECK(frame_defect(2.5e-3, p) <= 1e-10);
  const double c1 = commutator_defect(1e-2, p), c2 = commutator_defect(5e-3, p);
  CHECK(std::log2(c1 / c2) >= 1.8);
  const double l1 = left_invariance_defect(1e-2, 5, 3), l2 = left_invariance_defect(5e-3, 5, 3);
  CHECK(std::log2(l1 / l2) >= 1.8);
}

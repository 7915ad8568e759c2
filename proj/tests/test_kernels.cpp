#include <cmath>
#include <numbers>

#include "doctest.h"
#include "hpot/geometry.hpp"
#include "hpot/kernels.hpp"
#include "hpot/verify.hpp"

using namespace hpot;

TEST_CASE("parameter validation") {
  CHECK_NOTHROW(KernelParams::make(2, 0.5, 0.5));
  CHECK_THROWS_AS(KernelParams::make(2, 0.3, 0.6), std::invalid_argument);
  CHECK_THROWS_AS(KernelParams::make(2, 2.0, -1.0), std::invalid_argument);
  CHECK(in_excluded_set(-1.0, 2));
  CHECK(in_excluded_set(3.0, 2));
  CHECK_FALSE(in_excluded_set(0.5, 2));
  CHECK_THROWS(KernelParams::make(2, 0.5, 0.5).c());
}

TEST_CASE("principal complex powers") {
  CHECK(std::abs(complex_pow_principal(1.0, 0.37) - 1.0) < 1e-15);
  CHECK(std::abs(complex_pow_principal(Complex(0, 1), 0.5) -
                 std::polar(1.0, std::numbers::pi / 4)) < 1e-15);
  CHECK(std::abs(complex_pow_principal(-1.0, 0.5, BranchSide::Lower) - Complex(0, -1)) < 1e-15);
  CHECK(std::abs(complex_pow_principal(-1.0, 0.5, BranchSide::Upper) - Complex(0, 1)) < 1e-15);
}

TEST_CASE("kernel values for a = b = 1/2") {
  const KernelParams p = KernelParams::make(2, 0.5, 0.5);
  CHECK(std::abs(eps(p, GroupPoint::xyt(0, 0, 1)) - 1.0) < 1e-14);
  CHECK(std::abs(eps(p, GroupPoint::xyt(1, 0, 0)) - 1.0) < 1e-14);
  CHECK(std::abs(eps(p, GroupPoint::xyt(0, 0, -1)) - 1.0) < 1e-14);
  const GroupPoint xi = GroupPoint::xyt(0.2, -0.1, 0.3), z = GroupPoint::xyt(-0.4, 0.5, 0.1);
  CHECK(eps_pair(p, GroupPoint{}, z) == eps(p, z));
  CHECK(std::abs(eps_pair(p, xi, z) - eps_pair(p, z, xi)) < 1e-13);
}

TEST_CASE("kernel homogeneity and annihilation") {
  for (const auto& [a, b] : {std::pair{0.5, 0.5}, std::pair{0.3, 0.7}}) {
    const KernelParams p = KernelParams::make(2, a, b);
    CHECK(homogeneity_defect(p, 100, 11) <= 1e-12);
    const double d1 = annihilation_defect(p, 1e-2, 6), d2 = annihilation_defect(p, 5e-3, 6);
    CHECK(d1 <= 100 * 1e-4);
    CHECK(std::log2(d1 / d2) >= 1.8);
  }
}

TEST_CASE("kernel jets match finite differences") {
  const KernelParams p = KernelParams::make(2, 0.3, 0.7);
  const GroupPoint xi = GroupPoint::xyt(0.1, 0.2, -0.1), z = GroupPoint::xyt(-0.3, 0.4, 0.5);
  const ScalarField f = eps_target_field(p, xi);
  ScalarField plain{f.eval, {}};
  CHECK(std::abs(apply_field(FieldId::X(1), f, z) - apply_field(FieldId::X(1), plain, z)) < 1e-5);
  CHECK(std::abs(apply_field(FieldId::Xbar(1), f, z) - apply_field(FieldId::Xbar(1), plain, z)) < 1e-5);
}

TEST_CASE("reference constant") {
  const KernelParams half = KernelParams::make(2, 0.5, 0.5);
  CHECK(std::abs(c_ab_reference(half).value - Complex(-2 * std::numbers::pi, 0)) < 1e-8);
  const KernelParams skew = KernelParams::make(2, 0.3, 0.7);
  CHECK(std::abs(c_ab_reference(skew).value - Complex(-4.11239817295253, -2.98783216474156)) < 1e-8);
  // The Euclidean sphere encloses the same singularity.
  const Surface s = Surface::make(SurfaceKind::EuclideanSphere, 1.0);
  const CabNumeric c = c_ab_numeric(skew, s, GroupPoint::xyt(0.1, 0.1, 0.1), {32, 64});
  CHECK(std::abs(c.value - c_ab_reference(skew).value) < 1e-3);
}

TEST_CASE("iterated kernel of order one is the pair kernel") {
  const KernelParams p = KernelParams::make(2, 0.5, 0.5).with_c(Complex(-2 * std::numbers::pi, 0));
  const IteratedKernel k(1, p, build_volume_mesh(DomainKind::GaugeBall, 1.0, {}, {8, 8, 16}));
  const GroupPoint xi = GroupPoint::xyt(0.1, 0.2, -0.1), z = GroupPoint::xyt(-0.3, 0.4, 0.5);
  CHECK(eps_m_eval(k, xi, z) == eps_pair(p, xi, z));
}

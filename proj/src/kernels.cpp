#include "hpot/kernels.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace hpot {

namespace {
constexpr Complex kI{0.0, 1.0};
constexpr double kPi = std::numbers::pi;

bool near_integer(double x) { return std::abs(x - std::round(x)) < 1e-12; }

// r^{-(a+b)} exp(-i (a - b) theta), theta = Arg(t + i|zeta|^2) in [0, pi].
// Equal to 1 / (A^a B^b) under the one-sided cut convention.
Complex eps_closed(double a, double b, double s, double t) {
  const double r2 = t * t + s * s;
  if (a == b) return std::pow(r2, -a);
  const double mod = std::pow(r2, -0.5 * (a + b));
  const double theta = std::atan2(s, t);  // s >= 0, so theta in [0, pi]
  return std::polar(mod, -(a - b) * theta);
}
}  // namespace

bool in_excluded_set(double x, int n) {
  if (!near_integer(x)) return false;
  const long k = std::lround(x);
  return k <= -1 || k >= n;
}

KernelParams KernelParams::make(int n, double a, double b) {
  if (n < 2) throw std::invalid_argument("n must be at least 2");
  if (!std::isfinite(a) || !std::isfinite(b)) throw std::invalid_argument("a, b must be finite");
  if (in_excluded_set(a, n) || in_excluded_set(b, n)) {
    std::ostringstream os;
    os << "excluded parameter set: a and b must avoid -1, -2, ... and n, n+1, ... (a=" << a
       << ", b=" << b << ", n=" << n << ")";
    throw std::invalid_argument(os.str());
  }
  if (a < 0.0 || b < 0.0) throw std::invalid_argument("a and b must be non-negative");
  if (std::abs(a + b - (n - 1)) > 1e-14) {
    std::ostringstream os;
    os << "a + b must equal n - 1 (a + b = " << a + b << ", n - 1 = " << n - 1 << ")";
    throw std::invalid_argument(os.str());
  }
  KernelParams p;
  p.n = n;
  p.a = a;
  p.b = b;
  return p;
}

KernelParams KernelParams::with_c(Complex c) const {
  if (!std::isfinite(c.real()) || !std::isfinite(c.imag()) || c == Complex(0.0))
    throw std::invalid_argument("c_ab must be finite and nonzero");
  KernelParams p = *this;
  p.c_ab = c;
  p.c_known = true;
  return p;
}

Complex KernelParams::c() const {
  if (!c_known) throw std::logic_error("c_ab has not been computed for these parameters");
  return c_ab;
}

KernelParams KernelParams::swapped() const { return make(n, b, a); }

Complex complex_pow_principal(Complex w, double s, BranchSide side) {
  if (w == Complex(0.0)) throw std::domain_error("complex power of zero");
  double arg;
  if (w.imag() == 0.0 && w.real() < 0.0)
    arg = side == BranchSide::Lower ? -kPi : kPi;
  else
    arg = std::atan2(w.imag(), w.real());
  return std::exp(s * Complex(std::log(std::abs(w)), arg));
}

Complex eps(const KernelParams& params, const GroupPoint& z) {
  if (z.is_identity()) throw std::domain_error("eps is singular at the identity");
  const double s = z.zeta_norm2();
  const Complex A(z.t(), s), B(z.t(), -s);
  return 1.0 / (complex_pow_principal(A, params.a, BranchSide::Upper) *
                complex_pow_principal(B, params.b, BranchSide::Lower));
}

Complex eps_pair(const KernelParams& params, const GroupPoint& xi, const GroupPoint& z) {
  const GroupPoint w = group_mul(group_inv(xi), z);
  if (w.is_identity()) throw std::domain_error("eps_pair evaluated on the diagonal");
  return eps(params, w);
}

KernelJet eps_jet(const KernelParams& params, const GroupPoint& w) {
  const double s = w.zeta_norm2();
  const double t = w.t();
  if (s == 0.0 && t == 0.0) throw std::domain_error("eps is singular at the identity");
  const Complex e = eps_closed(params.a, params.b, s, t);
  const Complex A(t, s), B(t, -s);
  const Complex z = w.zeta(0);
  return {e, -2.0 * kI * params.a * std::conj(z) * e / A, 2.0 * kI * params.b * z * e / B};
}

KernelJet eps_reflected_jet(const KernelParams& params, const GroupPoint& w) {
  const double s = w.zeta_norm2();
  const double t = w.t();
  if (s == 0.0 && t == 0.0) throw std::domain_error("eps is singular at the identity");
  // eps(w^{-1}) = 1 / (Ac^a Bc^b), Ac = -t + i s, Bc = -t - i s.
  const Complex e = eps_closed(params.a, params.b, s, -t);
  const Complex Ac(-t, s), Bc(-t, -s);
  const Complex z = w.zeta(0);
  return {e, 2.0 * kI * params.b * std::conj(z) * e / Bc, -2.0 * kI * params.a * z * e / Ac};
}

namespace {
// Derivatives of eps (or its reflection) at w for index j; general n.
struct GeneralJet {
  Complex value;
  std::vector<Complex> x, xbar;
  Complex t;
};

GeneralJet general_jet(const KernelParams& params, const GroupPoint& w, bool reflected) {
  const double s = w.zeta_norm2();
  const double t = reflected ? -w.t() : w.t();
  if (s == 0.0 && t == 0.0) throw std::domain_error("eps is singular at the identity");
  GeneralJet g;
  g.value = eps_closed(params.a, params.b, s, t);
  const Complex A(t, s), B(t, -s);
  g.x.resize(w.dim());
  g.xbar.resize(w.dim());
  for (std::size_t j = 0; j < w.dim(); ++j) {
    const Complex z = w.zeta(j);
    if (!reflected) {
      g.x[j] = -2.0 * kI * params.a * std::conj(z) * g.value / A;
      g.xbar[j] = 2.0 * kI * params.b * z * g.value / B;
    } else {
      g.x[j] = 2.0 * kI * params.b * std::conj(z) * g.value / B;
      g.xbar[j] = -2.0 * kI * params.a * z * g.value / A;
    }
  }
  // d/dt of A^{-a} B^{-b}; for the reflection t enters with a minus sign.
  const Complex dt = -g.value * (params.a / A + params.b / B);
  g.t = reflected ? -dt : dt;
  return g;
}

ScalarField jet_field(const KernelParams& params, const GroupPoint& anchor, bool reflected,
                      std::size_t dim) {
  // reflected: xi -> eps(xi^{-1} z) with w = z^{-1} xi; otherwise z -> eps(xi^{-1} z).
  auto arg = [anchor](const GroupPoint& p) { return group_mul(group_inv(anchor), p); };
  ScalarField f;
  f.eval = [=](const GroupPoint& p) { return general_jet(params, arg(p), reflected).value; };
  for (std::size_t j = 0; j < dim; ++j) {
    const int idx = static_cast<int>(j) + 1;
    f.derivatives[FieldId::X(idx)] = [=](const GroupPoint& p) {
      return general_jet(params, arg(p), reflected).x[j];
    };
    f.derivatives[FieldId::Xbar(idx)] = [=](const GroupPoint& p) {
      return general_jet(params, arg(p), reflected).xbar[j];
    };
  }
  f.derivatives[FieldId::T()] = [=](const GroupPoint& p) {
    return general_jet(params, arg(p), reflected).t;
  };
  return f;
}
}  // namespace

ScalarField eps_source_field(const KernelParams& params, const GroupPoint& z) {
  return jet_field(params, z, true, z.dim());
}

ScalarField eps_target_field(const KernelParams& params, const GroupPoint& xi) {
  return jet_field(params, xi, false, xi.dim());
}

double unit_ball_volume(UnitBallConvention conv, int n) {
  const int d = 2 * n - 1;  // real dimension of H_{n-1}
  switch (conv) {
    case UnitBallConvention::GaugeBall: {
      // int_{-1}^{1} vol(C^{n-1} ball of radius (1 - t^2)^{1/4}) dt
      const int k = n - 1;
      const double ball = std::pow(kPi, k) / std::tgamma(k + 1.0);
      const double beta =
          std::sqrt(kPi) * std::tgamma(0.5 * k + 1.0) / std::tgamma(0.5 * k + 1.5);
      return ball * beta;
    }
    case UnitBallConvention::EuclideanBall:
      return std::pow(kPi, 0.5 * d) / std::tgamma(0.5 * d + 1.0);
    case UnitBallConvention::EuclideanSphereArea:
      return 2.0 * std::pow(kPi, 0.5 * d) / std::tgamma(0.5 * d);
  }
  return 0.0;
}

std::string to_string(UnitBallConvention conv) {
  switch (conv) {
    case UnitBallConvention::GaugeBall:
      return "gauge-ball";
    case UnitBallConvention::EuclideanBall:
      return "euclidean-ball";
    case UnitBallConvention::EuclideanSphereArea:
      return "euclidean-sphere-area";
  }
  return "unknown";
}

CabFormula c_ab_formula(const KernelParams& params, double vol) {
  if (near_integer(params.a))
    throw std::invalid_argument("closed-form c_ab requires non-integer a");
  if (in_excluded_set(params.a, params.n) || in_excluded_set(params.b, params.n))
    throw std::invalid_argument("excluded parameter set");
  const double a = params.a, b = params.b;
  const int n = params.n;
  double falling = 1.0;  // a (a-1) ... (a-n+1)
  for (int k = 0; k < n; ++k) falling *= (a - k);
  const Complex two_i_pow = std::pow(Complex(0.0, 2.0), n);
  const Complex value = 2.0 * (a * a + b * b) * vol / two_i_pow * std::tgamma(n) / falling *
                        (1.0 - std::exp(Complex(0.0, -2.0 * a * kPi)));
  return {value, vol, "formula (interpretation-dependent unit-ball volume)"};
}

CabFormula c_ab_formula(const KernelParams& params, UnitBallConvention conv) {
  CabFormula f = c_ab_formula(params, unit_ball_volume(conv, params.n));
  f.note += ", " + to_string(conv);
  return f;
}

double calibrate_unit_ball_volume(const KernelParams& params, Complex c_numeric) {
  return std::abs(c_numeric) / std::abs(c_ab_formula(params, 1.0).value);
}

}  // namespace hpot

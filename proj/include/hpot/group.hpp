// Heisenberg group H_{n-1} = C^{n-1} x R: group law, dilations, gauge norm,
// and finite-difference application of the left-invariant vector fields.
#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <functional>
#include <initializer_list>
#include <map>
#include <optional>
#include <vector>

namespace hpot {

using Complex = std::complex<double>;

/// Coefficients of a vector field in the coordinate frame
/// (d/dx_1, d/dy_1, ..., d/dx_{n-1}, d/dy_{n-1}, d/dt).
using CoordVector = std::vector<Complex>;

/// Element (zeta, t) of H_{n-1}. Storage is inline; n - 1 <= kMaxDim.
class GroupPoint {
 public:
  static constexpr std::size_t kMaxDim = 8;

  /// Identity of H_1.
  GroupPoint() = default;
  /// Identity of H_dim.
  explicit GroupPoint(std::size_t dim);
  GroupPoint(std::initializer_list<Complex> zeta, double t);

  /// Point of H_1 from real coordinates.
  static GroupPoint xyt(double x, double y, double t);

  std::size_t dim() const { return dim_; }
  Complex zeta(std::size_t j) const { return zeta_[j]; }
  void set_zeta(std::size_t j, Complex v) { zeta_[j] = v; }
  double t() const { return t_; }
  void set_t(double t) { t_ = t; }

  /// |zeta|^2.
  double zeta_norm2() const;
  bool is_finite() const;
  bool is_identity() const;

  // H_1 shorthands.
  double x() const { return zeta_[0].real(); }
  double y() const { return zeta_[0].imag(); }

 private:
  std::array<Complex, kMaxDim> zeta_{};
  double t_ = 0.0;
  std::size_t dim_ = 1;
};

/// (zeta + eta, t + tau + 2 Im sum_j zeta_j conj(eta_j)).
GroupPoint group_mul(const GroupPoint& p, const GroupPoint& q);
GroupPoint group_inv(const GroupPoint& p);
/// Anisotropic dilation (lambda zeta, lambda^2 t); lambda must be positive.
GroupPoint dilate(double lambda, const GroupPoint& p);
/// (|zeta|^4 + t^2)^{1/4}.
double gauge_norm(const GroupPoint& p);
/// |p^{-1} q|.
double gauge_distance(const GroupPoint& p, const GroupPoint& q);

/// Max absolute coordinate difference.
double coordinate_distance(const GroupPoint& p, const GroupPoint& q);

struct FieldId {
  enum class Kind { X, Xbar, T, Xtilde, Ytilde };
  Kind kind = Kind::T;
  int j = 1;  // 1-based; ignored for T

  static FieldId X(int j) { return {Kind::X, j}; }
  static FieldId Xbar(int j) { return {Kind::Xbar, j}; }
  static FieldId T() { return {Kind::T, 1}; }
  static FieldId Xtilde(int j) { return {Kind::Xtilde, j}; }
  static FieldId Ytilde(int j) { return {Kind::Ytilde, j}; }

  friend bool operator<(const FieldId& a, const FieldId& b) {
    return a.kind != b.kind ? a.kind < b.kind : a.j < b.j;
  }
  friend bool operator==(const FieldId& a, const FieldId& b) {
    return a.kind == b.kind && (a.kind == Kind::T || a.j == b.j);
  }
};

/// Throws std::out_of_range when j is outside 1..dim.
void check_field(const FieldId& id, std::size_t dim);

/// Coefficients of the field at p in the coordinate frame.
CoordVector field_coefficients(const FieldId& id, const GroupPoint& p);

struct FdConfig {
  double h = 1e-3;  // central-difference step, coordinate units
};

/// Scalar function on the group, optionally carrying exact first derivatives.
struct ScalarField {
  using Eval = std::function<Complex(const GroupPoint&)>;

  Eval eval;
  std::map<FieldId, Eval> derivatives;

  Complex operator()(const GroupPoint& p) const { return eval(p); }
  const Eval* derivative(const FieldId& id) const;

  static ScalarField constant(Complex c);
  static ScalarField zero() { return constant(0.0); }
  /// Same function scaled by s; analytic derivatives are scaled too.
  ScalarField scaled(Complex s) const;
};

struct KernelParams;

/// (V f)(p). Uses an analytic derivative when f provides one, otherwise
/// second-order central differences in the coordinates combined with the
/// field's coefficient functions at p.
Complex apply_field(const FieldId& id, const ScalarField& f, const GroupPoint& p,
                    const FdConfig& cfg = {});

/// The field V f as a new scalar field (finite differences unless analytic).
ScalarField field_image(const FieldId& id, const ScalarField& f, const FdConfig& cfg = {});

/// sum_j (a X_j Xbar_j + b Xbar_j X_j) f at p, by nested central differences.
Complex kohn_laplacian(const KernelParams& params, const ScalarField& f, const GroupPoint& p,
                       const FdConfig& cfg = {});

/// m-fold nested kohn_laplacian. m > 2 is supported at reduced accuracy.
Complex box_power(int m, const KernelParams& params, const ScalarField& f, const GroupPoint& p,
                  const FdConfig& cfg = {});

/// box^m f as a scalar field.
ScalarField box_power_field(int m, const KernelParams& params, const ScalarField& f,
                            const FdConfig& cfg = {});

/// Coordinate coefficients of sum_j (a (X_j g)(p) Xbar_j|_p + b (Xbar_j g)(p) X_j|_p).
CoordVector nabla_ab(const KernelParams& params, const ScalarField& g, const GroupPoint& p,
                     const FdConfig& cfg = {});

/// Same vector from given values of X_j g and Xbar_j g at p (index j-1).
CoordVector nabla_ab_from(double a, double b, const GroupPoint& p, const std::vector<Complex>& xg,
                          const std::vector<Complex>& xbar_g);

}  // namespace hpot

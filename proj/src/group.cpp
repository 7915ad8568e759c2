#include "hpot/group.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "hpot/kernels.hpp"

namespace hpot {

namespace {
constexpr Complex kI{0.0, 1.0};

void require_same_dim(const GroupPoint& p, const GroupPoint& q) {
  if (p.dim() != q.dim()) throw std::invalid_argument("group points of different dimension");
}

// Central differences of f at p along x_j, y_j (index j, 0-based) and t.
struct CoordGradient {
  Complex fx, fy, ft;
};

CoordGradient coordinate_gradient(const ScalarField& f, const GroupPoint& p, std::size_t j,
                                  double h) {
  auto shifted = [&](Complex dz, double dt) {
    GroupPoint q = p;
    q.set_zeta(j, p.zeta(j) + dz);
    q.set_t(p.t() + dt);
    return f(q);
  };
  const double inv = 1.0 / (2.0 * h);
  return {(shifted(h, 0.0) - shifted(-h, 0.0)) * inv,
          (shifted(Complex(0.0, h), 0.0) - shifted(Complex(0.0, -h), 0.0)) * inv,
          (shifted(0.0, h) - shifted(0.0, -h)) * inv};
}

// X_j, Xbar_j applied to f at p from a coordinate gradient.
Complex x_from(const CoordGradient& g, const GroupPoint& p, std::size_t j) {
  return 0.5 * (g.fx - kI * g.fy) + kI * std::conj(p.zeta(j)) * g.ft;
}
Complex xbar_from(const CoordGradient& g, const GroupPoint& p, std::size_t j) {
  return 0.5 * (g.fx + kI * g.fy) - kI * p.zeta(j) * g.ft;
}
}  // namespace

GroupPoint::GroupPoint(std::size_t dim) : dim_(dim) {
  if (dim == 0 || dim > kMaxDim) throw std::invalid_argument("group dimension out of range");
}

GroupPoint::GroupPoint(std::initializer_list<Complex> zeta, double t) : t_(t), dim_(zeta.size()) {
  if (dim_ == 0 || dim_ > kMaxDim) throw std::invalid_argument("group dimension out of range");
  std::size_t j = 0;
  for (auto z : zeta) zeta_[j++] = z;
}

GroupPoint GroupPoint::xyt(double x, double y, double t) { return GroupPoint({Complex(x, y)}, t); }

double GroupPoint::zeta_norm2() const {
  double s = 0.0;
  for (std::size_t j = 0; j < dim_; ++j) s += std::norm(zeta_[j]);
  return s;
}

bool GroupPoint::is_finite() const {
  if (!std::isfinite(t_)) return false;
  for (std::size_t j = 0; j < dim_; ++j)
    if (!std::isfinite(zeta_[j].real()) || !std::isfinite(zeta_[j].imag())) return false;
  return true;
}

bool GroupPoint::is_identity() const { return t_ == 0.0 && zeta_norm2() == 0.0; }

GroupPoint group_mul(const GroupPoint& p, const GroupPoint& q) {
  require_same_dim(p, q);
  GroupPoint r(p.dim());
  double twist = 0.0;
  for (std::size_t j = 0; j < p.dim(); ++j) {
    r.set_zeta(j, p.zeta(j) + q.zeta(j));
    twist += (p.zeta(j) * std::conj(q.zeta(j))).imag();
  }
  r.set_t(p.t() + q.t() + 2.0 * twist);
  return r;
}

GroupPoint group_inv(const GroupPoint& p) {
  GroupPoint r(p.dim());
  for (std::size_t j = 0; j < p.dim(); ++j) r.set_zeta(j, -p.zeta(j));
  r.set_t(-p.t());
  return r;
}

GroupPoint dilate(double lambda, const GroupPoint& p) {
  if (!(lambda > 0.0)) throw std::invalid_argument("dilation factor must be positive");
  GroupPoint r(p.dim());
  for (std::size_t j = 0; j < p.dim(); ++j) r.set_zeta(j, lambda * p.zeta(j));
  r.set_t(lambda * lambda * p.t());
  return r;
}

double gauge_norm(const GroupPoint& p) {
  const double s = p.zeta_norm2();
  return std::sqrt(std::sqrt(s * s + p.t() * p.t()));
}

double gauge_distance(const GroupPoint& p, const GroupPoint& q) {
  return gauge_norm(group_mul(group_inv(p), q));
}

double coordinate_distance(const GroupPoint& p, const GroupPoint& q) {
  require_same_dim(p, q);
  double d = std::abs(p.t() - q.t());
  for (std::size_t j = 0; j < p.dim(); ++j) {
    d = std::max(d, std::abs(p.zeta(j).real() - q.zeta(j).real()));
    d = std::max(d, std::abs(p.zeta(j).imag() - q.zeta(j).imag()));
  }
  return d;
}

void check_field(const FieldId& id, std::size_t dim) {
  if (id.kind == FieldId::Kind::T) return;
  if (id.j < 1 || static_cast<std::size_t>(id.j) > dim)
    throw std::out_of_range("field index " + std::to_string(id.j) + " outside 1.." +
                            std::to_string(dim));
}

CoordVector field_coefficients(const FieldId& id, const GroupPoint& p) {
  check_field(id, p.dim());
  CoordVector c(2 * p.dim() + 1, 0.0);
  Complex& ct = c.back();
  if (id.kind == FieldId::Kind::T) {
    ct = 1.0;
    return c;
  }
  const std::size_t j = static_cast<std::size_t>(id.j - 1);
  Complex& cx = c[2 * j];
  Complex& cy = c[2 * j + 1];
  const Complex z = p.zeta(j);
  switch (id.kind) {
    case FieldId::Kind::X:
      cx = 0.5;
      cy = -0.5 * kI;
      ct = kI * std::conj(z);
      break;
    case FieldId::Kind::Xbar:
      cx = 0.5;
      cy = 0.5 * kI;
      ct = -kI * z;
      break;
    case FieldId::Kind::Xtilde:
      cx = 1.0;
      ct = 2.0 * z.imag();
      break;
    case FieldId::Kind::Ytilde:
      cy = 1.0;
      ct = -2.0 * z.real();
      break;
    case FieldId::Kind::T:
      break;
  }
  return c;
}

const ScalarField::Eval* ScalarField::derivative(const FieldId& id) const {
  auto it = derivatives.find(id);
  return it == derivatives.end() ? nullptr : &it->second;
}

ScalarField ScalarField::constant(Complex c) {
  ScalarField f;
  f.eval = [c](const GroupPoint&) { return c; };
  for (auto kind : {FieldId::Kind::X, FieldId::Kind::Xbar, FieldId::Kind::T,
                    FieldId::Kind::Xtilde, FieldId::Kind::Ytilde})
    for (int j = 1; j <= static_cast<int>(GroupPoint::kMaxDim); ++j)
      f.derivatives[FieldId{kind, j}] = [](const GroupPoint&) { return Complex(0.0); };
  return f;
}

ScalarField ScalarField::scaled(Complex s) const {
  ScalarField g;
  g.eval = [f = eval, s](const GroupPoint& p) { return s * f(p); };
  for (const auto& [id, d] : derivatives)
    g.derivatives[id] = [d, s](const GroupPoint& p) { return s * d(p); };
  return g;
}

Complex apply_field(const FieldId& id, const ScalarField& f, const GroupPoint& p,
                    const FdConfig& cfg) {
  check_field(id, p.dim());
  if (const auto* d = f.derivative(id)) return (*d)(p);
  if (!(cfg.h > 0.0)) throw std::invalid_argument("finite-difference step must be positive");
  const std::size_t j = id.kind == FieldId::Kind::T ? 0 : static_cast<std::size_t>(id.j - 1);
  if (id.kind == FieldId::Kind::T) {
    GroupPoint a = p, b = p;
    a.set_t(p.t() + cfg.h);
    b.set_t(p.t() - cfg.h);
    return (f(a) - f(b)) / (2.0 * cfg.h);
  }
  const CoordGradient g = coordinate_gradient(f, p, j, cfg.h);
  const CoordVector c = field_coefficients(id, p);
  return c[2 * j] * g.fx + c[2 * j + 1] * g.fy + c.back() * g.ft;
}

ScalarField field_image(const FieldId& id, const ScalarField& f, const FdConfig& cfg) {
  ScalarField g;
  if (const auto* d = f.derivative(id)) {
    g.eval = *d;
  } else {
    g.eval = [id, f, cfg](const GroupPoint& p) { return apply_field(id, f, p, cfg); };
  }
  return g;
}

Complex kohn_laplacian(const KernelParams& params, const ScalarField& f, const GroupPoint& p,
                       const FdConfig& cfg) {
  if (!(cfg.h > 0.0)) throw std::invalid_argument("finite-difference step must be positive");
  Complex total = 0.0;
  for (std::size_t j = 0; j < p.dim(); ++j) {
    const int idx = static_cast<int>(j) + 1;
    const auto* dx = f.derivative(FieldId::X(idx));
    const auto* dxb = f.derivative(FieldId::Xbar(idx));
    // Inner values (X_j f, Xbar_j f) at a point; one coordinate gradient serves both.
    auto inner = [&](const GroupPoint& q) -> std::pair<Complex, Complex> {
      if (dx && dxb) return {(*dx)(q), (*dxb)(q)};
      const CoordGradient g = coordinate_gradient(f, q, j, cfg.h);
      return {x_from(g, q, j), xbar_from(g, q, j)};
    };
    auto shifted = [&](Complex dz, double dt) {
      GroupPoint q = p;
      q.set_zeta(j, p.zeta(j) + dz);
      q.set_t(p.t() + dt);
      return inner(q);
    };
    const double inv = 1.0 / (2.0 * cfg.h);
    const auto xp = shifted(cfg.h, 0.0), xm = shifted(-cfg.h, 0.0);
    const auto yp = shifted(Complex(0.0, cfg.h), 0.0), ym = shifted(Complex(0.0, -cfg.h), 0.0);
    const auto tp = shifted(0.0, cfg.h), tm = shifted(0.0, -cfg.h);
    // Gradient of Xbar_j f feeds X_j; gradient of X_j f feeds Xbar_j.
    const CoordGradient g_xbar{(xp.second - xm.second) * inv, (yp.second - ym.second) * inv,
                               (tp.second - tm.second) * inv};
    const CoordGradient g_x{(xp.first - xm.first) * inv, (yp.first - ym.first) * inv,
                            (tp.first - tm.first) * inv};
    total += params.a * x_from(g_xbar, p, j) + params.b * xbar_from(g_x, p, j);
  }
  return total;
}

ScalarField box_power_field(int m, const KernelParams& params, const ScalarField& f,
                            const FdConfig& cfg) {
  if (m < 0) throw std::invalid_argument("box power must be non-negative");
  ScalarField g = f;
  for (int k = 0; k < m; ++k) {
    ScalarField inner = g;
    g = ScalarField{};
    g.eval = [inner, params, cfg](const GroupPoint& p) {
      return kohn_laplacian(params, inner, p, cfg);
    };
  }
  return g;
}

Complex box_power(int m, const KernelParams& params, const ScalarField& f, const GroupPoint& p,
                  const FdConfig& cfg) {
  if (m < 1) throw std::invalid_argument("box power must be at least 1");
  return box_power_field(m, params, f, cfg)(p);
}

CoordVector nabla_ab_from(double a, double b, const GroupPoint& p, const std::vector<Complex>& xg,
                          const std::vector<Complex>& xbar_g) {
  CoordVector v(2 * p.dim() + 1, 0.0);
  for (std::size_t j = 0; j < p.dim(); ++j) {
    const Complex ax = a * xg[j];
    const Complex bxb = b * xbar_g[j];
    // a (X_j g) Xbar_j + b (Xbar_j g) X_j in coordinates.
    v[2 * j] = 0.5 * (ax + bxb);
    v[2 * j + 1] = 0.5 * kI * (ax - bxb);
    v.back() += -kI * p.zeta(j) * ax + kI * std::conj(p.zeta(j)) * bxb;
  }
  return v;
}

CoordVector nabla_ab(const KernelParams& params, const ScalarField& g, const GroupPoint& p,
                     const FdConfig& cfg) {
  std::vector<Complex> xg(p.dim()), xbar_g(p.dim());
  for (std::size_t j = 0; j < p.dim(); ++j) {
    const int idx = static_cast<int>(j) + 1;
    const auto* dx = g.derivative(FieldId::X(idx));
    const auto* dxb = g.derivative(FieldId::Xbar(idx));
    if (dx && dxb) {
      xg[j] = (*dx)(p);
      xbar_g[j] = (*dxb)(p);
    } else {
      const CoordGradient cg = coordinate_gradient(g, p, j, cfg.h);
      xg[j] = dx ? (*dx)(p) : x_from(cg, p, j);
      xbar_g[j] = dxb ? (*dxb)(p) : xbar_from(cg, p, j);
    }
  }
  return nabla_ab_from(params.a, params.b, p, xg, xbar_g);
}

}  // namespace hpot

#include "hpot/geometry.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "hpot/quadrature.hpp"

namespace hpot {

namespace {
constexpr double kPi = std::numbers::pi;
constexpr double kInf = std::numeric_limits<double>::infinity();

void require_h1(const GroupPoint& p) {
  if (p.dim() != 1) throw std::invalid_argument("geometry is implemented for H_1 only");
}

// Tangent of p = c * q given the tangent (dzeta, dt) of q.
Vec3 translate_tangent(const GroupPoint& c, Complex dzeta, double dt) {
  return {dzeta.real(), dzeta.imag(), dt + 2.0 * std::imag(c.zeta(0) * std::conj(dzeta))};
}

// Unit gauge sphere nodes with surface weights for the polar decomposition
// dnu = r^3 dr dsigma: dsigma = |det[(x, y, 2t), d1, d2]| ds1 ds2.
struct SphereNode {
  GroupPoint omega;
  double weight;
};

std::vector<SphereNode> unit_gauge_sphere(int m1, int m2) {
  const Surface unit = Surface::make(SurfaceKind::GaugeSphere, 1.0);
  const Rule1D r1 = gauss_legendre(m1, 0.0, kPi);
  std::vector<SphereNode> out;
  out.reserve(static_cast<std::size_t>(m1) * m2);
  const double w2 = 2.0 * kPi / m2;
  for (int i = 0; i < m1; ++i) {
    for (int j = 0; j < m2; ++j) {
      const ChartSample c = unit.chart(r1.nodes[i], w2 * j);
      const Vec3 d{c.point.x(), c.point.y(), 2.0 * c.point.t()};
      const double jac = std::abs(dot(d, cross(c.d1, c.d2)));
      out.push_back({c.point, jac * r1.weights[i] * w2});
    }
  }
  return out;
}

std::uint64_t next_mesh_id() {
  static std::atomic<std::uint64_t> counter{1};
  return counter++;
}
}  // namespace

Vec3 cross(const Vec3& u, const Vec3& v) {
  return {u[1] * v[2] - u[2] * v[1], u[2] * v[0] - u[0] * v[2], u[0] * v[1] - u[1] * v[0]};
}
double dot(const Vec3& u, const Vec3& v) { return u[0] * v[0] + u[1] * v[1] + u[2] * v[2]; }
double norm(const Vec3& u) { return std::sqrt(dot(u, u)); }

std::string to_string(SurfaceKind kind) {
  switch (kind) {
    case SurfaceKind::GaugeSphere:
      return "gauge";
    case SurfaceKind::EuclideanSphere:
      return "euclidean";
    case SurfaceKind::FlatDisc:
      return "disc";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------
// Surface

Surface Surface::make(SurfaceKind kind, double radius, const GroupPoint& center) {
  if (!(radius > 0.0) || !std::isfinite(radius))
    throw std::invalid_argument("surface radius must be positive");
  require_h1(center);
  Surface s;
  s.kind_ = kind;
  s.radius_ = radius;
  s.center_ = center;
  return s;
}

double Surface::s1_max() const { return kind_ == SurfaceKind::FlatDisc ? radius_ : kPi; }

ChartSample Surface::chart(double s1, double s2) const {
  const double R = radius_;
  const double c1 = std::cos(s1), sn1 = std::sin(s1);
  const Complex e2 = std::polar(1.0, s2);
  ChartSample out;
  switch (kind_) {
    case SurfaceKind::GaugeSphere: {
      const double root = std::sqrt(1.0 + sn1 * sn1);
      const Complex zq = R * sn1 * e2;
      const double tq = R * R * c1 * root;
      out.point = group_mul(center_, GroupPoint({zq}, tq));
      const Complex dz1 = R * c1 * e2;
      const double dt1 = R * R * (-sn1 * root + c1 * c1 * sn1 / root);
      out.d1 = translate_tangent(center_, dz1, dt1);
      out.d2 = translate_tangent(center_, Complex(0.0, 1.0) * zq, 0.0);
      break;
    }
    case SurfaceKind::EuclideanSphere: {
      const double cx = center_.x(), cy = center_.y(), ct = center_.t();
      out.point = GroupPoint::xyt(cx + R * sn1 * e2.real(), cy + R * sn1 * e2.imag(), ct + R * c1);
      out.d1 = {R * c1 * e2.real(), R * c1 * e2.imag(), -R * sn1};
      out.d2 = {-R * sn1 * e2.imag(), R * sn1 * e2.real(), 0.0};
      break;
    }
    case SurfaceKind::FlatDisc: {
      out.point = GroupPoint::xyt(center_.x() + s1 * e2.real(), center_.y() + s1 * e2.imag(),
                                  center_.t());
      out.d1 = {e2.real(), e2.imag(), 0.0};
      out.d2 = {-s1 * e2.imag(), s1 * e2.real(), 0.0};
      break;
    }
  }
  return out;
}

double Surface::level(const GroupPoint& p) const {
  switch (kind_) {
    case SurfaceKind::GaugeSphere:
      return gauge_distance(center_, p) - radius_;
    case SurfaceKind::EuclideanSphere: {
      const double dx = p.x() - center_.x(), dy = p.y() - center_.y(), dt = p.t() - center_.t();
      return std::sqrt(dx * dx + dy * dy + dt * dt) - radius_;
    }
    case SurfaceKind::FlatDisc:
      return p.t() - center_.t();
  }
  return 0.0;
}

Vec3 Surface::level_gradient(const GroupPoint& p) const {
  switch (kind_) {
    case SurfaceKind::GaugeSphere: {
      // Gradient of |q|^4 with q = c^{-1} p.
      const GroupPoint q = group_mul(group_inv(center_), p);
      const double s = q.zeta_norm2();
      const double fx = 4.0 * s * q.x(), fy = 4.0 * s * q.y(), ft = 2.0 * q.t();
      const double cx = center_.x(), cy = center_.y();
      return {fx - 2.0 * cy * ft, fy + 2.0 * cx * ft, ft};
    }
    case SurfaceKind::EuclideanSphere:
      return {2.0 * (p.x() - center_.x()), 2.0 * (p.y() - center_.y()), 2.0 * (p.t() - center_.t())};
    case SurfaceKind::FlatDisc:
      return {0.0, 0.0, 1.0};
  }
  return {0.0, 0.0, 0.0};
}

Vec3 Surface::unit_normal(const GroupPoint& p) const {
  Vec3 g = level_gradient(p);
  const double n = norm(g);
  if (n == 0.0) throw std::domain_error("surface normal undefined at this point");
  for (double& c : g) c /= n;
  return g;
}

std::vector<ChartParam> Surface::degenerate_params() const {
  if (kind_ == SurfaceKind::FlatDisc) return {{0.0, 0.0}};
  return {{0.0, 0.0}, {kPi, 0.0}};
}

ChartParam Surface::params_of(const GroupPoint& p) const {
  auto wrap = [](double a) { return a < 0.0 ? a + 2.0 * kPi : a; };
  switch (kind_) {
    case SurfaceKind::GaugeSphere: {
      const GroupPoint q = group_mul(group_inv(center_), p);
      const double sn = std::min(1.0, std::sqrt(q.zeta_norm2()) / radius_);
      const double cs = q.t() / (radius_ * radius_ * std::sqrt(1.0 + sn * sn));
      return {std::atan2(sn, cs), wrap(std::atan2(q.y(), q.x()))};
    }
    case SurfaceKind::EuclideanSphere: {
      const double dx = p.x() - center_.x(), dy = p.y() - center_.y(), dt = p.t() - center_.t();
      return {std::atan2(std::hypot(dx, dy), dt), wrap(std::atan2(dy, dx))};
    }
    case SurfaceKind::FlatDisc: {
      const double dx = p.x() - center_.x(), dy = p.y() - center_.y();
      return {std::hypot(dx, dy), wrap(std::atan2(dy, dx))};
    }
  }
  return {};
}

std::string Surface::describe() const {
  std::ostringstream os;
  os.precision(17);
  os << to_string(kind_) << " R=" << radius_ << " center=(" << center_.x() << "," << center_.y()
     << "," << center_.t() << ")"
     << (kind_ == SurfaceKind::GaugeSphere ? " left-translated" : " coordinate-translated");
  return os.str();
}

// ---------------------------------------------------------------------------
// Surface quadrature

namespace {
void check_resolution(const SurfaceResolution& res) {
  if (res.m1 < 8 || res.m2 < 8)
    throw std::invalid_argument("surface resolution must be at least 8 x 8");
}

SurfaceNode make_node(const Surface& surface, double s1, double s2, double w) {
  const ChartSample c = surface.chart(s1, s2);
  SurfaceNode n;
  n.point = c.point;
  n.param = {s1, s2};
  n.t1 = c.d1;
  n.t2 = c.d2;
  n.weight = w;
  n.target_distance = kInf;
  return n;
}

SurfaceQuadrature tensor_rule(const Surface& surface, const SurfaceResolution& res) {
  SurfaceQuadrature q;
  const Rule1D r1 = gauss_legendre(res.m1, 0.0, surface.s1_max());
  const double w2 = 2.0 * kPi / res.m2;
  q.nodes.reserve(static_cast<std::size_t>(res.m1) * res.m2);
  for (int i = 0; i < res.m1; ++i)
    for (int j = 0; j < res.m2; ++j)
      q.nodes.push_back(make_node(surface, r1.nodes[i], w2 * j, r1.weights[i] * w2));
  return q;
}

struct Panel {
  double a1, b1, a2, b2;
  int depth;
};

struct PanelGeometry {
  double extent1, extent2, radius, center_distance;
};

// Unit-Jacobian reparameterization s2 = sigma2 + k (sigma1 - s1_ref). k is
// chosen so that sigma1-lines through the target follow the horizontal
// tangent direction; the gauge ball around the target then becomes an
// axis-aligned box of size delta x delta^2 that anisotropic panels resolve.
struct Shear {
  double s1_ref = 0.0;
  double k = 0.0;

  ChartParam map(double sigma1, double sigma2) const {
    double s2 = std::fmod(sigma2 + k * (sigma1 - s1_ref), 2.0 * kPi);
    if (s2 < 0.0) s2 += 2.0 * kPi;
    return {sigma1, s2};
  }
  GroupPoint point(const Surface& surface, double sigma1, double sigma2) const {
    const ChartParam c = map(sigma1, sigma2);
    return surface.point(c.s1, c.s2);
  }
};

// Contact form dt - 2y dx + 2x dy; it annihilates the horizontal fields.
double contact(const GroupPoint& p, const Vec3& v) {
  return v[2] - 2.0 * p.y() * v[0] + 2.0 * p.x() * v[1];
}

Shear horizontal_shear(const Surface& surface, const GroupPoint& target) {
  constexpr double kMaxShear = 4.0;
  const ChartParam c = surface.params_of(target);
  const ChartSample cs = surface.chart(c.s1, c.s2);
  const double h1 = contact(cs.point, cs.d2), h2 = -contact(cs.point, cs.d1);
  Shear sh;
  sh.s1_ref = c.s1;
  if (std::abs(h1) * kMaxShear >= std::abs(h2) && h1 != 0.0) sh.k = h2 / h1;
  return sh;
}

PanelGeometry panel_geometry(const Surface& surface, const Shear& sh, const Panel& p,
                             const GroupPoint& target) {
  GroupPoint pts[3][3];
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      pts[i][j] = sh.point(surface, p.a1 + 0.5 * i * (p.b1 - p.a1), p.a2 + 0.5 * j * (p.b2 - p.a2));
  PanelGeometry g{0.0, 0.0, 0.0, 0.0};
  const GroupPoint& c = pts[1][1];
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) g.radius = std::max(g.radius, gauge_distance(c, pts[i][j]));
  for (int k = 0; k < 3; ++k) {
    g.extent1 = std::max(g.extent1, gauge_distance(pts[0][k], pts[2][k]));
    g.extent2 = std::max(g.extent2, gauge_distance(pts[k][0], pts[k][2]));
  }
  // Samples underestimate the radius of a curved panel.
  g.radius *= 1.25;
  g.center_distance = gauge_distance(target, c);
  return g;
}

// Roots of d(s1) - delta on [a, b] along the chart line s2 = const.
void line_crossings(const Surface& surface, const Shear& sh, const GroupPoint& target, double a,
                    double b, double s2, std::span<const double> cuts, int samples,
                    std::vector<double>& out) {
  std::vector<double> s(samples + 1), d(samples + 1);
  for (int k = 0; k <= samples; ++k) {
    s[k] = a + (b - a) * k / samples;
    d[k] = gauge_distance(target, sh.point(surface, s[k], s2));
  }
  for (double delta : cuts) {
    for (int k = 0; k < samples; ++k) {
      const double f0 = d[k] - delta, f1 = d[k + 1] - delta;
      if ((f0 < 0.0) == (f1 < 0.0)) continue;
      double lo = s[k], hi = s[k + 1], flo = f0;
      for (int it = 0; it < 60 && hi - lo > 1e-15 * (1.0 + std::abs(hi)); ++it) {
        const double mid = 0.5 * (lo + hi);
        const double fm = gauge_distance(target, sh.point(surface, mid, s2)) - delta;
        if ((fm < 0.0) == (flo < 0.0)) {
          lo = mid;
          flo = fm;
        } else {
          hi = mid;
        }
      }
      out.push_back(0.5 * (lo + hi));
    }
  }
}
}  // namespace

double min_resolvable_delta(const Surface& surface, const TargetOptions& opts) {
  return 2.0 * opts.min_extent * surface.scale();
}

SurfaceQuadrature targeted_quadrature(const Surface& surface, const SurfaceResolution& res,
                                      const GroupPoint& target, std::span<const double> cuts,
                                      const TargetOptions& opts) {
  check_resolution(res);
  const int q = opts.panel_order;
  const int nb1 = std::max(1, (res.m1 + q - 1) / q);
  const int nb2 = std::max(1, (res.m2 + q - 1) / q);
  const double min_extent = opts.min_extent * surface.scale();
  const Shear sh = horizontal_shear(surface, target);

  std::vector<Panel> work, leaves;
  for (int i = 0; i < nb1; ++i)
    for (int j = 0; j < nb2; ++j)
      work.push_back({surface.s1_max() * i / nb1, surface.s1_max() * (i + 1) / nb1,
                      2.0 * kPi * j / nb2, 2.0 * kPi * (j + 1) / nb2, 0});
  std::vector<char> straddles;
  while (!work.empty()) {
    const Panel p = work.back();
    work.pop_back();
    const PanelGeometry g = panel_geometry(surface, sh, p, target);
    const double extent = std::max(g.extent1, g.extent2);
    const double near = std::max(g.center_distance - g.radius, 0.0);
    const double far = g.center_distance + g.radius;
    // Panels wholly inside the smallest excision never contribute.
    if (!cuts.empty() && far < *std::min_element(cuts.begin(), cuts.end())) continue;
    // Panels wholly inside the smallest excision never contribute.
    if (!cuts.empty() && far < *std::min_element(cuts.begin(), cuts.end())) continue;
    bool cut_hit = false;
    bool refine = extent > opts.eta * near;
    for (double delta : cuts) {
      if (near <= delta && delta <= far) {
        cut_hit = true;
        if (extent > opts.cut_ratio * delta) refine = true;
      }
    }
    if (refine && p.depth < opts.max_depth && extent > min_extent) {
      const bool split1 = g.extent1 >= 0.5 * g.extent2;
      const bool split2 = g.extent2 >= 0.5 * g.extent1;
      const double m1 = 0.5 * (p.a1 + p.b1), m2 = 0.5 * (p.a2 + p.b2);
      if (split1 && split2) {
        work.push_back({p.a1, m1, p.a2, m2, p.depth + 1});
        work.push_back({m1, p.b1, p.a2, m2, p.depth + 1});
        work.push_back({p.a1, m1, m2, p.b2, p.depth + 1});
        work.push_back({m1, p.b1, m2, p.b2, p.depth + 1});
      } else if (split1) {
        work.push_back({p.a1, m1, p.a2, p.b2, p.depth + 1});
        work.push_back({m1, p.b1, p.a2, p.b2, p.depth + 1});
      } else {
        work.push_back({p.a1, p.b1, p.a2, m2, p.depth + 1});
        work.push_back({p.a1, p.b1, m2, p.b2, p.depth + 1});
      }
      continue;
    }
    leaves.push_back(p);
    straddles.push_back(cut_hit ? 1 : 0);
  }

  // Deterministic node order: sort leaves by position.
  std::vector<std::size_t> order(leaves.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    const Panel &a = leaves[x], &b = leaves[y];
    return a.a1 != b.a1 ? a.a1 < b.a1 : a.a2 < b.a2;
  });

  std::vector<std::vector<SurfaceNode>> per_leaf(leaves.size());
  parallel_for(order.size(), [&](std::size_t k) {
    const Panel& p = leaves[order[k]];
    const Rule1D r2 = gauss_legendre(q, p.a2, p.b2);
    auto& nodes = per_leaf[k];
    for (int j = 0; j < q; ++j) {
      std::vector<double> breaks{p.a1, p.b1};
      if (straddles[order[k]])
        line_crossings(surface, sh, target, p.a1, p.b1, r2.nodes[j], cuts, 2 * q, breaks);
      std::sort(breaks.begin(), breaks.end());
      for (std::size_t b = 0; b + 1 < breaks.size(); ++b) {
        if (breaks[b + 1] - breaks[b] <= 0.0) continue;
        const Rule1D r1 = gauss_legendre(q, breaks[b], breaks[b + 1]);
        for (int i = 0; i < q; ++i) {
          const ChartParam c = sh.map(r1.nodes[i], r2.nodes[j]);
          SurfaceNode n = make_node(surface, c.s1, c.s2, r1.weights[i] * r2.weights[j]);
          n.target_distance = gauge_distance(target, n.point);
          if (n.target_distance < 1e-12 * surface.scale()) n.weight = 0.0;
          nodes.push_back(n);
        }
      }
    }
  });
  SurfaceQuadrature out;
  for (auto& v : per_leaf) out.nodes.insert(out.nodes.end(), v.begin(), v.end());
  return out;
}

SurfaceQuadrature surface_quadrature(const Surface& surface, const SurfaceResolution& res,
                                     const std::optional<Exclusion>& exclusion) {
  check_resolution(res);
  if (!exclusion) return tensor_rule(surface, res);
  if (!(exclusion->delta > 0.0)) throw std::invalid_argument("excision radius must be positive");
  if (exclusion->delta < min_resolvable_delta(surface))
    throw std::invalid_argument("excision radius below twice the finest node spacing");
  const double cuts[] = {exclusion->delta};
  SurfaceQuadrature full = targeted_quadrature(surface, res, exclusion->z, cuts);
  SurfaceQuadrature out;
  for (const auto& n : full.nodes)
    if (n.target_distance >= exclusion->delta && n.weight > 0.0) out.nodes.push_back(n);
  return out;
}

TwoFormSample interior_product_pullback(const CoordVector& v, const SurfaceNode& node) {
  if (v.size() != 3) throw std::invalid_argument("pullback expects a vector field on H_1");
  const Vec3 n = cross(node.t1, node.t2);
  if (norm(n) == 0.0) throw std::domain_error("degenerate tangent pair");
  return {v[0] * n[0] + v[1] * n[1] + v[2] * n[2]};
}

Complex sum_over(const SurfaceQuadrature& quad, std::span<const Complex> values,
                 double min_distance) {
  if (values.size() != quad.nodes.size())
    throw std::invalid_argument("integrand size does not match node count");
  std::vector<Complex> terms(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const SurfaceNode& n = quad.nodes[i];
    terms[i] = (n.target_distance >= min_distance && n.weight != 0.0) ? n.weight * values[i]
                                                                       : Complex(0.0);
  }
  return pairwise_sum(terms);
}

namespace {
Complex flux_sum(const VectorField& v, const SurfaceQuadrature& quad) {
  std::vector<Complex> terms(quad.nodes.size());
  parallel_for(quad.nodes.size(), [&](std::size_t i) {
    const SurfaceNode& n = quad.nodes[i];
    terms[i] = n.weight == 0.0 ? Complex(0.0)
                               : n.weight * interior_product_pullback(v(n.point), n).value;
  });
  return pairwise_sum(terms);
}
}  // namespace

QuadratureResult integrate_flux(const VectorField& v, const Surface& surface,
                                const SurfaceResolution& res,
                                const std::optional<Exclusion>& exclusion) {
  QuadratureResult r;
  r.value = flux_sum(v, surface_quadrature(surface, res, exclusion));
  SurfaceResolution coarse = res.coarsened();
  coarse.m1 = std::max(coarse.m1, 8);
  coarse.m2 = std::max(coarse.m2, 8);
  r.error_estimate = std::abs(r.value - flux_sum(v, surface_quadrature(surface, coarse, exclusion)));
  return r;
}

// ---------------------------------------------------------------------------
// Volume meshes

std::string to_string(DomainKind kind) {
  return kind == DomainKind::GaugeBall ? "gauge-ball" : "euclidean-ball";
}

namespace {
std::vector<VolumeNode> mesh_nodes(DomainKind kind, double R, const GroupPoint& c,
                                   const VolumeResolution& res) {
  std::vector<VolumeNode> out;
  const Rule1D rr = gauss_legendre(res.radial, 0.0, R);
  if (kind == DomainKind::GaugeBall) {
    const auto sphere = unit_gauge_sphere(res.m1, res.m2);
    out.reserve(sphere.size() * res.radial);
    for (int k = 0; k < res.radial; ++k) {
      const double r = rr.nodes[k];
      for (const auto& s : sphere)
        out.push_back({group_mul(c, dilate(r, s.omega)), r * r * r * rr.weights[k] * s.weight});
    }
  } else {
    const Rule1D ru = gauss_legendre(res.m1);
    const double w2 = 2.0 * kPi / res.m2;
    out.reserve(static_cast<std::size_t>(res.radial) * res.m1 * res.m2);
    for (int k = 0; k < res.radial; ++k) {
      const double r = rr.nodes[k];
      for (int i = 0; i < res.m1; ++i) {
        const double u = ru.nodes[i], sn = std::sqrt(1.0 - u * u);
        for (int j = 0; j < res.m2; ++j) {
          const double phi = w2 * j;
          out.push_back({GroupPoint::xyt(c.x() + r * sn * std::cos(phi),
                                         c.y() + r * sn * std::sin(phi), c.t() + r * u),
                         r * r * rr.weights[k] * ru.weights[i] * w2});
        }
      }
    }
  }
  return out;
}

// Largest rho with rho (1 + 2|zeta| + rho) <= e: a gauge ball of radius rho
// around a point with horizontal norm |zeta| moves coordinates by at most e.
double gauge_radius_for_euclidean(double e, double zeta_abs) {
  const double b = 1.0 + 2.0 * zeta_abs;
  return 2.0 * e / (b + std::sqrt(b * b + 4.0 * e));
}
}  // namespace

DomainMesh::DomainMesh(DomainKind kind, double radius, const GroupPoint& center,
                       const VolumeResolution& res)
    : kind_(kind), radius_(radius), center_(center), res_(res), id_(next_mesh_id()) {
  if (!(radius > 0.0) || !std::isfinite(radius))
    throw std::invalid_argument("domain radius must be positive");
  if (res.radial < 8 || res.m1 < 8 || res.m2 < 16)
    throw std::invalid_argument("volume resolution must be at least (8 radial, 8 x 16 angular)");
  require_h1(center);
  nodes_ = mesh_nodes(kind, radius, center, res);
  coarse_ = mesh_nodes(kind, radius, center,
                       {std::max(4, res.radial / 2), std::max(4, res.m1 / 2), std::max(8, res.m2 / 2)});
}

double DomainMesh::level(const GroupPoint& p) const {
  if (kind_ == DomainKind::GaugeBall) return gauge_distance(center_, p) - radius_;
  const double dx = p.x() - center_.x(), dy = p.y() - center_.y(), dt = p.t() - center_.t();
  return std::sqrt(dx * dx + dy * dy + dt * dt) - radius_;
}

double DomainMesh::clearance(const GroupPoint& p) const {
  const double l = level(p);
  if (kind_ == DomainKind::GaugeBall || l > 0.0) return -l;
  return gauge_radius_for_euclidean(-l, std::abs(p.zeta(0)));
}

double DomainMesh::exterior_distance(const GroupPoint& p) const {
  const double l = level(p);
  if (l <= 0.0) return 0.0;
  if (kind_ == DomainKind::GaugeBall) return l;
  return gauge_radius_for_euclidean(l, std::abs(p.zeta(0)));
}

double DomainMesh::spacing() const { return 2.0 * radius_ / res_.radial; }

double DomainMesh::exact_volume() const {
  if (kind_ == DomainKind::GaugeBall) return 0.5 * kPi * kPi * std::pow(radius_, 4);
  return 4.0 / 3.0 * kPi * std::pow(radius_, 3);
}

Surface DomainMesh::boundary() const {
  return Surface::make(
      kind_ == DomainKind::GaugeBall ? SurfaceKind::GaugeSphere : SurfaceKind::EuclideanSphere,
      radius_, center_);
}

std::shared_ptr<const DomainMesh> build_volume_mesh(DomainKind kind, double radius,
                                                    const GroupPoint& center,
                                                    const VolumeResolution& res) {
  return std::make_shared<const DomainMesh>(kind, radius, center, res);
}

// ---------------------------------------------------------------------------
// Singular volume integration

double patch_cutoff(double s) { return 1.0 - smooth_step(s); }

VolumeOptions resolved(const VolumeOptions& opts, const DomainMesh& mesh) {
  VolumeOptions o = opts;
  if (o.patch_radial <= 0) o.patch_radial = mesh.resolution().radial;
  if (o.patch_m1 <= 0) o.patch_m1 = mesh.resolution().m1;
  if (o.patch_m2 <= 0) o.patch_m2 = mesh.resolution().m2;
  return o;
}

double patch_radius(const DomainMesh& mesh, std::span<const GroupPoint> singular,
                    const VolumeOptions& opts) {
  for (std::size_t i = 0; i < singular.size(); ++i)
    for (std::size_t j = i + 1; j < singular.size(); ++j)
      if (gauge_distance(singular[i], singular[j]) == 0.0)
        throw std::domain_error("coincident singular points");
  return opts.rho > 0.0 ? opts.rho : 2.0 * mesh.radius();
}

std::vector<PatchNode> patch_nodes(const DomainMesh& mesh, const GroupPoint& p, double rho,
                                   const VolumeOptions& options) {
  const VolumeOptions opts = resolved(options, mesh);
  const auto sphere = unit_gauge_sphere(opts.patch_m1, opts.patch_m2);
  const bool clip = mesh.clearance(p) < rho;
  const Rule1D& ref = gauss_legendre(opts.patch_radial);
  std::vector<PatchNode> out;
  out.reserve(sphere.size() * opts.patch_radial);
  constexpr int kSamples = 24;
  for (const auto& s : sphere) {
    auto inside = [&](double r) { return mesh.level(group_mul(p, dilate(r, s.omega))) <= 0.0; };
    std::vector<std::pair<double, double>> intervals;
    if (!clip) {
      intervals.push_back({0.0, rho});
    } else {
      double r_prev = 1e-12 * rho;
      bool in_prev = inside(r_prev);
      double start = 0.0;
      for (int k = 1; k <= kSamples; ++k) {
        const double r = rho * k / kSamples;
        const bool in = inside(r);
        if (in != in_prev) {
          double lo = r_prev, hi = r;
          for (int it = 0; it < 60 && hi - lo > 1e-14 * rho; ++it) {
            const double mid = 0.5 * (lo + hi);
            (inside(mid) == in_prev ? lo : hi) = mid;
          }
          const double cross = 0.5 * (lo + hi);
          if (in_prev) intervals.push_back({start, cross});
          start = cross;
        }
        r_prev = r;
        in_prev = in;
      }
      if (in_prev) intervals.push_back({start, rho});
    }
    for (const auto& [lo, hi] : intervals) {
      const double half = 0.5 * (hi - lo), mid = 0.5 * (hi + lo);
      for (int k = 0; k < opts.patch_radial; ++k) {
        const double r = mid + half * ref.nodes[k];
        const double w = half * ref.weights[k] * r * r * r * s.weight * patch_cutoff(r / rho);
        if (w == 0.0) continue;
        out.push_back({group_mul(p, dilate(r, s.omega)), w});
      }
    }
  }
  return out;
}

namespace {
// Relative partition of unity among singular points: weight |p_k^{-1} x|^{-8},
// normalized. Equals 1 at p_k and vanishes to high order at the others.
double share(std::span<const GroupPoint> singular, std::size_t k, const GroupPoint& x) {
  if (singular.size() <= 1) return 1.0;
  double total = 0.0, mine = 0.0;
  for (std::size_t j = 0; j < singular.size(); ++j) {
    const GroupPoint w = group_mul(group_inv(singular[j]), x);
    const double s = w.zeta_norm2();
    const double d = s * s + w.t() * w.t();
    if (d == 0.0) return j == k ? 1.0 : 0.0;
    const double inv = 1.0 / (d * d);
    total += inv;
    if (j == k) mine = inv;
  }
  return mine / total;
}

template <std::size_t N, class F>
std::array<Complex, N> volume_sum(const F& f, const std::vector<VolumeNode>& nodes,
                                  const std::vector<std::vector<PatchNode>>& patches,
                                  std::span<const GroupPoint> singular, double rho) {
  std::array<std::vector<Complex>, N> far;
  for (auto& v : far) v.resize(nodes.size());
  parallel_for(nodes.size(), [&](std::size_t i) {
    double factor = 1.0;
    for (std::size_t k = 0; k < singular.size(); ++k)
      factor -= share(singular, k, nodes[i].point) *
                patch_cutoff(gauge_distance(singular[k], nodes[i].point) / rho);
    if (factor <= 0.0) {
      for (auto& v : far) v[i] = 0.0;
      return;
    }
    const std::array<Complex, N> val = f(nodes[i].point);
    for (std::size_t c = 0; c < N; ++c) far[c][i] = nodes[i].weight * factor * val[c];
  });
  std::array<Complex, N> total;
  for (std::size_t c = 0; c < N; ++c) total[c] = pairwise_sum(far[c]);
  for (std::size_t k = 0; k < patches.size(); ++k) {
    const auto& patch = patches[k];
    std::array<std::vector<Complex>, N> near;
    for (auto& v : near) v.resize(patch.size());
    parallel_for(patch.size(), [&](std::size_t i) {
      const double w = patch[i].weight * share(singular, k, patch[i].point);
      if (w == 0.0) {
        for (auto& v : near) v[i] = 0.0;
        return;
      }
      const std::array<Complex, N> val = f(patch[i].point);
      for (std::size_t c = 0; c < N; ++c) near[c][i] = w * val[c];
    });
    for (std::size_t c = 0; c < N; ++c) total[c] += pairwise_sum(near[c]);
  }
  return total;
}

std::vector<GroupPoint> active_singular(const DomainMesh& mesh, std::span<const GroupPoint> singular,
                                        double rho, bool exterior) {
  std::vector<GroupPoint> active;
  for (const auto& p : singular) {
    const double d = mesh.exterior_distance(p);
    if (exterior ? d < rho : d == 0.0) active.push_back(p);
  }
  return active;
}
}  // namespace

QuadratureResult integrate_volume(const ScalarField& f, const DomainMesh& mesh,
                                  std::span<const GroupPoint> singular, const VolumeOptions& opts) {
  const double rho = patch_radius(mesh, singular, opts);
  const std::vector<GroupPoint> active = active_singular(mesh, singular, rho, opts.exterior_patches);
  auto scalar = [&f](const GroupPoint& p) { return std::array<Complex, 1>{f(p)}; };
  std::vector<std::vector<PatchNode>> patches;
  for (const auto& p : active) patches.push_back(patch_nodes(mesh, p, rho, opts));
  QuadratureResult r;
  r.value = volume_sum<1>(scalar, mesh.nodes(), patches, active, rho)[0];
  if (opts.estimate_error) {
    VolumeOptions coarse = resolved(opts, mesh);
    coarse.patch_radial = std::max(4, coarse.patch_radial / 2);
    coarse.patch_m1 = std::max(4, coarse.patch_m1 / 2);
    coarse.patch_m2 = std::max(8, coarse.patch_m2 / 2);
    std::vector<std::vector<PatchNode>> coarse_patches;
    for (const auto& p : active) coarse_patches.push_back(patch_nodes(mesh, p, rho, coarse));
    r.error_estimate = std::abs(
        r.value - volume_sum<1>(scalar, mesh.coarse_nodes(), coarse_patches, active, rho)[0]);
  }
  return r;
}

std::array<Complex, 3> integrate_volume3(
    const std::function<std::array<Complex, 3>(const GroupPoint&)>& f, const DomainMesh& mesh,
    std::span<const GroupPoint> singular, const VolumeOptions& opts) {
  const double rho = patch_radius(mesh, singular, opts);
  const std::vector<GroupPoint> active = active_singular(mesh, singular, rho, opts.exterior_patches);
  std::vector<std::vector<PatchNode>> patches;
  for (const auto& p : active) patches.push_back(patch_nodes(mesh, p, rho, opts));
  return volume_sum<3>(f, mesh.nodes(), patches, active, rho);
}

std::array<Complex, 3> subtracted_volume_sum(const DomainMesh& mesh,
                                             std::span<const Complex> node_density,
                                             const GroupPoint& p, const DensityJet& jet,
                                             const TripleKernel& kernel,
                                             const VolumeOptions& opts) {
  const auto& nodes = mesh.nodes();
  if (node_density.size() != nodes.size())
    throw std::invalid_argument("node density size does not match the mesh");
  const double rho = opts.rho > 0.0 ? opts.rho : 2.0 * mesh.radius();
  const double ext = mesh.exterior_distance(p);
  const bool near = opts.exterior_patches ? ext < rho : ext == 0.0;
  const GroupPoint p_inv = group_inv(p);
  auto taylor = [&](const GroupPoint& w) {
    return jet.value + jet.xtilde * w.x() + jet.ytilde * w.y();
  };
  std::array<std::vector<Complex>, 3> terms;
  for (auto& t : terms) t.resize(nodes.size());
  parallel_for(nodes.size(), [&](std::size_t i) {
    Complex g = node_density[i];
    if (near) {
      const GroupPoint w = group_mul(p_inv, nodes[i].point);
      const double r = gauge_norm(w);
      if (r == 0.0) {
        for (auto& t : terms) t[i] = 0.0;
        return;
      }
      const double chi = patch_cutoff(r / rho);
      if (chi != 0.0) g -= chi * taylor(w);
    }
    const KernelTriple k = kernel(nodes[i].point);
    for (int c = 0; c < 3; ++c) terms[c][i] = nodes[i].weight * g * k[c];
  });
  std::array<Complex, 3> out{};
  for (int c = 0; c < 3; ++c) out[c] = pairwise_sum(terms[c]);
  if (!near) return out;

  const auto patch = patch_nodes(mesh, p, rho, opts);
  std::array<std::vector<Complex>, 3> pterms;
  for (auto& t : pterms) t.resize(patch.size());
  parallel_for(patch.size(), [&](std::size_t i) {
    const Complex g = taylor(group_mul(p_inv, patch[i].point));
    const KernelTriple k = kernel(patch[i].point);
    for (int c = 0; c < 3; ++c) pterms[c][i] = patch[i].weight * g * k[c];
  });
  for (int c = 0; c < 3; ++c) out[c] += pairwise_sum(pterms[c]);
  return out;
}

// ---------------------------------------------------------------------------
// Characteristic points

double characteristic_measure(const Surface& surface, const ChartParam& param) {
  const GroupPoint p = surface.point(param.s1, param.s2);
  const Vec3 n = surface.unit_normal(p);
  const Vec3 xt{1.0, 0.0, 2.0 * p.y()};
  const Vec3 yt{0.0, 1.0, -2.0 * p.x()};
  return std::max(std::abs(dot(xt, n)), std::abs(dot(yt, n)));
}

std::vector<ChartParam> find_characteristic_points(const Surface& surface,
                                                   const SurfaceResolution& res, double tol) {
  if (!(tol > 0.0)) throw std::invalid_argument("tolerance must be positive");
  const int m1 = res.m1, m2 = res.m2;
  const double smax = surface.s1_max();
  const double h1 = smax / m1, h2 = 2.0 * kPi / m2;
  std::vector<double> grid(static_cast<std::size_t>(m1 + 1) * m2);
  auto at = [&](int i, int j) -> double& { return grid[static_cast<std::size_t>(i) * m2 + j]; };
  for (int i = 0; i <= m1; ++i)
    for (int j = 0; j < m2; ++j) at(i, j) = characteristic_measure(surface, {h1 * i, h2 * j});

  auto clamp_param = [&](ChartParam c) {
    c.s1 = std::clamp(c.s1, 0.0, smax);
    c.s2 = std::fmod(c.s2, 2.0 * kPi);
    if (c.s2 < 0.0) c.s2 += 2.0 * kPi;
    return c;
  };

  std::vector<ChartParam> found;
  for (int i = 0; i <= m1; ++i) {
    for (int j = 0; j < m2; ++j) {
      const double v = at(i, j);
      bool is_min = true;
      for (int di = -1; di <= 1 && is_min; ++di)
        for (int dj = -1; dj <= 1; ++dj) {
          if (di == 0 && dj == 0) continue;
          const int ii = i + di;
          if (ii < 0 || ii > m1) continue;
          const int jj = (j + dj + m2) % m2;
          if (at(ii, jj) < v) {
            is_min = false;
            break;
          }
        }
      if (!is_min) continue;
      // Compass search from the grid minimum.
      ChartParam best{h1 * i, h2 * j};
      double fbest = v;
      double step1 = 0.5 * h1, step2 = 0.5 * h2;
      while (step1 > 1e-13 * smax) {
        bool improved = false;
        const ChartParam trial[4] = {{best.s1 + step1, best.s2}, {best.s1 - step1, best.s2},
                                     {best.s1, best.s2 + step2}, {best.s1, best.s2 - step2}};
        for (const auto& t : trial) {
          const ChartParam c = clamp_param(t);
          const double f = characteristic_measure(surface, c);
          if (f < fbest) {
            fbest = f;
            best = c;
            improved = true;
          }
        }
        if (!improved) {
          step1 *= 0.5;
          step2 *= 0.5;
        }
      }
      if (fbest >= tol) continue;
      if (best.s1 < 1e-9 * smax) best = {0.0, 0.0};
      if (surface.closed() && best.s1 > smax * (1.0 - 1e-9)) best = {smax, 0.0};
      const GroupPoint pt = surface.point(best.s1, best.s2);
      bool dup = false;
      for (const auto& f : found)
        if (coordinate_distance(surface.point(f.s1, f.s2), pt) < 1e-6 * surface.scale()) dup = true;
      if (!dup) found.push_back(best);
    }
  }
  return found;
}

void write_surface_csv(std::ostream& os, const SurfaceQuadrature& quad) {
  os.precision(17);
  os << "s1,s2,x,y,t,weight\n";
  for (const auto& n : quad.nodes)
    os << n.param.s1 << ',' << n.param.s2 << ',' << n.point.x() << ',' << n.point.y() << ','
       << n.point.t() << ',' << n.weight << '\n';
}

void write_mesh_csv(std::ostream& os, const DomainMesh& mesh) {
  os.precision(17);
  os << "node,x,y,t,weight\n";
  std::size_t i = 0;
  for (const auto& n : mesh.nodes())
    os << i++ << ',' << n.point.x() << ',' << n.point.y() << ',' << n.point.t() << ',' << n.weight
       << '\n';
}

}  // namespace hpot

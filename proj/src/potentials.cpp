#include "hpot/potentials.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <sstream>

#include "hpot/quadrature.hpp"

namespace hpot {

namespace {
constexpr Complex kI{0.0, 1.0};

bool same_point(const GroupPoint& p, const GroupPoint& q) {
  return p.x() == q.x() && p.y() == q.y() && p.t() == q.t();
}

// Scalar field whose value and X, Xbar derivatives come from one memoized jet.
ScalarField memo_field(std::function<KernelJet(const GroupPoint&)> jet) {
  struct Memo {
    std::mutex mutex;
    std::map<std::array<double, 3>, KernelJet> values;
  };
  auto memo = std::make_shared<Memo>();
  auto lookup = [memo, jet = std::move(jet)](const GroupPoint& p) {
    const std::array<double, 3> key{p.x(), p.y(), p.t()};
    {
      std::lock_guard lock(memo->mutex);
      auto it = memo->values.find(key);
      if (it != memo->values.end()) return it->second;
    }
    const KernelJet j = jet(p);
    std::lock_guard lock(memo->mutex);
    memo->values.emplace(key, j);
    return j;
  };
  ScalarField f;
  f.eval = [lookup](const GroupPoint& p) { return lookup(p).value; };
  f.derivatives[FieldId::X(1)] = [lookup](const GroupPoint& p) { return lookup(p).x; };
  f.derivatives[FieldId::Xbar(1)] = [lookup](const GroupPoint& p) { return lookup(p).xbar; };
  return f;
}

std::string point_key(const GroupPoint& p) {
  std::ostringstream os;
  os.precision(17);
  os << p.x() << ',' << p.y() << ',' << p.t();
  return os.str();
}

PvReport pv_from_samples(const BoundarySamples& s, const std::vector<Complex>& integrand,
                         const std::vector<double>& deltas, const PvConfig& pv) {
  PvReport r;
  r.deltas = deltas;
  for (double d : deltas) r.levels.push_back(sum_over(s.quad, integrand, d));
  for (std::size_t k = 1; k < r.levels.size(); ++k)
    r.extrapolated.push_back(2.0 * r.levels[k] - r.levels[k - 1]);
  const std::size_t k = r.extrapolated.size();
  r.value = r.extrapolated.back();
  r.error_estimate = std::abs(r.extrapolated[k - 1] - r.extrapolated[k - 2]);
  r.converged = r.error_estimate <= std::max(pv.abs_tol, pv.rel_tol * std::abs(r.value));
  return r;
}

std::vector<Complex> times(const std::vector<Complex>& a, const std::vector<Complex>& b) {
  std::vector<Complex> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
  return out;
}

std::string half_residue_key(const KernelParams& params, const Surface& surface,
                             const GroupPoint& z, const std::vector<double>& deltas,
                             const LayerConfig& cfg) {
  std::ostringstream os;
  os.precision(17);
  os << surface.describe() << '|' << point_key(z) << '|' << params.a << ',' << params.b << '|';
  for (double d : deltas) os << d << ',';
  os << '|' << cfg.res.m1 << 'x' << cfg.res.m2 << '|' << cfg.target.panel_order << ','
     << cfg.target.eta << ',' << cfg.target.min_extent << ',' << cfg.target.cut_ratio << ','
     << cfg.target.max_depth;
  return os.str();
}

struct HalfResidueCache {
  std::mutex mutex;
  std::map<std::string, PvReport> values;
};

HalfResidueCache& hr_cache() {
  static HalfResidueCache cache;
  return cache;
}

void publish_half_residue(const std::string& key, const PvReport& r) {
  auto& cache = hr_cache();
  std::lock_guard lock(cache.mutex);
  cache.values.emplace(key, r);
}
}  // namespace

std::vector<double> PvConfig::deltas(double scale) const {
  if (levels < 3) throw std::invalid_argument("the excision schedule needs at least 3 levels");
  const double d0 = delta0 > 0.0 ? delta0 : 0.2 * scale;
  std::vector<double> d(levels);
  for (int k = 0; k < levels; ++k) d[k] = d0 * std::ldexp(1.0, -k);
  return d;
}

DensityValues density_values(const ScalarField& u, const GroupPoint& p, const FdConfig& fd) {
  return {u(p), apply_field(FieldId::X(1), u, p, fd), apply_field(FieldId::Xbar(1), u, p, fd)};
}

namespace {
// Barycentric weights for Gauss-Legendre points mapped to any interval.
std::vector<double> legendre_bary_weights(const Rule1D& unit) {
  std::vector<double> w(unit.nodes.size());
  for (std::size_t j = 0; j < w.size(); ++j) {
    const double x = unit.nodes[j];
    w[j] = (j % 2 ? -1.0 : 1.0) * std::sqrt((1.0 - x * x) * unit.weights[j]);
  }
  return w;
}

// Interpolation coefficients l_j(x) for nodes with barycentric weights.
std::vector<double> bary_coefficients(const std::vector<double>& nodes,
                                      const std::vector<double>& weights, double x) {
  std::vector<double> c(nodes.size(), 0.0);
  for (std::size_t j = 0; j < nodes.size(); ++j)
    if (x == nodes[j]) {
      c[j] = 1.0;
      return c;
    }
  double denom = 0.0;
  for (std::size_t j = 0; j < nodes.size(); ++j) {
    c[j] = weights[j] / (x - nodes[j]);
    denom += c[j];
  }
  for (double& v : c) v /= denom;
  return c;
}

// Trigonometric interpolation coefficients on m equispaced points (m even).
std::vector<double> periodic_coefficients(int m, double x) {
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  std::vector<double> c(m, 0.0);
  const double h = kTwoPi / m;
  double denom = 0.0;
  for (int j = 0; j < m; ++j) {
    const double d = std::remainder(x - h * j, kTwoPi);
    if (std::abs(d) < 1e-15) {
      std::fill(c.begin(), c.end(), 0.0);
      c[j] = 1.0;
      return c;
    }
    c[j] = (j % 2 ? -1.0 : 1.0) / std::tan(0.5 * d);
    denom += c[j];
  }
  for (double& v : c) v /= denom;
  return c;
}
}  // namespace

SurfaceDensity SurfaceDensity::direct(ScalarField u, const FdConfig& fd) {
  SurfaceDensity d;
  d.u_ = std::move(u);
  d.fd_ = fd;
  return d;
}

SurfaceDensity SurfaceDensity::interpolated(const ScalarField& u, const Surface& surface,
                                            const SurfaceResolution& res, const FdConfig& fd) {
  if (res.m1 < 8 || res.m2 < 8 || res.m2 % 2)
    throw std::invalid_argument("interpolation grid needs m1, m2 >= 8 and even m2");
  SurfaceDensity d;
  d.u_ = u;
  d.fd_ = fd;
  d.surface_id_ = surface.describe();
  d.surface_ = std::make_shared<Surface>(surface);
  const Rule1D& unit = gauss_legendre(res.m1);
  const double half = 0.5 * surface.s1_max();
  for (double x : unit.nodes) d.s1_nodes_.push_back(half * (x + 1.0));
  d.s1_weights_ = legendre_bary_weights(unit);
  d.m2_ = res.m2;
  d.grid_.resize(static_cast<std::size_t>(res.m1) * res.m2);
  const double h = 2.0 * std::numbers::pi / res.m2;
  parallel_for(d.grid_.size(), [&](std::size_t k) {
    const std::size_t i = k / res.m2, j = k % res.m2;
    d.grid_[k] = density_values(u, surface.point(d.s1_nodes_[i], h * j), fd);
  });
  return d;
}

DensityValues SurfaceDensity::at(const SurfaceNode& node) const {
  if (!surface_) return density_values(u_, node.point, fd_);
  const auto c1 = bary_coefficients(s1_nodes_, s1_weights_, node.param.s1);
  const auto c2 = periodic_coefficients(m2_, node.param.s2);
  DensityValues out{0.0, 0.0, 0.0};
  for (std::size_t i = 0; i < c1.size(); ++i) {
    if (c1[i] == 0.0) continue;
    DensityValues row{0.0, 0.0, 0.0};
    const DensityValues* g = &grid_[i * m2_];
    for (int j = 0; j < m2_; ++j) {
      row.value += c2[j] * g[j].value;
      row.x += c2[j] * g[j].x;
      row.xbar += c2[j] * g[j].xbar;
    }
    out.value += c1[i] * row.value;
    out.x += c1[i] * row.x;
    out.xbar += c1[i] * row.xbar;
  }
  return out;
}

DensityValues SurfaceDensity::at(const GroupPoint& p) const {
  if (!surface_) return density_values(u_, p, fd_);
  if (std::abs(surface_->level(p)) > 1e-9 * surface_->scale())
    throw std::invalid_argument("interpolated density evaluated off its surface");
  SurfaceNode node;
  node.point = p;
  node.param = surface_->params_of(p);
  return at(node);
}

namespace {
void require_surface(const SurfaceDensity& u, const Surface& surface) {
  if (!u.surface_id().empty() && u.surface_id() != surface.describe())
    throw std::invalid_argument("density was interpolated on a different surface");
}
}  // namespace

BoundarySamples sample_boundary(const KernelParams& params, const SurfaceDensity& u,
                                const Surface& surface, const GroupPoint& z,
                                std::span<const double> cuts, const LayerConfig& cfg) {
  require_surface(u, surface);
  BoundarySamples s;
  s.quad = targeted_quadrature(surface, cfg.res, z, cuts, cfg.target);
  const std::size_t n = s.quad.nodes.size();
  s.u.assign(n, 0.0);
  s.double_layer.assign(n, 0.0);
  s.single_layer.assign(n, 0.0);
  const GroupPoint z_inv = group_inv(z);
  const double min_cut = cuts.empty() ? 0.0 : *std::min_element(cuts.begin(), cuts.end());
  parallel_for(n, [&](std::size_t i) {
    const SurfaceNode& node = s.quad.nodes[i];
    if (node.weight == 0.0 || node.target_distance < min_cut) return;
    const DensityValues dv = u.at(node);
    const KernelJet k = eps_reflected_jet(params, group_mul(z_inv, node.point));
    s.u[i] = dv.value;
    s.double_layer[i] = interior_product_pullback(
                            nabla_ab_from(params.a, params.b, node.point, {k.x}, {k.xbar}), node)
                            .value;
    s.single_layer[i] =
        k.value * interior_product_pullback(
                      nabla_ab_from(params.b, params.a, node.point, {dv.x}, {dv.xbar}), node)
                      .value;
  });
  return s;
}

BoundaryTerms boundary_terms(const KernelParams& params, const SurfaceDensity& u,
                             const Surface& surface, const GroupPoint& z, const PvConfig& pv,
                             const LayerConfig& cfg) {
  const std::vector<double> deltas = pv.deltas(surface.scale());
  for (double d : deltas)
    if (d < min_resolvable_delta(surface, cfg.target))
      throw std::invalid_argument("excision radius below twice the finest node spacing");
  const BoundarySamples s = sample_boundary(params, u, surface, z, deltas, cfg);
  BoundaryTerms t;
  t.half_residue = pv_from_samples(s, s.double_layer, deltas, pv);
  publish_half_residue(half_residue_key(params, surface, z, deltas, cfg), t.half_residue);
  t.double_layer = pv_from_samples(s, times(s.u, s.double_layer), deltas, pv);
  t.single_layer = pv_from_samples(s, s.single_layer, deltas, pv);
  return t;
}

PvReport double_layer_pv(const KernelParams& params, const SurfaceDensity& u,
                         const Surface& surface, const GroupPoint& z, const PvConfig& pv,
                         const LayerConfig& cfg) {
  return boundary_terms(params, u, surface, z, pv, cfg).double_layer;
}

PvReport double_layer_pv(const KernelParams& params, const ScalarField& u, const Surface& surface,
                         const GroupPoint& z, const PvConfig& pv, const LayerConfig& cfg) {
  return double_layer_pv(params, SurfaceDensity::direct(u, cfg.fd), surface, z, pv, cfg);
}

void require_converged(const PvReport& report) {
  if (report.converged) return;
  std::ostringstream os;
  os.precision(17);
  os << "pv-not-converged: levels";
  for (std::size_t k = 0; k < std::min(report.levels.size(), report.deltas.size()); ++k)
    os << " [delta=" << report.deltas[k] << ": " << report.levels[k].real() << "+"
       << report.levels[k].imag() << "i]";
  throw NumericalError("pv-not-converged", os.str());
}

Complex double_layer(const KernelParams& params, const SurfaceDensity& u, const Surface& surface,
                     const GroupPoint& z, const LayerConfig& cfg) {
  const BoundarySamples s = sample_boundary(params, u, surface, z, {}, cfg);
  return sum_over(s.quad, times(s.u, s.double_layer));
}

Complex double_layer(const KernelParams& params, const ScalarField& u, const Surface& surface,
                     const GroupPoint& z, const LayerConfig& cfg) {
  return double_layer(params, SurfaceDensity::direct(u, cfg.fd), surface, z, cfg);
}

LimitReport double_layer_limit(const KernelParams& params, const SurfaceDensity& u,
                               const Surface& surface, const GroupPoint& z, Side side,
                               const LimitConfig& lim, const LayerConfig& cfg) {
  if (lim.levels < 2) throw std::invalid_argument("limit needs at least two approach points");
  if (!(lim.ratio > 0.0 && lim.ratio < 1.0)) throw std::invalid_argument("ratio must be in (0, 1)");
  const Vec3 n = surface.unit_normal(z);
  const double sign = side == Side::Inside ? -1.0 : 1.0;
  LimitReport r;
  for (int k = 0; k < lim.levels; ++k) {
    const double s = lim.s0 * std::pow(lim.ratio, k) * surface.scale();
    const GroupPoint z0 =
        GroupPoint::xyt(z.x() + sign * s * n[0], z.y() + sign * s * n[1], z.t() + sign * s * n[2]);
    const double lvl = surface.level(z0);
    if ((side == Side::Inside) != (lvl < 0.0))
      throw NumericalError("limit-unstable", "approach point left the intended side");
    r.offsets.push_back(s);
    r.values.push_back(double_layer(params, u, surface, z0, cfg));
  }
  const std::size_t K = r.values.size();
  const double sK = r.offsets[K - 1], sK1 = r.offsets[K - 2];
  const Complex d = r.values[K - 1] - r.values[K - 2];
  r.value = r.values[K - 1] + d * sK / (sK1 - sK);
  r.error_estimate = std::abs(d);
  if (K >= 3) {
    const double floor = 1e-9 * std::max(1.0, std::abs(r.values[K - 1]));
    r.stable = std::abs(d) <= 1.5 * std::abs(r.values[K - 2] - r.values[K - 3]) + floor;
  }
  return r;
}

LimitReport double_layer_limit(const KernelParams& params, const ScalarField& u,
                               const Surface& surface, const GroupPoint& z, Side side,
                               const LimitConfig& lim, const LayerConfig& cfg) {
  return double_layer_limit(params, SurfaceDensity::direct(u, cfg.fd), surface, z, side, lim, cfg);
}

Complex single_layer_flux(const KernelParams& params, const SurfaceDensity& u,
                          const Surface& surface, const GroupPoint& z, const LayerConfig& cfg) {
  if (std::abs(surface.level(z)) <= 1e-10 * surface.scale())
    return boundary_terms(params, u, surface, z, {}, cfg).single_layer.value;
  const BoundarySamples s = sample_boundary(params, u, surface, z, {}, cfg);
  return sum_over(s.quad, s.single_layer);
}

Complex single_layer_flux(const KernelParams& params, const ScalarField& u,
                          const Surface& surface, const GroupPoint& z, const LayerConfig& cfg) {
  return single_layer_flux(params, SurfaceDensity::direct(u, cfg.fd), surface, z, cfg);
}

PvReport half_residue(const KernelParams& params, const Surface& surface, const GroupPoint& z,
                      const PvConfig& pv, const LayerConfig& cfg) {
  const std::vector<double> deltas = pv.deltas(surface.scale());
  const std::string key = half_residue_key(params, surface, z, deltas, cfg);
  {
    auto& cache = hr_cache();
    std::lock_guard lock(cache.mutex);
    auto it = cache.values.find(key);
    if (it != cache.values.end()) {
      PvReport r = it->second;
      r.converged = r.error_estimate <= std::max(pv.abs_tol, pv.rel_tol * std::abs(r.value));
      return r;
    }
  }
  return double_layer_pv(params, ScalarField::constant(1.0), surface, z, pv, cfg);
}

JumpReport jump_relations_report(const KernelParams& params, const SurfaceDensity& u,
                                 const Surface& surface, const GroupPoint& z, const PvConfig& pv,
                                 const LimitConfig& lim, const LayerConfig& cfg) {
  JumpReport r;
  r.c_ab = params.c();
  r.u_z = u.at(z).value;
  r.pv = double_layer_pv(params, u, surface, z, pv, cfg);
  r.half_residue = half_residue(params, surface, z, pv, cfg).value;
  r.plus = double_layer_limit(params, u, surface, z, Side::Inside, lim, cfg);
  r.minus = double_layer_limit(params, u, surface, z, Side::Outside, lim, cfg);
  r.w_zero = r.pv.value;
  r.w_plus = r.plus.value;
  r.w_minus = r.minus.value;
  r.residual1 = (r.w_plus - r.w_minus) - r.c_ab * r.u_z;
  r.residual2 = (r.w_zero - r.w_minus) - r.half_residue * r.u_z;
  r.residual3 = (r.w_plus - r.w_zero) - (r.c_ab - r.half_residue) * r.u_z;
  return r;
}

JumpReport jump_relations_report(const KernelParams& params, const ScalarField& u,
                                 const Surface& surface, const GroupPoint& z, const PvConfig& pv,
                                 const LimitConfig& lim, const LayerConfig& cfg) {
  return jump_relations_report(params, SurfaceDensity::direct(u, cfg.fd), surface, z, pv, lim, cfg);
}

// ---------------------------------------------------------------------------
// Newton potentials

NewtonPotential::NewtonPotential(KernelParams params, ScalarField f,
                                 std::shared_ptr<const DomainMesh> mesh, VolumeOptions opts,
                                 NearField near, FdConfig fd)
    : params_(std::move(params)),
      f_(std::move(f)),
      mesh_(std::move(mesh)),
      opts_(opts),
      near_(near),
      fd_(fd) {
  if (!mesh_) throw std::invalid_argument("Newton potential needs a mesh");
  const auto& nodes = mesh_->nodes();
  f_nodes_.resize(nodes.size());
  parallel_for(nodes.size(), [&](std::size_t i) { f_nodes_[i] = f_(nodes[i].point); });
}

KernelJet NewtonPotential::jet(const GroupPoint& z) const {
  if (near_ == NearField::Subtraction) {
    DensityJet dj{0.0, 0.0, 0.0};
    if (mesh_->exterior_distance(z) == 0.0)
      dj = {f_(z), apply_field(FieldId::Xtilde(1), f_, z, fd_),
            apply_field(FieldId::Ytilde(1), f_, z, fd_)};
    VolumeOptions o = opts_;
    o.exterior_patches = false;
    const auto sums = subtracted_volume_sum(
        *mesh_, f_nodes_, z, dj,
        [&](const GroupPoint& xi) {
          if (same_point(xi, z)) return KernelTriple{0.0, 0.0, 0.0};
          const KernelJet k = eps_jet(params_, group_mul(group_inv(xi), z));
          return KernelTriple{k.value, k.x, k.xbar};
        },
        o);
    return {sums[0], sums[1], sums[2]};
  }
  const GroupPoint pts[] = {z};
  const double rho = patch_radius(*mesh_, pts, opts_);
  const double ext = mesh_->exterior_distance(z);
  const bool near = opts_.exterior_patches ? ext < rho : ext == 0.0;
  const auto& nodes = mesh_->nodes();
  std::array<std::vector<Complex>, 3> far;
  for (auto& v : far) v.assign(nodes.size(), 0.0);
  parallel_for(nodes.size(), [&](std::size_t i) {
    if (f_nodes_[i] == Complex(0.0)) return;
    const GroupPoint w = group_mul(group_inv(nodes[i].point), z);
    double factor = 1.0;
    if (near) factor -= patch_cutoff(gauge_norm(w) / rho);
    if (factor <= 0.0) return;
    const KernelJet k = eps_jet(params_, w);
    const Complex g = nodes[i].weight * factor * f_nodes_[i];
    far[0][i] = g * k.value;
    far[1][i] = g * k.x;
    far[2][i] = g * k.xbar;
  });
  std::array<Complex, 3> total;
  for (int c = 0; c < 3; ++c) total[c] = pairwise_sum(far[c]);
  if (near) {
    const auto patch = patch_nodes(*mesh_, z, rho, opts_);
    std::array<std::vector<Complex>, 3> pn;
    for (auto& v : pn) v.assign(patch.size(), 0.0);
    parallel_for(patch.size(), [&](std::size_t i) {
      const Complex fv = f_(patch[i].point);
      if (fv == Complex(0.0)) return;
      const KernelJet k = eps_jet(params_, group_mul(group_inv(patch[i].point), z));
      const Complex g = patch[i].weight * fv;
      pn[0][i] = g * k.value;
      pn[1][i] = g * k.x;
      pn[2][i] = g * k.xbar;
    });
    for (int c = 0; c < 3; ++c) total[c] += pairwise_sum(pn[c]);
  }
  return {total[0], total[1], total[2]};
}

ScalarField NewtonPotential::field() const {
  auto self = std::make_shared<NewtonPotential>(*this);
  return memo_field([self](const GroupPoint& z) { return self->jet(z); });
}

QuadratureResult newton_potential(const KernelParams& params, const ScalarField& f,
                                  const DomainMesh& mesh, const GroupPoint& z,
                                  const VolumeOptions& opts) {
  const GroupPoint pts[] = {z};
  return integrate_volume(
      ScalarField{[&](const GroupPoint& xi) {
                    const Complex fv = f(xi);
                    return fv == Complex(0.0) || same_point(xi, z) ? Complex(0.0)
                                                                   : fv * eps_pair(params, xi, z);
                  },
                  {}},
      mesh, pts, opts);
}

GeneralizedNewtonPotential::GeneralizedNewtonPotential(
    int m, KernelParams params, ScalarField f, std::shared_ptr<const DomainMesh> support_mesh,
    std::shared_ptr<const DomainMesh> domain_mesh, VolumeOptions opts, NearField first_stage,
    FdConfig fd, std::optional<VolumeOptions> first_opts)
    : m_(m), params_(std::move(params)), domain_(std::move(domain_mesh)), opts_(opts) {
  if (m < 1) throw std::invalid_argument("order m must be at least 1");
  if (m >= 2 && !domain_) throw std::invalid_argument("m >= 2 needs a domain mesh");
  if (m >= 2) params_.c();
  VolumeOptions support_opts = opts;
  if (first_opts) {
    support_opts = *first_opts;
  } else {
    support_opts.rho = 0.0;
    support_opts.patch_radial = support_opts.patch_m1 = support_opts.patch_m2 = 0;
    support_opts.exterior_patches = false;
  }
  first_ = std::make_shared<NewtonPotential>(params_, std::move(f), std::move(support_mesh),
                                             support_opts, first_stage, fd);
  for (int k = 1; k < m; ++k) {
    const auto& nodes = domain_->nodes();
    std::vector<Complex> values(nodes.size());
    parallel_for(nodes.size(), [&](std::size_t i) { values[i] = jet_order(k, nodes[i].point).value; });
    node_values_.push_back(std::move(values));
  }
}

KernelJet GeneralizedNewtonPotential::jet_order(int order, const GroupPoint& z) const {
  if (order == 1) return first_->jet(z);
  const KernelJet prev = jet_order(order - 1, z);
  const DensityJet dj{prev.value, prev.x + prev.xbar, kI * (prev.x - prev.xbar)};
  const auto sums = subtracted_volume_sum(
      *domain_, node_values_[order - 2], z, dj,
      [&](const GroupPoint& zeta) {
        if (same_point(zeta, z)) return KernelTriple{0.0, 0.0, 0.0};
        const KernelJet k = eps_jet(params_, group_mul(group_inv(zeta), z));
        return KernelTriple{k.value, k.x, k.xbar};
      },
      opts_);
  const Complex inv_c = 1.0 / params_.c();
  return {inv_c * sums[0], inv_c * sums[1], inv_c * sums[2]};
}

KernelJet GeneralizedNewtonPotential::jet(int k, const GroupPoint& z) const {
  if (k < 0 || k >= m_) throw std::out_of_range("tower level out of range");
  return jet_order(m_ - k, z);
}

ScalarField GeneralizedNewtonPotential::level(int k) const {
  if (k < 0 || k >= m_) throw std::out_of_range("tower level out of range");
  auto self = std::make_shared<GeneralizedNewtonPotential>(*this);
  return memo_field([self, k](const GroupPoint& z) { return self->jet(k, z); });
}

std::vector<ScalarField> GeneralizedNewtonPotential::tower() const {
  std::vector<ScalarField> t;
  for (int k = 0; k < m_; ++k) t.push_back(level(k));
  return t;
}

QuadratureResult generalized_newton_potential(int m, const KernelParams& params,
                                              const ScalarField& f, const DomainMesh& mesh,
                                              const IteratedKernel& kernel, const GroupPoint& z,
                                              const VolumeOptions& opts) {
  if (m != kernel.m()) throw std::invalid_argument("kernel order does not match m");
  if (m == 1) return newton_potential(params, f, mesh, z, opts);
  const GroupPoint pts[] = {z};
  return integrate_volume(
      ScalarField{[&](const GroupPoint& xi) {
                    const Complex fv = f(xi);
                    return fv == Complex(0.0) || same_point(xi, z)
                               ? Complex(0.0)
                               : fv * eps_m_eval(kernel, xi, z);
                  },
                  {}},
      mesh, pts, opts);
}

}  // namespace hpot

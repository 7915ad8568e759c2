#include "hpot/verify.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>

#include "hpot/quadrature.hpp"

namespace hpot {

namespace {
constexpr Complex kI{0.0, 1.0};
constexpr double kTiny = std::numeric_limits<double>::min();

// Uniform double in [0, 1) from the top 53 bits; portable across standard libraries.
double unit_uniform(std::mt19937_64& g) { return static_cast<double>(g() >> 11) * 0x1.0p-53; }

double uniform(std::mt19937_64& g, double lo, double hi) {
  return lo + (hi - lo) * unit_uniform(g);
}

GroupPoint random_point(std::mt19937_64& g, double scale) {
  const double x = uniform(g, -scale, scale);
  const double y = uniform(g, -scale, scale);
  const double t = uniform(g, -scale, scale);
  return GroupPoint::xyt(x, y, t);
}

double normalization(const KernelParams& params, double u_scale) {
  return std::max(std::abs(params.c()) * u_scale, kTiny);
}

// Smooth complex test function for the field identities.
ScalarField test_function() {
  return ScalarField{[](const GroupPoint& p) {
                       return Complex(std::exp(0.3 * p.x()) * std::sin(0.5 * p.y() + 0.7 * p.t()),
                                      std::cos(0.2 * p.x() * p.t() + 0.4 * p.y()));
                     },
                     {}};
}
}  // namespace

bool ResidualReport::pass() const {
  return std::isfinite(std::abs(residual)) && std::abs(residual) <= tolerance * normalization;
}

void ConvergenceTable::add(double resolution, double residual) {
  ConvergenceRow row{resolution, residual, std::numeric_limits<double>::quiet_NaN()};
  if (!rows.empty() && residual > 0.0 && rows.back().residual > 0.0)
    row.order = std::log2(rows.back().residual / residual);
  rows.push_back(row);
}

bool ConvergenceTable::strictly_decreasing() const {
  for (std::size_t k = 1; k < rows.size(); ++k)
    if (!(rows[k].residual < rows[k - 1].residual)) return false;
  return rows.size() >= 2;
}

double ConvergenceTable::final_residual() const {
  return rows.empty() ? std::numeric_limits<double>::quiet_NaN() : rows.back().residual;
}

// ---------------------------------------------------------------------------

Complex Bump::value(const GroupPoint& p) const {
  const double dx = p.x() - center.x(), dy = p.y() - center.y(), dt = p.t() - center.t();
  const double q2 = (dx * dx + dy * dy + dt * dt) / (radius * radius);
  if (q2 >= 1.0) return 0.0;
  return amplitude * std::exp(1.0 - 1.0 / (1.0 - q2));
}

ScalarField Bump::field() const {
  const Bump b = *this;
  // Coordinate gradient (u_x, u_y, u_t) of the bump.
  auto gradient = [b](const GroupPoint& p) -> std::array<double, 3> {
    const double dx = p.x() - b.center.x(), dy = p.y() - b.center.y(), dt = p.t() - b.center.t();
    const double r2 = b.radius * b.radius;
    const double q2 = (dx * dx + dy * dy + dt * dt) / r2;
    if (q2 >= 1.0) return {0.0, 0.0, 0.0};
    const double s = 1.0 - q2;
    const double u = b.amplitude * std::exp(1.0 - 1.0 / s);
    const double g = -u / (s * s) * 2.0 / r2;
    return {g * dx, g * dy, g * dt};
  };
  ScalarField f;
  f.eval = [b](const GroupPoint& p) { return b.value(p); };
  f.derivatives[FieldId::X(1)] = [gradient](const GroupPoint& p) {
    const auto d = gradient(p);
    return 0.5 * Complex(d[0], -d[1]) + kI * std::conj(p.zeta(0)) * d[2];
  };
  f.derivatives[FieldId::Xbar(1)] = [gradient](const GroupPoint& p) {
    const auto d = gradient(p);
    return 0.5 * Complex(d[0], d[1]) - kI * p.zeta(0) * d[2];
  };
  return f;
}

std::shared_ptr<const DomainMesh> Bump::support_mesh(const VolumeResolution& res) const {
  return build_volume_mesh(DomainKind::EuclideanBall, radius, center, res);
}

std::vector<GroupPoint> interior_probes(const Bump& bump) {
  static constexpr double kPattern[8][3] = {
      {0.0, 0.0, 0.0},    {0.4, 0.0, 0.0},     {-0.3, 0.2, 0.0},    {0.0, -0.4, 0.0},
      {0.0, 0.0, 0.4},    {0.2, 0.2, -0.3},    {-0.25, -0.2, 0.25}, {0.3, -0.3, 0.2}};
  std::vector<GroupPoint> out;
  for (const auto& o : kPattern)
    out.push_back(GroupPoint::xyt(bump.center.x() + o[0] * bump.radius,
                                  bump.center.y() + o[1] * bump.radius,
                                  bump.center.t() + o[2] * bump.radius));
  return out;
}

std::vector<GroupPoint> boundary_probes(const Surface& surface, int count, std::uint64_t seed) {
  if (!surface.closed()) throw std::invalid_argument("boundary probes need a closed surface");
  if (count < 1) throw std::invalid_argument("probe count must be positive");
  std::mt19937_64 g(seed);
  const double half = std::numbers::pi / 2;
  std::vector<GroupPoint> out;
  for (int tries = 0; static_cast<int>(out.size()) < count; ++tries) {
    if (tries > 100 * count) throw std::runtime_error("no non-characteristic probes found");
    const ChartParam c{uniform(g, half - 0.35, half + 0.35), uniform(g, 0.0, 2.0 * std::numbers::pi)};
    if (characteristic_measure(surface, c) < 0.1) continue;
    out.push_back(surface.point(c.s1, c.s2));
  }
  return out;
}

// ---------------------------------------------------------------------------

double group_law_defect(int samples, std::uint64_t seed) {
  std::mt19937_64 g(seed);
  double worst = 0.0;
  for (int k = 0; k < samples; ++k) {
    const GroupPoint p = random_point(g, 2.0), q = random_point(g, 2.0), r = random_point(g, 2.0);
    worst = std::max(worst, coordinate_distance(group_mul(group_mul(p, q), r),
                                                group_mul(p, group_mul(q, r))));
    worst = std::max(worst, coordinate_distance(group_mul(p, group_inv(p)), GroupPoint{}));
    worst = std::max(worst, coordinate_distance(group_mul(group_inv(p), p), GroupPoint{}));
  }
  return worst;
}

double left_invariance_defect(double h, int samples, std::uint64_t seed) {
  std::mt19937_64 g(seed);
  const ScalarField f = test_function();
  const FdConfig fd{h};
  const FieldId fields[] = {FieldId::X(1), FieldId::Xbar(1), FieldId::T(), FieldId::Xtilde(1),
                            FieldId::Ytilde(1)};
  double worst = 0.0;
  for (int k = 0; k < samples; ++k) {
    const GroupPoint shift = random_point(g, 1.0), p = random_point(g, 1.0);
    const ScalarField translated{[f, shift](const GroupPoint& q) { return f(group_mul(shift, q)); },
                                 {}};
    for (const FieldId& id : fields)
      worst = std::max(worst, std::abs(apply_field(id, translated, p, fd) -
                                       apply_field(id, f, group_mul(shift, p), fd)));
  }
  return worst;
}

double commutator_defect(double h, const GroupPoint& p) {
  const ScalarField f = test_function();
  const FdConfig fd{h};
  const ScalarField xf = field_image(FieldId::X(1), f, fd);
  const ScalarField xbf = field_image(FieldId::Xbar(1), f, fd);
  const Complex bracket =
      apply_field(FieldId::X(1), xbf, p, fd) - apply_field(FieldId::Xbar(1), xf, p, fd);
  return std::abs(bracket + 2.0 * kI * apply_field(FieldId::T(), f, p, fd));
}

double frame_defect(double h, const GroupPoint& p) {
  const ScalarField f = test_function();
  const FdConfig fd{h};
  const Complex x = apply_field(FieldId::X(1), f, p, fd);
  const Complex xt = apply_field(FieldId::Xtilde(1), f, p, fd);
  const Complex yt = apply_field(FieldId::Ytilde(1), f, p, fd);
  return std::abs(x - 0.5 * (xt - kI * yt));
}

double homogeneity_defect(const KernelParams& params, int samples, std::uint64_t seed) {
  std::mt19937_64 g(seed);
  double worst = 0.0;
  for (int k = 0; k < samples; ++k) {
    const double lambda = std::exp(uniform(g, std::log(0.1), std::log(10.0)));
    GroupPoint z = random_point(g, 1.0);
    if (z.is_identity()) z = GroupPoint::xyt(0.5, 0.0, 0.0);
    const Complex lhs = eps(params, dilate(lambda, z));
    const Complex rhs = eps(params, z) / (lambda * lambda);
    worst = std::max(worst, std::abs(lhs - rhs) / std::abs(rhs));
  }
  return worst;
}

double annihilation_defect(const KernelParams& params, double h, int points) {
  const Surface unit = Surface::make(SurfaceKind::GaugeSphere, 1.0);
  const ScalarField e{[params](const GroupPoint& p) { return eps(params, p); }, {}};
  double worst = 0.0;
  for (int k = 0; k < points; ++k) {
    // Spread over latitudes and longitudes, poles excluded.
    const double s1 = std::numbers::pi * (k + 0.5) / points;
    const double s2 = 2.0 * std::numbers::pi * std::fmod(0.618033988749895 * k, 1.0);
    worst = std::max(worst, std::abs(kohn_laplacian(params, e, unit.point(s1, s2), FdConfig{h})));
  }
  return worst;
}

ResidualReport gauss_identity(const KernelParams& params, const Surface& surface,
                              const GroupPoint& z, bool inside, const SurfaceResolution& res,
                              double tol) {
  const CabNumeric v = c_ab_numeric(params, surface, z, res);
  ResidualReport r;
  r.check_id = inside ? "gauss-interior" : "gauss-exterior";
  r.probe = z;
  r.residual = inside ? v.value - params.c() : v.value;
  r.normalization = std::abs(params.c());
  r.error_estimate = v.error_estimate;
  r.tolerance = tol;
  return r;
}

// ---------------------------------------------------------------------------

ResidualReport bc_residual_first(const KernelParams& params, const SurfaceDensity& u,
                                 const Surface& surface, const GroupPoint& z, double u_scale,
                                 const PvConfig& pv, const LayerConfig& cfg, double tol) {
  const BoundaryTerms bt = boundary_terms(params, u, surface, z, pv, cfg);
  require_converged(bt.half_residue);
  require_converged(bt.double_layer);
  const Complex uz = u.at(z).value;
  ResidualReport r;
  r.check_id = "bc-first";
  r.probe = z;
  r.residual = (params.c() - bt.half_residue.value) * uz + bt.double_layer.value -
               bt.single_layer.value;
  r.normalization = normalization(params, u_scale);
  r.error_estimate = bt.double_layer.error_estimate +
                     std::abs(uz) * bt.half_residue.error_estimate +
                     bt.single_layer.error_estimate;
  r.tolerance = tol;
  return r;
}

ResidualReport representation_residual(const KernelParams& params, const ScalarField& u,
                                       const ScalarField& f, const DomainMesh& mesh,
                                       const Surface& surface, const GroupPoint& z,
                                       double u_scale, const LayerConfig& cfg,
                                       const VolumeOptions& vopts, double tol) {
  if (!(surface.level(z) < 0.0)) throw std::invalid_argument("representation needs an interior point");
  const QuadratureResult nf = newton_potential(params, f, mesh, z, vopts);
  const Complex w = double_layer(params, u, surface, z, cfg);
  const Complex s = single_layer_flux(params, u, surface, z, cfg);
  ResidualReport r;
  r.check_id = "representation";
  r.probe = z;
  r.residual = params.c() * u(z) - (params.c() * nf.value + w - s);
  r.normalization = normalization(params, u_scale);
  r.error_estimate = std::abs(params.c()) * nf.error_estimate;
  r.tolerance = tol;
  return r;
}

ResidualReport interior_identity_residual(const KernelParams& params, const SurfaceDensity& u,
                                          const Surface& surface, const GroupPoint& z,
                                          double u_scale, const LayerConfig& cfg, double tol) {
  if (!(surface.level(z) < 0.0)) throw std::invalid_argument("interior identity needs an interior point");
  ResidualReport r;
  r.check_id = "interior-identity";
  r.probe = z;
  r.residual = double_layer(params, u, surface, z, cfg) - single_layer_flux(params, u, surface, z, cfg);
  r.normalization = normalization(params, u_scale);
  r.tolerance = tol;
  return r;
}

ResidualReport bc_residual_higher(const KernelParams& params, int m, int i,
                                  const std::vector<SurfaceDensity>& tower,
                                  const IteratedKernel& kernel, const Surface& surface,
                                  const GroupPoint& z, double u_scale, const HigherConfig& cfg,
                                  double tol) {
  if (m < 1 || i < 0 || i >= m) throw std::invalid_argument("need 0 <= i < m");
  if (static_cast<int>(tower.size()) != m) throw std::invalid_argument("tower must hold m levels");
  if (kernel.m() < m) throw std::invalid_argument("iterated kernel order below m");

  // j = 0 pairs box^i u with eps_1: principal value, half residue, single layer.
  const BoundaryTerms bt = boundary_terms(params, tower[i], surface, z, cfg.pv, cfg.layer);
  require_converged(bt.half_residue);
  require_converged(bt.double_layer);
  const Complex uz = tower[i].at(z).value;
  Complex residual = (params.c() - bt.half_residue.value) * uz + bt.double_layer.value -
                     bt.single_layer.value;
  double error = bt.double_layer.error_estimate + std::abs(uz) * bt.half_residue.error_estimate +
                 bt.single_layer.error_estimate;

  // j >= 1 pairs box^{j+i} u with eps_{j+1}; both kernels are weakly singular.
  if (m - i > 1) {
    const double delta = cfg.pv.deltas(surface.scale()).back();
    const double cuts[] = {delta};
    const SurfaceQuadrature quad =
        targeted_quadrature(surface, cfg.kernel_res, z, cuts, cfg.kernel_target);
    for (int j = 1; j < m - i; ++j) {
      const int k = j + 1;
      const SurfaceDensity& u = tower[j + i];
      std::vector<Complex> integrand(quad.nodes.size(), 0.0);
      parallel_for(quad.nodes.size(), [&](std::size_t n) {
        const SurfaceNode& node = quad.nodes[n];
        if (node.weight == 0.0 || node.target_distance < delta) return;
        const KernelJet kj = kernel.eval_source_jet(k, node.point, z);
        const DensityValues dv = u.at(node);
        const Complex flux =
            interior_product_pullback(nabla_ab_from(params.a, params.b, node.point, {kj.x}, {kj.xbar}),
                                      node)
                .value;
        const Complex single =
            interior_product_pullback(nabla_ab_from(params.b, params.a, node.point, {dv.x}, {dv.xbar}),
                                      node)
                .value;
        integrand[n] = dv.value * flux - kj.value * single;
      });
      residual += sum_over(quad, integrand, delta);
    }
  }

  ResidualReport r;
  r.check_id = "bc-higher-i" + std::to_string(i);
  r.probe = z;
  r.residual = residual;
  r.normalization = normalization(params, u_scale);
  r.error_estimate = error;
  r.tolerance = tol;
  return r;
}

ResidualReport iterated_kernel_residual(const IteratedKernel& kernel, const GroupPoint& xi,
                                        const GroupPoint& z, const FdConfig& fd, double tol) {
  if (kernel.m() < 2) throw std::invalid_argument("iterated kernel of order >= 2 required");
  const ScalarField e2{[&kernel, xi](const GroupPoint& p) { return kernel.eval(2, xi, p); }, {}};
  const Complex target = eps_pair(kernel.params(), xi, z);
  ResidualReport r;
  r.check_id = "iterated-kernel";
  r.probe = z;
  r.residual = kohn_laplacian(kernel.params(), e2, z, fd) - target;
  r.normalization = std::max(std::abs(target), kTiny);
  r.tolerance = tol;
  return r;
}

// ---------------------------------------------------------------------------

ConvergenceTable bump_roundtrip(int m, const KernelParams& params, const RoundtripSpec& spec) {
  if (m != 1 && m != 2) throw std::invalid_argument("round trips are defined for m = 1, 2");
  if ((m == 1 ? spec.levels.size() : spec.levels_m2.size()) == 0)
    throw std::invalid_argument("round trip needs at least one level");
  const Bump& bump = spec.bump;
  if (bump.radius > 0.5 * spec.domain_radius)
    throw std::invalid_argument("bump support radius must be at most half the domain radius");
  ConvergenceTable table;
  table.check_id = m == 1 ? "roundtrip-m1" : "roundtrip-m2";
  const FdConfig& fd = m == 1 ? spec.fd_m1 : spec.fd_m2;
  const ScalarField f = box_power_field(m, params, bump.field(), fd).scaled(1.0 / params.c());
  const std::vector<GroupPoint> probes = interior_probes(bump);
  const double scale = bump.amplitude != 0.0 ? std::abs(bump.amplitude) : 1.0;
  VolumeOptions opts;
  opts.exterior_patches = false;
  opts.estimate_error = false;

  auto record = [&](double resolution, const std::vector<Complex>& values) {
    double worst = 0.0;
    for (std::size_t k = 0; k < probes.size(); ++k)
      worst = std::max(worst, std::abs(values[k] - bump.value(probes[k])) / scale);
    table.add(resolution, worst);
  };
  std::vector<Complex> values(probes.size());
  if (m == 1) {
    for (const VolumeResolution& res : spec.levels) {
      const NewtonPotential u(params, f, bump.support_mesh(res), opts);
      for (std::size_t k = 0; k < probes.size(); ++k) values[k] = u(probes[k]);
      record(res.radial, values);
    }
    return table;
  }
  // Small patches resolve the steep first-stage density near the support edge.
  VolumeOptions first = opts;
  first.rho = 0.2 * bump.radius;
  first.patch_radial = 16;
  first.patch_m1 = 8;
  first.patch_m2 = 16;
  for (const TwoStageLevel& level : spec.levels_m2) {
    const auto domain =
        build_volume_mesh(DomainKind::GaugeBall, spec.domain_radius, bump.center, level.domain);
    const GeneralizedNewtonPotential u(2, params, f, bump.support_mesh(level.support), domain, opts,
                                       NearField::Patch, fd, first);
    for (std::size_t k = 0; k < probes.size(); ++k) values[k] = u.jet(0, probes[k]).value;
    record(level.support.radial, values);
  }
  return table;
}

}  // namespace hpot

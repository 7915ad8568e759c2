// Newton potentials, the double layer W with its limits W+, W-, W0, the
// single-layer flux term, the half residue, and the jump relations.
#pragma once

#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "hpot/geometry.hpp"
#include "hpot/kernels.hpp"

namespace hpot {

/// Numerical failure with a machine-readable code ("pv-not-converged",
/// "limit-unstable", ...).
class NumericalError : public std::runtime_error {
 public:
  NumericalError(std::string code, const std::string& what)
      : std::runtime_error(what), code_(std::move(code)) {}
  const std::string& code() const { return code_; }

 private:
  std::string code_;
};

/// Excision schedule delta_k = delta0 2^{-k}, k = 0..levels-1.
struct PvConfig {
  double delta0 = 0.0;  // 0 selects 0.2 * surface scale
  int levels = 5;
  double abs_tol = 1e-4;
  double rel_tol = 0.01;

  std::vector<double> deltas(double scale) const;
};

/// The excised integrals approach the principal value linearly in delta, so
/// the reported value is the Richardson extrapolant 2 I(delta_k) - I(delta_{k-1})
/// at the smallest delta.
struct PvReport {
  Complex value;                      // extrapolated principal value
  std::vector<double> deltas;
  std::vector<Complex> levels;        // excised integral per delta
  std::vector<Complex> extrapolated;  // extrapolant per delta, from the second on
  bool converged = false;
  double error_estimate = 0.0;        // last successive extrapolant difference
};

enum class Side { Inside, Outside };

/// Approach offsets s_k = s0 * ratio^k (relative to the surface scale) along
/// the Euclidean normal; linear extrapolation to s = 0 from the last two.
struct LimitConfig {
  double s0 = 0.05;
  double ratio = 0.5;
  int levels = 4;
};

struct LimitReport {
  Complex value;
  std::vector<double> offsets;
  std::vector<Complex> values;
  bool stable = true;  // successive differences do not grow
  double error_estimate = 0.0;
};

/// Surface quadrature and target-refinement settings shared by the layer
/// potentials.
struct LayerConfig {
  SurfaceResolution res{32, 64};
  TargetOptions target{};
  FdConfig fd{};
};

// ---------------------------------------------------------------------------
// Layer potentials

/// Values at the nodes of a target-refined rule: density u with its X and
/// Xbar derivatives, and the kernel jet of eps(., z) in the source variable.
struct BoundarySamples {
  SurfaceQuadrature quad;
  std::vector<Complex> u;
  std::vector<Complex> double_layer;  // <nabla^{a,b}_xi eps(xi, z), dnu> per node
  std::vector<Complex> single_layer;  // eps(xi, z) <nabla^{b,a} u, dnu> per node
};

/// Density u together with first derivatives at a point.
struct DensityValues {
  Complex value;
  Complex x;
  Complex xbar;
};

DensityValues density_values(const ScalarField& u, const GroupPoint& p, const FdConfig& fd);

/// A boundary density u with its X and Xbar derivatives at surface nodes.
/// Direct mode evaluates u at every node. Interpolated mode samples u and its
/// derivatives once on a Gauss-Legendre x periodic chart grid and interpolates
/// barycentrically; use it for expensive densities that are smooth on the
/// surface (Newton potentials with interior support).
class SurfaceDensity {
 public:
  static SurfaceDensity direct(ScalarField u, const FdConfig& fd = {});
  static SurfaceDensity interpolated(const ScalarField& u, const Surface& surface,
                                     const SurfaceResolution& res = {32, 64},
                                     const FdConfig& fd = {});

  DensityValues at(const SurfaceNode& node) const;
  /// u at an arbitrary point (direct) or surface point (interpolated).
  DensityValues at(const GroupPoint& p) const;
  /// Surface the interpolant was built on; empty for direct densities.
  const std::string& surface_id() const { return surface_id_; }

 private:
  ScalarField u_;
  FdConfig fd_;
  std::string surface_id_;
  std::shared_ptr<const Surface> surface_;
  std::vector<double> s1_nodes_, s1_weights_;
  int m2_ = 0;
  std::vector<DensityValues> grid_;  // row-major in (s1, s2)
};

/// Evaluates everything the boundary formulas need at the nodes of a rule
/// targeted at z with the given excision radii.
BoundarySamples sample_boundary(const KernelParams& params, const SurfaceDensity& u,
                                const Surface& surface, const GroupPoint& z,
                                std::span<const double> cuts, const LayerConfig& cfg);

/// W0 u(z): excised flux integrals of u(xi) nabla^{a,b} eps(xi, z) over the
/// delta schedule.
PvReport double_layer_pv(const KernelParams& params, const SurfaceDensity& u,
                         const Surface& surface, const GroupPoint& z, const PvConfig& pv = {},
                         const LayerConfig& cfg = {});
PvReport double_layer_pv(const KernelParams& params, const ScalarField& u, const Surface& surface,
                         const GroupPoint& z, const PvConfig& pv = {},
                         const LayerConfig& cfg = {});

/// Throws NumericalError("pv-not-converged") listing the level values.
void require_converged(const PvReport& report);

/// W+ (Inside) or W- (Outside) at a surface point by normal approach.
LimitReport double_layer_limit(const KernelParams& params, const SurfaceDensity& u,
                               const Surface& surface, const GroupPoint& z, Side side,
                               const LimitConfig& lim = {}, const LayerConfig& cfg = {});
LimitReport double_layer_limit(const KernelParams& params, const ScalarField& u,
                               const Surface& surface, const GroupPoint& z, Side side,
                               const LimitConfig& lim = {}, const LayerConfig& cfg = {});

/// Unexcised double layer at a point off the surface.
Complex double_layer(const KernelParams& params, const SurfaceDensity& u, const Surface& surface,
                     const GroupPoint& z, const LayerConfig& cfg = {});
Complex double_layer(const KernelParams& params, const ScalarField& u, const Surface& surface,
                     const GroupPoint& z, const LayerConfig& cfg = {});

/// W0 u(z), H.R.(z) and the single-layer term at a surface point from one set
/// of samples. The single layer is weakly singular there; it is evaluated
/// on the same excision schedule and extrapolated like the principal value,
/// which removes the O(delta) contribution of the excised ball.
struct BoundaryTerms {
  PvReport double_layer;  // W0 u(z)
  PvReport half_residue;  // W0 1(z)
  PvReport single_layer;  // int eps <nabla^{b,a} u, dnu>
};

BoundaryTerms boundary_terms(const KernelParams& params, const SurfaceDensity& u,
                             const Surface& surface, const GroupPoint& z, const PvConfig& pv = {},
                             const LayerConfig& cfg = {});

/// int eps(xi, z) <nabla^{b,a} u(xi), dnu(xi)> over the surface. Points on the
/// surface use the extrapolated excision of boundary_terms.
Complex single_layer_flux(const KernelParams& params, const SurfaceDensity& u,
                          const Surface& surface, const GroupPoint& z,
                          const LayerConfig& cfg = {});
Complex single_layer_flux(const KernelParams& params, const ScalarField& u,
                          const Surface& surface, const GroupPoint& z,
                          const LayerConfig& cfg = {});

/// H.R.(z) = W0 1(z); memoized per (surface, z, params, schedule, resolution).
PvReport half_residue(const KernelParams& params, const Surface& surface, const GroupPoint& z,
                      const PvConfig& pv = {}, const LayerConfig& cfg = {});

struct JumpReport {
  Complex w_plus, w_minus, w_zero, half_residue, c_ab, u_z;
  Complex residual1;  // (W+ - W-) - c u(z)
  Complex residual2;  // (W0 - W-) - H.R. u(z)
  Complex residual3;  // (W+ - W0) - (c - H.R.) u(z)
  PvReport pv;
  LimitReport plus, minus;
};

JumpReport jump_relations_report(const KernelParams& params, const SurfaceDensity& u,
                                 const Surface& surface, const GroupPoint& z,
                                 const PvConfig& pv = {}, const LimitConfig& lim = {},
                                 const LayerConfig& cfg = {});
JumpReport jump_relations_report(const KernelParams& params, const ScalarField& u,
                                 const Surface& surface, const GroupPoint& z,
                                 const PvConfig& pv = {}, const LimitConfig& lim = {},
                                 const LayerConfig& cfg = {});

// ---------------------------------------------------------------------------
// Newton potentials

/// Near-field treatment for points inside the mesh. Patch evaluates f on a
/// polar patch around z. Subtraction uses f only at mesh nodes plus its
/// first-order jet at z; use it when f is expensive to evaluate.
enum class NearField { Patch, Subtraction };

/// u(z) = int f(xi) eps(xi, z) dnu(xi) over a mesh containing supp f, with
/// exact X and Xbar derivatives from the kernel jet. f is cached at the mesh
/// nodes.
class NewtonPotential {
 public:
  NewtonPotential(KernelParams params, ScalarField f, std::shared_ptr<const DomainMesh> mesh,
                  VolumeOptions opts = {}, NearField near = NearField::Patch,
                  FdConfig fd = {});

  /// Value, X u and Xbar u at z.
  KernelJet jet(const GroupPoint& z) const;
  Complex operator()(const GroupPoint& z) const { return jet(z).value; }
  /// u as a scalar field with analytic X, Xbar derivatives (memoized).
  ScalarField field() const;

  const DomainMesh& mesh() const { return *mesh_; }
  const KernelParams& params() const { return params_; }

 private:
  KernelParams params_;
  ScalarField f_;
  std::shared_ptr<const DomainMesh> mesh_;
  VolumeOptions opts_;
  NearField near_;
  FdConfig fd_;
  std::vector<Complex> f_nodes_;
};

/// One-shot Newton potential with a two-resolution error estimate.
QuadratureResult newton_potential(const KernelParams& params, const ScalarField& f,
                                  const DomainMesh& mesh, const GroupPoint& z,
                                  const VolumeOptions& opts = {});

/// u_m = int f eps_m evaluated by Fubini: u_1 = N[f] over the support mesh and
/// u_k = (1/c) int_Omega u_{k-1}(zeta) eps(zeta, z) dnu(zeta) over the domain
/// mesh, with u_{k-1} cached at the domain nodes. level(k) is box^k u_m = u_{m-k}.
class GeneralizedNewtonPotential {
 public:
  GeneralizedNewtonPotential(int m, KernelParams params, ScalarField f,
                             std::shared_ptr<const DomainMesh> support_mesh,
                             std::shared_ptr<const DomainMesh> domain_mesh,
                             VolumeOptions opts = {}, NearField first_stage = NearField::Patch,
                             FdConfig fd = {},
                             std::optional<VolumeOptions> first_opts = std::nullopt);

  int m() const { return m_; }
  /// Jet of box^k u_m = u_{m-k} at z, 0 <= k < m.
  KernelJet jet(int k, const GroupPoint& z) const;
  /// box^k u_m as a field with analytic X, Xbar derivatives.
  ScalarField level(int k) const;
  /// {u_m, box u_m, ..., box^{m-1} u_m}.
  std::vector<ScalarField> tower() const;

 private:
  KernelJet jet_order(int order, const GroupPoint& z) const;  // u_order

  int m_;
  KernelParams params_;
  std::shared_ptr<const DomainMesh> domain_;
  VolumeOptions opts_;
  std::shared_ptr<NewtonPotential> first_;
  std::vector<std::vector<Complex>> node_values_;  // u_k at domain nodes, k = 1..m-1
};

/// int f(xi) eps_m(xi, z) dnu(xi) directly, with eps_m from the iterated
/// kernel (expensive; for cross-checks on coarse meshes).
QuadratureResult generalized_newton_potential(int m, const KernelParams& params,
                                              const ScalarField& f, const DomainMesh& mesh,
                                              const IteratedKernel& kernel, const GroupPoint& z,
                                              const VolumeOptions& opts = {});

}  // namespace hpot

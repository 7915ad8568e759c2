// Boundary surfaces and volume meshes in H_1, surface and volume quadrature,
// the pairing <V, dnu> as an interior product, and characteristic points.
#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hpot/group.hpp"

namespace hpot {

using Vec3 = std::array<double, 3>;

Vec3 cross(const Vec3& u, const Vec3& v);
double dot(const Vec3& u, const Vec3& v);
double norm(const Vec3& u);

enum class SurfaceKind { GaugeSphere, EuclideanSphere, FlatDisc };

std::string to_string(SurfaceKind kind);

/// Chart image of (s1, s2) with its two coordinate tangent vectors.
struct ChartSample {
  GroupPoint point;
  Vec3 d1{};
  Vec3 d2{};
};

struct ChartParam {
  double s1 = 0.0;
  double s2 = 0.0;
};

/// Parameterized surface in H_1. s1 in [0, s1_max], s2 periodic in [0, 2 pi).
///
/// Gauge sphere |c^{-1} p| = R, left-translated by c:
///   zeta = R sin(s1) e^{i s2},  t = R^2 cos(s1) sqrt(1 + sin^2 s1).
/// Euclidean sphere: standard spherical chart, coordinate-translated by c.
/// Flat disc {t = t_c, |zeta - zeta_c| <= R}: polar chart with s1 the radius.
/// For closed surfaces d1 x d2 points outward.
class Surface {
 public:
  static Surface make(SurfaceKind kind, double radius, const GroupPoint& center = {});

  SurfaceKind kind() const { return kind_; }
  double radius() const { return radius_; }
  const GroupPoint& center() const { return center_; }
  /// Characteristic gauge radius.
  double scale() const { return radius_; }
  bool closed() const { return kind_ != SurfaceKind::FlatDisc; }
  double s1_max() const;

  ChartSample chart(double s1, double s2) const;
  GroupPoint point(double s1, double s2) const { return chart(s1, s2).point; }

  /// Defining function: negative inside, zero on the surface, positive outside.
  double level(const GroupPoint& p) const;
  /// Coordinate gradient of level(); nonzero on the surface, poles included.
  Vec3 level_gradient(const GroupPoint& p) const;
  /// Unit outward Euclidean normal at a surface point.
  Vec3 unit_normal(const GroupPoint& p) const;

  /// Chart-degenerate parameters (the tangents are dependent there).
  std::vector<ChartParam> degenerate_params() const;

  /// Chart parameters of a surface point (inverse of chart).
  ChartParam params_of(const GroupPoint& p) const;

  std::string describe() const;

 private:
  SurfaceKind kind_ = SurfaceKind::GaugeSphere;
  double radius_ = 1.0;
  GroupPoint center_{};
};

struct SurfaceResolution {
  int m1 = 32;  // Gauss-Legendre nodes in s1
  int m2 = 64;  // trapezoid nodes in s2

  SurfaceResolution refined() const { return {2 * m1, 2 * m2}; }
  SurfaceResolution coarsened() const { return {m1 / 2, m2 / 2}; }
};

struct SurfaceNode {
  GroupPoint point;
  ChartParam param;
  Vec3 t1{};
  Vec3 t2{};
  double weight = 0.0;
  /// Gauge distance to the quadrature's target point (infinity when untargeted).
  double target_distance = 0.0;
};

struct SurfaceQuadrature {
  std::vector<SurfaceNode> nodes;
};

/// Excision of the gauge ball {xi : |z^{-1} xi| < delta}.
struct Exclusion {
  GroupPoint z;
  double delta = 0.0;
};

/// Refinement controls for target-aware panel quadrature.
struct TargetOptions {
  int panel_order = 6;          // Gauss-Legendre points per panel side
  double eta = 2.0;             // panel gauge extent / distance to target
  double min_extent = 2e-3;     // stop refining below this gauge extent (relative to scale)
  double cut_ratio = 0.5;       // panel extent / excision radius near a cut
  int max_depth = 14;
};

/// Tensor Gauss-Legendre (s1) x trapezoid (s2) rule. With an exclusion, nodes
/// inside the excised ball get weight 0 and the cut is resolved by panel
/// subdivision. Throws std::invalid_argument for m1, m2 < 8 or an
/// unresolvable delta.
SurfaceQuadrature surface_quadrature(const Surface& surface, const SurfaceResolution& res,
                                     const std::optional<Exclusion>& exclusion = std::nullopt);

/// Panel rule graded toward `target` and resolving each excision radius in
/// `cuts` exactly along chart lines. Every node records its gauge distance to
/// the target so one pass yields all excision levels.
SurfaceQuadrature targeted_quadrature(const Surface& surface, const SurfaceResolution& res,
                                      const GroupPoint& target, std::span<const double> cuts = {},
                                      const TargetOptions& opts = {});

/// Smallest excision radius the targeted rule can resolve.
double min_resolvable_delta(const Surface& surface, const TargetOptions& opts = {});

/// Scalar integrand of iota_V dnu pulled back to the chart at a node.
struct TwoFormSample {
  Complex value;
};

/// det [V | t1 | t2], i.e. (iota_V dx^dy^dt)(t1, t2). V has three coordinate
/// components. Throws std::domain_error on degenerate tangents.
TwoFormSample interior_product_pullback(const CoordVector& v, const SurfaceNode& node);

struct QuadratureResult {
  Complex value;
  double error_estimate = 0.0;
};

using VectorField = std::function<CoordVector(const GroupPoint&)>;

/// sum_nodes weight * <V, dnu>; error estimate from the coarsened resolution.
QuadratureResult integrate_flux(const VectorField& v, const Surface& surface,
                                const SurfaceResolution& res,
                                const std::optional<Exclusion>& exclusion = std::nullopt);

/// sum over nodes with target_distance >= min_distance of weight * integrand.
/// integrand_values is indexed like quad.nodes.
Complex sum_over(const SurfaceQuadrature& quad, std::span<const Complex> integrand_values,
                 double min_distance = 0.0);

// ---------------------------------------------------------------------------
// Volume meshes

enum class DomainKind { GaugeBall, EuclideanBall };

std::string to_string(DomainKind kind);

struct VolumeResolution {
  int radial = 16;
  int m1 = 16;
  int m2 = 32;

  VolumeResolution refined() const { return {2 * radial, 2 * m1, 2 * m2}; }
  VolumeResolution coarsened() const { return {radial / 2, m1 / 2, m2 / 2}; }
};

struct VolumeNode {
  GroupPoint point;
  double weight = 0.0;
};

/// Quadrature for a ball-shaped domain. Gauge balls are polar-layered
/// (dilated unit-gauge-sphere nodes, radial weight r^3); Euclidean balls use a
/// spherical tensor rule. A half-resolution node set is kept for error
/// estimates.
class DomainMesh {
 public:
  DomainMesh(DomainKind kind, double radius, const GroupPoint& center, const VolumeResolution& res);

  DomainKind kind() const { return kind_; }
  double radius() const { return radius_; }
  const GroupPoint& center() const { return center_; }
  const VolumeResolution& resolution() const { return res_; }
  std::uint64_t id() const { return id_; }

  const std::vector<VolumeNode>& nodes() const { return nodes_; }
  const std::vector<VolumeNode>& coarse_nodes() const { return coarse_; }

  /// Negative inside, positive outside.
  double level(const GroupPoint& p) const;
  bool contains(const GroupPoint& p) const { return level(p) <= 0.0; }
  /// Lower bound on the gauge radius of a ball around p that stays inside
  /// (negative when p is outside).
  double clearance(const GroupPoint& p) const;
  /// Lower bound on the gauge distance from p to the domain (0 inside).
  double exterior_distance(const GroupPoint& p) const;
  /// Typical node spacing in gauge units.
  double spacing() const;
  double exact_volume() const;
  Surface boundary() const;

 private:
  DomainKind kind_;
  double radius_;
  GroupPoint center_;
  VolumeResolution res_;
  std::uint64_t id_;
  std::vector<VolumeNode> nodes_;
  std::vector<VolumeNode> coarse_;
};

/// Throws std::invalid_argument for radius <= 0 or res below (8, 8, 16).
std::shared_ptr<const DomainMesh> build_volume_mesh(DomainKind kind, double radius,
                                                    const GroupPoint& center,
                                                    const VolumeResolution& res);

/// Near-field controls for singular volume integrals.
struct VolumeOptions {
  double rho = 0.0;  // patch gauge radius; 0 selects twice the domain radius
  // Patch rule sizes; 0 follows the mesh resolution.
  int patch_radial = 0;
  int patch_m1 = 0;
  int patch_m2 = 0;
  bool estimate_error = true;
  // When false, only singular points inside the domain get a patch. Suitable
  // for densities that vanish to high order at the domain boundary.
  bool exterior_patches = true;
};

/// Polar patch around p: nodes p * dilate(r, omega) with weight r^3 dr dsigma,
/// clipped to the domain, times the partition-of-unity factor.
struct PatchNode {
  GroupPoint point;
  double weight = 0.0;  // includes the cutoff factor
};

/// Cutoff chi(s): 1 at s = 0, 0 for s >= 1, flat at both ends.
double patch_cutoff(double s);

/// Options with zero patch sizes replaced by the mesh resolution.
VolumeOptions resolved(const VolumeOptions& opts, const DomainMesh& mesh);

/// Nodes of the near-field patch of radius rho around p.
std::vector<PatchNode> patch_nodes(const DomainMesh& mesh, const GroupPoint& p, double rho,
                                   const VolumeOptions& opts);

/// Integral of f over the domain. f may blow up like gauge-distance^{-3} at
/// each singular point. Several singular points share the near field through
/// a relative partition of unity s_i (weights |p_i^{-1} x|^{-8}).
/// Far field: mesh nodes weighted by 1 - sum s_i chi_i;
/// near field: polar patches clipped to the domain. A singular point outside
/// the domain but within rho of it still gets a (clipped) patch.
QuadratureResult integrate_volume(const ScalarField& f, const DomainMesh& mesh,
                                  std::span<const GroupPoint> singular = {},
                                  const VolumeOptions& opts = {});

/// integrate_volume for a three-component integrand (no error estimate).
std::array<Complex, 3> integrate_volume3(const std::function<std::array<Complex, 3>(const GroupPoint&)>& f,
                                         const DomainMesh& mesh,
                                         std::span<const GroupPoint> singular = {},
                                         const VolumeOptions& opts = {});

/// Resolved patch radius; throws std::domain_error for coincident points.
double patch_radius(const DomainMesh& mesh, std::span<const GroupPoint> singular,
                    const VolumeOptions& opts);

/// First-order jet of a density at a point: g(p), Xtilde g(p), Ytilde g(p).
struct DensityJet {
  Complex value;
  Complex xtilde;
  Complex ytilde;
};

/// Kernel with up to three components (value and two derivatives) at a point.
using KernelTriple = std::array<Complex, 3>;
using TripleKernel = std::function<KernelTriple(const GroupPoint&)>;

/// Singularity subtraction for a density known only at mesh nodes:
///   sum_w [g - chi_p (g(p) + L)] K + int chi_p (g(p) + L) K,
/// where L is the horizontal linear Taylor term of g at p. The second term
/// uses a polar patch and only kernel evaluations.
std::array<Complex, 3> subtracted_volume_sum(const DomainMesh& mesh,
                                             std::span<const Complex> node_density,
                                             const GroupPoint& p, const DensityJet& jet,
                                             const TripleKernel& kernel,
                                             const VolumeOptions& opts = {});

// ---------------------------------------------------------------------------
// Characteristic points

/// max(|Xtilde . n|, |Ytilde . n|) for the unit outward normal n; zero exactly
/// where the horizontal plane is tangent to the surface.
double characteristic_measure(const Surface& surface, const ChartParam& param);

/// Chart parameters where characteristic_measure < tol, located on a grid and
/// refined by local minimization; duplicates (same point) are merged.
std::vector<ChartParam> find_characteristic_points(const Surface& surface,
                                                   const SurfaceResolution& res, double tol);

/// CSV dumps: s1,s2,x,y,t,weight and node,x,y,t,weight.
void write_surface_csv(std::ostream& os, const SurfaceQuadrature& quad);
void write_mesh_csv(std::ostream& os, const DomainMesh& mesh);

}  // namespace hpot

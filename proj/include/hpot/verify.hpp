// End-to-end checks: group and kernel identities, the Gauss identity, jump
// relations, the boundary conditions for Newton potentials of order 1 and m,
// the representation formula, and manufactured-solution round trips.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hpot/potentials.hpp"

namespace hpot {

/// One residual compared against tolerance * normalization.
struct ResidualReport {
  std::string check_id;
  GroupPoint probe;
  Complex residual;
  double normalization = 1.0;
  double error_estimate = 0.0;
  double tolerance = 0.0;

  bool pass() const;
  double relative() const { return std::abs(residual) / normalization; }
};

/// Residual magnitudes over a refinement schedule. order is log2 of the ratio
/// of consecutive residuals (NaN in the first row).
struct ConvergenceRow {
  double resolution = 0.0;
  double residual = 0.0;
  double order = 0.0;
};

struct ConvergenceTable {
  std::string check_id;
  std::vector<ConvergenceRow> rows;
  std::string diagnostic;

  void add(double resolution, double residual);
  bool strictly_decreasing() const;
  double final_residual() const;
};

// ---------------------------------------------------------------------------
// Test data

/// u(p) = amplitude * exp(1 - 1 / (1 - q^2)) for q = |p - center| / radius < 1
/// (Euclidean distance in coordinates), 0 otherwise.
struct Bump {
  GroupPoint center{};
  double radius = 0.5;
  double amplitude = 1.0;

  Complex value(const GroupPoint& p) const;
  /// The bump with analytic X and Xbar derivatives.
  ScalarField field() const;
  /// Mesh of the support, used for Newton potentials of functions supported there.
  std::shared_ptr<const DomainMesh> support_mesh(const VolumeResolution& res) const;
};

/// Eight interior probes inside the bump support on a fixed pattern.
std::vector<GroupPoint> interior_probes(const Bump& bump);

/// Boundary probes on the band |s1 - pi/2| <= 0.35 of a closed surface, drawn
/// from a fixed seed and kept away from characteristic points.
std::vector<GroupPoint> boundary_probes(const Surface& surface, int count = 16,
                                        std::uint64_t seed = 20240611);

// ---------------------------------------------------------------------------
// Group and kernel checks

/// Largest of |(pq)r - p(qr)|, |p p^{-1}|, over random triples.
double group_law_defect(int samples, std::uint64_t seed);

/// Max over fields V and random points/translations of |V(f o L_g)(p) - (V f)(gp)|
/// for a smooth test function, at FD step h.
double left_invariance_defect(double h, int samples, std::uint64_t seed);

/// |[X, Xbar] f + 2i T f| at a point for a smooth test function, FD step h.
double commutator_defect(double h, const GroupPoint& p);

/// |X f - (Xtilde f - i Ytilde f) / 2| at a point, FD step h.
double frame_defect(double h, const GroupPoint& p);

/// Max relative error of eps(dilate(lambda, z)) = lambda^{-2} eps(z).
double homogeneity_defect(const KernelParams& params, int samples, std::uint64_t seed);

/// Max |box eps| over points of the unit gauge sphere at FD step h.
double annihilation_defect(const KernelParams& params, double h, int points);

/// Gauss identity: c_ab_numeric at z for the surface.
ResidualReport gauss_identity(const KernelParams& params, const Surface& surface,
                              const GroupPoint& z, bool inside, const SurfaceResolution& res,
                              double tol);

// ---------------------------------------------------------------------------
// Potential-theory checks

/// (c - H.R.(z)) u(z) + W0 u(z) - single layer, against |c| u_scale.
ResidualReport bc_residual_first(const KernelParams& params, const SurfaceDensity& u,
                                 const Surface& surface, const GroupPoint& z, double u_scale,
                                 const PvConfig& pv = {}, const LayerConfig& cfg = {},
                                 double tol = 0.05);

/// c u(z) - [c int f eps + W u(z) - S u(z)] at an interior z, against |c| u_scale.
ResidualReport representation_residual(const KernelParams& params, const ScalarField& u,
                                       const ScalarField& f, const DomainMesh& mesh,
                                       const Surface& surface, const GroupPoint& z,
                                       double u_scale, const LayerConfig& cfg = {},
                                       const VolumeOptions& vopts = {}, double tol = 0.02);

/// W u(z) - S u(z) at an interior z for a Newton potential u, against |c| u_scale.
ResidualReport interior_identity_residual(const KernelParams& params, const SurfaceDensity& u,
                                          const Surface& surface, const GroupPoint& z,
                                          double u_scale, const LayerConfig& cfg = {},
                                          double tol = 0.02);

/// Settings for the iterated-kernel boundary terms.
struct HigherConfig {
  PvConfig pv{};
  LayerConfig layer{};
  /// Rule for the terms with eps_k, k >= 2 (weakly singular kernels).
  SurfaceResolution kernel_res{8, 16};
  TargetOptions kernel_target{3, 4.0, 2e-3, 4.0, 14};
};

/// Boundary condition i of the order-m problem at z:
///   (c - H.R.) box^i u(z)
///   + sum_{j < m - i} [excised flux of box^{j+i} u against nabla^{a,b} eps_{j+1}]
///   - sum_{j < m - i} [int eps_{j+1} <nabla^{b,a} box^{j+i} u, dnu>].
/// tower[k] = box^k u on the surface for k = 0..m-1.
ResidualReport bc_residual_higher(const KernelParams& params, int m, int i,
                                  const std::vector<SurfaceDensity>& tower,
                                  const IteratedKernel& kernel, const Surface& surface,
                                  const GroupPoint& z, double u_scale,
                                  const HigherConfig& cfg = {}, double tol = 0.1);

/// Relative error of box_z eps_2(xi, .) against eps(xi, .) at z.
ResidualReport iterated_kernel_residual(const IteratedKernel& kernel, const GroupPoint& xi,
                                        const GroupPoint& z, const FdConfig& fd, double tol);

// ---------------------------------------------------------------------------
// Round trips

/// Support and domain meshes of one m = 2 refinement level.
struct TwoStageLevel {
  VolumeResolution support;
  VolumeResolution domain;
};

struct RoundtripSpec {
  Bump bump{};
  /// Domain for m >= 2; a gauge ball around the bump center.
  double domain_radius = 1.0;
  /// Support meshes for m = 1.
  std::vector<VolumeResolution> levels{{8, 8, 16}, {12, 12, 24}, {16, 16, 32}};
  /// Meshes for m = 2. box^2 of the bump is steep near the support edge, so the
  /// support meshes are fine in the radial direction.
  std::vector<TwoStageLevel> levels_m2{{{32, 16, 32}, {16, 8, 16}},
                                       {{48, 16, 32}, {24, 8, 16}},
                                       {{64, 16, 32}, {32, 8, 16}}};
  FdConfig fd_m1{1e-3};
  FdConfig fd_m2{2e-3};
};

/// Rebuilds u_bump from f = box^m u_bump / c by the (generalized) Newton
/// potential and tabulates the max error over interior_probes relative to the
/// amplitude (absolute for a zero bump).
ConvergenceTable bump_roundtrip(int m, const KernelParams& params, const RoundtripSpec& spec);

}  // namespace hpot

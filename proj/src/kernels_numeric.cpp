// Numeric c_{a,b} and the iterated kernels; these need the geometry module.
#include <cmath>
#include <stdexcept>

#include "hpot/geometry.hpp"
#include "hpot/kernels.hpp"
#include "hpot/quadrature.hpp"

namespace hpot {

namespace {
// nabla^{a,b} of xi -> eps(xi^{-1} z) at xi.
CoordVector source_gradient(const KernelParams& params, const GroupPoint& xi, const GroupPoint& z) {
  const KernelJet j = eps_reflected_jet(params, group_mul(group_inv(z), xi));
  return nabla_ab_from(params.a, params.b, xi, {j.x}, {j.xbar});
}
}  // namespace

CabNumeric c_ab_numeric(const KernelParams& params, const Surface& surface,
                        const GroupPoint& z_inside, const SurfaceResolution& res) {
  if (params.n != 2) throw std::invalid_argument("numeric c_ab is implemented for n = 2");
  const QuadratureResult r = integrate_flux(
      [&](const GroupPoint& xi) { return source_gradient(params, xi, z_inside); }, surface, res);
  return {r.value, r.error_estimate};
}

CabNumeric c_ab_reference(const KernelParams& params) {
  return c_ab_numeric(params, Surface::make(SurfaceKind::GaugeSphere, 1.0), GroupPoint{},
                      SurfaceResolution{48, 96});
}

// ---------------------------------------------------------------------------

IteratedKernel::IteratedKernel(int m, KernelParams params, std::shared_ptr<const DomainMesh> mesh)
    : m_(m), params_(std::move(params)), mesh_(std::move(mesh)) {
  if (m < 1) throw std::invalid_argument("iterated kernel order must be at least 1");
  if (m >= 2 && !mesh_) throw std::invalid_argument("iterated kernel needs a domain mesh");
  if (m >= 2) params_.c();  // throws when c_ab is unknown
}

std::size_t IteratedKernel::cache_size() const {
  std::lock_guard lock(mutex_);
  return cache_.size();
}

const std::vector<Complex>& IteratedKernel::node_values(int k, const GroupPoint& xi) const {
  const auto key = std::make_tuple(k, xi.x(), xi.y(), xi.t());
  {
    std::lock_guard lock(mutex_);
    auto it = cache_.find(key);
    if (it != cache_.end()) return *it->second;
  }
  // Computed outside the lock; concurrent fills produce identical vectors and
  // the first one published wins.
  const auto& nodes = mesh_->nodes();
  auto values = std::make_shared<std::vector<Complex>>(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i].point.x() == xi.x() && nodes[i].point.y() == xi.y() && nodes[i].point.t() == xi.t())
      (*values)[i] = 0.0;
    else
      (*values)[i] = eval(k, xi, nodes[i].point);
  }
  std::lock_guard lock(mutex_);
  auto [it, inserted] = cache_.emplace(key, std::move(values));
  return *it->second;
}

Complex IteratedKernel::eval(int k, const GroupPoint& xi, const GroupPoint& z) const {
  if (k < 1 || k > m_) throw std::out_of_range("iterated kernel index out of range");
  if (k == 1) return eps_pair(params_, xi, z);
  const Complex inv_c = 1.0 / params_.c();
  VolumeOptions opts;
  opts.estimate_error = false;
  if (k == 2) {
    const GroupPoint pts[] = {xi, z};
    const QuadratureResult r = integrate_volume(
        ScalarField{[&](const GroupPoint& zeta) {
          return eps_pair(params_, xi, zeta) * eps_pair(params_, zeta, z);
        }, {}},
        *mesh_, pts, opts);
    return inv_c * r.value;
  }
  // k >= 3: eps_{k-1}(xi, .) is bounded, so only z needs treatment; a
  // zeroth-order subtraction with cached node values.
  const std::vector<Complex>& g = node_values(k - 1, xi);
  const DensityJet jet{eval(k - 1, xi, z), 0.0, 0.0};
  const auto sums = subtracted_volume_sum(
      *mesh_, g, z, jet,
      [&](const GroupPoint& zeta) {
        const Complex e = zeta.x() == z.x() && zeta.y() == z.y() && zeta.t() == z.t()
                              ? Complex(0.0)
                              : eps_pair(params_, zeta, z);
        return KernelTriple{e, 0.0, 0.0};
      },
      opts);
  return inv_c * sums[0];
}

KernelJet IteratedKernel::eval_source_jet(int k, const GroupPoint& xi, const GroupPoint& z) const {
  if (k < 1 || k > m_) throw std::out_of_range("iterated kernel index out of range");
  if (k == 1) return eps_reflected_jet(params_, group_mul(group_inv(z), xi));
  if (k != 2) throw std::invalid_argument("source jets are implemented for k <= 2");
  const Complex inv_c = 1.0 / params_.c();
  VolumeOptions opts;
  opts.estimate_error = false;
  const GroupPoint pts[] = {xi, z};
  const auto r = integrate_volume3(
      [&](const GroupPoint& zeta) {
        const KernelJet j = eps_reflected_jet(params_, group_mul(group_inv(zeta), xi));
        const Complex e = eps_pair(params_, zeta, z);
        return std::array<Complex, 3>{j.value * e, j.x * e, j.xbar * e};
      },
      *mesh_, pts, opts);
  return {inv_c * r[0], inv_c * r[1], inv_c * r[2]};
}

Complex eps_m_eval(const IteratedKernel& kernel, const GroupPoint& xi, const GroupPoint& z) {
  return kernel.eval(kernel.m(), xi, z);
}

}  // namespace hpot

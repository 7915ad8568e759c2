// The fundamental solution of box_{a,b}, principal-branch complex powers,
// the normalizing constant c_{a,b}, and the iterated kernels eps_m.
#pragma once

#include <complex>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "hpot/group.hpp"

namespace hpot {

class Surface;
class DomainMesh;
struct SurfaceResolution;

/// (n, a, b) with a + b = n - 1, plus the constant c_{a,b} once known.
struct KernelParams {
  int n = 2;
  double a = 0.5;
  double b = 0.5;
  Complex c_ab{0.0, 0.0};
  bool c_known = false;

  /// Validates the triple; throws std::invalid_argument naming the violated rule.
  static KernelParams make(int n, double a, double b);
  KernelParams with_c(Complex c) const;
  /// Throws if c_ab has not been filled in.
  Complex c() const;
  /// (b, a) with the same n and no constant.
  KernelParams swapped() const;
  bool symmetric() const { return a == b; }
};

/// True when x is one of -1, -2, ... or n, n+1, ...
bool in_excluded_set(double x, int n);

/// Which side of the negative real axis a point on the cut is taken from.
enum class BranchSide { Principal, Upper, Lower };

/// exp(s (ln|w| + i Arg w)), Arg in (-pi, pi]. On the negative real axis
/// Upper (and Principal) use Arg = pi, Lower uses Arg = -pi.
Complex complex_pow_principal(Complex w, double s, BranchSide side = BranchSide::Principal);

/// 1 / ((t + i|zeta|^2)^a (t - i|zeta|^2)^b), the first factor taken from the
/// upper side of the cut and the second from the lower side.
Complex eps(const KernelParams& params, const GroupPoint& z);

/// eps(xi^{-1} z).
Complex eps_pair(const KernelParams& params, const GroupPoint& xi, const GroupPoint& z);

/// eps and its first left-invariant derivatives at a point of H_1.
struct KernelJet {
  Complex value;
  Complex x;     // X_1
  Complex xbar;  // Xbar_1
};

/// Jet of w -> eps(w) at w = xi^{-1} z; these are the derivatives in z.
KernelJet eps_jet(const KernelParams& params, const GroupPoint& w);
/// Jet of w -> eps(w^{-1}) at w = z^{-1} xi; these are the derivatives in xi.
KernelJet eps_reflected_jet(const KernelParams& params, const GroupPoint& w);

/// xi -> eps(xi, z), with exact X_j, Xbar_j and T derivatives.
ScalarField eps_source_field(const KernelParams& params, const GroupPoint& z);
/// z -> eps(xi, z), with exact X_j, Xbar_j and T derivatives.
ScalarField eps_target_field(const KernelParams& params, const GroupPoint& xi);

/// Interpretation of the unit-ball volume in the closed-form constant.
enum class UnitBallConvention { GaugeBall, EuclideanBall, EuclideanSphereArea };

double unit_ball_volume(UnitBallConvention conv, int n);
std::string to_string(UnitBallConvention conv);

struct CabFormula {
  Complex value;
  double unit_ball_volume;
  std::string note;  // always flags the result as interpretation-dependent
};

/// Closed-form c_{a,b} for non-integer a with the given unit-ball volume.
CabFormula c_ab_formula(const KernelParams& params, double unit_ball_volume);
CabFormula c_ab_formula(const KernelParams& params, UnitBallConvention conv);

/// Unit-ball volume making |c_ab_formula| equal to |c_numeric|.
double calibrate_unit_ball_volume(const KernelParams& params, Complex c_numeric);

struct CabNumeric {
  Complex value;
  double error_estimate;
};

/// Flux of nabla^{a,b} eps(., z) over a closed surface, z strictly inside.
CabNumeric c_ab_numeric(const KernelParams& params, const Surface& surface,
                        const GroupPoint& z_inside, const SurfaceResolution& res);

/// c_ab_numeric over the unit gauge sphere at the reference resolution.
CabNumeric c_ab_reference(const KernelParams& params);

/// eps_m over a domain mesh. Node values of eps_{m-1}(xi, .) are memoized per
/// xi for m >= 3.
class IteratedKernel {
 public:
  IteratedKernel(int m, KernelParams params, std::shared_ptr<const DomainMesh> mesh);

  int m() const { return m_; }
  const KernelParams& params() const { return params_; }
  const DomainMesh& mesh() const { return *mesh_; }
  std::shared_ptr<const DomainMesh> mesh_ptr() const { return mesh_; }

  /// eps_k(xi, z) for 1 <= k <= m.
  Complex eval(int k, const GroupPoint& xi, const GroupPoint& z) const;

  /// eps_k(xi, z) together with its X and Xbar derivatives in xi (H_1 only).
  KernelJet eval_source_jet(int k, const GroupPoint& xi, const GroupPoint& z) const;

  std::size_t cache_size() const;

 private:
  const std::vector<Complex>& node_values(int k, const GroupPoint& xi) const;

  int m_;
  KernelParams params_;
  std::shared_ptr<const DomainMesh> mesh_;
  mutable std::mutex mutex_;
  mutable std::map<std::tuple<int, double, double, double>,
                   std::shared_ptr<const std::vector<Complex>>>
      cache_;
};

/// eps_m(xi, z); m = 1 is eps_pair. For m >= 2 the convolution over the
/// kernel's domain carries a factor 1/c_{a,b}.
Complex eps_m_eval(const IteratedKernel& kernel, const GroupPoint& xi, const GroupPoint& z);

}  // namespace hpot

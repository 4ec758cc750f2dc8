#pragma once

// Torus Green function G (Delta G = delta_0 - 1, mean zero) and the
// Biot-Savart kernel K = grad^perp G = (d2 G, -d1 G).

#include <array>
#include <utility>
#include <vector>

#include "wnlab/geometry.hpp"
#include "wnlab/spectrum.hpp"

namespace wnlab {

struct EwaldParams {
  /// Screening exponent: real-space terms decay like exp(-alpha r^2), spectral
  /// terms like exp(-pi^2 |n|^2 / alpha).
  double alpha = kPi;
  int image_radius = 3;
  int spectral_cutoff = 2;
  double target_accuracy = 1e-10;
};

struct KernelSelfTest {
  int points = 0;
  double max_error_G = 0.0;
  double max_error_K = 0.0;
};

/// Immutable after construction. The constructor compares G and K against the
/// row-resummed slow sums at 16 pseudo-random points and throws
/// std::runtime_error if the target accuracy is missed.
class KernelEvaluator {
 public:
  explicit KernelEvaluator(EwaldParams params = {});

  const EwaldParams& params() const { return params_; }
  const KernelSelfTest& self_test() const { return self_test_; }

  /// Throws SingularityError at x = 0 (mod 1).
  double G(const Vec2& x) const;
  /// Returns exactly (0, 0) at x = 0 (mod 1).
  Vec2 K(const Vec2& x) const;
  /// Gradient of G; K(x) = perp-rotation of it, i.e. (dG/dx2, -dG/dx1).
  Vec2 grad_G(const Vec2& x) const;

  /// 1/2 sup_z |z| |K(z)| over the fundamental cell, estimated on a dense
  /// grid at construction. Bounds |H_phi| by constant * ||D^2 phi||_inf.
  double singularity_constant() const { return singularity_constant_; }

 private:
  EwaldParams params_;
  KernelSelfTest self_test_;
  double singularity_constant_ = 0.0;
  static constexpr int kMaxWidth = 33;
  std::array<double, kMaxWidth> image_decay_{};
  std::vector<double> spectral_weight_;
};

/// Direct spectral sums, summed exactly along one axis and truncated at
/// |n| <= rows along the other. Independent of the Ewald route; slow.
double slow_green_G(const Vec2& x, int rows = 512);
Vec2 slow_biot_savart_K(const Vec2& x, int rows = 512);

/// Radial C-infinity plateau bump: 1 on [0, r/2], 0 on [r, inf), monotone.
struct CutoffProfile {
  double radius = 1.0;
  double operator()(double rho) const;
};

/// K(x) (1 - theta(|x| / eps)), exactly 0 at x = 0.
Vec2 cutoff_K_eps(const KernelEvaluator& kernel, const Vec2& x, double eps, const CutoffProfile& profile = {});

/// 1/2 K_eps(x - y) . (grad phi(x) - grad phi(y)). eps = 0 selects K itself.
double h_phi(const KernelEvaluator& kernel, const Vec2& x, const Vec2& y, const TrigPoly& phi, double eps,
             const CutoffProfile& profile = {});

struct DistanceQuadrature {
  int gauss_order = 24;
  int panels = 8;
  int angles = 256;
};

/// sqrt of the double integral of (H_phi^{eps_n} - H_phi^{eps_m})^2 over
/// T^2 x T^2, reduced to a polar integral in the difference variable.
double h_l2_distance(const KernelEvaluator& kernel, const TrigPoly& phi, double eps_n, double eps_m,
                     const CutoffProfile& profile = {}, const DistanceQuadrature& quad = {});

/// Fourier coefficients of K_{eps_a} - K_{eps_b} for |q|_inf <= cutoff (one
/// field per component). The difference is supported in |z| < max(eps) r, so
/// the coefficients come from a polar quadrature sized to resolve the phase
/// 2 pi q.z over that disc. Odd and real, hence purely imaginary.
std::array<FourierField, 2> cutoff_difference_spectrum(const KernelEvaluator& kernel, double eps_a, double eps_b,
                                                       int cutoff, const CutoffProfile& profile = {});

/// Spectral Biot-Savart: u^(n) = (-i n2, i n1) omega^(n) / (2 pi |n|^2), u^(0) = 0.
std::pair<FourierField, FourierField> velocity_from_vorticity(const FourierField& omega);

}  // namespace wnlab

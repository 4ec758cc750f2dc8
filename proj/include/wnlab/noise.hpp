#pragma once

// Spectral white noise, mollified (colored) noise and exact Wick-pairing
// moments of quadratic functionals.

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "wnlab/spectrum.hpp"

namespace wnlab {

struct NoiseSpec {
  int cutoff = 1;
  std::uint64_t seed = 0;
};

/// Real white-noise field truncated at |n|_inf <= cutoff: omega^(0) ~ N(0,1),
/// omega^(n) = (a + i b)/sqrt(2) on the half lattice, conjugate-mirrored.
FourierField sample_white_noise(const NoiseSpec& spec);
/// Member `index` of an ensemble drawn under `master`.
FourierField sample_white_noise(int cutoff, std::uint64_t master, std::uint64_t index);

/// Radial bump exp(-1 / (1 - |x/r0|^2)) on |x| < r0 = 0.25, normalized to unit
/// mass. Unit scale; Mollifier rescales it.
double bump_density(double rho);
/// 2D Fourier transform of bump_density at frequency magnitude k (real,
/// radial). Tabulated once per process and interpolated.
double bump_transform(double k);
inline constexpr double kBumpRadius = 0.25;

class Mollifier {
 public:
  explicit Mollifier(double eps);

  double eps() const { return eps_; }
  double support_radius() const { return eps_ * kBumpRadius; }

  /// theta_eps at x on the torus (minimal image). Requires support radius < 1/2.
  double density(const Vec2& x) const;
  /// theta_eps^(n) = theta^(eps |n|).
  double hat(const Mode& n) const;
  /// Cutoff beyond which theta_eps^(n)^2 < 1e-16.
  int spectral_reach() const;

 private:
  double eps_;
};

/// Multiplies each coefficient by theta_eps^(n).
FourierField mollify(const FourierField& field, const Mollifier& m);

/// delta^eps(a) = (theta_eps * theta_eps)(a) = sum_n theta_eps^(n)^2 e^{2 pi i n.a}.
/// cutoff = 0 selects spectral_reach().
double delta_eps(const Mollifier& m, const Vec2& a, int cutoff = 0);
/// delta^eps sampled on the R x R grid (modes folded modulo R, one inverse FFT).
GridField delta_eps_grid(const Mollifier& m, int resolution);

/// f(x, y) = sum_r left_r(x) conv_r(x - y) right_r(y). An empty left or right
/// factor means 1; a term with both empty is translation invariant.
struct KernelTerm {
  std::function<double(const Vec2&)> left;
  std::function<double(const Vec2&)> conv;
  std::function<double(const Vec2&)> right;
};

struct QuadraticKernel {
  std::vector<KernelTerm> terms;
  double operator()(const Vec2& x, const Vec2& y) const;

  static QuadraticKernel translation_invariant(std::function<double(const Vec2&)> k);
  /// phi(x) phi(y)
  static QuadraticKernel separable(const TrigPoly& phi);
};

/// Grid samples and transforms of a QuadraticKernel at one resolution. Throws
/// std::invalid_argument on non-finite kernel samples.
class PreparedKernel {
 public:
  PreparedKernel(const QuadraticKernel& kernel, int resolution);
  int resolution() const { return resolution_; }

  struct Term {
    std::vector<double> left, right;  // empty means 1
    std::vector<cplx> conv_hat;       // R x (R/2+1), scaled by 1/R^2
  };
  const std::vector<Term>& terms() const { return terms_; }

 private:
  int resolution_;
  std::vector<Term> terms_;
};

/// R^-4 sum_{x, y on grid} omega(x) omega(y) f(x, y), computed from one
/// synthesis plus FFT convolutions (translation-invariant terms reduce to a
/// mode sum). Requires R >= 2M + 2.
double quadratic_functional(const FourierField& field, const PreparedKernel& kernel);
double quadratic_functional(const FourierField& field, const QuadraticKernel& kernel, int resolution);

/// <omega (x) omega, k(x - y)> = sum_n |omega^(n)|^2 Re k^(n) for a real
/// translation-invariant kernel given by its coefficients. Exact.
double spectral_quadratic_functional(const FourierField& field, const std::function<cplx(const Mode&)>& k_hat);

/// Pair partitions of the 2p legs of p quadratic factors, reduced to cycles.
/// Each cycle lists, per factor visited, whether it is traversed x -> y (true,
/// matrix F) or y -> x (false, F transposed).
using PairingCycles = std::vector<std::vector<bool>>;
std::vector<PairingCycles> pairing_cycles(int p);

/// E[<omega_eps (x) omega_eps, f>^p] for p <= 3 by Wick pairing, with the
/// integrals done on an R x R grid (dense R^2 x R^2 matrices, so R <= 32).
/// Without a mollifier the covariance is the grid Dirac mass (exact white
/// noise: pairings collapse onto diagonals).
double wick_moment_oracle(const std::optional<Mollifier>& m, const std::function<double(const Vec2&, const Vec2&)>& f,
                          int p, int resolution = 16);

/// Same for a translation-invariant kernel with Fourier coefficients k_hat and
/// noise truncated at |n|_inf <= cutoff: each cycle contributes
/// sum_n prod k^(+-n) c(n)^len with c = theta_eps^2 (or 1).
double wick_moment_oracle_diagonal(const std::optional<Mollifier>& m, const std::function<cplx(const Mode&)>& k_hat,
                                   int cutoff, int p);

}  // namespace wnlab

#pragma once

// Fourier-space utilities on the unit torus T^2 = [0,1)^2 with the basis
// e_n(x) = exp(2 pi i n.x).

#include <complex>
#include <algorithm>
#include <cstdint>
#include <map>
#include <vector>

#include <json.hpp>

#include "wnlab/geometry.hpp"

namespace wnlab {

using cplx = std::complex<double>;

struct Mode {
  int n1 = 0;
  int n2 = 0;

  constexpr long norm2() const { return static_cast<long>(n1) * n1 + static_cast<long>(n2) * n2; }
  constexpr int sup_norm() const { return std::max(n1 < 0 ? -n1 : n1, n2 < 0 ? -n2 : n2); }
  constexpr Mode operator-() const { return {-n1, -n2}; }
  friend constexpr bool operator==(const Mode&, const Mode&) = default;
  friend constexpr auto operator<=>(const Mode&, const Mode&) = default;
};

/// True for the representative half-lattice: n1 > 0, or n1 == 0 and n2 > 0.
constexpr bool in_half_lattice(const Mode& n) { return n.n1 > 0 || (n.n1 == 0 && n.n2 > 0); }

/// Mode-truncated field: coefficients for |n|_inf <= cutoff, zero outside.
/// When the realness flag is set, the coefficient at -n is kept equal to the
/// conjugate of the coefficient at n.
class FourierField {
 public:
  FourierField() = default;
  FourierField(int cutoff, bool real);

  int cutoff() const { return cutoff_; }
  bool is_real() const { return real_; }
  int side() const { return 2 * cutoff_ + 1; }

  cplx operator()(const Mode& n) const {
    if (n.sup_norm() > cutoff_) return {};
    return coeffs_[index(n)];
  }

  /// Sets the coefficient at n (and its mirror for real fields).  Rejects
  /// non-finite values and modes outside the cutoff; for real fields the zero
  /// mode must be real.
  void set(const Mode& n, cplx value);

  /// Unchecked write for hot loops; the caller keeps the realness invariant.
  void set_raw(const Mode& n, cplx value) { coeffs_[index(n)] = value; }

  /// Same coefficients at a larger (or equal) cutoff.
  FourierField embedded(int cutoff) const;
  /// Drop modes above the given cutoff.
  FourierField truncated(int cutoff) const;

  template <typename Fn>
  void for_each(Fn&& fn) const {
    for (int a = -cutoff_; a <= cutoff_; ++a)
      for (int b = -cutoff_; b <= cutoff_; ++b) fn(Mode{a, b}, coeffs_[index({a, b})]);
  }

  FourierField& operator+=(const FourierField& other);
  FourierField& operator-=(const FourierField& other);
  FourierField& operator*=(double s);

  std::size_t index(const Mode& n) const {
    return static_cast<std::size_t>(n.n1 + cutoff_) * static_cast<std::size_t>(side()) +
           static_cast<std::size_t>(n.n2 + cutoff_);
  }

  const std::vector<cplx>& data() const { return coeffs_; }

 private:
  int cutoff_ = 0;
  bool real_ = true;
  std::vector<cplx> coeffs_ = std::vector<cplx>(1);
};

FourierField operator+(FourierField a, const FourierField& b);
FourierField operator-(FourierField a, const FourierField& b);
FourierField operator*(double s, FourierField a);

/// Dirac mass at x0 truncated at the given cutoff: coefficients exp(-2 pi i n.x0).
FourierField dirac_mass(const Vec2& x0, int cutoff);

/// Real trigonometric polynomial. Stored with both n and -n; Hermitian symmetry
/// is enforced on construction so evaluation is always real.
class TrigPoly {
 public:
  TrigPoly() = default;
  /// Build from raw coefficients. Throws if the map is not Hermitian.
  explicit TrigPoly(std::map<Mode, cplx> coefficients);

  static TrigPoly constant(double c);
  /// amp * cos(2 pi n.x)
  static TrigPoly cosine(Mode n, double amp = 1.0);
  /// amp * sin(2 pi n.x)
  static TrigPoly sine(Mode n, double amp = 1.0);
  /// Shifted copy x -> phi(x - a).
  TrigPoly shifted(const Vec2& a) const;

  TrigPoly operator+(const TrigPoly& other) const;
  TrigPoly operator*(double s) const;

  const std::map<Mode, cplx>& coefficients() const { return coeffs_; }
  cplx coefficient(const Mode& n) const;
  int degree() const;

  double value(const Vec2& x) const;
  Vec2 gradient(const Vec2& x) const;
  Mat2 hessian(const Vec2& x) const;

  /// L^2(T^2) inner product.
  double l2_inner(const TrigPoly& other) const;
  double l2_norm_squared() const { return l2_inner(*this); }
  /// Upper bound on sup_x of the spectral norm of the Hessian:
  /// sum |c_n| 4 pi^2 |n|^2.
  double hessian_sup_bound() const;
  /// Spectral representation at the given cutoff (must contain all modes).
  FourierField as_field(int cutoff) const;

 private:
  std::map<Mode, cplx> coeffs_;
};

/// <omega, phi> = integral of omega * phi, i.e. sum_n omega^(n) phi^(-n).
double pair(const FourierField& omega, const TrigPoly& phi);

/// ||f||_{H^s} = sqrt( sum (1 + |n|^2)^s |f^(n)|^2 ).
double sobolev_norm(const FourierField& field, double s);

/// sum_{k=1}^{terms} 2^{-k} min(||a - b||_{H^{-1-1/k}}, 1). Fields of different
/// cutoffs are compared after embedding the smaller one.
double h_minus_metric(const FourierField& a, const FourierField& b, int terms = 20);

/// Multiplier (1 + |n|^2)^{-(1+eps)/2}.
FourierField bessel_smooth(const FourierField& field, double eps);

/// Real samples on an R x R grid at x_jk = (j/R, k/R). R is a power of two.
class GridField {
 public:
  GridField(int resolution, std::vector<double> values);
  explicit GridField(int resolution);

  int resolution() const { return resolution_; }
  double operator()(int j, int k) const { return values_[idx(j, k)]; }
  double& operator()(int j, int k) { return values_[idx(j, k)]; }
  const std::vector<double>& values() const { return values_; }
  std::vector<double>& values() { return values_; }

 private:
  std::size_t idx(int j, int k) const {
    return static_cast<std::size_t>(j) * static_cast<std::size_t>(resolution_) + static_cast<std::size_t>(k);
  }
  int resolution_;
  std::vector<double> values_;
};

bool is_power_of_two(int r);

/// Grid synthesis of a real field. Requires R >= 2M + 2 and R a power of two.
GridField synthesize(const FourierField& field, int resolution);
/// Inverse of synthesize: DFT of grid samples restricted to |n|_inf <= cutoff.
FourierField analyze(const GridField& grid, int cutoff);

nlohmann::json to_json(const FourierField& field);
FourierField field_from_json(const nlohmann::json& j);

}  // namespace wnlab

#pragma once

#include <vector>

namespace wnlab {

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// n-point Gauss-Legendre rule on [a, b].
QuadratureRule gauss_legendre(int n, double a = -1.0, double b = 1.0);

/// Composite Gauss-Legendre: `panels` equal panels of `order` points each.
QuadratureRule composite_gauss_legendre(int order, int panels, double a, double b);

/// Composite Simpson on equally spaced samples (odd count); falls back to the
/// trapezoid rule on the last interval when the count is even.
double simpson(const std::vector<double>& f, double h);

/// Running integrals I_k = integral from t_0 to t_k: Simpson over pairs of
/// intervals, with the odd tail interval closed by the three-point rule
/// h/12 (-f_{k-2} + 8 f_{k-1} + 5 f_k). Same order as Simpson throughout.
std::vector<double> cumulative_simpson(const std::vector<double>& f, double h);

/// Gauss-Hermite rule for the standard normal weight (probabilists').
QuadratureRule gauss_hermite_normal(int n);

}  // namespace wnlab

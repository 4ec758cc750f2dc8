#include "wnlab/quadrature.hpp"

#include <cmath>
#include <algorithm>
#include <stdexcept>

#include "wnlab/geometry.hpp"

namespace wnlab {

QuadratureRule gauss_legendre(int n, double a, double b) {
  if (n < 1) throw std::invalid_argument("gauss_legendre: n must be positive");
  QuadratureRule q{std::vector<double>(n), std::vector<double>(n)};
  const double mid = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(kPi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) p0 = 1.0;
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    double p0 = 1.0, p1 = x;
    for (int k = 2; k <= n; ++k) {
      const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    dp = n == 1 ? 1.0 : n * (x * p1 - p0) / (x * x - 1.0);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    q.nodes[i] = mid - half * x;
    q.nodes[n - 1 - i] = mid + half * x;
    q.weights[i] = q.weights[n - 1 - i] = half * w;
  }
  return q;
}

QuadratureRule composite_gauss_legendre(int order, int panels, double a, double b) {
  if (panels < 1) throw std::invalid_argument("composite_gauss_legendre: panels must be positive");
  QuadratureRule q;
  const double h = (b - a) / panels;
  for (int p = 0; p < panels; ++p) {
    const QuadratureRule g = gauss_legendre(order, a + p * h, a + (p + 1) * h);
    q.nodes.insert(q.nodes.end(), g.nodes.begin(), g.nodes.end());
    q.weights.insert(q.weights.end(), g.weights.begin(), g.weights.end());
  }
  return q;
}

double simpson(const std::vector<double>& f, double h) {
  const std::size_t n = f.size();
  if (n < 2) return 0.0;
  std::size_t last = (n % 2 == 1) ? n - 1 : n - 2;
  double s = 0.0;
  for (std::size_t i = 0; i + 2 <= last; i += 2) s += f[i] + 4.0 * f[i + 1] + f[i + 2];
  s *= h / 3.0;
  if (last != n - 1) s += 0.5 * h * (f[n - 2] + f[n - 1]);
  return s;
}

std::vector<double> cumulative_simpson(const std::vector<double>& f, double h) {
  std::vector<double> out(f.size(), 0.0);
  if (f.size() < 2) return out;
  if (f.size() == 2) {
    out[1] = 0.5 * h * (f[0] + f[1]);
    return out;
  }
  // the first interval gets the mirrored three-point rule
  out[1] = h / 12.0 * (5.0 * f[0] + 8.0 * f[1] - f[2]);
  for (std::size_t k = 2; k < f.size(); ++k) {
    if (k % 2 == 0)
      out[k] = out[k - 2] + h / 3.0 * (f[k - 2] + 4.0 * f[k - 1] + f[k]);
    else
      out[k] = out[k - 1] + h / 12.0 * (-f[k - 2] + 8.0 * f[k - 1] + 5.0 * f[k]);
  }
  return out;
}

QuadratureRule gauss_hermite_normal(int n) {
  // Golub-Welsch would need an eigen-solver; Newton on He_n with the
  // three-term recurrence is enough for the small n used here.
  if (n < 1) throw std::invalid_argument("gauss_hermite_normal: n must be positive");
  QuadratureRule q{std::vector<double>(n), std::vector<double>(n)};
  auto eval = [n](double x, double& p, double& pm1) {
    double a = 1.0, b = x;
    if (n == 1) { p = x; pm1 = 1.0; return; }
    for (int k = 2; k <= n; ++k) {
      const double c = x * b - (k - 1) * a;
      a = b;
      b = c;
    }
    p = b;
    pm1 = a;
  };
  // Initial guesses from the physicists' asymptotics, scaled by sqrt(2).
  std::vector<double> roots;
  for (int i = 0; i < n; ++i) {
    double x = std::sqrt(2.0) * std::sqrt(2.0 * n + 1.0) * std::cos(kPi * (4.0 * i + 3.0) / (4.0 * n + 2.0));
    for (int it = 0; it < 200; ++it) {
      double p, pm1;
      eval(x, p, pm1);
      const double dp = n * pm1;  // He_n' = n He_{n-1}
      // deflate against found roots
      double corr = 0.0;
      for (double r : roots) corr += 1.0 / (x - r);
      const double dx = p / (dp - p * corr);
      x -= dx;
      if (std::abs(dx) < 1e-15 * std::max(1.0, std::abs(x))) break;
    }
    roots.push_back(x);
  }
  std::sort(roots.begin(), roots.end());
  double fact = 1.0;  // (n-1)! / n  accumulated in log-free form for small n
  for (int k = 1; k <= n; ++k) fact *= k;
  for (int i = 0; i < n; ++i) {
    double p, pm1;
    eval(roots[i], p, pm1);
    q.nodes[i] = roots[i];
    q.weights[i] = fact / (static_cast<double>(n) * n * pm1 * pm1);
  }
  return q;
}

}  // namespace wnlab

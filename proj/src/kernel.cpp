#include "wnlab/kernel.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "wnlab/quadrature.hpp"

namespace wnlab {

namespace {

double exp_integral_e1(double t) { return -std::expint(-t); }

double axis_distance(double v) {
  const double w = wrap_unit(v);
  return std::min(w, 1.0 - w);
}

struct SlowTerms {
  double g = 0.0;
  double d_outer = 0.0;
  double d_inner = 0.0;
};

// Sum over the inner index in closed form for every outer index |c| <= rows.
SlowTerms slow_rows(double outer, double inner, int rows) {
  const double y = wrap_unit(inner);
  double g = 2.0 * kPi * kPi * (y * y - y + 1.0 / 6.0);
  double dv = 2.0 * kPi * kPi * (2.0 * y - 1.0);
  double du = 0.0;
  for (int c = 1; c <= rows; ++c) {
    const double q = std::exp(-kTwoPi * c);
    const double a = std::exp(-kTwoPi * c * y);
    const double b = std::exp(-kTwoPi * c * (1.0 - y));
    if (a + b < 1e-300) break;
    const double s = (kPi / c) * (a + b) / (1.0 - q);
    const double ds = 2.0 * kPi * kPi * (b - a) / (1.0 - q);
    const double cu = std::cos(kTwoPi * c * outer);
    const double su = std::sin(kTwoPi * c * outer);
    g += 2.0 * cu * s;
    dv += 2.0 * cu * ds;
    du += c * su * s;
  }
  const double w = -1.0 / (4.0 * kPi * kPi);
  return {w * g, du / kPi, w * dv};
}

SlowTerms slow_sum(const Vec2& x, int rows, bool& swapped) {
  swapped = axis_distance(x.x) > axis_distance(x.y);
  return swapped ? slow_rows(x.y, x.x, rows) : slow_rows(x.x, x.y, rows);
}

// C-infinity step: 0 for t <= 0, 1 for t >= 1.
double smooth_step(double t) {
  if (t <= 0.0) return 0.0;
  if (t >= 1.0) return 1.0;
  const double f0 = std::exp(-1.0 / t);
  const double f1 = std::exp(-1.0 / (1.0 - t));
  return f0 / (f0 + f1);
}

}  // namespace

double slow_green_G(const Vec2& x, int rows) {
  if (axis_distance(x.x) == 0.0 && axis_distance(x.y) == 0.0) throw SingularityError("slow_green_G: x = 0");
  bool swapped = false;
  return slow_sum(x, rows, swapped).g;
}

Vec2 slow_biot_savart_K(const Vec2& x, int rows) {
  if (axis_distance(x.x) == 0.0 && axis_distance(x.y) == 0.0) return {};
  bool swapped = false;
  const SlowTerms t = slow_sum(x, rows, swapped);
  const double d1 = swapped ? t.d_inner : t.d_outer;
  const double d2 = swapped ? t.d_outer : t.d_inner;
  return {d2, -d1};
}

// ---------------------------------------------------------------------------

KernelEvaluator::KernelEvaluator(EwaldParams params) : params_(params) {
  if (!(params_.alpha > 0.0) || params_.image_radius < 0 || params_.spectral_cutoff < 0 ||
      !(params_.target_accuracy > 0.0))
    throw std::invalid_argument("EwaldParams: alpha, radii and target accuracy must be positive");

  if (2 * params_.image_radius + 1 > kMaxWidth || 2 * params_.spectral_cutoff + 1 > kMaxWidth)
    throw std::invalid_argument("EwaldParams: truncation radius too large");
  for (int m = 0; m <= params_.image_radius; ++m) image_decay_[m] = std::exp(-params_.alpha * m * m);
  const int s = params_.spectral_cutoff;
  spectral_weight_.assign(static_cast<std::size_t>((s + 1) * (2 * s + 1)), 0.0);
  for (int n1 = 0; n1 <= s; ++n1)
    for (int n2 = -s; n2 <= s; ++n2) {
      if (!in_half_lattice({n1, n2})) continue;
      const double nn = static_cast<double>(n1 * n1 + n2 * n2);
      spectral_weight_[static_cast<std::size_t>(n1 * (2 * s + 1) + n2 + s)] = 2.0 * std::exp(-kPi * kPi * nn / params_.alpha) / nn;
    }

  std::mt19937_64 rng(0x5eed0fe3a1dULL);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  self_test_.points = 16;
  for (int i = 0; i < self_test_.points; ++i) {
    const Vec2 x{u(rng), u(rng)};
    self_test_.max_error_G = std::max(self_test_.max_error_G, std::abs(G(x) - slow_green_G(x)));
    const Vec2 k = K(x);
    const Vec2 ks = slow_biot_savart_K(x);
    self_test_.max_error_K = std::max({self_test_.max_error_K, std::abs(k.x - ks.x), std::abs(k.y - ks.y)});
  }
  if (self_test_.max_error_G > params_.target_accuracy || self_test_.max_error_K > params_.target_accuracy)
    throw std::runtime_error("KernelEvaluator: Ewald self-test missed target accuracy (G error " +
                             std::to_string(self_test_.max_error_G) + ", K error " +
                             std::to_string(self_test_.max_error_K) + ")");

  const int grid = 256;
  for (int j = 0; j < grid; ++j)
    for (int k = 0; k < grid; ++k) {
      const Vec2 z{(j + 0.5) / grid - 0.5, (k + 0.5) / grid - 0.5};
      singularity_constant_ = std::max(singularity_constant_, 0.5 * norm(z) * norm(K(z)));
    }
  // the free-space limit 1/(2 pi) is approached but not sampled at z -> 0
  singularity_constant_ = std::max(singularity_constant_, 0.5 / kTwoPi) * (1.0 + 1e-3);
}

double KernelEvaluator::G(const Vec2& x) const {
  const Vec2 r = min_image(x);
  if (r.x == 0.0 && r.y == 0.0) throw SingularityError("green_G: evaluation at the singular point x = 0");
  const double a = params_.alpha;
  const int ri = params_.image_radius;
  double images = 0.0;
  for (int m1 = -ri; m1 <= ri; ++m1)
    for (int m2 = -ri; m2 <= ri; ++m2) {
      const double dx = r.x + m1;
      const double dy = r.y + m2;
      const double t = a * (dx * dx + dy * dy);
      if (t > 700.0) continue;
      images += exp_integral_e1(t);
    }
  const int s = params_.spectral_cutoff;
  double spectral = 0.0;
  for (int n1 = 0; n1 <= s; ++n1)
    for (int n2 = -s; n2 <= s; ++n2) {
      if (!in_half_lattice({n1, n2})) continue;
      const double nn = static_cast<double>(n1 * n1 + n2 * n2);
      spectral += 2.0 * std::exp(-kPi * kPi * nn / a) * std::cos(kTwoPi * (n1 * r.x + n2 * r.y)) / nn;
    }
  return 1.0 / (4.0 * a) - images / (4.0 * kPi) - spectral / (4.0 * kPi * kPi);
}

Vec2 KernelEvaluator::grad_G(const Vec2& x) const {
  const Vec2 r = min_image(x);
  if (r.x == 0.0 && r.y == 0.0) return {};
  const double a = params_.alpha;
  const int ri = params_.image_radius;
  // exp(-a (x+m)^2) = exp(-a x^2) * exp(-2 a x)^m * exp(-a m^2), built by recurrence
  std::array<double, kMaxWidth> ex{}, ey{};
  {
    const double bx = std::exp(-a * r.x * r.x), by = std::exp(-a * r.y * r.y);
    const double sx = std::exp(-2.0 * a * r.x), sy = std::exp(-2.0 * a * r.y);
    double px = 1.0, py = 1.0, qx = 1.0, qy = 1.0;
    ex[ri] = bx;
    ey[ri] = by;
    for (int m = 1; m <= ri; ++m) {
      px *= sx;
      py *= sy;
      qx /= sx;
      qy /= sy;
      ex[ri + m] = bx * px * image_decay_[m];
      ey[ri + m] = by * py * image_decay_[m];
      ex[ri - m] = bx * qx * image_decay_[m];
      ey[ri - m] = by * qy * image_decay_[m];
    }
  }
  double gx = 0.0, gy = 0.0;
  for (int m1 = -ri; m1 <= ri; ++m1) {
    const double dx = r.x + m1;
    const double e1 = ex[m1 + ri];
    if (e1 < 1e-300) continue;
    for (int m2 = -ri; m2 <= ri; ++m2) {
      const double e = e1 * ey[m2 + ri];
      if (e < 1e-300) continue;
      const double dy = r.y + m2;
      const double w = e / (dx * dx + dy * dy);
      gx += w * dx;
      gy += w * dy;
    }
  }

  const int s = params_.spectral_cutoff;
  std::array<double, kMaxWidth> c2{}, s2{};
  const double cx = std::cos(kTwoPi * r.x), snx = std::sin(kTwoPi * r.x);
  const double cy = std::cos(kTwoPi * r.y), sny = std::sin(kTwoPi * r.y);
  c2[s] = 1.0;
  for (int n = 1; n <= s; ++n) {
    c2[s + n] = c2[s + n - 1] * cy - s2[s + n - 1] * sny;
    s2[s + n] = s2[s + n - 1] * cy + c2[s + n - 1] * sny;
    c2[s - n] = c2[s + n];
    s2[s - n] = -s2[s + n];
  }
  double sx = 0.0, sy = 0.0;
  double c1 = 1.0, s1 = 0.0;
  for (int n1 = 0; n1 <= s; ++n1) {
    const double* wrow = spectral_weight_.data() + static_cast<std::size_t>(n1 * (2 * s + 1) + s);
    for (int n2 = n1 == 0 ? 1 : -s; n2 <= s; ++n2) {
      // Im(e^{2 pi i n1 x1} e^{2 pi i n2 x2})
      const double w = wrow[n2] * (s1 * c2[s + n2] + c1 * s2[s + n2]);
      sx += w * n1;
      sy += w * n2;
    }
    const double c = c1 * cx - s1 * snx;
    s1 = s1 * cx + c1 * snx;
    c1 = c;
  }
  return {(gx + sx) / kTwoPi, (gy + sy) / kTwoPi};
}

Vec2 KernelEvaluator::K(const Vec2& x) const {
  const Vec2 g = grad_G(x);
  return {g.y, -g.x};
}

// ---------------------------------------------------------------------------

double CutoffProfile::operator()(double rho) const {
  if (rho <= 0.5 * radius) return 1.0;
  if (rho >= radius) return 0.0;
  return smooth_step((radius - rho) / (0.5 * radius));
}

Vec2 cutoff_K_eps(const KernelEvaluator& kernel, const Vec2& x, double eps, const CutoffProfile& profile) {
  if (!(eps > 0.0)) throw std::invalid_argument("cutoff_K_eps: eps must be positive");
  const Vec2 r = min_image(x);
  const double rho = norm(r);
  const double cut = 1.0 - profile(rho / eps);
  if (cut == 0.0) return {};
  return cut * kernel.K(r);
}

double h_phi(const KernelEvaluator& kernel, const Vec2& x, const Vec2& y, const TrigPoly& phi, double eps,
             const CutoffProfile& profile) {
  if (eps < 0.0) throw std::invalid_argument("h_phi: eps must be non-negative");
  const Vec2 k = eps == 0.0 ? kernel.K(x - y) : cutoff_K_eps(kernel, x - y, eps, profile);
  if (k.x == 0.0 && k.y == 0.0) return 0.0;
  return 0.5 * dot(k, phi.gradient(x) - phi.gradient(y));
}

double h_l2_distance(const KernelEvaluator& kernel, const TrigPoly& phi, double eps_n, double eps_m,
                     const CutoffProfile& profile, const DistanceQuadrature& quad) {
  if (eps_n < 0.0 || eps_m < 0.0) throw std::invalid_argument("h_l2_distance: eps must be non-negative");
  if (eps_n == eps_m) return 0.0;
  const double r = profile.radius;
  const double outer = std::max(eps_n, eps_m) * r;
  if (outer > 0.5) throw std::invalid_argument("h_l2_distance: cutoff support exceeds the fundamental cell");

  std::vector<double> breaks{0.0};
  for (double e : {eps_n, eps_m})
    if (e > 0.0) {
      breaks.push_back(0.5 * e * r);
      breaks.push_back(e * r);
    }
  std::sort(breaks.begin(), breaks.end());
  breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());

  auto theta = [&](double rho, double e) { return e == 0.0 ? 0.0 : profile(rho / e); };

  // A_cd(z) = sum_p 4 pi^2 p_c p_d |phi^(p)|^2 2 (1 - cos 2 pi p.z)
  struct Term {
    double p1, p2, w;
  };
  std::vector<Term> terms;
  for (const auto& [p, c] : phi.coefficients()) {
    if (p == Mode{0, 0}) continue;
    terms.push_back({static_cast<double>(p.n1), static_cast<double>(p.n2), 8.0 * kPi * kPi * std::norm(c)});
  }

  std::vector<double> cs(quad.angles), sn(quad.angles);
  for (int a = 0; a < quad.angles; ++a) {
    cs[a] = std::cos(kTwoPi * a / quad.angles);
    sn[a] = std::sin(kTwoPi * a / quad.angles);
  }

  double total = 0.0;
  for (std::size_t b = 0; b + 1 < breaks.size(); ++b) {
    const QuadratureRule q = composite_gauss_legendre(quad.gauss_order, quad.panels, breaks[b], breaks[b + 1]);
    for (std::size_t i = 0; i < q.nodes.size(); ++i) {
      const double rho = q.nodes[i];
      const double dtheta = theta(rho, eps_m) - theta(rho, eps_n);
      if (dtheta == 0.0) continue;
      double ring = 0.0;
      for (int a = 0; a < quad.angles; ++a) {
        const Vec2 z{rho * cs[a], rho * sn[a]};
        const Vec2 dk = dtheta * kernel.K(z);
        double form = 0.0;
        for (const Term& t : terms) {
          const double proj = t.p1 * dk.x + t.p2 * dk.y;
          form += t.w * proj * proj * (1.0 - std::cos(kTwoPi * (t.p1 * z.x + t.p2 * z.y)));
        }
        ring += form;
      }
      total += q.weights[i] * rho * ring * (kTwoPi / quad.angles);
    }
  }
  return std::sqrt(0.25 * total);
}

std::array<FourierField, 2> cutoff_difference_spectrum(const KernelEvaluator& kernel, double eps_a, double eps_b,
                                                       int cutoff, const CutoffProfile& profile) {
  if (!(eps_a > 0.0) || !(eps_b > 0.0)) throw std::invalid_argument("cutoff_difference_spectrum: eps must be positive");
  if (cutoff < 0) throw std::invalid_argument("cutoff_difference_spectrum: negative cutoff");
  std::array<FourierField, 2> out{FourierField(cutoff, true), FourierField(cutoff, true)};
  if (eps_a == eps_b) return out;
  const double r = profile.radius;
  const double outer = std::max(eps_a, eps_b) * r;
  if (outer > 0.5) throw std::invalid_argument("cutoff_difference_spectrum: cutoff support exceeds the fundamental cell");

  // largest phase 2 pi |q| |z| over the support
  const double phase = kTwoPi * std::sqrt(2.0) * cutoff * outer;
  const int order = 16;
  // only half of the angles: Delta K is odd, so the sine transform doubles
  int angles = 2 * static_cast<int>(std::ceil(0.5 * (phase + 48.0)));
  angles += angles % 2;
  const int half = angles / 2;

  std::vector<double> breaks{0.5 * std::min(eps_a, eps_b) * r};
  for (double e : {eps_a, eps_b}) {
    breaks.push_back(0.5 * e * r);
    breaks.push_back(e * r);
  }
  std::sort(breaks.begin(), breaks.end());
  breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());

  const int side = 2 * cutoff + 1;
  // S_c(q) = integral of Delta K_c(z) sin(2 pi q.z), for q1 >= 0
  std::vector<double> s1((cutoff + 1) * side, 0.0), s2((cutoff + 1) * side, 0.0);
  std::vector<double> c_a(cutoff + 1), s_a(cutoff + 1), c_b(side), s_b(side);

  for (std::size_t b = 0; b + 1 < breaks.size(); ++b) {
    const double len = breaks[b + 1] - breaks[b];
    const int panels = 1 + static_cast<int>(std::ceil(phase * len / outer / 3.0));
    const QuadratureRule q = composite_gauss_legendre(order, panels, breaks[b], breaks[b + 1]);
    for (std::size_t i = 0; i < q.nodes.size(); ++i) {
      const double rho = q.nodes[i];
      const double dtheta = profile(rho / eps_b) - profile(rho / eps_a);
      if (dtheta == 0.0) continue;
      for (int a = 0; a < half; ++a) {
        const double ang = kPi * (a + 0.5) / half;
        const Vec2 z{rho * std::cos(ang), rho * std::sin(ang)};
        const double w = 2.0 * q.weights[i] * rho * (kPi / half);
        const Vec2 dk = (w * dtheta) * kernel.K(z);
        for (int k = 0; k <= cutoff; ++k) {
          c_a[k] = std::cos(kTwoPi * k * z.x);
          s_a[k] = std::sin(kTwoPi * k * z.x);
        }
        for (int k = -cutoff; k <= cutoff; ++k) {
          c_b[k + cutoff] = std::cos(kTwoPi * k * z.y);
          s_b[k + cutoff] = std::sin(kTwoPi * k * z.y);
        }
        for (int k1 = 0; k1 <= cutoff; ++k1) {
          const double ca = c_a[k1], sa = s_a[k1];
          double* row1 = &s1[k1 * side];
          double* row2 = &s2[k1 * side];
          for (int k2 = 0; k2 < side; ++k2) {
            const double sn = sa * c_b[k2] + ca * s_b[k2];
            row1[k2] += dk.x * sn;
            row2[k2] += dk.y * sn;
          }
        }
      }
    }
  }
  for (int k1 = 0; k1 <= cutoff; ++k1)
    for (int k2 = -cutoff; k2 <= cutoff; ++k2) {
      const Mode n{k1, k2};
      if (!in_half_lattice(n)) continue;
      out[0].set(n, cplx{0.0, -s1[k1 * side + k2 + cutoff]});
      out[1].set(n, cplx{0.0, -s2[k1 * side + k2 + cutoff]});
    }
  return out;
}

std::pair<FourierField, FourierField> velocity_from_vorticity(const FourierField& omega) {
  FourierField u1(omega.cutoff(), omega.is_real());
  FourierField u2(omega.cutoff(), omega.is_real());
  omega.for_each([&](const Mode& n, cplx w) {
    if (n.norm2() == 0) return;
    const double s = 1.0 / (kTwoPi * static_cast<double>(n.norm2()));
    u1.set_raw(n, cplx{0.0, -static_cast<double>(n.n2) * s} * w);
    u2.set_raw(n, cplx{0.0, static_cast<double>(n.n1) * s} * w);
  });
  return {u1, u2};
}

}  // namespace wnlab

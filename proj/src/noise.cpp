#include "wnlab/noise.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <stdexcept>

#include "wnlab/fft.hpp"
#include "wnlab/quadrature.hpp"
#include "wnlab/random.hpp"

namespace wnlab {

// ---------------------------------------------------------------------------
// White noise

FourierField sample_white_noise(const NoiseSpec& spec) {
  if (spec.cutoff < 1) throw std::invalid_argument("sample_white_noise: cutoff must be >= 1");
  Rng rng(splitmix64(spec.seed));
  std::normal_distribution<double> g;
  FourierField f(spec.cutoff, true);
  const int m = spec.cutoff;
  f.set_raw({0, 0}, g(rng));
  const double s = 1.0 / std::sqrt(2.0);
  for (int a = 0; a <= m; ++a)
    for (int b = -m; b <= m; ++b) {
      const Mode n{a, b};
      if (!in_half_lattice(n)) continue;
      const double re = g(rng);
      const double im = g(rng);
      f.set_raw(n, {s * re, s * im});
      f.set_raw(-n, {s * re, -s * im});
    }
  return f;
}

FourierField sample_white_noise(int cutoff, std::uint64_t master, std::uint64_t index) {
  return sample_white_noise({cutoff, derive_seed(master, index)});
}

// ---------------------------------------------------------------------------
// Bump profile and its transform

namespace {

double raw_bump(double rho) {
  const double u = rho / kBumpRadius;
  if (u >= 1.0) return 0.0;
  return std::exp(-1.0 / (1.0 - u * u));
}

double bump_normalization() {
  static const double c = [] {
    // integral of raw_bump over the plane = pi r0^2 int_0^1 exp(-1/(1-u)) du
    const QuadratureRule q = composite_gauss_legendre(16, 64, 0.0, 1.0);
    double s = 0.0;
    for (std::size_t i = 0; i < q.nodes.size(); ++i) s += q.weights[i] * std::exp(-1.0 / (1.0 - q.nodes[i]));
    return 1.0 / (kPi * kBumpRadius * kBumpRadius * s);
  }();
  return c;
}

constexpr double kTableStep = 1.0 / 256.0;
constexpr double kTableMax = 400.0;

struct TransformTable {
  std::vector<double> values;
  double reach = 0.0;  // |theta^(k)| <= 1e-8 for all tabulated k >= reach
};

const TransformTable& transform_table() {
  static const TransformTable table = [] {
    // theta^(k) = 2 int_0^r0 P(s) cos(2 pi k s) ds with P the projection of
    // the radial density onto one axis.
    const double c = bump_normalization();
    const QuadratureRule qs = composite_gauss_legendre(16, 64, 0.0, kBumpRadius);
    const QuadratureRule qt = composite_gauss_legendre(16, 16, 0.0, 1.0);
    std::vector<double> weight(qs.nodes.size());
    for (std::size_t i = 0; i < qs.nodes.size(); ++i) {
      const double s = qs.nodes[i];
      const double t_max = std::sqrt(kBumpRadius * kBumpRadius - s * s);
      double p = 0.0;
      for (std::size_t j = 0; j < qt.nodes.size(); ++j) {
        const double t = t_max * qt.nodes[j];
        p += qt.weights[j] * raw_bump(std::sqrt(s * s + t * t));
      }
      weight[i] = 2.0 * qs.weights[i] * c * 2.0 * t_max * p;
    }
    const std::size_t count = static_cast<std::size_t>(kTableMax / kTableStep) + 1;
    TransformTable t;
    t.values.assign(count, 0.0);
    const std::size_t block = 1024;
    for (std::size_t i = 0; i < qs.nodes.size(); ++i) {
      const double s = qs.nodes[i];
      const double cd = std::cos(kTwoPi * kTableStep * s);
      const double sd = std::sin(kTwoPi * kTableStep * s);
      double cv = 1.0, sv = 0.0;
      for (std::size_t j = 0; j < count; ++j) {
        if (j % block == 0) {
          cv = std::cos(kTwoPi * static_cast<double>(j) * kTableStep * s);
          sv = std::sin(kTwoPi * static_cast<double>(j) * kTableStep * s);
        }
        t.values[j] += weight[i] * cv;
        const double next = cv * cd - sv * sd;
        sv = sv * cd + cv * sd;
        cv = next;
      }
    }
    // same quadrature for the mass, so theta^(0) = 1 exactly
    const double mass = t.values[0];
    for (double& v : t.values) v /= mass;
    std::size_t last = count - 1;
    while (last > 0 && std::abs(t.values[last]) <= 1e-8) --last;
    t.reach = static_cast<double>(last + 1) * kTableStep;
    return t;
  }();
  return table;
}

}  // namespace

double bump_density(double rho) { return bump_normalization() * raw_bump(rho); }

double bump_transform(double k) {
  const TransformTable& t = transform_table();
  k = std::abs(k);
  const double pos = k / kTableStep;
  const std::size_t count = t.values.size();
  if (pos >= static_cast<double>(count - 3)) return 0.0;
  const long j = static_cast<long>(pos);
  const double u = pos - static_cast<double>(j);
  auto at = [&](long i) { return t.values[static_cast<std::size_t>(std::abs(i))]; };
  // four-point Lagrange on j-1 .. j+2
  const double fm = at(j - 1), f0 = at(j), f1 = at(j + 1), f2 = at(j + 2);
  return -u * (u - 1.0) * (u - 2.0) / 6.0 * fm + (u + 1.0) * (u - 1.0) * (u - 2.0) / 2.0 * f0 -
         (u + 1.0) * u * (u - 2.0) / 2.0 * f1 + (u + 1.0) * u * (u - 1.0) / 6.0 * f2;
}

Mollifier::Mollifier(double eps) : eps_(eps) {
  if (!(eps > 0.0) || !std::isfinite(eps)) throw std::invalid_argument("Mollifier: eps must be positive");
}

double Mollifier::density(const Vec2& x) const {
  if (support_radius() >= 0.5) throw std::invalid_argument("Mollifier::density: support wraps around the torus");
  return bump_density(norm(min_image(x)) / eps_) / (eps_ * eps_);
}

double Mollifier::hat(const Mode& n) const {
  if (n.norm2() == 0) return 1.0;
  return bump_transform(eps_ * std::sqrt(static_cast<double>(n.norm2()))); }

int Mollifier::spectral_reach() const { return static_cast<int>(std::ceil(transform_table().reach / eps_)); }

FourierField mollify(const FourierField& field, const Mollifier& m) {
  FourierField out(field.cutoff(), field.is_real());
  std::vector<double> by_norm(static_cast<std::size_t>(2 * field.cutoff() * field.cutoff() + 1), -1.0);
  field.for_each([&](const Mode& n, cplx c) {
    double& h = by_norm[static_cast<std::size_t>(n.norm2())];
    if (h < 0.0) h = m.hat(n);
    out.set_raw(n, c * h);
  });
  return out;
}

double delta_eps(const Mollifier& m, const Vec2& a, int cutoff) {
  const int L = cutoff > 0 ? cutoff : m.spectral_reach();
  std::vector<double> c2(2 * L + 1), s2(2 * L + 1);
  for (int n = -L; n <= L; ++n) {
    c2[n + L] = std::cos(kTwoPi * n * a.y);
    s2[n + L] = std::sin(kTwoPi * n * a.y);
  }
  double sum = 0.0;
  for (int n1 = -L; n1 <= L; ++n1) {
    const double c1 = std::cos(kTwoPi * n1 * a.x);
    const double s1 = std::sin(kTwoPi * n1 * a.x);
    double row = 0.0;
    for (int n2 = -L; n2 <= L; ++n2) {
      const double h = m.hat({n1, n2});
      if (h == 0.0) continue;
      row += h * h * (c1 * c2[n2 + L] - s1 * s2[n2 + L]);
    }
    sum += row;
  }
  return sum;
}

GridField delta_eps_grid(const Mollifier& m, int resolution) {
  if (!is_power_of_two(resolution)) throw std::invalid_argument("delta_eps_grid: resolution must be a power of two");
  const int L = m.spectral_reach();
  const int r = resolution;
  std::vector<double> folded(static_cast<std::size_t>(r) * r, 0.0);
  for (int n1 = -L; n1 <= L; ++n1)
    for (int n2 = -L; n2 <= L; ++n2) {
      const double h = m.hat({n1, n2});
      if (h == 0.0) continue;
      const int b1 = ((n1 % r) + r) % r;
      const int b2 = ((n2 % r) + r) % r;
      folded[static_cast<std::size_t>(b1) * r + b2] += h * h;
    }
  RealFft2D fft(r);
  auto spec = fft.spectrum();
  const int cols = fft.spectral_cols();
  for (int b1 = 0; b1 < r; ++b1)
    for (int b2 = 0; b2 < cols; ++b2) spec[static_cast<std::size_t>(b1) * cols + b2] = folded[static_cast<std::size_t>(b1) * r + b2];
  fft.inverse();
  auto real = fft.real();
  return GridField(r, std::vector<double>(real.begin(), real.end()));
}

// ---------------------------------------------------------------------------
// Quadratic functionals

double QuadraticKernel::operator()(const Vec2& x, const Vec2& y) const {
  double s = 0.0;
  for (const KernelTerm& t : terms) {
    double v = t.conv ? t.conv(x - y) : 1.0;
    if (t.left) v *= t.left(x);
    if (t.right) v *= t.right(y);
    s += v;
  }
  return s;
}

QuadraticKernel QuadraticKernel::translation_invariant(std::function<double(const Vec2&)> k) {
  return {{KernelTerm{{}, std::move(k), {}}}};
}

QuadraticKernel QuadraticKernel::separable(const TrigPoly& phi) {
  auto f = [phi](const Vec2& x) { return phi.value(x); };
  return {{KernelTerm{f, {}, f}}};
}

PreparedKernel::PreparedKernel(const QuadraticKernel& kernel, int resolution) : resolution_(resolution) {
  if (!is_power_of_two(resolution)) throw std::invalid_argument("PreparedKernel: resolution must be a power of two");
  const int r = resolution;
  const double h = 1.0 / r;
  auto sample = [&](const std::function<double(const Vec2&)>& fn) {
    std::vector<double> v(static_cast<std::size_t>(r) * r);
    for (int j = 0; j < r; ++j)
      for (int k = 0; k < r; ++k) {
        const double val = fn({j * h, k * h});
        if (!std::isfinite(val)) throw std::invalid_argument("quadratic kernel: non-finite kernel value");
        v[static_cast<std::size_t>(j) * r + k] = val;
      }
    return v;
  };
  RealFft2D fft(r);
  for (const KernelTerm& t : kernel.terms) {
    Term p;
    if (t.left) p.left = sample(t.left);
    if (t.right) p.right = sample(t.right);
    const std::vector<double> conv = t.conv ? sample(t.conv) : std::vector<double>(static_cast<std::size_t>(r) * r, 1.0);
    std::copy(conv.begin(), conv.end(), fft.real().begin());
    fft.forward();
    p.conv_hat.assign(fft.spectrum().begin(), fft.spectrum().end());
    for (auto& c : p.conv_hat) c /= static_cast<double>(r) * r;
    terms_.push_back(std::move(p));
  }
}

double quadratic_functional(const FourierField& field, const PreparedKernel& kernel) {
  const int r = kernel.resolution();
  const int m = field.cutoff();
  if (r < 2 * m + 2) throw std::invalid_argument("quadratic_functional: resolution too small for cutoff");
  const int cols = r / 2 + 1;
  auto khat = [&](const std::vector<cplx>& spec, const Mode& n) {
    if (n.n2 >= 0) return spec[static_cast<std::size_t>(((n.n1 % r) + r) % r) * cols + n.n2];
    return std::conj(spec[static_cast<std::size_t>(((-n.n1 % r) + r) % r) * cols - n.n2]);
  };

  double total = 0.0;
  std::vector<double> grid;
  std::unique_ptr<RealFft2D> fft;
  for (const PreparedKernel::Term& t : kernel.terms()) {
    if (t.left.empty() && t.right.empty()) {
      double s = 0.0;
      field.for_each([&](const Mode& n, cplx c) {
        if (c == cplx{}) return;
        s += std::norm(c) * khat(t.conv_hat, n).real();
      });
      total += s;
      continue;
    }
    if (grid.empty()) {
      grid = synthesize(field, r).values();
      fft = std::make_unique<RealFft2D>(r);
    }
    auto real = fft->real();
    for (std::size_t i = 0; i < grid.size(); ++i) real[i] = grid[i] * (t.right.empty() ? 1.0 : t.right[i]);
    fft->forward();
    auto spec = fft->spectrum();
    for (std::size_t i = 0; i < spec.size(); ++i) spec[i] *= t.conv_hat[i];
    fft->inverse();
    double s = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) s += (t.left.empty() ? 1.0 : t.left[i]) * grid[i] * real[i];
    total += s / (static_cast<double>(r) * r * r * r);
  }
  return total;
}

double quadratic_functional(const FourierField& field, const QuadraticKernel& kernel, int resolution) {
  return quadratic_functional(field, PreparedKernel(kernel, resolution));
}

double spectral_quadratic_functional(const FourierField& field, const std::function<cplx(const Mode&)>& k_hat) {
  double s = 0.0;
  field.for_each([&](const Mode& n, cplx c) {
    if (c == cplx{}) return;
    s += std::norm(c) * k_hat(n).real();
  });
  return s;
}

// ---------------------------------------------------------------------------
// Wick pairings

std::vector<PairingCycles> pairing_cycles(int p) {
  if (p < 1) throw std::invalid_argument("pairing_cycles: p must be positive");
  const int legs = 2 * p;
  std::vector<std::vector<int>> matchings;
  std::vector<int> match(legs, -1);
  auto recurse = [&](auto&& self) -> void {
    int first = -1;
    for (int i = 0; i < legs; ++i)
      if (match[i] < 0) {
        first = i;
        break;
      }
    if (first < 0) {
      matchings.push_back(match);
      return;
    }
    for (int j = first + 1; j < legs; ++j) {
      if (match[j] >= 0) continue;
      match[first] = j;
      match[j] = first;
      self(self);
      match[first] = match[j] = -1;
    }
  };
  recurse(recurse);

  std::vector<PairingCycles> out;
  for (const auto& mt : matchings) {
    PairingCycles cycles;
    std::vector<bool> seen(p, false);
    for (int start = 0; start < p; ++start) {
      if (seen[start]) continue;
      std::vector<bool> cycle;
      int enter = 2 * start;
      while (true) {
        const int factor = enter / 2;
        if (seen[factor]) break;
        seen[factor] = true;
        const bool forward = enter % 2 == 0;
        cycle.push_back(forward);
        const int exit = forward ? enter + 1 : enter - 1;
        enter = mt[exit];
      }
      cycles.push_back(cycle);
    }
    out.push_back(cycles);
  }
  return out;
}

namespace {

using Matrix = std::vector<double>;

Matrix matmul(const Matrix& a, const Matrix& b, int n) {
  Matrix c(static_cast<std::size_t>(n) * n, 0.0);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < n; ++k) {
      const double aik = a[static_cast<std::size_t>(i) * n + k];
      if (aik == 0.0) continue;
      const double* brow = &b[static_cast<std::size_t>(k) * n];
      double* crow = &c[static_cast<std::size_t>(i) * n];
      for (int j = 0; j < n; ++j) crow[j] += aik * brow[j];
    }
  return c;
}

double trace_product(const Matrix& a, const Matrix& b, int n) {
  double s = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) s += a[static_cast<std::size_t>(i) * n + j] * b[static_cast<std::size_t>(j) * n + i];
  return s;
}

double trace(const Matrix& a, int n) {
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += a[static_cast<std::size_t>(i) * n + i];
  return s;
}

}  // namespace

double wick_moment_oracle(const std::optional<Mollifier>& m, const std::function<double(const Vec2&, const Vec2&)>& f,
                          int p, int resolution) {
  if (p > 3) throw UnsupportedError("wick_moment_oracle: p > 3 is not supported");
  if (p < 1) throw std::invalid_argument("wick_moment_oracle: p must be positive");
  if (resolution < 2 || resolution > 32) throw std::invalid_argument("wick_moment_oracle: resolution must be in [2, 32]");
  const int r = resolution;
  const int n = r * r;
  const double h = 1.0 / r;
  auto point = [&](int i) { return Vec2{(i / r) * h, (i % r) * h}; };

  Matrix F(static_cast<std::size_t>(n) * n);
  const double w = h * h * h * h;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double v = f(point(i), point(j));
      if (!std::isfinite(v)) throw std::invalid_argument("wick_moment_oracle: non-finite kernel value");
      F[static_cast<std::size_t>(i) * n + j] = w * v;
    }
  Matrix Ft(F.size());
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) Ft[static_cast<std::size_t>(j) * n + i] = F[static_cast<std::size_t>(i) * n + j];

  Matrix FC, FtC;
  if (m) {
    const GridField d = delta_eps_grid(*m, r);
    Matrix C(F.size());
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        const int a = ((i / r - j / r) % r + r) % r;
        const int b = ((i % r - j % r) % r + r) % r;
        C[static_cast<std::size_t>(i) * n + j] = d(a, b);
      }
    FC = matmul(F, C, n);
    FtC = matmul(Ft, C, n);
  } else {
    FC = F;
    FtC = Ft;
    for (double& v : FC) v /= h * h;
    for (double& v : FtC) v /= h * h;
  }

  double total = 0.0;
  for (const PairingCycles& cycles : pairing_cycles(p)) {
    double prod = 1.0;
    for (const auto& cycle : cycles) {
      const Matrix& first = cycle[0] ? FC : FtC;
      double value;
      if (cycle.size() == 1) {
        value = trace(first, n);
      } else if (cycle.size() == 2) {
        value = trace_product(first, cycle[1] ? FC : FtC, n);
      } else {
        const Matrix ab = matmul(first, cycle[1] ? FC : FtC, n);
        value = trace_product(ab, cycle[2] ? FC : FtC, n);
      }
      prod *= value;
    }
    total += prod;
  }
  return total;
}

double wick_moment_oracle_diagonal(const std::optional<Mollifier>& m, const std::function<cplx(const Mode&)>& k_hat,
                                   int cutoff, int p) {
  if (p > 3) throw UnsupportedError("wick_moment_oracle_diagonal: p > 3 is not supported");
  if (p < 1 || cutoff < 0) throw std::invalid_argument("wick_moment_oracle_diagonal: bad p or cutoff");
  // power sums sum_n (k^(n) c(n))^a (k^(-n) c(n))^b for a + b <= p
  std::vector<std::vector<cplx>> power(p + 1, std::vector<cplx>(p + 1));
  for (int a = -cutoff; a <= cutoff; ++a)
    for (int b = -cutoff; b <= cutoff; ++b) {
      const Mode n{a, b};
      double c = 1.0;
      if (m) {
        const double t = m->hat(n);
        c = t * t;
      }
      const cplx kp = k_hat(n) * c;
      const cplx km = k_hat(-n) * c;
      for (int i = 0; i <= p; ++i)
        for (int j = 0; i + j <= p; ++j) {
          if (i + j == 0) continue;
          power[i][j] += std::pow(kp, i) * std::pow(km, j);
        }
    }
  cplx total = 0.0;
  for (const PairingCycles& cycles : pairing_cycles(p)) {
    cplx prod = 1.0;
    for (const auto& cycle : cycles) {
      const int fwd = static_cast<int>(std::count(cycle.begin(), cycle.end(), true));
      prod *= power[fwd][static_cast<int>(cycle.size()) - fwd];
    }
    total += prod;
  }
  return total.real();
}

}  // namespace wnlab

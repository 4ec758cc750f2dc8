#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "wnlab/kernel.hpp"

using namespace wnlab;

namespace {

const KernelEvaluator& kernel() {
  static const KernelEvaluator k;
  return k;
}

// R2 low-discrepancy sequence in d dimensions.
struct QuasiRandom {
  explicit QuasiRandom(int d) : alpha(d), state(d, 0.5) {
    double g = 2.0;
    for (int it = 0; it < 50; ++it) g = std::pow(1.0 + g, 1.0 / (d + 1));
    for (int i = 0; i < d; ++i) alpha[i] = std::fmod(std::pow(1.0 / g, i + 1), 1.0);
  }
  const std::vector<double>& next() {
    for (std::size_t i = 0; i < state.size(); ++i) state[i] = std::fmod(state[i] + alpha[i], 1.0);
    return state;
  }
  std::vector<double> alpha, state;
};

TrigPoly test_phi() { return TrigPoly::cosine({1, 0}) + TrigPoly::sine({1, 1}, 0.5) + TrigPoly::cosine({0, 2}, 0.25); }

}  // namespace

TEST(Ewald, SelfTestRecorded) {
  EXPECT_EQ(kernel().self_test().points, 16);
  EXPECT_LE(kernel().self_test().max_error_G, 1e-10);
  EXPECT_LE(kernel().self_test().max_error_K, 1e-10);
}

TEST(Ewald, AgreesWithSlowSumAt64Points) {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 64; ++i) {
    const Vec2 x{u(rng), u(rng)};
    EXPECT_NEAR(kernel().G(x), slow_green_G(x, 512), 1e-8);
    const Vec2 a = kernel().K(x);
    const Vec2 b = slow_biot_savart_K(x, 512);
    EXPECT_NEAR(a.x, b.x, 1e-8);
    EXPECT_NEAR(a.y, b.y, 1e-8);
  }
  EXPECT_NEAR(kernel().G({0.3, 0.4}), slow_green_G({0.3, 0.4}, 512), 1e-8);
}

TEST(Ewald, SlowSumAgainstPlainSquareTruncation) {
  // The plain square sum converges slowly; at L = 200 it is good to ~1e-5.
  const Vec2 x{0.3, 0.4};
  double plain = 0.0;
  const int L = 200;
  for (int a = -L; a <= L; ++a)
    for (int b = -L; b <= L; ++b) {
      if (a == 0 && b == 0) continue;
      plain -= std::cos(kTwoPi * (a * x.x + b * x.y)) / (4.0 * kPi * kPi * (a * a + b * b));
    }
  EXPECT_NEAR(slow_green_G(x), plain, 1e-5);
}

TEST(Ewald, GreenIsEvenAndMeanZero) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 32; ++i) {
    const Vec2 x{u(rng), u(rng)};
    EXPECT_NEAR(kernel().G(x), kernel().G(-x), 1e-13);
  }
  // midpoint rule on an offset grid; error is dominated by the log cell
  double s = 0.0;
  const int n = 128;
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < n; ++k) s += kernel().G({(j + 0.5) / n, (k + 0.5) / n});
  EXPECT_NEAR(s / (n * n), 0.0, 1e-4);
  EXPECT_THROW(kernel().G({0.0, 0.0}), SingularityError);
  EXPECT_THROW(kernel().G({1.0, -2.0}), SingularityError);
}

TEST(Ewald, LogarithmicSingularity) {
  double prev = 0.0;
  for (int j = 3; j <= 10; ++j) {
    const double r = std::ldexp(1.0, -j);
    const double reg = kernel().G({0.6 * r, 0.8 * r}) - std::log(r) / kTwoPi;
    EXPECT_LT(std::abs(reg), 1.0);
    if (j > 3) EXPECT_LT(std::abs(reg - prev), 2.0 * r * r);
    prev = reg;
  }
}

TEST(BiotSavart, AntisymmetricAndZeroAtOrigin) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 64; ++i) {
    const Vec2 x{u(rng), u(rng)};
    const Vec2 a = kernel().K(x);
    const Vec2 b = kernel().K(-x);
    EXPECT_NEAR(a.x, -b.x, 1e-10);
    EXPECT_NEAR(a.y, -b.y, 1e-10);
  }
  const Vec2 z = kernel().K({0.0, 0.0});
  EXPECT_EQ(z.x, 0.0);
  EXPECT_EQ(z.y, 0.0);
  EXPECT_EQ(kernel().K({1.0, 3.0}).x, 0.0);
}

TEST(BiotSavart, FreeSpaceLimit) {
  for (int j = 3; j <= 10; ++j) {
    const double r = std::ldexp(1.0, -j);
    const Vec2 x{0.6 * r, 0.8 * r};
    const double v = norm(kernel().K(x)) * r;
    EXPECT_NEAR(v, 1.0 / kTwoPi, 0.55 * r * r);
    // direction is perpendicular to x with the (x2, -x1) orientation
    EXPECT_GT(dot(kernel().K(x), perp(x)), 0.0);
  }
}

TEST(BiotSavart, GradientMatchesFiniteDifferences) {
  const double h = 1e-6;
  for (Vec2 x : {Vec2{0.3, 0.4}, Vec2{0.07, 0.9}, Vec2{0.5, 0.5}}) {
    const Vec2 g = kernel().grad_G(x);
    EXPECT_NEAR(g.x, (kernel().G({x.x + h, x.y}) - kernel().G({x.x - h, x.y})) / (2 * h), 1e-7);
    EXPECT_NEAR(g.y, (kernel().G({x.x, x.y + h}) - kernel().G({x.x, x.y - h})) / (2 * h), 1e-7);
  }
}

TEST(Velocity, SingleModeShear) {
  FourierField w(4, true);
  w.set({1, 0}, 0.5);
  const auto [u1, u2] = velocity_from_vorticity(w);
  const GridField g1 = synthesize(u1, 32);
  const GridField g2 = synthesize(u2, 32);
  for (int j = 0; j < 32; ++j)
    for (int k = 0; k < 32; ++k) {
      EXPECT_NEAR(g1(j, k), 0.0, 1e-10);
      EXPECT_NEAR(g2(j, k), -std::sin(kTwoPi * j / 32.0) / kTwoPi, 1e-10);
    }
}

TEST(Velocity, CurlAndDivergenceIdentities) {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> g;
  FourierField w(6, true);
  w.set({0, 0}, 0.7);
  w.for_each([&](const Mode& n, cplx) {
    if (in_half_lattice(n)) w.set(n, {g(rng), g(rng)});
  });
  const auto [u1, u2] = velocity_from_vorticity(w);
  EXPECT_EQ(u1({0, 0}), cplx{});
  w.for_each([&](const Mode& n, cplx c) {
    const cplx i2pi{0.0, kTwoPi};
    const cplx curl = i2pi * static_cast<double>(n.n2) * u1(n) - i2pi * static_cast<double>(n.n1) * u2(n);
    const cplx div = i2pi * static_cast<double>(n.n1) * u1(n) + i2pi * static_cast<double>(n.n2) * u2(n);
    if (n.norm2() > 0) EXPECT_NEAR(std::abs(curl - c), 0.0, 1e-12 * std::max(1.0, std::abs(c)));
    EXPECT_NEAR(std::abs(div), 0.0, 1e-12);
  });
  EXPECT_TRUE(u1.is_real());
}

TEST(Cutoff, ProfileShape) {
  const CutoffProfile p;
  EXPECT_EQ(p(0.0), 1.0);
  EXPECT_EQ(p(0.5), 1.0);
  EXPECT_EQ(p(1.0), 0.0);
  EXPECT_EQ(p(2.0), 0.0);
  double prev = 1.0;
  for (double r = 0.5; r <= 1.0; r += 1.0 / 512) {
    EXPECT_LE(p(r), prev);
    prev = p(r);
  }
}

TEST(Cutoff, SupportAndGrowth) {
  const CutoffProfile p;
  for (int j = 2; j <= 8; ++j) {
    const double eps = std::ldexp(1.0, -j);
    const Vec2 outside{0.6 * eps * 1.01, 0.8 * eps * 1.01};
    const Vec2 a = cutoff_K_eps(kernel(), outside, eps, p);
    const Vec2 b = kernel().K(outside);
    EXPECT_EQ(a.x, b.x);
    EXPECT_EQ(a.y, b.y);
    const Vec2 inside{0.3 * eps, -0.3 * eps};
    EXPECT_EQ(norm(cutoff_K_eps(kernel(), inside, eps, p)), 0.0);
    EXPECT_EQ(norm(cutoff_K_eps(kernel(), {0.0, 0.0}, eps, p)), 0.0);
    double sup = 0.0;
    for (int k = 0; k <= 200; ++k) {
      const double rho = eps * p.radius * (0.5 + 0.5 * k / 200.0);
      sup = std::max(sup, norm(cutoff_K_eps(kernel(), {rho, 0.0}, eps, p)));
    }
    EXPECT_LE(sup, kTwoPi / (eps * p.radius));
  }
  EXPECT_THROW(cutoff_K_eps(kernel(), {0.1, 0.1}, 0.0, p), std::invalid_argument);
}

TEST(HPhi, DiagonalAndSymmetry) {
  const TrigPoly phi = test_phi();
  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 64; ++i) {
    const Vec2 x{u(rng), u(rng)};
    const Vec2 y{u(rng), u(rng)};
    EXPECT_EQ(h_phi(kernel(), x, x, phi, 0.0), 0.0);
    EXPECT_EQ(h_phi(kernel(), x, x, phi, 0.1), 0.0);
    EXPECT_NEAR(h_phi(kernel(), x, y, phi, 0.0), h_phi(kernel(), y, x, phi, 0.0), 1e-13);
    EXPECT_NEAR(h_phi(kernel(), x, y, phi, 0.05), h_phi(kernel(), y, x, phi, 0.05), 1e-13);
  }
}

TEST(HPhi, SupBoundOnQuasiRandomPairs) {
  const TrigPoly phi = test_phi();
  const double bound = kernel().singularity_constant() * phi.hessian_sup_bound();
  QuasiRandom q(4);
  double sup = 0.0;
  for (int i = 0; i < 1000000; ++i) {
    const auto& v = q.next();
    sup = std::max(sup, std::abs(h_phi(kernel(), {v[0], v[1]}, {v[2], v[3]}, phi, 0.0)));
  }
  EXPECT_GT(sup, 0.0);
  EXPECT_LE(sup, bound);
}

TEST(HPhi, BoundedNearDiagonal) {
  const TrigPoly phi = test_phi();
  const Vec2 x{0.31, 0.47};
  const double bound = kernel().singularity_constant() * phi.hessian_sup_bound();
  for (int d = 0; d < 8; ++d) {
    const double a = kTwoPi * d / 8;
    for (int j = 2; j <= 30; j += 2) {
      const double r = std::ldexp(1.0, -j);
      const double v = h_phi(kernel(), x, {x.x + r * std::cos(a), x.y + r * std::sin(a)}, phi, 0.0);
      EXPECT_TRUE(std::isfinite(v));
      EXPECT_LE(std::abs(v), bound);
    }
  }
}

TEST(HDistance, TrivialAndLimits) {
  const TrigPoly phi = test_phi();
  EXPECT_EQ(h_l2_distance(kernel(), phi, 0.1, 0.1), 0.0);
  EXPECT_EQ(h_l2_distance(kernel(), TrigPoly::constant(3.0), 0.1, 0.0), 0.0);
  double prev = 1e300;
  const double sup = kernel().singularity_constant() * phi.hessian_sup_bound();
  for (int j = 2; j <= 8; ++j) {
    const double eps = std::ldexp(1.0, -j);
    const double d = h_l2_distance(kernel(), phi, eps, 0.0);
    EXPECT_LT(d, prev);
    EXPECT_LE(d * d, sup * sup * kPi * eps * eps);
    prev = d;
  }
  EXPECT_LT(prev, 0.02);
  EXPECT_THROW(h_l2_distance(kernel(), phi, 0.7, 0.0), std::invalid_argument);
}

TEST(HDistance, QuadratureConverged) {
  const TrigPoly phi = test_phi();
  const double coarse = h_l2_distance(kernel(), phi, 0.125, 0.0625);
  const double fine = h_l2_distance(kernel(), phi, 0.125, 0.0625, {}, {40, 16, 512});
  EXPECT_NEAR(coarse, fine, 1e-6 * fine);
}

TEST(HDistance, MatchesBruteForceDoubleIntegral) {
  // Independent route: integrate (H^n - H^m)^2 over (x, z) on a grid, with the
  // x-integral done by midpoint sampling and z on a fine polar-free grid.
  const TrigPoly phi = TrigPoly::cosine({1, 0});
  const double en = 0.25, em = 0.125;
  const int nz = 200, nx = 16;
  double s = 0.0;
  for (int a = 0; a < nz; ++a)
    for (int b = 0; b < nz; ++b) {
      const Vec2 z{-0.25 + 0.5 * (a + 0.5) / nz, -0.25 + 0.5 * (b + 0.5) / nz};
      const Vec2 dk = cutoff_K_eps(kernel(), z, en) - cutoff_K_eps(kernel(), z, em);
      if (dk.x == 0.0 && dk.y == 0.0) continue;
      double inner = 0.0;
      for (int j = 0; j < nx; ++j)
        for (int k = 0; k < nx; ++k) {
          const Vec2 x{(j + 0.5) / nx, (k + 0.5) / nx};
          const double h = 0.5 * dot(dk, phi.gradient(x) - phi.gradient(x - z));
          inner += h * h;
        }
      s += inner / (nx * nx) * (0.25 / (nz * nz));
    }
  const double d = h_l2_distance(kernel(), phi, en, em);
  EXPECT_NEAR(d * d, s, 2e-3 * s);
}

TEST(CutoffSpectrum, MatchesGridTransform) {
  // Delta K is smooth with compact support, so the plain grid DFT converges
  // spectrally and serves as the oracle.
  const double ea = 0.125, eb = 0.25;
  const int cutoff = 24, grid = 512;
  const auto spec = cutoff_difference_spectrum(kernel(), ea, eb, cutoff);
  std::vector<Vec2> dk(grid * grid);
  for (int a = 0; a < grid; ++a)
    for (int b = 0; b < grid; ++b) {
      const Vec2 z{static_cast<double>(a) / grid, static_cast<double>(b) / grid};
      dk[a * grid + b] = cutoff_K_eps(kernel(), z, ea) - cutoff_K_eps(kernel(), z, eb);
    }
  double worst = 0.0, scale = 0.0;
  for (const Mode q : {Mode{0, 0}, Mode{1, 0}, Mode{0, 3}, Mode{2, -5}, Mode{7, 4}, Mode{-11, 9}, Mode{24, 24}}) {
    cplx g1{}, g2{};
    for (int a = 0; a < grid; ++a)
      for (int b = 0; b < grid; ++b) {
        const cplx e = std::polar(1.0, -kTwoPi * (q.n1 * a + q.n2 * b) / grid);
        g1 += dk[a * grid + b].x * e;
        g2 += dk[a * grid + b].y * e;
      }
    g1 /= double(grid * grid);
    g2 /= double(grid * grid);
    worst = std::max({worst, std::abs(g1 - spec[0](q)), std::abs(g2 - spec[1](q))});
    scale = std::max({scale, std::abs(g1), std::abs(g2)});
  }
  EXPECT_GT(scale, 1e-3);
  EXPECT_LT(worst, 1e-10);
}

TEST(CutoffSpectrum, OddAndEmptyForEqualCutoffs) {
  const auto spec = cutoff_difference_spectrum(kernel(), 0.1, 0.05, 8);
  spec[0].for_each([&](const Mode& n, cplx v) {
    EXPECT_EQ(v.real(), 0.0);
    EXPECT_EQ(v, std::conj(spec[0](-n)));
  });
  const auto none = cutoff_difference_spectrum(kernel(), 0.1, 0.1, 4);
  none[1].for_each([](const Mode&, cplx v) { EXPECT_EQ(v, cplx{}); });
  EXPECT_THROW(cutoff_difference_spectrum(kernel(), 0.7, 0.1, 4), std::invalid_argument);
}

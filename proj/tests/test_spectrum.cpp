#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "wnlab/spectrum.hpp"

using namespace wnlab;

namespace {

FourierField random_field(int m, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  FourierField f(m, true);
  f.set({0, 0}, {g(rng), 0.0});
  f.for_each([&](const Mode& n, cplx) {
    if (in_half_lattice(n)) f.set(n, {g(rng), g(rng)});
  });
  return f;
}

TrigPoly random_poly(int degree, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  TrigPoly p = TrigPoly::constant(g(rng));
  for (int a = 0; a <= degree; ++a)
    for (int b = -degree; b <= degree; ++b) {
      const Mode n{a, b};
      if (!in_half_lattice(n)) continue;
      p = p + TrigPoly::cosine(n, g(rng)) + TrigPoly::sine(n, g(rng));
    }
  return p;
}

}  // namespace

TEST(SobolevNorm, ZeroModeIsOne) {
  FourierField f(4, true);
  f.set({0, 0}, 1.0);
  EXPECT_DOUBLE_EQ(sobolev_norm(f, -3.0), 1.0);
  EXPECT_DOUBLE_EQ(sobolev_norm(f, 2.5), 1.0);
}

TEST(SobolevNorm, SingleMode) {
  FourierField f(4, false);
  f.set({1, 0}, 1.0);
  EXPECT_NEAR(sobolev_norm(f, -1.0), std::sqrt(0.5), 1e-15);
}

TEST(SobolevNorm, DiracIndependentOfPosition) {
  double oracle = 0.0;
  for (int a = -32; a <= 32; ++a)
    for (int b = -32; b <= 32; ++b) oracle += 1.0 / std::pow(1.0 + a * a + b * b, 2);
  oracle = std::sqrt(oracle);
  for (Vec2 x0 : {Vec2{0.0, 0.0}, Vec2{0.3, 0.71}, Vec2{0.999, 0.5}})
    EXPECT_NEAR(sobolev_norm(dirac_mass(x0, 32), -2.0), oracle, 1e-12 * oracle);
}

TEST(SobolevNorm, MonotoneInExponent) {
  const FourierField f = random_field(8, 3);
  double prev = 0.0;
  for (double s = -3.0; s <= 2.0; s += 0.5) {
    const double v = sobolev_norm(f, s);
    EXPECT_GE(v, prev);
    prev = v;
  }
}

TEST(FourierField, RealSetMirrorsConjugate) {
  FourierField f(3, true);
  f.set({1, -2}, {0.5, 0.25});
  EXPECT_EQ(f({-1, 2}), cplx(0.5, -0.25));
  EXPECT_EQ(f({7, 0}), cplx{});
  EXPECT_THROW(f.set({4, 0}, 1.0), std::invalid_argument);
  EXPECT_THROW(f.set({0, 0}, {1.0, 1.0}), std::invalid_argument);
  EXPECT_THROW(f.set({1, 0}, std::nan("")), std::invalid_argument);
}

TEST(HMinusMetric, Basics) {
  const FourierField a = random_field(6, 1);
  const FourierField b = random_field(6, 2);
  const FourierField c = random_field(6, 9);
  EXPECT_EQ(h_minus_metric(a, a), 0.0);
  EXPECT_LE(h_minus_metric(a, b, 60), 1.0);
  EXPECT_DOUBLE_EQ(h_minus_metric(a, b), h_minus_metric(b, a));
  EXPECT_LE(h_minus_metric(a, c), h_minus_metric(a, b) + h_minus_metric(b, c) + 1e-15);
  EXPECT_THROW(h_minus_metric(a, b, 0), std::invalid_argument);
  double prev = 0.0;
  for (int t = 1; t <= 30; ++t) {
    const double v = h_minus_metric(a, b, t);
    EXPECT_GE(v, prev);
    prev = v;
  }
}

TEST(HMinusMetric, DiracAgainstDirectSum) {
  const FourierField d = dirac_mass({0.2, 0.6}, 16);
  double oracle = 0.0;
  for (int k = 1; k <= 20; ++k) {
    double s = 0.0;
    for (int a = -16; a <= 16; ++a)
      for (int b = -16; b <= 16; ++b) s += std::pow(1.0 + a * a + b * b, -1.0 - 1.0 / k);
    oracle += std::ldexp(1.0, -k) * std::min(std::sqrt(s), 1.0);
  }
  EXPECT_NEAR(h_minus_metric(d, FourierField(8, true), 20), oracle, 1e-14);
}

TEST(BesselSmooth, Multipliers) {
  FourierField f(2, true);
  f.set({0, 0}, 1.0);
  f.set({1, 0}, 1.0);
  const FourierField g = bessel_smooth(f, 1.0);
  EXPECT_DOUBLE_EQ(g({0, 0}).real(), 1.0);
  EXPECT_DOUBLE_EQ(g({1, 0}).real(), 0.5);
  EXPECT_TRUE(g.is_real());
  EXPECT_THROW(bessel_smooth(f, 0.0), std::invalid_argument);
}

TEST(BesselSmooth, Linear) {
  const FourierField a = random_field(5, 4);
  const FourierField b = random_field(5, 5);
  const FourierField lhs = bessel_smooth(2.0 * a + b, 0.3);
  const FourierField rhs = 2.0 * bessel_smooth(a, 0.3) + bessel_smooth(b, 0.3);
  for (std::size_t i = 0; i < lhs.data().size(); ++i) EXPECT_NEAR(std::abs(lhs.data()[i] - rhs.data()[i]), 0.0, 1e-14);
}

TEST(Synthesis, ZeroAndSingleMode) {
  const GridField z = synthesize(FourierField(3, true), 8);
  for (double v : z.values()) EXPECT_EQ(v, 0.0);
  FourierField f(3, true);
  f.set({1, 0}, 0.5);
  const GridField g = synthesize(f, 16);
  for (int j = 0; j < 16; ++j)
    for (int k = 0; k < 16; ++k) EXPECT_NEAR(g(j, k), std::cos(kTwoPi * j / 16.0), 1e-14);
}

TEST(Synthesis, RoundTripAndParseval) {
  const FourierField f = random_field(20, 11);
  const GridField g = synthesize(f, 64);
  const FourierField back = analyze(g, 20);
  double scale = 0.0, err = 0.0;
  for (std::size_t i = 0; i < f.data().size(); ++i) {
    scale = std::max(scale, std::abs(f.data()[i]));
    err = std::max(err, std::abs(f.data()[i] - back.data()[i]));
  }
  EXPECT_LE(err, 1e-12 * scale);
  double sq = 0.0;
  for (double v : g.values()) sq += v * v;
  sq /= 64.0 * 64.0;
  const double n0 = sobolev_norm(f, 0.0);
  EXPECT_NEAR(sq, n0 * n0, 1e-10 * n0 * n0);
}

TEST(Synthesis, RejectsAliasing) {
  EXPECT_THROW(synthesize(FourierField(8, true), 16), std::invalid_argument);
  EXPECT_THROW(synthesize(FourierField(2, true), 12), std::invalid_argument);
}

TEST(TrigPoly, ConstantAndCosine) {
  const TrigPoly c = TrigPoly::constant(2.0);
  EXPECT_EQ(c.gradient({0.3, 0.2}).x, 0.0);
  EXPECT_EQ(c.hessian({0.3, 0.2}).yy, 0.0);
  const TrigPoly p = TrigPoly::cosine({1, 0});
  EXPECT_NEAR(p.value({0, 0}), 1.0, 1e-15);
  EXPECT_NEAR(p.gradient({0, 0}).x, 0.0, 1e-15);
  EXPECT_NEAR(p.hessian({0, 0}).xx, -4.0 * kPi * kPi, 1e-12);
}

TEST(TrigPoly, GradientAndHessianMatchFiniteDifferences) {
  const TrigPoly p = random_poly(3, 21);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double h = 1e-5;
  for (int t = 0; t < 20; ++t) {
    const Vec2 x{u(rng), u(rng)};
    const Vec2 g = p.gradient(x);
    EXPECT_NEAR(g.x, (p.value({x.x + h, x.y}) - p.value({x.x - h, x.y})) / (2 * h), 1e-6 * std::max(1.0, std::abs(g.x)));
    EXPECT_NEAR(g.y, (p.value({x.x, x.y + h}) - p.value({x.x, x.y - h})) / (2 * h), 1e-6 * std::max(1.0, std::abs(g.y)));
    const Mat2 H = p.hessian(x);
    EXPECT_EQ(H.xy, H.yx);
    const double fd = (p.gradient({x.x, x.y + h}).x - p.gradient({x.x, x.y - h}).x) / (2 * h);
    EXPECT_NEAR(H.xy, fd, 1e-4 * std::max(1.0, std::abs(fd)));
  }
}

TEST(TrigPoly, RejectsNonHermitian) {
  EXPECT_THROW(TrigPoly({{Mode{1, 0}, cplx{1.0, 0.0}}}), std::invalid_argument);
}

TEST(TrigPoly, PairingAndInner) {
  const TrigPoly p = TrigPoly::cosine({1, 2}, 1.5) + TrigPoly::sine({0, 1}, 0.5);
  EXPECT_NEAR(p.l2_norm_squared(), 1.5 * 1.5 / 2 + 0.25 / 2, 1e-15);
  EXPECT_NEAR(pair(p.as_field(3), p), p.l2_norm_squared(), 1e-15);
  const Vec2 x0{0.37, 0.81};
  EXPECT_NEAR(pair(dirac_mass(x0, 3), p), p.value(x0), 1e-14);
}

TEST(Json, RoundTripStoresHalfLattice) {
  const FourierField f = random_field(4, 8);
  const auto j = to_json(f);
  for (const auto& e : j.at("modes")) {
    const Mode n{e[0].get<int>(), e[1].get<int>()};
    EXPECT_TRUE(in_half_lattice(n) || (n == Mode{0, 0}));
  }
  const FourierField g = field_from_json(nlohmann::json::parse(j.dump()));
  EXPECT_EQ(f.data(), g.data());
}

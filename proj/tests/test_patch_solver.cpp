#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "wnlab/patch_solver.hpp"

using namespace wnlab;

namespace {

double max_mode_gap(const FourierField& a, const FourierField& b) {
  const int k = std::max(a.cutoff(), b.cutoff());
  double gap = 0.0;
  for (int n1 = -k; n1 <= k; ++n1)
    for (int n2 = -k; n2 <= k; ++n2) gap = std::max(gap, std::abs(a({n1, n2}) - b({n1, n2})));
  return gap;
}

// Smooth random vorticity: modes |n|_inf <= 4 with amplitude (1 + |n|^2)^-1.
FourierField smooth_random(unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  FourierField f(4, true);
  for (int a = 0; a <= 4; ++a)
    for (int b = -4; b <= 4; ++b) {
      const Mode n{a, b};
      if (!in_half_lattice(n)) continue;
      const double amp = 1.0 / (1.0 + n.norm2());
      f.set(n, amp * cplx{g(rng), g(rng)});
    }
  return f;
}

// Radial blob transform by direct quadrature of exp(-1 / (1 - (r/r_b)^2)),
// normalized by its own mass.
double blob_hat_oracle(double rb, double k) {
  const int m = 4000;
  const double h = rb / m;
  double mass = 0.0, tr = 0.0;
  for (int j = 1; j < m; ++j) {
    const double r = j * h;
    const double s = r / rb;
    const double w = (j % 2 ? 4.0 : 2.0) * std::exp(-1.0 / (1.0 - s * s)) * r;
    mass += w;
    tr += w * std::cyl_bessel_j(0.0, kTwoPi * k * r);
  }
  return tr / mass;
}

}  // namespace

TEST(PatchFromVortices, UnitCirculation) {
  VortexConfig c{{1.0}, {{0.0, 0.0}}};
  const SpectralState s = patch_from_vortices(c, PatchSpec{0.05}, 64);
  EXPECT_DOUBLE_EQ(s.omega({0, 0}).real(), 1.0);
  // radial blob at the origin: real, symmetric coefficients
  EXPECT_NEAR(s.omega({3, 1}).imag(), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(s.omega({3, 1}) - s.omega({1, 3})), 0.0, 1e-15);
}

TEST(PatchFromVortices, OppositeBlobsCancelMeanMode) {
  VortexConfig c{{1.3, -1.3}, {{0.2, 0.7}, {0.6, 0.1}}};
  EXPECT_EQ(patch_from_vortices(c, PatchSpec{0.05}, 64).omega({0, 0}), cplx{});
}

TEST(PatchFromVortices, BlobTransformMatchesRadialQuadrature) {
  for (double rb : {0.02, 0.05, 0.1}) {
    const PatchSpec spec{rb};
    for (Mode n : {Mode{1, 0}, Mode{3, 4}, Mode{10, 7}, Mode{20, 0}}) {
      const double k = std::sqrt(static_cast<double>(n.norm2()));
      EXPECT_NEAR(spec.blob_hat(n), blob_hat_oracle(rb, k), 1e-8) << "r_b " << rb << " |n| " << k;
    }
  }
}

TEST(PatchFromVortices, PairingWithinTaylorBound) {
  VortexConfig c{{1.0}, {{0.31, 0.77}}};
  const TrigPoly phi = TrigPoly::cosine({2, 1}) + TrigPoly::sine({0, 1}, 0.5);
  const double point = phi.value(c.x[0]);
  for (double rb : {0.1, 0.05, 0.02}) {
    const SpectralState s = patch_from_vortices(c, PatchSpec{rb}, 128);
    const double gap = std::abs(pair(s.omega, phi) - point);
    EXPECT_LE(gap, phi.hessian_sup_bound() * rb * rb / 2.0) << rb;
  }
}

TEST(PatchFromVortices, ResolutionError) {
  VortexConfig c{{1.0}, {{0.5, 0.5}}};
  EXPECT_THROW(patch_from_vortices(c, PatchSpec{0.01}, 64), ResolutionError);
  EXPECT_NO_THROW(patch_from_vortices(c, PatchSpec{2.0 / 64}, 64));
  EXPECT_THROW(make_state(FourierField(2, true), 48), ResolutionError);
}

TEST(SpectralState, DealiasedBox) {
  const SpectralState s = make_state(smooth_random(1).embedded(40), 64);
  EXPECT_LE(3 * s.omega.cutoff(), 64);
  EXPECT_EQ(s.omega.cutoff(), dealiased_cutoff(64));
}

TEST(EulerStep, SteadyShear) {
  const SpectralState s = make_state(TrigPoly::cosine({1, 0}).as_field(1), 64);
  const SpectralState next = euler_step(s, 1e-3);
  EXPECT_LE(max_mode_gap(s.omega, next.omega), 1e-10);
  EXPECT_DOUBLE_EQ(next.t, 1e-3);
}

TEST(EulerStep, LaplacianEigenfunctionIsSteady) {
  const FourierField w = (TrigPoly::cosine({1, 1}, 0.5) + TrigPoly::cosine({1, -1}, 0.5)).as_field(1);
  SpectralState s = make_state(w, 64);
  const SpectralState start = s;
  EulerSolver solver(64);
  for (int k = 0; k < 100; ++k) s = solver.step(s, 1e-3);
  EXPECT_LE(max_mode_gap(start.omega, s.omega), 1e-8);
}

TEST(EulerStep, CflViolation) {
  const SpectralState s = make_state(TrigPoly::cosine({1, 0}, 10.0).as_field(1), 64);
  const double umax = max_velocity(s);
  EXPECT_NEAR(umax, 10.0 / kTwoPi, 1e-12);
  EXPECT_THROW(euler_step(s, 0.6 / (64 * umax)), StepSizeError);
  EXPECT_NO_THROW(euler_step(s, 0.4 / (64 * umax)));
}

TEST(EulerStep, FreeFunctionMatchesSolver) {
  const SpectralState s = make_state(smooth_random(2), 32);
  EulerSolver solver(32);
  EXPECT_EQ(max_mode_gap(solver.step(s, 1e-3).omega, euler_step(s, 1e-3).omega), 0.0);
}

TEST(RunPatch, ConservesEnergyEnstrophyAndCirculation) {
  FourierField w = smooth_random(3);
  w.set({0, 0}, 0.7);
  const SpectralState s = make_state(w, 64);
  const PatchRun run = run_patch(s, 1.0, 0.25);
  ASSERT_EQ(run.states.size(), 5u);
  const double e0 = energy(s), z0 = enstrophy(s);
  for (const SpectralState& st : run.states) {
    EXPECT_LE(std::abs(energy(st) / e0 - 1.0), 1e-6) << st.t;
    EXPECT_LE(std::abs(enstrophy(st) / z0 - 1.0), 1e-6) << st.t;
    EXPECT_EQ(st.omega({0, 0}), cplx(0.7, 0.0));
  }
  EXPECT_DOUBLE_EQ(run.states.back().t, 1.0);
}

TEST(RunPatch, MirrorSymmetryPreserved) {
  // omega(-x1, x2) = -omega(x1, x2), with modes of different |n| so the flow evolves
  const FourierField w = (TrigPoly::sine({1, 0}) + TrigPoly::sine({2, 1}, 0.5) + TrigPoly::sine({2, -1}, 0.5) +
                          TrigPoly::sine({1, 2}, 0.3) + TrigPoly::sine({1, -2}, 0.3))
                             .as_field(2);
  const PatchRun run = run_patch(make_state(w, 64), 0.5, 0.0);
  const FourierField& end = run.states.back().omega;
  EXPECT_GT(max_mode_gap(end, run.states.front().omega), 1e-3);
  double asym = 0.0;
  end.for_each([&](const Mode& n, cplx c) { asym = std::max(asym, std::abs(c + end({-n.n1, n.n2}))); });
  EXPECT_LE(asym, 1e-10);
}

TEST(RunPatch, ResolutionSelfConvergence) {
  const FourierField w = smooth_random(4).truncated(3);
  const TrigPoly phi = TrigPoly::cosine({1, 2}) + TrigPoly::sine({3, 1});
  auto observe = [&](int r) { return pair(run_patch(make_state(w, r), 0.5, 0.0).states.back().omega, phi); };
  const double ref = observe(128);
  const double e16 = std::abs(observe(16) - ref), e32 = std::abs(observe(32) - ref);
  EXPECT_GE(e16, 4.0 * e32) << e16 << " " << e32;
}

TEST(CompareObservables, ConstantPhiAndInitialBound) {
  KernelEvaluator kernel;
  VortexConfig c{{1.0, -0.5, 0.8}, {{0.2, 0.3}, {0.6, 0.4}, {0.45, 0.8}}};
  IntegratorSpec spec;
  spec.scheme = Scheme::RK45;
  spec.tolerance = 1e-12;
  spec.output_interval = 0.05;
  const Trajectory traj = integrate(kernel, c, 0.1, spec);
  const double rb = 0.05;
  const PatchRun run = run_patch(patch_from_vortices(c, PatchSpec{rb}, 64), 0.1, 0.05);
  const TrigPoly phi = TrigPoly::cosine({1, 1});
  const std::vector<double> gaps = compare_observables(run, traj, {TrigPoly::constant(2.0), phi});
  EXPECT_NEAR(gaps[0], 0.0, 1e-14);

  PatchRun initial;
  initial.states = {run.states.front()};
  Trajectory t0;
  t0.times = {0.0};
  t0.states = {c};
  const double bound = c.scale() * (1.0 + 0.5 + 0.8) * phi.hessian_sup_bound() * rb * rb / 2.0;
  EXPECT_LE(compare_observables(initial, t0, {phi})[0], bound);

  EXPECT_THROW(compare_observables(initial, traj, {phi}), std::invalid_argument);
}

TEST(CompareObservables, DipoleGapShrinksWithBlobRadius) {
  KernelEvaluator kernel;
  const double s = std::sqrt(2.0);
  VortexConfig c{{s, -s}, {{0.5, 0.4}, {0.5, 0.6}}};
  IntegratorSpec spec;
  spec.scheme = Scheme::RK45;
  spec.tolerance = 1e-12;
  spec.output_interval = 0.02;
  const Trajectory traj = integrate(kernel, c, 0.1, spec);
  const std::vector<TrigPoly> phis{TrigPoly::sine({0, 1}), TrigPoly::cosine({1, 2})};
  std::vector<double> previous;
  for (double rb : {0.08, 0.04}) {
    const PatchRun run = run_patch(patch_from_vortices(c, PatchSpec{rb}, 128), 0.1, 0.02);
    const std::vector<double> gaps = compare_observables(run, traj, phis);
    if (!previous.empty())
      for (std::size_t p = 0; p < gaps.size(); ++p) EXPECT_LT(gaps[p], previous[p]) << p;
    previous = gaps;
  }
}

TEST(CompareObservables, CsvRows) {
  KernelEvaluator kernel;
  VortexConfig c{{1.0}, {{0.5, 0.5}}};
  IntegratorSpec spec;
  spec.scheme = Scheme::RK45;
  spec.output_interval = 0.05;
  const Trajectory traj = integrate(kernel, c, 0.1, spec);
  const PatchRun run = run_patch(patch_from_vortices(c, PatchSpec{0.1}, 32), 0.1, 0.05);
  std::ostringstream out;
  write_observables_csv(out, 0.1, run, traj, {TrigPoly::cosine({1, 0})}, true);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "r_b,t,phi_index,patch,vortex");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 3);
}

#include "wnlab/patch_solver.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <memory>

#include "wnlab/fft.hpp"
#include "wnlab/noise.hpp"

namespace wnlab {

namespace {

void check_resolution(int resolution) {
  if (!is_power_of_two(resolution) || resolution < 8)
    throw ResolutionError("patch solver: resolution must be a power of two >= 8, got " + std::to_string(resolution));
}

double sum_abs2_weighted(const FourierField& omega, bool inverse_laplacian) {
  double acc = 0.0;
  omega.for_each([&](const Mode& n, cplx c) {
    if (inverse_laplacian) {
      if (n.n1 == 0 && n.n2 == 0) return;
      acc += std::norm(c) / (4.0 * kPi * kPi * static_cast<double>(n.norm2()));
    } else {
      acc += std::norm(c);
    }
  });
  return acc;
}

}  // namespace

SpectralState make_state(const FourierField& omega, int resolution, double t) {
  check_resolution(resolution);
  if (!omega.is_real()) throw std::invalid_argument("make_state: vorticity must be a real field");
  const int k = dealiased_cutoff(resolution);
  SpectralState s;
  s.resolution = resolution;
  s.omega = omega.cutoff() >= k ? omega.truncated(k) : omega.embedded(k);
  s.t = t;
  return s;
}

void PatchSpec::validate(int resolution) const {
  check_resolution(resolution);
  if (!(radius >= 2.0 / resolution))
    throw ResolutionError("PatchSpec: blob radius " + std::to_string(radius) + " is below 2 cells at R = " +
                          std::to_string(resolution));
  if (!(radius < 0.5)) throw std::invalid_argument("PatchSpec: blob radius must be below 1/2");
}

double PatchSpec::blob_hat(const Mode& n) const { return Mollifier(radius / kBumpRadius).hat(n); }

SpectralState patch_from_vortices(const VortexConfig& config, const PatchSpec& spec, int resolution) {
  spec.validate(resolution);
  const int k = dealiased_cutoff(resolution);
  const Mollifier blob(spec.radius / kBumpRadius);
  const double scale = config.scale();
  FourierField omega(k, true);
  for (int a = 0; a <= k; ++a) {
    for (int b = -k; b <= k; ++b) {
      const Mode n{a, b};
      if (!(in_half_lattice(n) || (a == 0 && b == 0))) continue;
      const double w = blob.hat(n) * scale;
      cplx acc{};
      for (int i = 0; i < config.size(); ++i) {
        const double phase = -kTwoPi * (a * config.x[i].x + b * config.x[i].y);
        acc += config.xi[i] * cplx{std::cos(phase), std::sin(phase)};
      }
      omega.set(n, (a == 0 && b == 0) ? cplx{w * acc.real(), 0.0} : w * acc);
    }
  }
  SpectralState s;
  s.resolution = resolution;
  s.omega = std::move(omega);
  return s;
}

double energy(const SpectralState& state) { return 0.5 * sum_abs2_weighted(state.omega, true); }

double enstrophy(const SpectralState& state) { return sum_abs2_weighted(state.omega, false); }

// Compact storage: modes n1 in [-K, K], n2 in [0, K]; the n2 = 0 column holds
// both signs of n1 so the c2r input stays Hermitian.
struct EulerSolver::Impl {
  int r, k, cols;
  RealFft2D fft;
  std::vector<int> n1, n2;
  std::vector<std::size_t> slot;  // position in the FFTW spectrum
  std::vector<double> u1, u2, d1, d2;
  std::vector<cplx> k1, k2, k3, k4, tmp;

  explicit Impl(int resolution)
      : r(resolution), k(dealiased_cutoff(resolution)), cols(resolution / 2 + 1), fft(resolution) {
    for (int a = -k; a <= k; ++a)
      for (int b = 0; b <= k; ++b) {
        n1.push_back(a);
        n2.push_back(b);
        slot.push_back(static_cast<std::size_t>((a + r) % r) * cols + b);
      }
    const std::size_t grid = static_cast<std::size_t>(r) * r;
    u1.resize(grid);
    u2.resize(grid);
    d1.resize(grid);
    d2.resize(grid);
    for (auto* v : {&k1, &k2, &k3, &k4, &tmp}) v->resize(n1.size());
  }

  std::size_t size() const { return n1.size(); }

  std::vector<cplx> compact(const FourierField& omega) const {
    std::vector<cplx> w(size());
    for (std::size_t i = 0; i < size(); ++i) w[i] = omega({n1[i], n2[i]});
    return w;
  }

  FourierField expand(const std::vector<cplx>& w) const {
    FourierField f(k, true);
    for (std::size_t i = 0; i < size(); ++i) {
      const Mode n{n1[i], n2[i]};
      if (n2[i] > 0 || n1[i] > 0) {
        f.set_raw(n, w[i]);
        f.set_raw(-n, std::conj(w[i]));
      } else if (n1[i] == 0) {
        f.set_raw(n, {w[i].real(), 0.0});
      }
    }
    return f;
  }

  // spectrum <- mult(i) * w[i] on the retained modes, then to the grid.
  template <typename Mult>
  void to_grid(const std::vector<cplx>& w, Mult mult, std::vector<double>& out) {
    auto spec = fft.spectrum();
    std::fill(spec.begin(), spec.end(), cplx{});
    for (std::size_t i = 0; i < size(); ++i) spec[slot[i]] = mult(i) * w[i];
    fft.inverse();
    auto real = fft.real();
    std::copy(real.begin(), real.end(), out.begin());
  }

  // out = -P(u . grad omega), P the projection onto the retained box; returns max |u|.
  double rhs(const std::vector<cplx>& w, std::vector<cplx>& out) {
    const double c = 1.0 / kTwoPi;
    auto inv = [&](std::size_t i) {
      const long q = static_cast<long>(n1[i]) * n1[i] + static_cast<long>(n2[i]) * n2[i];
      return q == 0 ? 0.0 : c / static_cast<double>(q);
    };
    to_grid(w, [&](std::size_t i) { return cplx{0.0, -n2[i] * inv(i)}; }, u1);
    to_grid(w, [&](std::size_t i) { return cplx{0.0, n1[i] * inv(i)}; }, u2);
    to_grid(w, [&](std::size_t i) { return cplx{0.0, kTwoPi * n1[i]}; }, d1);
    to_grid(w, [&](std::size_t i) { return cplx{0.0, kTwoPi * n2[i]}; }, d2);
    auto real = fft.real();
    double umax2 = 0.0;
    for (std::size_t p = 0; p < real.size(); ++p) {
      real[p] = u1[p] * d1[p] + u2[p] * d2[p];
      umax2 = std::max(umax2, u1[p] * u1[p] + u2[p] * u2[p]);
    }
    fft.forward();
    const double norm = -1.0 / (static_cast<double>(r) * r);
    auto spec = fft.spectrum();
    for (std::size_t i = 0; i < size(); ++i) out[i] = norm * spec[slot[i]];
    // mean of u . grad omega vanishes for divergence-free u
    for (std::size_t i = 0; i < size(); ++i)
      if (n1[i] == 0 && n2[i] == 0) out[i] = {};
    return std::sqrt(umax2);
  }

  void combine(const std::vector<cplx>& w, double h, const std::vector<cplx>& d) {
    for (std::size_t i = 0; i < size(); ++i) tmp[i] = w[i] + h * d[i];
  }

  // RK4 with k1 already holding rhs(w).
  void rk4_from_k1(std::vector<cplx>& w, double dt) {
    combine(w, 0.5 * dt, k1);
    rhs(tmp, k2);
    combine(w, 0.5 * dt, k2);
    rhs(tmp, k3);
    combine(w, dt, k3);
    rhs(tmp, k4);
    for (std::size_t i = 0; i < size(); ++i) w[i] += (dt / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  }
};

EulerSolver::EulerSolver(int resolution) : resolution_(resolution) {
  check_resolution(resolution);
  impl_ = new Impl(resolution);
}

EulerSolver::~EulerSolver() { delete impl_; }

double EulerSolver::max_velocity(const SpectralState& state) {
  if (state.resolution != resolution_) throw std::invalid_argument("EulerSolver: resolution mismatch");
  return impl_->rhs(impl_->compact(state.omega), impl_->k1);
}

SpectralState EulerSolver::step(const SpectralState& state, double dt) {
  if (state.resolution != resolution_) throw std::invalid_argument("EulerSolver: resolution mismatch");
  if (!(dt > 0.0) || !std::isfinite(dt)) throw StepSizeError("euler_step: dt must be positive");
  std::vector<cplx> w = impl_->compact(state.omega);
  const double umax = impl_->rhs(w, impl_->k1);
  if (dt * umax > 0.5 / resolution_)
    throw StepSizeError("euler_step: dt * max|u| = " + std::to_string(dt * umax) + " exceeds half a cell (" +
                        std::to_string(0.5 / resolution_) + ")");
  impl_->rk4_from_k1(w, dt);
  SpectralState out;
  out.resolution = resolution_;
  out.omega = impl_->expand(w);
  out.t = state.t + dt;
  return out;
}

double max_velocity(const SpectralState& state) {
  EulerSolver solver(state.resolution);
  return solver.max_velocity(state);
}

SpectralState euler_step(const SpectralState& state, double dt) {
  thread_local std::map<int, std::unique_ptr<EulerSolver>> cache;
  auto& solver = cache[state.resolution];
  if (!solver) solver = std::make_unique<EulerSolver>(state.resolution);
  return solver->step(state, dt);
}

PatchRun run_patch(const SpectralState& initial, double T, double output_interval, double cfl) {
  if (!(T > 0.0)) throw std::invalid_argument("run_patch: T must be positive");
  if (!(cfl > 0.0 && cfl <= 0.5)) throw std::invalid_argument("run_patch: cfl must lie in (0, 0.5]");
  if (output_interval < 0.0) throw std::invalid_argument("run_patch: negative output interval");
  EulerSolver solver(initial.resolution);
  EulerSolver::Impl& s = *solver.impl_;
  const double interval = output_interval > 0.0 ? output_interval : T;
  PatchRun run;
  SpectralState first = make_state(initial.omega, initial.resolution, 0.0);
  std::vector<cplx> w = s.compact(first.omega);
  run.states.push_back(std::move(first));
  double t = 0.0;
  long out_index = 1;
  while (t < T - 1e-14 * std::max(1.0, T)) {
    const double target = std::min(T, out_index * interval);
    const double umax = s.rhs(w, s.k1);
    double dt = target - t;
    if (umax > 0.0) dt = std::min(dt, cfl / (initial.resolution * umax));
    s.rk4_from_k1(w, dt);
    t = (dt == target - t) ? target : t + dt;
    ++run.steps;
    if (t == target) {
      SpectralState st;
      st.resolution = initial.resolution;
      st.omega = s.expand(w);
      st.t = t;
      run.states.push_back(std::move(st));
      ++out_index;
    }
  }
  return run;
}

namespace {

double vortex_pairing(const VortexConfig& c, const TrigPoly& phi) {
  double acc = 0.0;
  for (int i = 0; i < c.size(); ++i) acc += c.xi[i] * phi.value(c.x[i]);
  return acc * c.scale();
}

void check_aligned(const PatchRun& patch, const Trajectory& vortices) {
  if (patch.states.size() != vortices.times.size())
    throw std::invalid_argument("compare_observables: runs have different numbers of output times");
  for (std::size_t k = 0; k < patch.states.size(); ++k)
    if (std::abs(patch.states[k].t - vortices.times[k]) > 1e-12 * std::max(1.0, std::abs(vortices.times[k])))
      throw std::invalid_argument("compare_observables: output times differ");
}

}  // namespace

std::vector<double> compare_observables(const PatchRun& patch, const Trajectory& vortices,
                                        const std::vector<TrigPoly>& phis) {
  check_aligned(patch, vortices);
  std::vector<double> gap(phis.size(), 0.0);
  for (std::size_t k = 0; k < patch.states.size(); ++k)
    for (std::size_t p = 0; p < phis.size(); ++p)
      gap[p] = std::max(gap[p], std::abs(pair(patch.states[k].omega, phis[p]) -
                                         vortex_pairing(vortices.states[k], phis[p])));
  return gap;
}

void write_observables_csv(std::ostream& out, double radius, const PatchRun& patch, const Trajectory& vortices,
                           const std::vector<TrigPoly>& phis, bool header) {
  check_aligned(patch, vortices);
  if (header) out << "r_b,t,phi_index,patch,vortex\n";
  out << std::setprecision(17);
  for (std::size_t k = 0; k < patch.states.size(); ++k)
    for (std::size_t p = 0; p < phis.size(); ++p)
      out << radius << ',' << patch.states[k].t << ',' << p << ',' << pair(patch.states[k].omega, phis[p]) << ','
          << vortex_pairing(vortices.states[k], phis[p]) << '\n';
}

}  // namespace wnlab

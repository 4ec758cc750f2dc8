#include "wnlab/vortex.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <random>
#include <sstream>

#include "wnlab/parallel.hpp"
#include "wnlab/random.hpp"

namespace wnlab {

namespace {

std::string collapse_message(int i, int j, double time, double distance) {
  std::ostringstream s;
  s << "vortex collapse: pair (" << i << ", " << j << ") at distance " << distance << " at t = " << time;
  return s.str();
}

// Sorting by x1 limits the search to pairs already close in that coordinate;
// the torus wrap is handled by also comparing the two ends of the order.
bool has_pair_within(const VortexConfig& c, double r) {
  const int n = c.size();
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](int a, int b) { return c.x[a].x < c.x[b].x; });
  for (int a = 0; a < n; ++a) {
    for (int b = a + 1; b < n && c.x[order[b]].x - c.x[order[a]].x < r; ++b)
      if (torus_distance(c.x[order[a]], c.x[order[b]]) < r) return true;
    for (int b = n - 1; b > a && c.x[order[a]].x + 1.0 - c.x[order[b]].x < r; --b)
      if (torus_distance(c.x[order[a]], c.x[order[b]]) < r) return true;
  }
  return false;
}

}  // namespace

CollapseError::CollapseError(int i_, int j_, double time_, double distance_)
    : std::runtime_error(collapse_message(i_, j_, time_, distance_)), i(i_), j(j_), time(time_), distance(distance_) {}

StepBudgetError::StepBudgetError(double time_, long steps_)
    : std::runtime_error("integrate: step budget of " + std::to_string(steps_) + " exhausted at t = " +
                         std::to_string(time_)),
      time(time_),
      steps(steps_) {}

VortexConfig sample_ensemble(int n, std::uint64_t master, std::uint64_t index, int* redraws) {
  if (n < 1) throw std::invalid_argument("sample_ensemble: N must be positive");
  Rng rng = make_rng(master, index);
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int count = 0;
  while (true) {
    VortexConfig c;
    c.xi.resize(n);
    c.x.resize(n);
    for (int i = 0; i < n; ++i) c.xi[i] = g(rng);
    for (int i = 0; i < n; ++i) c.x[i] = {u(rng), u(rng)};
    if (!has_pair_within(c, 1e-12)) {
      if (redraws) *redraws = count;
      return c;
    }
    ++count;
  }
}

double min_separation(const VortexConfig& config) {
  double d = std::numeric_limits<double>::infinity();
  const int n = config.size();
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) d = std::min(d, torus_distance(config.x[i], config.x[j]));
  return d;
}

namespace {

// Pair loop over (possibly unwrapped) positions; each K is evaluated once and
// applied with opposite signs, which keeps sum xi_i v_i = 0 to rounding.
void velocities(const KernelEvaluator& kernel, const std::vector<double>& xi, const std::vector<Vec2>& x, double d_min,
                double time, std::vector<Vec2>& v) {
  const int n = static_cast<int>(xi.size());
  const double s = 1.0 / std::sqrt(static_cast<double>(n));
  v.assign(n, Vec2{});
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const Vec2 d = min_image(x[i] - x[j]);
      const double dist = norm(d);
      if (dist < d_min) throw CollapseError(i, j, time, dist);
      const Vec2 k = kernel.K(d);
      v[i] += (xi[j] * s) * k;
      v[j] -= (xi[i] * s) * k;
    }
}

}  // namespace

std::vector<Vec2> rhs(const KernelEvaluator& kernel, const VortexConfig& config, double d_min, double time) {
  std::vector<Vec2> v;
  velocities(kernel, config.xi, config.x, d_min, time, v);
  return v;
}

double interaction_energy(const KernelEvaluator& kernel, const VortexConfig& config) {
  const int n = config.size();
  double e = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) e += config.xi[i] * config.xi[j] * kernel.G(config.x[i] - config.x[j]);
  return e / n;
}

Vec2 linear_impulse(const std::vector<double>& xi, const std::vector<Vec2>& unwrapped) {
  Vec2 p;
  for (std::size_t i = 0; i < xi.size(); ++i) p += xi[i] * unwrapped[i];
  return (1.0 / std::sqrt(static_cast<double>(xi.size()))) * p;
}

namespace {

struct Recorder {
  const std::map<std::string, Observer>& observers;
  Trajectory& traj;
  const std::vector<double>& xi;

  void record(double t, const std::vector<Vec2>& lift) {
    VortexConfig c{xi, lift};
    for (auto& p : c.x) p = wrap_unit(p);
    for (const auto& [name, fn] : observers) traj.observables[name].push_back(fn(c));
    traj.times.push_back(t);
    traj.states.push_back(std::move(c));
    traj.unwrapped.push_back(lift);
  }
};

void axpy(std::vector<Vec2>& out, const std::vector<Vec2>& x, double a, const std::vector<Vec2>& v) {
  out.resize(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] + a * v[i];
}

}  // namespace

Trajectory integrate(const KernelEvaluator& kernel, const VortexConfig& config, double T, const IntegratorSpec& spec,
                     const std::map<std::string, Observer>& observers) {
  if (!(T >= 0.0)) throw std::invalid_argument("integrate: T must be non-negative");
  if (!(spec.dt > 0.0) || !(spec.d_min > 0.0)) throw std::invalid_argument("integrate: dt and d_min must be positive");
  if (config.xi.size() != config.x.size() || config.xi.empty())
    throw std::invalid_argument("integrate: intensities and positions must match and be non-empty");

  Trajectory traj;
  Recorder rec{observers, traj, config.xi};
  std::vector<Vec2> x = config.x;
  const std::vector<double>& xi = config.xi;
  rec.record(0.0, x);

  std::vector<Vec2> k1, k2, k3, k4, k5, k6, k7, tmp;

  if (spec.scheme == Scheme::RK4) {
    const long steps = std::lround(T / spec.dt);
    if (std::abs(steps * spec.dt - T) > 1e-9 * std::max(1.0, T))
      throw std::invalid_argument("integrate: T must be a multiple of dt for RK4");
    long stride = 1;
    if (spec.output_interval > 0.0) {
      stride = std::lround(spec.output_interval / spec.dt);
      if (stride < 1 || std::abs(stride * spec.dt - spec.output_interval) > 1e-9 * spec.output_interval)
        throw std::invalid_argument("integrate: output interval must be a multiple of dt");
    }
    const double h = spec.dt;
    for (long s = 0; s < steps; ++s) {
      const double t = s * h;
      velocities(kernel, xi, x, spec.d_min, t, k1);
      axpy(tmp, x, 0.5 * h, k1);
      velocities(kernel, xi, tmp, spec.d_min, t + 0.5 * h, k2);
      axpy(tmp, x, 0.5 * h, k2);
      velocities(kernel, xi, tmp, spec.d_min, t + 0.5 * h, k3);
      axpy(tmp, x, h, k3);
      velocities(kernel, xi, tmp, spec.d_min, t + h, k4);
      for (std::size_t i = 0; i < x.size(); ++i) x[i] += (h / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
      ++traj.steps;
      if ((s + 1) % stride == 0 || s + 1 == steps) rec.record((s + 1) * h, x);
    }
    return traj;
  }

  // Dormand-Prince 5(4), steps clipped to land on the output grid.
  if (!(spec.tolerance > 0.0)) throw std::invalid_argument("integrate: tolerance must be positive");
  const double interval = spec.output_interval > 0.0 ? spec.output_interval : T;
  static constexpr double a21 = 1.0 / 5, a31 = 3.0 / 40, a32 = 9.0 / 40, a41 = 44.0 / 45, a42 = -56.0 / 15,
                          a43 = 32.0 / 9, a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                          a54 = -212.0 / 729, a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                          a64 = 49.0 / 176, a65 = -5103.0 / 18656, b1 = 35.0 / 384, b3 = 500.0 / 1113,
                          b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84, e1 = 71.0 / 57600,
                          e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200, e6 = 22.0 / 525,
                          e7 = -1.0 / 40;
  const std::size_t n = x.size();
  double t = 0.0;
  double h = spec.dt;
  velocities(kernel, xi, x, spec.d_min, t, k1);
  std::vector<Vec2> xn(n);
  long out_index = 1;
  while (t < T - 1e-14 * std::max(1.0, T)) {
    const double target = std::min(T, out_index * interval);
    const double step = std::min(h, target - t);
    auto stage = [&](std::vector<Vec2>& k, double c, std::initializer_list<std::pair<double, const std::vector<Vec2>*>> terms) {
      tmp = x;
      for (const auto& [a, kv] : terms)
        for (std::size_t i = 0; i < n; ++i) tmp[i] += (step * a) * (*kv)[i];
      velocities(kernel, xi, tmp, spec.d_min, t + c * step, k);
    };
    stage(k2, 1.0 / 5, {{a21, &k1}});
    stage(k3, 3.0 / 10, {{a31, &k1}, {a32, &k2}});
    stage(k4, 4.0 / 5, {{a41, &k1}, {a42, &k2}, {a43, &k3}});
    stage(k5, 8.0 / 9, {{a51, &k1}, {a52, &k2}, {a53, &k3}, {a54, &k4}});
    stage(k6, 1.0, {{a61, &k1}, {a62, &k2}, {a63, &k3}, {a64, &k4}, {a65, &k5}});
    for (std::size_t i = 0; i < n; ++i)
      xn[i] = x[i] + step * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] + b6 * k6[i]);
    velocities(kernel, xi, xn, spec.d_min, t + step, k7);
    double err = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const Vec2 e = step * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
      err = std::max({err, std::abs(e.x), std::abs(e.y)});
    }
    const double ratio = err / spec.tolerance;
    if (ratio <= 1.0) {
      t = (step == target - t) ? target : t + step;
      x.swap(xn);
      k1.swap(k7);
      ++traj.steps;
      if (t == target) {
        rec.record(t, x);
        ++out_index;
      }
    } else {
      ++traj.rejected_steps;
    }
    const double factor = ratio == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(ratio, -0.2), 0.2, 5.0);
    // a clipped step says nothing about the natural step length
    if (!(ratio <= 1.0 && step < h)) h = step * factor;
    if (h < 1e-14) throw CollapseError(-1, -1, t, min_separation({xi, x}));
    if (spec.max_steps > 0 && traj.steps + traj.rejected_steps >= spec.max_steps &&
        t < T - 1e-14 * std::max(1.0, T))
      throw StepBudgetError(t, traj.steps + traj.rejected_steps);
  }
  return traj;
}

EnsembleTrajectories integrate_ensemble(const KernelEvaluator& kernel, int n, long samples, std::uint64_t master,
                                        double T, const IntegratorSpec& spec, int workers) {
  enum class Outcome { kept, collapsed, over_budget };
  struct Member {
    Outcome outcome = Outcome::kept;
    Trajectory traj;
  };
  std::vector<Member> runs = parallel_map<Member>(
      static_cast<std::size_t>(samples),
      [&](std::size_t k) {
        Member m;
        try {
          m.traj = integrate(kernel, sample_ensemble(n, master, k), T, spec);
        } catch (const CollapseError&) {
          m.outcome = Outcome::collapsed;
        } catch (const StepBudgetError&) {
          m.outcome = Outcome::over_budget;
        }
        return m;
      },
      workers);
  EnsembleTrajectories out;
  for (std::size_t k = 0; k < runs.size(); ++k) {
    switch (runs[k].outcome) {
      case Outcome::kept:
        out.trajectories.push_back(std::move(runs[k].traj));
        out.indices.push_back(k);
        break;
      case Outcome::collapsed: ++out.collapsed; break;
      case Outcome::over_budget: ++out.over_budget; break;
    }
  }
  return out;
}

void write_trajectory_csv(std::ostream& out, const Trajectory& traj, int sample_id, bool header) {
  if (header) out << "sample_id,t,i,xi,x1,x2\n";
  out << std::setprecision(17);
  for (std::size_t k = 0; k < traj.times.size(); ++k) {
    const VortexConfig& c = traj.states[k];
    for (int i = 0; i < c.size(); ++i)
      out << sample_id << ',' << traj.times[k] << ',' << i << ',' << c.xi[i] << ',' << c.x[i].x << ',' << c.x[i].y << '\n';
  }
}

}  // namespace wnlab

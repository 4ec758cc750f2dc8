#pragma once

// Random point-vortex ensembles and the vortex ODE
//   dX_i/dt = sum_j (xi_j / sqrt N) K(X_i - X_j),  K(0) = 0.

#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "wnlab/kernel.hpp"

namespace wnlab {

/// Intensities are stored unscaled; the 1/sqrt(N) factor is applied by every
/// consumer.
struct VortexConfig {
  std::vector<double> xi;
  std::vector<Vec2> x;

  int size() const { return static_cast<int>(xi.size()); }
  double scale() const { return 1.0 / std::sqrt(static_cast<double>(xi.size())); }
};

/// Thrown when two vortices come closer than the collapse threshold.
class CollapseError : public std::runtime_error {
 public:
  CollapseError(int i, int j, double time, double distance);
  int i, j;
  double time, distance;
};

/// Thrown when an RK45 run exhausts IntegratorSpec::max_steps.
class StepBudgetError : public std::runtime_error {
 public:
  StepBudgetError(double time, long steps);
  double time;
  long steps;
};

/// xi_i ~ N(0,1), X_i ~ Unif(T^2), independent; re-drawn while the minimum
/// separation is below 1e-12 (the number of re-draws is reported).
VortexConfig sample_ensemble(int n, std::uint64_t master, std::uint64_t index, int* redraws = nullptr);

/// Minimum torus distance over pairs; +infinity for N < 2.
double min_separation(const VortexConfig& config);

/// Velocities sum_{j != i} (xi_j / sqrt N) K(X_i - X_j). Throws CollapseError
/// (time field set to `time`) when a pair is closer than d_min.
std::vector<Vec2> rhs(const KernelEvaluator& kernel, const VortexConfig& config, double d_min = 1e-6, double time = 0.0);

/// (1/2N) sum_{i != j} xi_i xi_j G(X_i - X_j). Throws SingularityError on
/// coincident points.
double interaction_energy(const KernelEvaluator& kernel, const VortexConfig& config);

/// sum_i xi_i X_i / sqrt N over unwrapped positions.
Vec2 linear_impulse(const std::vector<double>& xi, const std::vector<Vec2>& unwrapped);

enum class Scheme { RK4, RK45 };

struct IntegratorSpec {
  Scheme scheme = Scheme::RK4;
  /// Fixed step (RK4) or initial step (RK45).
  double dt = 1e-3;
  /// Per-step absolute error target for RK45.
  double tolerance = 1e-9;
  double d_min = 1e-6;
  /// Spacing of recorded states; 0 records every RK4 step. For RK4 it must
  /// be a multiple of dt.
  double output_interval = 0.0;
  /// RK45 only: accepted plus rejected steps allowed before StepBudgetError;
  /// 0 is unlimited.
  long max_steps = 0;
};

using Observer = std::function<double(const VortexConfig&)>;

struct Trajectory {
  std::vector<double> times;
  std::vector<VortexConfig> states;             // wrapped to [0,1)^2
  std::vector<std::vector<Vec2>> unwrapped;     // real-plane lifts
  std::map<std::string, std::vector<double>> observables;
  long steps = 0;
  long rejected_steps = 0;
};

/// Integrates to time T on the unwrapped lift. Throws CollapseError if any
/// pair gets closer than spec.d_min at any stage evaluation.
Trajectory integrate(const KernelEvaluator& kernel, const VortexConfig& config, double T, const IntegratorSpec& spec,
                     const std::map<std::string, Observer>& observers = {});

/// Trajectories of ensemble members 0..samples-1 under `master`. Members
/// whose run collapses or exhausts spec.max_steps are dropped and counted.
struct EnsembleTrajectories {
  std::vector<Trajectory> trajectories;  // kept members, in index order
  std::vector<std::uint64_t> indices;    // their ensemble indices
  long collapsed = 0;
  long over_budget = 0;

  long total() const { return static_cast<long>(trajectories.size()) + collapsed + over_budget; }
  double rejection_rate() const { return total() ? static_cast<double>(collapsed + over_budget) / total() : 0.0; }
};

EnsembleTrajectories integrate_ensemble(const KernelEvaluator& kernel, int n, long samples, std::uint64_t master,
                                        double T, const IntegratorSpec& spec, int workers = 0);

/// Rows (sample_id, t, i, xi, x1, x2); header written when requested.
void write_trajectory_csv(std::ostream& out, const Trajectory& traj, int sample_id, bool header);

}  // namespace wnlab

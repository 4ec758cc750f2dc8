#pragma once

// Pseudospectral 2D Euler solver in vorticity form and the blob (patch)
// regularization of point-vortex configurations.

#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "wnlab/spectrum.hpp"
#include "wnlab/vortex.hpp"

namespace wnlab {

class ResolutionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// CFL violation: dt * max|u| above half a grid cell.
class StepSizeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Largest |n|_inf kept at resolution R by the 2/3 rule. Products of two
/// retained fields alias only outside the retained box.
inline int dealiased_cutoff(int resolution) { return (resolution - 1) / 3; }

/// Vorticity on an R x R grid, stored as its modes |n|_inf <= dealiased_cutoff(R)
/// (everything above is zero by construction).
struct SpectralState {
  int resolution = 0;
  FourierField omega;
  double t = 0.0;
};

/// Truncates `omega` to the dealiased box of R, a power of two >= 8.
SpectralState make_state(const FourierField& omega, int resolution, double t = 0.0);

/// Blob of radius r_b: the unit-mass bump mollifier scaled to support radius r_b.
struct PatchSpec {
  double radius = 0.05;

  /// Throws ResolutionError unless 2 / R <= radius < 1/2.
  void validate(int resolution) const;
  /// Fourier coefficient of the blob at mode n.
  double blob_hat(const Mode& n) const;
};

/// omega = sum_i (xi_i / sqrt N) blob(x - X_i), built mode by mode, so the
/// mean mode is sum xi_i / sqrt N exactly.
SpectralState patch_from_vortices(const VortexConfig& config, const PatchSpec& spec, int resolution);

/// Velocity on the grid, max over grid points of |u|.
double max_velocity(const SpectralState& state);

/// 1/2 int |u|^2
double energy(const SpectralState& state);
/// int omega^2
double enstrophy(const SpectralState& state);

struct PatchRun;

/// Holds FFT plans and work arrays for one resolution; not shared between
/// threads.
class EulerSolver {
 public:
  explicit EulerSolver(int resolution);
  ~EulerSolver();
  EulerSolver(const EulerSolver&) = delete;
  EulerSolver& operator=(const EulerSolver&) = delete;

  int resolution() const { return resolution_; }

  /// One RK4 step of d_t omega = -u . grad omega. Throws StepSizeError if
  /// dt * max|u| > 0.5 / R at the start of the step.
  SpectralState step(const SpectralState& state, double dt);
  double max_velocity(const SpectralState& state);

 private:
  friend PatchRun run_patch(const SpectralState&, double, double, double);
  struct Impl;
  int resolution_;
  Impl* impl_;
};

/// Single step with a per-thread solver cached by resolution.
SpectralState euler_step(const SpectralState& state, double dt);

struct PatchRun {
  std::vector<SpectralState> states;  // at t = 0 and each output time
  long steps = 0;
};

/// Integrates to T with dt = cfl / (R max|u|) re-chosen each step and clipped
/// to land on multiples of output_interval (0 records only 0 and T).
PatchRun run_patch(const SpectralState& initial, double T, double output_interval, double cfl = 0.2);

/// Per phi, sup over output times of |<omega_t^patch, phi> - <omega_t^N, phi>|.
/// Throws std::invalid_argument unless both runs share their output times.
std::vector<double> compare_observables(const PatchRun& patch, const Trajectory& vortices,
                                        const std::vector<TrigPoly>& phis);

/// Rows (r_b, t, phi_index, patch, vortex).
void write_observables_csv(std::ostream& out, double radius, const PatchRun& patch, const Trajectory& vortices,
                           const std::vector<TrigPoly>& phis, bool header);

}  // namespace wnlab

#pragma once

// Monte Carlo and quadrature estimators for the identities satisfied by
// white noise and random point vortices.

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "wnlab/kernel.hpp"
#include "wnlab/spectrum.hpp"
#include "wnlab/vortex.hpp"

namespace wnlab {

/// One gated (or reported-only) estimate. pass is |estimate - target| <=
/// tolerance when a target exists, estimate <= tolerance otherwise.
struct EstimatorReport {
  std::string estimator;
  std::string params;
  double estimate = 0.0;
  double std_error = 0.0;
  std::optional<double> target;
  double tolerance = 0.0;
  bool gated = true;
  bool pass = false;
  nlohmann::json extra = nlohmann::json::object();

  /// Recomputes pass from the fields above.
  void decide();
};

nlohmann::json to_json(const EstimatorReport& report);
/// Columns estimator, params, estimate, stderr, target, pass.
void write_reports_csv(std::ostream& out, const std::vector<EstimatorReport>& reports);

struct SampleStats {
  long count = 0;
  double mean = 0.0;
  double variance = 0.0;  // unbiased for unit weights
  double std_error = 0.0;
};

/// Self-normalized weighted mean with the delta-method standard error
/// sqrt(sum w^2 (v - m)^2) / sum w * sqrt(S / (S - 1)). Null weights mean 1;
/// an all-ones vector gives bit-identical results. Sums are pairwise.
SampleStats sample_stats(const std::vector<double>& values, const std::vector<double>* weights = nullptr);

/// Report for E[values] = target, gated at k standard errors.
EstimatorReport mean_report(std::string estimator, std::string params, const std::vector<double>& values, double target,
                            double k_sigma, const std::vector<double>* weights = nullptr);

// ---------------------------------------------------------------------------
// Point-vortex functionals

/// <omega^N, phi> = N^-1/2 sum xi_i phi(X_i).
double linear_statistic(const VortexConfig& config, const TrigPoly& phi);

/// (1/N) sum_{i,j} xi_i xi_j f(X_i, X_j), diagonal included.
double quadratic_moment(const VortexConfig& config, const std::function<double(const Vec2&, const Vec2&)>& f);

/// f(x, y) = sum_r a_r(x) b_r(y).
using FactoredKernel = std::vector<std::pair<TrigPoly, TrigPoly>>;
/// Same value as the pair sum, in O(N) per rank term.
double quadratic_moment(const VortexConfig& config, const FactoredKernel& f);

/// E[quadratic_moment^p] under the product law of N(0,1) intensities and
/// uniform positions, as a polynomial in 1/N: value(N) = sum_k c_k N^-k.
struct MomentExpansion {
  std::vector<double> coefficients;
  double operator()(int n) const;
  /// The N -> infinity value c_0.
  double limit() const { return coefficients.empty() ? 0.0 : coefficients[0]; }
};

/// Enumerates index-coincidence patterns (set partitions of the 2p indices
/// into even blocks); each contributes (N)_blocks / N^p prod E[xi^|B|] times
/// an integral over one point per block, done by the trapezoid rule on a
/// `quadrature` x `quadrature` grid per point (exact for trigonometric f of
/// degree below it). p <= 2.
MomentExpansion point_vortex_moment_expansion(const std::function<double(const Vec2&, const Vec2&)>& f, int p,
                                              int quadrature = 16);
double point_vortex_moment_oracle(int n, const std::function<double(const Vec2&, const Vec2&)>& f, int p,
                                  int quadrature = 16);

/// <omega^N (x) omega^N, H_phi^eps> = (1/N) sum_{i != j} xi_i xi_j H(X_i, X_j).
/// eps = 0 uses K itself.
double h_phi_functional(const KernelEvaluator& kernel, const VortexConfig& config, const TrigPoly& phi, double eps);

/// sup_k |<w_tk, phi> - <w_0, phi> - int_0^tk <w (x) w, H_phi^eps> ds| with the
/// running integral by cumulative Simpson on the (uniform) output grid.
/// Throws std::invalid_argument if eps > 0 reaches the trajectory's minimum
/// separation over its recorded states.
double weak_vorticity_residual(const KernelEvaluator& kernel, const Trajectory& traj, const TrigPoly& phi, double eps);

// ---------------------------------------------------------------------------
// Cauchy diagnostic for the cut-off nonlinearity

/// The difference functional Q = <w (x) w, H_phi^{eps_n} - H_phi^{eps_m}>.
/// For a truncated field it is evaluated exactly in Fourier space:
///   Q = sum_c sum_a dK_c^(a) w^(a) sum_r g_c^(r) w^(-a-r),  g_c = d_c phi.
class CauchyFunctional {
 public:
  CauchyFunctional(const KernelEvaluator& kernel, const TrigPoly& phi, double eps_n, double eps_m, int cutoff,
                   const CutoffProfile& profile = {});

  int cutoff() const { return cutoff_; }
  double operator()(const FourierField& omega) const;
  /// Direct pair sum over vortices, with H evaluated in real space.
  double operator()(const VortexConfig& config) const;

  /// Var Q for white noise truncated at the cutoff: 2 sum_{a,b in box} |F_s(a,b)|^2.
  double truncated_variance() const;
  /// 2 ||H^n - H^m||^2 over T^2 x T^2 (no truncation).
  double full_variance() const;

 private:
  const KernelEvaluator* kernel_;
  TrigPoly phi_;
  double eps_n_, eps_m_;
  int cutoff_;
  CutoffProfile profile_;
  std::array<FourierField, 2> dk_;
  struct GradTerm {
    Mode r;
    cplx g1, g2;
  };
  std::vector<GradTerm> grad_;
};

/// Sample variance of the difference functional against its target:
/// truncated_variance for white noise, (1 - 1/N) full_variance for vortices.
/// Passes when the relative gap is at most rel_tol. Throws
/// InsufficientSamplesError below 100 samples.
EstimatorReport cauchy_diagnostic(const CauchyFunctional& functional, const std::vector<double>& samples,
                                  double target, double rel_tol, std::string params);
EstimatorReport cauchy_diagnostic_white_noise(const CauchyFunctional& functional, long samples, std::uint64_t master,
                                              int workers = 0, double rel_tol = 0.1);
EstimatorReport cauchy_diagnostic_vortices(const CauchyFunctional& functional, int n, long samples,
                                           std::uint64_t master, int workers = 0, double rel_tol = 0.1);

// ---------------------------------------------------------------------------
// Stationarity and CLT

/// Per mode 0 < |n|_inf <= max_mode (half lattice): modulus of the empirical
/// position mode vs 4 / sqrt(NS); then corr(xi_i, phi(X_i)) vs 4 standard
/// errors for each phi.
std::vector<EstimatorReport> stationarity_test(const std::vector<VortexConfig>& states, int max_mode,
                                               const std::vector<TrigPoly>& phis, const std::string& params);

/// Empirical covariance E<w,phi><w,psi> vs <phi,psi>, gated at k_sigma.
EstimatorReport covariance_report(const std::vector<VortexConfig>& states, const TrigPoly& phi, const TrigPoly& psi,
                                  double k_sigma, const std::string& params,
                                  const std::vector<double>* weights = nullptr);

/// Exact excess kurtosis of <omega_0^N, phi>: 3 (int phi^4 - (int phi^2)^2) /
/// (N (int phi^2)^2), integrals by the trapezoid rule (exact for the degree).
double clt_kurtosis_target(const TrigPoly& phi, int n);

/// Variance vs ||phi||^2 and excess kurtosis vs its finite-N target, both
/// gated at k_sigma delta-method standard errors.
std::vector<EstimatorReport> clt_test(const std::vector<double>& values, const TrigPoly& phi, int n, double k_sigma);

// ---------------------------------------------------------------------------
// rho-modified ensembles

/// rho0(w) = exp(-sum_k (<w, phi_k> - c_k)^2 / (2 s_k^2)), a bounded cylinder
/// density. Pairings are exact on the point-vortex embedding for any cutoff
/// covering the phi_k.
struct CylinderDensity {
  std::vector<TrigPoly> phis;
  std::vector<double> centers;
  std::vector<double> widths;

  void validate() const;
  double operator()(const VortexConfig& config) const;
  double operator()(const FourierField& field) const;
};

struct WeightedEnsemble {
  std::vector<VortexConfig> members;
  std::vector<double> weights;  // mean 1
  double mean_density = 0.0;    // empirical 1 / C_N
};

/// Weights rho0(T_N config) / mean. Throws std::domain_error if all vanish.
WeightedEnsemble rho_weights(std::vector<VortexConfig> members, const CylinderDensity& rho);

/// E[rho0(omega_0^N)] for a one-statistic density, via the characteristic
/// function: (s / sqrt(2 pi)) int exp(-s^2 u^2 / 2) cos(u c) psi(u / sqrt N)^N du,
/// psi(v) = int exp(-v^2 phi(x)^2 / 2) dx. n = 0 gives the white-noise limit.
double rho_mean_oracle(const CylinderDensity& rho, int n);

/// F(t, w) = sum_i f_i(<w, phi_1>, ..., <w, phi_n>) g_i(t), g_i(T) = 0.
struct CylinderFunctional {
  struct Outer {
    std::function<double(const std::vector<double>&)> value;
    std::function<std::vector<double>(const std::vector<double>&)> gradient;
    std::string name;

    /// tanh(a x_j)
    static Outer tanh_of(int j, double a);
    /// x_j / sqrt(1 + x_j^2)
    static Outer rational_sigmoid(int j);
    /// tanh(x_j) tanh(x_k)
    static Outer tanh_product(int j, int k);
    /// constant c
    static Outer constant(double c);
  };
  struct TimeFactor {
    std::function<double(double)> g;
    std::function<double(double)> dg;
    /// T - t
    static TimeFactor linear(double T);
    /// cos(pi t / (2T))
    static TimeFactor cosine(double T);
  };

  std::vector<TrigPoly> phis;
  std::vector<Outer> outer;
  std::vector<TimeFactor> time;
  double T = 1.0;

  /// Throws std::invalid_argument unless sizes match and every g_i(T) = 0.
  void validate() const;
};

/// Per-path residual int_0^T [d_t F + sum_ij d_j f_i g_i <w (x) w, H_phi_j^eps>] dt
/// + F(0, w_0) by Simpson on the output grid, then the weighted mean with its
/// standard error (target 0, gated at k_sigma). Output grids must be uniform
/// with an even number of intervals ending at F.T.
EstimatorReport continuity_residual(const KernelEvaluator& kernel, const std::vector<Trajectory>& trajectories,
                                    const std::vector<double>* weights, const CylinderFunctional& F, double eps,
                                    double k_sigma, const std::string& params, int workers = 0);

/// max over dyadic lags h in {1/R, ..., 1/2} along both axes of
/// max_x |psi(x + h) - psi(x)| / h^0.1. Reported only.
double holder_modulus(const GridField& grid);

}  // namespace wnlab

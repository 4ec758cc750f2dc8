#include "wnlab/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>
#include <stdexcept>

#include "wnlab/noise.hpp"
#include "wnlab/parallel.hpp"
#include "wnlab/quadrature.hpp"

namespace wnlab {

void EstimatorReport::decide() {
  if (!gated) {
    pass = true;
    return;
  }
  if (!std::isfinite(estimate)) {
    pass = false;
    return;
  }
  pass = target ? std::abs(estimate - *target) <= tolerance : estimate <= tolerance;
}

nlohmann::json to_json(const EstimatorReport& r) {
  nlohmann::json j{{"estimator", r.estimator}, {"params", r.params},       {"estimate", r.estimate},
                   {"stderr", r.std_error},    {"tolerance", r.tolerance}, {"gated", r.gated},
                   {"pass", r.pass}};
  j["target"] = r.target ? nlohmann::json(*r.target) : nlohmann::json(nullptr);
  if (!r.extra.empty()) j["extra"] = r.extra;
  return j;
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

void write_reports_csv(std::ostream& out, const std::vector<EstimatorReport>& reports) {
  out << "estimator,params,estimate,stderr,target,pass\n";
  out << std::setprecision(17);
  for (const auto& r : reports) {
    out << csv_field(r.estimator) << ',' << csv_field(r.params) << ',' << r.estimate << ',' << r.std_error << ',';
    if (r.target) out << *r.target;
    out << ',' << (r.pass ? "true" : "false") << '\n';
  }
}

SampleStats sample_stats(const std::vector<double>& values, const std::vector<double>* weights) {
  const std::size_t n = values.size();
  if (weights && weights->size() != n) throw std::invalid_argument("sample_stats: weight count mismatch");
  SampleStats s;
  s.count = static_cast<long>(n);
  if (n == 0) return s;
  auto w = [&](std::size_t i) { return weights ? (*weights)[i] : 1.0; };
  std::vector<double> buf(n);
  for (std::size_t i = 0; i < n; ++i) buf[i] = w(i);
  const double wsum = tree_sum(buf);
  if (!(wsum > 0.0)) throw std::domain_error("sample_stats: weights sum to zero");
  for (std::size_t i = 0; i < n; ++i) buf[i] = w(i) * values[i];
  s.mean = tree_sum(buf) / wsum;
  if (n < 2) return s;
  const double bessel = static_cast<double>(n) / static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i) buf[i] = w(i) * (values[i] - s.mean) * (values[i] - s.mean);
  s.variance = tree_sum(buf) / wsum * bessel;
  for (std::size_t i = 0; i < n; ++i) buf[i] *= w(i);
  s.std_error = std::sqrt(tree_sum(buf) * bessel) / wsum;
  return s;
}

EstimatorReport mean_report(std::string estimator, std::string params, const std::vector<double>& values, double target,
                            double k_sigma, const std::vector<double>* weights) {
  const SampleStats s = sample_stats(values, weights);
  EstimatorReport r;
  r.estimator = std::move(estimator);
  r.params = std::move(params);
  r.estimate = s.mean;
  r.std_error = s.std_error;
  r.target = target;
  r.tolerance = k_sigma * s.std_error;
  r.extra["samples"] = s.count;
  r.extra["k_sigma"] = k_sigma;
  r.decide();
  return r;
}

// ---------------------------------------------------------------------------

double linear_statistic(const VortexConfig& config, const TrigPoly& phi) {
  double s = 0.0;
  for (int i = 0; i < config.size(); ++i) s += config.xi[i] * phi.value(config.x[i]);
  return s * config.scale();
}

double quadratic_moment(const VortexConfig& config, const std::function<double(const Vec2&, const Vec2&)>& f) {
  double s = 0.0;
  for (int i = 0; i < config.size(); ++i)
    for (int j = 0; j < config.size(); ++j) s += config.xi[i] * config.xi[j] * f(config.x[i], config.x[j]);
  return s / config.size();
}

double quadratic_moment(const VortexConfig& config, const FactoredKernel& f) {
  double s = 0.0;
  for (const auto& [a, b] : f) {
    double sa = 0.0, sb = 0.0;
    for (int i = 0; i < config.size(); ++i) {
      sa += config.xi[i] * a.value(config.x[i]);
      sb += config.xi[i] * b.value(config.x[i]);
    }
    s += sa * sb;
  }
  return s / config.size();
}

double MomentExpansion::operator()(int n) const {
  double s = 0.0, inv = 1.0;
  for (double c : coefficients) {
    s += c * inv;
    inv /= n;
  }
  return s;
}

namespace {

// Set partitions of {0..n-1} as restricted growth strings.
void set_partitions(int n, std::vector<int>& rgs, int pos, int blocks, std::vector<std::vector<int>>& out) {
  if (pos == n) {
    out.push_back(rgs);
    return;
  }
  for (int b = 0; b <= blocks; ++b) {
    rgs[pos] = b;
    set_partitions(n, rgs, pos + 1, std::max(blocks, b + 1), out);
  }
}

double double_factorial_odd(int m) {  // (m - 1)!! for even m
  double r = 1.0;
  for (int k = m - 1; k > 1; k -= 2) r *= k;
  return r;
}

}  // namespace

MomentExpansion point_vortex_moment_expansion(const std::function<double(const Vec2&, const Vec2&)>& f, int p,
                                              int quadrature) {
  if (p > 2) throw UnsupportedError("point_vortex_moment_oracle: p > 2 is not supported");
  if (p < 1 || quadrature < 1) throw std::invalid_argument("point_vortex_moment_oracle: bad p or quadrature");
  const int q = quadrature, pts = q * q;
  std::vector<Vec2> grid(pts);
  for (int a = 0; a < q; ++a)
    for (int b = 0; b < q; ++b) grid[a * q + b] = {static_cast<double>(a) / q, static_cast<double>(b) / q};
  std::vector<double> table(static_cast<std::size_t>(pts) * pts);
  for (int i = 0; i < pts; ++i)
    for (int j = 0; j < pts; ++j) table[static_cast<std::size_t>(i) * pts + j] = f(grid[i], grid[j]);
  auto F = [&](int i, int j) { return table[static_cast<std::size_t>(i) * pts + j]; };

  const int legs = 2 * p;
  std::vector<int> rgs(legs, 0);
  std::vector<std::vector<int>> parts;
  set_partitions(legs, rgs, 0, 0, parts);

  MomentExpansion e;
  e.coefficients.assign(p + 1, 0.0);
  for (const auto& part : parts) {
    const int blocks = *std::max_element(part.begin(), part.end()) + 1;
    std::vector<int> sizes(blocks, 0);
    for (int b : part) ++sizes[b];
    if (std::any_of(sizes.begin(), sizes.end(), [](int s) { return s % 2 != 0; })) continue;
    double moment = 1.0;
    for (int s : sizes) moment *= double_factorial_odd(s);

    // one grid point per block
    double integral = 0.0;
    std::vector<int> at(blocks, 0);
    long combos = 1;
    for (int b = 0; b < blocks; ++b) combos *= pts;
    for (long c = 0; c < combos; ++c) {
      long rest = c;
      for (int b = 0; b < blocks; ++b) {
        at[b] = static_cast<int>(rest % pts);
        rest /= pts;
      }
      double prod = 1.0;
      for (int r = 0; r < p; ++r) prod *= F(at[part[2 * r]], at[part[2 * r + 1]]);
      integral += prod;
    }
    integral /= static_cast<double>(combos);

    // (N)_blocks = sum_j a_j N^j, contributes a_j N^(j - p)
    std::vector<double> poly{1.0};
    for (int k = 0; k < blocks; ++k) {
      std::vector<double> next(poly.size() + 1, 0.0);
      for (std::size_t j = 0; j < poly.size(); ++j) {
        next[j + 1] += poly[j];
        next[j] -= k * poly[j];
      }
      poly = next;
    }
    for (std::size_t j = 0; j < poly.size(); ++j) {
      if (poly[j] == 0.0) continue;
      e.coefficients[p - static_cast<int>(j)] += poly[j] * moment * integral;
    }
  }
  return e;
}

double point_vortex_moment_oracle(int n, const std::function<double(const Vec2&, const Vec2&)>& f, int p,
                                  int quadrature) {
  if (n < 1) throw std::invalid_argument("point_vortex_moment_oracle: N must be positive");
  return point_vortex_moment_expansion(f, p, quadrature)(n);
}

double h_phi_functional(const KernelEvaluator& kernel, const VortexConfig& config, const TrigPoly& phi, double eps) {
  const int n = config.size();
  std::vector<Vec2> grad(n);
  for (int i = 0; i < n; ++i) grad[i] = phi.gradient(config.x[i]);
  double s = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const Vec2 d = config.x[i] - config.x[j];
      const Vec2 k = eps == 0.0 ? kernel.K(d) : cutoff_K_eps(kernel, d, eps);
      s += config.xi[i] * config.xi[j] * 0.5 * dot(k, grad[i] - grad[j]);
    }
  // each unordered pair appears twice in the i != j sum
  return 2.0 * s / n;
}

namespace {

double uniform_step(const std::vector<double>& times, const char* who) {
  if (times.size() < 2) throw std::invalid_argument(std::string(who) + ": need at least two output times");
  const double h = times[1] - times[0];
  for (std::size_t k = 0; k < times.size(); ++k)
    if (std::abs(times[k] - times[0] - k * h) > 1e-9 * std::max(1.0, times.back()))
      throw std::invalid_argument(std::string(who) + ": output grid must be uniform");
  return h;
}

void check_cutoff_below_separation(const Trajectory& traj, double eps, const char* who) {
  if (eps < 0.0) throw std::invalid_argument(std::string(who) + ": eps must be non-negative");
  if (eps == 0.0) return;
  double sep = std::numeric_limits<double>::infinity();
  for (const auto& s : traj.states) sep = std::min(sep, min_separation(s));
  if (eps >= sep) {
    std::ostringstream m;
    m << who << ": eps = " << eps << " reaches the minimum separation " << sep;
    throw std::invalid_argument(m.str());
  }
}

}  // namespace

double weak_vorticity_residual(const KernelEvaluator& kernel, const Trajectory& traj, const TrigPoly& phi, double eps) {
  const double h = uniform_step(traj.times, "weak_vorticity_residual");
  check_cutoff_below_separation(traj, eps, "weak_vorticity_residual");
  const std::size_t n = traj.states.size();
  std::vector<double> lin(n), drift(n);
  for (std::size_t k = 0; k < n; ++k) {
    lin[k] = linear_statistic(traj.states[k], phi);
    drift[k] = h_phi_functional(kernel, traj.states[k], phi, eps);
  }
  const std::vector<double> integral = cumulative_simpson(drift, h);
  double worst = 0.0;
  for (std::size_t k = 0; k < n; ++k) worst = std::max(worst, std::abs(lin[k] - lin[0] - integral[k]));
  return worst;
}

// ---------------------------------------------------------------------------

CauchyFunctional::CauchyFunctional(const KernelEvaluator& kernel, const TrigPoly& phi, double eps_n, double eps_m,
                                   int cutoff, const CutoffProfile& profile)
    : kernel_(&kernel), phi_(phi), eps_n_(eps_n), eps_m_(eps_m), cutoff_(cutoff), profile_(profile) {
  dk_ = cutoff_difference_spectrum(kernel, eps_n, eps_m, cutoff, profile);
  for (const auto& [r, c] : phi.coefficients()) {
    if (r == Mode{0, 0} || c == cplx{}) continue;
    const cplx i2pi{0.0, kTwoPi};
    grad_.push_back({r, i2pi * static_cast<double>(r.n1) * c, i2pi * static_cast<double>(r.n2) * c});
  }
}

double CauchyFunctional::operator()(const FourierField& omega) const {
  if (omega.cutoff() > cutoff_) throw std::invalid_argument("CauchyFunctional: field cutoff exceeds the spectrum");
  const int m = omega.cutoff();
  cplx total{};
  for (int a1 = -m; a1 <= m; ++a1)
    for (int a2 = -m; a2 <= m; ++a2) {
      const Mode a{a1, a2};
      const cplx w = omega(a);
      if (w == cplx{}) continue;
      const cplx k1 = dk_[0](a), k2 = dk_[1](a);
      cplx inner{};
      for (const GradTerm& g : grad_) {
        const cplx wb = omega(Mode{-a1 - g.r.n1, -a2 - g.r.n2});
        if (wb == cplx{}) continue;
        inner += (k1 * g.g1 + k2 * g.g2) * wb;
      }
      total += w * inner;
    }
  return total.real();
}

double CauchyFunctional::operator()(const VortexConfig& config) const {
  const int n = config.size();
  const double reach = std::max(eps_n_, eps_m_) * profile_.radius;
  std::vector<Vec2> grad(n);
  for (int i = 0; i < n; ++i) grad[i] = phi_.gradient(config.x[i]);
  double s = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const Vec2 d = min_image(config.x[i] - config.x[j]);
      if (norm(d) >= reach) continue;
      const Vec2 dk = cutoff_K_eps(*kernel_, d, eps_n_, profile_) - cutoff_K_eps(*kernel_, d, eps_m_, profile_);
      s += config.xi[i] * config.xi[j] * 0.5 * dot(dk, grad[i] - grad[j]);
    }
  return 2.0 * s / n;
}

double CauchyFunctional::truncated_variance() const {
  const int m = cutoff_;
  double s = 0.0;
  for (int a1 = -m; a1 <= m; ++a1)
    for (int a2 = -m; a2 <= m; ++a2) {
      const Mode a{a1, a2};
      for (const GradTerm& g : grad_) {
        const Mode b{-a1 - g.r.n1, -a2 - g.r.n2};
        if (b.sup_norm() > m) continue;
        const cplx fs = 0.5 * (g.g1 * (dk_[0](a) + dk_[0](b)) + g.g2 * (dk_[1](a) + dk_[1](b)));
        s += std::norm(fs);
      }
    }
  return 2.0 * s;
}

double CauchyFunctional::full_variance() const {
  const double d = h_l2_distance(*kernel_, phi_, eps_n_, eps_m_, profile_);
  return 2.0 * d * d;
}

EstimatorReport cauchy_diagnostic(const CauchyFunctional& functional, const std::vector<double>& samples,
                                  double target, double rel_tol, std::string params) {
  if (samples.size() < 100) throw InsufficientSamplesError("cauchy_diagnostic: at least 100 samples are required");
  const SampleStats s = sample_stats(samples);
  std::vector<double> dev4(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) dev4[i] = std::pow(samples[i] - s.mean, 4);
  const double m4 = tree_sum(dev4) / samples.size();
  EstimatorReport r;
  r.estimator = "cauchy_diagnostic";
  r.params = std::move(params);
  r.estimate = s.variance;
  r.std_error = std::sqrt(std::max(0.0, m4 - s.variance * s.variance) / samples.size());
  r.target = target;
  r.tolerance = rel_tol * target;
  r.extra["samples"] = s.count;
  r.extra["mean"] = s.mean;
  r.extra["cutoff"] = functional.cutoff();
  r.extra["relative_tolerance"] = rel_tol;
  r.decide();
  return r;
}

EstimatorReport cauchy_diagnostic_white_noise(const CauchyFunctional& functional, long samples, std::uint64_t master,
                                              int workers, double rel_tol) {
  const int m = functional.cutoff();
  const auto values = parallel_map<double>(
      samples, [&](std::size_t k) { return functional(sample_white_noise(m, master, k)); }, workers);
  const double truncated = functional.truncated_variance();
  const double full = functional.full_variance();
  std::ostringstream p;
  p << "white_noise M=" << m;
  EstimatorReport r = cauchy_diagnostic(functional, values, truncated, rel_tol, p.str());
  r.extra["full_target"] = full;
  r.extra["truncation_bias"] = full - truncated;
  return r;
}

EstimatorReport cauchy_diagnostic_vortices(const CauchyFunctional& functional, int n, long samples,
                                           std::uint64_t master, int workers, double rel_tol) {
  const auto values = parallel_map<double>(
      samples, [&](std::size_t k) { return functional(sample_ensemble(n, master, k)); }, workers);
  const double full = functional.full_variance();
  std::ostringstream p;
  p << "point_vortices N=" << n;
  // only i != j pairs carry Delta H, and there are N (N - 1) ordered ones
  EstimatorReport r = cauchy_diagnostic(functional, values, (1.0 - 1.0 / n) * full, rel_tol, p.str());
  r.extra["full_target"] = full;
  return r;
}

// ---------------------------------------------------------------------------

std::vector<EstimatorReport> stationarity_test(const std::vector<VortexConfig>& states, int max_mode,
                                               const std::vector<TrigPoly>& phis, const std::string& params) {
  long total = 0;
  for (const auto& s : states) total += s.size();
  if (total == 0) throw InsufficientSamplesError("stationarity_test: empty ensemble");
  const double tol = 4.0 / std::sqrt(static_cast<double>(total));
  std::vector<EstimatorReport> out;
  for (int a = 0; a <= max_mode; ++a)
    for (int b = -max_mode; b <= max_mode; ++b) {
      const Mode n{a, b};
      if (!(n == Mode{0, 0}) && !in_half_lattice(n)) continue;
      double re = 0.0, im = 0.0;
      for (const auto& s : states)
        for (const Vec2& x : s.x) {
          const double ph = -kTwoPi * (n.n1 * x.x + n.n2 * x.y);
          re += std::cos(ph);
          im += std::sin(ph);
        }
      EstimatorReport r;
      r.estimator = "position_mode";
      r.params = params + " n=(" + std::to_string(n.n1) + "," + std::to_string(n.n2) + ")";
      r.estimate = std::hypot(re, im) / total;
      r.std_error = 1.0 / std::sqrt(static_cast<double>(total));
      r.target = n == Mode{0, 0} ? 1.0 : 0.0;
      r.tolerance = n == Mode{0, 0} ? 0.0 : tol;
      r.decide();
      out.push_back(std::move(r));
    }
  for (std::size_t k = 0; k < phis.size(); ++k) {
    std::vector<double> u, v;
    u.reserve(total);
    v.reserve(total);
    for (const auto& s : states)
      for (int i = 0; i < s.size(); ++i) {
        u.push_back(s.xi[i]);
        v.push_back(phis[k].value(s.x[i]));
      }
    const SampleStats su = sample_stats(u), sv = sample_stats(v);
    std::vector<double> prod(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) prod[i] = (u[i] - su.mean) * (v[i] - sv.mean);
    const double cov = tree_sum(prod) / (u.size() - 1);
    EstimatorReport r;
    r.estimator = "intensity_position_correlation";
    r.params = params + " phi#" + std::to_string(k);
    r.estimate = cov / std::sqrt(su.variance * sv.variance);
    r.std_error = 1.0 / std::sqrt(static_cast<double>(total));
    r.target = 0.0;
    r.tolerance = 4.0 * r.std_error;
    r.decide();
    out.push_back(std::move(r));
  }
  return out;
}

EstimatorReport covariance_report(const std::vector<VortexConfig>& states, const TrigPoly& phi, const TrigPoly& psi,
                                  double k_sigma, const std::string& params, const std::vector<double>* weights) {
  std::vector<double> v(states.size());
  for (std::size_t k = 0; k < states.size(); ++k)
    v[k] = linear_statistic(states[k], phi) * linear_statistic(states[k], psi);
  return mean_report("covariance", params, v, phi.l2_inner(psi), k_sigma, weights);
}

namespace {

// Trapezoid mean over the torus, exact for trigonometric polynomials of
// degree below q.
double torus_mean(const std::function<double(const Vec2&)>& f, int q) {
  double s = 0.0;
  for (int a = 0; a < q; ++a)
    for (int b = 0; b < q; ++b) s += f({static_cast<double>(a) / q, static_cast<double>(b) / q});
  return s / (static_cast<double>(q) * q);
}

}  // namespace

double clt_kurtosis_target(const TrigPoly& phi, int n) {
  const int q = 4 * phi.degree() + 4;
  const double m2 = torus_mean([&](const Vec2& x) { return std::pow(phi.value(x), 2); }, q);
  const double m4 = torus_mean([&](const Vec2& x) { return std::pow(phi.value(x), 4); }, q);
  if (!(m2 > 0.0)) throw std::invalid_argument("clt_kurtosis_target: phi must be non-zero");
  return 3.0 * (m4 - m2 * m2) / (n * m2 * m2);
}

std::vector<EstimatorReport> clt_test(const std::vector<double>& values, const TrigPoly& phi, int n, double k_sigma) {
  if (values.size() < 100) throw InsufficientSamplesError("clt_test: at least 100 samples are required");
  const std::size_t s = values.size();
  const SampleStats st = sample_stats(values);
  std::vector<double> d2(s), d4(s);
  for (std::size_t i = 0; i < s; ++i) {
    const double d = values[i] - st.mean;
    d2[i] = d * d;
    d4[i] = d2[i] * d2[i];
  }
  const double m2 = tree_sum(d2) / s, m4 = tree_sum(d4) / s;
  const std::string params = "N=" + std::to_string(n);

  EstimatorReport var;
  var.estimator = "clt_variance";
  var.params = params;
  var.estimate = st.variance;
  var.std_error = std::sqrt(std::max(0.0, m4 - m2 * m2) / s);
  var.target = phi.l2_norm_squared();
  var.tolerance = k_sigma * var.std_error;
  var.decide();

  // influence function of m4 / m2^2 - 3
  std::vector<double> infl(s);
  for (std::size_t i = 0; i < s; ++i) infl[i] = (d4[i] - m4) / (m2 * m2) - 2.0 * m4 * (d2[i] - m2) / (m2 * m2 * m2);
  const SampleStats si = sample_stats(infl);
  EstimatorReport kurt;
  kurt.estimator = "clt_excess_kurtosis";
  kurt.params = params;
  kurt.estimate = m4 / (m2 * m2) - 3.0;
  kurt.std_error = std::sqrt(si.variance / s);
  kurt.target = clt_kurtosis_target(phi, n);
  kurt.tolerance = k_sigma * kurt.std_error;
  kurt.decide();
  return {var, kurt};
}

// ---------------------------------------------------------------------------

void CylinderDensity::validate() const {
  if (phis.size() != centers.size() || phis.size() != widths.size())
    throw std::invalid_argument("CylinderDensity: phis, centers and widths must have equal length");
  for (double w : widths)
    if (!(w > 0.0) || !std::isfinite(w)) throw std::invalid_argument("CylinderDensity: widths must be positive");
}

namespace {

double gaussian_bump(const std::vector<double>& stats, const CylinderDensity& rho) {
  double e = 0.0;
  for (std::size_t k = 0; k < stats.size(); ++k) {
    const double z = (stats[k] - rho.centers[k]) / rho.widths[k];
    e += 0.5 * z * z;
  }
  return std::exp(-e);
}

}  // namespace

double CylinderDensity::operator()(const VortexConfig& config) const {
  std::vector<double> s(phis.size());
  for (std::size_t k = 0; k < phis.size(); ++k) s[k] = linear_statistic(config, phis[k]);
  return gaussian_bump(s, *this);
}

double CylinderDensity::operator()(const FourierField& field) const {
  std::vector<double> s(phis.size());
  for (std::size_t k = 0; k < phis.size(); ++k) s[k] = pair(field, phis[k]);
  return gaussian_bump(s, *this);
}

WeightedEnsemble rho_weights(std::vector<VortexConfig> members, const CylinderDensity& rho) {
  rho.validate();
  WeightedEnsemble e;
  e.weights.resize(members.size());
  for (std::size_t k = 0; k < members.size(); ++k) e.weights[k] = rho(members[k]);
  e.mean_density = members.empty() ? 0.0 : tree_sum(e.weights) / members.size();
  if (!(e.mean_density > 0.0)) throw std::domain_error("rho_weights: density vanishes on the whole ensemble");
  for (double& w : e.weights) w /= e.mean_density;
  e.members = std::move(members);
  return e;
}

double rho_mean_oracle(const CylinderDensity& rho, int n) {
  rho.validate();
  if (rho.phis.size() != 1) throw UnsupportedError("rho_mean_oracle: only one-statistic densities are supported");
  const TrigPoly& phi = rho.phis[0];
  const double s = rho.widths[0], c = rho.centers[0];
  if (n == 0) {
    const double v = s * s + phi.l2_norm_squared();
    return s / std::sqrt(v) * std::exp(-c * c / (2.0 * v));
  }
  if (n < 0) throw std::invalid_argument("rho_mean_oracle: N must be non-negative");
  // phi^2 on a grid fine enough for exp(-v^2 phi^2 / 2) at the largest v used
  const double umax = std::sqrt(2.0 * 42.0) / s;
  const int q = std::max(64, 8 * phi.degree() * static_cast<int>(std::ceil(umax / std::sqrt(n) + 4.0)));
  std::vector<double> sq(static_cast<std::size_t>(q) * q);
  for (int a = 0; a < q; ++a)
    for (int b = 0; b < q; ++b) sq[a * q + b] = std::pow(phi.value({static_cast<double>(a) / q, static_cast<double>(b) / q}), 2);
  auto psi = [&](double v) {
    double t = 0.0;
    for (double x : sq) t += std::exp(-0.5 * v * v * x);
    return t / sq.size();
  };
  const int panels = 16 + static_cast<int>(std::ceil(umax * std::abs(c) / 2.0));
  const QuadratureRule rule = composite_gauss_legendre(16, panels, 0.0, umax);
  double total = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    const double u = rule.nodes[i];
    total += rule.weights[i] * std::exp(-0.5 * s * s * u * u) * std::cos(u * c) * std::pow(psi(u / std::sqrt(n)), n);
  }
  return 2.0 * s / std::sqrt(kTwoPi) * total;
}

// ---------------------------------------------------------------------------

CylinderFunctional::Outer CylinderFunctional::Outer::tanh_of(int j, double a) {
  return {[j, a](const std::vector<double>& x) { return std::tanh(a * x.at(j)); },
          [j, a](const std::vector<double>& x) {
            std::vector<double> g(x.size(), 0.0);
            const double t = std::tanh(a * x.at(j));
            g[j] = a * (1.0 - t * t);
            return g;
          },
          "tanh(" + std::to_string(a) + " x" + std::to_string(j) + ")"};
}

CylinderFunctional::Outer CylinderFunctional::Outer::rational_sigmoid(int j) {
  return {[j](const std::vector<double>& x) { return x.at(j) / std::sqrt(1.0 + x.at(j) * x.at(j)); },
          [j](const std::vector<double>& x) {
            std::vector<double> g(x.size(), 0.0);
            g[j] = std::pow(1.0 + x.at(j) * x.at(j), -1.5);
            return g;
          },
          "x" + std::to_string(j) + "/sqrt(1+x" + std::to_string(j) + "^2)"};
}

CylinderFunctional::Outer CylinderFunctional::Outer::tanh_product(int j, int k) {
  return {[j, k](const std::vector<double>& x) { return std::tanh(x.at(j)) * std::tanh(x.at(k)); },
          [j, k](const std::vector<double>& x) {
            std::vector<double> g(x.size(), 0.0);
            const double tj = std::tanh(x.at(j)), tk = std::tanh(x.at(k));
            g[j] += (1.0 - tj * tj) * tk;
            g[k] += tj * (1.0 - tk * tk);
            return g;
          },
          "tanh(x" + std::to_string(j) + ")tanh(x" + std::to_string(k) + ")"};
}

CylinderFunctional::Outer CylinderFunctional::Outer::constant(double c) {
  return {[c](const std::vector<double>&) { return c; },
          [](const std::vector<double>& x) { return std::vector<double>(x.size(), 0.0); }, std::to_string(c)};
}

CylinderFunctional::TimeFactor CylinderFunctional::TimeFactor::linear(double T) {
  return {[T](double t) { return T - t; }, [](double) { return -1.0; }};
}

CylinderFunctional::TimeFactor CylinderFunctional::TimeFactor::cosine(double T) {
  // written as a sine of (T - t) so that g(T) is exactly 0
  const double w = kPi / (2.0 * T);
  return {[T, w](double t) { return std::sin(w * (T - t)); }, [T, w](double t) { return -w * std::cos(w * (T - t)); }};
}

void CylinderFunctional::validate() const {
  if (outer.size() != time.size() || outer.empty())
    throw std::invalid_argument("CylinderFunctional: need one time factor per outer function");
  if (!(T > 0.0)) throw std::invalid_argument("CylinderFunctional: T must be positive");
  for (const auto& g : time)
    if (g.g(T) != 0.0) throw std::invalid_argument("CylinderFunctional: time factors must vanish at T");
}

EstimatorReport continuity_residual(const KernelEvaluator& kernel, const std::vector<Trajectory>& trajectories,
                                    const std::vector<double>* weights, const CylinderFunctional& F, double eps,
                                    double k_sigma, const std::string& params, int workers) {
  F.validate();
  if (trajectories.empty()) throw InsufficientSamplesError("continuity_residual: empty ensemble");
  const std::size_t nphi = F.phis.size();
  std::vector<double> f0(trajectories.size());
  const auto residuals = parallel_map<double>(
      trajectories.size(),
      [&](std::size_t k) {
        const Trajectory& tr = trajectories[k];
        const double h = uniform_step(tr.times, "continuity_residual");
        if ((tr.times.size() - 1) % 2 != 0 || std::abs(tr.times.back() - F.T) > 1e-9 * F.T || tr.times.front() != 0.0)
          throw std::invalid_argument("continuity_residual: output grid must cover [0, T] with an even interval count");
        check_cutoff_below_separation(tr, eps, "continuity_residual");
        std::vector<double> integrand(tr.times.size());
        double start = 0.0;
        for (std::size_t s = 0; s < tr.times.size(); ++s) {
          const double t = tr.times[s];
          std::vector<double> x(nphi), drift(nphi);
          for (std::size_t j = 0; j < nphi; ++j) {
            x[j] = linear_statistic(tr.states[s], F.phis[j]);
            drift[j] = h_phi_functional(kernel, tr.states[s], F.phis[j], eps);
          }
          double v = 0.0;
          for (std::size_t i = 0; i < F.outer.size(); ++i) {
            v += F.outer[i].value(x) * F.time[i].dg(t);
            const std::vector<double> g = F.outer[i].gradient(x);
            for (std::size_t j = 0; j < nphi; ++j) v += g[j] * F.time[i].g(t) * drift[j];
            if (s == 0) start += F.outer[i].value(x) * F.time[i].g(t);
          }
          integrand[s] = v;
        }
        f0[k] = start;
        return simpson(integrand, h) + start;
      },
      workers);
  EstimatorReport r = mean_report("continuity_residual", params, residuals, 0.0, k_sigma, weights);
  r.extra["mean_F0"] = sample_stats(f0, weights).mean;
  return r;
}

double holder_modulus(const GridField& grid) {
  const int r = grid.resolution();
  double best = 0.0;
  for (int lag = 1; lag <= r / 2; lag *= 2) {
    double worst = 0.0;
    for (int j = 0; j < r; ++j)
      for (int k = 0; k < r; ++k) {
        worst = std::max(worst, std::abs(grid((j + lag) % r, k) - grid(j, k)));
        worst = std::max(worst, std::abs(grid(j, (k + lag) % r) - grid(j, k)));
      }
    best = std::max(best, worst / std::pow(static_cast<double>(lag) / r, 0.1));
  }
  return best;
}

}  // namespace wnlab

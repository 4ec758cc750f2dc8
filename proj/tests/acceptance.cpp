// Acceptance suite: every criterion runs through the experiment runner with a
// pinned configuration, then the reports are checked against tolerances and
// closed-form targets fixed here. One PASS/FAIL line per criterion.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "runner.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double kPi = 3.14159265358979323846;

struct Checks {
  std::vector<std::string> failures;
  void expect(bool ok, const std::string& what) {
    if (!ok) failures.push_back(what);
  }
};

struct Criterion {
  int id;
  std::string title;
  std::string config;
  double budget_seconds;
  std::function<void(const json& reports, Checks&)> check;
};

std::vector<json> named(const json& reports, const std::string& estimator) {
  std::vector<json> out;
  for (const json& r : reports)
    if (r["estimator"] == estimator) out.push_back(r);
  return out;
}

bool close(double a, double b, double rel) { return std::abs(a - b) <= rel * std::max(1.0, std::abs(b)); }

// Each report passed, and its tolerance is k standard errors.
void sigma_gate(const std::vector<json>& rs, double k, Checks& c, const std::string& what) {
  for (const json& r : rs) {
    c.expect(r["pass"].get<bool>(), what + " [" + r["params"].get<std::string>() + "] failed");
    c.expect(close(r["tolerance"].get<double>(), k * r["stderr"].get<double>(), 1e-12),
             what + " tolerance is not " + std::to_string(k) + " stderr");
  }
}

void absolute_gate(const std::vector<json>& rs, double tol, Checks& c, const std::string& what) {
  for (const json& r : rs) {
    c.expect(r["pass"].get<bool>(), what + " [" + r["params"].get<std::string>() + "] failed");
    c.expect(r["tolerance"].get<double>() <= tol, what + " tolerance looser than pinned");
    c.expect(std::abs(r["estimate"].get<double>()) <= tol, what + " estimate above pinned tolerance");
  }
}

// Midpoint rule on a 32 x 32 grid; exact for the low-degree trigonometric
// polynomials used below.
double grid_inner(const std::function<double(double, double)>& f, const std::function<double(double, double)>& g) {
  const int n = 32;
  double s = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double x = (i + 0.5) / n, y = (j + 0.5) / n;
      s += f(x, y) * g(x, y);
    }
  return s / (n * n);
}

std::vector<Criterion> criteria() {
  std::vector<Criterion> cs;

  cs.push_back({1, "covariance identity, N=64, 10^4 samples, 6 pairs",
                "experiment = \"covariance\"\nN = 64\nsamples = 10000\nk_sigma = 4\n"
                "phis = [\"cos(1,0)\", \"sin(1,1)\", \"cos(0,2) + 0.5*sin(1,-1)\"]\n",
                30.0, [](const json& reports, Checks& c) {
                  const std::vector<std::function<double(double, double)>> f{
                      [](double x, double) { return std::cos(2 * kPi * x); },
                      [](double x, double y) { return std::sin(2 * kPi * (x + y)); },
                      [](double x, double y) { return std::cos(4 * kPi * y) + 0.5 * std::sin(2 * kPi * (x - y)); }};
                  const auto rs = named(reports, "covariance");
                  c.expect(rs.size() == 6, "expected 6 covariance reports");
                  sigma_gate(rs, 4.0, c, "covariance");
                  std::size_t k = 0;
                  for (std::size_t i = 0; i < 3; ++i)
                    for (std::size_t j = i; j < 3 && k < rs.size(); ++j, ++k)
                      c.expect(close(rs[k]["target"].get<double>(), grid_inner(f[i], f[j]), 1e-12),
                               "covariance target differs from <phi,psi>");
                }});

  cs.push_back({2, "exact finite-N second moment 2 + 1/N, N in {8,32,128}, 10^5 samples",
                "experiment = \"second_moment\"\nN = [8, 32, 128]\nsamples = 100000\nk_sigma = 4\n"
                "limit_tolerance = 1e-10\n",
                120.0, [](const json& reports, Checks& c) {
                  const auto rs = named(reports, "second_moment");
                  c.expect(rs.size() == 3, "expected 3 second_moment reports");
                  sigma_gate(rs, 4.0, c, "second_moment");
                  const int ns[] = {8, 32, 128};
                  for (std::size_t i = 0; i < rs.size() && i < 3; ++i)
                    c.expect(close(rs[i]["target"].get<double>(), 2.0 + 1.0 / ns[i], 1e-12),
                             "second moment target is not 2 + 1/N");
                  // (int f(x,x))^2 + 2 int int f^2 = 1 + 2 * 1/2 for the shear kernel
                  const auto lim = named(reports, "second_moment_limit");
                  c.expect(lim.size() == 1, "missing second_moment_limit");
                  for (const json& r : lim) {
                    c.expect(r["pass"].get<bool>(), "limit does not match quadrature");
                    c.expect(std::abs(r["estimate"].get<double>() - 2.0) <= 1e-10, "oracle limit is not 2");
                    c.expect(std::abs(r["target"].get<double>() - 2.0) <= 1e-10, "quadrature limit is not 2");
                  }
                }});

  cs.push_back({3, "white-noise corollary, M=64, 10^4 samples",
                "experiment = \"white_noise_corollary\"\nM = 64\nsamples = 10000\nk_sigma = 4\n"
                "kernel_exponent = 1.5\n",
                60.0, [](const json& reports, Checks& c) {
                  // white noise carries the mean mode <w,1> ~ N(0,1), so n = 0 is included
                  double s1 = 0.0, s2 = 0.0;
                  for (int a = -64; a <= 64; ++a)
                    for (int b = -64; b <= 64; ++b) {
                      const double v = std::pow(1.0 + a * a + b * b, -1.5);
                      s1 += v;
                      s2 += v * v;
                    }
                  const auto mean = named(reports, "corollary_mean");
                  const auto var = named(reports, "corollary_variance");
                  c.expect(mean.size() == 1 && var.size() == 1, "expected one mean and one variance report");
                  sigma_gate(mean, 4.0, c, "corollary_mean");
                  sigma_gate(var, 4.0, c, "corollary_variance");
                  for (const json& r : mean) c.expect(close(r["target"].get<double>(), s1, 1e-10), "mean target");
                  for (const json& r : var) c.expect(close(r["target"].get<double>(), 2.0 * s2, 1e-10), "variance target");
                }});

  cs.push_back({4, "Cauchy rate, eps pairs (2^-3,2^-4), (2^-4,2^-5), 10% relative",
                "experiment = \"cauchy_diagnostic\"\neps = [0.125, 0.0625, 0.03125]\n"
                "phi = [\"sin(1,0) + 0.5*cos(1,1)\"]\nM = 48\nsamples = 40000\nrelative_tolerance = 0.1\n"
                "field = \"white_noise\"\n",
                180.0, [](const json& reports, Checks& c) {
                  const auto rs = named(reports, "cauchy_diagnostic");
                  c.expect(rs.size() == 2, "expected 2 cauchy reports");
                  double previous = INFINITY;
                  for (const json& r : rs) {
                    const double target = r["target"].get<double>();
                    c.expect(r["pass"].get<bool>(), "cauchy [" + r["params"].get<std::string>() + "] failed");
                    c.expect(std::abs(r["estimate"].get<double>() - target) <= 0.1 * target, "outside 10%");
                    c.expect(target < previous, "target not strictly decreasing");
                    previous = target;
                  }
                  const auto dec = named(reports, "cauchy_target_decreasing");
                  c.expect(dec.size() == 1 && dec[0]["pass"].get<bool>(), "decreasing gate failed");
                }});

  cs.push_back({5, "weak vorticity residual, N=16, T=1, RK4 dt=1e-3, 3 test functions",
                "experiment = \"weak_vorticity_residual\"\nN = 16\nT = 1\ndt = [0.001, 0.0005, 0.00025]\n"
                "index = 0\neps = 0\nresidual_tolerance = 1e-5\nmin_reduction = 8\n"
                "phis = [\"cos(1,0)\", \"sin(1,2)\", \"cos(2,1) + 0.5*sin(0,1)\"]\n",
                60.0, [](const json& reports, Checks& c) {
                  std::vector<json> coarse;
                  for (const json& r : named(reports, "weak_vorticity_residual"))
                    if (r["params"].get<std::string>().find("dt=0.001 ") != std::string::npos) coarse.push_back(r);
                  c.expect(coarse.size() == 3, "expected 3 residuals at dt=1e-3");
                  absolute_gate(coarse, 1e-5, c, "weak_vorticity_residual");
                  const auto red = named(reports, "weak_vorticity_reduction");
                  c.expect(red.size() == 3, "expected 3 reduction reports");
                  for (const json& r : red) {
                    c.expect(r["pass"].get<bool>(), "reduction [" + r["params"].get<std::string>() + "] failed");
                    c.expect(r["estimate"].get<double>() <= 1.0 / 8.0, "less than 8x reduction");
                  }
                }});

  cs.push_back({6, "conservation, N=32, T=1",
                "experiment = \"conservation\"\nN = 32\nT = 1\nsamples = 1\ntolerance = 1e-11\n"
                "energy_tolerance = 1e-6\nimpulse_tolerance = 1e-8\n",
                30.0, [](const json& reports, Checks& c) {
                  const auto e = named(reports, "energy_drift");
                  const auto p = named(reports, "impulse_drift");
                  c.expect(!e.empty() && e.size() == p.size(), "missing drift reports");
                  absolute_gate(e, 1e-6, c, "energy_drift");
                  absolute_gate(p, 1e-8, c, "impulse_drift");
                }});

  cs.push_back({7, "stationarity, N=16, 10^4 trajectories to T=0.5",
                "experiment = \"stationarity\"\nN = 16\nsamples = 10000\nT = 0.5\nmax_mode = 3\nk_sigma = 4\n"
                "tolerance = 1e-6\noutput_interval = 0.25\nmax_steps = 5000\nphis = [\"cos(1,0)\", \"sin(1,1)\"]\n",
                600.0, [](const json& reports, Checks& c) {
                  const auto modes = named(reports, "position_mode");
                  std::set<std::string> times;
                  for (const json& r : modes) {
                    const std::string p = r["params"].get<std::string>();
                    times.insert(p.substr(p.find("t=")).substr(0, p.substr(p.find("t=")).find(' ')));
                    c.expect(r["pass"].get<bool>(), "position mode [" + p + "] failed");
                    if (p.find("n=(0,0)") != std::string::npos) continue;
                    // stderr is 1/sqrt(NS) over the S accepted trajectories, S >= 99% of 10^4
                    const double se = r["stderr"].get<double>();
                    c.expect(se >= 1.0 / std::sqrt(16.0 * 10000) && se <= 1.0 / std::sqrt(16.0 * 9900),
                             "position stderr is not 1/sqrt(NS)");
                    c.expect(close(r["tolerance"].get<double>(), 4.0 * se, 1e-12), "position tolerance is not 4/sqrt(NS)");
                  }
                  c.expect(times == std::set<std::string>{"t=0", "t=0.25", "t=0.5"}, "position modes not at 0, 0.25, 0.5");
                  std::vector<json> cov;
                  for (const json& r : named(reports, "covariance"))
                    if (r["params"].get<std::string>().find("t=0.5 ") != std::string::npos) cov.push_back(r);
                  c.expect(cov.size() == 3, "expected 3 covariance reports at t=0.5");
                  sigma_gate(cov, 4.0, c, "covariance at t=0.5");
                  for (const json& r : named(reports, "rejection_rate"))
                    c.expect(r["pass"].get<bool>(), "rejection rate above 1%");
                }});

  cs.push_back({8, "CLT excess kurtosis 3/(2N), N in {4,16,64,256}, 10^5 samples",
                "experiment = \"clt\"\nN = [4, 16, 64, 256]\nsamples = 100000\nk_sigma = 4\nphi = [\"cos(1,0)\"]\n",
                120.0, [](const json& reports, Checks& c) {
                  const auto rs = named(reports, "clt_excess_kurtosis");
                  c.expect(rs.size() == 4, "expected 4 kurtosis reports");
                  sigma_gate(rs, 4.0, c, "clt_excess_kurtosis");
                  const int ns[] = {4, 16, 64, 256};
                  for (std::size_t i = 0; i < rs.size() && i < 4; ++i)
                    c.expect(close(rs[i]["target"].get<double>(), 1.5 / ns[i], 1e-12), "kurtosis target is not 3/(2N)");
                }});

  cs.push_back({9, "rho-ensembles: C_N and continuity residual, N=16, T=0.5",
                "experiment = \"rho_ensemble\"\nN = 16\nT = 0.5\ndensity_samples = 100000\nsamples = 1000\n"
                "k_sigma_density = 4\nk_sigma_continuity = 5\ntolerance = 1e-8\noutput_interval = 0.00125\n"
                "max_steps = 5000\nrho_phis = [\"cos(1,0)\"]\nrho_centers = [0.5]\nrho_widths = [1.0]\n"
                "functional_phis = [\"cos(1,0)\", \"sin(1,1)\"]\n",
                600.0, [](const json& reports, Checks& c) {
                  const auto cn = named(reports, "rho_normalization");
                  c.expect(cn.size() == 1, "missing rho_normalization");
                  sigma_gate(cn, 4.0, c, "rho_normalization");
                  const auto res = named(reports, "continuity_residual");
                  c.expect(res.size() == 2, "expected 2 continuity residuals");
                  sigma_gate(res, 5.0, c, "continuity_residual");
                  for (const json& r : res) c.expect(r["target"].get<double>() == 0.0, "continuity target is not 0");
                  for (const json& r : named(reports, "rejection_rate"))
                    c.expect(r["pass"].get<bool>(), "rejection rate above 1%");
                }});

  cs.push_back({10, "patch approximation, dipole, R=256, T=0.3",
                "experiment = \"patch_convergence\"\nR = 256\nT = 0.3\nradii = [0.08, 0.04, 0.02]\n"
                "output_interval = 0.01\ncfl = 0.2\nseparation = 0.2\nconservation_tolerance = 1e-6\n"
                "steady_tolerance = 1e-8\n",
                300.0, [](const json& reports, Checks& c) {
                  const auto gaps = named(reports, "patch_gap");
                  c.expect(gaps.size() == 9, "expected 3 radii x 3 observables");
                  // reports run radius-major; gap[r][phi] = gaps[3 r + phi]
                  for (std::size_t i = 3; i < gaps.size(); ++i)
                    c.expect(gaps[i]["estimate"].get<double>() < gaps[i - 3]["estimate"].get<double>(),
                             "gap not strictly decreasing [" + gaps[i]["params"].get<std::string>() + "]");
                  const auto dec = named(reports, "patch_gap_decreasing");
                  c.expect(dec.size() == 3, "expected 3 decreasing gates");
                  for (const json& r : dec) c.expect(r["pass"].get<bool>(), "decreasing gate failed");
                  c.expect(named(reports, "patch_energy_drift").size() == 3, "expected 3 energy drifts");
                  c.expect(named(reports, "patch_enstrophy_drift").size() == 3, "expected 3 enstrophy drifts");
                  absolute_gate(named(reports, "patch_energy_drift"), 1e-6, c, "patch_energy_drift");
                  absolute_gate(named(reports, "patch_enstrophy_drift"), 1e-6, c, "patch_enstrophy_drift");
                  const auto steady = named(reports, "patch_steady_eigenfunction");
                  c.expect(!steady.empty(), "missing steady eigenfunction check");
                  absolute_gate(steady, 1e-8, c, "patch_steady_eigenfunction");
                }});

  cs.push_back({11, "kernel certification, 64 points",
                "experiment = \"kernel_certification\"\npoints = 64\nslow_sum_tolerance = 1e-8\n"
                "antisymmetry_tolerance = 1e-10\nsingle_mode_tolerance = 1e-10\n",
                30.0, [](const json& reports, Checks& c) {
                  for (const char* name : {"kernel_G_vs_slow_sum", "kernel_K_vs_slow_sum"}) {
                    const auto rs = named(reports, name);
                    c.expect(rs.size() == 1, std::string("missing ") + name);
                    absolute_gate(rs, 1e-8, c, name);
                  }
                  const auto anti = named(reports, "kernel_K_antisymmetry");
                  c.expect(anti.size() == 1, "missing antisymmetry");
                  absolute_gate(anti, 1e-10, c, "kernel_K_antisymmetry");
                  const auto mode = named(reports, "single_mode_biot_savart");
                  c.expect(!mode.empty(), "missing single-mode check");
                  absolute_gate(mode, 1e-10, c, "single_mode_biot_savart");
                }});
  return cs;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p);
  std::stringstream s;
  s << f.rdbuf();
  return s.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance criteria 1-11"};
  std::vector<int> only;
  std::string root = "acceptance_runs";
  bool enforce_budget = true;
  app.add_option("criteria", only, "criterion numbers to run (default all)");
  app.add_option("--output", root, "directory for run outputs");
  app.add_flag("!--no-budget", enforce_budget, "report runtime budgets without gating on them");
  CLI11_PARSE(app, argc, argv);

  const fs::path out_root = fs::absolute(root);
  fs::create_directories(out_root);
  int failed = 0, ran = 0;
  for (const Criterion& c : criteria()) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
    ++ran;
    const fs::path dir = out_root / ("criterion_" + std::to_string(c.id));
    fs::remove_all(dir);
    fs::create_directories(dir);
    const fs::path cfg = dir / "config.toml";
    std::ofstream(cfg) << c.config << "seed = 2026\nworkers = 1\noutput_dir = \"" << (dir / "out").string() << "\"\n";

    Checks checks;
    std::ostringstream out, err;
    const auto start = std::chrono::steady_clock::now();
    const int code = wnlab::cli::run_experiment(cfg.string(), out, err);
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    checks.expect(code == wnlab::cli::kExitPass, "runner exit code " + std::to_string(code));
    if (enforce_budget) checks.expect(seconds < c.budget_seconds, "runtime over budget");
    try {
      const json manifest = json::parse(slurp(dir / "out" / "manifest.json"));
      checks.expect(manifest["status"] == "complete", "manifest not complete");
      checks.expect(manifest.value("all_pass", false), "manifest all_pass is false");
      c.check(json::parse(slurp(dir / "out" / "reports.json")), checks);
    } catch (const std::exception& e) {
      checks.expect(false, std::string("unreadable output: ") + e.what());
    }

    const bool pass = checks.failures.empty();
    if (!pass) ++failed;
    std::printf("criterion %2d %s  %s  (%.1f s, budget %.0f s)\n", c.id, pass ? "PASS" : "FAIL", c.title.c_str(),
                seconds, c.budget_seconds);
    for (const std::string& f : checks.failures) std::printf("    %s\n", f.c_str());
    if (!err.str().empty()) std::printf("%s", err.str().c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %d criteria passed\n", ran - failed, ran);
  return failed == 0 ? 0 : 1;
}

#include "runner.hpp"

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "config.hpp"
#include "experiments.hpp"
#include "wnlab/noise.hpp"
#include "wnlab/spectrum.hpp"

namespace wnlab::cli {

namespace fs = std::filesystem;

namespace {

void write_json(const fs::path& path, const nlohmann::json& j) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream f(tmp);
    if (!f) throw std::runtime_error("cannot write " + tmp.string());
    f << j.dump(2) << '\n';
  }
  fs::rename(tmp, path);
}

fs::path resolve_output(const std::string& dir) {
  const char* root = std::getenv("WNLAB_OUTPUT_ROOT");
  if (root && *root) return fs::path(root) / fs::path(dir).relative_path();
  return fs::path(dir);
}

}  // namespace

int run_experiment(const std::string& config_path, std::ostream& out, std::ostream& err) {
  const auto start = std::chrono::steady_clock::now();
  std::string name;
  PreparedRun run;
  RunContext ctx;
  nlohmann::json manifest;
  fs::path dir;
  try {
    const Config cfg = Config::load(config_path);
    name = cfg.get_string("experiment");
    const ExperimentInfo* info = find_experiment(name);
    if (!info) cfg.fail("experiment", "unknown experiment '" + name + "' (see 'wnlab list')");
    ctx.seed = cfg.get_seed("seed");
    const long workers = cfg.get_int("workers", 1);
    if (workers < 1) cfg.fail("workers", "must be at least 1");
    ctx.workers = static_cast<int>(workers);
    dir = resolve_output(cfg.get_string("output_dir", "runs/" + name));
    run = info->prepare(cfg);
    cfg.reject_unused();
    manifest["config"] = cfg.echo();
  } catch (const ConfigError& e) {
    err << e.what() << '\n';
    return kExitUsage;
  }

  try {
    fs::create_directories(dir);
  } catch (const fs::filesystem_error& e) {
    err << "cannot create output directory " << dir << ": " << e.what() << '\n';
    return kExitUsage;
  }
  ctx.out_dir = dir;
  manifest["experiment"] = name;
  manifest["artifact_version"] = kArtifactVersion;
  manifest["status"] = "running";
  const fs::path manifest_path = dir / "manifest.json";
  write_json(manifest_path, manifest);

  try {
    const KernelEvaluator kernel;
    ctx.kernel = &kernel;
    manifest["kernel_self_test"] = {{"points", kernel.self_test().points},
                                    {"max_error_G", kernel.self_test().max_error_G},
                                    {"max_error_K", kernel.self_test().max_error_K}};
    ExperimentResult result = run(ctx);

    long rejected = 0, total = 0;
    for (const auto& [key, entry] : result.rejections.items()) {
      rejected += entry["rejected"].get<long>();
      total = std::max(total, entry["total"].get<long>());
    }
    if (total > 0) {
      EstimatorReport r;
      r.estimator = "rejection_rate";
      r.params = std::to_string(rejected) + " of " + std::to_string(total);
      r.estimate = static_cast<double>(rejected) / total;
      r.tolerance = 0.01;
      r.decide();
      result.reports.push_back(r);
    }

    {
      std::ofstream csv(dir / "reports.csv");
      write_reports_csv(csv, result.reports);
    }
    nlohmann::json reports = nlohmann::json::array();
    for (const EstimatorReport& r : result.reports) reports.push_back(to_json(r));
    write_json(dir / "reports.json", reports);

    bool all = true;
    nlohmann::json criteria = nlohmann::json::array();
    for (const EstimatorReport& r : result.reports) {
      if (r.gated) all = all && r.pass;
      criteria.push_back({{"estimator", r.estimator}, {"params", r.params}, {"gated", r.gated}, {"pass", r.pass}});
    }
    manifest["rejections"] = result.rejections;
    manifest["criteria"] = criteria;
    manifest["all_pass"] = all;
    manifest["status"] = "complete";
    manifest["wall_clock_seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    write_json(manifest_path, manifest);

    long failed = 0;
    for (const EstimatorReport& r : result.reports)
      if (r.gated && !r.pass) {
        ++failed;
        err << "FAIL " << r.estimator << " [" << r.params << "] estimate " << r.estimate << " target "
            << (r.target ? std::to_string(*r.target) : std::string("-")) << " tolerance " << r.tolerance << '\n';
      }
    out << name << ": " << result.reports.size() << " reports, " << failed << " failed; output in " << dir.string()
        << '\n';
    return all ? kExitPass : kExitFailure;
  } catch (const std::exception& e) {
    manifest["status"] = "failed";
    manifest["error"] = e.what();
    manifest["wall_clock_seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    write_json(manifest_path, manifest);
    err << name << ": " << e.what() << '\n';
    return kExitFailure;
  }
}

void list_experiments(std::ostream& out) {
  out << "Keys accepted by every experiment:\n";
  for (const ConfigKey& k : common_keys())
    out << "  " << k.name << (k.fallback.empty() ? " (required)" : " = " + k.fallback)
        << (k.help.empty() ? "" : "  # " + k.help) << '\n';
  for (const ExperimentInfo& e : registry()) {
    out << '\n' << e.name << "\n  verifies: " << e.verifies << '\n';
    for (const ConfigKey& k : e.keys)
      out << "  " << k.name << " = " << k.fallback << (k.help.empty() ? "" : "  # " + k.help) << '\n';
  }
}

int selftest(std::ostream& out) {
  int failures = 0;
  auto line = [&](const std::string& name, bool ok, const std::string& detail) {
    out << (ok ? "PASS " : "FAIL ") << name << "  " << detail << '\n';
    if (!ok) ++failures;
  };
  try {
    const KernelEvaluator kernel;
    const KernelSelfTest& st = kernel.self_test();
    std::ostringstream d;
    d << st.points << " points, max |dG| " << st.max_error_G << ", max |dK| " << st.max_error_K;
    line("kernel_accuracy", st.max_error_G <= 1e-8 && st.max_error_K <= 1e-8, d.str());
  } catch (const std::exception& e) {
    line("kernel_accuracy", false, e.what());
  }

  const FourierField w = sample_white_noise(6, 1, 0);
  const FourierField back = field_from_json(nlohmann::json::parse(to_json(w).dump()));
  line("fourier_field_json", back.data() == w.data() && back.cutoff() == w.cutoff(), "cutoff 6 white-noise sample");

  const Config cfg = Config::parse("a = 1\nb = \"x # y\"  # comment\nc = [1.5, 2]\nd = true\n", "selftest");
  Config again = Config::parse(
      "a = " + cfg.echo()["a"].dump() + "\nb = " + cfg.echo()["b"].dump() + "\nc = " + cfg.echo()["c"].dump() +
          "\nd = " + cfg.echo()["d"].dump() + "\n",
      "selftest");
  line("config_round_trip", again.echo() == cfg.echo(), cfg.echo().dump());

  EstimatorReport r;
  r.estimator = "e";
  r.params = "a=\"1\", b";
  r.estimate = 0.5;
  r.target = 0.5;
  r.decide();
  std::ostringstream csv;
  write_reports_csv(csv, {r});
  line("report_csv_quoting", csv.str().find("\"a=\"\"1\"\", b\"") != std::string::npos, "embedded quotes and commas");

  const TrigPoly p = parse_trig_poly("cos(1,2) - 0.5*sin(0,1) + 0.25");
  const Vec2 x{0.3, 0.7};
  const double expect = std::cos(kTwoPi * (0.3 + 1.4)) - 0.5 * std::sin(kTwoPi * 0.7) + 0.25;
  line("trig_poly_expression", std::abs(p.value(x) - expect) < 1e-14, "cos(1,2) - 0.5*sin(0,1) + 0.25");
  return failures == 0 ? kExitPass : kExitFailure;
}

}  // namespace wnlab::cli

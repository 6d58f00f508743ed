// Command-line driver: synthetic and CSV-driven experiment runs, the
// small-instance verification checks, and bound reporting for finished runs.
//
// Exit codes: 0 success, 1 config error, 2 data error, 3 numerical failure
// (a failed verification also exits 3).

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "expgraph/errors.hpp"
#include "expgraph/experiment.hpp"
#include "expgraph/verify.hpp"

namespace {

using expgraph::ExperimentConfig;
using expgraph::ExperimentResult;

struct RunFlags {
  std::string config_path;
  std::string out_dir;
  int threads = 0;
  std::uint64_t seed = 0;
  bool out_dir_set = false;
  bool threads_set = false;
  bool seed_set = false;
};

int run_experiment_command(const std::string& required_mode, const RunFlags& flags) {
  ExperimentConfig cfg = expgraph::parse_config(flags.config_path);
  if (cfg.mode != required_mode) {
    throw expgraph::ParameterError("config: mode is '" + cfg.mode +
                                   "' but this subcommand requires mode '" + required_mode + "'");
  }
  if (flags.out_dir_set) cfg.out_dir = flags.out_dir;
  if (flags.threads_set) cfg.threads = flags.threads;
  if (flags.seed_set) cfg.seed = flags.seed;
  cfg.validate();

  const ExperimentResult result = expgraph::run_experiment(cfg);

  int failed = 0;
  int first_code = 0;
  for (const auto& r : result.realizations) {
    if (r.ok) continue;
    failed += 1;
    if (first_code == 0) first_code = r.error_code;
    std::fprintf(stderr, "realization %d (seed %llu) failed: %s\n", r.index,
                 static_cast<unsigned long long>(r.seed), r.error.c_str());
  }
  std::printf("%d/%zu realizations succeeded\n",
              static_cast<int>(result.realizations.size()) - failed, result.realizations.size());
  std::printf("aggregate: %s\nmanifest:  %s\n", result.aggregate_path.c_str(),
              result.manifest_path.c_str());
  return failed > 0 ? first_code : 0;
}

int run_verify_command(const std::optional<std::uint64_t>& seed_override) {
  expgraph::ContractionCheckOptions copt;
  expgraph::TrackingBoundOptions topt;
  if (seed_override) {
    copt.seed0 = *seed_override;
    topt.seed0 = *seed_override + 1000;
  }

  const expgraph::ContractionCheckResult cres = expgraph::contraction_check(copt);
  const bool contraction_ok = cres.pass(0.99);
  std::printf(
      "per-step contraction (n=%ld, T=%ld, %d seeds): rho=%.6f, %ld/%ld steps satisfied, "
      "max excess %.3g -> %s\n",
      static_cast<long>(copt.n), copt.horizon, copt.seeds, cres.rho, cres.checked - cres.violations,
      cres.checked, cres.max_excess, contraction_ok ? "PASS" : "FAIL");

  const expgraph::TrackingBoundResult tres = expgraph::tracking_bound_check(topt);
  std::size_t satisfied = 0;
  for (const auto& s : tres.seeds) {
    satisfied += s.satisfied ? 1 : 0;
    std::printf("  seed %llu: measured %.6g <= bound %.6g ? %s (path %.6g, first %.6g, last %.6g)\n",
                static_cast<unsigned long long>(s.seed), s.measured, s.bound,
                s.satisfied ? "yes" : "NO", s.path_length, s.err_first, s.err_last);
  }
  const bool bound_ok = tres.all_satisfied();
  std::printf("cumulative tracking bound (n0=%ld(+%ld), T=%ld): rho=%.6f, K2=%.4f, %zu/%zu seeds -> %s\n",
              static_cast<long>(topt.n0), static_cast<long>(topt.arrival_count), topt.horizon,
              tres.rho, tres.k2, satisfied, tres.seeds.size(), bound_ok ? "PASS" : "FAIL");

  const bool ok = contraction_ok && bound_ok;
  std::printf("verify: %s\n", ok ? "PASS" : "FAIL");
  return ok ? 0 : 3;
}

int run_bound_command(const std::string& dir) {
  const std::string path = (std::filesystem::path(dir) / "manifest.json").string();
  std::ifstream in(path);
  if (!in) throw expgraph::DataError("bound: cannot open '" + path + "'");
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw expgraph::DataError("bound: invalid manifest JSON: " + std::string(e.what()));
  }
  if (!manifest.contains("tracking_bound")) {
    throw expgraph::DataError(
        "bound: manifest has no tracking-bound section; rerun the experiment with "
        "oracle_stride = 1 and the expanding estimator enabled");
  }
  std::printf("%5s %10s %12s %10s %12s %12s %12s %s\n", "run", "rho", "k1", "k2", "path", "bound",
              "measured", "satisfied");
  for (const auto& b : manifest.at("tracking_bound")) {
    std::printf("%5d %10.6f %12.6g %10.4f %12.6g %12.6g %12.6g %s\n", b.at("index").get<int>(),
                b.at("rho").get<double>(), b.at("k1").get<double>(), b.at("k2").get<double>(),
                b.at("path_length").get<double>(), b.at("bound").get<double>(),
                b.at("measured").get<double>(), b.at("satisfied").get<bool>() ? "yes" : "NO");
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Online topology learning for graphs that gain nodes over time"};
  app.require_subcommand(1);

  RunFlags synth_flags;
  CLI::App* synth = app.add_subcommand("synth", "Run a synthetic-scenario experiment");
  synth->add_option("--config", synth_flags.config_path, "JSON config file (mode 'synth')")
      ->required();
  synth->add_option("--out-dir", synth_flags.out_dir, "Output directory (overrides config)");
  synth->add_option("--threads", synth_flags.threads, "Worker threads (overrides config)");
  synth->add_option("--seed-override", synth_flags.seed, "Base seed (overrides config)");

  RunFlags csv_flags;
  CLI::App* run_csv = app.add_subcommand("run-csv", "Run an experiment on a CSV signal stream");
  run_csv->add_option("--config", csv_flags.config_path, "JSON config file (mode 'csv')")
      ->required();
  run_csv->add_option("--out-dir", csv_flags.out_dir, "Output directory (overrides config)");
  run_csv->add_option("--threads", csv_flags.threads, "Worker threads (overrides config)");
  run_csv->add_option("--seed-override", csv_flags.seed, "Base seed (overrides config)");

  std::uint64_t verify_seed = 0;
  CLI::App* verify =
      app.add_subcommand("verify", "Run the contraction and tracking-bound checks and print pass/fail");
  CLI::Option* verify_seed_opt =
      verify->add_option("--seed-override", verify_seed, "Base seed for the check scenarios");

  std::string bound_dir;
  CLI::App* bound =
      app.add_subcommand("bound", "Print the tracking-bound report of a finished run");
  bound->add_option("--out-dir", bound_dir, "Directory holding manifest.json")->required();

  int rc = 0;
  synth->callback([&] {
    synth_flags.out_dir_set = synth->count("--out-dir") > 0;
    synth_flags.threads_set = synth->count("--threads") > 0;
    synth_flags.seed_set = synth->count("--seed-override") > 0;
    rc = run_experiment_command("synth", synth_flags);
  });
  run_csv->callback([&] {
    csv_flags.out_dir_set = run_csv->count("--out-dir") > 0;
    csv_flags.threads_set = run_csv->count("--threads") > 0;
    csv_flags.seed_set = run_csv->count("--seed-override") > 0;
    rc = run_experiment_command("csv", csv_flags);
  });
  verify->callback([&] {
    std::optional<std::uint64_t> seed;
    if (verify_seed_opt->count() > 0) seed = verify_seed;
    rc = run_verify_command(seed);
  });
  bound->callback([&] { rc = run_bound_command(bound_dir); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;  // CLI misuse is a config error
  } catch (const expgraph::ParameterError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const expgraph::DataError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const expgraph::DimensionError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const expgraph::NumericalError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  } catch (const std::domain_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
  return rc;
}

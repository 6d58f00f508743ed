#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "expgraph/covariance.hpp"
#include "expgraph/errors.hpp"
#include "expgraph/gmrf.hpp"
#include "expgraph/matops.hpp"
#include "expgraph/metrics.hpp"
#include "expgraph/online.hpp"
#include "expgraph/synth.hpp"

namespace expgraph {

/** The four estimators an experiment can dispatch. */
enum class EstimatorKind { Offline, Batch, Dynamic, Expanding };

const char* to_string(EstimatorKind kind);
EstimatorKind estimator_from_string(const std::string& name);

/**
 * Solver/estimator knobs shared by every run.  `eta == 0` means "use the
 * largest admissible step", i.e. epsilon².
 */
struct HyperParams {
  double epsilon = 1.0;
  double sigma = 25.0;
  double eta = 0.0;
  double lambda = 0.0;
  double alpha = 0.0;
  double gamma = 0.9;
  double h = 1.0;
  std::optional<double> h_new;  ///< separate mixing weight for new rows/cols
  int iters_per_step = 1;
  int batch_iters = 10;

  double resolved_eta() const { return eta > 0.0 ? eta : epsilon * epsilon; }
  GmrfParams gmrf() const;
  OnlineOptions online() const;

  /// Throws ParameterError naming the offending field and its bound.
  void validate() const;
};

/**
 * A fully resolved experiment description.  Parsed from a flat JSON object
 * with strict unknown-key rejection; see parse_config.
 */
struct ExperimentConfig {
  std::string mode;  ///< "synth" or "csv"
  std::vector<EstimatorKind> estimators = {EstimatorKind::Expanding};
  HyperParams params;

  // synth mode
  ArrivalSchedule schedule;
  double avg_degree = 4.0;
  double delta = 0.1;
  double rewire_prob = 0.0;
  bool dump_scenarios = false;

  // csv mode
  std::string input_path;
  bool standardize = false;

  // shared
  int realizations = 1;
  std::uint64_t seed = 0;
  std::string out_dir = ".";
  int threads = 1;
  long oracle_stride = 0;  ///< 0 disables the per-step offline reference
  double oracle_tol = 1e-6;
  int oracle_max_iter = 50000;
  bool log_wall_time = false;  ///< off by default so outputs are byte-deterministic

  void validate() const;
};

/// Parse and validate a config file (flat JSON object, strict keys).
ExperimentConfig parse_config(const std::string& path);

/// Same, from an in-memory JSON document (used by tests).
ExperimentConfig parse_config_text(const std::string& text);

/** A signal stream plus the arrival bookkeeping that describes it. */
struct SignalStream {
  std::vector<Vector> signals;  ///< x_1..x_T, dimensions following the schedule
  ArrivalSchedule schedule;
};

/**
 * Read a signal stream from CSV.  Header `t,<name>,<name>,...`; a node's
 * cells are empty before it joins and numeric afterwards; presence must grow
 * left-to-right (column-prefix).  Arrivals are inferred from first-numeric
 * transitions.  With `standardize`, each value is replaced by
 * (x − running mean)/(running sample std) over that node's history so far
 * (0 while fewer than two observations or under zero variance).
 */
SignalStream ingest_csv_stream(const std::string& path, bool standardize = false);

/// Inverse of ingest_csv_stream for unstandardized streams: one row per t,
/// absent nodes as empty cells, 17 significant digits.
void write_stream_csv(const std::string& path, const std::vector<Vector>& signals);

/**
 * The per-step solutions of the regularized maximum-likelihood problem on the
 * masked expanding covariance, computed every `stride` steps.  This is the
 * common reference that nerr_offline compares against for every estimator.
 */
struct OracleSeries {
  long stride = 0;
  std::vector<long> steps;
  std::vector<Matrix> solutions;
};

OracleSeries compute_oracle_series(const SignalStream& stream, const ExperimentConfig& cfg);

/**
 * Run one estimator over one stream.
 *  - Offline:   full solve per step on the masked expanding covariance.
 *  - Batch:     plain sample average of zero-padded signals + `batch_iters`
 *               warm-started proximal-gradient iterations per step.
 *  - Dynamic:   exponentially weighted covariance on the zero-padded signal
 *               (no masks) + the tracked online step.
 *  - Expanding: masked expanding covariance + the tracked online step.
 * `truth` (optional) enables nerr_truth; `oracle` (optional) enables
 * nerr_offline / avg_cum_regret / frob_regret at the oracle steps.
 */
RegretLog run_estimator(EstimatorKind kind, const SignalStream& stream,
                        const ExperimentConfig& cfg,
                        const GroundTruthSequence* truth = nullptr,
                        const OracleSeries* oracle = nullptr);

/** Tracking-bound audit for one realization (filled when oracle_stride == 1). */
struct TheoremBoundReport {
  double rho = 0.0;
  double k1 = 0.0;
  double k2 = 0.0;
  double path_length = 0.0;
  double bound = 0.0;
  double measured = 0.0;
  double err_first = 0.0;
  double err_last = 0.0;
  bool satisfied = false;
};

struct RealizationResult {
  int index = 0;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  int error_code = 0;  ///< 0 ok, else the CLI exit category (1 config, 2 data, 3 numerical)
  std::vector<std::pair<EstimatorKind, RegretLog>> logs;
  std::optional<TheoremBoundReport> bound;
};

struct ExperimentResult {
  std::vector<RealizationResult> realizations;
  std::string aggregate_path;
  std::string manifest_path;
};

/**
 * Execute `realizations` independent runs (seeded seed+i) of every configured
 * estimator.  Writes per-realization CSVs (`<estimator>_r<i>.csv`), an
 * aggregate CSV (`t,estimator,metric,median,p25,p75`), and `manifest.json`
 * into out_dir.  Failures are isolated per realization; output bytes are
 * deterministic given the config (wall-time logging, off by default, is the
 * one nondeterministic opt-in).
 */
ExperimentResult run_experiment(const ExperimentConfig& cfg);

}  // namespace expgraph

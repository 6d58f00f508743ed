#include "expgraph/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <thread>

#include "json.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

namespace expgraph {

namespace {

std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

int classify_error(const std::exception& e) {
  if (dynamic_cast<const ParameterError*>(&e) != nullptr) return 1;
  if (dynamic_cast<const DataError*>(&e) != nullptr) return 2;
  if (dynamic_cast<const DimensionError*>(&e) != nullptr) return 2;
  return 3;
}

}  // namespace

const char* to_string(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::Offline: return "offline";
    case EstimatorKind::Batch: return "batch";
    case EstimatorKind::Dynamic: return "dynamic";
    case EstimatorKind::Expanding: return "expanding";
  }
  return "unknown";
}

EstimatorKind estimator_from_string(const std::string& name) {
  if (name == "offline") return EstimatorKind::Offline;
  if (name == "batch") return EstimatorKind::Batch;
  if (name == "dynamic") return EstimatorKind::Dynamic;
  if (name == "expanding") return EstimatorKind::Expanding;
  throw ParameterError("config: unknown estimator '" + name +
                       "' (expected offline, batch, dynamic or expanding)");
}

GmrfParams HyperParams::gmrf() const {
  GmrfParams p;
  p.epsilon = epsilon;
  p.sigma = sigma;
  p.alpha = alpha;
  p.lambda = lambda;
  return p;
}

OnlineOptions HyperParams::online() const {
  OnlineOptions o;
  o.eta = resolved_eta();
  o.lambda = lambda;
  o.h = h;
  o.h_new = h_new;
  o.iters_per_step = iters_per_step;
  return o;
}

void HyperParams::validate() const {
  gmrf().validate();
  if (eta != 0.0 && !(eta > 0.0 && eta <= epsilon * epsilon)) {
    throw ParameterError("eta must satisfy 0 < eta <= epsilon^2 (gradient step-size bound); got eta = " +
                         fmt17(eta) + " with epsilon^2 = " + fmt17(epsilon * epsilon));
  }
  if (!(gamma >= 0.0 && gamma < 1.0)) {
    throw ParameterError("gamma must lie in [0, 1); got " + fmt17(gamma));
  }
  if (!(h > 0.0 && h <= 1.0)) {
    throw ParameterError("h must lie in (0, 1]; got " + fmt17(h));
  }
  if (h_new && !(*h_new > 0.0 && *h_new <= 1.0)) {
    throw ParameterError("h_new must lie in (0, 1]; got " + fmt17(*h_new));
  }
  if (iters_per_step < 1) {
    throw ParameterError("iters_per_step must be >= 1; got " + std::to_string(iters_per_step));
  }
  if (batch_iters < 1) {
    throw ParameterError("batch_iters must be >= 1; got " + std::to_string(batch_iters));
  }
}

void ExperimentConfig::validate() const {
  if (mode != "synth" && mode != "csv") {
    throw ParameterError("mode must be 'synth' or 'csv'; got '" + mode + "'");
  }
  if (estimators.empty()) throw ParameterError("estimators must not be empty");
  params.validate();
  if (realizations < 1) {
    throw ParameterError("realizations must be >= 1; got " + std::to_string(realizations));
  }
  if (threads < 1) throw ParameterError("threads must be >= 1; got " + std::to_string(threads));
  if (oracle_stride < 0) {
    throw ParameterError("oracle_stride must be >= 0; got " + std::to_string(oracle_stride));
  }
  if (!(oracle_tol > 0.0)) throw ParameterError("oracle_tol must be > 0; got " + fmt17(oracle_tol));
  if (oracle_max_iter < 1) {
    throw ParameterError("oracle_max_iter must be >= 1; got " + std::to_string(oracle_max_iter));
  }
  if (mode == "synth") {
    schedule.validate();
    if (!(avg_degree > 0.0)) throw ParameterError("avg_degree must be > 0; got " + fmt17(avg_degree));
    if (!(delta > 0.0)) throw ParameterError("delta must be > 0; got " + fmt17(delta));
    if (!(rewire_prob >= 0.0 && rewire_prob < 1.0)) {
      throw ParameterError("rewire_prob must lie in [0, 1); got " + fmt17(rewire_prob));
    }
  } else {
    if (input_path.empty()) throw ParameterError("input must be a non-empty path in csv mode");
  }
}

// ---------------------------------------------------------------------------
// Config parsing: flat JSON object, strict unknown-key rejection, every
// violation reported with the field name and its bound.
// ---------------------------------------------------------------------------

namespace {

const std::vector<std::string> kSynthKeys = {"n0",    "horizon",     "arrivals",
                                             "avg_degree", "delta", "rewire_prob",
                                             "dump_scenarios"};
const std::vector<std::string> kCsvKeys = {"input", "standardize"};
const std::vector<std::string> kCommonKeys = {
    "mode",       "estimators",  "epsilon",        "sigma",           "eta",
    "lambda",     "alpha",       "gamma",          "h",               "h_new",
    "iters_per_step", "batch_iters", "realizations", "seed",          "out_dir",
    "threads",    "oracle_stride", "oracle_tol",   "oracle_max_iter", "log_wall_time"};

bool contains(const std::vector<std::string>& v, const std::string& k) {
  return std::find(v.begin(), v.end(), k) != v.end();
}

double need_real(const json& j, const std::string& key) {
  if (!j.at(key).is_number()) throw ParameterError("config: '" + key + "' must be a number");
  return j.at(key).get<double>();
}

long need_int(const json& j, const std::string& key) {
  if (!j.at(key).is_number_integer()) {
    throw ParameterError("config: '" + key + "' must be an integer");
  }
  return j.at(key).get<long>();
}

bool need_bool(const json& j, const std::string& key) {
  if (!j.at(key).is_boolean()) throw ParameterError("config: '" + key + "' must be a boolean");
  return j.at(key).get<bool>();
}

std::string need_string(const json& j, const std::string& key) {
  if (!j.at(key).is_string()) throw ParameterError("config: '" + key + "' must be a string");
  return j.at(key).get<std::string>();
}

ExperimentConfig config_from_json(const json& doc) {
  if (!doc.is_object()) throw ParameterError("config: top level must be a JSON object");

  ExperimentConfig cfg;
  if (!doc.contains("mode")) throw ParameterError("config: missing required key 'mode'");
  cfg.mode = need_string(doc, "mode");
  if (cfg.mode != "synth" && cfg.mode != "csv") {
    throw ParameterError("config: mode must be 'synth' or 'csv'; got '" + cfg.mode + "'");
  }

  for (auto it = doc.begin(); it != doc.end(); ++it) {
    const std::string& key = it.key();
    if (contains(kCommonKeys, key)) continue;
    if (contains(kSynthKeys, key)) {
      if (cfg.mode != "synth") {
        throw ParameterError("config: key '" + key + "' is only valid in synth mode");
      }
      continue;
    }
    if (contains(kCsvKeys, key)) {
      if (cfg.mode != "csv") {
        throw ParameterError("config: key '" + key + "' is only valid in csv mode");
      }
      continue;
    }
    throw ParameterError("config: unknown key '" + key + "'");
  }

  if (doc.contains("estimators")) {
    if (!doc.at("estimators").is_array()) {
      throw ParameterError("config: 'estimators' must be an array of strings");
    }
    cfg.estimators.clear();
    for (const auto& e : doc.at("estimators")) {
      if (!e.is_string()) throw ParameterError("config: 'estimators' must be an array of strings");
      EstimatorKind kind = estimator_from_string(e.get<std::string>());
      for (EstimatorKind seen : cfg.estimators) {
        if (seen == kind) {
          throw ParameterError("config: estimators contains duplicate '" + e.get<std::string>() + "'");
        }
      }
      cfg.estimators.push_back(kind);
    }
    if (cfg.estimators.empty()) throw ParameterError("config: estimators must not be empty");
  }

  if (doc.contains("epsilon")) cfg.params.epsilon = need_real(doc, "epsilon");
  if (doc.contains("sigma")) cfg.params.sigma = need_real(doc, "sigma");
  if (doc.contains("eta")) cfg.params.eta = need_real(doc, "eta");
  if (doc.contains("lambda")) cfg.params.lambda = need_real(doc, "lambda");
  if (doc.contains("alpha")) cfg.params.alpha = need_real(doc, "alpha");
  if (doc.contains("gamma")) cfg.params.gamma = need_real(doc, "gamma");
  if (doc.contains("h")) cfg.params.h = need_real(doc, "h");
  if (doc.contains("h_new")) cfg.params.h_new = need_real(doc, "h_new");
  if (doc.contains("iters_per_step")) {
    cfg.params.iters_per_step = static_cast<int>(need_int(doc, "iters_per_step"));
  }
  if (doc.contains("batch_iters")) {
    cfg.params.batch_iters = static_cast<int>(need_int(doc, "batch_iters"));
  }
  if (doc.contains("realizations")) cfg.realizations = static_cast<int>(need_int(doc, "realizations"));
  if (doc.contains("seed")) {
    const auto& s = doc.at("seed");
    if (!(s.is_number_unsigned() || (s.is_number_integer() && s.get<long long>() >= 0))) {
      throw ParameterError("config: 'seed' must be a nonnegative integer");
    }
    cfg.seed = s.get<std::uint64_t>();
  }
  if (doc.contains("out_dir")) cfg.out_dir = need_string(doc, "out_dir");
  if (doc.contains("threads")) cfg.threads = static_cast<int>(need_int(doc, "threads"));
  if (doc.contains("oracle_stride")) cfg.oracle_stride = need_int(doc, "oracle_stride");
  if (doc.contains("oracle_tol")) cfg.oracle_tol = need_real(doc, "oracle_tol");
  if (doc.contains("oracle_max_iter")) {
    cfg.oracle_max_iter = static_cast<int>(need_int(doc, "oracle_max_iter"));
  }
  if (doc.contains("log_wall_time")) cfg.log_wall_time = need_bool(doc, "log_wall_time");

  if (cfg.mode == "synth") {
    if (!doc.contains("n0")) throw ParameterError("config: missing required key 'n0' (synth mode)");
    if (!doc.contains("horizon")) {
      throw ParameterError("config: missing required key 'horizon' (synth mode)");
    }
    cfg.schedule.n0 = need_int(doc, "n0");
    cfg.schedule.horizon = need_int(doc, "horizon");
    if (doc.contains("arrivals")) {
      const auto& arr = doc.at("arrivals");
      if (!arr.is_array()) {
        throw ParameterError("config: 'arrivals' must be an array of [t, count] integer pairs");
      }
      for (const auto& ev : arr) {
        if (!ev.is_array() || ev.size() != 2 || !ev[0].is_number_integer() ||
            !ev[1].is_number_integer()) {
          throw ParameterError("config: 'arrivals' must be an array of [t, count] integer pairs");
        }
        cfg.schedule.events.push_back({ev[0].get<long>(), ev[1].get<Index>()});
      }
    }
    if (doc.contains("avg_degree")) cfg.avg_degree = need_real(doc, "avg_degree");
    if (doc.contains("delta")) cfg.delta = need_real(doc, "delta");
    if (doc.contains("rewire_prob")) cfg.rewire_prob = need_real(doc, "rewire_prob");
    if (doc.contains("dump_scenarios")) cfg.dump_scenarios = need_bool(doc, "dump_scenarios");
  } else {
    if (!doc.contains("input")) throw ParameterError("config: missing required key 'input' (csv mode)");
    cfg.input_path = need_string(doc, "input");
    if (doc.contains("standardize")) cfg.standardize = need_bool(doc, "standardize");
  }

  try {
    cfg.validate();
  } catch (const ParameterError& e) {
    throw ParameterError(std::string("config: ") + e.what());
  }
  return cfg;
}

}  // namespace

ExperimentConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParameterError("config: cannot open '" + path + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw ParameterError(std::string("config: invalid JSON: ") + e.what());
  }
  return config_from_json(doc);
}

ExperimentConfig parse_config_text(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw ParameterError(std::string("config: invalid JSON: ") + e.what());
  }
  return config_from_json(doc);
}

// ---------------------------------------------------------------------------
// CSV signal streams
// ---------------------------------------------------------------------------

namespace {

std::vector<std::string> split_csv_line(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return fields;
}

double parse_cell(const std::string& cell, long row, const std::string& name) {
  const char* begin = cell.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (end == begin || *end != '\0') {
    throw DataError("csv row " + std::to_string(row) + ": cell for '" + name +
                    "' is not numeric: '" + cell + "'");
  }
  if (!std::isfinite(v)) {
    throw DataError("csv row " + std::to_string(row) + ": cell for '" + name + "' is not finite");
  }
  return v;
}

/// Running mean / sample standard deviation, one per node column.
struct RunningMoments {
  long n = 0;
  double mean = 0.0;
  double m2 = 0.0;

  double absorb_then_standardize(double x) {
    n += 1;
    const double d = x - mean;
    mean += d / static_cast<double>(n);
    m2 += d * (x - mean);
    if (n < 2) return 0.0;
    const double var = m2 / static_cast<double>(n - 1);
    if (var <= 0.0) return 0.0;
    return (x - mean) / std::sqrt(var);
  }
};

}  // namespace

SignalStream ingest_csv_stream(const std::string& path, bool standardize) {
  std::ifstream in(path);
  if (!in) throw DataError("csv: cannot open '" + path + "'");

  std::string line;
  if (!std::getline(in, line)) throw DataError("csv: empty file '" + path + "'");
  const std::vector<std::string> header = split_csv_line(line);
  if (header.empty() || header[0] != "t") {
    throw DataError("csv: header must start with a 't' column");
  }
  const std::size_t n_cols = header.size() - 1;
  if (n_cols == 0) throw DataError("csv: no node columns in header");

  SignalStream stream;
  std::vector<RunningMoments> moments(n_cols);
  std::size_t prev_active = 0;
  long prev_t = 0;
  long row = 1;  // data-row counter (header excluded)

  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const std::vector<std::string> fields = split_csv_line(line);
    if (fields.size() != header.size()) {
      throw DataError("csv row " + std::to_string(row) + ": expected " +
                      std::to_string(header.size()) + " fields, got " +
                      std::to_string(fields.size()));
    }
    const long t = static_cast<long>(parse_cell(fields[0], row, "t"));
    if (stream.signals.empty()) {
      if (t != 1) throw DataError("csv row 1: timestep column must start at 1");
    } else if (t != prev_t + 1) {
      throw DataError("csv row " + std::to_string(row) + ": timestep must advance by 1 (got " +
                      std::to_string(t) + " after " + std::to_string(prev_t) + ")");
    }

    std::size_t active = 0;
    while (active < n_cols && !fields[active + 1].empty()) ++active;
    for (std::size_t j = active; j < n_cols; ++j) {
      if (!fields[j + 1].empty()) {
        throw DataError("csv row " + std::to_string(row) + ": column '" + header[j + 1] +
                        "' is active while an earlier column is still empty");
      }
    }
    if (active == 0) {
      throw DataError("csv row " + std::to_string(row) + ": no active node columns");
    }
    if (active < prev_active) {
      throw DataError("csv row " + std::to_string(row) + ": column '" + header[active + 1] +
                      "' went empty after being numeric");
    }

    Vector x(static_cast<Index>(active));
    for (std::size_t j = 0; j < active; ++j) {
      double v = parse_cell(fields[j + 1], row, header[j + 1]);
      if (standardize) v = moments[j].absorb_then_standardize(v);
      x[static_cast<Index>(j)] = v;
    }

    if (stream.signals.empty()) {
      stream.schedule.n0 = static_cast<Index>(active);
    } else if (active > prev_active) {
      stream.schedule.events.push_back({t, static_cast<Index>(active - prev_active)});
    }
    stream.signals.push_back(std::move(x));
    prev_active = active;
    prev_t = t;
    ++row;
  }

  if (stream.signals.empty()) throw DataError("csv: no data rows in '" + path + "'");
  stream.schedule.horizon = prev_t;
  stream.schedule.validate();
  return stream;
}

void write_stream_csv(const std::string& path, const std::vector<Vector>& signals) {
  if (signals.empty()) throw ParameterError("write_stream_csv: empty signal stream");
  for (std::size_t k = 1; k < signals.size(); ++k) {
    if (signals[k].size() < signals[k - 1].size()) {
      throw DimensionError("write_stream_csv: signal dimensions must be non-decreasing");
    }
  }
  const Index n = signals.back().size();
  std::ofstream out(path);
  if (!out) throw DataError("write_stream_csv: cannot open '" + path + "'");
  out << "t";
  for (Index j = 0; j < n; ++j) out << ",node_" << j;
  out << "\n";
  for (std::size_t k = 0; k < signals.size(); ++k) {
    out << (k + 1);
    const Vector& x = signals[k];
    for (Index j = 0; j < n; ++j) {
      out << ",";
      if (j < x.size()) out << fmt17(x[j]);
    }
    out << "\n";
  }
  if (!out) throw DataError("write_stream_csv: write failed for '" + path + "'");
}

// ---------------------------------------------------------------------------
// Estimator drivers
// ---------------------------------------------------------------------------

OracleSeries compute_oracle_series(const SignalStream& stream, const ExperimentConfig& cfg) {
  OracleSeries series;
  series.stride = cfg.oracle_stride;
  if (cfg.oracle_stride <= 0) return series;

  const GmrfParams gp = cfg.params.gmrf();
  const double eta = cfg.params.resolved_eta();
  CovarianceTracker tracker(stream.schedule.n0, cfg.params.gamma);
  Matrix prev;

  for (long t = 1; t <= stream.schedule.horizon; ++t) {
    const Vector& x = stream.signals[static_cast<std::size_t>(t - 1)];
    const Index n_new = stream.schedule.arrivals_at(t);
    const Matrix& C = expanding_update(tracker, x, n_new);
    if (t % cfg.oracle_stride != 0) continue;
    SolveResult res = offline_solve(C, prev.size() > 0 ? &prev : nullptr, gp, eta,
                                    cfg.oracle_tol, cfg.oracle_max_iter);
    if (!res.converged) {
      throw NumericalError("offline reference did not converge at t = " + std::to_string(t) +
                           " (residual " + fmt17(res.residual) + " after " +
                           std::to_string(res.iterations) + " iterations)");
    }
    prev = res.S;
    series.steps.push_back(t);
    series.solutions.push_back(std::move(res.S));
  }
  return series;
}

RegretLog run_estimator(EstimatorKind kind, const SignalStream& stream,
                        const ExperimentConfig& cfg, const GroundTruthSequence* truth,
                        const OracleSeries* oracle) {
  const ArrivalSchedule& sched = stream.schedule;
  if (static_cast<long>(stream.signals.size()) != sched.horizon) {
    throw DimensionError("run_estimator: signal count does not match the schedule horizon");
  }

  const GmrfParams gp = cfg.params.gmrf();
  const GmrfLoss loss(gp);
  const OnlineOptions opts = cfg.params.online();
  const double eta = cfg.params.resolved_eta();

  CovarianceTracker tracker(sched.n0, cfg.params.gamma);  // Offline, Expanding
  Matrix C_flat = Matrix::Zero(sched.n0, sched.n0);       // Batch, Dynamic
  long sample_count = 0;                                  // Batch
  Matrix S_hat = Matrix::Zero(sched.n0, sched.n0);
  Matrix offline_anchor;  // Offline: previous solution (anchor + warm start)

  RegretLog log;
  double nerr_sum = 0.0;
  long nerr_count = 0;
  double cum_frob = 0.0;
  std::size_t oracle_pos = 0;

  for (long t = 1; t <= sched.horizon; ++t) {
    const Vector& x = stream.signals[static_cast<std::size_t>(t - 1)];
    const Index n_new = sched.arrivals_at(t);
    const Index n = x.size();

    const auto t0 = std::chrono::steady_clock::now();
    const Matrix* C_now = nullptr;
    switch (kind) {
      case EstimatorKind::Offline:
      case EstimatorKind::Expanding:
        C_now = &expanding_update(tracker, x, n_new);
        break;
      case EstimatorKind::Dynamic:
        C_flat = dynamic_update(zero_pad(C_flat, n), x, cfg.params.gamma);
        C_now = &C_flat;
        break;
      case EstimatorKind::Batch:
        sample_count += 1;
        C_flat = stationary_update(zero_pad(C_flat, n), x, sample_count);
        C_now = &C_flat;
        break;
    }

    switch (kind) {
      case EstimatorKind::Offline: {
        SolveResult res = offline_solve(*C_now, offline_anchor.size() > 0 ? &offline_anchor : nullptr,
                                        gp, eta, cfg.oracle_tol, cfg.oracle_max_iter);
        if (!res.converged) {
          throw NumericalError("offline estimator did not converge at t = " + std::to_string(t) +
                               " (residual " + fmt17(res.residual) + " after " +
                               std::to_string(res.iterations) + " iterations)");
        }
        S_hat = std::move(res.S);
        offline_anchor = S_hat;
        break;
      }
      case EstimatorKind::Batch: {
        const Matrix anchor = S_hat;  // previous estimate, frozen across inner iterations
        Matrix iterate = zero_pad(S_hat, n);
        for (int k = 0; k < cfg.params.batch_iters; ++k) {
          const Matrix grad = loss.gradient(iterate, *C_now, &anchor);
          iterate = ppg_step(iterate, grad, eta, cfg.params.lambda, loss);
        }
        S_hat = std::move(iterate);
        break;
      }
      case EstimatorKind::Dynamic:
      case EstimatorKind::Expanding:
        S_hat = tracked_step(loss, *C_now, S_hat, opts);
        break;
    }
    const double wall =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();

    RegretRecord rec;
    rec.t = t;
    rec.n_t = n;
    if (cfg.log_wall_time) rec.wall_ms = wall;
    if (truth != nullptr) rec.nerr_truth = nerr(S_hat, truth->gso_at(t));
    if (kind == EstimatorKind::Offline) {
      rec.nerr_offline = 0.0;
      rec.avg_cum_regret = 0.0;
      rec.frob_regret = 0.0;
    } else if (oracle != nullptr && oracle->stride > 0 && oracle_pos < oracle->steps.size() &&
               oracle->steps[oracle_pos] == t) {
      const Matrix& S_star = oracle->solutions[oracle_pos];
      ++oracle_pos;
      const double e = frob_dist(S_hat, S_star);
      rec.nerr_offline = nerr(S_hat, S_star);
      nerr_sum += rec.nerr_offline;
      nerr_count += 1;
      rec.avg_cum_regret = nerr_sum / static_cast<double>(nerr_count);
      cum_frob += e;
      rec.frob_regret = cum_frob;
    }
    log.append(rec);
  }
  return log;
}

// ---------------------------------------------------------------------------
// Full experiment: worker pool over realizations, aggregation, manifest.
// ---------------------------------------------------------------------------

namespace {

struct MetricColumn {
  const char* name;
  double RegretRecord::* field;
};

constexpr MetricColumn kMetricColumns[] = {
    {"nerr_offline", &RegretRecord::nerr_offline},
    {"nerr_truth", &RegretRecord::nerr_truth},
    {"avg_cum_regret", &RegretRecord::avg_cum_regret},
    {"frob_regret", &RegretRecord::frob_regret},
    {"wall_ms", &RegretRecord::wall_ms},
};

RealizationResult run_realization(int index, const ExperimentConfig& cfg,
                                  const SignalStream* shared_stream) {
  RealizationResult result;
  result.index = index;
  result.seed = cfg.seed + static_cast<std::uint64_t>(index);
  try {
    SignalStream local_stream;
    const SignalStream* stream = shared_stream;
    const GroundTruthSequence* truth = nullptr;
    Scenario scenario;
    if (cfg.mode == "synth") {
      scenario = build_scenario(cfg.schedule, cfg.avg_degree, cfg.delta, result.seed,
                                cfg.rewire_prob);
      local_stream.signals = std::move(scenario.signals);
      local_stream.schedule = cfg.schedule;
      stream = &local_stream;
      truth = &scenario.truth;
    }

    const OracleSeries oracle = compute_oracle_series(*stream, cfg);
    for (EstimatorKind kind : cfg.estimators) {
      RegretLog log = run_estimator(kind, *stream, cfg, truth, &oracle);
      const fs::path file = fs::path(cfg.out_dir) /
                            (std::string(to_string(kind)) + "_r" + std::to_string(index) + ".csv");
      log.write_csv(file.string());
      result.logs.emplace_back(kind, std::move(log));
    }

    // Tracking-bound audit: needs the reference at every step and a uniform
    // mixing weight (the factor ρ is defined for a single h).
    const bool expanding_ran =
        std::find(cfg.estimators.begin(), cfg.estimators.end(), EstimatorKind::Expanding) !=
        cfg.estimators.end();
    if (cfg.oracle_stride == 1 && expanding_ran &&
        (!cfg.params.h_new || *cfg.params.h_new == cfg.params.h)) {
      const RegretLog* exp_log = nullptr;
      for (const auto& [kind, log] : result.logs) {
        if (kind == EstimatorKind::Expanding) exp_log = &log;
      }
      const auto& rows = exp_log->rows;
      if (rows.size() >= 2) {
        TheoremBoundReport rep;
        rep.rho = contraction_rho(cfg.params.h, cfg.params.resolved_eta(), cfg.params.sigma);
        rep.err_first = rows.front().frob_regret;
        rep.err_last = rows.back().frob_regret - rows[rows.size() - 2].frob_regret;
        rep.measured = rows.back().frob_regret;
        rep.path_length = path_length(oracle.solutions);
        rep.k1 = (rep.err_first - rep.rho * rep.err_last) / (1.0 - rep.rho);
        rep.k2 = 1.0 / (1.0 - rep.rho);
        rep.bound = regret_bound(rep.err_first, rep.err_last, rep.rho, rep.path_length);
        rep.satisfied = rep.measured <= rep.bound;
        result.bound = rep;
      }
    }

    if (cfg.mode == "synth" && cfg.dump_scenarios) {
      const fs::path truth_file = fs::path(cfg.out_dir) / ("scenario_r" + std::to_string(index) + ".txt");
      write_scenario(truth_file.string(), *truth);
      const fs::path signal_file = fs::path(cfg.out_dir) / ("signals_r" + std::to_string(index) + ".csv");
      write_stream_csv(signal_file.string(), stream->signals);
    }

    result.ok = true;
  } catch (const std::exception& e) {
    result.ok = false;
    result.error = e.what();
    result.error_code = classify_error(e);
    result.logs.clear();
    result.bound.reset();
  }
  return result;
}

void write_aggregate(const std::string& final_path, const ExperimentConfig& cfg,
                     const std::vector<RealizationResult>& results) {
  const std::string tmp_path = final_path + ".tmp";
  try {
    std::ofstream out(tmp_path);
    if (!out) throw DataError("aggregate: cannot open '" + tmp_path + "'");
    out << "t,estimator,metric,median,p25,p75\n";

    for (std::size_t e = 0; e < cfg.estimators.size(); ++e) {
      // Collect the logs of this estimator across successful realizations.
      std::vector<const RegretLog*> logs;
      for (const auto& r : results) {
        if (r.ok) logs.push_back(&r.logs[e].second);
      }
      if (logs.empty()) continue;
      const std::size_t n_rows = logs.front()->rows.size();

      for (std::size_t i = 0; i < n_rows; ++i) {
        const long t = logs.front()->rows[i].t;
        for (const MetricColumn& col : kMetricColumns) {
          std::vector<double> values;
          for (const RegretLog* log : logs) {
            const double v = log->rows[i].*col.field;
            if (!std::isnan(v)) values.push_back(v);
          }
          if (values.empty()) continue;
          const double med = percentile(values, 0.5);
          const double p25 = percentile(values, 0.25);
          const double p75 = percentile(values, 0.75);
          out << t << "," << to_string(cfg.estimators[e]) << "," << col.name << ","
              << fmt17(med) << "," << fmt17(p25) << "," << fmt17(p75) << "\n";
        }
      }
    }
    if (!out) throw DataError("aggregate: write failed for '" + tmp_path + "'");
    out.close();
    fs::rename(tmp_path, final_path);
  } catch (...) {
    std::error_code ec;
    fs::remove(tmp_path, ec);
    throw;
  }
}

ordered_json config_echo(const ExperimentConfig& cfg) {
  ordered_json c;
  c["mode"] = cfg.mode;
  ordered_json est = ordered_json::array();
  for (EstimatorKind k : cfg.estimators) est.push_back(to_string(k));
  c["estimators"] = est;
  if (cfg.mode == "synth") {
    c["n0"] = cfg.schedule.n0;
    c["horizon"] = cfg.schedule.horizon;
    ordered_json arrivals = ordered_json::array();
    for (const ArrivalEvent& ev : cfg.schedule.events) {
      arrivals.push_back(ordered_json::array({ev.t, ev.count}));
    }
    c["arrivals"] = arrivals;
    c["avg_degree"] = cfg.avg_degree;
    c["delta"] = cfg.delta;
    c["rewire_prob"] = cfg.rewire_prob;
    c["dump_scenarios"] = cfg.dump_scenarios;
  } else {
    c["input"] = cfg.input_path;
    c["standardize"] = cfg.standardize;
  }
  c["epsilon"] = cfg.params.epsilon;
  c["sigma"] = cfg.params.sigma;
  c["eta"] = cfg.params.resolved_eta();
  c["lambda"] = cfg.params.lambda;
  c["alpha"] = cfg.params.alpha;
  c["gamma"] = cfg.params.gamma;
  c["h"] = cfg.params.h;
  if (cfg.params.h_new) {
    c["h_new"] = *cfg.params.h_new;
  } else {
    c["h_new"] = nullptr;
  }
  c["iters_per_step"] = cfg.params.iters_per_step;
  c["batch_iters"] = cfg.params.batch_iters;
  c["realizations"] = cfg.realizations;
  c["seed"] = cfg.seed;
  c["out_dir"] = cfg.out_dir;
  c["threads"] = cfg.threads;
  c["oracle_stride"] = cfg.oracle_stride;
  c["oracle_tol"] = cfg.oracle_tol;
  c["oracle_max_iter"] = cfg.oracle_max_iter;
  c["log_wall_time"] = cfg.log_wall_time;
  return c;
}

void write_manifest(const std::string& final_path, const ExperimentConfig& cfg,
                    const std::vector<RealizationResult>& results) {
  const std::string tmp_path = final_path + ".tmp";
  try {
    ordered_json m;
    m["config"] = config_echo(cfg);

    ordered_json seeds = ordered_json::array();
    for (const auto& r : results) seeds.push_back(r.seed);
    m["seeds"] = seeds;

    ordered_json runs = ordered_json::array();
    for (const auto& r : results) {
      ordered_json entry;
      entry["index"] = r.index;
      entry["seed"] = r.seed;
      entry["status"] = r.ok ? "ok" : "failed";
      if (!r.ok) entry["error"] = r.error;
      runs.push_back(entry);
    }
    m["realizations"] = runs;

    ordered_json outputs;
    outputs["aggregate"] = "aggregate.csv";
    ordered_json files;
    for (EstimatorKind k : cfg.estimators) {
      ordered_json list = ordered_json::array();
      for (const auto& r : results) {
        if (r.ok) list.push_back(std::string(to_string(k)) + "_r" + std::to_string(r.index) + ".csv");
      }
      files[to_string(k)] = list;
    }
    outputs["runs"] = files;
    m["outputs"] = outputs;

    if (cfg.log_wall_time) {
      ordered_json wall;
      constexpr double kReferenceMs = 2.5;
      for (std::size_t e = 0; e < cfg.estimators.size(); ++e) {
        std::vector<double> values;
        for (const auto& r : results) {
          if (!r.ok) continue;
          for (const RegretRecord& row : r.logs[e].second.rows) {
            if (!std::isnan(row.wall_ms)) values.push_back(row.wall_ms);
          }
        }
        if (values.empty()) continue;
        ordered_json s;
        const double med = percentile(values, 0.5);
        s["median"] = med;
        s["p90"] = percentile(values, 0.9);
        s["max"] = *std::max_element(values.begin(), values.end());
        s["reference_ms"] = kReferenceMs;
        s["median_within_10x_of_reference"] =
            (med <= 10.0 * kReferenceMs) && (med >= 0.1 * kReferenceMs);
        wall[to_string(cfg.estimators[e])] = s;
      }
      m["wall_ms"] = wall;
    }

    bool any_bound = false;
    for (const auto& r : results) any_bound = any_bound || r.bound.has_value();
    if (any_bound) {
      ordered_json bounds = ordered_json::array();
      for (const auto& r : results) {
        if (!r.bound) continue;
        const TheoremBoundReport& b = *r.bound;
        ordered_json entry;
        entry["index"] = r.index;
        entry["rho"] = b.rho;
        entry["k1"] = b.k1;
        entry["k2"] = b.k2;
        entry["path_length"] = b.path_length;
        entry["bound"] = b.bound;
        entry["measured"] = b.measured;
        entry["err_first"] = b.err_first;
        entry["err_last"] = b.err_last;
        entry["satisfied"] = b.satisfied;
        bounds.push_back(entry);
      }
      m["tracking_bound"] = bounds;
    }

    std::ofstream out(tmp_path);
    if (!out) throw DataError("manifest: cannot open '" + tmp_path + "'");
    out << m.dump(2) << "\n";
    if (!out) throw DataError("manifest: write failed for '" + tmp_path + "'");
    out.close();
    fs::rename(tmp_path, final_path);
  } catch (...) {
    std::error_code ec;
    fs::remove(tmp_path, ec);
    throw;
  }
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  fs::create_directories(cfg.out_dir);

  SignalStream shared_stream;
  const SignalStream* shared = nullptr;
  if (cfg.mode == "csv") {
    shared_stream = ingest_csv_stream(cfg.input_path, cfg.standardize);
    shared = &shared_stream;
  }

  const int n_real = cfg.realizations;
  std::vector<RealizationResult> results(static_cast<std::size_t>(n_real));
  const int workers = std::max(1, std::min(cfg.threads, n_real));
  std::atomic<int> next{0};
  auto work = [&]() {
    for (int i = next.fetch_add(1); i < n_real; i = next.fetch_add(1)) {
      results[static_cast<std::size_t>(i)] = run_realization(i, cfg, shared);
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int k = 0; k < workers; ++k) pool.emplace_back(work);
    for (std::thread& th : pool) th.join();
  }

  ExperimentResult out;
  out.aggregate_path = (fs::path(cfg.out_dir) / "aggregate.csv").string();
  out.manifest_path = (fs::path(cfg.out_dir) / "manifest.json").string();
  write_aggregate(out.aggregate_path, cfg, results);
  write_manifest(out.manifest_path, cfg, results);
  out.realizations = std::move(results);
  return out;
}

}  // namespace expgraph

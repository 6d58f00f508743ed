#include "expgraph/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

namespace expgraph {

double nerr(const Matrix& S_hat, const Matrix& S_ref) {
  if (S_hat.rows() != S_ref.rows() || S_hat.cols() != S_ref.cols()) {
    throw DimensionError("nerr: operand shapes differ");
  }
  const double denom = S_ref.squaredNorm();
  if (denom == 0.0) {
    throw ParameterError("nerr: reference matrix is zero (undefined normalization)");
  }
  return (S_hat - S_ref).squaredNorm() / denom;
}

std::vector<double> avg_cum_regret(const std::vector<double>& errs) {
  if (errs.empty()) throw ParameterError("avg_cum_regret: empty error sequence");
  std::vector<double> out(errs.size());
  double sum = 0.0;
  for (std::size_t k = 0; k < errs.size(); ++k) {
    sum += errs[k];
    out[k] = sum / static_cast<double>(k + 1);
  }
  return out;
}

double path_length(const std::vector<Matrix>& opt_seq) {
  double total = 0.0;
  for (std::size_t k = 1; k < opt_seq.size(); ++k) {
    if (opt_seq[k].rows() < opt_seq[k - 1].rows()) {
      throw DimensionError("path_length: sequence sides must be non-decreasing");
    }
    total += frob_dist(opt_seq[k], zero_pad(opt_seq[k - 1], opt_seq[k].rows()));
  }
  return total;
}

double contraction_rho(double h, double eta, double sigma) {
  if (!(h > 0.0 && h <= 1.0)) {
    throw ParameterError("contraction_rho: h must lie in (0, 1]");
  }
  if (!(eta > 0.0) || !(sigma > 0.0)) {
    throw ParameterError("contraction_rho: eta and sigma must be > 0");
  }
  const double ratio = h * eta / sigma;
  if (ratio > 1.0) {
    throw ParameterError("contraction_rho: h*eta/sigma = " + std::to_string(ratio) +
                         " exceeds 1 (factor undefined)");
  }
  return std::sqrt(1.0 - ratio);
}

double regret_bound(double err_first, double err_last, double rho, double path_len) {
  if (!(rho >= 0.0 && rho < 1.0)) {
    throw ParameterError("regret_bound: rho must lie in [0, 1)");
  }
  const double k1 = (err_first - rho * err_last) / (1.0 - rho);
  const double k2 = 1.0 / (1.0 - rho);
  return k1 + k2 * path_len;
}

double path_length_arrival_bound(long d_max, long n_incoming) {
  if (d_max < 1 || n_incoming < 1) {
    throw ParameterError("path_length_arrival_bound: arguments must be positive");
  }
  return std::sqrt(2.0 * static_cast<double>(d_max) * static_cast<double>(n_incoming));
}

double percentile(std::vector<double> values, double q) {
  if (values.empty()) throw ParameterError("percentile: empty sample");
  if (!(q >= 0.0 && q <= 1.0)) throw ParameterError("percentile: q must lie in [0, 1]");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(pos);
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

namespace {

bool present(double v) { return !std::isnan(v); }

void require_nonneg(double v, const char* name) {
  if (present(v) && v < 0.0) {
    throw ParameterError(std::string("RegretLog: ") + name + " must be nonnegative");
  }
}

void append_field(std::string& line, double v) {
  line.push_back(',');
  if (!present(v)) return;  // absent → empty field
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  line += buf;
}

}  // namespace

void RegretLog::append(const RegretRecord& r) {
  if (!rows.empty()) {
    if (r.t <= rows.back().t) {
      throw ParameterError("RegretLog: t must be strictly increasing");
    }
    if (r.n_t < rows.back().n_t) {
      throw ParameterError("RegretLog: n_t must be non-decreasing");
    }
  }
  require_nonneg(r.nerr_offline, "nerr_offline");
  require_nonneg(r.nerr_truth, "nerr_truth");
  require_nonneg(r.avg_cum_regret, "avg_cum_regret");
  require_nonneg(r.frob_regret, "frob_regret");
  rows.push_back(r);
}

void RegretLog::write_csv(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw DataError("RegretLog: cannot open " + path);
  out << "t,n_t,nerr_offline,nerr_truth,avg_cum_regret,frob_regret,wall_ms\n";
  for (const auto& r : rows) {
    std::string line = std::to_string(r.t) + "," + std::to_string(r.n_t);
    append_field(line, r.nerr_offline);
    append_field(line, r.nerr_truth);
    append_field(line, r.avg_cum_regret);
    append_field(line, r.frob_regret);
    append_field(line, r.wall_ms);
    out << line << "\n";
  }
  if (!out) throw DataError("RegretLog: write failed for " + path);
}

}  // namespace expgraph

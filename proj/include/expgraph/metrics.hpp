#pragma once

// Error and regret accounting: normalized Frobenius error, average
// cumulative regret, optimizer path length, and the tracking-bound
// machinery (contraction factor, bound constants, per-arrival path bound).

#include <limits>
#include <string>
#include <vector>

#include "expgraph/matops.hpp"

namespace expgraph {

/** Squared Frobenius error normalized by the reference: ‖Ŝ−S_ref‖²_F/‖S_ref‖²_F. */
double nerr(const Matrix& S_hat, const Matrix& S_ref);

/** Prefix means: element k is the mean of errs[0..k]. */
std::vector<double> avg_cum_regret(const std::vector<double>& errs);

/**
 * Total drift of a sequence of per-step optima with non-decreasing sides:
 * Σ_{t≥2} ‖S*_t − pad(S*_{t−1})‖_F.
 */
double path_length(const std::vector<Matrix>& opt_seq);

/** Tracking contraction factor ρ = (1 − hη/σ)^{1/2}; requires hη/σ ∈ (0, 1]. */
double contraction_rho(double h, double eta, double sigma);

/**
 * Cumulative tracking-error bound K1 + K2·path_len with
 * K1 = (err_first − ρ·err_last)/(1−ρ) and K2 = 1/(1−ρ).
 */
double regret_bound(double err_first, double err_last, double rho, double path_len);

/**
 * Per-arrival optimizer-drift bound for binary-edge ground truth:
 * √(2·d_max·n_incoming), d_max being the maximum number of edges per
 * incoming node.
 */
double path_length_arrival_bound(long d_max, long n_incoming);

/**
 * Quantile with linear interpolation between order statistics: for q in
 * [0, 1], the value at fractional position q·(n−1) of the sorted sample.
 * Throws ParameterError on an empty sample or q outside [0, 1].
 */
double percentile(std::vector<double> values, double q);

constexpr double kAbsent = std::numeric_limits<double>::quiet_NaN();

/** One per-timestep record; NaN marks an absent value (e.g. the offline
 *  oracle was not evaluated at this step). */
struct RegretRecord {
  long t = 0;
  Index n_t = 0;
  double nerr_offline = kAbsent;
  double nerr_truth = kAbsent;
  double avg_cum_regret = kAbsent;
  double frob_regret = kAbsent;  // running Σ‖Ŝ−S*‖_F over oracle-evaluated steps
  double wall_ms = kAbsent;
};

/**
 * Per-run metric log. Single-writer; append enforces strictly increasing t,
 * non-decreasing N_t and nonnegative error fields.
 */
struct RegretLog {
  std::vector<RegretRecord> rows;

  void append(const RegretRecord& r);

  /** CSV with header t,n_t,nerr_offline,nerr_truth,avg_cum_regret,
   *  frob_regret,wall_ms; absent values become empty fields; numbers
   *  round-trip at 17 significant digits. */
  void write_csv(const std::string& path) const;
};

}  // namespace expgraph

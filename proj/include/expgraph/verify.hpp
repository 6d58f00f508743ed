#pragma once

// Small-instance numerical audits of the online engine's tracking theory:
//  - contraction_check: with the covariance frozen, one online step moves
//    the estimate toward the current per-step optimum by at least the
//    factor ρ = (1 − hη/σ)^{1/2}.
//  - tracking_bound_check: over a whole run (including a node arrival) the
//    cumulative distance to the per-step optima stays below
//    K1 + K2 · path-length.
// Both are driven from synthetic GMRF streams with a high-accuracy solve of
// the per-step problem as the reference.

#include <cstdint>
#include <vector>

#include "expgraph/matops.hpp"

namespace expgraph {

struct ContractionCheckOptions {
  Index n = 10;
  long horizon = 120;
  int seeds = 20;
  double epsilon = 0.3;
  double sigma = 10.0;
  double lambda = 0.05;
  double gamma = 0.9;
  double h = 1.0;
  double eta = 0.0;  ///< 0 → epsilon²
  double avg_degree = 3.0;
  double delta = 0.1;
  double oracle_tol = 1e-10;
  int oracle_max_iter = 50000;
  double slack = 1e-8;  ///< absolute tolerance added to the contracted distance
  std::uint64_t seed0 = 1234;
};

struct ContractionCheckResult {
  long checked = 0;
  long violations = 0;
  double max_excess = 0.0;  ///< worst positive overshoot past ρ·dist + slack (0 if none)
  double rho = 0.0;

  double pass_fraction() const {
    return checked == 0 ? 0.0
                        : static_cast<double>(checked - violations) / static_cast<double>(checked);
  }
  bool pass(double required_fraction = 0.99) const {
    return checked > 0 && pass_fraction() >= required_fraction;
  }
};

/**
 * For each seed, run the online estimator on a fixed-size stream; at every
 * step t solve the current problem to high accuracy (S*_t), take one
 * hypothetical online step with the covariance held fixed, and test
 * ‖Ŝ_{t+1} − S*_t‖_F ≤ ρ‖Ŝ_t − S*_t‖_F + slack.
 */
ContractionCheckResult contraction_check(const ContractionCheckOptions& opt);

struct TrackingBoundOptions {
  Index n0 = 12;
  long horizon = 300;
  int seeds = 10;
  long arrival_t = 150;     ///< one arrival event; 0 disables it
  Index arrival_count = 3;  ///< nodes arriving at arrival_t
  double epsilon = 1.0;
  double sigma = 16.0;
  double lambda = 0.05;
  double gamma = 0.9;
  double h = 1.0;
  double eta = 0.0;  ///< 0 → epsilon²
  int iters_per_step = 1;
  double avg_degree = 3.0;
  double delta = 0.1;
  double oracle_tol = 1e-10;
  int oracle_max_iter = 50000;
  std::uint64_t seed0 = 77;
};

struct TrackingBoundSeedResult {
  std::uint64_t seed = 0;
  double measured = 0.0;  ///< Σ_t ‖Ŝ_t − S*_t‖_F
  double bound = 0.0;     ///< K1 + K2 · path_length
  double err_first = 0.0;
  double err_last = 0.0;
  double path_length = 0.0;
  bool satisfied = false;
};

struct TrackingBoundResult {
  double rho = 0.0;
  double k2 = 0.0;  ///< 1/(1−ρ); K1 varies per seed
  std::vector<TrackingBoundSeedResult> seeds;

  bool all_satisfied() const {
    if (seeds.empty()) return false;
    for (const auto& s : seeds) {
      if (!s.satisfied) return false;
    }
    return true;
  }
};

/**
 * For each seed, run the online estimator over a stream with one node
 * arrival, solving the per-step problem to high accuracy throughout, and
 * compare the measured cumulative tracking error against the bound built
 * from the first/last errors and the optimizer path length.
 */
TrackingBoundResult tracking_bound_check(const TrackingBoundOptions& opt);

}  // namespace expgraph

#pragma once

// The online learning engine: per-timestep covariance update, one or more
// projected proximal gradient steps on zero-padded state, and an h-weighted
// convex combination with the previous estimate. The engine is generic over
// a smooth-loss contract; the GMRF loss is the provided instantiation.

#include <memory>
#include <optional>

#include "expgraph/covariance.hpp"
#include "expgraph/gmrf.hpp"

namespace expgraph {

/**
 * Behavioral contract for the smooth part of a topology-learning loss.
 * Implementations must provide the gradient at S given the current
 * covariance (S_prev anchors an optional distance-to-previous term and may
 * be smaller than S or null), the projection onto their feasible set, and
 * the largest admissible gradient step size.
 */
class SmoothLoss {
 public:
  virtual ~SmoothLoss() = default;
  virtual Matrix gradient(const Matrix& S, const Matrix& C_hat,
                          const Matrix* S_prev) const = 0;
  virtual Matrix project(const Matrix& S) const = 0;
  virtual double eta_max() const = 0;
};

/** GMRF instantiation of the contract, delegating to the gmrf module. */
class GmrfLoss final : public SmoothLoss {
 public:
  explicit GmrfLoss(GmrfParams params) : params_(params) { params_.validate(); }

  Matrix gradient(const Matrix& S, const Matrix& C_hat,
                  const Matrix* S_prev) const override {
    return smooth_grad(S, C_hat, params_, S_prev);
  }
  Matrix project(const Matrix& S) const override {
    return project_feasible(S, params_.sigma);
  }
  double eta_max() const override { return params_.eta_max(); }

  const GmrfParams& params() const { return params_; }

 private:
  GmrfParams params_;
};

/**
 * One projected proximal gradient step:
 * project(soft_threshold(S_padded − eta·grad, eta·lambda)).
 */
Matrix ppg_step(const Matrix& S_padded, const Matrix& grad, double eta, double lambda,
                const SmoothLoss& loss);

/**
 * Convex combination h·S_check + (1−h)·S_padded_prev with h ∈ (0,1];
 * h = 1 returns S_check exactly.
 */
Matrix combine(const Matrix& S_check, const Matrix& S_padded_prev, double h);

/**
 * Block variant of combine: weight h_old on the top-left n_old×n_old block
 * (previously existing nodes), h_new on all rows/columns of newly arrived
 * nodes. Equal weights reduce to combine().
 */
Matrix combine_blocked(const Matrix& S_check, const Matrix& S_padded_prev, double h_old,
                       double h_new, Index n_old);

/** Step-size, mixing and iteration knobs of the online engine. */
struct OnlineOptions {
  double eta = 0.0;              // gradient step, 0 < eta <= loss.eta_max()
  double lambda = 0.0;           // l1 weight used by the proximal step
  double h = 1.0;                // mixing weight in (0,1]
  std::optional<double> h_new;   // optional distinct weight for new-node blocks
  int iters_per_step = 1;        // PPG+combine repetitions per time instant

  void validate(const SmoothLoss& loss) const;
};

/**
 * Steps (ii)–(iv) of the per-timestep iteration, factored out so every
 * covariance policy (masked expanding, dynamic, stationary batch) drives
 * the identical optimization code: zero-pad the previous estimate to the
 * side of C_hat, then iters_per_step times take a PPG step and combine it
 * with the current iterate. The distance anchor stays frozen at the
 * pre-step estimate across inner iterations. Returns the new estimate,
 * which is feasible by construction.
 */
Matrix tracked_step(const SmoothLoss& loss, const Matrix& C_hat, const Matrix& S_prev,
                    const OnlineOptions& opt);

/**
 * Online learner owning the full per-timestep pipeline: masked expanding
 * covariance update followed by tracked_step. Single-writer; one stream
 * per learner. The estimate starts at the zero matrix (feasible) unless an
 * explicit S0 is given, and is feasible after every step.
 */
class OnlineLearner {
 public:
  OnlineLearner(std::shared_ptr<const SmoothLoss> loss, CovarianceTracker tracker,
                OnlineOptions opt, std::optional<Matrix> S0 = std::nullopt);

  /** Absorbs one sample (n_new of its entries belong to new nodes) and
   *  returns the updated estimate. State is untouched when validation
   *  fails. */
  const Matrix& step(const Vector& x, Index n_new);

  const Matrix& estimate() const { return S_hat_; }
  const CovarianceTracker& tracker() const { return tracker_; }
  const OnlineOptions& options() const { return opt_; }

 private:
  std::shared_ptr<const SmoothLoss> loss_;
  CovarianceTracker tracker_;
  OnlineOptions opt_;
  Matrix S_hat_;
};

}  // namespace expgraph

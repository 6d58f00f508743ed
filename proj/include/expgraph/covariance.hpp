#pragma once

// Sample-covariance tracking for an expanding signal stream. The masked
// update blends a forgetting-factor rule on blocks of previously existing
// nodes with plain sample averaging on blocks touched by newly arrived
// nodes, so fresh nodes accumulate statistics at full weight from their
// first observation. The classical stationary and dynamic (EWMA) updates
// are provided as baselines.

#include "expgraph/matops.hpp"

namespace expgraph {

/**
 * Entry-wise blend masks. M1 weighs the previous covariance, M2 the new
 * rank-one sample term; each block pair sums to one (γ + (1−γ) and
 * (t̃−1)/t̃ + 1/t̃), so M1 + M2 is the all-ones matrix.
 */
struct MaskPair {
  Matrix M1;
  Matrix M2;
};

/**
 * Builds the blend masks for side n_total where the top-left n_tau×n_tau
 * block belongs to nodes that existed before the most recent arrival.
 * That block gets the forgetting-factor coefficients (gamma, 1−gamma);
 * every other entry gets the running-mean coefficients ((t_tilde−1)/t_tilde,
 * 1/t_tilde), t_tilde counting samples observed since and including the
 * arrival. Requires n_total ≥ n_tau ≥ 0, t_tilde ≥ 1, gamma ∈ [0,1).
 */
MaskPair build_masks(Index n_total, Index n_tau, double gamma, long t_tilde);

/**
 * Streaming state for the masked expanding update: the current estimate
 * plus the arrival bookkeeping that decides which block uses which rate.
 * Single-writer; run one tracker per stream.
 */
struct CovarianceTracker {
  Matrix C_hat;      // current covariance estimate
  long t = 0;        // samples absorbed so far
  long tau = 0;      // time of the most recent node arrival (0 = none yet)
  Index N_tau = 0;   // node count immediately before the most recent arrival
  double gamma = 0;  // forgetting factor in [0,1)

  CovarianceTracker() = default;

  // Fresh tracker over n0 nodes, C_hat = 0. With no arrival on record the
  // whole matrix is treated as the forgetting-factor block.
  CovarianceTracker(Index n0, double gamma);

  Index side() const { return C_hat.rows(); }
};

/**
 * Absorbs one sample into the tracker. If n_new > 0 the tracker first
 * records the arrival (tau ← arrival time, N_tau ← previous side) and
 * zero-pads C_hat; the masked blend then leaves the old block on the
 * forgetting-factor schedule while cross/new blocks restart as a running
 * mean — the arrival-instant sample initializes them to the corresponding
 * blocks of x xᵀ exactly. Returns the updated C_hat.
 *
 * x must have length side + n_new and finite entries; the tracker is not
 * mutated when validation fails.
 */
const Matrix& expanding_update(CovarianceTracker& tracker, const Vector& x, Index n_new);

/**
 * Running-mean update ((t−1)/t)·C + (1/t)·x xᵀ, where t ≥ 1 counts samples
 * including this one. Suitable for stationary streams.
 */
Matrix stationary_update(const Matrix& C, const Vector& x, long t);

/**
 * Forgetting-factor update γ·C + (1−γ)·x xᵀ with γ ∈ [0,1). The caller
 * zero-pads C when nodes arrive (this is the "Dynamic" baseline: no
 * per-block treatment of newcomers).
 */
Matrix dynamic_update(const Matrix& C, const Vector& x, double gamma);

}  // namespace expgraph

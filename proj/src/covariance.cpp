#include "expgraph/covariance.hpp"

#include <string>

namespace expgraph {

namespace {

void check_gamma(double gamma) {
  if (!(gamma >= 0.0 && gamma < 1.0)) {
    throw ParameterError("gamma must lie in [0,1), got " + std::to_string(gamma));
  }
}

void check_vector(const Vector& x, Index expected, const char* who) {
  if (x.size() != expected) {
    throw DimensionError(std::string(who) + ": signal length " + std::to_string(x.size()) +
                         " does not match expected side " + std::to_string(expected));
  }
  if (!x.allFinite()) {
    throw DataError(std::string(who) + ": signal contains NaN or Inf");
  }
}

// Shared blend kernel. Both the masked expanding update and the dynamic
// baseline go through this exact expression so that a no-arrival expanding
// trajectory reproduces the dynamic trajectory bit for bit.
Matrix blend(const Matrix& C, const Matrix& outer, const MaskPair& masks) {
  return masks.M1.cwiseProduct(C) + masks.M2.cwiseProduct(outer);
}

}  // namespace

MaskPair build_masks(Index n_total, Index n_tau, double gamma, long t_tilde) {
  if (n_tau < 0 || n_total < n_tau) {
    throw DimensionError("build_masks: need n_total >= n_tau >= 0, got n_total=" +
                         std::to_string(n_total) + ", n_tau=" + std::to_string(n_tau));
  }
  if (t_tilde < 1) {
    throw ParameterError("build_masks: t_tilde must be >= 1, got " + std::to_string(t_tilde));
  }
  check_gamma(gamma);

  const double mean_old = static_cast<double>(t_tilde - 1) / static_cast<double>(t_tilde);
  const double mean_new = 1.0 / static_cast<double>(t_tilde);

  MaskPair out;
  out.M1 = Matrix::Constant(n_total, n_total, mean_old);
  out.M2 = Matrix::Constant(n_total, n_total, mean_new);
  out.M1.topLeftCorner(n_tau, n_tau).setConstant(gamma);
  out.M2.topLeftCorner(n_tau, n_tau).setConstant(1.0 - gamma);
  return out;
}

CovarianceTracker::CovarianceTracker(Index n0, double g) {
  if (n0 < 0) {
    throw DimensionError("CovarianceTracker: initial side must be nonnegative");
  }
  check_gamma(g);
  C_hat = Matrix::Zero(n0, n0);
  N_tau = n0;
  gamma = g;
}

const Matrix& expanding_update(CovarianceTracker& tracker, const Vector& x, Index n_new) {
  if (n_new < 0) {
    throw ParameterError("expanding_update: n_new must be nonnegative");
  }
  check_gamma(tracker.gamma);
  const Index n_total = tracker.side() + n_new;
  check_vector(x, n_total, "expanding_update");

  // Validation done; now mutate. The arrival is recorded first so the mask
  // layout below sees the new tau/N_tau.
  tracker.t += 1;
  if (n_new > 0) {
    tracker.N_tau = tracker.side();
    tracker.tau = tracker.t;
    tracker.C_hat = zero_pad(tracker.C_hat, n_total);
  }

  // Samples observed since and including the last arrival. At the arrival
  // instant this is 1, so the running-mean coefficients (0, 1) rebuild the
  // cross/new blocks entirely from x xᵀ.
  const long t_tilde = tracker.t - tracker.tau + 1;
  const MaskPair masks = build_masks(n_total, tracker.N_tau, tracker.gamma, t_tilde);
  const Matrix outer = x * x.transpose();
  tracker.C_hat = blend(tracker.C_hat, outer, masks);
  return tracker.C_hat;
}

Matrix stationary_update(const Matrix& C, const Vector& x, long t) {
  if (C.rows() != C.cols()) {
    throw DimensionError("stationary_update: C must be square");
  }
  if (t < 1) {
    throw ParameterError("stationary_update: t must be >= 1, got " + std::to_string(t));
  }
  check_vector(x, C.rows(), "stationary_update");
  const double w_old = static_cast<double>(t - 1) / static_cast<double>(t);
  const double w_new = 1.0 / static_cast<double>(t);
  return w_old * C + w_new * (x * x.transpose());
}

Matrix dynamic_update(const Matrix& C, const Vector& x, double gamma) {
  if (C.rows() != C.cols()) {
    throw DimensionError("dynamic_update: C must be square");
  }
  check_gamma(gamma);
  check_vector(x, C.rows(), "dynamic_update");
  // Same kernel as the expanding update with the whole matrix treated as
  // the forgetting-factor block (see blend()).
  const MaskPair masks = build_masks(C.rows(), C.rows(), gamma, 1);
  const Matrix outer = x * x.transpose();
  return blend(C, outer, masks);
}

}  // namespace expgraph

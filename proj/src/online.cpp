#include "expgraph/online.hpp"

#include <string>
#include <utility>

namespace expgraph {

namespace {

void check_h(double h, const char* name) {
  if (!(h > 0.0 && h <= 1.0)) {
    throw ParameterError(std::string(name) + " must lie in (0, 1], got " + std::to_string(h));
  }
}

}  // namespace

Matrix ppg_step(const Matrix& S_padded, const Matrix& grad, double eta, double lambda,
                const SmoothLoss& loss) {
  if (S_padded.rows() != grad.rows() || S_padded.cols() != grad.cols()) {
    throw DimensionError("ppg_step: iterate and gradient shapes differ");
  }
  if (!(eta > 0.0)) {
    throw ParameterError("ppg_step: eta must be > 0, got " + std::to_string(eta));
  }
  if (lambda < 0.0) {
    throw ParameterError("ppg_step: lambda must be >= 0, got " + std::to_string(lambda));
  }
  return loss.project(soft_threshold(S_padded - eta * grad, eta * lambda));
}

Matrix combine(const Matrix& S_check, const Matrix& S_padded_prev, double h) {
  if (S_check.rows() != S_padded_prev.rows() || S_check.cols() != S_padded_prev.cols()) {
    throw DimensionError("combine: operand shapes differ");
  }
  check_h(h, "combine: h");
  if (h == 1.0) return S_check;
  return h * S_check + (1.0 - h) * S_padded_prev;
}

Matrix combine_blocked(const Matrix& S_check, const Matrix& S_padded_prev, double h_old,
                       double h_new, Index n_old) {
  if (S_check.rows() != S_padded_prev.rows() || S_check.cols() != S_padded_prev.cols()) {
    throw DimensionError("combine_blocked: operand shapes differ");
  }
  check_h(h_old, "combine_blocked: h_old");
  check_h(h_new, "combine_blocked: h_new");
  if (n_old < 0 || n_old > S_check.rows()) {
    throw DimensionError("combine_blocked: n_old out of range");
  }
  if (h_old == h_new) return combine(S_check, S_padded_prev, h_old);

  Matrix out = h_new * S_check + (1.0 - h_new) * S_padded_prev;
  out.topLeftCorner(n_old, n_old) = h_old * S_check.topLeftCorner(n_old, n_old) +
                                    (1.0 - h_old) * S_padded_prev.topLeftCorner(n_old, n_old);
  return out;
}

void OnlineOptions::validate(const SmoothLoss& loss) const {
  if (!(eta > 0.0) || eta > loss.eta_max()) {
    throw ParameterError("eta must lie in (0, " + std::to_string(loss.eta_max()) +
                         "] for this loss, got " + std::to_string(eta));
  }
  if (lambda < 0.0) {
    throw ParameterError("lambda must be >= 0, got " + std::to_string(lambda));
  }
  check_h(h, "h");
  if (h_new) check_h(*h_new, "h_new");
  if (iters_per_step < 1) {
    throw ParameterError("iters_per_step must be >= 1, got " + std::to_string(iters_per_step));
  }
}

Matrix tracked_step(const SmoothLoss& loss, const Matrix& C_hat, const Matrix& S_prev,
                    const OnlineOptions& opt) {
  opt.validate(loss);
  const Index n = C_hat.rows();
  if (C_hat.rows() != C_hat.cols() || S_prev.rows() != S_prev.cols() || S_prev.rows() > n) {
    throw DimensionError("tracked_step: S_prev side must not exceed side of C_hat");
  }

  const Index n_old = S_prev.rows();  // V_{t-1} block for the per-block mixing
  Matrix iterate = zero_pad(S_prev, n);
  for (int k = 0; k < opt.iters_per_step; ++k) {
    // The distance anchor is the pre-step estimate S_prev, frozen across
    // inner iterations; only the iterate evolves.
    const Matrix grad = loss.gradient(iterate, C_hat, &S_prev);
    Matrix checked = ppg_step(iterate, grad, opt.eta, opt.lambda, loss);
    iterate = opt.h_new ? combine_blocked(checked, iterate, opt.h, *opt.h_new, n_old)
                        : combine(checked, iterate, opt.h);
  }
  return iterate;
}

OnlineLearner::OnlineLearner(std::shared_ptr<const SmoothLoss> loss, CovarianceTracker tracker,
                             OnlineOptions opt, std::optional<Matrix> S0)
    : loss_(std::move(loss)), tracker_(std::move(tracker)), opt_(opt) {
  if (!loss_) throw ParameterError("OnlineLearner: loss must not be null");
  opt_.validate(*loss_);
  if (S0) {
    if (S0->rows() != tracker_.side() || S0->cols() != tracker_.side()) {
      throw DimensionError("OnlineLearner: S0 side must match tracker side");
    }
    S_hat_ = std::move(*S0);
  } else {
    S_hat_ = Matrix::Zero(tracker_.side(), tracker_.side());
  }
}

const Matrix& OnlineLearner::step(const Vector& x, Index n_new) {
  // expanding_update validates before mutating, so a bad call leaves the
  // learner untouched.
  const Matrix& C = expanding_update(tracker_, x, n_new);
  S_hat_ = tracked_step(*loss_, C, S_hat_, opt_);
  return S_hat_;
}

}  // namespace expgraph

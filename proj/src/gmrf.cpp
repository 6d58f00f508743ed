#include "expgraph/gmrf.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace expgraph {

void GmrfParams::validate() const {
  if (!(epsilon > 0.0)) {
    throw ParameterError("epsilon must be > 0, got " + std::to_string(epsilon));
  }
  if (!(sigma > 0.0)) {
    throw ParameterError("sigma must be > 0, got " + std::to_string(sigma));
  }
  if (alpha < 0.0) {
    throw ParameterError("alpha must be >= 0, got " + std::to_string(alpha));
  }
  if (lambda < 0.0) {
    throw ParameterError("lambda must be >= 0, got " + std::to_string(lambda));
  }
}

namespace {

void check_sides(const Matrix& S, const Matrix& C_hat, const Matrix* S_prev, const char* who) {
  if (S.rows() != S.cols() || C_hat.rows() != C_hat.cols() || S.rows() != C_hat.rows()) {
    throw DimensionError(std::string(who) + ": S and C_hat must be square with equal side");
  }
  if (S_prev != nullptr) {
    if (S_prev->rows() != S_prev->cols() || S_prev->rows() > S.rows()) {
      throw DimensionError(std::string(who) +
                           ": S_prev must be square with side <= side(S)");
    }
  }
}

}  // namespace

double objective(const Matrix& S, const Matrix& C_hat, const GmrfParams& p,
                 const Matrix* S_prev) {
  p.validate();
  check_sides(S, C_hat, S_prev, "objective");

  Matrix shifted = symmetrize(S);
  shifted.diagonal().array() += p.epsilon;
  const Eigen::SelfAdjointEigenSolver<Matrix> eig(shifted, Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success) {
    throw NumericalError("objective: eigendecomposition of S + epsilon*I failed");
  }
  if (eig.eigenvalues().minCoeff() <= 0.0) {
    throw std::domain_error("objective: S + epsilon*I is not positive definite "
                            "(min eigenvalue " +
                            std::to_string(eig.eigenvalues().minCoeff()) +
                            "); infeasible iterate");
  }
  const double logdet = eig.eigenvalues().array().log().sum();

  double value = (S.cwiseProduct(C_hat)).sum() - logdet + p.lambda * S.cwiseAbs().sum();
  if (S_prev != nullptr && p.alpha > 0.0) {
    const Index m = S_prev->rows();
    value += p.alpha * (S.topLeftCorner(m, m) - *S_prev).squaredNorm();
  }
  return value;
}

Matrix smooth_grad(const Matrix& S, const Matrix& C_hat, const GmrfParams& p,
                   const Matrix* S_prev) {
  p.validate();
  check_sides(S, C_hat, S_prev, "smooth_grad");
  const Index n = S.rows();

  Matrix shifted = symmetrize(S);
  shifted.diagonal().array() += p.epsilon;
  const Eigen::LLT<Matrix> llt(shifted);
  if (llt.info() != Eigen::Success) {
    const Eigen::SelfAdjointEigenSolver<Matrix> eig(shifted, Eigen::EigenvaluesOnly);
    throw NumericalError("smooth_grad: S + epsilon*I is not positive definite "
                         "(min eigenvalue " +
                         std::to_string(eig.eigenvalues().minCoeff()) + ")");
  }

  Matrix grad = C_hat - llt.solve(Matrix::Identity(n, n));
  if (S_prev != nullptr && p.alpha > 0.0) {
    const Index m = S_prev->rows();
    grad.topLeftCorner(m, m) += 2.0 * p.alpha * (S.topLeftCorner(m, m) - *S_prev);
  }
  return grad;
}

Matrix project_feasible(const Matrix& S, double sigma) {
  if (!(sigma > 0.0)) {
    throw ParameterError("project_feasible: sigma must be > 0, got " + std::to_string(sigma));
  }
  if (S.rows() != S.cols()) {
    throw DimensionError("project_feasible: matrix must be square");
  }
  const double bound = std::sqrt(sigma);

  Matrix sym = symmetrize(S);
  const Eigen::SelfAdjointEigenSolver<Matrix> eig(sym);
  if (eig.info() != Eigen::Success) {
    throw NumericalError("project_feasible: eigendecomposition failed");
  }
  const Vector& evals = eig.eigenvalues();
  if (evals.minCoeff() >= 0.0 && evals.maxCoeff() <= bound) {
    return sym;  // already feasible: skip the lossy reconstruction
  }
  const Vector clipped = evals.cwiseMax(0.0).cwiseMin(bound);
  // V * diag(clipped) * Vᵀ with the diagonal scaling fused into one pass.
  const Matrix scaled = eig.eigenvectors() * clipped.asDiagonal();
  return scaled * eig.eigenvectors().transpose();
}

SolveResult offline_solve(const Matrix& C_hat, const Matrix* S_prev_opt, const GmrfParams& p,
                          double eta, double tol, int max_iter) {
  p.validate();
  if (C_hat.rows() != C_hat.cols()) {
    throw DimensionError("offline_solve: C_hat must be square");
  }
  if (!(eta > 0.0) || eta > p.eta_max()) {
    throw ParameterError("offline_solve: eta must lie in (0, epsilon^2], got " +
                         std::to_string(eta));
  }
  if (!(tol > 0.0)) {
    throw ParameterError("offline_solve: tol must be > 0");
  }
  if (max_iter < 1) {
    throw ParameterError("offline_solve: max_iter must be >= 1");
  }

  const Index n = C_hat.rows();
  GmrfParams q = p;
  if (S_prev_opt == nullptr) q.alpha = 0.0;  // first timestep: nothing to anchor to

  Matrix S;
  if (S_prev_opt != nullptr) {
    if (S_prev_opt->rows() > n) {
      throw DimensionError("offline_solve: S_prev side exceeds side of C_hat");
    }
    S = zero_pad(*S_prev_opt, n);
  } else {
    // Scale-aware diagonal guess: precision of an independent model.
    const double bound = std::sqrt(q.sigma);
    S = Matrix::Zero(n, n);
    for (Index i = 0; i < n; ++i) {
      S(i, i) = std::clamp(1.0 / (C_hat(i, i) + q.epsilon), 0.0, bound);
    }
  }

  SolveResult result;
  result.residual = std::numeric_limits<double>::infinity();
  for (int k = 1; k <= max_iter; ++k) {
    const Matrix grad = smooth_grad(S, C_hat, q, S_prev_opt);
    Matrix next = project_feasible(soft_threshold(S - eta * grad, eta * q.lambda), q.sigma);
    result.residual = (next - S).norm() / std::max(1.0, S.norm());
    S = std::move(next);
    result.iterations = k;
    if (result.residual < tol) {
      result.converged = true;
      break;
    }
  }
  result.S = std::move(S);
  return result;
}

}  // namespace expgraph

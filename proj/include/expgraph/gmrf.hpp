#pragma once

// Gaussian-graphical-model specialization: penalized log-likelihood
// objective, its smooth gradient, projection onto the feasible GSO set
// {S ⪰ 0, ‖S‖₂² ≤ σ}, and an offline projected-proximal-gradient solver.

#include "expgraph/matops.hpp"

namespace expgraph {

/**
 * Hyperparameters of the GMRF objective
 *   tr(S Ĉ) − log det(S + εI) + λ‖S‖₁ + α‖[S]_old − S_prev‖²_F
 * over the feasible set {S ⪰ 0, ‖S‖₂² ≤ σ}. The smooth part is strongly
 * convex with constant 1/σ and has a 1/ε²-Lipschitz gradient, hence any
 * step size η ≤ ε² (eta_max) is admissible.
 */
struct GmrfParams {
  double epsilon = 1.0;  // determinant shift, > 0
  double sigma = 25.0;   // squared spectral bound, > 0
  double alpha = 0.0;    // weight of the distance to the previous estimate, >= 0
  double lambda = 0.0;   // l1 weight, >= 0

  double eta_max() const { return epsilon * epsilon; }
  void validate() const;  // throws ParameterError naming the violated bound
};

/**
 * Full objective value at S (all terms, including the nonsmooth λ‖S‖₁).
 * S_prev anchors the distance term and may have a smaller side than S; it
 * is compared against the top-left block of S. Passing nullptr (or having
 * alpha == 0) drops the term. Throws std::domain_error when S + εI is not
 * positive definite — the log-det barrier is meaningless there.
 */
double objective(const Matrix& S, const Matrix& C_hat, const GmrfParams& p,
                 const Matrix* S_prev = nullptr);

/**
 * Gradient of the smooth part: Ĉ − (S + εI)⁻¹ plus, when S_prev is given,
 * 2α([S]_old − S_prev) on the top-left block (zeros elsewhere — the
 * distance term does not touch entries of newly arrived nodes).
 * Throws NumericalError (reporting the minimum eigenvalue) when S + εI is
 * not positive definite.
 */
Matrix smooth_grad(const Matrix& S, const Matrix& C_hat, const GmrfParams& p,
                   const Matrix* S_prev = nullptr);

/**
 * Projection onto {S ⪰ 0, ‖S‖₂² ≤ σ}: eigenvalues are clipped to
 * [0, √σ] and the matrix rebuilt. Input is symmetrized first; an already
 * feasible matrix is returned without reconstruction.
 */
Matrix project_feasible(const Matrix& S, double sigma);

struct SolveResult {
  Matrix S;
  int iterations = 0;
  double residual = 0.0;  // final ‖S_{k+1} − S_k‖_F / max(1, ‖S_k‖_F)
  bool converged = false;
};

/**
 * Solves the GMRF objective to a fixed point of the projected proximal
 * gradient map. S_prev_opt, when present, both anchors the distance term
 * and warm-starts the iteration (zero-padded to the side of C_hat); when
 * absent, alpha is treated as 0 and the iteration starts from the diagonal
 * guess clip(1/(Ĉ_ii + ε)). Stops when the relative fixed-point residual
 * drops below tol or after max_iter iterations; non-convergence is
 * reported through the converged flag, not an exception.
 */
SolveResult offline_solve(const Matrix& C_hat, const Matrix* S_prev_opt, const GmrfParams& p,
                          double eta, double tol = 1e-10, int max_iter = 50000);

}  // namespace expgraph

#pragma once

// Dense symmetric-matrix primitives shared by every module: zero-padding,
// soft-thresholding, symmetrization and Frobenius distance. Graphs here are
// at most a few hundred nodes, so everything is dense.

#include <Eigen/Dense>

#include "expgraph/errors.hpp"

namespace expgraph {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/**
 * Embeds square Z as the top-left block of an n×n zero matrix.
 * The top-left block equals Z exactly; every other entry is exactly 0.
 * n == side(Z) is the identity. Throws DimensionError if n < side(Z).
 */
Matrix zero_pad(const Matrix& Z, Index n);

/**
 * Entry-wise soft-thresholding sign(z)·max(|z| − thr, 0), the proximal
 * operator of thr·‖·‖₁. thr must be nonnegative (ParameterError otherwise).
 */
Matrix soft_threshold(const Matrix& Z, double thr);

/**
 * (Z + Zᵀ)/2. Guards eigendecompositions downstream against floating-point
 * asymmetry drift accumulated over many gradient steps.
 */
Matrix symmetrize(const Matrix& Z);

/**
 * Frobenius distance ‖A − B‖_F. Operands must share side length; callers
 * zero-pad explicitly when comparing matrices of different eras.
 */
double frob_dist(const Matrix& A, const Matrix& B);

}  // namespace expgraph

#include "expgraph/matops.hpp"

#include <string>

namespace expgraph {

namespace {

void require_square(const Matrix& Z, const char* who) {
  if (Z.rows() != Z.cols()) {
    throw DimensionError(std::string(who) + ": matrix must be square, got " +
                         std::to_string(Z.rows()) + "x" + std::to_string(Z.cols()));
  }
}

}  // namespace

Matrix zero_pad(const Matrix& Z, Index n) {
  require_square(Z, "zero_pad");
  if (n < Z.rows()) {
    throw DimensionError("zero_pad: target side " + std::to_string(n) +
                         " smaller than input side " + std::to_string(Z.rows()));
  }
  if (n == Z.rows()) return Z;
  Matrix out = Matrix::Zero(n, n);
  out.topLeftCorner(Z.rows(), Z.cols()) = Z;
  return out;
}

Matrix soft_threshold(const Matrix& Z, double thr) {
  if (thr < 0.0) {
    throw ParameterError("soft_threshold: threshold must be nonnegative, got " +
                         std::to_string(thr));
  }
  return Z.unaryExpr([thr](double z) {
    const double m = std::abs(z) - thr;
    return m > 0.0 ? (z > 0.0 ? m : -m) : 0.0;
  });
}

Matrix symmetrize(const Matrix& Z) {
  require_square(Z, "symmetrize");
  return 0.5 * (Z + Z.transpose());
}

double frob_dist(const Matrix& A, const Matrix& B) {
  if (A.rows() != B.rows() || A.cols() != B.cols()) {
    throw DimensionError("frob_dist: dimension mismatch " + std::to_string(A.rows()) +
                         "x" + std::to_string(A.cols()) + " vs " + std::to_string(B.rows()) +
                         "x" + std::to_string(B.cols()));
  }
  return (A - B).norm();
}

}  // namespace expgraph

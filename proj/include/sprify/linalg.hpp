#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/KroneckerProduct>

#include "sprify/types.hpp"

namespace sprify {

template <typename Derived>
bool all_finite(const Eigen::MatrixBase<Derived>& M) {
  return M.allFinite();
}

namespace detail {

template <typename Scalar>
Eigen::JacobiSVD<Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>> svd_of(
    const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& M, unsigned options = 0) {
  return Eigen::JacobiSVD<Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>>(M, options);
}

// Scales each row by its largest entry magnitude before conditioning. Keeps
// genuine singularity visible while ignoring harmless row-scale imbalance
// (a pencil evaluated at |s| = 1e7 is not "singular").
template <typename Scalar>
double equilibrated_cond_impl(Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> M) {
  if (M.rows() == 0 || M.cols() == 0 || M.rows() != M.cols()) return std::numeric_limits<double>::infinity();
  for (Index i = 0; i < M.rows(); ++i) {
    const double scale = M.row(i).cwiseAbs().maxCoeff();
    if (scale == 0.0) return std::numeric_limits<double>::infinity();
    M.row(i) /= scale;
  }
  const auto svd = svd_of<Scalar>(M);
  const double smin = svd.singularValues()(svd.singularValues().size() - 1);
  const double smax = svd.singularValues()(0);
  if (smin == 0.0) return std::numeric_limits<double>::infinity();
  return smax / smin;
}

}  // namespace detail

inline double equilibrated_cond(const Matrix& M) { return detail::equilibrated_cond_impl<double>(M); }
inline double equilibrated_cond(const CMatrix& M) { return detail::equilibrated_cond_impl<Complex>(M); }

inline bool is_invertible(const Matrix& M, double cond_limit = Tolerances{}.cond_limit) {
  return M.rows() == M.cols() && M.size() > 0 && equilibrated_cond(M) <= cond_limit;
}
inline bool is_invertible(const CMatrix& M, double cond_limit = Tolerances{}.cond_limit) {
  return M.rows() == M.cols() && M.size() > 0 && equilibrated_cond(M) <= cond_limit;
}

struct RankResult {
  Index rank = 0;
  std::vector<double> singular_values;
  double tol_used = 0.0;
};

namespace detail {

template <typename Scalar>
RankResult rank_tol_impl(const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& M, double tol_rel) {
  if (!M.allFinite()) fail(ErrorCode::invalid_input, "rank_tol: non-finite entries");
  if (tol_rel < 0.0) fail(ErrorCode::invalid_input, "rank_tol: negative tolerance");
  RankResult out;
  if (M.size() == 0) return out;
  const auto svd = svd_of<Scalar>(M);
  const auto& sv = svd.singularValues();
  out.singular_values.assign(sv.data(), sv.data() + sv.size());
  out.tol_used = tol_rel * sv(0) * static_cast<double>(std::max(M.rows(), M.cols()));
  out.rank = std::count_if(out.singular_values.begin(), out.singular_values.end(),
                           [&](double s) { return s > out.tol_used; });
  return out;
}

}  // namespace detail

/// Numerical rank: singular values above tol_rel * sigma_max * max(rows, cols).
inline RankResult rank_tol(const Matrix& M, double tol_rel = kDefaultRankTolRel) {
  return detail::rank_tol_impl<double>(M, tol_rel);
}
inline RankResult rank_tol(const CMatrix& M, double tol_rel = kDefaultRankTolRel) {
  return detail::rank_tol_impl<Complex>(M, tol_rel);
}

inline std::vector<Complex> eigenvalues(const Matrix& M) {
  if (M.rows() != M.cols()) fail(ErrorCode::dimension_mismatch, "eigenvalues: matrix not square");
  if (!M.allFinite()) fail(ErrorCode::invalid_input, "eigenvalues: non-finite entries");
  if (M.size() == 0) return {};
  Eigen::EigenSolver<Matrix> es(M, /*computeEigenvectors=*/false);
  if (es.info() != Eigen::Success) fail(ErrorCode::numerical_failure, "eigenvalues: iteration failed");
  const auto& v = es.eigenvalues();
  return {v.data(), v.data() + v.size()};
}

inline std::vector<Complex> eigenvalues(const CMatrix& M) {
  if (M.rows() != M.cols()) fail(ErrorCode::dimension_mismatch, "eigenvalues: matrix not square");
  if (!M.allFinite()) fail(ErrorCode::invalid_input, "eigenvalues: non-finite entries");
  if (M.size() == 0) return {};
  Eigen::ComplexEigenSolver<CMatrix> es(M, /*computeEigenvectors=*/false);
  if (es.info() != Eigen::Success) fail(ErrorCode::numerical_failure, "eigenvalues: iteration failed");
  const auto& v = es.eigenvalues();
  return {v.data(), v.data() + v.size()};
}

inline bool is_hurwitz(const Matrix& A, double stab_tol = Tolerances{}.stab) {
  for (Complex lam : eigenvalues(A))
    if (lam.real() >= -stab_tol) return false;
  return true;
}

/// Solves P A + A' P + Q = 0 for symmetric positive definite P via the
/// vectorized (Kronecker) linear system. A must be Hurwitz, Q symmetric
/// positive definite.
inline Matrix solve_lyapunov(const Matrix& A, const Matrix& Q) {
  const Index k = A.rows();
  if (A.cols() != k) fail(ErrorCode::dimension_mismatch, "solve_lyapunov: A not square");
  if (Q.rows() != k || Q.cols() != k)
    fail(ErrorCode::dimension_mismatch, "solve_lyapunov: Q dimension does not match A");
  if (!A.allFinite() || !Q.allFinite()) fail(ErrorCode::invalid_input, "solve_lyapunov: non-finite entries");
  if ((Q - Q.transpose()).norm() > 1e-12 * std::max(1.0, Q.norm()))
    fail(ErrorCode::invalid_input, "solve_lyapunov: Q not symmetric");
  {
    Eigen::SelfAdjointEigenSolver<Matrix> qe(0.5 * (Q + Q.transpose()), Eigen::EigenvaluesOnly);
    if (qe.eigenvalues()(0) <= 0.0) fail(ErrorCode::invalid_input, "solve_lyapunov: Q not positive definite");
  }
  if (!is_hurwitz(A)) fail(ErrorCode::infeasible, "solve_lyapunov: A is not Hurwitz");

  const Matrix I = Matrix::Identity(k, k);
  const Matrix At = A.transpose();
  Matrix lhs = Eigen::kroneckerProduct(I, At).eval() + Eigen::kroneckerProduct(At, I).eval();
  Eigen::VectorXd rhs = -Eigen::Map<const Eigen::VectorXd>(Q.data(), k * k);
  Eigen::VectorXd p = lhs.colPivHouseholderQr().solve(rhs);
  Matrix P = Eigen::Map<Matrix>(p.data(), k, k);
  P = 0.5 * (P + P.transpose()).eval();

  const double residual = (P * A + At * P + Q).norm();
  if (!(residual <= 1e-10 * Q.norm()))
    fail(ErrorCode::numerical_failure, "solve_lyapunov: residual " + std::to_string(residual) +
                                           " exceeds 1e-10 * |Q|");
  Eigen::SelfAdjointEigenSolver<Matrix> pe(P, Eigen::EigenvaluesOnly);
  if (pe.eigenvalues()(0) <= 0.0)
    fail(ErrorCode::numerical_failure, "solve_lyapunov: computed P is not positive definite");
  return P;
}

struct FullRankFactors {
  Matrix X;  // rows(M) x r
  Matrix Y;  // cols(M) x r, orthonormal columns
  Index rank = 0;
};

/// Full-rank factorization M = X * Y' from the truncated SVD.
inline FullRankFactors full_rank_decomposition(const Matrix& M, double tol_rel = kDefaultRankTolRel) {
  if (!M.allFinite()) fail(ErrorCode::invalid_input, "full_rank_decomposition: non-finite entries");
  if (M.size() == 0 || M.isZero(0))
    fail(ErrorCode::invalid_input, "full_rank_decomposition: zero matrix has no full-rank factors");
  Eigen::JacobiSVD<Matrix> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  const double tol = tol_rel * sv(0) * static_cast<double>(std::max(M.rows(), M.cols()));
  Index r = 0;
  while (r < sv.size() && sv(r) > tol) ++r;
  FullRankFactors out;
  out.rank = r;
  out.X = svd.matrixU().leftCols(r) * sv.head(r).asDiagonal();
  out.Y = svd.matrixV().leftCols(r);
  return out;
}

/// Smallest k >= 0 with rank(M^(k+1)) == rank(M^k); the nilpotency index of
/// the zero eigenvalue when M is singular. Capped at the dimension.
inline Index matrix_power_index(const Matrix& M, double tol_rel = kDefaultRankTolRel) {
  const Index dim = M.rows();
  if (M.cols() != dim) fail(ErrorCode::dimension_mismatch, "matrix_power_index: matrix not square");
  if (dim == 0) return 0;
  Matrix power = Matrix::Identity(dim, dim);
  Index prev_rank = dim;
  for (Index k = 0; k < dim; ++k) {
    power = (power * M).eval();
    // ranks of powers cannot grow; clamp guards noisy rank decisions
    const Index r = std::min(rank_tol(power, tol_rel).rank, prev_rank);
    if (r == prev_rank) return k;
    prev_rank = r;
  }
  return dim;
}

}  // namespace sprify

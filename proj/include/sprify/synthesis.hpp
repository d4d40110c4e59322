#pragma once

#include <optional>
#include <string>
#include <vector>

#include "sprify/descriptor_system.hpp"
#include "sprify/frequency_check.hpp"
#include "sprify/linalg.hpp"
#include "sprify/spectral_check.hpp"
#include "sprify/types.hpp"

namespace sprify {

/// Additive split of the inverse transfer function,
///   G(s)^{-1} = s H1 + D2 + R(s),  R(s) = C2 (s I - A2)^{-1} B2 when present.
struct GinvDecomposition {
  Matrix H1, D2;
  bool has_R = false;
  Matrix A2, B2, C2;       // empty unless has_R
  bool a2_hurwitz = true;  // meaningful only when has_R
  // intermediates kept for diagnostics and tests
  Matrix X, Y, E1, B1, C1, X1, Y1;
  InverseBlocks blocks;
  Index m = 0;
};

/// Evaluates s H1 + D2 + R(s) from a decomposition.
inline CMatrix eval_decomposition(const GinvDecomposition& dec, Complex s) {
  CMatrix out = s * dec.H1.cast<Complex>() + dec.D2.cast<Complex>();
  if (dec.has_R) {
    const Index k = dec.A2.rows();
    const CMatrix res = (s * CMatrix::Identity(k, k) - dec.A2.cast<Complex>())
                            .partialPivLu()
                            .solve(dec.B2.cast<Complex>());
    out += dec.C2.cast<Complex>() * res;
  }
  return out;
}

/// Splits the inverse via the reduced pencil: rank factors of E, then of E1.
/// Requires the block system matrix to be invertible and, when E1 is nonzero,
/// the pencil index to be at most two (Y1' X1 invertible).
inline GinvDecomposition decompose_ginv(const DescriptorSystem& sys, const Tolerances& tol = {}) {
  check_dimensions(sys);
  const AugmentedPencil ap = augmented_pencil(sys);
  GinvDecomposition dec;
  dec.m = sys.m();
  try {
    dec.blocks = inverse_blocks(ap, tol);
  } catch (const Error&) {
    fail(ErrorCode::infeasible, "decompose_ginv: block system matrix [A B; C D] is singular");
  }
  const Matrix& At = dec.blocks.Atilde;
  const Matrix& Bt = dec.blocks.Btilde;
  const Matrix& Ct = dec.blocks.Ctilde;

  if (sys.E.isZero(0)) {
    dec.H1 = Matrix::Zero(dec.m, dec.m);
    dec.D2 = dec.blocks.Dtilde;
    return dec;
  }

  const FullRankFactors f = full_rank_decomposition(sys.E, tol.rank_rel);
  dec.X = f.X;
  dec.Y = f.Y;
  dec.E1 = f.Y.transpose() * At * f.X;
  dec.B1 = f.Y.transpose() * Bt;
  dec.C1 = -(Ct * f.X);

  const double e1_scale = At.norm() * f.X.norm() * f.Y.norm();
  if (dec.E1.norm() <= tol.decomp_zero_rel * std::max(1.0, e1_scale)) {
    // proper inverse with a pure derivative coefficient
    dec.H1 = Ct * sys.E * Bt;
    dec.D2 = dec.blocks.Dtilde;
    if (dec.H1.norm() <= tol.decomp_zero_rel * std::max(1.0, Ct.norm() * sys.E.norm() * Bt.norm()))
      dec.H1.setZero();
    return dec;
  }

  const FullRankFactors f1 = full_rank_decomposition(dec.E1, tol.rank_rel);
  dec.X1 = f1.X;
  dec.Y1 = f1.Y;
  const Matrix W = f1.Y.transpose() * f1.X;  // equals A2^{-1} when the index allows it
  if (!is_invertible(W, tol.cond_limit))
    fail(ErrorCode::index_too_high,
         "decompose_ginv: pencil index exceeds two, inverse has a higher-order pole at infinity");
  dec.has_R = true;
  dec.A2 = W.partialPivLu().inverse();
  dec.B2 = dec.A2 * f1.Y.transpose() * dec.B1;
  dec.C2 = dec.C1 * f1.X * dec.A2 * dec.A2;
  dec.D2 = dec.blocks.Dtilde + dec.C2 * W * dec.B2;
  const Index r = dec.E1.rows();
  dec.H1 = -dec.C1 * (Matrix::Identity(r, r) - f1.X * dec.A2 * f1.Y.transpose()) * dec.B1;
  const double h1_scale = dec.C1.norm() * (1.0 + f1.X.norm() * dec.A2.norm() * f1.Y.norm()) * dec.B1.norm();
  if (dec.H1.norm() <= tol.decomp_zero_rel * std::max(1.0, h1_scale)) dec.H1.setZero();
  dec.a2_hurwitz = is_hurwitz(dec.A2, tol.stab);
  return dec;
}

/// Orthogonal L with L' H1 symmetric positive semidefinite: L = U V' from the
/// SVD of H1. Identity when H1 = 0. Singular vector pairs are sign-fixed
/// (largest entry of each left vector positive) so the choice is deterministic.
inline Matrix choose_L(const Matrix& H1) {
  if (H1.rows() != H1.cols()) fail(ErrorCode::dimension_mismatch, "choose_L: H1 must be square");
  const Index m = H1.rows();
  if (m == 0 || H1.isZero(0)) return Matrix::Identity(m, m);
  Eigen::JacobiSVD<Matrix> svd(H1, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Matrix U = svd.matrixU();
  Matrix V = svd.matrixV();
  for (Index j = 0; j < m; ++j) {
    Index imax = 0;
    U.col(j).cwiseAbs().maxCoeff(&imax);
    if (U(imax, j) < 0.0) {
      U.col(j) = -U.col(j);
      V.col(j) = -V.col(j);
    }
  }
  return U * V.transpose();
}

struct NSelection {
  Matrix N, W, Q;
  std::optional<Matrix> P;
  double kappa = 1.0;
  double margin = 2.0;  // smallest eigenvalue of N + N' - W
};

/// N = kappa I exceeding the quadratic bound W = (P B2 - C2' L)' Q^{-1} (...)
/// by one (per eigenvalue of the kappa bound). Without a strictly proper part
/// the bound is empty and N = I.
inline NSelection choose_N(const GinvDecomposition& dec, const Matrix& L, const Matrix& Q,
                           std::optional<double> kappa_override = std::nullopt) {
  const Index m = dec.m;
  if (L.rows() != m || L.cols() != m) fail(ErrorCode::dimension_mismatch, "choose_N: L must be m x m");
  NSelection sel;
  sel.W = Matrix::Zero(m, m);
  if (dec.has_R) {
    if (!dec.a2_hurwitz) fail(ErrorCode::infeasible, "choose_N: internal pole matrix is not Hurwitz");
    sel.Q = Q;
    const Matrix P = solve_lyapunov(dec.A2, Q);
    sel.P = P;
    const Matrix V = P * dec.B2 - dec.C2.transpose() * L;
    Matrix W = V.transpose() * Q.ldlt().solve(V);
    sel.W = 0.5 * (W + W.transpose()).eval();
  }
  double lambda_max = 0.0;
  if (m > 0) {
    Eigen::SelfAdjointEigenSolver<Matrix> we(sel.W, Eigen::EigenvaluesOnly);
    lambda_max = std::max(0.0, we.eigenvalues()(m - 1));
  }
  sel.kappa = kappa_override ? *kappa_override : lambda_max / 2.0 + 1.0;
  if (!(sel.kappa > 0.0)) fail(ErrorCode::invalid_input, "choose_N: kappa must be positive");
  sel.N = sel.kappa * Matrix::Identity(m, m);
  Eigen::SelfAdjointEigenSolver<Matrix> me(Matrix(sel.N + sel.N.transpose() - sel.W), Eigen::EigenvaluesOnly);
  sel.margin = me.eigenvalues()(0);
  return sel;
}

/// Feedback and weighting gains with the construction bookkeeping.
struct ControllerGains {
  Matrix K, L, N, M;
  std::optional<Matrix> P;
  Matrix Q;  // empty when no Lyapunov step was needed
  double kappa = 1.0;
  double margin = 0.0;
};

struct SynthesisOptions {
  std::optional<Matrix> Q;
  std::optional<double> q_scale;
  std::optional<double> kappa_override;
  std::optional<Matrix> L_override;
};

struct SynthesisResult {
  bool feasible = false;
  std::optional<ControllerGains> gains;
  std::optional<GinvDecomposition> decomposition;
  FrequencyReport frequency;
  std::vector<std::string> notes;
  std::string infeasible_reason;
};

namespace detail {

inline std::string join(const std::vector<std::string>& parts, const std::string& sep = "; ") {
  std::string out;
  for (const auto& p : parts) {
    if (!out.empty()) out += sep;
    out += p;
  }
  return out;
}

}  // namespace detail

/// Full synthesis: feasibility via the frequency test, decomposition of the
/// inverse, L from the derivative coefficient, N from the Lyapunov bound,
/// K = D2 - L^{-T} N. N is doubled (up to 16x) if I - K D comes out singular.
inline SynthesisResult synthesize(const DescriptorSystem& sys, const SynthesisOptions& opts = {},
                                  const Tolerances& tol = {}) {
  check_dimensions(sys);
  SynthesisResult res;
  res.frequency = frequency_sprifiability(sys, tol);
  if (!res.frequency.sprifiable) {
    res.infeasible_reason = res.frequency.reasons.empty() ? "system fails the pole conditions"
                                                          : detail::join(res.frequency.reasons);
    return res;
  }

  GinvDecomposition dec;
  try {
    dec = decompose_ginv(sys, tol);
  } catch (const Error& e) {
    res.infeasible_reason = e.what();
    return res;
  }
  if (dec.has_R && !dec.a2_hurwitz) {
    res.infeasible_reason = "finite poles of the inverse are not all in the open left half plane";
    res.decomposition = dec;
    return res;
  }
  const Index m = dec.m;

  Matrix L;
  if (opts.L_override) {
    L = *opts.L_override;
    if (L.rows() != m || L.cols() != m) fail(ErrorCode::dimension_mismatch, "synthesize: L override must be m x m");
    if (!is_invertible(L, tol.cond_limit)) fail(ErrorCode::invalid_input, "synthesize: L override is singular");
    const Matrix S = L.transpose() * dec.H1;
    const double scale = std::max(1.0, S.norm());
    if ((S - S.transpose()).norm() > 1e-9 * scale)
      fail(ErrorCode::invalid_input, "synthesize: L' H1 not symmetric for the supplied L");
    Eigen::SelfAdjointEigenSolver<Matrix> se(Matrix(0.5 * (S + S.transpose())), Eigen::EigenvaluesOnly);
    if (se.eigenvalues()(0) < -1e-9 * scale)
      fail(ErrorCode::invalid_input, "synthesize: L' H1 not positive semidefinite for the supplied L");
  } else {
    L = choose_L(dec.H1);
  }

  Matrix Q;
  if (dec.has_R) {
    const Index k = dec.A2.rows();
    if (opts.Q && opts.q_scale) fail(ErrorCode::invalid_input, "synthesize: give either Q or q_scale, not both");
    if (opts.Q) {
      Q = *opts.Q;
      if (Q.rows() != k || Q.cols() != k)
        fail(ErrorCode::dimension_mismatch, "synthesize: Q must match the internal pole matrix dimension");
    } else {
      Q = opts.q_scale.value_or(1.0) * Matrix::Identity(k, k);
    }
  }

  NSelection sel = choose_N(dec, L, Q, opts.kappa_override);

  const auto gain_for = [&](const Matrix& N) { return Matrix(dec.D2 - L.transpose().partialPivLu().solve(N)); };
  Matrix N = sel.N;
  Matrix K = gain_for(N);
  bool well_posed = false;
  for (int scale : {1, 2, 4, 8, 16}) {
    N = static_cast<double>(scale) * sel.N;
    K = gain_for(N);
    if (equilibrated_cond(Matrix(Matrix::Identity(m, m) - K * sys.D)) <= tol.cond_limit) {
      well_posed = true;
      if (scale > 1) {
        sel.kappa *= scale;
        res.notes.push_back("N rescaled by " + std::to_string(scale) + " to keep I - K D invertible");
      }
      break;
    }
  }
  if (!well_posed)
    fail(ErrorCode::numerical_failure, "synthesize: I - K D singular for every N rescaling");

  ControllerGains g;
  g.K = K;
  g.L = L;
  g.N = N;
  g.M = N - L.transpose() * dec.D2;
  g.P = sel.P;
  g.Q = Q;
  g.kappa = sel.kappa;
  {
    Eigen::SelfAdjointEigenSolver<Matrix> me(Matrix(N + N.transpose() - sel.W), Eigen::EigenvaluesOnly);
    g.margin = me.eigenvalues()(0);
  }
  res.feasible = true;
  res.gains = std::move(g);
  res.decomposition = std::move(dec);
  return res;
}

}  // namespace sprify

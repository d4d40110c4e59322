#pragma once

#include <algorithm>
#include <array>
#include <optional>
#include <random>
#include <utility>
#include <vector>

#include "sprify/linalg.hpp"
#include "sprify/types.hpp"

namespace sprify {

/// Linear descriptor system  E x' = A x + B (u + w),  y = C x + D (u + w).
/// E may be singular or zero; (E, A) must form a regular pencil.
struct DescriptorSystem {
  Matrix E, A, B, C, D;
  Index n() const { return A.rows(); }
  Index m() const { return B.cols(); }
};

inline void check_dimensions(const DescriptorSystem& sys) {
  const Index n = sys.A.rows();
  const Index m = sys.B.cols();
  if (n < 1 || m < 1) fail(ErrorCode::dimension_mismatch, "system: state and input dimensions must be positive");
  if (sys.A.cols() != n) fail(ErrorCode::dimension_mismatch, "system: A must be square");
  if (sys.E.rows() != n || sys.E.cols() != n) fail(ErrorCode::dimension_mismatch, "system: E must be n x n");
  if (sys.B.rows() != n) fail(ErrorCode::dimension_mismatch, "system: B must be n x m");
  if (sys.C.rows() != m || sys.C.cols() != n) fail(ErrorCode::dimension_mismatch, "system: C must be m x n");
  if (sys.D.rows() != m || sys.D.cols() != m) fail(ErrorCode::dimension_mismatch, "system: D must be m x m");
  if (!sys.E.allFinite() || !sys.A.allFinite() || !sys.B.allFinite() || !sys.C.allFinite() || !sys.D.allFinite())
    fail(ErrorCode::invalid_input, "system: non-finite entries");
}

/// Fixed complex sample points used for regularity probing and shift selection.
inline const std::array<Complex, 12>& regularity_probe_points() {
  static const std::array<Complex, 12> points = [] {
    std::array<Complex, 12> p{};
    std::mt19937_64 gen(0x5ee0f00dULL);
    auto draw = [&gen] {
      // top 53 bits to [0,1), then to [-3,3); bit-level deterministic
      const double u = static_cast<double>(gen() >> 11) * 0x1.0p-53;
      return 6.0 * u - 3.0;
    };
    for (auto& z : p) z = Complex(draw(), draw());
    return p;
  }();
  return points;
}

/// Checks dimensions, finiteness and pencil regularity. Regularity is probed:
/// at least one sample point must give a well-conditioned s E - A.
inline void validate(const DescriptorSystem& sys, const Tolerances& tol = {}) {
  check_dimensions(sys);
  const CMatrix Ec = sys.E.cast<Complex>();
  const CMatrix Ac = sys.A.cast<Complex>();
  for (Complex s : regularity_probe_points()) {
    if (equilibrated_cond(CMatrix(s * Ec - Ac)) <= tol.cond_limit) return;
  }
  fail(ErrorCode::irregular_pencil, "validate: s E - A is singular at every probe point; pencil appears irregular");
}

/// Pencil pair realizing the inverse transfer function: the inverse of
/// G(s) = C (s E - A)^{-1} B + D is calC (s calE - calA)^{-1} calB.
struct AugmentedPencil {
  Matrix calE, calA, calB, calC;
  Index n = 0, m = 0;
};

inline AugmentedPencil augmented_pencil(const DescriptorSystem& sys) {
  check_dimensions(sys);
  const Index n = sys.n(), m = sys.m();
  AugmentedPencil ap;
  ap.n = n;
  ap.m = m;
  ap.calE = Matrix::Zero(n + m, n + m);
  ap.calE.topLeftCorner(n, n) = sys.E;
  ap.calA = Matrix::Zero(n + m, n + m);
  ap.calA.topLeftCorner(n, n) = sys.A;
  ap.calA.topRightCorner(n, m) = sys.B;
  ap.calA.bottomLeftCorner(m, n) = sys.C;
  ap.calA.bottomRightCorner(m, m) = sys.D;
  ap.calB = Matrix::Zero(n + m, m);
  ap.calB.bottomRows(m) = Matrix::Identity(m, m);
  ap.calC = Matrix::Zero(m, n + m);
  ap.calC.rightCols(m) = -Matrix::Identity(m, m);
  return ap;
}

/// Maximal-rank conditions on [E B] and [E; C]. When they hold, the spectral
/// and frequency tests are necessary as well as sufficient.
inline bool rank_conditions(const DescriptorSystem& sys, double tol_rel = kDefaultRankTolRel) {
  check_dimensions(sys);
  const Index n = sys.n(), m = sys.m();
  Matrix EB(n, n + m);
  EB << sys.E, sys.B;
  if (rank_tol(EB, tol_rel).rank != n) return false;
  Matrix EC(n + m, n);
  EC << sys.E, sys.C;
  return rank_tol(EC, tol_rel).rank == n;
}

struct PencilEigenvalues {
  std::vector<Complex> finite;
  Complex shift_used{};
};

/// Finite eigenvalues of the pencil (E, A): shift-and-invert with a
/// well-conditioned probe shift. Eigenvalues mu of (A - sigma E)^{-1} E with
/// |mu| below tol are the infinite part and are dropped. Without an explicit
/// shift the result is the shift-stable subset of two probe computations:
/// deep nilpotent chains at infinity leak shift-dependent spurious finite
/// eigenvalues, and only genuine ones reappear at the same place.
inline PencilEigenvalues pencil_eigenvalues(const Matrix& E, const Matrix& A, const Tolerances& tol = {},
                                            std::optional<Complex> shift_override = std::nullopt) {
  const Index n = A.rows();
  if (E.rows() != n || E.cols() != n || A.cols() != n)
    fail(ErrorCode::dimension_mismatch, "pencil_eigenvalues: E and A must be square of equal size");
  if (!E.allFinite() || !A.allFinite()) fail(ErrorCode::invalid_input, "pencil_eigenvalues: non-finite entries");
  const CMatrix Ec = E.cast<Complex>();
  const CMatrix Ac = A.cast<Complex>();

  const auto finite_at = [&](Complex sigma) {
    const CMatrix M = (Ac - sigma * Ec).partialPivLu().solve(Ec);
    const double mu_cut = 1e-10 * M.norm();
    std::vector<Complex> out;
    for (Complex mu : eigenvalues(M))
      if (std::abs(mu) > mu_cut) out.push_back(sigma + 1.0 / mu);
    return out;
  };

  if (shift_override) {
    const Complex sigma = *shift_override;
    if (equilibrated_cond(CMatrix(Ac - sigma * Ec)) > tol.cond_limit)
      fail(ErrorCode::invalid_input, "pencil_eigenvalues: supplied shift hits a pencil eigenvalue");
    PencilEigenvalues out;
    out.shift_used = sigma;
    out.finite = finite_at(sigma);
    return out;
  }

  std::vector<std::pair<double, Complex>> usable;
  for (Complex s : regularity_probe_points()) {
    const double c = equilibrated_cond(CMatrix(Ac - s * Ec));
    if (c <= tol.cond_limit) usable.emplace_back(c, s);
  }
  if (usable.empty())
    fail(ErrorCode::irregular_pencil, "pencil_eigenvalues: no usable shift; pencil appears irregular");
  std::sort(usable.begin(), usable.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });

  PencilEigenvalues out;
  out.shift_used = usable[0].second;
  out.finite = finite_at(usable[0].second);
  if (usable.size() >= 2) {
    const std::vector<Complex> confirm = finite_at(usable[1].second);
    std::vector<Complex> kept;
    for (Complex lam : out.finite) {
      for (Complex other : confirm) {
        if (std::abs(lam - other) <= 1e-6 * std::max(1.0, std::abs(lam))) {
          kept.push_back(lam);
          break;
        }
      }
    }
    out.finite = std::move(kept);
  }
  return out;
}

/// Index of the pencil (calE, calA) with calA invertible: nilpotency index of
/// the zero eigenvalue of calA^{-1} calE, via ranks of powers.
inline Index pencil_index(const Matrix& calE, const Matrix& calA, const Tolerances& tol = {}) {
  if (calE.rows() != calA.rows() || calE.cols() != calA.cols() || calA.rows() != calA.cols())
    fail(ErrorCode::dimension_mismatch, "pencil_index: matrices must be square of equal size");
  if (!is_invertible(calA, tol.cond_limit))
    fail(ErrorCode::singular_matrix, "pencil_index: pencil matrix is singular, index undefined");
  const Matrix M = calA.partialPivLu().solve(calE);
  return matrix_power_index(M, tol.rank_rel);
}

namespace detail {

inline std::vector<Complex> modal_rank_drops(const DescriptorSystem& sys, const std::vector<Complex>& candidates,
                                             bool input_side, double tol_rel) {
  check_dimensions(sys);
  const Index n = sys.n(), m = sys.m();
  std::vector<Complex> out;
  for (Complex lam : candidates) {
    const CMatrix pencil = lam * sys.E.cast<Complex>() - sys.A.cast<Complex>();
    CMatrix test;
    if (input_side) {
      test.resize(n, n + m);
      test << pencil, sys.B.cast<Complex>();
    } else {
      test.resize(n + m, n);
      test << pencil, sys.C.cast<Complex>();
    }
    if (rank_tol(test, tol_rel).rank < n) out.push_back(lam);
  }
  return out;
}

}  // namespace detail

/// Candidates where [lambda E - A, B] loses rank: modes feedback cannot move.
inline std::vector<Complex> uncontrollable_eigenvalues(const DescriptorSystem& sys,
                                                       const std::vector<Complex>& candidates,
                                                       double tol_rel = kDefaultRankTolRel) {
  return detail::modal_rank_drops(sys, candidates, /*input_side=*/true, tol_rel);
}

/// Candidates where [lambda E - A; C] loses rank.
inline std::vector<Complex> unobservable_eigenvalues(const DescriptorSystem& sys,
                                                     const std::vector<Complex>& candidates,
                                                     double tol_rel = kDefaultRankTolRel) {
  return detail::modal_rank_drops(sys, candidates, /*input_side=*/false, tol_rel);
}

/// G(s) = C (s E - A)^{-1} B + D by linear solve.
inline CMatrix eval_G(const DescriptorSystem& sys, Complex s, const Tolerances& tol = {}) {
  check_dimensions(sys);
  const CMatrix M = s * sys.E.cast<Complex>() - sys.A.cast<Complex>();
  if (equilibrated_cond(M) > tol.cond_limit)
    fail(ErrorCode::pole_evaluation, "eval_G: s E - A singular near s = " + format_complex(s));
  return sys.C.cast<Complex>() * M.partialPivLu().solve(sys.B.cast<Complex>()) + sys.D.cast<Complex>();
}

/// G(s)^{-1} realized directly from the augmented pencil; never inverts a
/// computed G(s).
inline CMatrix eval_G_inverse(const DescriptorSystem& sys, Complex s, const Tolerances& tol = {}) {
  const AugmentedPencil ap = augmented_pencil(sys);
  const CMatrix M = s * ap.calE.cast<Complex>() - ap.calA.cast<Complex>();
  if (equilibrated_cond(M) > tol.cond_limit)
    fail(ErrorCode::pole_evaluation,
         "eval_G_inverse: pole of the inverse (or pencil eigenvalue) near s = " + format_complex(s));
  return ap.calC.cast<Complex>() * M.partialPivLu().solve(ap.calB.cast<Complex>());
}

/// Closed loop under u = K y, z = L y, driven by the exogenous input w.
struct ClosedLoopSystem {
  Matrix E, Ac, Bc, Cc, Dc;
  Matrix K, L;  // gains the loop was built with
};

inline ClosedLoopSystem close_loop(const DescriptorSystem& sys, const Matrix& K, const Matrix& L,
                                   const Tolerances& tol = {}) {
  check_dimensions(sys);
  const Index m = sys.m();
  if (K.rows() != m || K.cols() != m) fail(ErrorCode::dimension_mismatch, "close_loop: K must be m x m");
  if (L.rows() != m || L.cols() != m) fail(ErrorCode::dimension_mismatch, "close_loop: L must be m x m");
  if (!K.allFinite() || !L.allFinite()) fail(ErrorCode::invalid_input, "close_loop: non-finite gains");
  if (!is_invertible(L, tol.cond_limit)) fail(ErrorCode::invalid_input, "close_loop: L is not invertible");

  const Matrix I = Matrix::Identity(m, m);
  const Matrix W1 = I - K * sys.D;
  if (equilibrated_cond(W1) > tol.cond_limit)
    fail(ErrorCode::ill_posed_feedback, "close_loop: I - K D is singular, feedback ill posed");
  const auto lu1 = W1.partialPivLu();
  const Matrix W2inv = (I - sys.D * K).partialPivLu().inverse();

  ClosedLoopSystem cl;
  cl.E = sys.E;
  cl.Ac = sys.A + sys.B * lu1.solve(K * sys.C);
  cl.Bc = sys.B * lu1.inverse();
  cl.Cc = L * W2inv * sys.C;
  cl.Dc = L * sys.D * lu1.inverse();
  cl.K = K;
  cl.L = L;
  return cl;
}

/// The closed loop viewed as a descriptor system in its own right.
inline DescriptorSystem closed_loop_system(const ClosedLoopSystem& cl) {
  return DescriptorSystem{cl.E, cl.Ac, cl.Bc, cl.Cc, cl.Dc};
}

}  // namespace sprify

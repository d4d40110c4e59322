#pragma once

#include <optional>
#include <string>
#include <vector>

#include "sprify/descriptor_system.hpp"
#include "sprify/linalg.hpp"
#include "sprify/types.hpp"

namespace sprify {

/// Blocks of calA^{-1}, partitioned like the original system matrices.
struct InverseBlocks {
  Matrix Atilde, Btilde, Ctilde, Dtilde;
};

inline InverseBlocks inverse_blocks(const AugmentedPencil& ap, const Tolerances& tol = {}) {
  if (!is_invertible(ap.calA, tol.cond_limit))
    fail(ErrorCode::singular_matrix, "inverse_blocks: block system matrix is singular");
  const Matrix inv = ap.calA.partialPivLu().inverse();
  const Index n = ap.n, m = ap.m;
  return InverseBlocks{inv.topLeftCorner(n, n), inv.topRightCorner(n, m), inv.bottomLeftCorner(m, n),
                       inv.bottomRightCorner(m, m)};
}

/// Reduced matrix E1 = Y' Atilde X built from the full-rank factors of E.
/// Its nonzero eigenvalues match those of calA^{-1} calE; the zero eigenvalue
/// loses exactly one Jordan level in the reduction.
inline Matrix reduced_E1(const DescriptorSystem& sys, const InverseBlocks& blocks, double tol_rel = kDefaultRankTolRel) {
  const FullRankFactors f = full_rank_decomposition(sys.E, tol_rel);
  return f.Y.transpose() * blocks.Atilde * f.X;
}

namespace detail {

inline bool effectively_zero(const Matrix& M, double scale, double rel_tol) {
  return M.norm() <= rel_tol * std::max(1.0, scale);
}

}  // namespace detail

/// Nilpotency index of the zero eigenvalue of calA^{-1} calE, computed through
/// the E1 reduction (smaller matrices, fewer rank decisions).
inline Index zero_index(const DescriptorSystem& sys, const InverseBlocks& blocks, const Tolerances& tol = {}) {
  check_dimensions(sys);
  if (sys.E.isZero(0)) return 1;
  const FullRankFactors f = full_rank_decomposition(sys.E, tol.rank_rel);
  const Matrix E1 = f.Y.transpose() * blocks.Atilde * f.X;
  const double scale = blocks.Atilde.norm() * f.X.norm() * f.Y.norm();
  if (detail::effectively_zero(E1, scale, tol.decomp_zero_rel)) return 2;
  if (rank_tol(E1, tol.rank_rel).rank == E1.rows()) return 1;
  return 1 + matrix_power_index(E1, tol.rank_rel);
}

struct SpectralReport {
  bool sprifiable = false;
  bool calA_invertible = false;
  bool rank_conditions_hold = false;
  std::vector<Complex> eigenvalues;          // of calA^{-1} calE (or of the shortcut route's matrix)
  std::optional<Index> zero_index;           // absent when calA is singular or the route cannot tell
  std::optional<Matrix> E1;
  std::vector<std::string> reasons;
};

/// Eigenvalue test on calA^{-1} calE: invertible calA, nonzero eigenvalues in
/// the open left half plane, zero eigenvalue of index at most two.
inline SpectralReport spectral_sprifiability(const DescriptorSystem& sys, const Tolerances& tol = {}) {
  check_dimensions(sys);
  SpectralReport rep;
  rep.rank_conditions_hold = rank_conditions(sys, tol.rank_rel);
  const AugmentedPencil ap = augmented_pencil(sys);

  if (!is_invertible(ap.calA, tol.cond_limit)) {
    rep.calA_invertible = false;
    rep.sprifiable = false;
    rep.reasons.push_back("block system matrix [A B; C D] is singular");
    if (!rep.rank_conditions_hold)
      rep.reasons.push_back("rank conditions on [E B] and [E; C] fail; test is sufficient only");
    return rep;
  }
  rep.calA_invertible = true;

  const Matrix M = ap.calA.partialPivLu().solve(ap.calE);
  rep.eigenvalues = sprify::eigenvalues(M);
  const double eig_cut = tol.eig_zero_rel * std::max(1.0, M.norm());
  bool nonzero_ok = true;
  for (Complex lam : rep.eigenvalues) {
    if (std::abs(lam) <= eig_cut) continue;
    if (lam.real() >= -tol.stab) {
      nonzero_ok = false;
      const bool marginal = std::abs(lam.real()) <= tol.stab;
      rep.reasons.push_back(std::string(marginal ? "marginal" : "unstable") + " eigenvalue of calA^-1 calE at " +
                            format_complex(lam));
    }
  }

  const InverseBlocks blocks = inverse_blocks(ap, tol);
  const Index zi = zero_index(sys, blocks, tol);
  rep.zero_index = zi;
  if (!sys.E.isZero(0)) rep.E1 = reduced_E1(sys, blocks, tol.rank_rel);
  if (zi > 2) rep.reasons.push_back("zero eigenvalue has index " + std::to_string(zi) + " > 2");

  rep.sprifiable = nonzero_ok && zi <= 2;
  if (!rep.rank_conditions_hold)
    rep.reasons.push_back("rank conditions on [E B] and [E; C] fail; verdict is sufficient, not necessary");
  return rep;
}

/// Cheaper routes for invertible E (premultiplied by E^{-1} internally):
/// invertible D reduces to a Hurwitz test on A - B D^{-1} C; D = 0 replaces
/// the index condition with invertibility of C B. Absent when E is singular.
inline std::optional<SpectralReport> nonalgebraic_shortcuts(const DescriptorSystem& sys, const Tolerances& tol = {}) {
  check_dimensions(sys);
  if (!is_invertible(sys.E, tol.cond_limit)) return std::nullopt;
  if (rank_tol(sys.E, tol.rank_rel).rank != sys.n()) return std::nullopt;

  DescriptorSystem norm = sys;
  if (!sys.E.isIdentity(0)) {
    const auto lu = sys.E.partialPivLu();
    norm.E = Matrix::Identity(sys.n(), sys.n());
    norm.A = lu.solve(sys.A);
    norm.B = lu.solve(sys.B);
  }

  SpectralReport rep;
  rep.rank_conditions_hold = true;  // invertible E makes both rank conditions automatic

  if (is_invertible(norm.D, tol.cond_limit)) {
    const Matrix F = norm.A - norm.B * norm.D.partialPivLu().solve(norm.C);
    rep.eigenvalues = eigenvalues(F);
    rep.sprifiable = true;
    for (Complex lam : rep.eigenvalues) {
      if (lam.real() >= -tol.stab) {
        rep.sprifiable = false;
        rep.reasons.push_back("eigenvalue of A - B D^-1 C at " + format_complex(lam) + " not in open left half plane");
      }
    }
    rep.calA_invertible = is_invertible(F, tol.cond_limit);
    if (rep.calA_invertible) rep.zero_index = 1;
    rep.reasons.push_back("route: invertible D, Hurwitz test on A - B D^-1 C");
    return rep;
  }

  const AugmentedPencil ap = augmented_pencil(norm);
  if (!is_invertible(ap.calA, tol.cond_limit)) {
    rep.calA_invertible = false;
    rep.sprifiable = false;
    rep.reasons.push_back("block system matrix [A B; C D] is singular");
    return rep;
  }
  rep.calA_invertible = true;
  const InverseBlocks blocks = inverse_blocks(ap, tol);
  rep.eigenvalues = eigenvalues(blocks.Atilde);
  const double eig_cut = tol.eig_zero_rel * std::max(1.0, blocks.Atilde.norm());
  bool nonzero_ok = true;
  for (Complex lam : rep.eigenvalues) {
    if (std::abs(lam) <= eig_cut) continue;
    if (lam.real() >= -tol.stab) {
      nonzero_ok = false;
      rep.reasons.push_back("eigenvalue of the reduced inverse block at " + format_complex(lam) +
                            " not in open left half plane");
    }
  }

  if (norm.D.isZero(0)) {
    const bool cb_ok = is_invertible(Matrix(norm.C * norm.B), tol.cond_limit);
    if (cb_ok) rep.zero_index = 2;
    if (!cb_ok) rep.reasons.push_back("C B is singular, zero eigenvalue index exceeds one");
    rep.sprifiable = nonzero_ok && cb_ok;
    rep.reasons.push_back("route: D = 0, invertibility test on C B");
    return rep;
  }

  const Index idx0 = matrix_power_index(blocks.Atilde, tol.rank_rel);
  rep.zero_index = 1 + idx0;
  if (idx0 > 1) rep.reasons.push_back("zero eigenvalue of the reduced inverse block has index " +
                                      std::to_string(idx0) + " > 1");
  rep.sprifiable = nonzero_ok && idx0 <= 1;
  rep.reasons.push_back("route: identity-E eigenvalue test on the reduced inverse block");
  return rep;
}

}  // namespace sprify

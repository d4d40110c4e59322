#pragma once

#include <functional>
#include <string>
#include <vector>

#include "sprify/descriptor_system.hpp"
#include "sprify/linalg.hpp"
#include "sprify/types.hpp"

namespace sprify {

enum class PencilEigLabel { pole_of_g_inverse, uncontrollable, unobservable, multiple };

inline const char* to_string(PencilEigLabel label) {
  switch (label) {
    case PencilEigLabel::pole_of_g_inverse: return "pole-of-Ginv";
    case PencilEigLabel::uncontrollable: return "uncontrollable";
    case PencilEigLabel::unobservable: return "unobservable";
    case PencilEigLabel::multiple: return "multiple";
  }
  return "?";
}

struct ClassifiedEig {
  Complex value{};
  PencilEigLabel label = PencilEigLabel::pole_of_g_inverse;
};

/// Finite eigenvalues of the augmented pencil, each tagged by the modal rank
/// tests on the original system. An eigenvalue that is neither uncontrollable
/// nor unobservable must be a finite pole of the inverse. Diagnostic only;
/// the verdict uses the aggregate eigenvalue set.
inline std::vector<ClassifiedEig> classify_pencil_eigs(const DescriptorSystem& sys, const Tolerances& tol = {}) {
  const AugmentedPencil ap = augmented_pencil(sys);
  const PencilEigenvalues pe = pencil_eigenvalues(ap.calE, ap.calA, tol);
  std::vector<ClassifiedEig> out;
  out.reserve(pe.finite.size());
  for (Complex lam : pe.finite) {
    const bool unc = !uncontrollable_eigenvalues(sys, {lam}, tol.rank_rel).empty();
    const bool uno = !unobservable_eigenvalues(sys, {lam}, tol.rank_rel).empty();
    PencilEigLabel label = PencilEigLabel::pole_of_g_inverse;
    if (unc && uno) label = PencilEigLabel::multiple;
    else if (unc) label = PencilEigLabel::uncontrollable;
    else if (uno) label = PencilEigLabel::unobservable;
    out.push_back({lam, label});
  }
  return out;
}

struct InfinityOrder {
  Index order = 0;
  bool hypotheses_hold = true;  // rank conditions; when false the pencil route may misreport
};

/// Order of the pole at infinity of the inverse transfer function, one less
/// than the index of the augmented pencil.
inline InfinityOrder ginv_infinity_order(const DescriptorSystem& sys, const Tolerances& tol = {}) {
  check_dimensions(sys);
  const AugmentedPencil ap = augmented_pencil(sys);
  if (!is_invertible(ap.calA, tol.cond_limit))
    fail(ErrorCode::singular_matrix, "ginv_infinity_order: block system matrix singular, order undefined");
  InfinityOrder out;
  out.order = sys.E.isZero(0) ? 0 : pencil_index(ap.calE, ap.calA, tol) - 1;
  out.hypotheses_hold = rank_conditions(sys, tol.rank_rel);
  return out;
}

/// Growth-ratio estimate of the pole order at infinity: |F| at two large
/// sample points, order ~ log10 of the ratio. Fallback for when the pencil
/// hypotheses fail, and the only route for the closed-loop map itself.
inline Index infinity_order_estimate(const std::function<CMatrix(Complex)>& F) {
  const double s1 = 1e6, s2 = 1e7;
  for (int attempt = 0; attempt < 4; ++attempt) {
    // rotate off the real axis if a sample point lands on a pole
    const Complex dir = std::polar(1.0, 0.31 * attempt);
    try {
      const double n1 = F(s1 * dir).norm();
      const double n2 = F(s2 * dir).norm();
      if (n1 == 0.0 && n2 == 0.0) return 0;
      if (n1 == 0.0) continue;
      const double est = std::log10(n2 / n1);
      return static_cast<Index>(std::max<long>(0, std::lround(est)));
    } catch (const Error&) {
      continue;
    }
  }
  fail(ErrorCode::numerical_failure, "infinity_order_estimate: evaluation failed at every sample point");
}

struct FrequencyReport {
  bool sprifiable = false;
  std::vector<ClassifiedEig> pencil_eigs;
  Index ginv_infinity_order = 0;
  bool infinity_order_from_fallback = false;
  std::vector<Complex> uncontrollable_bad, unobservable_bad;
  std::vector<std::string> reasons;
};

/// Pole test on the inverse: every finite eigenvalue of the augmented pencil
/// strictly in the left half plane and pole order at infinity at most one.
inline FrequencyReport frequency_sprifiability(const DescriptorSystem& sys, const Tolerances& tol = {}) {
  check_dimensions(sys);
  FrequencyReport rep;
  rep.pencil_eigs = classify_pencil_eigs(sys, tol);

  try {
    const InfinityOrder oi = ginv_infinity_order(sys, tol);
    if (oi.hypotheses_hold) {
      rep.ginv_infinity_order = oi.order;
    } else {
      rep.ginv_infinity_order = infinity_order_estimate(
          [&](Complex s) { return eval_G_inverse(sys, s, tol); });
      rep.infinity_order_from_fallback = true;
      rep.reasons.push_back("rank conditions on [E B] and [E; C] fail; infinity order taken from a growth estimate");
    }
  } catch (const Error&) {
    // singular block matrix: zero is then a pencil eigenvalue and the verdict
    // fails below; still report a best-effort order
    rep.ginv_infinity_order = infinity_order_estimate(
        [&](Complex s) { return eval_G_inverse(sys, s, tol); });
    rep.infinity_order_from_fallback = true;
    rep.reasons.push_back("block system matrix singular; infinity order taken from a growth estimate");
  }

  bool eigs_ok = true;
  for (const ClassifiedEig& ce : rep.pencil_eigs) {
    if (ce.value.real() < -tol.stab) continue;
    eigs_ok = false;
    const bool marginal = std::abs(ce.value.real()) <= tol.stab;
    std::string what;
    switch (ce.label) {
      case PencilEigLabel::pole_of_g_inverse: what = "pole of G^-1 at "; break;
      case PencilEigLabel::uncontrollable: what = "uncontrollable eigenvalue at "; break;
      case PencilEigLabel::unobservable: what = "unobservable eigenvalue at "; break;
      case PencilEigLabel::multiple: what = "uncontrollable and unobservable eigenvalue at "; break;
    }
    rep.reasons.push_back(what + format_complex(ce.value) +
                          (marginal ? " (marginal, within tol_stab of the imaginary axis)" : ""));
    if (ce.label == PencilEigLabel::uncontrollable || ce.label == PencilEigLabel::multiple)
      rep.uncontrollable_bad.push_back(ce.value);
    if (ce.label == PencilEigLabel::unobservable || ce.label == PencilEigLabel::multiple)
      rep.unobservable_bad.push_back(ce.value);
  }

  if (rep.ginv_infinity_order > 1)
    rep.reasons.push_back("pole of G^-1 at infinity has order " + std::to_string(rep.ginv_infinity_order) + " > 1");

  rep.sprifiable = eigs_ok && rep.ginv_infinity_order <= 1;
  return rep;
}

}  // namespace sprify

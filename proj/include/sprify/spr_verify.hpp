#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "sprify/descriptor_system.hpp"
#include "sprify/frequency_check.hpp"
#include "sprify/synthesis.hpp"
#include "sprify/types.hpp"

namespace sprify {

struct FrequencyGrid {
  std::vector<double> omegas;  // sorted ascending, nonnegative
  bool includes_limit = true;  // top two points stand in for the omega -> infinity limit

  /// Zero plus a log-spaced sweep, default 1e-6 .. 1e6 with 481 points.
  static FrequencyGrid standard(std::size_t points = 481, double omega_min = 1e-6, double omega_max = 1e6) {
    if (points < 2 || omega_min <= 0.0 || omega_max <= omega_min)
      fail(ErrorCode::invalid_input, "FrequencyGrid: need points >= 2 and 0 < omega_min < omega_max");
    FrequencyGrid g;
    g.omegas.reserve(points + 1);
    g.omegas.push_back(0.0);
    const double lo = std::log10(omega_min), hi = std::log10(omega_max);
    for (std::size_t i = 0; i < points; ++i)
      g.omegas.push_back(std::pow(10.0, lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points - 1)));
    return g;
  }
};

/// Grid evidence that a transfer function is strictly positive real: stable
/// poles plus a positive Hermitian part along the swept imaginary axis. The
/// epsilon is a conservative shift bound derived from the observed margin and
/// the steepest gradient between neighboring grid points.
struct SprCertificate {
  bool pass = false;
  double epsilon = 0.0;
  double pole_margin = 0.0;
  double min_hermitian_eig = std::numeric_limits<double>::quiet_NaN();
  double worst_omega = std::numeric_limits<double>::quiet_NaN();
  std::size_t grid_points = 0;
  bool includes_limit = false;
  std::string caveat = "grid-resolution certificate: positivity checked on a finite frequency grid only";
  std::vector<std::string> reasons;
};

inline SprCertificate spr_check(const std::function<CMatrix(Complex)>& eval,
                                const std::vector<Complex>& finite_poles, const FrequencyGrid& grid,
                                const Tolerances& tol = {}) {
  SprCertificate cert;
  cert.grid_points = grid.omegas.size();
  cert.includes_limit = grid.includes_limit;

  cert.pole_margin = std::numeric_limits<double>::infinity();
  bool poles_ok = true;
  for (Complex p : finite_poles) {
    cert.pole_margin = std::min(cert.pole_margin, -p.real());
    if (std::abs(p.real()) <= tol.stab) {
      poles_ok = false;
      cert.reasons.push_back("pole within tol_stab of the imaginary axis at " + format_complex(p));
    } else if (p.real() > 0.0) {
      poles_ok = false;
      cert.reasons.push_back("unstable pole at " + format_complex(p));
    }
  }
  if (!poles_ok) {
    cert.pass = false;
    return cert;  // no sweep: the map is not analytic on the closed right half plane
  }

  double min_eig = std::numeric_limits<double>::infinity();
  double slope_bound = 0.0;
  CMatrix prev_H;
  double prev_omega = 0.0;
  bool have_prev = false;
  for (double omega : grid.omegas) {
    CMatrix H;
    try {
      const CMatrix G = eval(Complex(0.0, omega));
      H = G + G.adjoint();
    } catch (const Error& e) {
      cert.pass = false;
      cert.reasons.push_back("evaluation failed at omega = " + format_complex(omega) +
                             " (treated as an imaginary-axis pole): " + e.what());
      return cert;
    }
    Eigen::SelfAdjointEigenSolver<CMatrix> es(H, Eigen::EigenvaluesOnly);
    const double lmin = es.eigenvalues()(0);
    if (lmin < min_eig) {
      min_eig = lmin;
      cert.worst_omega = omega;
    }
    if (have_prev && omega > prev_omega)
      slope_bound = std::max(slope_bound, (H - prev_H).norm() / (omega - prev_omega));
    prev_H = H;
    prev_omega = omega;
    have_prev = true;
  }

  cert.min_hermitian_eig = min_eig;
  cert.pass = min_eig > 0.0;
  if (!cert.pass) {
    cert.reasons.push_back("Hermitian part not positive definite at omega = " + format_complex(cert.worst_omega));
    return cert;
  }
  const double slope_term =
      slope_bound > std::numeric_limits<double>::min() ? min_eig / (2.0 * slope_bound)
                                                       : std::numeric_limits<double>::infinity();
  cert.epsilon = 0.5 * std::min(cert.pole_margin, slope_term);
  return cert;
}

struct VerificationReport {
  SprCertificate certificate;
  std::vector<Complex> closed_loop_eigenvalues;
  bool stable = false;
  ClosedLoopSystem loop;
};

/// Closes the loop, checks closed-loop stability through the pencil, sweeps
/// the closed-loop map for positivity, and cross-checks the state-space
/// evaluation against the operator form L (I - G K)^{-1} G.
inline VerificationReport verify_closed_loop(const DescriptorSystem& sys, const Matrix& K, const Matrix& L,
                                             const FrequencyGrid& grid = FrequencyGrid::standard(),
                                             const Tolerances& tol = {}) {
  VerificationReport rep;
  rep.loop = close_loop(sys, K, L, tol);
  const DescriptorSystem clsys = closed_loop_system(rep.loop);

  const PencilEigenvalues pe = pencil_eigenvalues(rep.loop.E, rep.loop.Ac, tol);
  rep.closed_loop_eigenvalues = pe.finite;
  rep.stable = true;
  for (Complex lam : pe.finite)
    if (lam.real() >= -tol.stab) rep.stable = false;

  // two independent routes to the closed-loop response must agree
  const Index m = sys.m();
  const std::size_t count = grid.omegas.size();
  std::size_t checked = 0;
  for (std::size_t t = 0; t < 5 && count > 0; ++t) {
    std::size_t idx = t * (count - 1) / 4;
    for (; idx < count; ++idx) {
      const Complex s(0.0, grid.omegas[idx]);
      CMatrix direct, via_G;
      try {
        direct = eval_G(clsys, s, tol);
        const CMatrix G = eval_G(sys, s, tol);
        const CMatrix T = CMatrix::Identity(m, m) - G * K.cast<Complex>();
        if (equilibrated_cond(T) > tol.cond_limit) continue;
        via_G = L.cast<Complex>() * T.partialPivLu().solve(G);
      } catch (const Error&) {
        continue;  // open-loop pole on the axis; pick the next grid point
      }
      const double denom = std::max(direct.norm(), via_G.norm());
      if (denom > 0.0 && (direct - via_G).norm() > 1e-7 * denom)
        fail(ErrorCode::internal_inconsistency,
             "verify_closed_loop: state-space and operator evaluations disagree at omega = " +
                 format_complex(grid.omegas[idx]));
      ++checked;
      break;
    }
  }

  rep.certificate = spr_check([&](Complex s) { return eval_G(clsys, s, tol); }, pe.finite, grid, tol);
  if (checked == 0)
    rep.certificate.reasons.push_back("cross-check skipped: open-loop response not evaluable on the grid");
  return rep;
}

inline VerificationReport verify_closed_loop(const DescriptorSystem& sys, const ControllerGains& gains,
                                             const FrequencyGrid& grid = FrequencyGrid::standard(),
                                             const Tolerances& tol = {}) {
  return verify_closed_loop(sys, gains.K, gains.L, grid, tol);
}

/// Structural consequences a strictly positive real closed loop must show:
/// the derivative coefficient of its inverse is symmetric positive
/// semidefinite and neither the map nor its inverse grows faster than s.
/// Returns human-readable findings; empty means all checks passed (or the
/// certificate was already failing, in which case nothing is asserted).
inline std::vector<std::string> spr_structural_checks(const DescriptorSystem& closed_loop,
                                                      const SprCertificate& cert, const Tolerances& tol = {}) {
  std::vector<std::string> findings;
  if (!cert.pass) return findings;

  try {
    const GinvDecomposition dec = decompose_ginv(closed_loop, tol);
    if (!dec.H1.isZero(0)) {
      const double scale = std::max(1.0, dec.H1.norm());
      if ((dec.H1 - dec.H1.transpose()).norm() > 1e-9 * scale) {
        findings.push_back("derivative coefficient of the closed-loop inverse is not symmetric");
      } else {
        Eigen::SelfAdjointEigenSolver<Matrix> es(Matrix(0.5 * (dec.H1 + dec.H1.transpose())),
                                                 Eigen::EigenvaluesOnly);
        if (es.eigenvalues()(0) < -1e-9 * scale)
          findings.push_back("derivative coefficient of the closed-loop inverse is not positive semidefinite");
      }
    }
  } catch (const Error& e) {
    findings.push_back(std::string("closed-loop inverse decomposition failed: ") + e.what());
  }

  try {
    const Index order = infinity_order_estimate([&](Complex s) { return eval_G(closed_loop, s, tol); });
    if (order > 1)
      findings.push_back("closed-loop map grows like s^" + std::to_string(order) + " at infinity");
  } catch (const Error& e) {
    findings.push_back(std::string("closed-loop growth estimate failed: ") + e.what());
  }
  return findings;
}

}  // namespace sprify

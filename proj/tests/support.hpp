#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <string>
#include <sys/wait.h>
#include <vector>

#include "sprify/sprify.hpp"

namespace testutil {

using namespace sprify;

inline std::string data_file(const std::string& name) { return std::string(SPRIFY_DATA_DIR) + "/" + name; }

// paper-scale reference systems, duplicated from data/ so unit tests need no IO

inline DescriptorSystem sys_integrator() {
  DescriptorSystem s;
  s.E = Matrix::Constant(1, 1, 1.0);
  s.A = Matrix::Zero(1, 1);
  s.B = Matrix::Constant(1, 1, 1.0);
  s.C = Matrix::Constant(1, 1, 1.0);
  s.D = Matrix::Zero(1, 1);
  return s;
}

inline DescriptorSystem sys_descriptor_2x2() {
  DescriptorSystem s;
  s.E = Matrix{{0, 0}, {1, 0}};
  s.A = Matrix{{1, 0}, {0, 1}};
  s.B = Matrix{{-1, -1}, {0, 0}};
  s.C = Matrix{{-1, 1}, {0, 1}};
  s.D = Matrix{{-3, 0}, {-1, 0}};
  return s;
}

inline DescriptorSystem sys_rhp_zero_pair() {
  DescriptorSystem s;
  s.E = Matrix::Identity(2, 2);
  s.A = Matrix{{-1, 0}, {0, 1}};
  s.B = Matrix::Identity(2, 2);
  s.C = Matrix{{-2, 0}, {0, 2}};
  s.D = Matrix::Identity(2, 2);
  return s;
}

inline DescriptorSystem sys_singular_a_d() {
  DescriptorSystem s;
  s.E = Matrix::Identity(2, 2);
  s.A = Matrix{{0, 0}, {0, -1}};
  s.B = Matrix::Identity(2, 2);
  s.C = Matrix::Identity(2, 2);
  s.D = Matrix{{1, 0}, {0, 0}};
  return s;
}

inline DescriptorSystem sys_scalar_unstable() {
  DescriptorSystem s;
  s.E = Matrix::Constant(1, 1, 1.0);
  s.A = Matrix::Constant(1, 1, 2.0);
  s.B = Matrix::Constant(1, 1, 1.0);
  s.C = Matrix::Constant(1, 1, 3.0);
  s.D = Matrix::Constant(1, 1, 1.0);
  return s;
}

inline std::vector<DescriptorSystem> paper_systems() {
  return {sys_integrator(), sys_descriptor_2x2(), sys_rhp_zero_pair(), sys_singular_a_d(), sys_scalar_unstable()};
}

// bit-deterministic uniform draw, same trick as the regularity probe points
inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return lo + u * (hi - lo);
}

inline Index uniform_index(std::mt19937_64& rng, Index lo, Index hi) {
  return lo + static_cast<Index>(rng() % static_cast<std::uint64_t>(hi - lo + 1));
}

inline Matrix random_matrix(std::mt19937_64& rng, Index rows, Index cols, double lo = -2.0, double hi = 2.0) {
  Matrix M(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) M(i, j) = uniform(rng, lo, hi);
  return M;
}

inline Matrix random_invertible(std::mt19937_64& rng, Index n, double cond_accept = 1e6) {
  for (;;) {
    Matrix M = random_matrix(rng, n, n);
    if (equilibrated_cond(M) <= cond_accept) return M;
  }
}

/// Real matrix with eigenvalues drawn from Re in [-3,-0.2], via a similarity
/// of a block diagonal of scalars and 2x2 rotation blocks.
inline Matrix random_hurwitz(std::mt19937_64& rng, Index n) {
  Matrix D0 = Matrix::Zero(n, n);
  Index i = 0;
  while (i < n) {
    const double re = uniform(rng, -3.0, -0.2);
    if (n - i >= 2 && uniform(rng, 0.0, 1.0) < 0.4) {
      const double im = uniform(rng, 0.2, 2.0);
      D0(i, i) = re;
      D0(i, i + 1) = im;
      D0(i + 1, i) = -im;
      D0(i + 1, i + 1) = re;
      i += 2;
    } else {
      D0(i, i) = re;
      i += 1;
    }
  }
  const Matrix T = random_invertible(rng, n);
  return T * D0 * T.partialPivLu().inverse();
}

inline Matrix random_spd(std::mt19937_64& rng, Index n) {
  const Matrix R = random_matrix(rng, n, n);
  return Matrix(R.transpose() * R) + 0.1 * Matrix::Identity(n, n);
}

inline Matrix random_rank_matrix(std::mt19937_64& rng, Index n, Index r) {
  if (r == 0) return Matrix::Zero(n, n);
  if (r == n) return random_invertible(rng, n);
  for (;;) {
    const Matrix M = random_matrix(rng, n, r) * random_matrix(rng, r, n);
    if (rank_tol(M).rank == r) return M;
  }
}

struct RandomSystemOptions {
  Index max_n = 4;
  Index max_m = 2;
  bool require_nonzero_E = false;
  double cond_accept = 1e10;  // on the block matrix [A B; C D], equilibrated
};

/// Regular descriptor system with invertible block matrix [A B; C D] and both
/// rank conditions satisfied. Verdict is not constrained.
inline DescriptorSystem random_regular_system(std::mt19937_64& rng, const RandomSystemOptions& opt = {}) {
  const Tolerances tol;
  for (;;) {
    const Index n = uniform_index(rng, 1, opt.max_n);
    const Index m = uniform_index(rng, 1, opt.max_m);
    Index rmin = std::max<Index>(Index{0}, n - m);
    if (opt.require_nonzero_E) rmin = std::max<Index>(rmin, 1);
    const Index r = uniform_index(rng, rmin, n);
    DescriptorSystem sys;
    sys.E = random_rank_matrix(rng, n, r);
    sys.A = random_matrix(rng, n, n);
    sys.B = random_matrix(rng, n, m);
    sys.C = random_matrix(rng, m, n);
    sys.D = random_matrix(rng, m, m);
    try {
      validate(sys, tol);
    } catch (const Error&) {
      continue;
    }
    if (!rank_conditions(sys)) continue;
    const AugmentedPencil ap = augmented_pencil(sys);
    if (equilibrated_cond(ap.calA) > opt.cond_accept) continue;
    return sys;
  }
}

struct PlantedInverse {
  DescriptorSystem sys;
  Matrix H1, D2, A2, B2, C2;  // ground truth: G^{-1}(s) = s H1 + D2 + C2 (sI - A2)^{-1} B2
};

/// SPRifiable by construction: plant a stable improper inverse response and
/// realize the plant whose augmented pencil produces it, with the pencil roles
/// swapped so the generated transfer function is the inverse of the planted one.
inline PlantedInverse random_sprifiable_system(std::mt19937_64& rng, Index m, Index k, bool with_H1) {
  if (!with_H1 && k < 1) k = 1;  // a constant inverse is too degenerate to be interesting
  for (;;) {
    PlantedInverse out;
    out.A2 = k > 0 ? random_hurwitz(rng, k) : Matrix::Zero(0, 0);
    out.B2 = random_matrix(rng, k, m);
    out.C2 = random_matrix(rng, m, k);
    if (with_H1) {
      const Matrix V = random_invertible(rng, m);
      Matrix diag = Matrix::Zero(m, m);
      for (Index i = 0; i < m; ++i) diag(i, i) = uniform(rng, 0.2, 2.0);
      out.H1 = V * diag * V.transpose();
    } else {
      out.H1 = Matrix::Zero(m, m);
    }
    out.D2 = random_invertible(rng, m);

    // descriptor realization of s H1 + D2 + C2 (sI - A2)^{-1} B2; the chain
    // block E=[[0,0],[I,0]], A=I, B=[-I;0], C=[0,H1] carries the s H1 part
    const Index ni = with_H1 ? 2 * m + k : k;
    Matrix Ei = Matrix::Zero(ni, ni);
    Matrix Ai = Matrix::Identity(ni, ni);
    Matrix Bi = Matrix::Zero(ni, m);
    Matrix Ci = Matrix::Zero(m, ni);
    if (with_H1) {
      Ei.block(m, 0, m, m) = Matrix::Identity(m, m);
      Ei.block(2 * m, 2 * m, k, k) = Matrix::Identity(k, k);
      Ai.block(2 * m, 2 * m, k, k) = out.A2;
      Bi.block(0, 0, m, m) = -Matrix::Identity(m, m);
      Bi.block(2 * m, 0, k, m) = out.B2;
      Ci.block(0, m, m, m) = out.H1;
      Ci.block(0, 2 * m, m, k) = out.C2;
    } else {
      Ei = Matrix::Identity(k, k);
      Ai = out.A2;
      Bi = out.B2;
      Ci = out.C2;
    }

    // augmented pencil of that realization, read back as a plant
    DescriptorSystem& sys = out.sys;
    const Index np = ni + m;
    sys.E = Matrix::Zero(np, np);
    sys.E.block(0, 0, ni, ni) = Ei;
    sys.A = Matrix::Zero(np, np);
    sys.A.block(0, 0, ni, ni) = Ai;
    sys.A.block(0, ni, ni, m) = Bi;
    sys.A.block(ni, 0, m, ni) = Ci;
    sys.A.block(ni, ni, m, m) = out.D2;
    sys.B = Matrix::Zero(np, m);
    sys.B.block(ni, 0, m, m) = Matrix::Identity(m, m);
    sys.C = Matrix::Zero(m, np);
    sys.C.block(0, ni, m, m) = -Matrix::Identity(m, m);
    sys.D = Matrix::Zero(m, m);

    try {
      validate(sys);
    } catch (const Error&) {
      continue;
    }
    const AugmentedPencil ap = augmented_pencil(sys);
    if (equilibrated_cond(ap.calA) > 1e8) continue;
    return out;
  }
}

inline CMatrix eval_planted_inverse(const PlantedInverse& p, Complex s) {
  CMatrix val = s * p.H1.cast<Complex>() + p.D2.cast<Complex>();
  if (p.A2.rows() > 0) {
    CMatrix resolvent = (s * CMatrix::Identity(p.A2.rows(), p.A2.cols()) - p.A2.cast<Complex>())
                            .partialPivLu()
                            .solve(p.B2.cast<Complex>());
    val += p.C2.cast<Complex>() * resolvent;
  }
  return val;
}

/// Greedy nearest matching; adequate for the well separated spectra used here.
inline bool match_multiset(std::vector<Complex> got, const std::vector<Complex>& want, double tol) {
  if (got.size() != want.size()) return false;
  for (const Complex& w : want) {
    std::size_t best = got.size();
    double best_dist = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < got.size(); ++i) {
      const double d = std::abs(got[i] - w);
      if (d < best_dist) {
        best_dist = d;
        best = i;
      }
    }
    if (best == got.size() || best_dist > tol) return false;
    got.erase(got.begin() + static_cast<std::ptrdiff_t>(best));
  }
  return true;
}

inline std::vector<Complex> nonzero_eigs(const std::vector<Complex>& eigs, double cut) {
  std::vector<Complex> out;
  for (Complex z : eigs)
    if (std::abs(z) > cut) out.push_back(z);
  return out;
}

struct CmdResult {
  int exit_code = -1;
  std::string out;
};

inline CmdResult run_cmd(const std::string& cmd) {
  CmdResult res;
  FILE* pipe = ::popen((cmd + " 2>&1").c_str(), "r");
  if (!pipe) return res;
  char buf[4096];
  std::size_t got;
  while ((got = std::fread(buf, 1, sizeof buf, pipe)) > 0) res.out.append(buf, got);
  const int status = ::pclose(pipe);
  if (WIFEXITED(status)) res.exit_code = WEXITSTATUS(status);
  return res;
}

}  // namespace testutil

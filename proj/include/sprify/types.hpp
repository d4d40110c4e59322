#pragma once

#include <Eigen/Dense>

#include <complex>
#include <limits>
#include <stdexcept>
#include <string>

namespace sprify {

using Matrix = Eigen::MatrixXd;
using CMatrix = Eigen::MatrixXcd;
using Complex = std::complex<double>;
using Index = Eigen::Index;

inline constexpr double kDefaultRankTolRel = std::numeric_limits<double>::epsilon();

/// Numerical knobs shared across the library. "Invertible" always means the
/// row-equilibrated condition number stays below cond_limit.
struct Tolerances {
  double rank_rel = kDefaultRankTolRel;  // relative cut for singular values
  double stab = 1e-9;                    // strict stability margin on real parts
  double eig_zero_rel = 1e-8;            // zero/nonzero eigenvalue split, relative to matrix norm
  double cond_limit = 1e12;              // invertibility threshold
  double decomp_zero_rel = 1e-9;         // treat decomposition byproducts below this (relative) as zero
};

enum class ErrorCode {
  invalid_input,
  dimension_mismatch,
  parse_error,
  irregular_pencil,
  singular_matrix,
  infeasible,
  index_too_high,
  pole_evaluation,
  ill_posed_feedback,
  numerical_failure,
  internal_inconsistency,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

inline std::string format_complex(Complex z, int precision = 6) {
  char buf[64];
  const double re = z.real();
  const double im = z.imag();
  if (std::abs(im) <= 1e-9 * std::max(1.0, std::abs(re))) {
    std::snprintf(buf, sizeof buf, "%.*g", precision, re);
    return buf;
  }
  std::snprintf(buf, sizeof buf, "%.*g%+.*gi", precision, re, precision, im);
  return buf;
}

}  // namespace sprify

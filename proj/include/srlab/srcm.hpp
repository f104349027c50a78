#pragma once

#include <cstddef>

#include "srlab/common.hpp"
#include "srlab/matrix.hpp"

namespace srlab {

// Saturn Rings parameters: bottleneck vectors are confined to the shell
// r1 <= |x| <= r1 + d. `all_on` keeps the LinearNorm weight normalization
// active at evaluation time; `hidden_width` is the width of the extra linear
// layer that feeds SR (0 means "use the bottleneck width").
struct SrcmConfig {
  double r1 = 1.0;
  double d = 1.0;
  bool all_on = true;
  std::size_t hidden_width = 0;

  double r2() const { return r1 + d; }
  // Throws ConfigError unless r1 > 0 and d > 0.
  void validate() const;

  friend bool operator==(const SrcmConfig&, const SrcmConfig&) = default;
};

// Norms within this relative distance of a sphere count as lying on it, and
// points on a sphere take the identity branch. This is what makes the
// projection exactly idempotent despite rounding in the projected norm.
inline constexpr double kShellSlack = 1e-12;

enum class ShellBranch { Zero, Inner, Outer, Identity };

ShellBranch classify_row(double norm, double r1, double r2);

// Row-wise projection onto the shell. Zero rows map to zero.
Matrix sr_forward(const Matrix& x, const SrcmConfig& cfg);

// Exact vector-Jacobian product of sr_forward at `x`.
Matrix sr_backward(const Matrix& x, const SrcmConfig& cfg, const Matrix& upstream);

struct LinearNormGrads {
  Matrix dg;
  Matrix dw;
  Matrix db;
};

// True when the weight matrix is Frobenius-normalized for this call.
inline bool linearnorm_normalizes(Mode mode, bool all_on) {
  return mode == Mode::Train || all_on;
}

// f = g * W / |W|_F + b in the normalized branch, f = g * W + b otherwise.
// W is never modified.
Matrix linearnorm_forward(const Matrix& g, const Matrix& w, const Matrix& b, Mode mode,
                          bool all_on);

LinearNormGrads linearnorm_backward(const Matrix& g, const Matrix& w, const Matrix& b,
                                    const Matrix& upstream, Mode mode, bool all_on);

// d * sum_{i<n} r1^i (r1 + d)^(n-1-i): proportional to the volume of the
// n-dimensional shell between radii r1 and r1 + d.
double capacity_proxy(std::size_t n, double r1, double d);

// Natural log of capacity_proxy, finite even when the proxy itself overflows.
double log_capacity_proxy(std::size_t n, double r1, double d);

}  // namespace srlab

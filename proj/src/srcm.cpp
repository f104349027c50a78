#include "srlab/srcm.hpp"

#include <cmath>
#include <vector>

#include <fmt/format.h>

#include "srlab/errors.hpp"

namespace srlab {

void SrcmConfig::validate() const {
  if (!(r1 > 0.0) || !std::isfinite(r1)) {
    throw ConfigError(fmt::format("srcm.r1 must be positive, got {}", r1));
  }
  if (!(d > 0.0) || !std::isfinite(d)) {
    throw ConfigError(fmt::format("srcm.d must be positive, got {}", d));
  }
}

ShellBranch classify_row(double norm, double r1, double r2) {
  if (norm == 0.0) return ShellBranch::Zero;
  if (norm < r1 * (1.0 - kShellSlack)) return ShellBranch::Inner;
  if (norm > r2 * (1.0 + kShellSlack)) return ShellBranch::Outer;
  return ShellBranch::Identity;
}

namespace {

void require_finite(const Matrix& m, const char* what) {
  if (!all_finite(m)) throw NumericError(fmt::format("{}: non-finite input", what));
}

}  // namespace

Matrix sr_forward(const Matrix& x, const SrcmConfig& cfg) {
  require_finite(x, "sr_forward");
  const double r1 = cfg.r1;
  const double r2 = cfg.r2();
  Matrix y = x;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    auto row = y.row(i);
    const double norm = row_norm(row);
    double radius = 0.0;
    switch (classify_row(norm, r1, r2)) {
      case ShellBranch::Identity:
        continue;
      case ShellBranch::Zero:
        continue;  // already the zero row
      case ShellBranch::Inner:
        radius = r1;
        break;
      case ShellBranch::Outer:
        radius = r2;
        break;
    }
    const double scale = radius / norm;
    for (double& v : row) v *= scale;
  }
  return y;
}

Matrix sr_backward(const Matrix& x, const SrcmConfig& cfg, const Matrix& upstream) {
  if (!x.same_shape(upstream)) {
    throw ShapeError(fmt::format("sr_backward: input {} vs upstream {}", x.shape_string(),
                                 upstream.shape_string()));
  }
  require_finite(x, "sr_backward");
  const double r1 = cfg.r1;
  const double r2 = cfg.r2();
  Matrix dx = upstream;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const auto xr = x.row(i);
    auto out = dx.row(i);
    const double norm = row_norm(xr);
    double radius = 0.0;
    switch (classify_row(norm, r1, r2)) {
      case ShellBranch::Identity:
        continue;
      case ShellBranch::Zero:
        for (double& v : out) v = 0.0;
        continue;
      case ShellBranch::Inner:
        radius = r1;
        break;
      case ShellBranch::Outer:
        radius = r2;
        break;
    }
    // J = r (I / n - x x^T / n^3), symmetric.
    const auto ur = upstream.row(i);
    const double xu = dot(xr, ur);
    const double a = radius / norm;
    const double c = radius * xu / (norm * norm * norm);
    for (std::size_t j = 0; j < out.size(); ++j) out[j] = a * ur[j] - c * xr[j];
  }
  return dx;
}

namespace {

void check_linearnorm_shapes(const Matrix& g, const Matrix& w, const Matrix& b) {
  if (g.cols() != w.rows()) {
    throw ShapeError(fmt::format("linearnorm: input {} vs weight {}", g.shape_string(),
                                 w.shape_string()));
  }
  if (b.rows() != 1 || b.cols() != w.cols()) {
    throw ShapeError(fmt::format("linearnorm: bias {} vs weight {}", b.shape_string(),
                                 w.shape_string()));
  }
}

double checked_norm(const Matrix& w) {
  const double n = frobenius_norm(w);
  if (n == 0.0) throw NumericError("linearnorm: weight matrix has zero Frobenius norm");
  if (!std::isfinite(n)) throw NumericError("linearnorm: non-finite weight norm");
  return n;
}

}  // namespace

Matrix linearnorm_forward(const Matrix& g, const Matrix& w, const Matrix& b, Mode mode,
                          bool all_on) {
  check_linearnorm_shapes(g, w, b);
  Matrix f = matmul(g, w);
  if (linearnorm_normalizes(mode, all_on)) {
    const double s = checked_norm(w);
    for (double& v : f.values()) v /= s;
  }
  add_row_vector(f, b);
  return f;
}

LinearNormGrads linearnorm_backward(const Matrix& g, const Matrix& w, const Matrix& b,
                                    const Matrix& upstream, Mode mode, bool all_on) {
  check_linearnorm_shapes(g, w, b);
  if (upstream.rows() != g.rows() || upstream.cols() != w.cols()) {
    throw ShapeError(fmt::format("linearnorm: upstream {} for input {} and weight {}",
                                 upstream.shape_string(), g.shape_string(), w.shape_string()));
  }
  LinearNormGrads grads;
  grads.db = column_sums(upstream);
  Matrix gtu = matmul_tn(g, upstream);
  if (!linearnorm_normalizes(mode, all_on)) {
    grads.dw = std::move(gtu);
    grads.dg = matmul_nt(upstream, w);
    return grads;
  }
  // d/dW of <U, g W / s> with s = |W|_F:  g^T U / s - W <g^T U, W> / s^3
  const double s = checked_norm(w);
  const double inner = dot(gtu.values(), w.values());
  const double a = 1.0 / s;
  const double c = inner / (s * s * s);
  grads.dw = Matrix(w.rows(), w.cols());
  for (std::size_t i = 0; i < w.size(); ++i) grads.dw[i] = a * gtu[i] - c * w[i];
  grads.dg = matmul_nt(upstream, w);
  for (double& v : grads.dg.values()) v *= a;
  return grads;
}

namespace {

void check_capacity_args(std::size_t n, double r1, double d) {
  if (n < 1) throw InputError("capacity_proxy: n must be >= 1");
  if (!(r1 > 0.0)) throw InputError("capacity_proxy: r1 must be positive");
  if (!(d > 0.0)) throw InputError("capacity_proxy: d must be positive");
}

}  // namespace

double capacity_proxy(std::size_t n, double r1, double d) {
  check_capacity_args(n, r1, d);
  const double r2 = r1 + d;
  std::vector<double> r2_pow(n, 1.0);
  for (std::size_t k = 1; k < n; ++k) r2_pow[k] = r2_pow[k - 1] * r2;
  double sum = 0.0;
  double r1_pow = 1.0;
  for (std::size_t i = 0; i < n; ++i) {
    sum += r1_pow * r2_pow[n - 1 - i];
    r1_pow *= r1;
  }
  const double result = d * sum;
  if (!std::isfinite(result)) {
    throw NumericError(fmt::format("capacity_proxy overflows for n={}", n));
  }
  return result;
}

double log_capacity_proxy(std::size_t n, double r1, double d) {
  check_capacity_args(n, r1, d);
  // d * sum = r2^n - r1^n
  const double r2 = r1 + d;
  const double nn = static_cast<double>(n);
  return nn * std::log(r2) + std::log1p(-std::exp(nn * std::log(r1 / r2)));
}

}  // namespace srlab

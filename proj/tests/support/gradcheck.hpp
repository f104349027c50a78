#pragma once

#include <algorithm>
#include <cmath>
#include <random>

#include "srlab/matrix.hpp"

namespace srlab::testing {

// Central finite differences of the scalar f() with respect to every entry
// of x. f must read x by reference.
template <class F>
Matrix numeric_gradient(F&& f, Matrix& x, double h = 1e-5) {
  Matrix g(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double saved = x[i];
    x[i] = saved + h;
    const double up = f();
    x[i] = saved - h;
    const double down = f();
    x[i] = saved;
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

// Largest elementwise |a - b| / max(|a|, |b|, floor).
inline double max_relative_error(const Matrix& a, const Matrix& b, double floor = 1e-6) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double denom = std::max({std::abs(a[i]), std::abs(b[i]), floor});
    worst = std::max(worst, std::abs(a[i] - b[i]) / denom);
  }
  return worst;
}

// Sum of upstream (.) m: a scalar whose gradient wrt m is `upstream`.
inline double weighted_sum(const Matrix& m, const Matrix& upstream) {
  double s = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) s += m[i] * upstream[i];
  return s;
}

inline Matrix random_matrix(std::size_t r, std::size_t c, std::mt19937_64& rng, double lo = -1.0,
                            double hi = 1.0) {
  std::uniform_real_distribution<double> d(lo, hi);
  Matrix m(r, c);
  for (double& v : m.values()) v = d(rng);
  return m;
}

}  // namespace srlab::testing

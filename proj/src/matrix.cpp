#include "srlab/matrix.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "srlab/errors.hpp"

namespace srlab {

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw ShapeError(fmt::format("matrix data length {} does not match {}x{}",
                                 data_.size(), rows_, cols_));
  }
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = rows.size();
  cols_ = rows_ == 0 ? 0 : rows.begin()->size();
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) throw ShapeError("ragged matrix initializer");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

Matrix Matrix::row_vector(std::span<const double> values) {
  return Matrix(1, values.size(), std::vector<double>(values.begin(), values.end()));
}

void Matrix::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

std::string Matrix::shape_string() const { return fmt::format("{}x{}", rows_, cols_); }

namespace {

// c += a * b over a block of up to four rows of a, so each row of b is
// streamed once per block instead of once per row.
void gemm_accumulate(const double* a, const double* b, double* c, std::size_t n,
                     std::size_t k, std::size_t m) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const double* a0 = a + i * k;
    const double* a1 = a0 + k;
    const double* a2 = a1 + k;
    const double* a3 = a2 + k;
    double* c0 = c + i * m;
    double* c1 = c0 + m;
    double* c2 = c1 + m;
    double* c3 = c2 + m;
    for (std::size_t p = 0; p < k; ++p) {
      const double* brow = b + p * m;
      const double x0 = a0[p], x1 = a1[p], x2 = a2[p], x3 = a3[p];
      for (std::size_t j = 0; j < m; ++j) {
        const double bv = brow[j];
        c0[j] += x0 * bv;
        c1[j] += x1 * bv;
        c2[j] += x2 * bv;
        c3[j] += x3 * bv;
      }
    }
  }
  for (; i < n; ++i) {
    const double* ai = a + i * k;
    double* ci = c + i * m;
    for (std::size_t p = 0; p < k; ++p) {
      const double* brow = b + p * m;
      const double x = ai[p];
      for (std::size_t j = 0; j < m; ++j) ci[j] += x * brow[j];
    }
  }
}

}  // namespace

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw ShapeError(fmt::format("matmul: {} * {}", a.shape_string(), b.shape_string()));
  }
  Matrix c(a.rows(), b.cols());
  gemm_accumulate(a.values().data(), b.values().data(), c.values().data(), a.rows(),
                  a.cols(), b.cols());
  return c;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) {
    throw ShapeError(fmt::format("matmul_tn: {}^T * {}", a.shape_string(), b.shape_string()));
  }
  Matrix c(a.cols(), b.cols());
  const std::size_t m = b.cols();
  for (std::size_t r = 0; r < a.rows(); ++r) {
    const auto arow = a.row(r);
    const auto brow = b.row(r);
    for (std::size_t i = 0; i < a.cols(); ++i) {
      const double x = arow[i];
      if (x == 0.0) continue;
      double* ci = c.row(i).data();
      for (std::size_t j = 0; j < m; ++j) ci[j] += x * brow[j];
    }
  }
  return c;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) {
    throw ShapeError(fmt::format("matmul_nt: {} * {}^T", a.shape_string(), b.shape_string()));
  }
  return matmul(a, transpose(b));
}

Matrix transpose(const Matrix& a) {
  Matrix t(a.cols(), a.rows());
  for (std::size_t r = 0; r < a.rows(); ++r) {
    for (std::size_t c = 0; c < a.cols(); ++c) t(c, r) = a(r, c);
  }
  return t;
}

void add_row_vector(Matrix& m, const Matrix& bias) {
  if (bias.rows() != 1 || bias.cols() != m.cols()) {
    throw ShapeError(fmt::format("bias {} does not fit {}", bias.shape_string(), m.shape_string()));
  }
  const auto b = bias.row(0);
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto row = m.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) row[c] += b[c];
  }
}

Matrix column_sums(const Matrix& m) {
  Matrix s(1, m.cols());
  auto out = s.row(0);
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const auto row = m.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) out[c] += row[c];
  }
  return s;
}

double frobenius_norm(const Matrix& m) { return row_norm(m.values()); }

double row_norm(std::span<const double> row) { return std::sqrt(dot(row, row)); }

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

bool all_finite(const Matrix& m) {
  return std::all_of(m.values().begin(), m.values().end(),
                     [](double v) { return std::isfinite(v); });
}

Matrix gather_rows(const Matrix& m, std::span<const std::size_t> indices) {
  Matrix out(indices.size(), m.cols());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= m.rows()) {
      throw InputError(fmt::format("row index {} out of range ({} rows)", indices[i], m.rows()));
    }
    const auto src = m.row(indices[i]);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}

}  // namespace srlab

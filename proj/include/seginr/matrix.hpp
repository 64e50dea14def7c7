#pragma once

#include <algorithm>
#include <cassert>
#include <cstddef>
#include <span>
#include <vector>

namespace seginr {

// Row-major dense matrix of doubles; the only tensor type the model needs.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  double* row(std::size_t r) { return data.data() + r * cols; }
  const double* row(std::size_t r) const { return data.data() + r * cols; }
  std::span<double> row_span(std::size_t r) { return {row(r), cols}; }
  std::span<const double> row_span(std::size_t r) const { return {row(r), cols}; }
  double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  void zero() { std::fill(data.begin(), data.end(), 0.0); }
};

// Four-way unrolled dot product. Every linear map in the model funnels
// through this one function, so batched and per-cell evaluation share an
// accumulation order and produce bit-identical results.
inline double dot(const double* a, const double* b, std::size_t n) {
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    s0 += a[k] * b[k];
    s1 += a[k + 1] * b[k + 1];
    s2 += a[k + 2] * b[k + 2];
    s3 += a[k + 3] * b[k + 3];
  }
  for (; k < n; ++k) s0 += a[k] * b[k];
  return (s0 + s1) + (s2 + s3);
}

inline void axpy(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t k = 0; k < n; ++k) y[k] += alpha * x[k];
}

// out = x · wᵀ (+ bias). Weights are row-major (out_dim × in_dim); in_dim is
// taken from x.cols.
inline void linear_forward(const Matrix& x, const double* w, std::size_t out_dim,
                           const double* bias, Matrix& out) {
  assert(out.rows == x.rows && out.cols == out_dim);
  for (std::size_t i = 0; i < x.rows; ++i) {
    const double* xi = x.row(i);
    double* oi = out.row(i);
    for (std::size_t j = 0; j < out_dim; ++j) {
      const double v = dot(xi, w + j * x.cols, x.cols);
      oi[j] = bias ? v + bias[j] : v;
    }
  }
}

// dx += dy · w, where w is (dy.cols × dx.cols) row-major.
inline void linear_backward_input(const Matrix& dy, const double* w, Matrix& dx) {
  assert(dx.rows == dy.rows);
  for (std::size_t i = 0; i < dy.rows; ++i) {
    const double* di = dy.row(i);
    double* xi = dx.row(i);
    for (std::size_t j = 0; j < dy.cols; ++j) {
      if (di[j] != 0.0) axpy(di[j], w + j * dx.cols, xi, dx.cols);
    }
  }
}

// dw += dyᵀ · x and, when db is given, db += column sums of dy. dw is
// (dy.cols × x.cols) row-major. Rows of dy that are exactly zero (masked-out
// cells) cost nothing.
inline void linear_backward_params(const Matrix& dy, const Matrix& x, double* dw, double* db) {
  assert(dy.rows == x.rows);
  for (std::size_t i = 0; i < dy.rows; ++i) {
    const double* di = dy.row(i);
    const double* xi = x.row(i);
    for (std::size_t j = 0; j < dy.cols; ++j) {
      const double v = di[j];
      if (v != 0.0) axpy(v, xi, dw + j * x.cols, x.cols);
      if (db) db[j] += v;
    }
  }
}

}  // namespace seginr

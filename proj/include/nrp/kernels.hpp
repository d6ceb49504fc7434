#pragma once

#include <cstddef>

#include "nrp/matrix.hpp"

// Dense kernels behind the models' hot paths. Each kernel exists twice: a
// plain serial reference under kernels::serial and an OpenMP version under
// kernels. The parallel versions split work across independent output rows
// only, never across a reduction, so for every element the summation order is
// identical to the serial reference and results are bitwise equal for any
// thread count. Tests and the benchmark target compare the two directly.

namespace nrp::kernels {

namespace detail {

template <typename T>
inline void matmul_row(const T* a_row, const Matrix<T>& B, T* c_row) {
  const std::size_t r = B.rows, q = B.cols;
  for (std::size_t j = 0; j < q; ++j) c_row[j] = T(0);
  for (std::size_t k = 0; k < r; ++k) {
    const T a = a_row[k];
    if (a == T(0)) continue;
    const T* b_row = B.row(k);
    for (std::size_t j = 0; j < q; ++j) c_row[j] += a * b_row[j];
  }
}

// The reduction is simd-annotated so it vectorizes without fast-math; the
// lane order is fixed by the build, and serial/parallel share this helper,
// so the bitwise-equality contract between them is unaffected.
template <typename T>
inline void matmul_nt_row(const T* a_row, const Matrix<T>& B, T* c_row) {
  const std::size_t q = B.rows, r = B.cols;
  for (std::size_t j = 0; j < q; ++j) {
    const T* b_row = B.row(j);
    T acc = T(0);
#pragma omp simd reduction(+ : acc)
    for (std::size_t k = 0; k < r; ++k) acc += a_row[k] * b_row[k];
    c_row[j] = acc;
  }
}

// row i of C = A^T * B, i.e. C[i,:] = sum_b A[b,i] * B[b,:]
template <typename T>
inline void matmul_tn_row(const Matrix<T>& A, const Matrix<T>& B, std::size_t i, T* c_row) {
  const std::size_t b_count = A.rows, q = B.cols;
  for (std::size_t j = 0; j < q; ++j) c_row[j] = T(0);
  for (std::size_t b = 0; b < b_count; ++b) {
    const T a = A.at(b, i);
    if (a == T(0)) continue;
    const T* b_row = B.row(b);
    for (std::size_t j = 0; j < q; ++j) c_row[j] += a * b_row[j];
  }
}

template <typename T>
inline void softmax_row(const T* logits, T* out, std::size_t n) {
  T mx = logits[0];
  for (std::size_t j = 1; j < n; ++j)
    if (logits[j] > mx) mx = logits[j];
  T sum = T(0);
  for (std::size_t j = 0; j < n; ++j) {
    const T e = std::exp(logits[j] - mx);
    out[j] = e;
    sum += e;
  }
  const T inv = T(1) / sum;
  for (std::size_t j = 0; j < n; ++j) out[j] *= inv;
}

}  // namespace detail

namespace serial {

// C = A * B
template <typename T>
void matmul(const Matrix<T>& A, const Matrix<T>& B, Matrix<T>& C) {
  if (A.cols != B.rows) throw std::invalid_argument("matmul: inner dims differ");
  C.resize(A.rows, B.cols);
  for (std::size_t i = 0; i < A.rows; ++i)
    detail::matmul_row(A.row(i), B, C.row(i));
}

// C = A * B^T
template <typename T>
void matmul_nt(const Matrix<T>& A, const Matrix<T>& B, Matrix<T>& C) {
  if (A.cols != B.cols) throw std::invalid_argument("matmul_nt: inner dims differ");
  C.resize(A.rows, B.rows);
  for (std::size_t i = 0; i < A.rows; ++i)
    detail::matmul_nt_row(A.row(i), B, C.row(i));
}

// C = A^T * B
template <typename T>
void matmul_tn(const Matrix<T>& A, const Matrix<T>& B, Matrix<T>& C) {
  if (A.rows != B.rows) throw std::invalid_argument("matmul_tn: outer dims differ");
  C.resize(A.cols, B.cols);
  for (std::size_t i = 0; i < A.cols; ++i)
    detail::matmul_tn_row(A, B, i, C.row(i));
}

template <typename T>
void softmax_rows(const Matrix<T>& logits, Matrix<T>& probs) {
  probs.resize(logits.rows, logits.cols);
  for (std::size_t i = 0; i < logits.rows; ++i)
    detail::softmax_row(logits.row(i), probs.row(i), logits.cols);
}

}  // namespace serial

template <typename T>
void matmul(const Matrix<T>& A, const Matrix<T>& B, Matrix<T>& C) {
  if (A.cols != B.rows) throw std::invalid_argument("matmul: inner dims differ");
  C.resize(A.rows, B.cols);
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(A.rows);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i)
    detail::matmul_row(A.row(i), B, C.row(i));
}

template <typename T>
void matmul_nt(const Matrix<T>& A, const Matrix<T>& B, Matrix<T>& C) {
  if (A.cols != B.cols) throw std::invalid_argument("matmul_nt: inner dims differ");
  C.resize(A.rows, B.rows);
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(A.rows);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i)
    detail::matmul_nt_row(A.row(i), B, C.row(i));
}

template <typename T>
void matmul_tn(const Matrix<T>& A, const Matrix<T>& B, Matrix<T>& C) {
  if (A.rows != B.rows) throw std::invalid_argument("matmul_tn: outer dims differ");
  C.resize(A.cols, B.cols);
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(A.cols);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i)
    detail::matmul_tn_row(A, B, i, C.row(i));
}

template <typename T>
void softmax_rows(const Matrix<T>& logits, Matrix<T>& probs) {
  probs.resize(logits.rows, logits.cols);
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(logits.rows);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i)
    detail::softmax_row(logits.row(i), probs.row(i), logits.cols);
}

// C[i,:] += b for every row; used for layer biases.
template <typename T>
void add_row_vector(Matrix<T>& C, const Matrix<T>& b) {
  if (b.rows != 1 || b.cols != C.cols)
    throw std::invalid_argument("add_row_vector: bias shape mismatch");
  const T* bv = b.row(0);
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(C.rows);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    T* c_row = C.row(static_cast<std::size_t>(i));
    for (std::size_t j = 0; j < C.cols; ++j) c_row[j] += bv[j];
  }
}

// out[0,j] = sum_i A[i,j]; used for bias gradients.
template <typename T>
void col_sums(const Matrix<T>& A, Matrix<T>& out) {
  out.resize(1, A.cols);
  T* o = out.row(0);
  for (std::size_t i = 0; i < A.rows; ++i) {
    const T* a_row = A.row(i);
    for (std::size_t j = 0; j < A.cols; ++j) o[j] += a_row[j];
  }
}

}  // namespace nrp::kernels

#pragma once

#include <cassert>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace nrp {

// Dense row-major matrix. Biases are stored as 1 x n matrices so parameter
// updates, clipping and serialization treat every tensor uniformly.
template <typename T>
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<T> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, T(0)) {}

  T* row(std::size_t i) {
    assert(i < rows);
    return data.data() + i * cols;
  }
  const T* row(std::size_t i) const {
    assert(i < rows);
    return data.data() + i * cols;
  }

  T& at(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  const T& at(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

  std::size_t size() const { return data.size(); }

  void fill(T v) { std::fill(data.begin(), data.end(), v); }

  void resize(std::size_t r, std::size_t c) {
    rows = r;
    cols = c;
    data.assign(r * c, T(0));
  }

  bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }

  bool all_finite() const {
    for (T v : data)
      if (!std::isfinite(static_cast<double>(v))) return false;
    return true;
  }
};

template <typename T>
inline void require_shape(const Matrix<T>& m, std::size_t r, std::size_t c, const char* what) {
  if (m.rows != r || m.cols != c)
    throw std::invalid_argument(std::string(what) + ": shape mismatch");
}

}  // namespace nrp

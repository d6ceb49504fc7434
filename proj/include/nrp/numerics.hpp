#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "nrp/kernels.hpp"
#include "nrp/matrix.hpp"
#include "nrp/rng.hpp"

namespace nrp {

enum class Activation { Relu, Tanh, Elu, Sigmoid };

inline Activation activation_from_string(const std::string& s) {
  if (s == "relu") return Activation::Relu;
  if (s == "tanh") return Activation::Tanh;
  if (s == "elu") return Activation::Elu;
  if (s == "sigmoid") return Activation::Sigmoid;
  throw std::invalid_argument("unknown activation: " + s);
}

inline const char* to_string(Activation a) {
  switch (a) {
    case Activation::Relu: return "relu";
    case Activation::Tanh: return "tanh";
    case Activation::Elu: return "elu";
    case Activation::Sigmoid: return "sigmoid";
  }
  return "?";
}

template <typename T>
inline T apply_activation_scalar(Activation kind, T x) {
  switch (kind) {
    case Activation::Relu: return x > T(0) ? x : T(0);
    case Activation::Tanh: return std::tanh(x);
    case Activation::Elu: return x >= T(0) ? x : std::exp(x) - T(1);
    case Activation::Sigmoid: return T(1) / (T(1) + std::exp(-x));
  }
  return x;
}

// Derivative expressed through the activation output a = act(x). All four
// kinds admit this form, which spares the cache from holding pre-activations.
template <typename T>
inline T activation_grad_from_output(Activation kind, T a) {
  switch (kind) {
    case Activation::Relu: return a > T(0) ? T(1) : T(0);
    case Activation::Tanh: return T(1) - a * a;
    case Activation::Elu: return a >= T(0) ? T(1) : a + T(1);
    case Activation::Sigmoid: return a * (T(1) - a);
  }
  return T(1);
}

template <typename T>
void relu(std::vector<T>& x) {
  for (T& v : x) v = v > T(0) ? v : T(0);
}

template <typename T>
void apply_activation(Activation kind, Matrix<T>& x) {
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(x.rows);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    T* row = x.row(static_cast<std::size_t>(i));
    for (std::size_t j = 0; j < x.cols; ++j) row[j] = apply_activation_scalar(kind, row[j]);
  }
}

// Inverted dropout. In training mode each element is zeroed with probability
// p and survivors are scaled by 1/(1-p); evaluation mode is the identity.
// The mask is returned for the backward pass (1 = kept). Mask generation is
// sequential so the RNG stream stays deterministic.
template <typename T>
std::vector<uint8_t> dropout_inplace(Matrix<T>& x, double p, Rng& rng, bool training) {
  if (p < 0.0 || p >= 1.0) throw std::invalid_argument("dropout: p must be in [0, 1)");
  std::vector<uint8_t> mask;
  if (!training || p == 0.0) return mask;
  mask.resize(x.size());
  const T scale = T(1.0 / (1.0 - p));
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (rng.uniform() < p) {
      mask[i] = 0;
      x.data[i] = T(0);
    } else {
      mask[i] = 1;
      x.data[i] *= scale;
    }
  }
  return mask;
}

// Backward of dropout_inplace: dX through the same mask and scaling.
template <typename T>
void dropout_backward_inplace(Matrix<T>& dx, const std::vector<uint8_t>& mask, double p) {
  if (mask.empty()) return;
  const T scale = T(1.0 / (1.0 - p));
  for (std::size_t i = 0; i < dx.size(); ++i)
    dx.data[i] = mask[i] ? dx.data[i] * scale : T(0);
}

// Softmax with max-subtraction. Rejects non-finite logits.
template <typename T>
std::vector<T> stable_softmax(const std::vector<T>& logits) {
  if (logits.empty()) throw std::invalid_argument("stable_softmax: empty input");
  for (T v : logits)
    if (!std::isfinite(static_cast<double>(v)))
      throw std::domain_error("stable_softmax: non-finite logit");
  std::vector<T> out(logits.size());
  kernels::detail::softmax_row(logits.data(), out.data(), logits.size());
  return out;
}

inline constexpr double kProbFloor = 1e-12;

// -ln(predicted[target]), with the probability floored at 1e-12.
template <typename T>
double cross_entropy(const T* predicted, std::size_t n, std::size_t target) {
  if (target >= n) throw std::invalid_argument("cross_entropy: target out of range");
  const double p = std::max(static_cast<double>(predicted[target]), kProbFloor);
  return -std::log(p);
}

template <typename T>
double cross_entropy(const std::vector<T>& predicted, std::size_t target) {
  return cross_entropy(predicted.data(), predicted.size(), target);
}

template <typename T>
double l2_norm(const Matrix<T>& g) {
  double acc = 0.0;
  for (T v : g.data) acc += static_cast<double>(v) * static_cast<double>(v);
  return std::sqrt(acc);
}

// Local (per-tensor) norm clipping: rescale g so its L2 norm does not exceed
// threshold. Tensors within the threshold pass through untouched.
template <typename T>
void clip_by_norm(Matrix<T>& g, double threshold) {
  if (threshold <= 0.0) throw std::invalid_argument("clip_by_norm: threshold must be > 0");
  const double norm = l2_norm(g);
  if (norm <= threshold) return;
  const T scale = T(threshold / norm);
  for (T& v : g.data) v *= scale;
}

template <typename T>
void sgd_step(Matrix<T>& params, const Matrix<T>& grads, double lr) {
  if (lr <= 0.0) throw std::invalid_argument("sgd_step: lr must be > 0");
  if (!params.same_shape(grads)) throw std::invalid_argument("sgd_step: shape mismatch");
  const T step = T(lr);
  for (std::size_t i = 0; i < params.size(); ++i) params.data[i] -= step * grads.data[i];
}

// Gradient accumulator for an embedding/feature matrix where only some rows
// are touched in a step. Untouched rows stay exactly zero and sgd_step_rows
// leaves the corresponding parameter rows bit-identical.
template <typename T>
struct SparseRowGrad {
  Matrix<T> values;
  std::vector<uint8_t> touched;

  void reset(std::size_t rows, std::size_t cols) {
    if (values.rows != rows || values.cols != cols) {
      values.resize(rows, cols);
      touched.assign(rows, 0);
    } else {
      for (std::size_t i = 0; i < rows; ++i)
        if (touched[i]) {
          T* r = values.row(i);
          std::fill(r, r + cols, T(0));
          touched[i] = 0;
        }
    }
  }

  void add_row(std::size_t row, const T* v, T scale) {
    touched[row] = 1;
    T* dst = values.row(row);
    for (std::size_t j = 0; j < values.cols; ++j) dst[j] += scale * v[j];
  }

  void mark_all() { std::fill(touched.begin(), touched.end(), 1); }

  double norm() const {
    double acc = 0.0;
    for (std::size_t i = 0; i < values.rows; ++i) {
      if (!touched[i]) continue;
      const T* r = values.row(i);
      for (std::size_t j = 0; j < values.cols; ++j)
        acc += static_cast<double>(r[j]) * static_cast<double>(r[j]);
    }
    return std::sqrt(acc);
  }

  void clip(double threshold) {
    const double n = norm();
    if (n <= threshold) return;
    const T scale = T(threshold / n);
    for (std::size_t i = 0; i < values.rows; ++i) {
      if (!touched[i]) continue;
      T* r = values.row(i);
      for (std::size_t j = 0; j < values.cols; ++j) r[j] *= scale;
    }
  }
};

template <typename T>
void sgd_step_rows(Matrix<T>& params, const SparseRowGrad<T>& grads, double lr) {
  if (lr <= 0.0) throw std::invalid_argument("sgd_step_rows: lr must be > 0");
  if (!params.same_shape(grads.values)) throw std::invalid_argument("sgd_step_rows: shape mismatch");
  const T step = T(lr);
  for (std::size_t i = 0; i < params.rows; ++i) {
    if (!grads.touched[i]) continue;
    T* p = params.row(i);
    const T* g = grads.values.row(i);
    for (std::size_t j = 0; j < params.cols; ++j) p[j] -= step * g[j];
  }
}

enum class InitScheme { UniformRange, He };

// uniform_range: i.i.d. uniform in [-0.01, 0.01]. he: zero-mean normal with
// sd sqrt(2 / fan_in), for layers feeding a ReLU. Biases are created zero.
template <typename T>
void init_params(Matrix<T>& m, InitScheme scheme, Rng& rng, std::size_t fan_in = 0) {
  switch (scheme) {
    case InitScheme::UniformRange:
      for (T& v : m.data) v = T(rng.uniform(-0.01, 0.01));
      break;
    case InitScheme::He: {
      if (fan_in == 0) fan_in = m.rows;
      const double sd = std::sqrt(2.0 / static_cast<double>(fan_in));
      for (T& v : m.data) v = T(rng.normal(0.0, sd));
      break;
    }
  }
}

// Central-difference gradient oracle, 64-bit. loss_fn must be deterministic
// (dropout off, fixed inputs). Used by tests to check hand-derived backprop.
inline Matrix<double> finite_diff_gradient(const std::function<double()>& loss_fn,
                                           Matrix<double>& params, double epsilon) {
  if (epsilon <= 0.0) throw std::invalid_argument("finite_diff_gradient: epsilon must be > 0");
  Matrix<double> grad(params.rows, params.cols);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double orig = params.data[i];
    params.data[i] = orig + epsilon;
    const double up = loss_fn();
    params.data[i] = orig - epsilon;
    const double down = loss_fn();
    params.data[i] = orig;
    grad.data[i] = (up - down) / (2.0 * epsilon);
  }
  return grad;
}

}  // namespace nrp

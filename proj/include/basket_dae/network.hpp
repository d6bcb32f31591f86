#pragma once

// Single-hidden-layer denoising auto-encoder:
//   h = tanh(W_in x~ + b_in),  y = sigmoid(W_out h + b_out)
// trained against the cross-entropy between the clean basket and y.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <string>

#include "basket_dae/data.hpp"
#include "basket_dae/errors.hpp"
#include "basket_dae/random.hpp"

namespace basket_dae {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// The four parameter blocks shared by parameters, gradients and Adam moments.
struct ParameterBlocks {
  Matrix w_in;   // N x p
  Vector b_in;   // N
  Matrix w_out;  // p x N
  Vector b_out;  // p

  std::size_t p() const noexcept { return static_cast<std::size_t>(b_out.size()); }
  std::size_t n_hidden() const noexcept { return static_cast<std::size_t>(b_in.size()); }
  std::size_t count() const noexcept {
    return static_cast<std::size_t>(w_in.size() + b_in.size() + w_out.size() + b_out.size());
  }

  void resize_zero(std::size_t p, std::size_t n) {
    const auto pi = static_cast<Eigen::Index>(p);
    const auto ni = static_cast<Eigen::Index>(n);
    w_in = Matrix::Zero(ni, pi);
    b_in = Vector::Zero(ni);
    w_out = Matrix::Zero(pi, ni);
    b_out = Vector::Zero(pi);
  }

  bool same_shape(const ParameterBlocks& o) const noexcept {
    return w_in.rows() == o.w_in.rows() && w_in.cols() == o.w_in.cols() &&
           b_in.size() == o.b_in.size() && w_out.rows() == o.w_out.rows() &&
           w_out.cols() == o.w_out.cols() && b_out.size() == o.b_out.size();
  }

  bool consistent() const noexcept {
    return w_in.rows() == b_in.size() && w_out.rows() == b_out.size() &&
           w_in.cols() == b_out.size() && w_out.cols() == b_in.size() && b_in.size() >= 1 &&
           b_out.size() >= 1;
  }

  double squared_norm() const {
    return w_in.squaredNorm() + b_in.squaredNorm() + w_out.squaredNorm() + b_out.squaredNorm();
  }

  bool all_finite() const {
    return w_in.allFinite() && b_in.allFinite() && w_out.allFinite() && b_out.allFinite();
  }

  /// Calls fn(Eigen block&) on each of the four blocks in a fixed order.
  template <typename Fn>
  void for_each_block(Fn&& fn) {
    fn(w_in);
    fn(b_in);
    fn(w_out);
    fn(b_out);
  }

  /// Flat coefficient access in block order (w_in, b_in, w_out, b_out), each
  /// block in Eigen's column-major storage order.
  double& coeff(std::size_t k) {
    auto pick = [&](auto& blk) -> double* {
      const auto sz = static_cast<std::size_t>(blk.size());
      if (k < sz) return blk.data() + k;
      k -= sz;
      return nullptr;
    };
    if (auto* d = pick(w_in)) return *d;
    if (auto* d = pick(b_in)) return *d;
    if (auto* d = pick(w_out)) return *d;
    if (auto* d = pick(b_out)) return *d;
    throw DimensionError("parameter index out of range");
  }
  double coeff(std::size_t k) const { return const_cast<ParameterBlocks*>(this)->coeff(k); }

  friend bool operator==(const ParameterBlocks& a, const ParameterBlocks& b) {
    return a.same_shape(b) && a.w_in == b.w_in && a.b_in == b.b_in && a.w_out == b.w_out &&
           a.b_out == b.b_out;
  }
};

/// Model parameters theta = {W_in, b_in, W_out, b_out}.
struct DaeParams : ParameterBlocks {};

/// dL/dtheta with the same shapes as DaeParams.
struct DaeGradients : ParameterBlocks {
  static DaeGradients zeros_like(const ParameterBlocks& shape) {
    DaeGradients g;
    g.resize_zero(shape.p(), shape.n_hidden());
    return g;
  }
};

struct ForwardTrace {
  Vector x_tilde;
  Vector h;
  Vector y;
};

/// Smallest and largest output probability forward() may return, keeping every
/// y_i strictly inside (0,1) even under saturation.
inline constexpr double output_floor = std::numeric_limits<double>::min();
inline const double output_ceiling = std::nextafter(1.0, 0.0);

/// Clamp applied to probabilities inside the loss only.
inline constexpr double loss_clamp = 1e-7;

inline Vector to_vector(const Basket& b) {
  Vector v(static_cast<Eigen::Index>(b.size()));
  for (std::size_t i = 0; i < b.size(); ++i) v(static_cast<Eigen::Index>(i)) = b[i] ? 1.0 : 0.0;
  return v;
}

inline double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

/// Glorot-style uniform weights in (-s, s), s = sqrt(6 / (p + N)); zero biases.
inline DaeParams init_params(std::size_t p, std::size_t n_hidden, std::uint64_t seed) {
  if (p < 1 || n_hidden < 1) throw ConfigError("network dimensions must be positive");
  DaeParams params;
  params.resize_zero(p, n_hidden);
  const double s = std::sqrt(6.0 / static_cast<double>(p + n_hidden));
  Rng rng(seed);
  auto fill = [&](Matrix& m) {
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      for (Eigen::Index r = 0; r < m.rows(); ++r) m(r, c) = s * (2.0 * rng.uniform_open() - 1.0);
  };
  fill(params.w_in);
  fill(params.w_out);
  return params;
}

inline double init_scale(std::size_t p, std::size_t n_hidden) {
  return std::sqrt(6.0 / static_cast<double>(p + n_hidden));
}

inline void check_params(const DaeParams& params) {
  if (!params.consistent()) throw DimensionError("inconsistent parameter dimensions");
}

inline ForwardTrace forward(const DaeParams& params, const Vector& x_tilde) {
  if (static_cast<std::size_t>(x_tilde.size()) != params.p())
    throw DimensionError("input length " + std::to_string(x_tilde.size()) +
                         " differs from model p=" + std::to_string(params.p()));
  ForwardTrace t;
  t.x_tilde = x_tilde;
  t.h = (params.w_in * x_tilde + params.b_in).array().tanh().matrix();
  const Vector z = params.w_out * t.h + params.b_out;
  t.y = z.unaryExpr([](double v) { return std::clamp(sigmoid(v), output_floor, output_ceiling); });
  return t;
}

inline ForwardTrace forward(const DaeParams& params, const Basket& x_tilde) {
  return forward(params, to_vector(x_tilde));
}

/// Cross-entropy -sum_i [x_i log y_i + (1 - x_i) log(1 - y_i)] with y clamped
/// to [loss_clamp, 1 - loss_clamp]. The minimum attainable value is therefore
/// p * -log(1 - loss_clamp) > 0.
inline double loss(const Vector& x, const Vector& y) {
  if (x.size() != y.size()) throw DimensionError("loss: basket and output lengths differ");
  double l = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double yi = std::clamp(y(i), loss_clamp, 1.0 - loss_clamp);
    l -= x(i) * std::log(yi) + (1.0 - x(i)) * std::log(1.0 - yi);
  }
  return l;
}

inline double loss(const Basket& x, const Vector& y) { return loss(to_vector(x), y); }

/// Lowest value loss() can return for p items.
inline double loss_floor(std::size_t p) {
  return -static_cast<double>(p) * std::log(1.0 - loss_clamp);
}

/// Analytic gradient of loss(x, forward(params, x~).y), accumulated into `grads`
/// with weight `weight`.
inline void accumulate_backward(const DaeParams& params, const Vector& x, const ForwardTrace& trace,
                                DaeGradients& grads, double weight = 1.0) {
  if (static_cast<std::size_t>(x.size()) != params.p() || trace.y.size() != x.size() ||
      static_cast<std::size_t>(trace.h.size()) != params.n_hidden())
    throw DimensionError("backward: trace does not match parameters");
  if (!grads.same_shape(params)) throw DimensionError("backward: gradient shape mismatch");
  // Sigmoid + cross-entropy: dL/dz_out = y - x.
  const Vector delta_out = weight * (trace.y - x);
  const Vector delta_hidden =
      ((params.w_out.transpose() * delta_out).array() * (1.0 - trace.h.array().square())).matrix();
  grads.w_out.noalias() += delta_out * trace.h.transpose();
  grads.b_out += delta_out;
  grads.w_in.noalias() += delta_hidden * trace.x_tilde.transpose();
  grads.b_in += delta_hidden;
}

inline DaeGradients backward(const DaeParams& params, const Vector& x, const ForwardTrace& trace) {
  DaeGradients g = DaeGradients::zeros_like(params);
  accumulate_backward(params, x, trace, g);
  return g;
}

inline DaeGradients backward(const DaeParams& params, const Basket& x, const ForwardTrace& trace) {
  return backward(params, to_vector(x), trace);
}

/// Weighted batch-sum loss and gradient for column-stacked clean targets and
/// corrupted inputs (each p x B). Matches summing accumulate_backward over columns.
inline double batch_gradient(const DaeParams& params, const Matrix& clean, const Matrix& corrupted,
                             const Vector& weights, DaeGradients& grads) {
  if (clean.rows() != static_cast<Eigen::Index>(params.p()) || corrupted.rows() != clean.rows() ||
      corrupted.cols() != clean.cols() || weights.size() != clean.cols())
    throw DimensionError("batch_gradient: batch shapes do not match parameters");
  grads = DaeGradients::zeros_like(params);
  const Matrix h = ((params.w_in * corrupted).colwise() + params.b_in).array().tanh().matrix();
  Matrix y = (params.w_out * h).colwise() + params.b_out;
  y = y.unaryExpr([](double v) { return std::clamp(sigmoid(v), output_floor, output_ceiling); });

  double total = 0.0;
  for (Eigen::Index c = 0; c < clean.cols(); ++c) total += weights(c) * loss(clean.col(c), y.col(c));

  const Matrix delta_out = (y - clean) * weights.asDiagonal();
  const Matrix delta_hidden =
      ((params.w_out.transpose() * delta_out).array() * (1.0 - h.array().square())).matrix();
  grads.w_out.noalias() = delta_out * h.transpose();
  grads.b_out = delta_out.rowwise().sum();
  grads.w_in.noalias() = delta_hidden * corrupted.transpose();
  grads.b_in = delta_hidden.rowwise().sum();
  return total;
}

}  // namespace basket_dae

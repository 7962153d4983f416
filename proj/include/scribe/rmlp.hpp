#pragma once

// Recurrent multilayer perceptron: each layer sees its own previous output
// and the current output of the layer below,
//   x_l(n+1) = phi_l(w_l [x_l(n); x_{l-1}(n+1); 1]),  x_0(n+1) = u(n).

#include "scribe/core.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace scribe {

enum class Activation { kTanh, kLogistic, kIdentity };

inline Activation activation_from_name(const std::string& name) {
  if (name == "tanh") return Activation::kTanh;
  if (name == "logistic") return Activation::kLogistic;
  if (name == "identity") return Activation::kIdentity;
  throw ConfigError("unknown activation '" + name + "'");
}

inline double activate(Activation f, double a) {
  switch (f) {
    case Activation::kTanh: return std::tanh(a);
    case Activation::kLogistic: return 1.0 / (1.0 + std::exp(-a));
    case Activation::kIdentity: return a;
  }
  return a;
}

/// Derivative written in terms of the activation's output y.
inline double activate_slope(Activation f, double y) {
  switch (f) {
    case Activation::kTanh: return 1.0 - y * y;
    case Activation::kLogistic: return y * (1.0 - y);
    case Activation::kIdentity: return 1.0;
  }
  return 1.0;
}

/// w is out x (out + in + 1): [own previous output | layer input | bias].
struct RmlpLayerParams {
  Matrix w;
  Activation activation = Activation::kTanh;

  Eigen::Index outputs() const { return w.rows(); }
  Eigen::Index inputs() const { return w.cols() - w.rows() - 1; }
};

namespace detail {

inline void check_rmlp(const std::vector<RmlpLayerParams>& layers, const Matrix& inputs) {
  if (layers.empty()) throw ConfigError("RMLP needs at least one layer");
  Eigen::Index fan_in = inputs.cols();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    if (layers[l].inputs() != fan_in) {
      throw DataError("RMLP layer " + std::to_string(l) + " expects " + std::to_string(layers[l].inputs()) +
                      " inputs, gets " + std::to_string(fan_in));
    }
    fan_in = layers[l].outputs();
  }
  if (inputs.rows() < 1) throw DataError("RMLP input has no frames");
}

}  // namespace detail

/// Outputs of every layer; row t holds x_l(t+1).
inline std::vector<Matrix> rmlp_trace(const std::vector<RmlpLayerParams>& layers, const Matrix& inputs) {
  detail::check_rmlp(layers, inputs);
  const Eigen::Index T = inputs.rows();
  std::vector<Matrix> out;
  for (const auto& p : layers) out.push_back(Matrix::Zero(T, p.outputs()));
  for (Eigen::Index t = 0; t < T; ++t) {
    Vector below = inputs.row(t).transpose();
    for (std::size_t l = 0; l < layers.size(); ++l) {
      const auto& p = layers[l];
      const Eigen::Index n = p.outputs();
      Vector own = t > 0 ? Vector(out[l].row(t - 1).transpose()) : Vector::Zero(n);
      Vector a = p.w.leftCols(n) * own + p.w.middleCols(n, below.size()) * below + p.w.col(p.w.cols() - 1);
      for (Eigen::Index j = 0; j < n; ++j) a(j) = activate(p.activation, a(j));
      out[l].row(t) = a.transpose();
      below = std::move(a);
    }
  }
  return out;
}

inline Matrix rmlp_forward(const std::vector<RmlpLayerParams>& layers, const Matrix& inputs) {
  return rmlp_trace(layers, inputs).back();
}

/// Weight gradients given dLoss/d(top-layer outputs), T x out.
inline std::vector<Matrix> rmlp_backward(const std::vector<RmlpLayerParams>& layers, const Matrix& inputs,
                                         const Matrix& output_deltas) {
  const auto trace = rmlp_trace(layers, inputs);
  const Eigen::Index T = inputs.rows();
  const std::size_t L = layers.size();
  if (output_deltas.rows() != T || output_deltas.cols() != layers.back().outputs()) {
    throw DataError("RMLP output deltas have the wrong shape");
  }
  std::vector<Matrix> grads;
  for (const auto& p : layers) grads.push_back(Matrix::Zero(p.w.rows(), p.w.cols()));
  // dz[l] holds the pre-activation delta of layer l at frame t+1 during the sweep.
  std::vector<Vector> dz_next(L);
  for (std::size_t l = 0; l < L; ++l) dz_next[l] = Vector::Zero(layers[l].outputs());

  for (Eigen::Index t = T - 1; t >= 0; --t) {
    std::vector<Vector> dz(L);
    Vector from_above;
    for (std::size_t li = L; li-- > 0;) {
      const auto& p = layers[li];
      const Eigen::Index n = p.outputs();
      Vector dx = p.w.leftCols(n).transpose() * dz_next[li];
      if (li + 1 == L) {
        dx += output_deltas.row(t).transpose();
      } else {
        dx += from_above;
      }
      dz[li] = dx;
      for (Eigen::Index j = 0; j < n; ++j) dz[li](j) *= activate_slope(p.activation, trace[li](t, j));

      const Vector below = li == 0 ? Vector(inputs.row(t).transpose()) : Vector(trace[li - 1].row(t).transpose());
      if (t > 0) grads[li].leftCols(n).noalias() += dz[li] * trace[li].row(t - 1);
      grads[li].middleCols(n, below.size()).noalias() += dz[li] * below.transpose();
      grads[li].col(p.w.cols() - 1) += dz[li];
      from_above = p.w.middleCols(n, below.size()).transpose() * dz[li];
    }
    dz_next = std::move(dz);
  }
  return grads;
}

}  // namespace scribe

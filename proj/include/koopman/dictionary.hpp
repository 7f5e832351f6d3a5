#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "koopman/activations.hpp"

namespace koopman {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Parametric basis psi(W x): a stack of bias-free layers, each applying a
/// weight matrix followed by the elementwise activation. When augment_state
/// is set the published lift is [x; psi(Wx)], so states can be decoded back
/// by projection onto the first d coordinates.
struct DictionaryParams {
  std::vector<Matrix> layers;  // layer l: m_l x m_{l-1}, m_0 = state dim
  ActivationKind activation = ActivationKind::Tanh;
  bool augment_state = true;

  int state_dim() const { return static_cast<int>(layers.front().cols()); }
  int width() const { return static_cast<int>(layers.back().rows()); }
  int lift_dim() const { return width() + (augment_state ? state_dim() : 0); }
  int layer_count() const { return static_cast<int>(layers.size()); }

  void validate() const;  // throws shape_error on broken layer chaining
};

/// Seeded init, uniform in [-s, s] with s = 1/sqrt(fan_in).
DictionaryParams make_dictionary(int state_dim, const std::vector<int>& widths,
                                 ActivationKind activation, bool augment_state,
                                 std::uint64_t seed);

Vector lift(const DictionaryParams& params, const Vector& x);

/// d lift / d x, shape lift_dim x d. Identity block on top when augmented.
Matrix lift_jacobian_x(const DictionaryParams& params, const Vector& x);

/// Gradient of upstream . lift(x) with respect to each layer's weights.
/// Augmented rows of upstream do not touch the weights.
std::vector<Matrix> lift_gradient_W(const DictionaryParams& params,
                                    const Vector& x, const Vector& upstream);

}  // namespace koopman

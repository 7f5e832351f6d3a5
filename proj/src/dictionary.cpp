#include "koopman/dictionary.hpp"

#include <cmath>
#include <random>

#include "koopman/errors.hpp"

namespace koopman {

namespace {

Vector apply_activation(ActivationKind kind, const Vector& v) {
  Vector out(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i)
    out[i] = activation_eval(kind, v[i]);
  return out;
}

struct ForwardPass {
  std::vector<Vector> pre;    // pre-activations W_l z_{l-1}
  std::vector<Vector> post;   // post[0] = x, post[l] = sigma(pre[l-1])
};

ForwardPass forward(const DictionaryParams& params, const Vector& x) {
  ForwardPass fp;
  fp.post.push_back(x);
  for (const Matrix& w : params.layers) {
    fp.pre.push_back(w * fp.post.back());
    fp.post.push_back(apply_activation(params.activation, fp.pre.back()));
  }
  return fp;
}

void check_input(const DictionaryParams& params, const Vector& x) {
  params.validate();
  if (x.size() != params.state_dim())
    throw shape_error("lift: state has length " + std::to_string(x.size()) +
                      ", dictionary expects " +
                      std::to_string(params.state_dim()));
  if (!x.allFinite()) throw shape_error("lift: non-finite state");
}

}  // namespace

void DictionaryParams::validate() const {
  if (layers.empty()) throw shape_error("dictionary: no layers");
  for (std::size_t l = 1; l < layers.size(); ++l) {
    if (layers[l].cols() != layers[l - 1].rows())
      throw shape_error("dictionary: layer " + std::to_string(l) +
                        " input width does not chain with previous layer");
  }
  if (layers.back().rows() < 1) throw shape_error("dictionary: empty lift");
}

DictionaryParams make_dictionary(int state_dim, const std::vector<int>& widths,
                                 ActivationKind activation, bool augment_state,
                                 std::uint64_t seed) {
  if (state_dim < 1 || widths.empty())
    throw usage_error("make_dictionary: need state_dim >= 1 and a layer width");
  DictionaryParams params;
  params.activation = activation;
  params.augment_state = augment_state;
  std::mt19937_64 rng(seed);
  int fan_in = state_dim;
  for (int w : widths) {
    if (w < 1) throw usage_error("make_dictionary: layer width must be >= 1");
    const double s = 1.0 / std::sqrt(static_cast<double>(fan_in));
    std::uniform_real_distribution<double> unif(-s, s);
    Matrix layer(w, fan_in);
    for (int r = 0; r < w; ++r)
      for (int c = 0; c < fan_in; ++c) layer(r, c) = unif(rng);
    params.layers.push_back(std::move(layer));
    fan_in = w;
  }
  return params;
}

Vector lift(const DictionaryParams& params, const Vector& x) {
  check_input(params, x);
  const ForwardPass fp = forward(params, x);
  if (!params.augment_state) return fp.post.back();
  Vector out(params.lift_dim());
  out.head(x.size()) = x;
  out.tail(params.width()) = fp.post.back();
  return out;
}

Matrix lift_jacobian_x(const DictionaryParams& params, const Vector& x) {
  check_input(params, x);
  const ForwardPass fp = forward(params, x);
  const int d = params.state_dim();
  // chain diag(sigma'(pre_l)) W_l from the bottom up
  Matrix jac = Matrix::Identity(d, d);
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    Matrix next = params.layers[l] * jac;
    for (Eigen::Index r = 0; r < next.rows(); ++r)
      next.row(r) *= activation_deriv1(params.activation, fp.pre[l][r]);
    jac = std::move(next);
  }
  if (!params.augment_state) return jac;
  Matrix out = Matrix::Zero(params.lift_dim(), d);
  out.topLeftCorner(d, d).setIdentity();
  out.bottomRows(params.width()) = jac;
  return out;
}

std::vector<Matrix> lift_gradient_W(const DictionaryParams& params,
                                    const Vector& x, const Vector& upstream) {
  check_input(params, x);
  if (upstream.size() != params.lift_dim())
    throw shape_error("lift_gradient_W: upstream has length " +
                      std::to_string(upstream.size()) + ", lift dimension is " +
                      std::to_string(params.lift_dim()));
  const ForwardPass fp = forward(params, x);
  const int n_layers = params.layer_count();
  std::vector<Matrix> grads(n_layers);
  // backprop; the identity-augmented block carries no weight dependence
  Vector delta = params.augment_state
                     ? Vector(upstream.tail(params.width()))
                     : Vector(upstream);
  for (int l = n_layers - 1; l >= 0; --l) {
    for (Eigen::Index r = 0; r < delta.size(); ++r)
      delta[r] *= activation_deriv1(params.activation, fp.pre[l][r]);
    grads[l] = delta * fp.post[l].transpose();
    if (l > 0) delta = params.layers[l].transpose() * delta;
  }
  return grads;
}

}  // namespace koopman

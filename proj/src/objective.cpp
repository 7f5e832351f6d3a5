#include "koopman/objective.hpp"

#include <cmath>

#include "koopman/errors.hpp"

namespace koopman {

void TrajectoryDataset::validate() const {
  if (pairs.empty()) throw usage_error("dataset: empty");
  if (d < 1) throw usage_error("dataset: state dimension must be >= 1");
  for (const auto& [x, x_next] : pairs) {
    if (x.size() != d || x_next.size() != d)
      throw shape_error("dataset: pair with wrong state dimension");
    if (!x.allFinite() || !x_next.allFinite())
      throw shape_error("dataset: non-finite entry");
  }
}

Vector residual(const DictionaryParams& params, const KoopmanMatrix& k,
                const Vector& x, const Vector& x_next) {
  if (k.rows() != k.cols() || k.rows() != params.lift_dim())
    throw shape_error("residual: K must be square with the lift dimension");
  return lift(params, x_next) - k * lift(params, x);
}

double loss(const DictionaryParams& params, const KoopmanMatrix& k,
            const TrajectoryDataset& data) {
  data.validate();
  // Kahan summation in index order, for reproducibility across refactors
  double sum = 0.0, comp = 0.0;
  for (const auto& [x, x_next] : data.pairs) {
    const double term = 0.5 * residual(params, k, x, x_next).squaredNorm();
    const double y = term - comp;
    const double t = sum + y;
    comp = (t - sum) - y;
    sum = t;
  }
  return sum / data.size();
}

Matrix grad_K(const DictionaryParams& params, const KoopmanMatrix& k,
              const TrajectoryDataset& data) {
  data.validate();
  const int m = params.lift_dim();
  if (k.rows() != m || k.cols() != m)
    throw shape_error("grad_K: K must be square with the lift dimension");
  Matrix g = Matrix::Zero(m, m);
  for (const auto& [x, x_next] : data.pairs) {
    const Vector z = lift(params, x);
    g += (k * z - lift(params, x_next)) * z.transpose();
  }
  return g / data.size();
}

std::vector<Matrix> grad_W(const DictionaryParams& params,
                           const KoopmanMatrix& k,
                           const TrajectoryDataset& data, GradientMode mode) {
  data.validate();
  std::vector<Matrix> g(params.layer_count());
  for (int l = 0; l < params.layer_count(); ++l)
    g[l] = Matrix::Zero(params.layers[l].rows(), params.layers[l].cols());
  for (const auto& [x, x_next] : data.pairs) {
    const Vector e = residual(params, k, x, x_next);
    if (mode == GradientMode::Full) {
      const auto via_next = lift_gradient_W(params, x_next, e);
      for (int l = 0; l < params.layer_count(); ++l) g[l] += via_next[l];
    }
    const auto via_cur = lift_gradient_W(params, x, Vector(-k.transpose() * e));
    for (int l = 0; l < params.layer_count(); ++l) g[l] += via_cur[l];
  }
  for (auto& m : g) m /= data.size();
  return g;
}

double lipschitz_K(int lift_dim, const ActivationBounds& bounds) {
  if (lift_dim < 1) throw usage_error("lipschitz_K: lift_dim must be >= 1");
  return lift_dim * bounds.h * bounds.h;
}

double lipschitz_W(const TrajectoryDataset& data, const ActivationBounds& bounds,
                   double u_k) {
  data.validate();
  if (u_k <= 0.0) throw usage_error("lipschitz_W: u_k must be positive");
  const double d = data.d;
  double acc = 0.0;
  for (const auto& [x, x_next] : data.pairs) {
    const double xi = x.norm();
    const double delta =
        std::sqrt((1.0 + d * u_k * u_k) * x.squaredNorm() + x_next.squaredNorm());
    acc += xi * delta;
  }
  return std::sqrt(2.0 * d) * u_k * bounds.l_psi * acc / data.size();
}

double loss_upper_bound(int lift_dim, const ActivationBounds& bounds,
                        double u_k) {
  const double s = 1.0 + u_k;
  return 0.5 * lift_dim * bounds.h * bounds.h * s * s;
}

double frobenius(const std::vector<Matrix>& mats) {
  double sq = 0.0;
  for (const auto& m : mats) sq += m.squaredNorm();
  return std::sqrt(sq);
}

double gradient_norm_sum(const DictionaryParams& params, const KoopmanMatrix& k,
                         const TrajectoryDataset& data, GradientMode mode) {
  return grad_K(params, k, data).norm() +
         frobenius(grad_W(params, k, data, mode));
}

}  // namespace koopman

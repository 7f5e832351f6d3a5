#pragma once

#include <utility>
#include <vector>

#include "koopman/dictionary.hpp"

namespace koopman {

/// Finite-dimensional Koopman operator on the lifted space.
using KoopmanMatrix = Matrix;

/// Consecutive state pairs (x_i, x_{i+1}) sampled from one trajectory.
struct TrajectoryDataset {
  std::vector<std::pair<Vector, Vector>> pairs;
  int d = 0;

  int size() const { return static_cast<int>(pairs.size()); }
  void validate() const;
};

/// Frobenius balls assumed on K and W; used for the Lipschitz constants and
/// the loss bound R. Projection is off by default (the algorithms never
/// project).
struct BoundConfig {
  double u_k = 5.0;
  double u_w = 5.0;
  bool project = false;
};

/// Which W-gradient to use. Full differentiates both appearances of W in the
/// residual; Lemma1 keeps only the -K^T (e .* psi'(W x_i)) x_i^T path.
enum class GradientMode { Full, Lemma1 };

/// psi(W x_next) - K psi(W x)
Vector residual(const DictionaryParams& params, const KoopmanMatrix& k,
                const Vector& x, const Vector& x_next);

/// F(W, K) = (1/2N) sum_i ||psi(W x_{i+1}) - K psi(W x_i)||^2
double loss(const DictionaryParams& params, const KoopmanMatrix& k,
            const TrajectoryDataset& data);

Matrix grad_K(const DictionaryParams& params, const KoopmanMatrix& k,
              const TrajectoryDataset& data);

std::vector<Matrix> grad_W(const DictionaryParams& params,
                           const KoopmanMatrix& k,
                           const TrajectoryDataset& data,
                           GradientMode mode = GradientMode::Full);

/// L_K = lift_dim * h^2
double lipschitz_K(int lift_dim, const ActivationBounds& bounds);

/// L_W = sqrt(2d) U_K L_Psi (sum_i ||x_i|| Delta_i) / N,
/// Delta_i = sqrt((1 + d U_K^2) ||x_i||^2 + ||x_{i+1}||^2). Single layer only.
double lipschitz_W(const TrajectoryDataset& data, const ActivationBounds& bounds,
                   double u_k);

/// R = lift_dim h^2 (1 + u_k)^2 / 2; F <= R whenever ||K||_F <= u_k.
double loss_upper_bound(int lift_dim, const ActivationBounds& bounds,
                        double u_k);

/// E = ||grad_K||_F + ||grad_W||_F (layers summed in quadrature)
double gradient_norm_sum(const DictionaryParams& params, const KoopmanMatrix& k,
                         const TrajectoryDataset& data,
                         GradientMode mode = GradientMode::Full);

double frobenius(const std::vector<Matrix>& mats);

}  // namespace koopman

#pragma once

// Independent numerical oracles used by the tests. These stay deliberately
// naive so they cannot share a bug with the library implementations.

#include <cmath>
#include <functional>
#include <random>

#include "koopman/dictionary.hpp"
#include "koopman/objective.hpp"

namespace oracles {

/// Maximum of |f| on [lo, hi] by coarse grid plus golden-section refinement.
inline double max_abs_1d(const std::function<double(double)>& f, double lo,
                         double hi, int grid = 20001) {
  double best_x = lo, best = 0.0;
  for (int i = 0; i < grid; ++i) {
    const double x = lo + (hi - lo) * i / (grid - 1);
    const double v = std::abs(f(x));
    if (v > best) {
      best = v;
      best_x = x;
    }
  }
  double a = best_x - (hi - lo) / (grid - 1);
  double b = best_x + (hi - lo) / (grid - 1);
  const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
  for (int it = 0; it < 200; ++it) {
    const double c = b - gr * (b - a);
    const double d = a + gr * (b - a);
    if (std::abs(f(c)) < std::abs(f(d)))
      a = c;
    else
      b = d;
  }
  return std::abs(f((a + b) / 2.0));
}

inline double central_diff(const std::function<double(double)>& f, double x,
                           double h = 1e-5) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

/// Loss by direct summation, written independently of koopman::loss.
inline double direct_loss(const koopman::DictionaryParams& params,
                          const koopman::KoopmanMatrix& k,
                          const koopman::TrajectoryDataset& data) {
  double total = 0.0;
  for (const auto& [x, x_next] : data.pairs) {
    const koopman::Vector diff =
        koopman::lift(params, x_next) - k * koopman::lift(params, x);
    double sq = 0.0;
    for (Eigen::Index i = 0; i < diff.size(); ++i) sq += diff[i] * diff[i];
    total += 0.5 * sq;
  }
  return total / static_cast<double>(data.pairs.size());
}

inline koopman::TrajectoryDataset random_dataset(int d, int n,
                                                 std::mt19937_64& rng,
                                                 double range = 2.0) {
  koopman::TrajectoryDataset data;
  data.d = d;
  std::uniform_real_distribution<double> unif(-range, range);
  for (int i = 0; i < n; ++i) {
    koopman::Vector a(d), b(d);
    for (int c = 0; c < d; ++c) {
      a[c] = unif(rng);
      b[c] = unif(rng);
    }
    data.pairs.emplace_back(a, b);
  }
  return data;
}

inline koopman::Matrix random_matrix(int rows, int cols, std::mt19937_64& rng,
                                     double range = 1.0) {
  std::uniform_real_distribution<double> unif(-range, range);
  koopman::Matrix m(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) m(r, c) = unif(rng);
  return m;
}

/// Finite-difference gradient of loss with respect to every layer entry.
inline std::vector<koopman::Matrix> fd_grad_W(
    const koopman::DictionaryParams& params, const koopman::KoopmanMatrix& k,
    const koopman::TrajectoryDataset& data, double h = 1e-5) {
  std::vector<koopman::Matrix> out;
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    koopman::Matrix g(params.layers[l].rows(), params.layers[l].cols());
    for (Eigen::Index r = 0; r < g.rows(); ++r)
      for (Eigen::Index c = 0; c < g.cols(); ++c) {
        koopman::DictionaryParams pp = params, pm = params;
        pp.layers[l](r, c) += h;
        pm.layers[l](r, c) -= h;
        g(r, c) =
            (koopman::loss(pp, k, data) - koopman::loss(pm, k, data)) / (2 * h);
      }
    out.push_back(std::move(g));
  }
  return out;
}

inline koopman::Matrix fd_grad_K(const koopman::DictionaryParams& params,
                                 const koopman::KoopmanMatrix& k,
                                 const koopman::TrajectoryDataset& data,
                                 double h = 1e-5) {
  koopman::Matrix g(k.rows(), k.cols());
  for (Eigen::Index r = 0; r < k.rows(); ++r)
    for (Eigen::Index c = 0; c < k.cols(); ++c) {
      koopman::KoopmanMatrix kp = k, km = k;
      kp(r, c) += h;
      km(r, c) -= h;
      g(r, c) =
          (koopman::loss(params, kp, data) - koopman::loss(params, km, data)) /
          (2 * h);
    }
  return g;
}

inline double rel_err(double a, double b) {
  return std::abs(a - b) / std::max(1e-8, std::abs(b));
}

inline double rel_err_mat(const koopman::Matrix& a, const koopman::Matrix& b) {
  return (a - b).norm() / std::max(1e-8, b.norm());
}

}  // namespace oracles

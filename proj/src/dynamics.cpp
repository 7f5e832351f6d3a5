#include "koopman/dynamics.hpp"

#include <cmath>

#include "koopman/errors.hpp"

namespace koopman {

OdeSystem make_van_der_pol(const VanDerPol& p) {
  OdeSystem sys;
  sys.d = 2;
  sys.rhs = [p](const Vector& x) {
    Vector dx(2);
    dx[0] = p.mu * (x[0] - x[0] * x[0] * x[0] / 3.0 - x[1]);
    dx[1] = x[0] / p.mu;
    return dx;
  };
  return sys;
}

OdeSystem make_glycolysis(const Glycolysis& p) {
  OdeSystem sys;
  sys.d = 7;
  sys.rhs = [p](const Vector& x) {
    const double flux =
        p.k1 * x[0] * x[5] / (1.0 + std::pow(x[5] / p.k1_cap, p.q_exp));
    Vector dx(7);
    dx[0] = p.j_flux - flux;
    dx[1] = 2.0 * flux - p.k2 * x[1] * (p.n - x[4]) - p.k6 * x[1] * x[4];
    dx[2] = p.k2 * x[1] * (p.n - x[4]) - p.k3 * x[2] * (p.a - x[5]);
    dx[3] = p.k3 * x[2] * (p.a - x[5]) - p.k4 * x[3] * x[4] -
            p.kappa * (x[3] - x[6]);
    dx[4] = p.k2 * x[1] * (p.n - x[4]) - p.k4 * x[3] * x[4] -
            p.k6 * x[1] * x[4];
    dx[5] = -2.0 * flux + 2.0 * p.k3 * x[2] * (p.a - x[5]) - p.k5 * x[5];
    dx[6] = p.phi * p.kappa * (x[3] - x[6]) - p.k * x[6];
    return dx;
  };
  return sys;
}

Vector vector_field(const OdeSystem& sys, const Vector& x) {
  if (x.size() != sys.d)
    throw shape_error("vector_field: state has length " +
                      std::to_string(x.size()) + ", system dimension is " +
                      std::to_string(sys.d));
  return sys.rhs(x);
}

Vector rk4_step(const OdeSystem& sys, const Vector& x, double dt) {
  if (dt <= 0.0) throw usage_error("rk4_step: dt must be positive");
  const Vector k1 = vector_field(sys, x);
  const Vector k2 = vector_field(sys, Vector(x + 0.5 * dt * k1));
  const Vector k3 = vector_field(sys, Vector(x + 0.5 * dt * k2));
  const Vector k4 = vector_field(sys, Vector(x + dt * k3));
  Vector out = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  if (!out.allFinite())
    throw divergence_error("rk4_step: non-finite state after step");
  return out;
}

Trajectory simulate(const OdeSystem& sys, const Vector& x0, double dt,
                    int steps) {
  if (steps < 0) throw usage_error("simulate: steps must be >= 0");
  Trajectory traj;
  traj.dt = dt;
  traj.states.reserve(steps + 1);
  traj.states.push_back(x0);
  for (int i = 0; i < steps; ++i) {
    try {
      traj.states.push_back(rk4_step(sys, traj.states.back(), dt));
    } catch (const divergence_error&) {
      throw divergence_error("simulate: diverged at step " +
                             std::to_string(i + 1));
    }
  }
  return traj;
}

Vector Normalizer::apply(const Vector& x) const {
  if (!enabled) return x;
  return ((x - offset).array() / scale.array()).matrix();
}

Vector Normalizer::invert(const Vector& z) const {
  if (!enabled) return z;
  return offset + (scale.array() * z.array()).matrix();
}

Normalizer fit_normalizer(const std::vector<Vector>& states) {
  if (states.empty()) throw usage_error("fit_normalizer: no states");
  const int d = static_cast<int>(states.front().size());
  Vector lo = states.front(), hi = states.front();
  for (const Vector& x : states) {
    lo = lo.cwiseMin(x);
    hi = hi.cwiseMax(x);
  }
  Normalizer norm;
  norm.enabled = true;
  norm.offset = 0.5 * (lo + hi);
  norm.scale = 0.5 * (hi - lo);
  for (int i = 0; i < d; ++i)
    if (norm.scale[i] <= 0.0) norm.scale[i] = 1.0;  // constant coordinate
  return norm;
}

DatasetSplit make_dataset(const Trajectory& traj, int n_train, int n_predict) {
  const int n_states = static_cast<int>(traj.states.size());
  if (n_train < 1 || n_predict < 0 || n_train + n_predict > n_states - 1)
    throw usage_error("make_dataset: split needs n_train + n_predict <= " +
                      std::to_string(n_states - 1));
  DatasetSplit split;
  split.train.d = static_cast<int>(traj.states.front().size());
  for (int i = 0; i < n_train; ++i)
    split.train.pairs.emplace_back(traj.states[i], traj.states[i + 1]);
  if (n_predict > 0)
    split.predict_truth.assign(traj.states.begin() + n_train,
                               traj.states.begin() + n_train + n_predict + 1);
  return split;
}

}  // namespace koopman

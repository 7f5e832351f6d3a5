#pragma once

#include <functional>

#include "koopman/objective.hpp"

namespace koopman {

struct VanDerPol {
  double mu = 0.5;
};

/// Seven-species glycolytic pathway; defaults are the experiment's setting.
/// k1_cap is the saturation constant inside (x6/k1_cap)^q_exp, distinct from
/// the rate k1.
struct Glycolysis {
  double j_flux = 2.5;
  double a = 4.0;
  double n = 1.0;
  double k1_cap = 0.52;
  double kappa = 13.0;
  double phi = 0.1;
  double q_exp = 4.0;
  double k = 1.8;
  double k1 = 100.0;
  double k2 = 6.0;
  double k3 = 16.0;
  double k4 = 100.0;
  double k5 = 1.28;
  double k6 = 12.0;
};

struct OdeSystem {
  std::function<Vector(const Vector&)> rhs;
  int d = 0;
};

OdeSystem make_van_der_pol(const VanDerPol& p);
OdeSystem make_glycolysis(const Glycolysis& p);

Vector vector_field(const OdeSystem& sys, const Vector& x);

Vector rk4_step(const OdeSystem& sys, const Vector& x, double dt);

struct Trajectory {
  std::vector<Vector> states;
  double dt = 0.0;
  double t0 = 0.0;
};

Trajectory simulate(const OdeSystem& sys, const Vector& x0, double dt,
                    int steps);

/// Per-coordinate affine map onto [-1, 1]; identity when disabled.
struct Normalizer {
  bool enabled = false;
  Vector offset;  // original = offset + scale .* normalized
  Vector scale;

  Vector apply(const Vector& x) const;
  Vector invert(const Vector& z) const;
};

Normalizer fit_normalizer(const std::vector<Vector>& states);

/// Consecutive training pairs from the first n_train transitions, plus the
/// following n_predict + 1 states (ground truth for rollout, starting at the
/// prediction segment's initial state).
struct DatasetSplit {
  TrajectoryDataset train;
  std::vector<Vector> predict_truth;
};

DatasetSplit make_dataset(const Trajectory& traj, int n_train, int n_predict);

}  // namespace koopman

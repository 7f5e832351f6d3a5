#pragma once

#include "koopman/dynamics.hpp"
#include "koopman/objective.hpp"

namespace koopman {

/// First d coordinates of an augmented lift, mapped back to original units
/// when the model was trained on normalized data.
Vector decode(const Vector& z, int d, const Normalizer& norm = {});

/// K-invariant rollout: z_0 = lift(x0), z_{k+1} = K z_k, no re-lifting.
/// x0 and the returned states are in original units; lifting happens in the
/// normalized space when norm is enabled. relift re-lifts the decoded state
/// each step instead.
std::vector<Vector> multi_step_predict(const DictionaryParams& params,
                                       const KoopmanMatrix& k, const Vector& x0,
                                       int n, const Normalizer& norm = {},
                                       bool relift = false);

struct PredictionRun {
  std::vector<Vector> predicted;
  std::vector<Vector> truth;
  std::vector<double> per_step_rel_err;  // percent-free ratios
  double mean_rel_err = 0.0;
  double max_rel_err = 0.0;
  double final_rel_err = 0.0;
};

/// e_k = ||pred_k - truth_k|| / max(||truth_k||, 1e-12)
PredictionRun relative_error(const std::vector<Vector>& pred,
                             const std::vector<Vector>& truth);

}  // namespace koopman

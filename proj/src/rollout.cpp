#include "koopman/rollout.hpp"

#include <algorithm>
#include <cmath>

#include "koopman/errors.hpp"

namespace koopman {

Vector decode(const Vector& z, int d, const Normalizer& norm) {
  if (z.size() < d)
    throw shape_error("decode: lifted vector shorter than state dimension");
  return norm.invert(z.head(d));
}

std::vector<Vector> multi_step_predict(const DictionaryParams& params,
                                       const KoopmanMatrix& k, const Vector& x0,
                                       int n, const Normalizer& norm,
                                       bool relift) {
  if (!params.augment_state)
    throw usage_error(
        "multi_step_predict: needs a state-augmented dictionary to decode");
  if (n < 0) throw usage_error("multi_step_predict: n must be >= 0");
  const int d = params.state_dim();
  std::vector<Vector> out;
  out.reserve(n + 1);
  out.push_back(x0);
  Vector z = lift(params, norm.apply(x0));
  for (int step = 1; step <= n; ++step) {
    z = k * z;
    if (!z.allFinite())
      throw divergence_error("multi_step_predict: diverged at step " +
                             std::to_string(step));
    out.push_back(decode(z, d, norm));
    if (relift) z = lift(params, norm.apply(out.back()));
  }
  return out;
}

PredictionRun relative_error(const std::vector<Vector>& pred,
                             const std::vector<Vector>& truth) {
  if (pred.size() != truth.size() || pred.empty())
    throw usage_error("relative_error: sequences must have equal length >= 1");
  PredictionRun run;
  run.predicted = pred;
  run.truth = truth;
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double denom = std::max(truth[i].norm(), 1e-12);
    const double e = (pred[i] - truth[i]).norm() / denom;
    run.per_step_rel_err.push_back(e);
    sum += e;
    run.max_rel_err = std::max(run.max_rel_err, e);
  }
  run.mean_rel_err = sum / pred.size();
  run.final_rel_err = run.per_step_rel_err.back();
  return run;
}

}  // namespace koopman

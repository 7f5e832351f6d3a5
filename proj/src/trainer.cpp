#include "koopman/trainer.hpp"

#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <random>

#include "koopman/errors.hpp"

namespace koopman {

namespace {

void project_ball(Matrix& m, double radius) {
  const double n = m.norm();
  if (n > radius) m *= radius / n;
}

std::pair<double, double> auto_constants(const DictionaryParams& params,
                                         const TrajectoryDataset& data,
                                         const BoundConfig& bounds) {
  if (params.layer_count() != 1)
    throw usage_error(
        "schedule auto: Lipschitz step sizes are only available for "
        "single-layer dictionaries; set a constant rate instead");
  const ActivationBounds ab = activation_bounds(params.activation);
  const double l_k = lipschitz_K(params.lift_dim(), ab);
  const double l_w = lipschitz_W(data, ab, bounds.u_k);
  return {l_w, l_k};
}

}  // namespace

std::pair<double, double> learning_rate(const Schedule& schedule, int t,
                                        double l_w, double l_k) {
  switch (schedule.kind) {
    case ScheduleKind::Constant:
      if (schedule.eta_w <= 0.0 || schedule.eta_k <= 0.0)
        throw usage_error("learning_rate: constant rate must be positive");
      return {schedule.eta_w, schedule.eta_k};
    case ScheduleKind::Diminishing: {
      const double eta = 1.0 / (t + 1);
      return {eta, eta};
    }
    case ScheduleKind::Auto: {
      if (!(l_w > 0.0) || !(l_k > 0.0) || !std::isfinite(l_w) ||
          !std::isfinite(l_k))
        throw usage_error("learning_rate: auto needs finite positive L_W, L_K");
      const double eta = 1.0 / std::max(l_w, l_k);
      return {eta, eta};
    }
  }
  throw usage_error("learning_rate: unknown schedule");
}

KoopmanMatrix make_koopman(int lift_dim, KoopmanInit init, std::uint64_t seed) {
  if (init == KoopmanInit::Identity)
    return Matrix::Identity(lift_dim, lift_dim);
  std::mt19937_64 rng(seed);
  const double s = 1.0 / std::sqrt(static_cast<double>(lift_dim));
  std::uniform_real_distribution<double> unif(-s, s);
  Matrix k(lift_dim, lift_dim);
  for (int r = 0; r < lift_dim; ++r)
    for (int c = 0; c < lift_dim; ++c) k(r, c) = unif(rng);
  return k;
}

TrainerState make_trainer_state(DictionaryParams params, KoopmanMatrix k,
                                const TrajectoryDataset& data,
                                GradientMode mode) {
  TrainerState state;
  state.params = std::move(params);
  state.k = std::move(k);
  state.best_params = state.params;
  state.best_k = state.k;
  state.t = 0;
  HistoryRow row;
  row.t = 0;
  row.loss = loss(state.params, state.k, data);
  row.grad_k_fro = grad_K(state.params, state.k, data).norm();
  row.grad_w_fro = frobenius(grad_W(state.params, state.k, data, mode));
  row.grad_w_mid_fro = std::numeric_limits<double>::quiet_NaN();
  row.e = row.grad_k_fro + row.grad_w_fro;
  row.eta = 0.0;
  state.e_best = row.e;
  state.history.push_back(row);
  return state;
}

void tracker_update(TrainerState& state, double e_new, TrackerMode mode) {
  const double reference = mode == TrackerMode::BestSoFar
                               ? state.e_best
                               : state.history[state.history.size() - 2].e;
  if (e_new <= reference) {
    state.best_params = state.params;
    state.best_k = state.k;
    state.e_best = std::min(state.e_best, e_new);
  }
}

void step(TrainerState& state, const TrajectoryDataset& data,
          const TrainOptions& opts) {
  double l_w = 0.0, l_k = 0.0;
  if (opts.schedule.kind == ScheduleKind::Auto)
    std::tie(l_w, l_k) = auto_constants(state.params, data, opts.bounds);
  const auto [eta_w, eta_k] = learning_rate(opts.schedule, state.t, l_w, l_k);

  const Matrix gk = grad_K(state.params, state.k, data);
  state.k -= eta_k * gk;
  if (opts.bounds.project) project_ball(state.k, opts.bounds.u_k);

  const auto gw_mid = grad_W(state.params, state.k, data, opts.gradient);
  state.history.back().grad_w_mid_fro = frobenius(gw_mid);
  state.history.back().eta = eta_w;
  for (int l = 0; l < state.params.layer_count(); ++l)
    state.params.layers[l] -= eta_w * gw_mid[l];
  if (opts.bounds.project)
    for (auto& layer : state.params.layers) project_ball(layer, opts.bounds.u_w);

  ++state.t;
  HistoryRow row;
  row.t = state.t;
  row.loss = loss(state.params, state.k, data);
  row.grad_k_fro = grad_K(state.params, state.k, data).norm();
  row.grad_w_fro =
      frobenius(grad_W(state.params, state.k, data, opts.gradient));
  row.grad_w_mid_fro = std::numeric_limits<double>::quiet_NaN();
  row.e = row.grad_k_fro + row.grad_w_fro;
  row.eta = eta_w;
  state.history.push_back(row);

  if (!std::isfinite(row.loss) || !std::isfinite(row.e))
    throw divergence_error("training diverged at iteration " +
                           std::to_string(state.t));
  tracker_update(state, row.e, opts.tracker);
}

TrainResult train(TrainerState state, const TrajectoryDataset& data,
                  const TrainOptions& opts) {
  if (opts.iterations < 0) throw usage_error("train: iterations must be >= 0");
  const auto start = std::chrono::steady_clock::now();
  for (int it = 0; it < opts.iterations; ++it) {
    if (state.history.back().e < opts.tol) break;
    step(state, data, opts);
  }
  TrainResult result;
  result.state = std::move(state);
  result.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  return result;
}

namespace {

RateBoundReport check_prefix_bound(const std::vector<HistoryRow>& history,
                                   double r,
                                   const std::function<double(int)>& denom) {
  if (history.size() < 2)
    throw usage_error("rate bound: history needs at least one step");
  RateBoundReport report;
  double running_min = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < history.size(); ++i) {
    const HistoryRow& row = history[i];
    const double g2 = row.grad_k_fro * row.grad_k_fro +
                      row.grad_w_mid_fro * row.grad_w_mid_fro;
    running_min = std::min(running_min, g2);
    const int prefix = static_cast<int>(i) + 1;
    const double den = denom(prefix);
    if (!(den > 0.0)) continue;  // vacuous prefix
    const double rhs = 2.0 * r / den;
    const double ratio = running_min / rhs;
    if (ratio > report.tightest_ratio) {
      report.tightest_ratio = ratio;
      report.tightest_prefix = prefix;
    }
    if (running_min > rhs) report.holds = false;
  }
  return report;
}

}  // namespace

RateBoundReport verify_rate_bound(const std::vector<HistoryRow>& history,
                                  double r, double s) {
  if (!(s > 0.0)) throw usage_error("verify_rate_bound: need S > 0");
  return check_prefix_bound(history, r,
                            [s](int prefix) { return s * prefix; });
}

RateBoundReport verify_diminishing_bound(const std::vector<HistoryRow>& history,
                                         double r, double l) {
  return check_prefix_bound(history, r, [l](int prefix) {
    const int t_max = prefix - 1;
    return std::log(t_max + 2.0) - l + l / (2.0 * (t_max + 1.0));
  });
}

}  // namespace koopman

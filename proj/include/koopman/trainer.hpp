#pragma once

#include <cstdint>
#include <optional>

#include "koopman/objective.hpp"

namespace koopman {

enum class ScheduleKind { Constant, Diminishing, Auto };
enum class TrackerMode { BestSoFar, Consecutive };
enum class KoopmanInit { Identity, Random };

struct Schedule {
  ScheduleKind kind = ScheduleKind::Auto;
  double eta_w = 0.0;  // Constant only; equal by default
  double eta_k = 0.0;
};

/// Per-iteration record. loss / grad norms / e are taken at iterate t;
/// grad_w_mid_fro is ||grad_W F(W^t, K^{t+1})||_F, filled by the step that
/// leaves iterate t (NaN on the last row).
struct HistoryRow {
  int t = 0;
  double loss = 0.0;
  double grad_k_fro = 0.0;
  double grad_w_fro = 0.0;
  double grad_w_mid_fro = 0.0;
  double e = 0.0;
  double eta = 0.0;
};

struct TrainerState {
  DictionaryParams params;
  KoopmanMatrix k;
  DictionaryParams best_params;
  KoopmanMatrix best_k;
  double e_best = 0.0;
  int t = 0;
  std::vector<HistoryRow> history;
};

struct TrainOptions {
  int iterations = 500;
  double tol = 1e-8;
  Schedule schedule;
  BoundConfig bounds;
  GradientMode gradient = GradientMode::Full;
  TrackerMode tracker = TrackerMode::BestSoFar;
};

struct TrainResult {
  TrainerState state;
  double wall_seconds = 0.0;
};

/// (eta_W, eta_K) for iteration t. Auto uses 1/max(l_w, l_k), strictly inside
/// the eta <= 2/L descent region.
std::pair<double, double> learning_rate(const Schedule& schedule, int t,
                                        double l_w, double l_k);

TrainerState make_trainer_state(DictionaryParams params, KoopmanMatrix k,
                                const TrajectoryDataset& data,
                                GradientMode mode);

KoopmanMatrix make_koopman(int lift_dim, KoopmanInit init, std::uint64_t seed);

/// One alternating step: K first at (W^t, K^t), then W at (W^t, K^{t+1}).
void step(TrainerState& state, const TrajectoryDataset& data,
          const TrainOptions& opts);

void tracker_update(TrainerState& state, double e_new, TrackerMode mode);

TrainResult train(TrainerState state, const TrajectoryDataset& data,
                  const TrainOptions& opts);

struct RateBoundReport {
  bool holds = true;
  double tightest_ratio = 0.0;  // max over prefixes of lhs / rhs
  int tightest_prefix = 0;
};

/// Checks min_{t < T} (||grad_K||^2 + ||grad_W mid||^2) <= 2R/(S T) for every
/// prefix T of a constant-rate history.
RateBoundReport verify_rate_bound(const std::vector<HistoryRow>& history,
                                  double r, double s);

/// Same check for the diminishing schedule, with denominator
/// ln(T+2) - L + L/(2(T+1)); prefixes with a non-positive denominator are
/// vacuous and skipped.
RateBoundReport verify_diminishing_bound(const std::vector<HistoryRow>& history,
                                         double r, double l);

}  // namespace koopman

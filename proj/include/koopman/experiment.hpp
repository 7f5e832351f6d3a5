#pragma once

#include "koopman/config.hpp"
#include "koopman/model_io.hpp"
#include "koopman/rollout.hpp"

namespace koopman {

/// Trajectory sampled per the config, split and mapped into training space
/// (normalization, optional constant-1 coordinate).
struct PreparedData {
  Trajectory trajectory;          // original units
  Normalizer norm;                // over the model's state space
  TrajectoryDataset train;        // training pairs, original units + append
  std::vector<Vector> predict_truth;  // original units, original dimension
  int original_dim = 0;
};

PreparedData prepare_data(const ExperimentConfig& cfg);

struct RunOutput {
  ModelFile model;       // final iterate
  ModelFile best_model;  // tracked best-E iterate
  std::vector<HistoryRow> history;           // central mode
  std::vector<DistHistoryRow> dist_history;  // distributed modes
  double wall_seconds = 0.0;
  double terminal_e = 0.0;
};

/// End-to-end training per the config; config_text only feeds the metadata
/// hash and may be empty.
RunOutput run_experiment(const ExperimentConfig& cfg,
                         const std::string& config_text = {});

/// K-invariant rollout of a persisted model against ground truth in original
/// units; truth.front() is the initial state.
PredictionRun predict_with_model(const ModelFile& model,
                                 const std::vector<Vector>& truth);

}  // namespace koopman

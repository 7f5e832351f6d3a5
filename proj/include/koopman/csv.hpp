#pragma once

#include <ostream>
#include <string>

#include "koopman/distributed.hpp"
#include "koopman/dynamics.hpp"
#include "koopman/rollout.hpp"
#include "koopman/trainer.hpp"

namespace koopman {

/// Shortest decimal text that round-trips the double exactly.
std::string format_double(double v);

void write_trajectory_csv(std::ostream& os, const Trajectory& traj);
Trajectory read_trajectory_csv(std::istream& is);

void write_history_csv(std::ostream& os, const std::vector<HistoryRow>& rows);
void write_dist_history_csv(std::ostream& os,
                            const std::vector<DistHistoryRow>& rows);
void write_prediction_csv(std::ostream& os, const PredictionRun& run);

}  // namespace koopman

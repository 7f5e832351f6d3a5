#include "koopman/csv.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <sstream>

#include "koopman/errors.hpp"

namespace koopman {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
  const int d =
      traj.states.empty() ? 0 : static_cast<int>(traj.states.front().size());
  os << "t";
  for (int i = 1; i <= d; ++i) os << ",x" << i;
  os << "\n";
  for (std::size_t row = 0; row < traj.states.size(); ++row) {
    os << format_double(traj.t0 + traj.dt * row);
    for (int i = 0; i < d; ++i)
      os << "," << format_double(traj.states[row][i]);
    os << "\n";
  }
}

Trajectory read_trajectory_csv(std::istream& is) {
  Trajectory traj;
  std::string line;
  if (!std::getline(is, line) || line.rfind("t", 0) != 0)
    throw usage_error("trajectory csv: missing header");
  std::vector<double> times;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> row;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    if (row.size() < 2) throw usage_error("trajectory csv: short row");
    times.push_back(row[0]);
    Vector x(row.size() - 1);
    for (std::size_t i = 1; i < row.size(); ++i) x[i - 1] = row[i];
    traj.states.push_back(std::move(x));
  }
  if (traj.states.empty()) throw usage_error("trajectory csv: no rows");
  traj.t0 = times.front();
  traj.dt = times.size() > 1 ? times[1] - times[0] : 0.0;
  return traj;
}

void write_history_csv(std::ostream& os, const std::vector<HistoryRow>& rows) {
  os << "t,loss,grad_k_fro,grad_w_fro,E,eta\n";
  for (const auto& r : rows)
    os << r.t << "," << format_double(r.loss) << ","
       << format_double(r.grad_k_fro) << "," << format_double(r.grad_w_fro)
       << "," << format_double(r.e) << "," << format_double(r.eta) << "\n";
}

void write_dist_history_csv(std::ostream& os,
                            const std::vector<DistHistoryRow>& rows) {
  os << "round,global_loss,grad_norm_sum,messages_sent,max_staleness_observed\n";
  for (const auto& r : rows)
    os << r.round << "," << format_double(r.global_loss) << ","
       << format_double(r.grad_norm_sum) << "," << r.messages_sent << ","
       << r.max_staleness_observed << "\n";
}

void write_prediction_csv(std::ostream& os, const PredictionRun& run) {
  const int d = static_cast<int>(run.truth.front().size());
  os << "step";
  for (int i = 1; i <= d; ++i) os << ",true_" << i;
  for (int i = 1; i <= d; ++i) os << ",pred_" << i;
  os << ",rel_err\n";
  for (std::size_t s = 0; s < run.predicted.size(); ++s) {
    os << s;
    for (int i = 0; i < d; ++i) os << "," << format_double(run.truth[s][i]);
    for (int i = 0; i < d; ++i) os << "," << format_double(run.predicted[s][i]);
    os << "," << format_double(run.per_step_rel_err[s]) << "\n";
  }
}

}  // namespace koopman

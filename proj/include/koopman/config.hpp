#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "koopman/distributed.hpp"
#include "koopman/dynamics.hpp"
#include "koopman/trainer.hpp"

namespace koopman {

enum class SystemKind { VanDerPol, Glycolysis };
enum class TrainMode { Central, DistSync, DistAsync };

/// Everything a run needs, parsed from a sectioned key-value config file.
/// Unknown sections or keys are rejected.
struct ExperimentConfig {
  // [system]
  SystemKind system = SystemKind::VanDerPol;
  VanDerPol vdp;
  Glycolysis glyco;
  Vector x0;      // defaults per system when empty
  double dt = 0.0;  // default per system when 0
  int steps = 600;

  // [dataset]
  int n_train = 400;
  int n_predict = 200;
  bool normalize = false;
  bool append_one = false;

  // [dictionary]
  std::vector<int> widths{3};
  ActivationKind activation = ActivationKind::Tanh;
  bool augment = true;

  // [training]
  TrainMode mode = TrainMode::Central;
  Schedule schedule{ScheduleKind::Auto, 0.0, 0.0};
  int iterations = 500;
  double tol = 1e-8;
  std::uint64_t seed = 0;
  GradientMode gradient = GradientMode::Full;
  TrackerMode tracker = TrackerMode::BestSoFar;
  KoopmanInit k_init = KoopmanInit::Identity;
  BoundConfig bounds;
  double rate_scale = 1.0;

  // [distributed]
  int q = 1;
  std::vector<int> block_sizes;   // d_i; balanced when empty
  std::vector<int> block_widths;  // per-block layer widths; = widths when empty
  int max_delay = 0;
  DelayDist delay_dist = DelayDist::Fixed;
  std::uint64_t bus_seed = 0;  // defaults to seed

  OdeSystem make_system() const;
  Vector default_x0() const;
  double effective_dt() const;
  const std::vector<int>& effective_block_widths() const;
};

ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config_file(const std::string& path);

}  // namespace koopman

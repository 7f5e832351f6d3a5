#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>

#include "koopman/csv.hpp"
#include "koopman/errors.hpp"
#include "koopman/experiment.hpp"

namespace fs = std::filesystem;
using namespace koopman;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw usage_error("cannot open config: " + path);
  std::stringstream buf;
  buf << is.rdbuf();
  return buf.str();
}

void write_file(const fs::path& path, const std::function<void(std::ostream&)>& fn) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw usage_error("cannot open for writing: " + path.string());
  fn(os);
}

struct CommonArgs {
  std::string config_path;
  std::string out_dir = ".";
  std::int64_t seed_override = -1;
};

ExperimentConfig load_cfg(const CommonArgs& args, std::string* text_out) {
  const std::string text = read_file(args.config_path);
  if (text_out) *text_out = text;
  ExperimentConfig cfg = parse_config(text);
  if (args.seed_override >= 0) {
    cfg.seed = static_cast<std::uint64_t>(args.seed_override);
    cfg.bus_seed = cfg.seed;
  }
  return cfg;
}

void print_prediction_summary(const PredictionRun& run) {
  std::cout << "steps: " << run.predicted.size() - 1 << "\n";
  if (run.per_step_rel_err.size() > 1)
    std::cout << "one_step_rel_err_pct: " << 100.0 * run.per_step_rel_err[1]
              << "\n";
  std::cout << "mean_rel_err_pct: " << 100.0 * run.mean_rel_err << "\n"
            << "max_rel_err_pct: " << 100.0 * run.max_rel_err << "\n"
            << "final_rel_err_pct: " << 100.0 * run.final_rel_err << "\n";
}

int cmd_simulate(const CommonArgs& args) {
  const ExperimentConfig cfg = load_cfg(args, nullptr);
  const Trajectory traj =
      simulate(cfg.make_system(), cfg.default_x0(), cfg.effective_dt(),
               cfg.steps);
  fs::create_directories(args.out_dir);
  write_file(fs::path(args.out_dir) / "trajectory.csv",
             [&](std::ostream& os) { write_trajectory_csv(os, traj); });
  std::cout << "wrote " << (fs::path(args.out_dir) / "trajectory.csv").string()
            << " (" << traj.states.size() << " rows)\n";
  return 0;
}

int run_training(const CommonArgs& args, bool distributed_cmd) {
  std::string text;
  ExperimentConfig cfg = load_cfg(args, &text);
  if (distributed_cmd && cfg.mode == TrainMode::Central)
    cfg.mode = TrainMode::DistSync;
  const RunOutput out = run_experiment(cfg, text);
  fs::create_directories(args.out_dir);
  const fs::path dir(args.out_dir);
  save_model_file((dir / "model.txt").string(), out.model);
  save_model_file((dir / "model_best.txt").string(), out.best_model);
  if (cfg.mode == TrainMode::Central)
    write_file(dir / "history.csv",
               [&](std::ostream& os) { write_history_csv(os, out.history); });
  else
    write_file(dir / "history.csv", [&](std::ostream& os) {
      write_dist_history_csv(os, out.dist_history);
    });
  std::cout << "terminal E: " << out.terminal_e << "\n"
            << "wall seconds: " << out.wall_seconds << "\n"
            << "wrote " << (dir / "model.txt").string() << ", "
            << (dir / "model_best.txt").string() << ", "
            << (dir / "history.csv").string() << "\n";
  return 0;
}

int cmd_predict(const std::string& model_path, const std::string& traj_path,
                const std::string& config_path, int steps, int start,
                const std::string& out_dir) {
  const ModelFile model = load_model_file(model_path);
  std::vector<Vector> truth;
  if (!config_path.empty()) {
    ExperimentConfig cfg = load_config_file(config_path);
    const PreparedData prep = prepare_data(cfg);
    truth = prep.predict_truth;
  } else {
    std::ifstream is(traj_path);
    if (!is) throw usage_error("cannot open trajectory: " + traj_path);
    const Trajectory traj = read_trajectory_csv(is);
    if (start < 0 || start >= static_cast<int>(traj.states.size()))
      throw usage_error("predict: start index out of range");
    const int last =
        std::min<int>(start + steps, static_cast<int>(traj.states.size()) - 1);
    truth.assign(traj.states.begin() + start, traj.states.begin() + last + 1);
  }
  if (steps >= 0 && steps + 1 < static_cast<int>(truth.size()))
    truth.resize(steps + 1);
  const PredictionRun run = predict_with_model(model, truth);
  fs::create_directories(out_dir);
  write_file(fs::path(out_dir) / "prediction.csv",
             [&](std::ostream& os) { write_prediction_csv(os, run); });
  print_prediction_summary(run);
  return 0;
}

int cmd_verify_rate(const CommonArgs& args) {
  std::string text;
  ExperimentConfig cfg = load_cfg(args, &text);
  if (cfg.mode != TrainMode::Central)
    throw usage_error("verify rate: needs a centralized config");
  const PreparedData prep = prepare_data(cfg);
  TrajectoryDataset data = prep.train;
  if (prep.norm.enabled)
    for (auto& [x, x_next] : data.pairs) {
      x = prep.norm.apply(x);
      x_next = prep.norm.apply(x_next);
    }
  DictionaryParams params = make_dictionary(data.d, cfg.widths, cfg.activation,
                                            cfg.augment, cfg.seed);
  if (params.layer_count() != 1)
    throw usage_error("verify rate: needs a single-layer dictionary");
  const ActivationBounds ab = activation_bounds(cfg.activation);
  const double l_k = lipschitz_K(params.lift_dim(), ab);
  const double l_w = lipschitz_W(data, ab, cfg.bounds.u_k);
  const double l = std::max(l_w, l_k);
  const double r = loss_upper_bound(params.lift_dim(), ab, cfg.bounds.u_k);
  KoopmanMatrix k = make_koopman(params.lift_dim(), cfg.k_init, cfg.seed + 1);
  TrainOptions opts;
  opts.iterations = cfg.iterations;
  opts.tol = 0.0;
  opts.schedule = cfg.schedule;
  opts.bounds = cfg.bounds;
  opts.gradient = cfg.gradient;
  const TrainResult result = train(
      make_trainer_state(std::move(params), std::move(k), data, cfg.gradient),
      data, opts);
  if (cfg.schedule.kind == ScheduleKind::Diminishing) {
    const RateBoundReport rep =
        verify_diminishing_bound(result.state.history, r, l);
    std::cout << "diminishing-rate bound: " << (rep.holds ? "holds" : "VIOLATED")
              << "\ntightest ratio: " << rep.tightest_ratio << " at prefix T="
              << rep.tightest_prefix << "\n";
    return rep.holds ? 0 : 1;
  }
  const double eta = learning_rate(opts.schedule, 0, l_w, l_k).first;
  const double s = eta - l * eta * eta / 2.0;
  const RateBoundReport rep = verify_rate_bound(result.state.history, r, s);
  std::cout << "L_W=" << l_w << " L_K=" << l_k << " R=" << r << " S=" << s
            << "\nprefix bound: " << (rep.holds ? "holds" : "VIOLATED")
            << "\ntightest ratio: " << rep.tightest_ratio << " at prefix T="
            << rep.tightest_prefix << "\n";
  return rep.holds ? 0 : 1;
}

int cmd_verify_equivalence(const CommonArgs& args, int rounds) {
  std::string text;
  ExperimentConfig cfg = load_cfg(args, &text);
  if (cfg.mode == TrainMode::Central) cfg.mode = TrainMode::DistSync;
  const PreparedData prep = prepare_data(cfg);
  TrajectoryDataset data = prep.train;
  if (prep.norm.enabled)
    for (auto& [x, x_next] : data.pairs) {
      x = prep.norm.apply(x);
      x_next = prep.norm.apply(x_next);
    }
  Partition part = partition_state(data.d, cfg.q, cfg.block_sizes);
  BlockDictionary bd;
  bd.partition = part;
  for (int i = 0; i < cfg.q; ++i)
    bd.node_params.push_back(make_dictionary(
        static_cast<int>(part.blocks[i].size()), cfg.effective_block_widths(),
        cfg.activation, cfg.augment, cfg.seed + 1000 * (i + 1)));
  KoopmanMatrix k = make_koopman(bd.lift_dim(), cfg.k_init, cfg.seed + 1);

  double eta_w, eta_k;
  if (cfg.schedule.kind == ScheduleKind::Constant) {
    eta_w = cfg.schedule.eta_w;
    eta_k = cfg.schedule.eta_k;
  } else {
    const ActivationBounds ab = activation_bounds(cfg.activation);
    eta_w = eta_k = cfg.rate_scale /
                    std::max(lipschitz_K(bd.lift_dim(), ab),
                             lipschitz_W(data, ab, cfg.bounds.u_k));
  }
  BlockDictionary ref_bd = bd;
  KoopmanMatrix ref_k = k;
  DistributedSim sim(bd, k, data, DelayModel{});
  double max_dev = 0.0;
  for (int t = 0; t < rounds; ++t) {
    sim.round(eta_w, eta_k);
    centralized_jacobi_step(ref_bd, ref_k, data, eta_w, eta_k);
    const auto [sim_bd, sim_k] = assemble_global(sim.nodes());
    double dev = (sim_k - ref_k).norm() / std::max(1.0, ref_k.norm());
    for (int i = 0; i < cfg.q; ++i)
      for (int l = 0; l < ref_bd.node_params[i].layer_count(); ++l)
        dev = std::max(dev, (sim_bd.node_params[i].layers[l] -
                             ref_bd.node_params[i].layers[l])
                                    .norm() /
                                std::max(1.0,
                                         ref_bd.node_params[i].layers[l].norm()));
    max_dev = std::max(max_dev, dev);
  }
  std::cout << "rounds: " << rounds
            << "\nmax parameter deviation vs centralized Jacobi: " << max_dev
            << "\n";
  return max_dev <= 1e-10 ? 0 : 1;
}

int cmd_verify_gradcheck(int samples, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  double worst = 0.0;
  const ActivationKind kinds[] = {ActivationKind::Tanh,
                                  ActivationKind::Logistic,
                                  ActivationKind::ArcTan};
  for (int s = 0; s < samples; ++s) {
    const int d = 1 + static_cast<int>(rng() % 4);
    const int m = 1 + static_cast<int>(rng() % 6);
    const int n = 1 + static_cast<int>(rng() % 10);
    DictionaryParams params =
        make_dictionary(d, {m}, kinds[s % 3], (s & 1) != 0, rng());
    KoopmanMatrix k = make_koopman(params.lift_dim(), KoopmanInit::Random,
                                   rng());
    TrajectoryDataset data;
    data.d = d;
    std::uniform_real_distribution<double> unif(-2.0, 2.0);
    for (int i = 0; i < n; ++i) {
      Vector a(d), b(d);
      for (int c = 0; c < d; ++c) {
        a[c] = unif(rng);
        b[c] = unif(rng);
      }
      data.pairs.emplace_back(a, b);
    }
    const auto gw = grad_W(params, k, data, GradientMode::Full);
    const double h = 1e-5;
    for (int l = 0; l < params.layer_count(); ++l)
      for (Eigen::Index r = 0; r < params.layers[l].rows(); ++r)
        for (Eigen::Index c = 0; c < params.layers[l].cols(); ++c) {
          DictionaryParams pp = params, pm = params;
          pp.layers[l](r, c) += h;
          pm.layers[l](r, c) -= h;
          const double fd = (loss(pp, k, data) - loss(pm, k, data)) / (2 * h);
          worst = std::max(worst, std::abs(gw[l](r, c) - fd) /
                                      std::max(1e-8, std::abs(fd)));
        }
  }
  std::cout << "sampled instances: " << samples
            << "\nmax finite-difference deviation: " << worst << "\n";
  return worst <= 1e-5 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Koopman operator learning: alternating and distributed"};
  app.require_subcommand(1);

  CommonArgs sim_args, train_args, dist_args, rate_args, eq_args;

  auto add_common = [](CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "experiment config file")
        ->required();
    cmd->add_option("--out", args.out_dir, "output directory");
    cmd->add_option("--seed", args.seed_override, "override the config seed");
  };

  auto* sim = app.add_subcommand("simulate", "sample a trajectory");
  add_common(sim, sim_args);

  auto* tr = app.add_subcommand("train", "centralized alternating training");
  add_common(tr, train_args);
  std::string tr_schedule;
  tr->add_option("--schedule", tr_schedule, "constant | diminishing | auto");

  auto* dt = app.add_subcommand("dist-train", "distributed training");
  add_common(dt, dist_args);
  std::string dt_mode;
  int dt_q = 0, dt_max_delay = -1;
  dt->add_option("--mode", dt_mode, "dist-sync | dist-async");
  dt->add_option("--q", dt_q, "number of nodes");
  dt->add_option("--max-delay", dt_max_delay, "bounded delay in rounds");

  auto* pr = app.add_subcommand("predict", "multi-step rollout of a model");
  std::string pr_model, pr_traj, pr_config, pr_out = ".";
  int pr_steps = -1, pr_start = 0;
  pr->add_option("--model", pr_model, "model file")->required();
  pr->add_option("--trajectory", pr_traj, "ground-truth trajectory csv");
  pr->add_option("--config", pr_config,
                 "config whose prediction segment supplies the truth");
  pr->add_option("--steps", pr_steps, "number of prediction steps");
  pr->add_option("--start", pr_start, "start row in the trajectory");
  pr->add_option("--out", pr_out, "output directory");

  auto* ve = app.add_subcommand("verify", "diagnostics");
  ve->require_subcommand(1);
  auto* ve_rate = ve->add_subcommand("rate", "convergence-rate bound report");
  add_common(ve_rate, rate_args);
  auto* ve_eq =
      ve->add_subcommand("equivalence", "sync-distributed vs centralized");
  add_common(ve_eq, eq_args);
  int eq_rounds = 50;
  ve_eq->add_option("--rounds", eq_rounds, "rounds to compare");
  auto* ve_gc = ve->add_subcommand("gradcheck", "finite-difference gradients");
  int gc_samples = 20;
  std::uint64_t gc_seed = 7;
  ve_gc->add_option("--samples", gc_samples, "instances to sample");
  ve_gc->add_option("--seed", gc_seed, "rng seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed()) return cmd_simulate(sim_args);
    if (tr->parsed()) {
      if (!tr_schedule.empty()) {
        // textual override folded into the config before the run
        std::string text = read_file(train_args.config_path);
        text += "\n[training]\nschedule = " + tr_schedule + "\n";
        ExperimentConfig cfg = parse_config(text);
        if (train_args.seed_override >= 0) {
          cfg.seed = static_cast<std::uint64_t>(train_args.seed_override);
          cfg.bus_seed = cfg.seed;
        }
        const RunOutput out = run_experiment(cfg, text);
        fs::create_directories(train_args.out_dir);
        const fs::path dir(train_args.out_dir);
        save_model_file((dir / "model.txt").string(), out.model);
        save_model_file((dir / "model_best.txt").string(), out.best_model);
        write_file(dir / "history.csv", [&](std::ostream& os) {
          write_history_csv(os, out.history);
        });
        std::cout << "terminal E: " << out.terminal_e << "\n";
        return 0;
      }
      return run_training(train_args, false);
    }
    if (dt->parsed()) {
      std::string text = read_file(dist_args.config_path);
      std::string extra = "\n[distributed]\n";
      if (!dt_mode.empty())
        extra += "mode = " +
                 std::string(dt_mode == "dist-async" ? "async" : "sync") + "\n";
      if (dt_q > 0) extra += "q = " + std::to_string(dt_q) + "\n";
      if (dt_max_delay >= 0)
        extra += "max_delay = " + std::to_string(dt_max_delay) + "\n";
      text += extra;
      ExperimentConfig cfg = parse_config(text);
      if (cfg.mode == TrainMode::Central) cfg.mode = TrainMode::DistSync;
      if (dist_args.seed_override >= 0) {
        cfg.seed = static_cast<std::uint64_t>(dist_args.seed_override);
        cfg.bus_seed = cfg.seed;
      }
      const RunOutput out = run_experiment(cfg, text);
      fs::create_directories(dist_args.out_dir);
      const fs::path dir(dist_args.out_dir);
      save_model_file((dir / "model.txt").string(), out.model);
      save_model_file((dir / "model_best.txt").string(), out.best_model);
      write_file(dir / "history.csv", [&](std::ostream& os) {
        write_dist_history_csv(os, out.dist_history);
      });
      std::cout << "terminal E: " << out.terminal_e << "\n";
      return 0;
    }
    if (pr->parsed()) {
      if (pr_traj.empty() == pr_config.empty())
        throw usage_error("predict: give exactly one of --trajectory, --config");
      return cmd_predict(pr_model, pr_traj, pr_config, pr_steps, pr_start,
                         pr_out);
    }
    if (ve_rate->parsed()) return cmd_verify_rate(rate_args);
    if (ve_eq->parsed()) return cmd_verify_equivalence(eq_args, eq_rounds);
    if (ve_gc->parsed()) return cmd_verify_gradcheck(gc_samples, gc_seed);
  } catch (const protocol_error& e) {
    std::cerr << "protocol error: " << e.what() << "\n";
    return 4;
  } catch (const divergence_error& e) {
    std::cerr << "divergence: " << e.what() << "\n";
    return 3;
  } catch (const usage_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

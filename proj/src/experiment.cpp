#include "koopman/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "koopman/errors.hpp"

namespace koopman {

namespace {

std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  std::ostringstream os;
  os << std::hex << h;
  return os.str();
}

Vector append_const_one(const Vector& x) {
  Vector out(x.size() + 1);
  out.head(x.size()) = x;
  out[x.size()] = 1.0;
  return out;
}

}  // namespace

PreparedData prepare_data(const ExperimentConfig& cfg) {
  PreparedData prep;
  const OdeSystem sys = cfg.make_system();
  prep.trajectory =
      simulate(sys, cfg.default_x0(), cfg.effective_dt(), cfg.steps);
  prep.original_dim = sys.d;

  DatasetSplit split = make_dataset(prep.trajectory, cfg.n_train, cfg.n_predict);
  prep.predict_truth = std::move(split.predict_truth);

  if (cfg.normalize) {
    std::vector<Vector> train_states;
    for (const auto& [x, x_next] : split.train.pairs) train_states.push_back(x);
    train_states.push_back(split.train.pairs.back().second);
    prep.norm = fit_normalizer(train_states);
  }
  if (cfg.append_one) {
    // the constant coordinate rides along untouched by normalization
    if (prep.norm.enabled) {
      prep.norm.offset = append_const_one(prep.norm.offset);
      prep.norm.offset[prep.original_dim] = 0.0;
      prep.norm.scale = append_const_one(prep.norm.scale);
    }
    for (auto& [x, x_next] : split.train.pairs) {
      x = append_const_one(x);
      x_next = append_const_one(x_next);
    }
    ++split.train.d;
  }
  prep.train = std::move(split.train);
  return prep;
}

RunOutput run_experiment(const ExperimentConfig& cfg,
                         const std::string& config_text) {
  const PreparedData prep = prepare_data(cfg);
  const int d_model = prep.train.d;

  // training happens in normalized coordinates
  TrajectoryDataset data = prep.train;
  if (prep.norm.enabled)
    for (auto& [x, x_next] : data.pairs) {
      x = prep.norm.apply(x);
      x_next = prep.norm.apply(x_next);
    }

  RunOutput out;
  if (cfg.mode == TrainMode::Central) {
    DictionaryParams params = make_dictionary(d_model, cfg.widths,
                                              cfg.activation, cfg.augment,
                                              cfg.seed);
    KoopmanMatrix k = make_koopman(params.lift_dim(), cfg.k_init, cfg.seed + 1);
    TrainOptions opts;
    opts.iterations = cfg.iterations;
    opts.tol = cfg.tol;
    opts.schedule = cfg.schedule;
    opts.bounds = cfg.bounds;
    opts.gradient = cfg.gradient;
    opts.tracker = cfg.tracker;
    if (opts.schedule.kind == ScheduleKind::Auto && cfg.rate_scale != 1.0) {
      // fold the scale into an explicit constant rate
      const ActivationBounds ab = activation_bounds(cfg.activation);
      const double l = std::max(lipschitz_K(params.lift_dim(), ab),
                                lipschitz_W(data, ab, cfg.bounds.u_k));
      opts.schedule.kind = ScheduleKind::Constant;
      opts.schedule.eta_w = opts.schedule.eta_k = cfg.rate_scale / l;
    }
    TrainResult result =
        train(make_trainer_state(std::move(params), std::move(k), data,
                                 cfg.gradient),
              data, opts);
    out.history = result.state.history;
    out.wall_seconds = result.wall_seconds;
    out.terminal_e = result.state.history.back().e;
    Partition part;
    part.blocks.push_back(std::vector<int>(d_model));
    std::iota(part.blocks[0].begin(), part.blocks[0].end(), 0);
    out.model.dictionary.partition = part;
    out.model.dictionary.node_params.push_back(result.state.params);
    out.model.k = result.state.k;
    out.best_model.dictionary.partition = part;
    out.best_model.dictionary.node_params.push_back(result.state.best_params);
    out.best_model.k = result.state.best_k;
  } else {
    Partition part = partition_state(d_model, cfg.q, cfg.block_sizes);
    BlockDictionary bd;
    bd.partition = part;
    for (int i = 0; i < cfg.q; ++i)
      bd.node_params.push_back(make_dictionary(
          static_cast<int>(part.blocks[i].size()), cfg.effective_block_widths(),
          cfg.activation, cfg.augment, cfg.seed + 1000 * (i + 1)));
    KoopmanMatrix k = make_koopman(bd.lift_dim(), cfg.k_init, cfg.seed + 1);
    DistConfig dc;
    dc.rounds = cfg.iterations;
    dc.tol = cfg.tol;
    dc.schedule = cfg.schedule;
    dc.rate_scale = cfg.rate_scale;
    dc.bounds = cfg.bounds;
    dc.delay.max_delay = cfg.mode == TrainMode::DistAsync ? cfg.max_delay : 0;
    dc.delay.dist = cfg.delay_dist;
    dc.delay.seed = cfg.bus_seed;
    DistTrainResult result =
        run_distributed(std::move(bd), std::move(k), data, dc);
    out.dist_history = result.history;
    out.wall_seconds = result.wall_seconds;
    out.terminal_e = result.history.empty() ? 0.0
                                            : result.history.back().grad_norm_sum;
    out.model.dictionary = result.dictionary;
    out.model.k = result.k;
    out.best_model.dictionary = result.best_dictionary;
    out.best_model.k = result.best_k;
  }

  for (ModelFile* m : {&out.model, &out.best_model}) {
    m->norm = prep.norm;
    m->append_one = cfg.append_one;
    m->metadata.emplace_back("config_hash", fnv1a_hex(config_text));
    m->metadata.emplace_back("iterations", std::to_string(cfg.iterations));
    m->metadata.emplace_back("terminal_e", std::to_string(out.terminal_e));
    m->metadata.emplace_back("wall_seconds",
                             std::to_string(out.wall_seconds));
  }
  return out;
}

PredictionRun predict_with_model(const ModelFile& model,
                                 const std::vector<Vector>& truth) {
  if (truth.empty()) throw usage_error("predict: empty truth segment");
  const int d = model.original_dim();
  if (truth.front().size() != d)
    throw usage_error("predict: state dimension does not match the model");
  Vector x0 = truth.front();
  if (model.append_one) {
    Vector ext(d + 1);
    ext.head(d) = x0;
    ext[d] = 1.0;
    x0 = ext;
  }
  const int n = static_cast<int>(truth.size()) - 1;
  std::vector<Vector> pred_ext =
      multi_step_predict(model.dictionary, model.k, x0, n, model.norm);
  std::vector<Vector> pred;
  for (const auto& p : pred_ext) pred.push_back(p.head(d));
  return relative_error(pred, truth);
}

}  // namespace koopman

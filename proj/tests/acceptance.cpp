// Acceptance gate: one line of output per criterion, non-zero exit when any
// criterion fails. Pass the recipes directory as the first argument and
// --full to run the long glycolysis variant.

#include <cmath>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "koopman/csv.hpp"
#include "koopman/experiment.hpp"
#include "support/oracles.hpp"

using namespace koopman;

namespace {

std::string g_recipes = "recipes";
bool g_full = false;

double rel_param_dist(const BlockDictionary& a, const KoopmanMatrix& ka,
                      const BlockDictionary& b, const KoopmanMatrix& kb) {
  double num = (ka - kb).squaredNorm();
  double den = kb.squaredNorm();
  for (int i = 0; i < a.q(); ++i)
    for (std::size_t l = 0; l < a.node_params[i].layers.size(); ++l) {
      num += (a.node_params[i].layers[l] - b.node_params[i].layers[l])
                 .squaredNorm();
      den += b.node_params[i].layers[l].squaredNorm();
    }
  return std::sqrt(num) / std::max(1e-8, std::sqrt(den));
}

BlockDictionary random_block_dictionary(int d, int q, int width, bool augment,
                                        std::uint64_t seed) {
  BlockDictionary bd;
  bd.partition = partition_state(d, q);
  for (int i = 0; i < q; ++i)
    bd.node_params.push_back(make_dictionary(
        static_cast<int>(bd.partition.blocks[i].size()), {width},
        ActivationKind::Tanh, augment, seed + 17 * (i + 1)));
  return bd;
}

// ---------------------------------------------------------------------------

bool criterion_gradients(std::string& detail) {
  std::mt19937_64 rng(101);
  const ActivationKind kinds[] = {ActivationKind::Tanh,
                                  ActivationKind::Logistic,
                                  ActivationKind::ArcTan};
  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const int d = 1 + static_cast<int>(rng() % 4);
    const int n_layers = 1 + trial % 3;
    std::vector<int> widths;
    for (int l = 0; l < n_layers; ++l)
      widths.push_back(1 + static_cast<int>(rng() % 8));
    DictionaryParams p = make_dictionary(d, widths, kinds[trial % 3],
                                         (trial % 2) == 0, rng());
    const int m = p.lift_dim();
    const KoopmanMatrix k = oracles::random_matrix(m, m, rng);
    const auto data =
        oracles::random_dataset(d, 1 + static_cast<int>(rng() % 20), rng);

    worst = std::max(worst, oracles::rel_err_mat(grad_K(p, k, data),
                                                 oracles::fd_grad_K(p, k, data)));
    const auto gw = grad_W(p, k, data, GradientMode::Full);
    const auto gw_fd = oracles::fd_grad_W(p, k, data);
    for (int l = 0; l < p.layer_count(); ++l)
      worst = std::max(worst, oracles::rel_err_mat(gw[l], gw_fd[l]));
    if (worst > 1e-6) break;
  }
  detail = "max relative deviation " + format_double(worst);
  return worst <= 1e-6;
}

bool criterion_lipschitz(std::string& detail) {
  std::mt19937_64 rng(202);
  const int d = 3, m = 4;
  const auto data = oracles::random_dataset(d, 15, rng, 1.0);
  const BoundConfig bounds;
  const auto ab = activation_bounds(ActivationKind::Tanh);
  const double l_k = lipschitz_K(m, ab);
  const double l_w = lipschitz_W(data, ab, bounds.u_k);
  double worst_k = 0.0, worst_w = 0.0;
  for (int i = 0; i < 100; ++i) {
    DictionaryParams p = make_dictionary(d, {m}, ActivationKind::Tanh, false,
                                         300 + i);
    Matrix k1 = oracles::random_matrix(m, m, rng);
    Matrix k2 = oracles::random_matrix(m, m, rng);
    for (Matrix* k : {&k1, &k2})
      if (k->norm() > bounds.u_k) *k *= bounds.u_k / k->norm();
    const double dk = (grad_K(p, k1, data) - grad_K(p, k2, data)).norm();
    worst_k = std::max(worst_k, dk / std::max(1e-300, l_k * (k1 - k2).norm()));

    Matrix k = k1;
    DictionaryParams p2 = p;
    p2.layers[0] = oracles::random_matrix(m, d, rng);
    for (DictionaryParams* pp : {&p, &p2})
      if (pp->layers[0].norm() > bounds.u_w)
        pp->layers[0] *= bounds.u_w / pp->layers[0].norm();
    // Lemma 1 states the W-gradient in its truncated form
    const double dw = (grad_W(p, k, data, GradientMode::Lemma1)[0] -
                       grad_W(p2, k, data, GradientMode::Lemma1)[0])
                          .norm();
    worst_w = std::max(
        worst_w, dw / std::max(1e-300, l_w * (p.layers[0] - p2.layers[0]).norm()));
  }
  detail = "worst ratio grad_K " + format_double(worst_k) + ", grad_W " +
           format_double(worst_w);
  return worst_k <= 1.0 + 1e-9 && worst_w <= 1.0 + 1e-9;
}

bool criterion_descent_rate(std::string& detail) {
  double tightest = 0.0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    std::mt19937_64 rng(seed);
    const int d = 2, m = 3;
    DictionaryParams p =
        make_dictionary(d, {m}, ActivationKind::Tanh, false, seed);
    const auto data = oracles::random_dataset(d, 10, rng, 1.0);
    const BoundConfig bounds;
    const auto ab = activation_bounds(p.activation);
    const double l =
        std::max(lipschitz_K(m, ab), lipschitz_W(data, ab, bounds.u_k));
    const double eta = 1.0 / l;
    auto state = make_trainer_state(
        p, make_koopman(m, KoopmanInit::Identity, seed), data,
        GradientMode::Full);
    TrainOptions opts;
    opts.iterations = 1000;
    opts.tol = 0.0;
    opts.schedule = {ScheduleKind::Constant, eta, eta};
    const auto result = train(state, data, opts);
    const auto& h = result.state.history;
    for (std::size_t i = 1; i < h.size(); ++i)
      if (h[i].loss > h[i - 1].loss + 1e-12) {
        detail = "loss increased at seed " + std::to_string(seed);
        return false;
      }
    const double r = loss_upper_bound(m, ab, bounds.u_k);
    const double s = eta - l * eta * eta / 2.0;
    const auto report = verify_rate_bound(result.state.history, r, s);
    if (!report.holds) {
      detail = "constant-rate bound violated at seed " + std::to_string(seed);
      return false;
    }
    tightest = std::max(tightest, report.tightest_ratio);
  }

  // diminishing schedule on an instance with L near 1
  std::mt19937_64 rng(7);
  const auto data = oracles::random_dataset(1, 8, rng, 0.3);
  DictionaryParams p = make_dictionary(1, {1}, ActivationKind::Tanh, false, 7);
  BoundConfig bounds;
  bounds.u_k = bounds.u_w = 1.0;
  bounds.project = true;
  const auto ab = activation_bounds(p.activation);
  const double l =
      std::max(lipschitz_K(1, ab), lipschitz_W(data, ab, bounds.u_k));
  auto state = make_trainer_state(p, make_koopman(1, KoopmanInit::Identity, 0),
                                  data, GradientMode::Full);
  TrainOptions opts;
  opts.iterations = 500;
  opts.tol = 0.0;
  opts.schedule = {ScheduleKind::Diminishing, 0, 0};
  opts.bounds = bounds;
  const auto result = train(state, data, opts);
  const auto report = verify_diminishing_bound(
      result.state.history, loss_upper_bound(1, ab, bounds.u_k), l);
  detail = "tightest constant-rate ratio " + format_double(tightest);
  if (!report.holds) detail = "diminishing bound violated";
  return report.holds;
}

bool criterion_equivalence(std::string& detail) {
  std::mt19937_64 rng(404);
  double worst = 0.0;
  // random instances
  for (int q : {2, 3, 7}) {
    const int d = q == 7 ? 7 : 6;
    auto bd = random_block_dictionary(d, q, 3, q % 2 == 0, 500 + q);
    const int m = bd.lift_dim();
    const Matrix k0 = 0.3 * oracles::random_matrix(m, m, rng);
    const auto data = oracles::random_dataset(d, 30, rng, 1.0);
    DistributedSim sim(bd, k0, data, DelayModel{});
    BlockDictionary ref_bd = bd;
    Matrix ref_k = k0;
    for (int t = 0; t < 100; ++t) {
      sim.round(0.05, 0.05);
      centralized_jacobi_step(ref_bd, ref_k, data, 0.05, 0.05);
      const auto [sbd, sk] = assemble_global(sim.nodes());
      worst = std::max(worst, rel_param_dist(sbd, sk, ref_bd, ref_k));
    }
  }

  // the glycolysis configuration
  ExperimentConfig cfg;
  cfg.system = SystemKind::Glycolysis;
  cfg.steps = 1000;
  cfg.n_train = 600;
  cfg.n_predict = 400;
  cfg.normalize = true;
  const PreparedData prep = prepare_data(cfg);
  TrajectoryDataset data = prep.train;
  for (auto& [x, x_next] : data.pairs) {
    x = prep.norm.apply(x);
    x_next = prep.norm.apply(x_next);
  }
  BlockDictionary bd;
  bd.partition = partition_state(7, 7);
  for (int i = 0; i < 7; ++i)
    bd.node_params.push_back(
        make_dictionary(1, {15}, ActivationKind::Tanh, true, 600 + i));
  const int m = bd.lift_dim();
  const Matrix k0 = Matrix::Identity(m, m);
  DistributedSim sim(bd, k0, data, DelayModel{});
  BlockDictionary ref_bd = bd;
  Matrix ref_k = k0;
  for (int t = 0; t < 100; ++t) {
    sim.round(0.1, 0.1);
    centralized_jacobi_step(ref_bd, ref_k, data, 0.1, 0.1);
    const auto [sbd, sk] = assemble_global(sim.nodes());
    worst = std::max(worst, rel_param_dist(sbd, sk, ref_bd, ref_k));
  }
  detail = "max relative deviation " + format_double(worst);
  return worst <= 1e-10;
}

bool criterion_async(std::string& detail) {
  // tau = 0 degeneration
  {
    std::mt19937_64 rng(505);
    auto bd = random_block_dictionary(4, 2, 2, false, 506);
    const int m = bd.lift_dim();
    const Matrix k0 = 0.2 * oracles::random_matrix(m, m, rng);
    const auto data = oracles::random_dataset(4, 10, rng, 1.0);
    DistributedSim sync(bd, k0, data, DelayModel{0, DelayDist::Fixed, 0});
    DistributedSim async0(bd, k0, data, DelayModel{0, DelayDist::Uniform, 3});
    for (int t = 0; t < 25; ++t) {
      const auto a = sync.round(0.05, 0.05);
      const auto b = async0.round(0.05, 0.05);
      if (a.global_loss != b.global_loss ||
          a.grad_norm_sum != b.grad_norm_sum) {
        detail = "tau=0 histories diverge at round " + std::to_string(t);
        return false;
      }
    }
    const auto [abd, ak] = assemble_global(sync.nodes());
    const auto [bbd, bk] = assemble_global(async0.nodes());
    if (ak != bk) {
      detail = "tau=0 terminal K differs";
      return false;
    }
  }

  // bounded staleness convergence on 10 seeded instances
  double worst_e = 0.0, worst_dist = 0.0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    std::mt19937_64 rng(700 + seed);
    auto bd = random_block_dictionary(4, 2, 2, false, 710 + seed);
    const int m = bd.lift_dim();
    const Matrix k0 = 0.2 * oracles::random_matrix(m, m, rng);
    const auto data = oracles::random_dataset(4, 8, rng, 0.5);

    DistConfig cfg;
    cfg.rounds = 60000;
    cfg.tol = 5e-4;
    cfg.schedule = {ScheduleKind::Auto, 0, 0};
    cfg.rate_scale = 0.25;
    const auto sync = run_distributed(bd, k0, data, cfg);

    DistConfig acfg = cfg;
    acfg.delay = DelayModel{5, DelayDist::Uniform, 11 + seed};
    const auto async = run_distributed(bd, k0, data, acfg);
    for (const auto& row : async.history)
      if (row.max_staleness_observed > 5) {
        detail = "staleness bound violated";
        return false;
      }
    worst_e = std::max(worst_e, async.history.back().grad_norm_sum);
    worst_dist = std::max(
        worst_dist,
        rel_param_dist(async.dictionary, async.k, sync.dictionary, sync.k));
  }
  detail = "worst terminal E " + format_double(worst_e) +
           ", worst parameter distance " + format_double(worst_dist);
  return worst_e < 1e-3 && worst_dist <= 1e-2;
}

double one_step_error(const ModelFile& model, const std::vector<Vector>& truth) {
  double sum = 0.0;
  int n = 0;
  for (std::size_t k = 0; k + 1 < truth.size(); ++k) {
    const auto run = predict_with_model(model, {truth[k], truth[k + 1]});
    sum += run.per_step_rel_err[1];
    ++n;
  }
  return sum / n;
}

double mean_skip_first(const std::vector<double>& errs) {
  double sum = 0.0;
  for (std::size_t i = 1; i < errs.size(); ++i) sum += errs[i];
  return sum / (errs.size() - 1);
}

bool criterion_vdp(std::string& detail) {
  const ExperimentConfig cfg = load_config_file(g_recipes + "/vdp.cfg");
  const PreparedData prep = prepare_data(cfg);
  const RunOutput out = run_experiment(cfg);
  const double e1 = one_step_error(out.model, prep.predict_truth);
  const auto run = predict_with_model(out.model, prep.predict_truth);
  const double e200 = mean_skip_first(run.per_step_rel_err);
  detail = "one-step " + format_double(100 * e1) + "%, 200-step " +
           format_double(100 * e200) + "%";
  return e1 <= 0.01 && e200 <= 0.05;
}

bool criterion_glyco(std::string& detail) {
  ExperimentConfig cfg = load_config_file(g_recipes + "/glyco.cfg");
  if (!g_full) cfg.iterations = 2000;
  const PreparedData prep = prepare_data(cfg);
  const RunOutput out = run_experiment(cfg);
  const double e1 = one_step_error(out.model, prep.predict_truth);
  if (!g_full) {
    detail = "reduced 2000-round variant, one-step " +
             format_double(100 * e1) + "%";
    return e1 <= 0.02;
  }
  const auto run = predict_with_model(out.model, prep.predict_truth);
  const double e400 = mean_skip_first(run.per_step_rel_err);
  detail = "one-step " + format_double(100 * e1) + "%, 400-step " +
           format_double(100 * e400) + "%";
  return e1 <= 0.01 && e400 <= 0.10;
}

bool criterion_protocol(std::string& detail) {
  std::mt19937_64 rng(808);
  for (int q : {2, 3, 7}) {
    const int d = 7, n = 12;
    auto bd = random_block_dictionary(d, q, 2, false, 810 + q);
    const int m = bd.lift_dim();
    const auto data = oracles::random_dataset(d, n, rng, 1.0);
    DistributedSim sync(bd, 0.2 * oracles::random_matrix(m, m, rng), data,
                        DelayModel{});
    for (int t = 0; t < 5; ++t) {
      const auto stats = sync.round(0.02, 0.02);
      const long expect = static_cast<long>(n) * q +
                          static_cast<long>(n) * q * (q - 1);
      if (stats.messages_sent != expect) {
        detail = "q=" + std::to_string(q) + " round sent " +
                 std::to_string(stats.messages_sent) + ", expected " +
                 std::to_string(expect);
        return false;
      }
    }
    DistributedSim async(bd, 0.2 * oracles::random_matrix(m, m, rng), data,
                         DelayModel{3, DelayDist::Uniform, 5});
    for (int t = 0; t < 40; ++t) {
      const auto stats = async.round(0.02, 0.02);
      if (stats.max_staleness_observed > 3) {
        detail = "staleness exceeded the delay bound";
        return false;
      }
    }
  }
  detail = "N*q lift + N*q*(q-1) back-prop messages on every sync round";
  return true;
}

bool criterion_determinism(std::string& detail) {
  auto strip_metadata = [](const std::string& text) {
    const auto pos = text.find("[metadata]");
    return pos == std::string::npos ? text : text.substr(0, pos);
  };
  for (const std::string name : {"vdp.cfg", "glyco.cfg"}) {
    ExperimentConfig cfg = load_config_file(g_recipes + "/" + name);
    if (name == "glyco.cfg") cfg.iterations = 200;  // keep the double run cheap
    auto render = [&] {
      const RunOutput out = run_experiment(cfg);
      std::stringstream model, history;
      save_model(model, out.model);
      if (cfg.mode == TrainMode::Central)
        write_history_csv(history, out.history);
      else
        write_dist_history_csv(history, out.dist_history);
      return strip_metadata(model.str()) + "\n---\n" + history.str();
    };
    if (render() != render()) {
      detail = name + " is not reproducible";
      return false;
    }
  }
  detail = "both recipes byte-identical across repeated runs";
  return true;
}

}  // namespace

int main(int argc, char** argv) {
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--full")
      g_full = true;
    else
      g_recipes = arg;
  }

  struct Criterion {
    const char* name;
    std::function<bool(std::string&)> run;
  };
  const std::vector<Criterion> criteria = {
      {"gradient correctness", criterion_gradients},
      {"Lipschitz bounds", criterion_lipschitz},
      {"monotone descent and rate bounds", criterion_descent_rate},
      {"distributed equivalence", criterion_equivalence},
      {"async degeneration and convergence", criterion_async},
      {"Van der Pol reproduction", criterion_vdp},
      {"glycolysis distributed reproduction", criterion_glyco},
      {"protocol accounting", criterion_protocol},
      {"determinism", criterion_determinism},
  };

  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    std::string detail;
    bool ok = false;
    try {
      ok = criteria[i].run(detail);
    } catch (const std::exception& e) {
      detail = std::string("exception: ") + e.what();
    }
    std::cout << (ok ? "PASS" : "FAIL") << " criterion " << (i + 1) << " ("
              << criteria[i].name << ")" << (detail.empty() ? "" : ": ")
              << detail << "\n";
    if (!ok) ++failures;
  }
  return failures == 0 ? 0 : 1;
}

#include "koopman/distributed.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>

#include "koopman/errors.hpp"

namespace koopman {

int Partition::state_dim() const {
  int d = 0;
  for (const auto& b : blocks) d += static_cast<int>(b.size());
  return d;
}

void Partition::validate(int d) const {
  if (blocks.empty()) throw usage_error("partition: no blocks");
  std::vector<bool> seen(d, false);
  int prev = -1;
  for (const auto& b : blocks) {
    if (b.empty()) throw usage_error("partition: empty block");
    for (int idx : b) {
      if (idx < 0 || idx >= d || seen[idx])
        throw usage_error("partition: blocks must disjointly cover 0..d-1");
      if (idx <= prev)
        throw usage_error("partition: blocks must be order-preserving");
      prev = idx;
      seen[idx] = true;
    }
  }
  if (state_dim() != d) throw usage_error("partition: blocks do not cover d");
}

Partition partition_state(int d, int q, const std::vector<int>& sizes) {
  if (q < 1 || q > d)
    throw usage_error("partition_state: need 1 <= q <= d");
  std::vector<int> block_sizes = sizes;
  if (block_sizes.empty()) {
    block_sizes.assign(q, d / q);
    for (int i = 0; i < d % q; ++i) ++block_sizes[i];  // remainder to the front
  }
  if (static_cast<int>(block_sizes.size()) != q ||
      std::accumulate(block_sizes.begin(), block_sizes.end(), 0) != d)
    throw usage_error("partition_state: block sizes must sum to d");
  Partition p;
  int next = 0;
  for (int s : block_sizes) {
    if (s < 1) throw usage_error("partition_state: block sizes must be >= 1");
    std::vector<int> block(s);
    std::iota(block.begin(), block.end(), next);
    next += s;
    p.blocks.push_back(std::move(block));
  }
  return p;
}

Vector extract_block(const Vector& x, const std::vector<int>& block) {
  Vector out(block.size());
  for (std::size_t i = 0; i < block.size(); ++i) out[i] = x[block[i]];
  return out;
}

int BlockDictionary::lift_dim() const {
  int m = 0;
  for (const auto& p : node_params) m += p.lift_dim();
  return m;
}

int BlockDictionary::lift_offset(int node) const {
  int off = 0;
  for (int i = 0; i < node; ++i) off += node_params[i].lift_dim();
  return off;
}

void BlockDictionary::validate() const {
  if (partition.q() != static_cast<int>(node_params.size()))
    throw shape_error("block dictionary: one dictionary per block required");
  for (int i = 0; i < q(); ++i)
    if (node_params[i].state_dim() !=
        static_cast<int>(partition.blocks[i].size()))
      throw shape_error("block dictionary: node " + std::to_string(i) +
                        " dictionary does not match its block size");
}

Vector block_lift(const BlockDictionary& bd, const Vector& x) {
  bd.validate();
  Vector z(bd.lift_dim());
  int off = 0;
  for (int i = 0; i < bd.q(); ++i) {
    const Vector zi =
        lift(bd.node_params[i], extract_block(x, bd.partition.blocks[i]));
    z.segment(off, zi.size()) = zi;
    off += static_cast<int>(zi.size());
  }
  return z;
}

Vector block_decode(const BlockDictionary& bd, const Vector& z,
                    const Normalizer& norm) {
  const int d = bd.partition.state_dim();
  Vector x(d);
  int off = 0;
  for (int i = 0; i < bd.q(); ++i) {
    const auto& block = bd.partition.blocks[i];
    if (!bd.node_params[i].augment_state)
      throw usage_error("block_decode: node dictionaries must be augmented");
    for (std::size_t c = 0; c < block.size(); ++c) x[block[c]] = z[off + c];
    off += bd.node_params[i].lift_dim();
  }
  return norm.invert(x);
}

double block_loss(const BlockDictionary& bd, const KoopmanMatrix& k,
                  const TrajectoryDataset& data) {
  data.validate();
  if (k.rows() != bd.lift_dim() || k.cols() != bd.lift_dim())
    throw shape_error("block_loss: K does not match the assembled lift");
  double sum = 0.0;
  for (const auto& [x, x_next] : data.pairs)
    sum += 0.5 * (block_lift(bd, x_next) - k * block_lift(bd, x)).squaredNorm();
  return sum / data.size();
}

std::vector<Vector> multi_step_predict(const BlockDictionary& bd,
                                       const KoopmanMatrix& k, const Vector& x0,
                                       int n, const Normalizer& norm) {
  std::vector<Vector> out;
  out.reserve(n + 1);
  out.push_back(x0);
  Vector z = block_lift(bd, norm.apply(x0));
  for (int step = 1; step <= n; ++step) {
    z = k * z;
    if (!z.allFinite())
      throw divergence_error("multi_step_predict: diverged at step " +
                             std::to_string(step));
    out.push_back(block_decode(bd, z, norm));
  }
  return out;
}

BlockGradients block_gradients(const BlockDictionary& bd,
                               const KoopmanMatrix& k,
                               const TrajectoryDataset& data) {
  bd.validate();
  data.validate();
  const int m = bd.lift_dim();
  BlockGradients g;
  g.grad_k = Matrix::Zero(m, m);
  g.grad_w.resize(bd.q());
  for (int i = 0; i < bd.q(); ++i) {
    g.grad_w[i].resize(bd.node_params[i].layer_count());
    for (int l = 0; l < bd.node_params[i].layer_count(); ++l)
      g.grad_w[i][l] = Matrix::Zero(bd.node_params[i].layers[l].rows(),
                                    bd.node_params[i].layers[l].cols());
  }
  for (const auto& [x, x_next] : data.pairs) {
    const Vector z0 = block_lift(bd, x);
    const Vector z1 = block_lift(bd, x_next);
    const Vector e = z1 - k * z0;
    g.grad_k -= e * z0.transpose();
    const Vector back = k.transpose() * e;
    int off = 0;
    for (int i = 0; i < bd.q(); ++i) {
      const auto& p = bd.node_params[i];
      const int mi = p.lift_dim();
      const Vector xi = extract_block(x, bd.partition.blocks[i]);
      const Vector xi_next = extract_block(x_next, bd.partition.blocks[i]);
      const auto via_next =
          lift_gradient_W(p, xi_next, Vector(e.segment(off, mi)));
      const auto via_cur =
          lift_gradient_W(p, xi, Vector(-back.segment(off, mi)));
      for (int l = 0; l < p.layer_count(); ++l)
        g.grad_w[i][l] += via_next[l] + via_cur[l];
      off += mi;
    }
  }
  g.grad_k /= data.size();
  for (auto& node : g.grad_w)
    for (auto& layer : node) layer /= data.size();
  return g;
}

double block_gradient_norm_sum(const BlockDictionary& bd,
                               const KoopmanMatrix& k,
                               const TrajectoryDataset& data) {
  const BlockGradients g = block_gradients(bd, k, data);
  double wsq = 0.0;
  for (const auto& node : g.grad_w)
    for (const auto& layer : node) wsq += layer.squaredNorm();
  return g.grad_k.norm() + std::sqrt(wsq);
}

void centralized_jacobi_step(BlockDictionary& bd, KoopmanMatrix& k,
                             const TrajectoryDataset& data, double eta_w,
                             double eta_k) {
  const BlockGradients g = block_gradients(bd, k, data);
  k -= eta_k * g.grad_k;
  for (int i = 0; i < bd.q(); ++i)
    for (int l = 0; l < bd.node_params[i].layer_count(); ++l)
      bd.node_params[i].layers[l] -= eta_w * g.grad_w[i][l];
}

void centralized_jacobi_step(DictionaryParams& params, KoopmanMatrix& k,
                             const TrajectoryDataset& data, double eta_w,
                             double eta_k) {
  const Matrix gk = grad_K(params, k, data);
  const auto gw = grad_W(params, k, data, GradientMode::Full);
  k -= eta_k * gk;
  for (int l = 0; l < params.layer_count(); ++l)
    params.layers[l] -= eta_w * gw[l];
}

// ---------------------------------------------------------------------------
// message-passing simulation

DistributedSim::DistributedSim(BlockDictionary bd, KoopmanMatrix k,
                               const TrajectoryDataset& data,
                               const DelayModel& delay)
    : data_(data), delay_(delay), rng_(delay.seed) {
  bd.validate();
  data_.validate();
  const int m = bd.lift_dim();
  if (k.rows() != m || k.cols() != m)
    throw shape_error("distributed: K does not match the assembled lift");
  if (delay_.max_delay < 0)
    throw usage_error("distributed: max_delay must be >= 0");
  for (int i = 0; i < bd.q(); ++i) {
    NodeState node;
    node.id = i;
    node.coords = bd.partition.blocks[i];
    node.params = bd.node_params[i];
    node.k_row = k.middleRows(bd.lift_offset(i), node.params.lift_dim());
    nodes_.push_back(std::move(node));
  }
  lift_mem_.resize(nodes_.size());
  bp_mem_.resize(nodes_.size());
  if (delay_.max_delay > 0) prefill_memory();
}

BlockDictionary DistributedSim::dictionary() const {
  return assemble_global(nodes_).first;
}

KoopmanMatrix DistributedSim::koopman() const {
  return assemble_global(nodes_).second;
}

int DistributedSim::sample_delay() {
  if (delay_.max_delay == 0) return 0;
  if (delay_.dist == DelayDist::Fixed) return delay_.max_delay;
  return static_cast<int>(rng_() % (delay_.max_delay + 1));
}

void DistributedSim::send(Message msg) {
  ++messages_this_round_;
  const int d = sample_delay();
  if (d > delay_.max_delay)
    throw protocol_error("bus: sampled delay exceeds max_delay");
  InFlight f{std::move(msg), round_counter_ + d, seq_counter_++};
  if (d == 0) {
    const auto key = std::make_pair(f.msg.sender, f.msg.j);
    auto deliver_to = [&](std::map<std::pair<int, int>, Slot>& node_mem) {
      Slot& slot = node_mem[key];
      if (slot.payload.size() == 0 || slot.emission_round <= f.msg.round)
        slot = Slot{f.msg.payload, f.msg.round};
    };
    if (f.msg.kind == Message::Kind::Lift) {
      for (auto& node_mem : lift_mem_) deliver_to(node_mem);
    } else {
      deliver_to(bp_mem_[f.msg.receiver]);
    }
  } else {
    in_flight_.push_back(std::move(f));
  }
}

void DistributedSim::deliver_due(int round) {
  std::vector<InFlight> due, later;
  for (auto& f : in_flight_)
    (f.delivery_round <= round ? due : later).push_back(std::move(f));
  in_flight_ = std::move(later);
  std::sort(due.begin(), due.end(), [](const InFlight& a, const InFlight& b) {
    return std::tie(a.msg.round, a.seq) < std::tie(b.msg.round, b.seq);
  });
  for (const auto& f : due) {
    const auto key = std::make_pair(f.msg.sender, f.msg.j);
    auto deliver_to = [&](std::map<std::pair<int, int>, Slot>& node_mem) {
      Slot& slot = node_mem[key];
      if (slot.payload.size() == 0 || slot.emission_round <= f.msg.round)
        slot = Slot{f.msg.payload, f.msg.round};
    };
    if (f.msg.kind == Message::Kind::Lift) {
      for (auto& node_mem : lift_mem_) deliver_to(node_mem);
    } else {
      deliver_to(bp_mem_[f.msg.receiver]);
    }
  }
}

void DistributedSim::prefill_memory() {
  // Bootstrap the memories with round-0 values so the first delayed rounds
  // read well-defined payloads.
  const int q = static_cast<int>(nodes_.size());
  for (int j = 0; j < data_.size(); ++j) {
    std::vector<Vector> z0(q), e(q);
    for (int i = 0; i < q; ++i)
      z0[i] = lift(nodes_[i].params,
                   extract_block(data_.pairs[j].first, nodes_[i].coords));
    Vector psi(0);
    for (int i = 0; i < q; ++i) {
      Vector tmp(psi.size() + z0[i].size());
      tmp << psi, z0[i];
      psi = std::move(tmp);
    }
    for (int i = 0; i < q; ++i) {
      const Vector z1 =
          lift(nodes_[i].params,
               extract_block(data_.pairs[j].second, nodes_[i].coords));
      e[i] = z1 - nodes_[i].k_row * psi;
    }
    for (int i = 0; i < q; ++i) {
      int voff = 0;
      for (int v = 0; v < q; ++v) {
        const int mv = nodes_[v].params.lift_dim();
        if (v != i) {
          lift_mem_[v][{i, j}] = Slot{z0[i], 0};
          // S'_{iv} = K_{iv}^T e^i
          bp_mem_[v][{i, j}] =
              Slot{nodes_[i].k_row.middleCols(voff, mv).transpose() * e[i], 0};
        }
        voff += mv;
      }
    }
  }
}

RoundStats DistributedSim::round(double eta_w, double eta_k) {
  const int t = round_counter_;
  const int q = static_cast<int>(nodes_.size());
  const int n = data_.size();
  int global_m = 0;
  for (const auto& node : nodes_) global_m += node.params.lift_dim();
  deliver_due(t);
  messages_this_round_ = 0;
  staleness_this_round_ = 0;
  double loss_acc = 0.0;

  for (auto& node : nodes_) {
    node.acc_a.assign(node.params.layer_count(), Matrix());
    node.acc_b.assign(node.params.layer_count(), Matrix());
    for (int l = 0; l < node.params.layer_count(); ++l) {
      node.acc_a[l] = Matrix::Zero(node.params.layers[l].rows(),
                                   node.params.layers[l].cols());
      node.acc_b[l] = node.acc_a[l];
    }
    node.acc_c = Matrix::Zero(node.params.lift_dim(), global_m);
  }

  auto read_slot = [&](std::map<std::pair<int, int>, Slot>& mem, int sender,
                       int j) -> const Vector& {
    auto it = mem.find({sender, j});
    if (it == mem.end())
      throw protocol_error("round " + std::to_string(t) +
                           ": missing message from node " +
                           std::to_string(sender) + " for data index " +
                           std::to_string(j));
    const int staleness = t - it->second.emission_round;
    if (staleness > delay_.max_delay)
      throw protocol_error("round " + std::to_string(t) +
                           ": payload older than the delay bound");
    staleness_this_round_ = std::max(staleness_this_round_, staleness);
    return it->second.payload;
  };

  for (int j = 0; j < n; ++j) {
    std::vector<Vector> z0(q), z1(q);
    for (int i = 0; i < q; ++i) {
      z0[i] = lift(nodes_[i].params,
                   extract_block(data_.pairs[j].first, nodes_[i].coords));
      z1[i] = lift(nodes_[i].params,
                   extract_block(data_.pairs[j].second, nodes_[i].coords));
    }
    // broadcast stage
    for (int i = 0; i < q; ++i)
      send(Message{Message::Kind::Lift, t, j, i, -1, z0[i]});
    // error terms from each node's view of the global lift
    std::vector<Vector> psi(q), e(q);
    for (int i = 0; i < q; ++i) {
      psi[i].resize(global_m);
      int off = 0;
      for (int v = 0; v < q; ++v) {
        const int mv = nodes_[v].params.lift_dim();
        psi[i].segment(off, mv) =
            v == i ? z0[i] : read_slot(lift_mem_[i], v, j);
        off += mv;
      }
      e[i] = z1[i] - nodes_[i].k_row * psi[i];
      loss_acc += 0.5 * e[i].squaredNorm();
    }
    // back-prop stage: S'_{iv} = K_{iv}^T e^i
    std::vector<Vector> self_bp(q);
    for (int i = 0; i < q; ++i) {
      int voff = 0;
      for (int v = 0; v < q; ++v) {
        const int mv = nodes_[v].params.lift_dim();
        const Vector s =
            nodes_[i].k_row.middleCols(voff, mv).transpose() * e[i];
        if (v == i)
          self_bp[i] = s;  // self-send short-circuited
        else
          send(Message{Message::Kind::BackProp, t, j, i, v, s});
        voff += mv;
      }
    }
    // accumulation stage
    for (int i = 0; i < q; ++i) {
      NodeState& node = nodes_[i];
      const Vector xi = extract_block(data_.pairs[j].first, node.coords);
      const Vector xi_next = extract_block(data_.pairs[j].second, node.coords);
      const auto via_next = lift_gradient_W(node.params, xi_next, e[i]);
      Vector bp_sum = self_bp[i];
      for (int k = 0; k < q; ++k)
        if (k != i) bp_sum += read_slot(bp_mem_[i], k, j);
      const auto via_cur = lift_gradient_W(node.params, xi, bp_sum);
      for (int l = 0; l < node.params.layer_count(); ++l) {
        node.acc_a[l] += via_next[l];
        node.acc_b[l] -= via_cur[l];
      }
      node.acc_c += e[i] * psi[i].transpose();
    }
  }

  // update stage; the K row moves along +C, the K-gradient being -C/N
  double gk_sq = 0.0, gw_sq = 0.0;
  for (auto& node : nodes_) {
    for (int l = 0; l < node.params.layer_count(); ++l) {
      const Matrix gw = (node.acc_a[l] + node.acc_b[l]) / n;
      gw_sq += gw.squaredNorm();
      node.params.layers[l] -= eta_w * gw;
    }
    gk_sq += node.acc_c.squaredNorm() / (static_cast<double>(n) * n);
    node.k_row += (eta_k / n) * node.acc_c;
  }

  ++round_counter_;
  RoundStats stats;
  stats.round = t;
  stats.global_loss = loss_acc / n;
  stats.grad_norm_sum = std::sqrt(gk_sq) + std::sqrt(gw_sq);
  stats.messages_sent = messages_this_round_;
  stats.max_staleness_observed = staleness_this_round_;
  return stats;
}

std::pair<BlockDictionary, KoopmanMatrix> assemble_global(
    const std::vector<NodeState>& nodes) {
  if (nodes.empty()) throw usage_error("assemble_global: no nodes");
  BlockDictionary bd;
  int m = 0;
  for (const auto& node : nodes) {
    bd.partition.blocks.push_back(node.coords);
    bd.node_params.push_back(node.params);
    m += node.params.lift_dim();
  }
  KoopmanMatrix k(m, m);
  int off = 0;
  for (const auto& node : nodes) {
    if (node.k_row.cols() != m)
      throw shape_error("assemble_global: K row width mismatch");
    k.middleRows(off, node.params.lift_dim()) = node.k_row;
    off += node.params.lift_dim();
  }
  return {std::move(bd), std::move(k)};
}

DistTrainResult run_distributed(BlockDictionary bd, KoopmanMatrix k,
                                const TrajectoryDataset& data,
                                const DistConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  double eta_w = 0.0, eta_k = 0.0;
  switch (config.schedule.kind) {
    case ScheduleKind::Constant:
      eta_w = config.schedule.eta_w;
      eta_k = config.schedule.eta_k;
      if (eta_w <= 0.0 || eta_k <= 0.0)
        throw usage_error("run_distributed: constant rate must be positive");
      break;
    case ScheduleKind::Auto: {
      for (const auto& p : bd.node_params)
        if (p.layer_count() != 1)
          throw usage_error(
              "run_distributed: auto rate needs single-layer dictionaries");
      const ActivationBounds ab =
          activation_bounds(bd.node_params.front().activation);
      const double l_k = lipschitz_K(bd.lift_dim(), ab);
      const double l_w = lipschitz_W(data, ab, config.bounds.u_k);
      eta_w = eta_k = config.rate_scale / std::max(l_w, l_k);
      break;
    }
    case ScheduleKind::Diminishing:
      throw usage_error(
          "run_distributed: diminishing schedule is not supported here");
  }

  DistributedSim sim(std::move(bd), std::move(k), data, config.delay);
  DistTrainResult result;
  result.e_best = std::numeric_limits<double>::infinity();
  for (int t = 0; t < config.rounds; ++t) {
    auto [prev_bd, prev_k] = assemble_global(sim.nodes());
    const RoundStats stats = sim.round(eta_w, eta_k);
    result.history.push_back(DistHistoryRow{stats});
    if (!std::isfinite(stats.global_loss) ||
        !std::isfinite(stats.grad_norm_sum))
      throw divergence_error("run_distributed: diverged at round " +
                             std::to_string(t));
    if (stats.grad_norm_sum <= result.e_best) {
      result.e_best = stats.grad_norm_sum;
      result.best_dictionary = prev_bd;
      result.best_k = prev_k;
    }
    if (config.tol > 0.0 && stats.grad_norm_sum < config.tol) break;
  }
  std::tie(result.dictionary, result.k) = assemble_global(sim.nodes());
  result.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  return result;
}

}  // namespace koopman

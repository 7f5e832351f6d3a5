#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <random>

#include "koopman/dynamics.hpp"
#include "koopman/objective.hpp"
#include "koopman/trainer.hpp"

namespace koopman {

/// Disjoint, order-preserving split of the state coordinates into q blocks.
struct Partition {
  std::vector<std::vector<int>> blocks;

  int q() const { return static_cast<int>(blocks.size()); }
  int state_dim() const;
  void validate(int d) const;
};

/// Balanced contiguous blocks (remainder goes to the earlier blocks), or
/// explicit block sizes when given.
Partition partition_state(int d, int q, const std::vector<int>& sizes = {});

Vector extract_block(const Vector& x, const std::vector<int>& block);

/// The concatenated dictionary [psi_1(x^1); ...; psi_q(x^q)].
struct BlockDictionary {
  Partition partition;
  std::vector<DictionaryParams> node_params;

  int q() const { return partition.q(); }
  int lift_dim() const;
  int lift_offset(int node) const;  // start of node's rows in the global lift
  void validate() const;
};

Vector block_lift(const BlockDictionary& bd, const Vector& x);
Vector block_decode(const BlockDictionary& bd, const Vector& z,
                    const Normalizer& norm = {});
double block_loss(const BlockDictionary& bd, const KoopmanMatrix& k,
                  const TrajectoryDataset& data);

std::vector<Vector> multi_step_predict(const BlockDictionary& bd,
                                       const KoopmanMatrix& k, const Vector& x0,
                                       int n, const Normalizer& norm = {});

/// Global grad_K and per-node grad_W of the assembled objective.
struct BlockGradients {
  Matrix grad_k;
  std::vector<std::vector<Matrix>> grad_w;  // [node][layer]
};
BlockGradients block_gradients(const BlockDictionary& bd,
                               const KoopmanMatrix& k,
                               const TrajectoryDataset& data);
double block_gradient_norm_sum(const BlockDictionary& bd,
                               const KoopmanMatrix& k,
                               const TrajectoryDataset& data);

/// Jacobi reference update: both gradients at the pre-update iterate. This is
/// the centralized path the message-passing rounds are checked against.
void centralized_jacobi_step(BlockDictionary& bd, KoopmanMatrix& k,
                             const TrajectoryDataset& data, double eta_w,
                             double eta_k);

/// Same update on a plain dictionary, via the objective gradients.
void centralized_jacobi_step(DictionaryParams& params, KoopmanMatrix& k,
                             const TrajectoryDataset& data, double eta_w,
                             double eta_k);

enum class DelayDist { Fixed, Uniform };

/// Bounded message delay in rounds. max_delay = 0 degenerates to the
/// synchronous protocol.
struct DelayModel {
  int max_delay = 0;
  DelayDist dist = DelayDist::Fixed;
  std::uint64_t seed = 0;
};

struct Message {
  enum class Kind { Lift, BackProp };
  Kind kind;
  int round;
  int j;         // data index
  int sender;
  int receiver;  // -1 for Lift broadcasts
  Vector payload;
};

struct NodeState {
  int id = 0;
  std::vector<int> coords;     // this node's state coordinates
  DictionaryParams params;     // psi_i
  Matrix k_row;                // [K_i1 ... K_iq], m_i x global lift dim
  std::vector<Matrix> acc_a;   // per-layer, shape of W_i
  std::vector<Matrix> acc_b;
  Matrix acc_c;                // m_i x global lift dim
};

struct RoundStats {
  int round = 0;
  double global_loss = 0.0;     // (1/2N) sum ||e_j||^2 as accumulated
  double grad_norm_sum = 0.0;   // at the pre-update iterate
  long messages_sent = 0;
  int max_staleness_observed = 0;
};

/// In-process simulation of Algorithms 2-3: q nodes exchanging immutable
/// lift / back-prop messages through a seeded delayed bus.
class DistributedSim {
 public:
  DistributedSim(BlockDictionary bd, KoopmanMatrix k,
                 const TrajectoryDataset& data, const DelayModel& delay);

  /// One full pass over the data followed by the parameter update.
  RoundStats round(double eta_w, double eta_k);

  const std::vector<NodeState>& nodes() const { return nodes_; }
  BlockDictionary dictionary() const;
  KoopmanMatrix koopman() const;

 private:
  struct Slot {
    Vector payload;
    int emission_round = 0;
  };
  struct InFlight {
    Message msg;
    int delivery_round = 0;
    long seq = 0;
  };

  void prefill_memory();
  void deliver_due(int round);
  void send(Message msg);
  int sample_delay();

  std::vector<NodeState> nodes_;
  const TrajectoryDataset& data_;
  DelayModel delay_;
  std::mt19937_64 rng_;
  int round_counter_ = 0;
  long seq_counter_ = 0;
  long messages_this_round_ = 0;
  int staleness_this_round_ = 0;
  std::vector<InFlight> in_flight_;
  // memory[node]: latest delivered payload per (peer, data index)
  std::vector<std::map<std::pair<int, int>, Slot>> lift_mem_;
  std::vector<std::map<std::pair<int, int>, Slot>> bp_mem_;
};

struct DistConfig {
  int rounds = 1000;
  double tol = 0.0;
  Schedule schedule;            // Constant or Auto
  double rate_scale = 1.0;      // multiplies the Auto rate
  BoundConfig bounds;
  DelayModel delay;             // max_delay = 0 means synchronous
};

struct DistHistoryRow : RoundStats {};

struct DistTrainResult {
  BlockDictionary dictionary;
  KoopmanMatrix k;
  BlockDictionary best_dictionary;
  KoopmanMatrix best_k;
  double e_best = 0.0;
  std::vector<DistHistoryRow> history;
  double wall_seconds = 0.0;
};

/// (global dictionary view, stacked K) from per-node states.
std::pair<BlockDictionary, KoopmanMatrix> assemble_global(
    const std::vector<NodeState>& nodes);

DistTrainResult run_distributed(BlockDictionary bd, KoopmanMatrix k,
                                const TrajectoryDataset& data,
                                const DistConfig& config);

}  // namespace koopman

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fedsim/eval.hpp"
#include "fedsim/fedalgo.hpp"
#include "fedsim/model.hpp"

namespace fedsim {

struct ExperimentConfig {
  Algorithm algorithm = Algorithm::fedavg;
  int rounds = 10;
  int clients_per_round = 3;
  LocalTrainConfig local;  // per-round seeds are derived; local.seed is ignored
  ModelConfig model;
  AdaptiveServerConfig adaptive;
  double fedavgm_h = 0.9;
  double scaffold_eta_s = 1.0;
  FedMobileAgentConfig fma;
  std::uint64_t seed = 42;
  bool low_level = false;
  int local_k_index = 0;
  bool eval_each_round = false;
  double tfidf_threshold = 0.5;
  int threads = 1;
};

struct RoundMetrics {
  std::int64_t round = 0;
  std::vector<int> sampled_clients;
  double mean_local_loss = 0.0;
  std::int64_t n_steps_trained = 0;
  std::optional<EvalReport> eval;
};

struct ExperimentResult {
  ServerState state;
  std::vector<RoundMetrics> rounds;
  EvalReport final_eval;
};

using ClientShards = std::vector<std::vector<const Episode*>>;

// Round-r client sample: clients_per_round distinct indices, ascending. The
// draw is keyed on (seed, round) only, so it is reproducible in isolation.
std::vector<int> sample_round_clients(int n_clients, int clients_per_round, std::uint64_t seed,
                                      std::int64_t round_index);

// Samples clients_per_round clients without replacement (round-derived seed),
// broadcasts the global model, trains the sampled clients in parallel, and
// dispatches the configured aggregation rule. Deterministic for a fixed
// (cfg, state, round_index) regardless of thread count.
RoundMetrics run_round(ServerState& state, const ClientShards& clients,
                       const ExperimentConfig& cfg, std::int64_t round_index);

// Full protocol: zero_shot evaluates the initial parameters; central trains a
// single pooled client with the same per-round budget; local_k trains only
// client k; federated algorithms run the round loop. Evaluation runs on the
// test set after the final round (each round behind eval_each_round).
ExperimentResult run_experiment(const ExperimentConfig& cfg, const ClientShards& clients,
                                const Dataset& test_set);

// Line-delimited metrics: one record per round plus a final summary object.
// Field names are stable; see README.
std::string metrics_to_jsonl(const ExperimentResult& result);

}  // namespace fedsim

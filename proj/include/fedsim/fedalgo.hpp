#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fedsim/model.hpp"

namespace fedsim {

enum class Algorithm : int {
  zero_shot = 0,
  central,
  local_k,
  fedavg,
  fedprox,
  fedavgm,
  fedadagrad,
  fedadam,
  fedyogi,
  scaffold,
  fedmobileagent,
};

const char* algorithm_name(Algorithm a);
bool algorithm_from_name(const std::string& name, Algorithm& out);
bool is_federated(Algorithm a);

struct AdaptiveServerConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eta = 1e-3;
  double tau = 1e-6;
};

enum class AdaptiveKind : int { adagrad = 0, adam, yogi };

struct FedMobileAgentConfig {
  double lambda = 7.0;
};

struct ScaffoldState {
  double eta_s = 1.0;
  std::vector<double> c;                  // global control variate
  std::vector<std::vector<double>> c_k;   // per-client control variates
};

struct ServerState {
  std::int64_t round = 0;
  ParamVector global_params;
  std::vector<double> m;        // first moment (adaptive family)
  std::vector<double> v;        // second moment (adaptive family)
  ParamVector momentum_model;   // FedAvgM history
  bool has_scaffold = false;
  ScaffoldState scaffold;
};

// Fresh state for an algorithm: zeroed global params; adaptive moments with v
// seeded at tau^2 so the first step cannot blow up; scaffold variates zeroed.
ServerState init_server_state(Algorithm algorithm, int param_dim, int n_clients,
                              const AdaptiveServerConfig& adaptive, double scaffold_eta_s);

// Elementwise sum(w_k * p_k) / sum(w_k). Zero-weight entries are skipped so
// they cannot pollute the mean.
ParamVector aggregate_weighted(const std::vector<std::pair<ParamVector, double>>& updates);

// FedAvg weighting: one weight per update, equal to the steps trained (S_k).
std::vector<double> fedavg_weights(const std::vector<LocalUpdate>& updates);

// FedMobileAgent weighting: S_k + lambda * E_k, normalized to sum 1.
std::vector<double> fedmobileagent_weights(const std::vector<LocalUpdate>& updates,
                                           const FedMobileAgentConfig& cfg);

// Model interpolation: global <- h*previous + (1-h)*aggregated.
void fedavgm_update(ServerState& state, const ParamVector& aggregated, double h = 0.9);

// FedOpt family on the pseudo-gradient delta = aggregated - global:
//   m <- beta1*m + (1-beta1)*delta
//   v <- v + delta^2                      (adagrad)
//        beta2*v + (1-beta2)*delta^2      (adam)
//        v - (1-beta2)*delta^2*sign(v - delta^2)   (yogi)
//   global <- global + eta * m / (sqrt(v) + tau)
void adaptive_update(ServerState& state, AdaptiveKind kind, const ParamVector& aggregated,
                     const AdaptiveServerConfig& cfg);

// SCAFFOLD server round: global <- global + eta_s * mean(params_k - global);
// participants' control variates absorb their deltas and the global variate
// moves by (|participants| / N) * mean(delta).
struct ScaffoldClientUpdate {
  int client = 0;
  ParamVector params;
  std::vector<double> c_delta;
};

void scaffold_round(ServerState& state, const std::vector<ScaffoldClientUpdate>& updates);

// ServerState checkpoint: manifest header (algorithm kind, round, dims), then
// one ParamVector-format section per buffer. Round-trips byte-exactly.
void save_checkpoint(const ServerState& state, Algorithm algorithm, const ModelConfig& model_cfg,
                     const std::string& path);
ServerState load_checkpoint(const std::string& path, Algorithm& algorithm,
                            ModelConfig& model_cfg);

// Bare parameter-vector checkpoint: (magic, version, D) + D little-endian f64.
void save_param_vector(const ParamVector& params, const std::string& path);
ParamVector load_param_vector(const std::string& path);

}  // namespace fedsim

#include "fedsim/fedalgo.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include "fedsim/error.hpp"

namespace fedsim {

namespace {

constexpr const char* kAlgorithmNames[] = {
    "zero_shot", "central",    "local_k", "fedavg",   "fedprox",        "fedavgm",
    "fedadagrad", "fedadam",   "fedyogi", "scaffold", "fedmobileagent",
};
constexpr int kNumAlgorithms = 11;

constexpr char kParamMagic[4] = {'F', 'S', 'P', 'V'};
constexpr char kStateMagic[4] = {'F', 'S', 'C', 'K'};
constexpr std::uint32_t kCheckpointVersion = 1;

void check_dims(const ParamVector& a, const ParamVector& b) {
  if (a.dim() != b.dim()) {
    raise(errc::dimension_mismatch, "parameter dimensions differ: " + std::to_string(a.dim()) +
                                        " vs " + std::to_string(b.dim()));
  }
}

// Little-endian primitives, independent of host byte order.
void put_u32(std::ostream& out, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xffu);
  out.write(reinterpret_cast<const char*>(b), 4);
}

void put_u64(std::ostream& out, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xffu);
  out.write(reinterpret_cast<const char*>(b), 8);
}

void put_f64(std::ostream& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

bool get_u32(std::istream& in, std::uint32_t& v) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) return false;
  v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return true;
}

bool get_u64(std::istream& in, std::uint64_t& v) {
  unsigned char b[8];
  if (!in.read(reinterpret_cast<char*>(b), 8)) return false;
  v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return true;
}

bool get_f64(std::istream& in, double& v) {
  std::uint64_t bits;
  if (!get_u64(in, bits)) return false;
  v = std::bit_cast<double>(bits);
  return true;
}

void put_vector(std::ostream& out, const std::vector<double>& values) {
  out.write(kParamMagic, 4);
  put_u32(out, kCheckpointVersion);
  put_u64(out, values.size());
  for (double v : values) put_f64(out, v);
}

std::vector<double> get_vector(std::istream& in, const std::string& path) {
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kParamMagic, 4) != 0) {
    raise(errc::corrupt_checkpoint, path + ": bad section magic");
  }
  std::uint32_t version;
  if (!get_u32(in, version)) raise(errc::corrupt_checkpoint, path + ": truncated header");
  if (version != kCheckpointVersion) {
    raise(errc::version_mismatch,
          path + ": checkpoint version " + std::to_string(version) + ", expected " +
              std::to_string(kCheckpointVersion));
  }
  std::uint64_t dim;
  if (!get_u64(in, dim)) raise(errc::corrupt_checkpoint, path + ": truncated header");
  std::vector<double> values(dim);
  for (std::uint64_t i = 0; i < dim; ++i) {
    if (!get_f64(in, values[i])) raise(errc::corrupt_checkpoint, path + ": truncated data");
  }
  return values;
}

}  // namespace

const char* algorithm_name(Algorithm a) { return kAlgorithmNames[static_cast<int>(a)]; }

bool algorithm_from_name(const std::string& name, Algorithm& out) {
  for (int i = 0; i < kNumAlgorithms; ++i) {
    if (name == kAlgorithmNames[i]) {
      out = static_cast<Algorithm>(i);
      return true;
    }
  }
  return false;
}

bool is_federated(Algorithm a) {
  return a != Algorithm::zero_shot && a != Algorithm::central && a != Algorithm::local_k;
}

ServerState init_server_state(Algorithm algorithm, int param_dim, int n_clients,
                              const AdaptiveServerConfig& adaptive, double scaffold_eta_s) {
  ServerState state;
  state.global_params = ParamVector::zeros(param_dim);
  state.momentum_model = ParamVector::zeros(param_dim);
  state.m.assign(static_cast<std::size_t>(param_dim), 0.0);
  state.v.assign(static_cast<std::size_t>(param_dim), adaptive.tau * adaptive.tau);
  if (algorithm == Algorithm::scaffold) {
    state.has_scaffold = true;
    state.scaffold.eta_s = scaffold_eta_s;
    state.scaffold.c.assign(static_cast<std::size_t>(param_dim), 0.0);
    state.scaffold.c_k.assign(static_cast<std::size_t>(n_clients),
                              std::vector<double>(static_cast<std::size_t>(param_dim), 0.0));
  }
  return state;
}

ParamVector aggregate_weighted(const std::vector<std::pair<ParamVector, double>>& updates) {
  if (updates.empty()) raise(errc::no_updates, "no client updates to aggregate");
  double total = 0.0;
  for (const auto& [params, weight] : updates) {
    if (weight < 0.0) raise(errc::invalid_spec, "negative aggregation weight");
    total += weight;
  }
  if (total <= 0.0) raise(errc::zero_total_weight, "aggregation weights sum to zero");

  const int D = updates.front().first.dim();
  ParamVector out = ParamVector::zeros(D);
  for (const auto& [params, weight] : updates) {
    check_dims(params, out);
    if (weight == 0.0) continue;
    for (int i = 0; i < D; ++i) {
      out.values[static_cast<std::size_t>(i)] +=
          weight * params.values[static_cast<std::size_t>(i)];
    }
  }
  for (double& v : out.values) v /= total;
  return out;
}

std::vector<double> fedavg_weights(const std::vector<LocalUpdate>& updates) {
  std::vector<double> weights;
  weights.reserve(updates.size());
  for (const LocalUpdate& u : updates) {
    weights.push_back(static_cast<double>(u.n_steps_trained));
  }
  return weights;
}

std::vector<double> fedmobileagent_weights(const std::vector<LocalUpdate>& updates,
                                           const FedMobileAgentConfig& cfg) {
  if (cfg.lambda < 0.0) raise(errc::invalid_spec, "lambda must be >= 0");
  std::vector<double> weights;
  weights.reserve(updates.size());
  double total = 0.0;
  for (const LocalUpdate& u : updates) {
    double w = static_cast<double>(u.n_steps_trained) +
               cfg.lambda * static_cast<double>(u.n_episodes_trained);
    weights.push_back(w);
    total += w;
  }
  if (total <= 0.0) raise(errc::zero_total_weight, "all FedMobileAgent weights are zero");
  for (double& w : weights) w /= total;
  return weights;
}

void fedavgm_update(ServerState& state, const ParamVector& aggregated, double h) {
  check_dims(state.global_params, aggregated);
  for (int i = 0; i < aggregated.dim(); ++i) {
    auto idx = static_cast<std::size_t>(i);
    state.global_params.values[idx] =
        h * state.global_params.values[idx] + (1.0 - h) * aggregated.values[idx];
  }
  state.momentum_model = state.global_params;
}

void adaptive_update(ServerState& state, AdaptiveKind kind, const ParamVector& aggregated,
                     const AdaptiveServerConfig& cfg) {
  check_dims(state.global_params, aggregated);
  const auto D = static_cast<std::size_t>(aggregated.dim());
  if (state.m.size() != D || state.v.size() != D) {
    raise(errc::dimension_mismatch, "server moment buffers do not match parameter dim");
  }
  for (std::size_t i = 0; i < D; ++i) {
    double delta = aggregated.values[i] - state.global_params.values[i];
    state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * delta;
    double delta_sq = delta * delta;
    switch (kind) {
      case AdaptiveKind::adagrad:
        state.v[i] += delta_sq;
        break;
      case AdaptiveKind::adam:
        state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * delta_sq;
        break;
      case AdaptiveKind::yogi: {
        double sign = state.v[i] - delta_sq > 0.0 ? 1.0 : (state.v[i] - delta_sq < 0.0 ? -1.0 : 0.0);
        state.v[i] -= (1.0 - cfg.beta2) * delta_sq * sign;
        break;
      }
    }
    if (!std::isfinite(state.v[i])) {
      raise(errc::invalid_spec, "second moment became non-finite");
    }
    state.global_params.values[i] += cfg.eta * state.m[i] / (std::sqrt(state.v[i]) + cfg.tau);
  }
}

void scaffold_round(ServerState& state, const std::vector<ScaffoldClientUpdate>& updates) {
  if (!state.has_scaffold) raise(errc::invalid_spec, "server state has no scaffold buffers");
  if (updates.empty()) raise(errc::no_updates, "no client updates to aggregate");
  const auto D = static_cast<std::size_t>(state.global_params.dim());
  const auto N = static_cast<double>(state.scaffold.c_k.size());

  std::vector<double> mean_params(D, 0.0);
  std::vector<double> mean_delta(D, 0.0);
  for (const ScaffoldClientUpdate& u : updates) {
    if (u.client < 0 || static_cast<std::size_t>(u.client) >= state.scaffold.c_k.size()) {
      raise(errc::unknown_client, "no control variate for client " + std::to_string(u.client));
    }
    check_dims(u.params, state.global_params);
    if (u.c_delta.size() != D) raise(errc::dimension_mismatch, "c_delta dim mismatch");
    for (std::size_t i = 0; i < D; ++i) {
      mean_params[i] += u.params.values[i];
      mean_delta[i] += u.c_delta[i];
    }
  }
  double inv_s = 1.0 / static_cast<double>(updates.size());
  for (std::size_t i = 0; i < D; ++i) {
    mean_params[i] *= inv_s;
    mean_delta[i] *= inv_s;
  }
  for (std::size_t i = 0; i < D; ++i) {
    state.global_params.values[i] +=
        state.scaffold.eta_s * (mean_params[i] - state.global_params.values[i]);
  }
  for (const ScaffoldClientUpdate& u : updates) {
    auto& ck = state.scaffold.c_k[static_cast<std::size_t>(u.client)];
    for (std::size_t i = 0; i < D; ++i) ck[i] += u.c_delta[i];
  }
  double scale = static_cast<double>(updates.size()) / N;
  for (std::size_t i = 0; i < D; ++i) state.scaffold.c[i] += scale * mean_delta[i];
}

void save_checkpoint(const ServerState& state, Algorithm algorithm, const ModelConfig& model_cfg,
                     const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) raise(errc::io_error, "cannot write checkpoint: " + path);
  out.write(kStateMagic, 4);
  put_u32(out, kCheckpointVersion);
  put_u32(out, static_cast<std::uint32_t>(algorithm));
  put_u64(out, static_cast<std::uint64_t>(state.round));
  put_u32(out, static_cast<std::uint32_t>(model_cfg.feature_dim));
  put_u32(out, static_cast<std::uint32_t>(model_cfg.arg_vocab));
  put_u32(out, state.has_scaffold ? 1u : 0u);
  put_f64(out, state.scaffold.eta_s);
  put_u32(out, static_cast<std::uint32_t>(state.scaffold.c_k.size()));
  put_vector(out, state.global_params.values);
  put_vector(out, state.m);
  put_vector(out, state.v);
  put_vector(out, state.momentum_model.values);
  if (state.has_scaffold) {
    put_vector(out, state.scaffold.c);
    for (const auto& ck : state.scaffold.c_k) put_vector(out, ck);
  }
  if (!out) raise(errc::io_error, "write failed: " + path);
}

ServerState load_checkpoint(const std::string& path, Algorithm& algorithm,
                            ModelConfig& model_cfg) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(errc::io_error, "cannot open checkpoint: " + path);
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kStateMagic, 4) != 0) {
    raise(errc::corrupt_checkpoint, path + ": bad checkpoint magic");
  }
  std::uint32_t version;
  if (!get_u32(in, version)) raise(errc::corrupt_checkpoint, path + ": truncated header");
  if (version != kCheckpointVersion) {
    raise(errc::version_mismatch, path + ": checkpoint version " + std::to_string(version) +
                                      ", expected " + std::to_string(kCheckpointVersion));
  }
  std::uint32_t algo, d, vocab, has_scaffold, n_clients;
  std::uint64_t round;
  double eta_s;
  if (!get_u32(in, algo) || !get_u64(in, round) || !get_u32(in, d) || !get_u32(in, vocab) ||
      !get_u32(in, has_scaffold) || !get_f64(in, eta_s) || !get_u32(in, n_clients)) {
    raise(errc::corrupt_checkpoint, path + ": truncated header");
  }
  if (algo >= kNumAlgorithms) raise(errc::corrupt_checkpoint, path + ": unknown algorithm id");
  algorithm = static_cast<Algorithm>(algo);
  model_cfg.feature_dim = static_cast<int>(d);
  model_cfg.arg_vocab = static_cast<int>(vocab);

  ServerState state;
  state.round = static_cast<std::int64_t>(round);
  state.global_params.values = get_vector(in, path);
  state.m = get_vector(in, path);
  state.v = get_vector(in, path);
  state.momentum_model.values = get_vector(in, path);
  state.has_scaffold = has_scaffold != 0;
  state.scaffold.eta_s = eta_s;
  if (state.has_scaffold) {
    state.scaffold.c = get_vector(in, path);
    state.scaffold.c_k.resize(n_clients);
    for (std::uint32_t k = 0; k < n_clients; ++k) state.scaffold.c_k[k] = get_vector(in, path);
  }
  char extra;
  if (in.read(&extra, 1)) raise(errc::corrupt_checkpoint, path + ": trailing bytes");
  return state;
}

void save_param_vector(const ParamVector& params, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) raise(errc::io_error, "cannot write parameter file: " + path);
  put_vector(out, params.values);
  if (!out) raise(errc::io_error, "write failed: " + path);
}

ParamVector load_param_vector(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(errc::io_error, "cannot open parameter file: " + path);
  ParamVector params;
  params.values = get_vector(in, path);
  char extra;
  if (in.read(&extra, 1)) raise(errc::corrupt_checkpoint, path + ": trailing bytes");
  return params;
}

}  // namespace fedsim

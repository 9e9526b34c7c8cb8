#include "fedsim/orchestrator.hpp"

#include <algorithm>
#include <atomic>
#include <mutex>
#include <numeric>
#include <thread>

#include <json.hpp>

#include "fedsim/error.hpp"
#include "fedsim/rng.hpp"

namespace fedsim {

namespace {

// Parallel map with results indexed by task: output order (and therefore
// every downstream reduction) is independent of the thread count.
template <typename Fn>
void parallel_for(std::size_t n_tasks, int threads, Fn&& fn) {
  int usable = std::max(1, std::min<int>(threads, static_cast<int>(n_tasks)));
  if (usable == 1) {
    for (std::size_t i = 0; i < n_tasks; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  std::exception_ptr first_error;
  std::mutex error_mutex;
  pool.reserve(static_cast<std::size_t>(usable));
  for (int t = 0; t < usable; ++t) {
    pool.emplace_back([&]() {
      for (;;) {
        std::size_t i = next.fetch_add(1);
        if (i >= n_tasks) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
        }
      }
    });
  }
  for (std::thread& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

LocalTrainConfig round_local_cfg(const ExperimentConfig& cfg, std::int64_t round_index,
                                 int client) {
  LocalTrainConfig local = cfg.local;
  local.seed = derive_seed(cfg.seed, "local-train", static_cast<std::uint64_t>(round_index),
                           static_cast<std::uint64_t>(client));
  return local;
}

EvalReport run_eval(const ServerState& state, const Dataset& test_set,
                    const ExperimentConfig& cfg) {
  EvalConfig eval_cfg;
  eval_cfg.threshold = cfg.tfidf_threshold;
  eval_cfg.low_level = cfg.low_level;
  return evaluate(state.global_params, test_set, cfg.model, eval_cfg);
}

nlohmann::ordered_json report_to_json(const EvalReport& report) {
  nlohmann::ordered_json j;
  j["step_accuracy"] = report.step_accuracy;
  j["episode_accuracy"] = report.episode_accuracy;
  j["n_steps"] = report.n_steps;
  j["n_episodes"] = report.n_episodes;
  nlohmann::ordered_json by_app;
  for (const auto& [app, acc] : report.by_app) {
    by_app[app] = {{"step_accuracy", acc.step_accuracy}, {"n_steps", acc.n_steps}};
  }
  j["by_app"] = std::move(by_app);
  nlohmann::ordered_json by_category;
  for (const auto& [cat, acc] : report.by_category) {
    by_category[cat] = {{"step_accuracy", acc.step_accuracy}, {"n_steps", acc.n_steps}};
  }
  j["by_category"] = std::move(by_category);
  return j;
}

}  // namespace

std::vector<int> sample_round_clients(int n_clients, int clients_per_round, std::uint64_t seed,
                                      std::int64_t round_index) {
  std::vector<int> indices(static_cast<std::size_t>(n_clients));
  std::iota(indices.begin(), indices.end(), 0);
  SplitMix64 rng(derive_seed(seed, "client-sample", static_cast<std::uint64_t>(round_index)));
  rng.shuffle(indices);
  indices.resize(static_cast<std::size_t>(clients_per_round));
  std::sort(indices.begin(), indices.end());
  return indices;
}

RoundMetrics run_round(ServerState& state, const ClientShards& clients,
                       const ExperimentConfig& cfg, std::int64_t round_index) {
  const auto n_clients = static_cast<int>(clients.size());
  if (cfg.clients_per_round < 1 || cfg.clients_per_round > n_clients) {
    raise(errc::no_eligible_clients,
          "clients_per_round " + std::to_string(cfg.clients_per_round) + " with " +
              std::to_string(n_clients) + " clients");
  }

  RoundMetrics metrics;
  metrics.round = round_index;
  metrics.sampled_clients =
      sample_round_clients(n_clients, cfg.clients_per_round, cfg.seed, round_index);

  const ParamVector broadcast = state.global_params;
  std::vector<LocalUpdate> updates(metrics.sampled_clients.size());
  std::vector<std::vector<double>> corrections(metrics.sampled_clients.size());
  if (cfg.algorithm == Algorithm::scaffold) {
    for (std::size_t i = 0; i < metrics.sampled_clients.size(); ++i) {
      auto k = static_cast<std::size_t>(metrics.sampled_clients[i]);
      const auto& ck = state.scaffold.c_k[k];
      corrections[i].resize(ck.size());
      for (std::size_t j = 0; j < ck.size(); ++j) {
        corrections[i][j] = state.scaffold.c[j] - ck[j];
      }
    }
  }

  parallel_for(metrics.sampled_clients.size(), cfg.threads, [&](std::size_t i) {
    int client = metrics.sampled_clients[i];
    const std::vector<double>* correction =
        cfg.algorithm == Algorithm::scaffold ? &corrections[i] : nullptr;
    updates[i] = local_train(broadcast, clients[static_cast<std::size_t>(client)],
                             round_local_cfg(cfg, round_index, client), cfg.model, broadcast,
                             correction, cfg.low_level);
  });

  switch (cfg.algorithm) {
    case Algorithm::fedavg:
    case Algorithm::fedprox:
    case Algorithm::fedavgm:
    case Algorithm::fedadagrad:
    case Algorithm::fedadam:
    case Algorithm::fedyogi:
    case Algorithm::fedmobileagent: {
      std::vector<double> weights = cfg.algorithm == Algorithm::fedmobileagent
                                        ? fedmobileagent_weights(updates, cfg.fma)
                                        : fedavg_weights(updates);
      std::vector<std::pair<ParamVector, double>> weighted;
      weighted.reserve(updates.size());
      for (std::size_t i = 0; i < updates.size(); ++i) {
        weighted.emplace_back(updates[i].new_params, weights[i]);
      }
      ParamVector aggregated = aggregate_weighted(weighted);
      if (cfg.algorithm == Algorithm::fedavgm) {
        fedavgm_update(state, aggregated, cfg.fedavgm_h);
      } else if (cfg.algorithm == Algorithm::fedadagrad) {
        adaptive_update(state, AdaptiveKind::adagrad, aggregated, cfg.adaptive);
      } else if (cfg.algorithm == Algorithm::fedadam) {
        adaptive_update(state, AdaptiveKind::adam, aggregated, cfg.adaptive);
      } else if (cfg.algorithm == Algorithm::fedyogi) {
        adaptive_update(state, AdaptiveKind::yogi, aggregated, cfg.adaptive);
      } else {
        state.global_params = std::move(aggregated);
      }
      break;
    }
    case Algorithm::scaffold: {
      std::vector<ScaffoldClientUpdate> scaffold_updates(updates.size());
      for (std::size_t i = 0; i < updates.size(); ++i) {
        ScaffoldClientUpdate& u = scaffold_updates[i];
        u.client = metrics.sampled_clients[i];
        u.params = updates[i].new_params;
        u.c_delta.assign(broadcast.values.size(), 0.0);
        double steps = static_cast<double>(updates[i].n_sgd_steps);
        if (steps > 0.0 && cfg.local.learning_rate > 0.0) {
          // c_k^+ = c_k - c + (x - y_k) / (T * lr), so the delta applied to
          // c_k is (x - y_k) / (T * lr) - c.
          double scale = 1.0 / (steps * cfg.local.learning_rate);
          for (std::size_t j = 0; j < u.c_delta.size(); ++j) {
            u.c_delta[j] =
                scale * (broadcast.values[j] - updates[i].new_params.values[j]) -
                state.scaffold.c[j];
          }
        }
      }
      scaffold_round(state, scaffold_updates);
      break;
    }
    default:
      raise(errc::invalid_spec, "run_round requires a federated algorithm");
  }

  state.round += 1;
  double loss_sum = 0.0;
  for (const LocalUpdate& u : updates) {
    loss_sum += u.mean_loss;
    metrics.n_steps_trained += u.n_steps_trained;
  }
  metrics.mean_local_loss =
      updates.empty() ? 0.0 : loss_sum / static_cast<double>(updates.size());
  return metrics;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, const ClientShards& clients,
                                const Dataset& test_set) {
  if (clients.empty()) raise(errc::no_eligible_clients, "no clients");
  if (cfg.algorithm != Algorithm::zero_shot && cfg.rounds < 1) {
    raise(errc::invalid_spec, "rounds must be >= 1");
  }

  ExperimentResult result;
  result.state = init_server_state(cfg.algorithm, cfg.model.param_dim(),
                                   static_cast<int>(clients.size()), cfg.adaptive,
                                   cfg.scaffold_eta_s);

  if (cfg.algorithm == Algorithm::zero_shot) {
    result.final_eval = run_eval(result.state, test_set, cfg);
    return result;
  }

  if (cfg.algorithm == Algorithm::central || cfg.algorithm == Algorithm::local_k) {
    std::vector<const Episode*> pool;
    int pseudo_client = 0;
    if (cfg.algorithm == Algorithm::central) {
      for (const auto& shard : clients) pool.insert(pool.end(), shard.begin(), shard.end());
    } else {
      if (cfg.local_k_index < 0 || static_cast<std::size_t>(cfg.local_k_index) >= clients.size()) {
        raise(errc::unknown_client, "local_k index " + std::to_string(cfg.local_k_index) +
                                        " with " + std::to_string(clients.size()) + " clients");
      }
      pseudo_client = cfg.local_k_index;
      pool = clients[static_cast<std::size_t>(cfg.local_k_index)];
    }
    if (pool.empty()) raise(errc::empty_client, "training pool is empty");
    for (std::int64_t r = 0; r < cfg.rounds; ++r) {
      LocalUpdate update =
          local_train(result.state.global_params, pool, round_local_cfg(cfg, r, pseudo_client),
                      cfg.model, result.state.global_params, nullptr, cfg.low_level);
      result.state.global_params = std::move(update.new_params);
      result.state.round += 1;
      RoundMetrics metrics;
      metrics.round = r;
      metrics.sampled_clients = {pseudo_client};
      metrics.mean_local_loss = update.mean_loss;
      metrics.n_steps_trained = update.n_steps_trained;
      if (cfg.eval_each_round) metrics.eval = run_eval(result.state, test_set, cfg);
      result.rounds.push_back(std::move(metrics));
    }
    result.final_eval = run_eval(result.state, test_set, cfg);
    return result;
  }

  for (std::int64_t r = 0; r < cfg.rounds; ++r) {
    RoundMetrics metrics = run_round(result.state, clients, cfg, r);
    if (cfg.eval_each_round) metrics.eval = run_eval(result.state, test_set, cfg);
    result.rounds.push_back(std::move(metrics));
  }
  result.final_eval = run_eval(result.state, test_set, cfg);
  return result;
}

std::string metrics_to_jsonl(const ExperimentResult& result) {
  std::string out;
  for (const RoundMetrics& metrics : result.rounds) {
    nlohmann::ordered_json j;
    j["round"] = metrics.round;
    j["sampled_clients"] = metrics.sampled_clients;
    j["mean_local_loss"] = metrics.mean_local_loss;
    j["n_steps_trained"] = metrics.n_steps_trained;
    if (metrics.eval) j["eval"] = report_to_json(*metrics.eval);
    out += j.dump();
    out += '\n';
  }
  nlohmann::ordered_json summary;
  summary["summary"] = true;
  summary["rounds"] = result.rounds.size();
  summary["final_round"] = result.state.round;
  summary["eval"] = report_to_json(result.final_eval);
  out += summary.dump();
  out += '\n';
  return out;
}

}  // namespace fedsim

// Acceptance suite: oracle, invariant, and directional criteria, one pass/fail
// line each. Usage: acceptance <path-to-fedsim-binary> <scratch-dir>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "fedsim/eval.hpp"
#include "fedsim/orchestrator.hpp"
#include "fedsim/partition.hpp"
#include "fedsim/presets.hpp"
#include "fedsim/rng.hpp"
#include "fedsim/synth.hpp"

using namespace fedsim;

namespace {

int g_failures = 0;
std::string g_binary;
std::string g_scratch;

void criterion(int number, const std::string& name, bool ok, const std::string& detail = "") {
  std::cout << (ok ? "PASS" : "FAIL") << " criterion " << number << ": " << name;
  if (!detail.empty()) std::cout << " (" << detail << ")";
  std::cout << std::endl;
  if (!ok) ++g_failures;
}

int run_cli(const std::string& args) {
  std::string command = g_binary + " " + args + " >/dev/null 2>&1";
  int status = std::system(command.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

double median(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  std::size_t n = values.size();
  return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

// --- 1. aggregation oracle ---------------------------------------------------

void criterion_1() {
  SplitMix64 rng(1001);
  double max_err = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    int n_clients = 1 + static_cast<int>(rng.next_below(10));
    std::vector<std::pair<ParamVector, double>> updates;
    for (int k = 0; k < n_clients; ++k) {
      ParamVector p = ParamVector::zeros(1000);
      for (double& v : p.values) v = rng.next_double() * 6.0 - 3.0;
      updates.emplace_back(std::move(p), rng.next_double() * 5.0);
    }
    if (updates[0].second == 0.0) updates[0].second = 1.0;
    ParamVector got = aggregate_weighted(updates);
    for (int i = 0; i < 1000; ++i) {
      double num = 0.0, den = 0.0;
      for (const auto& [p, w] : updates) {
        num += w * p.values[static_cast<std::size_t>(i)];
        den += w;
      }
      max_err = std::max(max_err, std::abs(got.values[static_cast<std::size_t>(i)] - num / den));
    }
  }
  criterion(1, "aggregate_weighted matches brute-force weighted mean", max_err <= 1e-12,
            "max abs err " + std::to_string(max_err));
}

// --- 2. gradient check --------------------------------------------------------

void criterion_2() {
  const ModelConfig cfg{16, 7};
  SplitMix64 rng(2002);
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    ParamVector w = ParamVector::zeros(cfg.param_dim());
    ParamVector global = ParamVector::zeros(cfg.param_dim());
    for (double& v : w.values) v = rng.next_double() - 0.5;
    for (double& v : global.values) v = rng.next_double() - 0.5;
    std::vector<TrainExample> batch;
    int n = 1 + static_cast<int>(rng.next_below(4));
    for (int b = 0; b < n; ++b) {
      TrainExample ex;
      ex.features.resize(static_cast<std::size_t>(cfg.feature_dim));
      double norm = 0.0;
      for (double& v : ex.features) {
        v = rng.next_double() - 0.5;
        norm += v * v;
      }
      for (double& v : ex.features) v /= std::sqrt(norm);
      ex.action_label = static_cast<int>(rng.next_below(kNumActionTypes));
      ex.arg_label = static_cast<int>(rng.next_below(7));
      batch.push_back(std::move(ex));
    }
    double mu = trial % 2 ? 0.2 : 0.0;
    LossGrad lg = loss_and_grad(w, batch, cfg, global, mu);
    const double h = 1e-6;
    ParamVector probe = w;
    for (std::size_t i = 0; i < w.values.size(); ++i) {
      probe.values[i] = w.values[i] + h;
      double up = loss_and_grad(probe, batch, cfg, global, mu).loss;
      probe.values[i] = w.values[i] - h;
      double down = loss_and_grad(probe, batch, cfg, global, mu).loss;
      probe.values[i] = w.values[i];
      double fd = (up - down) / (2.0 * h);
      double rel =
          std::abs(lg.grad[i] - fd) / std::max({1.0, std::abs(lg.grad[i]), std::abs(fd)});
      worst = std::max(worst, rel);
    }
  }
  criterion(2, "analytic gradient matches central differences", worst <= 1e-5,
            "max rel err " + std::to_string(worst));
}

// --- 3. reductions -------------------------------------------------------------

struct Shards {
  Dataset train;
  Dataset test;
  ClientShards clients;
};

Shards app_level_shards(const std::string& variant, std::uint64_t seed) {
  Shards s;
  DataPreset preset = make_preset("app-level", 1);
  s.train = generate_synthetic_dataset(preset.train);
  s.test = generate_synthetic_dataset(preset.test);
  PartitionAssignment a = partition(s.train, parse_scheme("app-level/" + variant, 5, seed));
  s.clients = group_by_client(s.train, a.client_of, 5);
  return s;
}

ExperimentConfig default_cfg(Algorithm algorithm, std::uint64_t seed) {
  ExperimentConfig cfg;
  cfg.algorithm = algorithm;
  cfg.rounds = 10;
  cfg.clients_per_round = 3;
  cfg.seed = seed;
  return cfg;  // local defaults: lr 0.1, epochs 1, batch 8, subsample 0.1
}

void criterion_3() {
  Shards s = app_level_shards("iid", 9);

  ExperimentConfig fedavg_cfg = default_cfg(Algorithm::fedavg, 5);
  ExperimentConfig fedprox_cfg = default_cfg(Algorithm::fedprox, 5);
  fedprox_cfg.local.prox_mu = 0.0;
  ExperimentResult a = run_experiment(fedavg_cfg, s.clients, s.test);
  ExperimentResult b = run_experiment(fedprox_cfg, s.clients, s.test);
  bool prox_ok =
      metrics_to_jsonl(a) == metrics_to_jsonl(b) &&
      std::memcmp(a.state.global_params.values.data(), b.state.global_params.values.data(),
                  sizeof(double) * a.state.global_params.values.size()) == 0;
  criterion(3, "(a) FedProx mu=0 is bit-identical to FedAvg over 10 rounds", prox_ok);

  // (b) one local step, full participation, zero control variates
  ModelConfig model;
  LocalTrainConfig local;
  local.subsample_fraction = 1.0;
  local.epochs = 1;
  local.batch_size = 1 << 20;
  ParamVector start = ParamVector::zeros(model.param_dim());
  std::vector<std::pair<ParamVector, double>> uniform;
  AdaptiveServerConfig adaptive;
  ServerState scaffold_state = init_server_state(Algorithm::scaffold, model.param_dim(), 5,
                                                 adaptive, 1.0);
  std::vector<ScaffoldClientUpdate> scaffold_updates;
  std::vector<double> zero_correction(static_cast<std::size_t>(model.param_dim()), 0.0);
  for (int k = 0; k < 5; ++k) {
    local.seed = derive_seed(77, "client", static_cast<std::uint64_t>(k));
    LocalUpdate u = local_train(start, s.clients[static_cast<std::size_t>(k)], local, model,
                                start, &zero_correction);
    uniform.emplace_back(u.new_params, 1.0);
    ScaffoldClientUpdate su;
    su.client = k;
    su.params = u.new_params;
    su.c_delta.assign(static_cast<std::size_t>(model.param_dim()), 0.0);
    scaffold_updates.push_back(std::move(su));
  }
  ParamVector fedavg_global = aggregate_weighted(uniform);
  scaffold_round(scaffold_state, scaffold_updates);
  double max_err = 0.0;
  for (std::size_t i = 0; i < fedavg_global.values.size(); ++i) {
    max_err = std::max(max_err, std::abs(fedavg_global.values[i] -
                                         scaffold_state.global_params.values[i]));
  }
  criterion(3, "(b) SCAFFOLD round-1 equals FedAvg round-1 with zero variates",
            max_err <= 1e-12, "max abs err " + std::to_string(max_err));

  std::vector<LocalUpdate> weight_updates(3);
  weight_updates[0].n_steps_trained = 10;
  weight_updates[1].n_steps_trained = 25;
  weight_updates[2].n_steps_trained = 65;
  for (auto& u : weight_updates) u.n_episodes_trained = 4;
  FedMobileAgentConfig fma;
  fma.lambda = 0.0;
  std::vector<double> fma_w = fedmobileagent_weights(weight_updates, fma);
  std::vector<double> avg_w = fedavg_weights(weight_updates);
  double total = avg_w[0] + avg_w[1] + avg_w[2];
  bool weights_ok = fma_w[0] == avg_w[0] / total && fma_w[1] == avg_w[1] / total &&
                    fma_w[2] == avg_w[2] / total;
  criterion(3, "(c) FedMobileAgent lambda=0 weights equal FedAvg weights", weights_ok);
}

// --- 4. adaptive-server oracle --------------------------------------------------

void criterion_4() {
  AdaptiveServerConfig cfg;
  bool ok = true;
  std::string detail;

  // worked adagrad example
  ServerState state = init_server_state(Algorithm::fedadagrad, 3, 1, cfg, 1.0);
  for (double& v : state.v) v = 0.0;
  ParamVector ones = ParamVector::zeros(3);
  for (double& v : ones.values) v = 1.0;
  adaptive_update(state, AdaptiveKind::adagrad, ones, cfg);
  for (int i = 0; i < 3; ++i) {
    auto idx = static_cast<std::size_t>(i);
    ok = ok && std::abs(state.m[idx] - 0.1) <= 1e-12 && std::abs(state.v[idx] - 1.0) <= 1e-12;
    ok = ok && std::abs(state.global_params.values[idx] - 1e-3 * 0.1 / (1.0 + 1e-6)) <= 1e-12;
    ok = ok && std::abs(state.global_params.values[idx] - 9.9999e-5) < 1e-9;
  }
  if (!ok) detail = "worked adagrad example diverged";

  // scalar traces for all three rules
  for (AdaptiveKind kind : {AdaptiveKind::adagrad, AdaptiveKind::adam, AdaptiveKind::yogi}) {
    ServerState st = init_server_state(Algorithm::fedadagrad, 3, 1, cfg, 1.0);
    double global[3] = {0, 0, 0}, m[3] = {0, 0, 0};
    double v[3] = {cfg.tau * cfg.tau, cfg.tau * cfg.tau, cfg.tau * cfg.tau};
    SplitMix64 rng(static_cast<std::uint64_t>(kind) + 404);
    for (int round = 0; round < 8; ++round) {
      ParamVector aggregated = ParamVector::zeros(3);
      for (double& x : aggregated.values) x = rng.next_double() * 2.0 - 1.0;
      adaptive_update(st, kind, aggregated, cfg);
      for (int i = 0; i < 3; ++i) {
        auto idx = static_cast<std::size_t>(i);
        double delta = aggregated.values[idx] - global[i];
        m[i] = cfg.beta1 * m[i] + (1 - cfg.beta1) * delta;
        double d2 = delta * delta;
        if (kind == AdaptiveKind::adagrad) v[i] += d2;
        if (kind == AdaptiveKind::adam) v[i] = cfg.beta2 * v[i] + (1 - cfg.beta2) * d2;
        if (kind == AdaptiveKind::yogi) {
          double sign = v[i] - d2 > 0 ? 1.0 : (v[i] - d2 < 0 ? -1.0 : 0.0);
          v[i] -= (1 - cfg.beta2) * d2 * sign;
        }
        global[i] += cfg.eta * m[i] / (std::sqrt(v[i]) + cfg.tau);
        ok = ok && std::abs(st.m[idx] - m[i]) <= 1e-12 && std::abs(st.v[idx] - v[i]) <= 1e-12 &&
             std::abs(st.global_params.values[idx] - global[i]) <= 1e-12;
      }
    }
  }
  criterion(4, "adagrad/adam/yogi match scalar oracles on D=3", ok, detail);
}

// --- 5. partition invariants ----------------------------------------------------

void criterion_5() {
  bool ok = true;
  std::string detail;
  auto fail = [&](const std::string& why) {
    ok = false;
    if (detail.empty()) detail = why;
  };

  Dataset category = generate_synthetic_dataset(make_preset("category-level", 2).train);
  for (const char* variant :
       {"iid", "skew", "half-skew", "non-uniform", "app-skew", "app-random"}) {
    PartitionAssignment a =
        partition(category, parse_scheme(std::string("category-level/") + variant, 5, 21));
    if (!verify_partition(category, a).ok) fail(std::string("category-level/") + variant);
    for (const ClientCounts& c : client_counts(category, a)) {
      if (c.episodes != 200) fail(std::string(variant) + ": client != 200 episodes");
    }
  }

  Dataset app_level = generate_synthetic_dataset(make_preset("app-level", 2).train);
  for (const char* variant : {"iid", "skew", "half-skew", "non-uniform"}) {
    PartitionAssignment a =
        partition(app_level, parse_scheme(std::string("app-level/") + variant, 5, 22));
    if (!verify_partition(app_level, a).ok) fail(std::string("app-level/") + variant);
  }
  PartitionAssignment diag = partition(app_level, parse_scheme("app-level/skew", 5, 22));
  DistributionMatrix matrix = distribution_matrix(app_level, diag, LabelAxis::App);
  for (std::size_t k = 0; k < 5; ++k) {
    for (std::size_t l = 0; l < 5; ++l) {
      if (matrix.counts[k][l] != (k == l ? 150 : 0)) fail("app-level/skew not diagonal");
    }
  }

  Dataset scaleapp = generate_synthetic_dataset(make_preset("scaleapp", 2).train);
  if (scaleapp.size() != 2500) fail("scaleapp size");
  for (const char* variant : {"iid", "skew", "random"}) {
    PartitionAssignment a =
        partition(scaleapp, parse_scheme(std::string("scaleapp/") + variant, 30, 23));
    if (!verify_partition(scaleapp, a).ok) fail(std::string("scaleapp/") + variant);
  }

  Dataset step_episode = generate_synthetic_dataset(make_preset("step-episode", 2).train);
  auto cv = [](const std::vector<std::int64_t>& values) {
    double mean = 0.0;
    for (auto v : values) mean += static_cast<double>(v);
    mean /= static_cast<double>(values.size());
    double var = 0.0;
    for (auto v : values) var += (static_cast<double>(v) - mean) * (static_cast<double>(v) - mean);
    return std::sqrt(var / static_cast<double>(values.size())) / mean;
  };
  for (const char* variant : {"iid", "step-skew", "episode-skew", "both-skew"}) {
    PartitionAssignment a =
        partition(step_episode, parse_scheme(std::string("step-episode/") + variant, 10, 24));
    if (!verify_partition(step_episode, a).ok) fail(std::string("step-episode/") + variant);
    std::vector<std::int64_t> episodes, steps;
    for (const ClientCounts& c : client_counts(step_episode, a)) {
      episodes.push_back(c.episodes);
      steps.push_back(c.steps);
    }
    if (std::string(variant) == "step-skew" && cv(steps) < 0.3) fail("step-skew CV");
    if (std::string(variant) == "episode-skew") {
      if (cv(episodes) < 0.3) fail("episode-skew CV");
      double mean = 0.0;
      for (auto s : steps) mean += static_cast<double>(s);
      mean /= static_cast<double>(steps.size());
      for (auto s : steps) {
        if (std::abs(static_cast<double>(s) - mean) > 0.10 * mean) fail("episode-skew band");
      }
    }
  }
  criterion(5, "partition invariants hold at benchmark sizes", ok, detail);
}

// --- 6. metric properties -------------------------------------------------------

void criterion_6() {
  bool ok = true;
  auto plant = [](const std::vector<std::vector<bool>>& episodes) {
    std::vector<StepResult> steps;
    std::map<std::string, std::string> apps, cats;
    for (std::size_t e = 0; e < episodes.size(); ++e) {
      std::string id = "ep" + std::to_string(e);
      apps[id] = "Amazon";
      cats[id] = "Shopping";
      for (std::size_t s = 0; s < episodes[e].size(); ++s) {
        StepResult r;
        r.episode_id = id;
        r.step_index = static_cast<int>(s);
        r.correct = episodes[e][s];
        steps.push_back(r);
      }
    }
    return assemble_report(steps, apps, cats);
  };

  EvalReport all = plant({{true, true}, {true, true, true}});
  ok = ok && all.step_accuracy == 1.0 && all.episode_accuracy == 1.0;
  EvalReport some = plant({{true, false}, {true}});
  ok = ok && some.step_accuracy < 1.0 && some.episode_accuracy < 1.0;

  EvalReport skewed = plant({{true}, std::vector<bool>(99, false)});
  ok = ok && skewed.episode_accuracy == 0.5 && skewed.step_accuracy == 0.01;

  IdfMap idf = build_idf({"click home button", "scroll down", "type text"});
  ok = ok && std::abs(tfidf_similarity("click home button", "click home button", idf) - 1.0) <=
                 1e-12;
  ok = ok && tfidf_similarity("click home button", "scroll down", idf) == 0.0;
  criterion(6, "two-tier metric properties (planted 0.5 / 0.01, tf-idf bounds)", ok);
}

// --- 7. directional heterogeneity experiment ------------------------------------

void criterion_7() {
  auto start = std::chrono::steady_clock::now();
  Shards iid = app_level_shards("iid", 31);
  Shards skew = app_level_shards("skew", 31);

  std::vector<double> fedavg_iid, fedavg_skew, best_local;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    ExperimentConfig cfg = default_cfg(Algorithm::fedavg, seed);
    fedavg_iid.push_back(run_experiment(cfg, iid.clients, iid.test).final_eval.step_accuracy);
    fedavg_skew.push_back(run_experiment(cfg, skew.clients, skew.test).final_eval.step_accuracy);
    double best = 0.0;
    for (int k = 0; k < 5; ++k) {
      ExperimentConfig local_cfg = default_cfg(Algorithm::local_k, seed);
      local_cfg.local_k_index = k;
      best = std::max(best,
                      run_experiment(local_cfg, iid.clients, iid.test).final_eval.step_accuracy);
    }
    best_local.push_back(best);
  }
  double med_fedavg = median(fedavg_iid);
  double med_local = median(best_local);
  double med_skew = median(fedavg_skew);
  auto elapsed = std::chrono::duration_cast<std::chrono::seconds>(
                     std::chrono::steady_clock::now() - start)
                     .count();
  char detail[160];
  std::snprintf(detail, sizeof(detail),
                "median fedavg=%.4f best-local=%.4f fedavg-skew=%.4f, %llds", med_fedavg,
                med_local, med_skew, static_cast<long long>(elapsed));
  criterion(7, "FedAvg >= best Local-k and FedAvg(IID) >= FedAvg(Skew)",
            med_fedavg >= med_local && med_fedavg >= med_skew && elapsed < 120, detail);
}

// --- 8. end-to-end determinism ---------------------------------------------------

void criterion_8() {
  auto pipeline = [&](const std::string& tag, int threads) {
    std::string dir = g_scratch + "/" + tag;
    std::filesystem::create_directories(dir);
    int rc = 0;
    rc |= run_cli("gen-data --preset app-level --seed 3 --out " + dir + "/data.jsonl" +
                  " --test-out " + dir + "/test.jsonl");
    rc |= run_cli("partition --data " + dir + "/data.jsonl" +
                  " --scheme app-level/iid --clients 5 --seed 3 --out " + dir + "/assign.tsv");
    rc |= run_cli("train --algorithm fedavg --data " + dir + "/data.jsonl --assign " + dir +
                  "/assign.tsv --test " + dir + "/test.jsonl --rounds 5 --seed 3 --threads " +
                  std::to_string(threads) + " --metrics-out " + dir + "/metrics.jsonl");
    rc |= run_cli("report --out " + dir + "/table.csv " + dir + "/metrics.jsonl");
    return rc;
  };
  auto f = [&](const std::string& tag, const std::string& name) {
    return slurp(g_scratch + "/" + tag + "/" + name);
  };
  bool ok = pipeline("x", 1) == 0 && pipeline("y", 1) == 0 && pipeline("z", 4) == 0;
  ok = ok && f("x", "data.jsonl") == f("y", "data.jsonl");
  ok = ok && f("x", "assign.tsv") == f("y", "assign.tsv");
  ok = ok && !f("x", "metrics.jsonl").empty() && f("x", "metrics.jsonl") == f("y", "metrics.jsonl");
  ok = ok && f("x", "metrics.jsonl") == f("z", "metrics.jsonl");
  ok = ok && !f("x", "table.csv").empty() && f("x", "table.csv") == f("y", "table.csv");
  ok = ok && f("x", "table.csv") == f("z", "table.csv");
  criterion(8, "gen-data -> partition -> train -> report is byte-identical across runs/threads",
            ok);
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 3) {
    std::cerr << "usage: acceptance <fedsim-binary> <scratch-dir>\n";
    return 2;
  }
  g_binary = argv[1];
  g_scratch = argv[2];
  std::filesystem::create_directories(g_scratch);

  auto started = std::chrono::steady_clock::now();
  criterion_1();
  criterion_2();
  criterion_3();
  criterion_4();
  criterion_5();
  criterion_6();
  criterion_7();
  criterion_8();
  auto total = std::chrono::duration_cast<std::chrono::seconds>(
                   std::chrono::steady_clock::now() - started)
                   .count();
  std::cout << (g_failures == 0 ? "ALL CRITERIA PASSED" : "CRITERIA FAILED") << " in " << total
            << "s" << std::endl;
  return g_failures == 0 ? 0 : 1;
}

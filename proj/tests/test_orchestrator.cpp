#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstring>
#include <fstream>
#include <set>

#include "fedsim/error.hpp"
#include "fedsim/orchestrator.hpp"
#include "fedsim/partition.hpp"
#include "fedsim/synth.hpp"

using namespace fedsim;

namespace {

struct Fixture {
  Dataset train;
  Dataset test;
  PartitionAssignment assignment;
  ClientShards shards;
};

Fixture make_fixture(int n_clients = 5, std::int64_t n_episodes = 60) {
  GenSpec spec;
  spec.n_episodes = n_episodes;
  spec.app_profile = {{"Amazon", 1.0}, {"Gmail", 1.0}, {"Clock", 1.0}, {"eBay", 1.0},
                      {"Kayak", 1.0}};
  spec.mean_steps = 5.0;
  spec.seed = 12;
  Fixture f;
  f.train = generate_synthetic_dataset(spec);
  spec.seed = 13;
  spec.n_episodes = 20;
  spec.id_prefix = "te-";
  f.test = generate_synthetic_dataset(spec);
  f.assignment = partition(f.train, parse_scheme("basic-iid", n_clients, 4));
  f.shards = group_by_client(f.train, f.assignment.client_of, n_clients);
  return f;
}

ExperimentConfig base_cfg(Algorithm algorithm) {
  ExperimentConfig cfg;
  cfg.algorithm = algorithm;
  cfg.rounds = 5;
  cfg.clients_per_round = 3;
  cfg.model = ModelConfig{16, 7};
  cfg.local.learning_rate = 0.1;
  cfg.local.epochs = 1;
  cfg.local.batch_size = 8;
  cfg.local.subsample_fraction = 0.5;
  cfg.seed = 42;
  return cfg;
}

bool params_equal(const ParamVector& a, const ParamVector& b) {
  return a.dim() == b.dim() &&
         std::memcmp(a.values.data(), b.values.data(), sizeof(double) * a.values.size()) == 0;
}

}  // namespace

TEST_CASE("client sampling is seeded, duplicate-free, and covers everyone") {
  for (std::uint64_t seed : {0ull, 1ull, 2ull, 3ull, 4ull, 42ull}) {
    std::set<int> seen;
    for (std::int64_t r = 0; r < 100; ++r) {
      std::vector<int> sample = sample_round_clients(10, 3, seed, r);
      CHECK(sample.size() == 3);
      std::set<int> unique(sample.begin(), sample.end());
      CHECK(unique.size() == 3);
      for (int c : sample) {
        CHECK(c >= 0);
        CHECK(c < 10);
        seen.insert(c);
      }
      CHECK(sample == sample_round_clients(10, 3, seed, r));
    }
    CHECK(seen.size() == 10);
  }
}

TEST_CASE("zero_shot evaluates the initial parameters only") {
  Fixture f = make_fixture();
  ExperimentConfig cfg = base_cfg(Algorithm::zero_shot);
  ExperimentResult result = run_experiment(cfg, f.shards, f.test);
  CHECK(result.rounds.empty());
  for (double v : result.state.global_params.values) CHECK(v == 0.0);
  CHECK(result.final_eval.n_episodes == 20);
}

TEST_CASE("fedprox with mu=0 is bit-identical to fedavg") {
  Fixture f = make_fixture();
  ExperimentConfig fedavg_cfg = base_cfg(Algorithm::fedavg);
  fedavg_cfg.rounds = 10;
  ExperimentConfig fedprox_cfg = base_cfg(Algorithm::fedprox);
  fedprox_cfg.rounds = 10;
  fedprox_cfg.local.prox_mu = 0.0;

  ExperimentResult a = run_experiment(fedavg_cfg, f.shards, f.test);
  ExperimentResult b = run_experiment(fedprox_cfg, f.shards, f.test);
  CHECK(params_equal(a.state.global_params, b.state.global_params));
  CHECK(metrics_to_jsonl(a) == metrics_to_jsonl(b));

  fedprox_cfg.local.prox_mu = 0.2;
  ExperimentResult c = run_experiment(fedprox_cfg, f.shards, f.test);
  CHECK_FALSE(params_equal(a.state.global_params, c.state.global_params));
}

TEST_CASE("local_k on a single-client partition equals central") {
  Fixture f = make_fixture(1);
  ExperimentConfig central = base_cfg(Algorithm::central);
  central.clients_per_round = 1;
  ExperimentConfig local0 = base_cfg(Algorithm::local_k);
  local0.clients_per_round = 1;
  local0.local_k_index = 0;
  ExperimentResult a = run_experiment(central, f.shards, f.test);
  ExperimentResult b = run_experiment(local0, f.shards, f.test);
  CHECK(params_equal(a.state.global_params, b.state.global_params));
  CHECK(metrics_to_jsonl(a) == metrics_to_jsonl(b));
}

TEST_CASE("per-round step counts equal the sampled clients' shard sizes") {
  Fixture f = make_fixture();
  ExperimentConfig cfg = base_cfg(Algorithm::fedavg);
  cfg.local.subsample_fraction = 1.0;  // deterministic shard-sized subsample
  ExperimentResult result = run_experiment(cfg, f.shards, f.test);
  for (const RoundMetrics& metrics : result.rounds) {
    std::int64_t expected = 0;
    for (int k : metrics.sampled_clients) {
      for (const Episode* ep : f.shards[static_cast<std::size_t>(k)]) {
        expected += static_cast<std::int64_t>(ep->n_steps());
      }
    }
    CHECK(metrics.n_steps_trained == expected);
    CHECK(metrics.sampled_clients.size() == 3);
  }
}

TEST_CASE("results are independent of the thread count") {
  Fixture f = make_fixture();
  for (Algorithm algorithm : {Algorithm::fedavg, Algorithm::scaffold, Algorithm::fedyogi}) {
    ExperimentConfig cfg = base_cfg(algorithm);
    cfg.threads = 1;
    ExperimentResult a = run_experiment(cfg, f.shards, f.test);
    cfg.threads = 4;
    ExperimentResult b = run_experiment(cfg, f.shards, f.test);
    CHECK(params_equal(a.state.global_params, b.state.global_params));
    CHECK(metrics_to_jsonl(a) == metrics_to_jsonl(b));
  }
}

TEST_CASE("identical clients under full participation average to themselves") {
  Dataset pool = make_fixture().train;
  std::vector<const Episode*> shard;
  for (const Episode& ep : pool) shard.push_back(&ep);
  ClientShards clients = {shard, shard, shard};

  ExperimentConfig cfg = base_cfg(Algorithm::fedavg);
  cfg.rounds = 1;
  cfg.clients_per_round = 3;
  cfg.local.subsample_fraction = 1.0;
  cfg.local.epochs = 1;
  cfg.local.batch_size = 1 << 20;  // one full batch: order effects cannot bite

  ExperimentResult result = run_experiment(cfg, clients, pool);

  LocalTrainConfig local = cfg.local;
  local.seed = 0;  // the per-client seed only drives subsample/shuffle order
  ParamVector start = ParamVector::zeros(cfg.model.param_dim());
  LocalUpdate single = local_train(start, shard, local, cfg.model, start);
  for (std::size_t i = 0; i < single.new_params.values.size(); ++i) {
    CHECK(std::abs(result.state.global_params.values[i] - single.new_params.values[i]) <= 1e-12);
  }
}

TEST_CASE("scaffold maintains c as the mean of the client variates") {
  Fixture f = make_fixture();
  ExperimentConfig cfg = base_cfg(Algorithm::scaffold);
  cfg.rounds = 6;
  ExperimentResult result = run_experiment(cfg, f.shards, f.test);
  REQUIRE(result.state.has_scaffold);
  const ScaffoldState& s = result.state.scaffold;
  for (std::size_t i = 0; i < s.c.size(); ++i) {
    double mean = 0.0;
    for (const auto& ck : s.c_k) mean += ck[i];
    mean /= static_cast<double>(s.c_k.size());
    CHECK(std::abs(s.c[i] - mean) <= 1e-12);
  }
}

TEST_CASE("round and experiment error paths") {
  Fixture f = make_fixture();
  ExperimentConfig cfg = base_cfg(Algorithm::fedavg);
  cfg.clients_per_round = 0;
  AdaptiveServerConfig adaptive;
  ServerState state = init_server_state(Algorithm::fedavg, cfg.model.param_dim(), 5, adaptive, 1.0);
  CHECK_THROWS_AS(run_round(state, f.shards, cfg, 0), Error);

  ExperimentConfig bad_local = base_cfg(Algorithm::local_k);
  bad_local.local_k_index = 99;
  CHECK_THROWS_AS(run_experiment(bad_local, f.shards, f.test), Error);

  ExperimentConfig bad_rounds = base_cfg(Algorithm::fedavg);
  bad_rounds.rounds = 0;
  CHECK_THROWS_AS(run_experiment(bad_rounds, f.shards, f.test), Error);
}

TEST_CASE("server checkpoints round-trip byte-exactly") {
  Fixture f = make_fixture();
  ExperimentConfig cfg = base_cfg(Algorithm::scaffold);
  cfg.rounds = 3;
  ExperimentResult result = run_experiment(cfg, f.shards, f.test);

  save_checkpoint(result.state, Algorithm::scaffold, cfg.model, "tmp_state.ckpt");
  Algorithm algorithm;
  ModelConfig model_cfg;
  ServerState loaded = load_checkpoint("tmp_state.ckpt", algorithm, model_cfg);
  CHECK(algorithm == Algorithm::scaffold);
  CHECK(model_cfg.feature_dim == cfg.model.feature_dim);
  CHECK(model_cfg.arg_vocab == cfg.model.arg_vocab);
  CHECK(loaded.round == result.state.round);
  CHECK(params_equal(loaded.global_params, result.state.global_params));
  CHECK(loaded.m == result.state.m);
  CHECK(loaded.v == result.state.v);
  CHECK(loaded.scaffold.c == result.state.scaffold.c);
  CHECK(loaded.scaffold.c_k == result.state.scaffold.c_k);

  // byte-identical on re-save
  save_checkpoint(loaded, algorithm, model_cfg, "tmp_state2.ckpt");
  std::ifstream f1("tmp_state.ckpt", std::ios::binary), f2("tmp_state2.ckpt", std::ios::binary);
  std::string b1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
  std::string b2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
  CHECK(b1 == b2);
}

TEST_CASE("corrupt and mismatched checkpoints are rejected") {
  Fixture f = make_fixture();
  ExperimentConfig cfg = base_cfg(Algorithm::fedavg);
  cfg.rounds = 1;
  ExperimentResult result = run_experiment(cfg, f.shards, f.test);
  save_checkpoint(result.state, Algorithm::fedavg, cfg.model, "tmp_ok.ckpt");

  std::ifstream in("tmp_ok.ckpt", std::ios::binary);
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  in.close();

  {
    std::ofstream out("tmp_trunc.ckpt", std::ios::binary);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size() / 2));
  }
  Algorithm algorithm;
  ModelConfig model_cfg;
  try {
    load_checkpoint("tmp_trunc.ckpt", algorithm, model_cfg);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == errc::corrupt_checkpoint);
  }

  {
    std::string bumped = bytes;
    bumped[4] = static_cast<char>(bumped[4] + 1);  // version lives after the magic
    std::ofstream out("tmp_version.ckpt", std::ios::binary);
    out.write(bumped.data(), static_cast<std::streamsize>(bumped.size()));
  }
  try {
    load_checkpoint("tmp_version.ckpt", algorithm, model_cfg);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == errc::version_mismatch);
  }
}

TEST_CASE("param vector files round-trip") {
  ParamVector p;
  p.values = {1.5, -2.25, 0.0, 1e-300};
  save_param_vector(p, "tmp_params.bin");
  ParamVector q = load_param_vector("tmp_params.bin");
  CHECK(params_equal(p, q));
}

TEST_CASE("eval_each_round attaches a report to every round") {
  Fixture f = make_fixture();
  ExperimentConfig cfg = base_cfg(Algorithm::fedavg);
  cfg.rounds = 3;
  cfg.eval_each_round = true;
  ExperimentResult result = run_experiment(cfg, f.shards, f.test);
  REQUIRE(result.rounds.size() == 3);
  for (const RoundMetrics& metrics : result.rounds) {
    REQUIRE(metrics.eval.has_value());
    CHECK(metrics.eval->n_episodes == 20);
  }
  std::string jsonl = metrics_to_jsonl(result);
  CHECK(jsonl.find("\"eval\":") != std::string::npos);
}

TEST_CASE("low-level training beats high-level on the same budget") {
  // subgoals carry the argument word, so feeding them as input should lift
  // accuracy substantially
  Fixture f = make_fixture();
  ExperimentConfig cfg = base_cfg(Algorithm::fedavg);
  cfg.rounds = 8;
  cfg.local.learning_rate = 2.0;
  cfg.local.epochs = 3;
  cfg.model = ModelConfig{64, 16};
  ExperimentResult high = run_experiment(cfg, f.shards, f.test);
  cfg.low_level = true;
  ExperimentResult low = run_experiment(cfg, f.shards, f.test);
  CHECK(low.final_eval.step_accuracy > high.final_eval.step_accuracy);
}

TEST_CASE("every federated algorithm runs end to end") {
  Fixture f = make_fixture();
  for (Algorithm algorithm :
       {Algorithm::fedavg, Algorithm::fedprox, Algorithm::fedavgm, Algorithm::fedadagrad,
        Algorithm::fedadam, Algorithm::fedyogi, Algorithm::scaffold,
        Algorithm::fedmobileagent}) {
    CAPTURE(algorithm_name(algorithm));
    ExperimentConfig cfg = base_cfg(algorithm);
    cfg.rounds = 3;
    if (algorithm == Algorithm::fedprox) cfg.local.prox_mu = 0.2;
    ExperimentResult result = run_experiment(cfg, f.shards, f.test);
    CHECK(result.rounds.size() == 3);
    CHECK(result.final_eval.n_steps > 0);
    for (double v : result.state.global_params.values) CHECK(std::isfinite(v));
  }
}

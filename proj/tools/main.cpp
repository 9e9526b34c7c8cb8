#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "fedsim/dataset_io.hpp"
#include "fedsim/error.hpp"
#include "fedsim/orchestrator.hpp"
#include "fedsim/partition.hpp"
#include "fedsim/presets.hpp"
#include "fedsim/rng.hpp"
#include "fedsim/text.hpp"

namespace {

using fedsim::json;

constexpr const char* kToolVersion = "0.1.0";

int exit_code_for(fedsim::errc code) {
  switch (code) {
    case fedsim::errc::infeasible_scheme:
    case fedsim::errc::coverage_mismatch:
      return 3;
    case fedsim::errc::io_error:
    case fedsim::errc::corrupt_checkpoint:
    case fedsim::errc::version_mismatch:
      return 4;
    default:
      return 2;
  }
}

std::string file_digest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fedsim::raise(fedsim::errc::io_error, "cannot open input for digest: " + path);
  std::uint64_t h = 1469598103934665603ull;
  char buffer[1 << 16];
  while (in.read(buffer, sizeof(buffer)) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buffer[i]);
      h *= 1099511628211ull;
    }
  }
  char hex[32];
  std::snprintf(hex, sizeof(hex), "fnv1a64:%016llx", static_cast<unsigned long long>(h));
  return hex;
}

void write_text_atomic(const std::string& path, const std::string& text) {
  std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) fedsim::raise(fedsim::errc::io_error, "cannot write: " + tmp);
    out << text;
    if (!out) fedsim::raise(fedsim::errc::io_error, "write failed: " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) fedsim::raise(fedsim::errc::io_error, "rename failed: " + path);
}

json stats_to_json(const fedsim::DatasetStats& stats) {
  json j;
  j["n_episodes"] = stats.n_episodes;
  j["n_steps"] = stats.n_steps;
  j["n_apps"] = stats.n_apps;
  j["n_categories"] = stats.n_categories;
  json per_category;
  for (const auto& [cat, counts] : stats.per_category) {
    per_category[cat] = {{"episodes", counts.episodes}, {"steps", counts.steps}};
  }
  j["per_category"] = std::move(per_category);
  return j;
}

fedsim::GenSpec parse_custom_profile(const std::string& apps_flag, std::int64_t episodes,
                                     double mean_steps, std::uint64_t seed) {
  fedsim::GenSpec spec;
  spec.n_episodes = episodes;
  spec.mean_steps = mean_steps;
  spec.seed = seed;
  std::stringstream stream(apps_flag);
  std::string item;
  while (std::getline(stream, item, ',')) {
    if (item.empty()) continue;
    std::size_t colon = item.find(':');
    std::string app = colon == std::string::npos ? item : item.substr(0, colon);
    double weight = colon == std::string::npos ? 1.0 : std::stod(item.substr(colon + 1));
    spec.app_profile.emplace_back(app, weight);
  }
  if (spec.app_profile.empty()) {
    fedsim::raise(fedsim::errc::invalid_spec, "no apps given; use --apps or --preset");
  }
  return spec;
}

// -- gen-data ----------------------------------------------------------------

struct GenDataArgs {
  std::string preset;
  std::string out;
  std::string test_out;
  std::string apps;
  std::int64_t episodes = 1000;
  double mean_steps = 6.7;
  double noise = 0.1;
  std::uint64_t seed = 42;
};

int run_gen_data(const GenDataArgs& args) {
  fedsim::Dataset train;
  fedsim::Dataset test;
  if (!args.preset.empty()) {
    fedsim::DataPreset preset = fedsim::make_preset(args.preset, args.seed);
    train = fedsim::generate_synthetic_dataset(preset.train);
    if (!args.test_out.empty()) test = fedsim::generate_synthetic_dataset(preset.test);
  } else {
    fedsim::GenSpec spec =
        parse_custom_profile(args.apps, args.episodes, args.mean_steps, args.seed);
    spec.noise_rate = args.noise;
    train = fedsim::generate_synthetic_dataset(spec);
    if (!args.test_out.empty()) {
      fedsim::GenSpec test_spec = spec;
      test_spec.n_episodes = std::max<std::int64_t>(1, args.episodes / 10);
      test_spec.seed = fedsim::derive_seed(args.seed, "test-split");
      test_spec.id_prefix = "te-";
      test = fedsim::generate_synthetic_dataset(test_spec);
    }
  }
  fedsim::save_dataset(train, args.out);
  if (!args.test_out.empty()) fedsim::save_dataset(test, args.test_out);
  std::cout << stats_to_json(fedsim::dataset_stats(train)).dump(2) << "\n";
  return 0;
}

// -- partition -----------------------------------------------------------------

struct PartitionArgs {
  std::string data;
  std::string scheme = "basic-iid";
  std::string out;
  std::string heatmap;
  std::string axis = "auto";
  std::string catalog;
  int clients = 10;
  std::uint64_t seed = 42;
};

int run_partition(const PartitionArgs& args) {
  fedsim::AppCatalog catalog = fedsim::AppCatalog::builtin();
  if (!args.catalog.empty()) catalog.load_overlay(args.catalog);
  fedsim::Dataset dataset = fedsim::load_dataset(args.data, catalog);
  fedsim::PartitionScheme scheme = fedsim::parse_scheme(args.scheme, args.clients, args.seed);
  fedsim::PartitionAssignment assignment = fedsim::partition(dataset, scheme);
  fedsim::VerifyReport report = fedsim::verify_partition(dataset, assignment);

  fedsim::save_assignment(dataset, assignment, args.out);
  if (!args.heatmap.empty()) {
    fedsim::LabelAxis axis = fedsim::LabelAxis::App;
    if (args.axis == "category" ||
        (args.axis == "auto" && scheme.family == fedsim::PartitionFamily::CategoryLevel)) {
      axis = fedsim::LabelAxis::Category;
    }
    fedsim::save_heatmap_csv(fedsim::distribution_matrix(dataset, assignment, axis),
                             args.heatmap);
  }

  json summary;
  summary["scheme"] = fedsim::scheme_name(scheme);
  summary["n_clients"] = scheme.n_clients;
  summary["ok"] = report.ok;
  summary["violations"] = report.violations;
  json counts = json::array();
  for (const fedsim::ClientCounts& c : fedsim::client_counts(dataset, assignment)) {
    counts.push_back({{"episodes", c.episodes}, {"steps", c.steps}});
  }
  summary["clients"] = std::move(counts);
  std::cout << summary.dump(2) << "\n";
  if (!report.ok) {
    std::cerr << "verification failed: " << report.violations.size() << " violation(s)\n";
    return 3;
  }
  return 0;
}

// -- train -----------------------------------------------------------------

struct TrainArgs {
  std::string config;
  std::string data;
  std::string assign;
  std::string test;
  std::string catalog;
  std::string algorithm = "fedavg";
  std::string metrics_out;
  std::string checkpoint_out;
  std::string manifest_out;
  int rounds = 10;
  int clients_per_round = 3;
  int epochs = 3;
  int batch_size = 8;
  int local_k = 0;
  int threads = 1;
  int feature_dim = 256;
  int arg_vocab = 64;
  double lr = 2.0;
  double subsample = 0.1;
  double mu = -1.0;  // default depends on the algorithm
  double lambda = 7.0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eta = 1e-3;
  double tau = 1e-6;
  double eta_s = 1.0;
  double server_momentum = 0.9;
  double tfidf_threshold = 0.5;
  std::uint64_t seed = 42;
  bool low_level = false;
  bool eval_each_round = false;
};

// `key=value` lines with # comments, keys named after the long flags. A key
// is applied only when the flag was not given explicitly: flags win.
void merge_config_file(const CLI::App* train, TrainArgs& args) {
  std::ifstream in(args.config);
  if (!in) fedsim::raise(fedsim::errc::io_error, "cannot open config file: " + args.config);

  std::map<std::string, std::function<void(const std::string&)>> setters = {
      {"data", [&](const std::string& v) { args.data = v; }},
      {"assign", [&](const std::string& v) { args.assign = v; }},
      {"test", [&](const std::string& v) { args.test = v; }},
      {"catalog", [&](const std::string& v) { args.catalog = v; }},
      {"algorithm", [&](const std::string& v) { args.algorithm = v; }},
      {"metrics-out", [&](const std::string& v) { args.metrics_out = v; }},
      {"checkpoint-out", [&](const std::string& v) { args.checkpoint_out = v; }},
      {"manifest-out", [&](const std::string& v) { args.manifest_out = v; }},
      {"rounds", [&](const std::string& v) { args.rounds = std::stoi(v); }},
      {"clients-per-round", [&](const std::string& v) { args.clients_per_round = std::stoi(v); }},
      {"epochs", [&](const std::string& v) { args.epochs = std::stoi(v); }},
      {"batch-size", [&](const std::string& v) { args.batch_size = std::stoi(v); }},
      {"local-k", [&](const std::string& v) { args.local_k = std::stoi(v); }},
      {"threads", [&](const std::string& v) { args.threads = std::stoi(v); }},
      {"feature-dim", [&](const std::string& v) { args.feature_dim = std::stoi(v); }},
      {"arg-vocab", [&](const std::string& v) { args.arg_vocab = std::stoi(v); }},
      {"lr", [&](const std::string& v) { args.lr = std::stod(v); }},
      {"subsample", [&](const std::string& v) { args.subsample = std::stod(v); }},
      {"mu", [&](const std::string& v) { args.mu = std::stod(v); }},
      {"lambda", [&](const std::string& v) { args.lambda = std::stod(v); }},
      {"beta1", [&](const std::string& v) { args.beta1 = std::stod(v); }},
      {"beta2", [&](const std::string& v) { args.beta2 = std::stod(v); }},
      {"eta", [&](const std::string& v) { args.eta = std::stod(v); }},
      {"tau", [&](const std::string& v) { args.tau = std::stod(v); }},
      {"eta-s", [&](const std::string& v) { args.eta_s = std::stod(v); }},
      {"server-momentum", [&](const std::string& v) { args.server_momentum = std::stod(v); }},
      {"tfidf-threshold", [&](const std::string& v) { args.tfidf_threshold = std::stod(v); }},
      {"seed", [&](const std::string& v) { args.seed = std::stoull(v); }},
      {"low-level", [&](const std::string& v) { args.low_level = v == "true" || v == "1"; }},
      {"eval-each-round",
       [&](const std::string& v) { args.eval_each_round = v == "true" || v == "1"; }},
  };

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::string trimmed = fedsim::collapse_whitespace(line);
    if (trimmed.empty()) continue;
    std::size_t eq = trimmed.find('=');
    if (eq == std::string::npos) {
      fedsim::raise(fedsim::errc::invalid_spec,
                    args.config + ":" + std::to_string(line_no) + ": expected key=value");
    }
    std::string key = fedsim::collapse_whitespace(trimmed.substr(0, eq));
    std::string value = fedsim::collapse_whitespace(trimmed.substr(eq + 1));
    auto it = setters.find(key);
    if (it == setters.end()) {
      fedsim::raise(fedsim::errc::invalid_spec,
                    args.config + ":" + std::to_string(line_no) + ": unknown key `" + key + "`");
    }
    const CLI::Option* option = train->get_option_no_throw("--" + key);
    if (option != nullptr && option->count() > 0) continue;  // explicit flag wins
    try {
      it->second(value);
    } catch (const std::exception&) {
      fedsim::raise(fedsim::errc::invalid_spec,
                    args.config + ":" + std::to_string(line_no) + ": bad value for `" + key + "`");
    }
  }
}

json train_config_json(const TrainArgs& args, const fedsim::ExperimentConfig& cfg) {
  json j;
  j["algorithm"] = args.algorithm;
  j["rounds"] = cfg.rounds;
  j["clients_per_round"] = cfg.clients_per_round;
  j["learning_rate"] = cfg.local.learning_rate;
  j["epochs"] = cfg.local.epochs;
  j["batch_size"] = cfg.local.batch_size;
  j["prox_mu"] = cfg.local.prox_mu;
  j["subsample_fraction"] = cfg.local.subsample_fraction;
  j["lambda"] = cfg.fma.lambda;
  j["beta1"] = cfg.adaptive.beta1;
  j["beta2"] = cfg.adaptive.beta2;
  j["eta"] = cfg.adaptive.eta;
  j["tau"] = cfg.adaptive.tau;
  j["eta_s"] = cfg.scaffold_eta_s;
  j["server_momentum"] = cfg.fedavgm_h;
  j["feature_dim"] = cfg.model.feature_dim;
  j["arg_vocab"] = cfg.model.arg_vocab;
  j["tfidf_threshold"] = cfg.tfidf_threshold;
  j["seed"] = cfg.seed;
  j["low_level"] = cfg.low_level;
  j["local_k_index"] = cfg.local_k_index;
  j["eval_each_round"] = cfg.eval_each_round;
  j["threads"] = cfg.threads;
  return j;
}

int run_train(const TrainArgs& args) {
  fedsim::Algorithm algorithm;
  if (!fedsim::algorithm_from_name(args.algorithm, algorithm)) {
    fedsim::raise(fedsim::errc::invalid_spec, "unknown algorithm: " + args.algorithm);
  }
  if (args.data.empty() || args.assign.empty() || args.test.empty()) {
    fedsim::raise(fedsim::errc::invalid_spec,
                  "--data, --assign and --test are required (flags or config file)");
  }

  // digests before any processing
  std::string data_digest = file_digest(args.data);
  std::string assign_digest = file_digest(args.assign);
  std::string test_digest = file_digest(args.test);
  json inputs;
  inputs["data"] = {{"path", args.data}, {"digest", data_digest}};
  inputs["assignment"] = {{"path", args.assign}, {"digest", assign_digest}};
  inputs["test"] = {{"path", args.test}, {"digest", test_digest}};

  fedsim::AppCatalog catalog = fedsim::AppCatalog::builtin();
  if (!args.catalog.empty()) catalog.load_overlay(args.catalog);
  fedsim::Dataset dataset = fedsim::load_dataset(args.data, catalog);
  fedsim::Dataset test_set = fedsim::load_dataset(args.test, catalog);
  auto client_of = fedsim::load_assignment(args.assign);
  int n_clients = 0;
  for (const auto& [id, client] : client_of) n_clients = std::max(n_clients, client + 1);
  fedsim::ClientShards shards = fedsim::group_by_client(dataset, client_of, n_clients);

  fedsim::ExperimentConfig cfg;
  cfg.algorithm = algorithm;
  cfg.rounds = args.rounds;
  cfg.clients_per_round = args.clients_per_round;
  cfg.local.learning_rate = args.lr;
  cfg.local.epochs = args.epochs;
  cfg.local.batch_size = args.batch_size;
  cfg.local.subsample_fraction = args.subsample;
  cfg.local.prox_mu =
      args.mu >= 0.0 ? args.mu : (algorithm == fedsim::Algorithm::fedprox ? 0.2 : 0.0);
  cfg.model.feature_dim = args.feature_dim;
  cfg.model.arg_vocab = args.arg_vocab;
  cfg.adaptive = {args.beta1, args.beta2, args.eta, args.tau};
  cfg.fedavgm_h = args.server_momentum;
  cfg.scaffold_eta_s = args.eta_s;
  cfg.fma.lambda = args.lambda;
  cfg.seed = args.seed;
  cfg.low_level = args.low_level;
  cfg.local_k_index = args.local_k;
  cfg.eval_each_round = args.eval_each_round;
  cfg.tfidf_threshold = args.tfidf_threshold;
  cfg.threads = args.threads;

  fedsim::ExperimentResult result = fedsim::run_experiment(cfg, shards, test_set);

  json outputs;
  if (!args.metrics_out.empty()) {
    write_text_atomic(args.metrics_out, fedsim::metrics_to_jsonl(result));
    outputs["metrics"] = args.metrics_out;
  }
  if (!args.checkpoint_out.empty()) {
    fedsim::save_checkpoint(result.state, algorithm, cfg.model, args.checkpoint_out);
    outputs["checkpoint"] = args.checkpoint_out;
  }
  std::string manifest_path = args.manifest_out;
  if (manifest_path.empty() && !args.metrics_out.empty()) {
    manifest_path = args.metrics_out + ".manifest.json";
  }
  if (!manifest_path.empty()) {
    json manifest;
    manifest["tool"] = "fedsim";
    manifest["version"] = kToolVersion;
    manifest["command"] = "train";
    manifest["seed"] = args.seed;
    manifest["config"] = train_config_json(args, cfg);
    manifest["inputs"] = inputs;
    manifest["outputs"] = outputs;
    write_text_atomic(manifest_path, manifest.dump(2) + "\n");
  }

  json summary;
  summary["algorithm"] = args.algorithm;
  summary["rounds_run"] = result.rounds.size();
  summary["step_accuracy"] = result.final_eval.step_accuracy;
  summary["episode_accuracy"] = result.final_eval.episode_accuracy;
  std::cout << summary.dump(2) << "\n";
  return 0;
}

// -- evaluate ----------------------------------------------------------------

struct EvaluateArgs {
  std::string checkpoint;
  std::string test;
  std::string catalog;
  std::string out;
  std::string steps_csv;
  double threshold = 0.5;
  bool low_level = false;
};

json report_json(const fedsim::EvalReport& report) {
  json j;
  j["step_accuracy"] = report.step_accuracy;
  j["episode_accuracy"] = report.episode_accuracy;
  j["n_steps"] = report.n_steps;
  j["n_episodes"] = report.n_episodes;
  json by_app;
  for (const auto& [app, acc] : report.by_app) {
    by_app[app] = {{"step_accuracy", acc.step_accuracy}, {"n_steps", acc.n_steps}};
  }
  j["by_app"] = std::move(by_app);
  json by_category;
  for (const auto& [cat, acc] : report.by_category) {
    by_category[cat] = {{"step_accuracy", acc.step_accuracy}, {"n_steps", acc.n_steps}};
  }
  j["by_category"] = std::move(by_category);
  return j;
}

int run_evaluate(const EvaluateArgs& args) {
  fedsim::Algorithm algorithm;
  fedsim::ModelConfig model_cfg;
  fedsim::ServerState state = fedsim::load_checkpoint(args.checkpoint, algorithm, model_cfg);
  fedsim::AppCatalog catalog = fedsim::AppCatalog::builtin();
  if (!args.catalog.empty()) catalog.load_overlay(args.catalog);
  fedsim::Dataset test_set = fedsim::load_dataset(args.test, catalog);
  fedsim::EvalConfig eval_cfg;
  eval_cfg.threshold = args.threshold;
  eval_cfg.low_level = args.low_level;
  eval_cfg.keep_steps = !args.steps_csv.empty();
  fedsim::EvalReport report =
      fedsim::evaluate(state.global_params, test_set, model_cfg, eval_cfg);
  if (!args.steps_csv.empty()) fedsim::save_step_results_csv(report.steps, args.steps_csv);
  json j = report_json(report);
  if (!args.out.empty()) write_text_atomic(args.out, j.dump(2) + "\n");
  std::cout << j.dump(2) << "\n";
  return 0;
}

// -- stats -------------------------------------------------------------------

struct StatsArgs {
  std::string data;
  std::string catalog;
};

int run_stats(const StatsArgs& args) {
  fedsim::AppCatalog catalog = fedsim::AppCatalog::builtin();
  if (!args.catalog.empty()) catalog.load_overlay(args.catalog);
  fedsim::Dataset dataset = fedsim::load_dataset(args.data, catalog);
  std::cout << stats_to_json(fedsim::dataset_stats(dataset)).dump(2) << "\n";
  return 0;
}

// -- report ------------------------------------------------------------------

struct ReportArgs {
  std::vector<std::string> metrics;
  std::string out;
  std::string by = "app";
};

int run_report(const ReportArgs& args) {
  if (args.metrics.empty()) {
    fedsim::raise(fedsim::errc::missing_metrics, "no metrics files given");
  }
  struct Row {
    std::string name;
    std::map<std::string, double> accuracy;
    double average = 0.0;
  };
  std::vector<Row> rows;
  std::set<std::string> labels;
  for (const std::string& path : args.metrics) {
    std::ifstream in(path);
    if (!in) fedsim::raise(fedsim::errc::io_error, "cannot open metrics file: " + path);
    std::string line, summary_line;
    while (std::getline(in, line)) {
      if (line.find("\"summary\"") != std::string::npos) summary_line = line;
    }
    if (summary_line.empty()) {
      fedsim::raise(fedsim::errc::missing_metrics, path + " has no summary record");
    }
    Row row;
    row.name = std::filesystem::path(path).stem().string();
    try {
      json summary = json::parse(summary_line);
      const json& eval = summary.at("eval");
      row.average = eval.at("step_accuracy").get<double>();
      const char* key = args.by == "category" ? "by_category" : "by_app";
      for (const auto& [label, entry] : eval.at(key).items()) {
        row.accuracy[label] = entry.at("step_accuracy").get<double>();
        labels.insert(label);
      }
    } catch (const json::exception& e) {
      fedsim::raise(fedsim::errc::missing_metrics,
                    path + ": malformed summary record (" + e.what() + ")");
    }
    rows.push_back(std::move(row));
  }
  std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return a.name < b.name; });

  // apps alphabetical; categories in their canonical order
  std::vector<std::string> columns(labels.begin(), labels.end());
  if (args.by == "category") {
    std::sort(columns.begin(), columns.end(), [](const std::string& a, const std::string& b) {
      auto ca = fedsim::category_from_name(a);
      auto cb = fedsim::category_from_name(b);
      int ia = ca ? static_cast<int>(*ca) : fedsim::kNumCategories;
      int ib = cb ? static_cast<int>(*cb) : fedsim::kNumCategories;
      if (ia != ib) return ia < ib;
      return a < b;
    });
  }

  std::ostringstream csv;
  csv << "run";
  for (const std::string& label : columns) csv << ',' << label;
  csv << ",Avg.\n";
  char cell[32];
  for (const Row& row : rows) {
    csv << row.name;
    for (const std::string& label : columns) {
      auto it = row.accuracy.find(label);
      if (it == row.accuracy.end()) {
        csv << ',';
      } else {
        std::snprintf(cell, sizeof(cell), "%.2f", 100.0 * it->second);
        csv << ',' << cell;
      }
    }
    std::snprintf(cell, sizeof(cell), "%.2f", 100.0 * row.average);
    csv << ',' << cell << '\n';
  }
  if (args.out.empty()) {
    std::cout << csv.str();
  } else {
    write_text_atomic(args.out, csv.str());
    std::cout << "wrote " << args.out << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Federated-learning simulation engine for episode-structured agent data"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  GenDataArgs gen_args;
  CLI::App* gen = app.add_subcommand("gen-data", "Synthesize a dataset file");
  gen->add_option("--preset", gen_args.preset, "Dataset preset")
      ->check(CLI::IsMember(fedsim::preset_names()));
  gen->add_option("--episodes", gen_args.episodes, "Episode count (custom profile)");
  gen->add_option("--apps", gen_args.apps, "Custom profile `App:weight,App:weight,...`");
  gen->add_option("--mean-steps", gen_args.mean_steps, "Mean episode length (custom profile)");
  gen->add_option("--noise", gen_args.noise, "Mid-step label noise rate")
      ->check(CLI::Range(0.0, 1.0));
  gen->add_option("--seed", gen_args.seed, "Generator seed");
  gen->add_option("--out", gen_args.out, "Training dataset path")->required();
  gen->add_option("--test-out", gen_args.test_out, "Companion test split path");

  PartitionArgs part_args;
  CLI::App* part = app.add_subcommand("partition", "Assign episodes to clients");
  part->add_option("--data", part_args.data, "Dataset file")->required();
  part->add_option("--scheme", part_args.scheme, "family[/variant], e.g. app-level/skew");
  part->add_option("--clients", part_args.clients, "Client count");
  part->add_option("--seed", part_args.seed, "Scheme seed");
  part->add_option("--out", part_args.out, "Assignment file")->required();
  part->add_option("--heatmap", part_args.heatmap, "Distribution heatmap CSV");
  part->add_option("--axis", part_args.axis, "Heatmap axis: app|category|auto")
      ->check(CLI::IsMember({"app", "category", "auto"}));
  part->add_option("--catalog", part_args.catalog, "Catalog overlay (app<TAB>category)");

  TrainArgs train_args;
  CLI::App* train = app.add_subcommand("train", "Run a federated or baseline experiment");
  train->add_option("--config", train_args.config, "key=value config file; flags win");
  train->add_option("--data", train_args.data, "Training dataset");
  train->add_option("--assign", train_args.assign, "Assignment file");
  train->add_option("--test", train_args.test, "Test dataset");
  train->add_option("--catalog", train_args.catalog, "Catalog overlay");
  train->add_option("--algorithm", train_args.algorithm,
                    "zero_shot|central|local_k|fedavg|fedprox|fedavgm|fedadagrad|fedadam|"
                    "fedyogi|scaffold|fedmobileagent");
  train->add_option("--rounds", train_args.rounds, "Communication rounds");
  train->add_option("--clients-per-round", train_args.clients_per_round, "Clients per round");
  train->add_option("--subsample", train_args.subsample, "Per-client episode fraction per round");
  train->add_option("--lr", train_args.lr, "Local learning rate");
  train->add_option("--epochs", train_args.epochs, "Local epochs");
  train->add_option("--batch-size", train_args.batch_size, "Local batch size");
  train->add_option("--mu", train_args.mu, "FedProx proximal coefficient");
  train->add_option("--lambda", train_args.lambda, "FedMobileAgent episode weight");
  train->add_option("--beta1", train_args.beta1, "Adaptive server beta1");
  train->add_option("--beta2", train_args.beta2, "Adaptive server beta2");
  train->add_option("--eta", train_args.eta, "Adaptive server learning rate");
  train->add_option("--tau", train_args.tau, "Adaptive server stabilization constant");
  train->add_option("--eta-s", train_args.eta_s, "SCAFFOLD server learning rate");
  train->add_option("--server-momentum", train_args.server_momentum,
                    "FedAvgM history interpolation");
  train->add_option("--feature-dim", train_args.feature_dim, "Model feature dimension");
  train->add_option("--arg-vocab", train_args.arg_vocab, "Argument vocabulary slots");
  train->add_option("--tfidf-threshold", train_args.tfidf_threshold, "Step-match threshold");
  train->add_option("--seed", train_args.seed, "Experiment seed");
  train->add_option("--local-k", train_args.local_k, "Client index for --algorithm local_k");
  train->add_option("--threads", train_args.threads, "Parallel client-training cap")
      ->check(CLI::PositiveNumber);
  train->add_flag("--low-level", train_args.low_level, "Provide subgoals as model input");
  train->add_flag("--eval-each-round", train_args.eval_each_round, "Evaluate every round");
  train->add_option("--metrics-out", train_args.metrics_out, "Metrics JSONL path");
  train->add_option("--checkpoint-out", train_args.checkpoint_out, "Server checkpoint path");
  train->add_option("--manifest-out", train_args.manifest_out, "Run manifest path");

  EvaluateArgs eval_args;
  CLI::App* evaluate = app.add_subcommand("evaluate", "Score a checkpoint on a test set");
  evaluate->add_option("--checkpoint", eval_args.checkpoint, "Server checkpoint")->required();
  evaluate->add_option("--test", eval_args.test, "Test dataset")->required();
  evaluate->add_option("--catalog", eval_args.catalog, "Catalog overlay");
  evaluate->add_option("--threshold", eval_args.threshold, "Step-match threshold");
  evaluate->add_flag("--low-level", eval_args.low_level, "Provide subgoals as model input");
  evaluate->add_option("--out", eval_args.out, "Report JSON path");
  evaluate->add_option("--steps-csv", eval_args.steps_csv, "Per-step results CSV path");

  StatsArgs stats_args;
  CLI::App* stats = app.add_subcommand("stats", "Print dataset statistics");
  stats->add_option("--data", stats_args.data, "Dataset file")->required();
  stats->add_option("--catalog", stats_args.catalog, "Catalog overlay");

  ReportArgs report_args;
  CLI::App* report = app.add_subcommand("report", "Tabulate metrics files as CSV");
  report->add_option("metrics", report_args.metrics, "Metrics JSONL files");
  report->add_option("--by", report_args.by, "Column axis: app|category")
      ->check(CLI::IsMember({"app", "category"}));
  report->add_option("--out", report_args.out, "CSV output path (stdout when omitted)");

  try {
    app.parse(argc, argv);
    if (gen->parsed()) return run_gen_data(gen_args);
    if (part->parsed()) return run_partition(part_args);
    if (train->parsed()) {
      if (!train_args.config.empty()) merge_config_file(train, train_args);
      return run_train(train_args);
    }
    if (evaluate->parsed()) return run_evaluate(eval_args);
    if (stats->parsed()) return run_stats(stats_args);
    if (report->parsed()) return run_report(report_args);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help / --version
    app.exit(e);
    return 2;
  } catch (const fedsim::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

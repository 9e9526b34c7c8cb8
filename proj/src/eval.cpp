#include "fedsim/eval.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>

#include "fedsim/error.hpp"
#include "fedsim/text.hpp"

namespace fedsim {

namespace {

double idf_value(const IdfMap& idf, const std::string& token, double df0_value) {
  auto it = idf.find(token);
  return it == idf.end() ? df0_value : it->second;
}

std::map<std::string, double> tf_counts(const std::string& text) {
  std::map<std::string, double> tf;
  for (const std::string& token : tokenize(text)) tf[token] += 1.0;
  return tf;
}

}  // namespace

IdfMap build_idf(const std::vector<std::string>& corpus) {
  if (corpus.empty()) raise(errc::empty_corpus, "idf corpus is empty");
  std::map<std::string, std::int64_t> df;
  for (const std::string& doc : corpus) {
    std::set<std::string> seen;
    for (const std::string& token : tokenize(doc)) seen.insert(token);
    for (const std::string& token : seen) df[token] += 1;
  }
  IdfMap idf;
  auto n = static_cast<double>(corpus.size());
  for (const auto& [token, count] : df) {
    idf[token] = std::log((1.0 + n) / (1.0 + static_cast<double>(count))) + 1.0;
  }
  // Stash N so unseen tokens can use the df = 0 smoothing consistently.
  idf[""] = n;
  return idf;
}

double tfidf_similarity(const std::string& a, const std::string& b, const IdfMap& idf) {
  std::map<std::string, double> tf_a = tf_counts(a);
  std::map<std::string, double> tf_b = tf_counts(b);
  if (tf_a.empty() || tf_b.empty()) return 0.0;

  double n = idf.count("") ? idf.at("") : 0.0;
  double df0 = std::log(1.0 + n) + 1.0;

  double dot = 0.0, norm_a = 0.0, norm_b = 0.0;
  for (const auto& [token, tf] : tf_a) {
    double w = tf * idf_value(idf, token, df0);
    norm_a += w * w;
    auto it = tf_b.find(token);
    if (it != tf_b.end()) dot += w * it->second * idf_value(idf, token, df0);
  }
  for (const auto& [token, tf] : tf_b) {
    double w = tf * idf_value(idf, token, df0);
    norm_b += w * w;
  }
  if (norm_a == 0.0 || norm_b == 0.0) return 0.0;
  return dot / (std::sqrt(norm_a) * std::sqrt(norm_b));
}

EvalReport assemble_report(const std::vector<StepResult>& steps,
                           const std::map<std::string, std::string>& app_of_episode,
                           const std::map<std::string, std::string>& category_of_episode) {
  EvalReport report;
  std::map<std::string, bool> episode_all_correct;
  for (const StepResult& step : steps) {
    report.n_steps += 1;
    auto [it, inserted] = episode_all_correct.try_emplace(step.episode_id, true);
    if (!step.correct) it->second = false;

    auto app_it = app_of_episode.find(step.episode_id);
    std::string app = app_it == app_of_episode.end() ? std::string() : app_it->second;
    AppAccuracy& by_app = report.by_app[app];
    by_app.n_steps += 1;
    by_app.n_correct += step.correct ? 1 : 0;

    auto cat_it = category_of_episode.find(step.episode_id);
    std::string category =
        cat_it == category_of_episode.end() ? std::string("Unknown") : cat_it->second;
    AppAccuracy& by_cat = report.by_category[category];
    by_cat.n_steps += 1;
    by_cat.n_correct += step.correct ? 1 : 0;
  }

  report.n_episodes = static_cast<std::int64_t>(episode_all_correct.size());
  std::int64_t correct_steps = 0;
  for (const StepResult& step : steps) correct_steps += step.correct ? 1 : 0;
  std::int64_t correct_episodes = 0;
  for (const auto& [id, all_correct] : episode_all_correct) {
    correct_episodes += all_correct ? 1 : 0;
  }
  report.step_accuracy =
      report.n_steps > 0 ? static_cast<double>(correct_steps) / static_cast<double>(report.n_steps)
                         : 0.0;
  report.episode_accuracy = report.n_episodes > 0 ? static_cast<double>(correct_episodes) /
                                                        static_cast<double>(report.n_episodes)
                                                  : 0.0;
  for (auto& [app, acc] : report.by_app) {
    acc.step_accuracy =
        acc.n_steps > 0 ? static_cast<double>(acc.n_correct) / static_cast<double>(acc.n_steps)
                        : 0.0;
  }
  for (auto& [cat, acc] : report.by_category) {
    acc.step_accuracy =
        acc.n_steps > 0 ? static_cast<double>(acc.n_correct) / static_cast<double>(acc.n_steps)
                        : 0.0;
  }
  return report;
}

EvalReport evaluate(const ParamVector& params, const Dataset& test_set, const ModelConfig& cfg,
                    const EvalConfig& eval_cfg) {
  if (test_set.empty()) raise(errc::empty_test_set, "test set is empty");

  std::vector<std::string> corpus;
  for (const Episode& ep : test_set) {
    for (const Step& step : ep.steps) corpus.push_back(gold_response(step, cfg));
  }
  IdfMap idf = build_idf(corpus);

  std::vector<StepResult> steps;
  std::map<std::string, std::string> app_of_episode;
  std::map<std::string, std::string> category_of_episode;
  for (const Episode& ep : test_set) {
    app_of_episode[ep.episode_id] = ep.app;
    category_of_episode[ep.episode_id] = category_name(ep.category);
    for (const Step& step : ep.steps) {
      StepResult result;
      result.episode_id = ep.episode_id;
      result.step_index = step.index;
      result.predicted = predict_response(params, ep, step, cfg, eval_cfg.low_level);
      result.gold = gold_response(step, cfg);
      result.similarity = tfidf_similarity(result.predicted, result.gold, idf);
      // The canonical serialization is `<action_type> arg<slot>`; the action
      // part is everything before the final space.
      auto action_of = [](const std::string& text) {
        std::size_t pos = text.rfind(' ');
        return pos == std::string::npos ? text : text.substr(0, pos);
      };
      bool action_match = action_of(result.predicted) == action_of(result.gold);
      result.correct = action_match && result.similarity >= eval_cfg.threshold;
      steps.push_back(std::move(result));
    }
  }
  EvalReport report = assemble_report(steps, app_of_episode, category_of_episode);
  if (eval_cfg.keep_steps) report.steps = std::move(steps);
  return report;
}

void save_step_results_csv(const std::vector<StepResult>& steps, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) raise(errc::io_error, "cannot write step results: " + path);
  out << "episode_id,step_index,predicted,gold,similarity,correct\n";
  char sim[32];
  for (const StepResult& step : steps) {
    std::snprintf(sim, sizeof(sim), "%.6f", step.similarity);
    out << step.episode_id << ',' << step.step_index << ',' << step.predicted << ','
        << step.gold << ',' << sim << ',' << (step.correct ? 1 : 0) << '\n';
  }
  if (!out) raise(errc::io_error, "write failed: " + path);
}

}  // namespace fedsim

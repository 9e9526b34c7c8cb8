#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "fedsim/episode.hpp"
#include "fedsim/model.hpp"

namespace fedsim {

using IdfMap = std::map<std::string, double>;

// idf(t) = ln((1 + N) / (1 + df(t))) + 1 over the corpus documents. Tokens
// outside the corpus fall back to the df = 0 value of the same formula.
IdfMap build_idf(const std::vector<std::string>& corpus);

// Cosine similarity of tf*idf vectors under the shared tokenizer; 0 when
// either side has no tokens.
double tfidf_similarity(const std::string& a, const std::string& b, const IdfMap& idf);

struct StepResult {
  std::string episode_id;
  int step_index = 0;
  std::string predicted;
  std::string gold;
  double similarity = 0.0;
  bool correct = false;
};

struct AppAccuracy {
  double step_accuracy = 0.0;
  std::int64_t n_steps = 0;
  std::int64_t n_correct = 0;
};

struct EvalReport {
  double step_accuracy = 0.0;
  double episode_accuracy = 0.0;
  std::map<std::string, AppAccuracy> by_app;
  std::map<std::string, AppAccuracy> by_category;
  std::int64_t n_steps = 0;
  std::int64_t n_episodes = 0;
  std::vector<StepResult> steps;  // populated when keep_steps is set
};

struct EvalConfig {
  double threshold = 0.5;  // TF-IDF gate; exact action-type match is always required
  bool low_level = false;
  bool keep_steps = false;
};

// Rolls planted per-step results into a report. Episode grouping follows
// episode_id; a step is correct iff the action-type tokens match and the
// similarity clears the threshold (already reflected in `correct`).
EvalReport assemble_report(const std::vector<StepResult>& steps,
                           const std::map<std::string, std::string>& app_of_episode,
                           const std::map<std::string, std::string>& category_of_episode);

// Predicts every step of the test set with the model and scores it against
// the gold serialization. The IDF table is built from the test set's gold
// responses. Raises EmptyTestSet.
EvalReport evaluate(const ParamVector& params, const Dataset& test_set, const ModelConfig& cfg,
                    const EvalConfig& eval_cfg);

// CSV of per-step results: episode_id,step_index,predicted,gold,similarity,correct.
void save_step_results_csv(const std::vector<StepResult>& steps, const std::string& path);

}  // namespace fedsim

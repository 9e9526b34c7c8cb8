#include "fedsim/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fedsim/error.hpp"
#include "fedsim/rng.hpp"
#include "fedsim/text.hpp"

namespace fedsim {

namespace {

void hash_token(std::vector<double>& features, std::string_view ns, std::string_view token) {
  std::uint64_t h = fnv1a64_mix(fnv1a64(ns), fnv1a64(token));
  auto slot = static_cast<std::size_t>(h % features.size());
  double sign = (h >> 63) ? -1.0 : 1.0;
  features[slot] += sign;
}

int argmax_head(const ParamVector& params, const std::vector<double>& x, std::size_t w_base,
                std::size_t b_base, int n_classes, int d) {
  int best = 0;
  double best_score = 0.0;
  for (int k = 0; k < n_classes; ++k) {
    const double* w = params.values.data() + w_base + static_cast<std::size_t>(k) * d;
    double score = params.values[b_base + static_cast<std::size_t>(k)];
    for (int j = 0; j < d; ++j) score += w[j] * x[static_cast<std::size_t>(j)];
    if (k == 0 || score > best_score) {
      best = k;
      best_score = score;
    }
  }
  return best;
}

// Softmax CE for one head; accumulates dL/dlogit into `delta`.
double head_loss_delta(const ParamVector& params, const std::vector<double>& x,
                       std::size_t w_base, std::size_t b_base, int n_classes, int d, int label,
                       std::vector<double>& delta) {
  std::vector<double> logits(static_cast<std::size_t>(n_classes));
  double max_logit = -1e300;
  for (int k = 0; k < n_classes; ++k) {
    const double* w = params.values.data() + w_base + static_cast<std::size_t>(k) * d;
    double z = params.values[b_base + static_cast<std::size_t>(k)];
    for (int j = 0; j < d; ++j) z += w[j] * x[static_cast<std::size_t>(j)];
    logits[static_cast<std::size_t>(k)] = z;
    max_logit = std::max(max_logit, z);
  }
  double sum = 0.0;
  for (double z : logits) sum += std::exp(z - max_logit);
  double log_sum = std::log(sum) + max_logit;
  for (int k = 0; k < n_classes; ++k) {
    double p = std::exp(logits[static_cast<std::size_t>(k)] - log_sum);
    delta[static_cast<std::size_t>(k)] = p - (k == label ? 1.0 : 0.0);
  }
  return log_sum - logits[static_cast<std::size_t>(label)];
}

}  // namespace

std::vector<double> featurize_step(const Episode& episode, const Step& step, int feature_dim,
                                   bool low_level) {
  if (feature_dim < 16) raise(errc::invalid_spec, "feature_dim must be >= 16");
  std::vector<double> features(static_cast<std::size_t>(feature_dim), 0.0);

  if (!episode.app.empty()) hash_token(features, "app", normalize_app_key(episode.app));
  hash_token(features, "cat", category_name(episode.category));
  for (const std::string& token : tokenize(episode.instruction)) {
    hash_token(features, "ins", token);
  }
  hash_token(features, "bkt", std::to_string(std::min(step.index, 8)));
  if (low_level) {
    for (const std::string& token : tokenize(step.subgoal)) hash_token(features, "sub", token);
  }

  double norm_sq = 0.0;
  for (double v : features) norm_sq += v * v;
  if (norm_sq == 0.0) {
    features[0] = 1.0;  // degenerate token-free step
    return features;
  }
  double inv = 1.0 / std::sqrt(norm_sq);
  for (double& v : features) v *= inv;
  return features;
}

int arg_token(const std::string& action_args, int arg_vocab) {
  std::uint64_t h = fnv1a64(to_lower(collapse_whitespace(action_args)));
  return static_cast<int>(h % static_cast<std::uint64_t>(arg_vocab));
}

TrainExample make_example(const Episode& episode, const Step& step, const ModelConfig& cfg,
                          bool low_level) {
  TrainExample example;
  example.features = featurize_step(episode, step, cfg.feature_dim, low_level);
  example.action_label = static_cast<int>(step.action_type);
  example.arg_label = arg_token(step.action_args, cfg.arg_vocab);
  return example;
}

LossGrad loss_and_grad(const ParamVector& params, const std::vector<TrainExample>& batch,
                       const ModelConfig& cfg, const ParamVector& global_params, double mu,
                       const std::vector<double>* control_correction) {
  const ParamLayout layout(cfg);
  const int D = cfg.param_dim();
  if (params.dim() != D || global_params.dim() != D) {
    raise(errc::dimension_mismatch, "params dim " + std::to_string(params.dim()) +
                                        " does not match model dim " + std::to_string(D));
  }
  if (control_correction && static_cast<int>(control_correction->size()) != D) {
    raise(errc::dimension_mismatch, "control correction dim mismatch");
  }
  if (batch.empty()) raise(errc::invalid_spec, "batch is empty");

  LossGrad out;
  out.grad.assign(static_cast<std::size_t>(D), 0.0);
  double inv_n = 1.0 / static_cast<double>(batch.size());

  std::vector<double> delta_action(kNumActionTypes);
  std::vector<double> delta_arg(static_cast<std::size_t>(cfg.arg_vocab));
  for (const TrainExample& example : batch) {
    if (static_cast<int>(example.features.size()) != cfg.feature_dim) {
      raise(errc::dimension_mismatch, "feature dim mismatch in batch");
    }
    out.loss += head_loss_delta(params, example.features, layout.action_w(0),
                                layout.action_b(0), layout.K, layout.d, example.action_label,
                                delta_action) *
                inv_n;
    out.loss += head_loss_delta(params, example.features, layout.arg_w(0), layout.arg_b(0),
                                layout.V, layout.d, example.arg_label, delta_arg) *
                inv_n;
    for (int k = 0; k < layout.K; ++k) {
      double g = delta_action[static_cast<std::size_t>(k)] * inv_n;
      double* grad_w = out.grad.data() + layout.action_w(k);
      for (int j = 0; j < layout.d; ++j) grad_w[j] += g * example.features[static_cast<std::size_t>(j)];
      out.grad[layout.action_b(k)] += g;
    }
    for (int v = 0; v < layout.V; ++v) {
      double g = delta_arg[static_cast<std::size_t>(v)] * inv_n;
      double* grad_w = out.grad.data() + layout.arg_w(v);
      for (int j = 0; j < layout.d; ++j) grad_w[j] += g * example.features[static_cast<std::size_t>(j)];
      out.grad[layout.arg_b(v)] += g;
    }
  }

  if (mu != 0.0) {
    double prox = 0.0;
    for (int i = 0; i < D; ++i) {
      double diff = params.values[static_cast<std::size_t>(i)] -
                    global_params.values[static_cast<std::size_t>(i)];
      prox += diff * diff;
      out.grad[static_cast<std::size_t>(i)] += mu * diff;
    }
    out.loss += 0.5 * mu * prox;
  }
  if (control_correction) {
    for (int i = 0; i < D; ++i) {
      out.grad[static_cast<std::size_t>(i)] += (*control_correction)[static_cast<std::size_t>(i)];
    }
  }
  return out;
}

LocalUpdate local_train(const ParamVector& params,
                        const std::vector<const Episode*>& client_episodes,
                        const LocalTrainConfig& cfg, const ModelConfig& model_cfg,
                        const ParamVector& global_params,
                        const std::vector<double>* control_correction, bool low_level) {
  if (client_episodes.empty()) raise(errc::empty_client, "client has no episodes");
  if (cfg.batch_size < 1) raise(errc::invalid_spec, "batch_size must be >= 1");
  if (!(cfg.subsample_fraction > 0.0 && cfg.subsample_fraction <= 1.0)) {
    raise(errc::invalid_spec, "subsample_fraction must be in (0, 1]");
  }

  LocalUpdate update;
  update.new_params = params;
  if (cfg.epochs == 0) return update;  // no-op training: zero counts reported

  // Seeded subsample of ceil(f * E) episodes.
  auto n_take = static_cast<std::size_t>(std::ceil(
      cfg.subsample_fraction * static_cast<double>(client_episodes.size())));
  n_take = std::min(n_take, client_episodes.size());
  std::vector<std::size_t> order(client_episodes.size());
  std::iota(order.begin(), order.end(), 0);
  SplitMix64 sub_rng(derive_seed(cfg.seed, "subsample"));
  sub_rng.shuffle(order);

  std::vector<TrainExample> examples;
  for (std::size_t i = 0; i < n_take; ++i) {
    const Episode& ep = *client_episodes[order[i]];
    for (const Step& step : ep.steps) {
      examples.push_back(make_example(ep, step, model_cfg, low_level));
    }
  }
  update.n_episodes_trained = static_cast<std::int64_t>(n_take);
  update.n_steps_trained = static_cast<std::int64_t>(examples.size());

  std::vector<std::size_t> visit(examples.size());
  std::iota(visit.begin(), visit.end(), 0);
  double loss_sum = 0.0;
  std::int64_t loss_count = 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    SplitMix64 epoch_rng(derive_seed(cfg.seed, "epoch", static_cast<std::uint64_t>(epoch)));
    epoch_rng.shuffle(visit);
    for (std::size_t start = 0; start < visit.size();
         start += static_cast<std::size_t>(cfg.batch_size)) {
      std::size_t end = std::min(visit.size(), start + static_cast<std::size_t>(cfg.batch_size));
      std::vector<TrainExample> batch;
      batch.reserve(end - start);
      for (std::size_t i = start; i < end; ++i) batch.push_back(examples[visit[i]]);
      LossGrad lg = loss_and_grad(update.new_params, batch, model_cfg, global_params,
                                  cfg.prox_mu, control_correction);
      for (std::size_t i = 0; i < lg.grad.size(); ++i) {
        update.new_params.values[i] -= cfg.learning_rate * lg.grad[i];
      }
      loss_sum += lg.loss * static_cast<double>(end - start);
      loss_count += static_cast<std::int64_t>(end - start);
      update.n_sgd_steps += 1;
    }
  }
  update.mean_loss = loss_count > 0 ? loss_sum / static_cast<double>(loss_count) : 0.0;
  return update;
}

std::string predict_response(const ParamVector& params, const Episode& episode, const Step& step,
                             const ModelConfig& cfg, bool low_level) {
  const ParamLayout layout(cfg);
  if (params.dim() != cfg.param_dim()) {
    raise(errc::dimension_mismatch, "params dim does not match model config");
  }
  std::vector<double> x = featurize_step(episode, step, cfg.feature_dim, low_level);
  int action = argmax_head(params, x, layout.action_w(0), layout.action_b(0), layout.K, layout.d);
  int arg = argmax_head(params, x, layout.arg_w(0), layout.arg_b(0), layout.V, layout.d);
  return std::string(action_type_name(static_cast<ActionType>(action))) + " arg" +
         std::to_string(arg);
}

std::string gold_response(const Step& step, const ModelConfig& cfg) {
  return std::string(action_type_name(step.action_type)) + " arg" +
         std::to_string(arg_token(step.action_args, cfg.arg_vocab));
}

}  // namespace fedsim

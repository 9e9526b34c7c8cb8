#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fedsim/episode.hpp"

namespace fedsim {

// Linear softmax model over hashed step features: one head over the action
// types, one over a hashed argument vocabulary. Parameters are exchanged as a
// flat vector so every aggregation rule sees an opaque ParamVector.
struct ModelConfig {
  int feature_dim = 256;  // d (>= 16)
  int arg_vocab = 64;     // V

  int param_dim() const {
    return feature_dim * (kNumActionTypes + arg_vocab) + kNumActionTypes + arg_vocab;
  }
};

struct ParamVector {
  std::vector<double> values;

  static ParamVector zeros(int dim) {
    ParamVector p;
    p.values.assign(static_cast<std::size_t>(dim), 0.0);
    return p;
  }
  int dim() const { return static_cast<int>(values.size()); }
};

// Weight layout inside ParamVector:
//   [0, K*d)          action-head weights, row-major by class
//   [K*d, (K+V)*d)    argument-head weights
//   then K action biases, then V argument biases.
struct ParamLayout {
  int d, K, V;
  explicit ParamLayout(const ModelConfig& cfg)
      : d(cfg.feature_dim), K(kNumActionTypes), V(cfg.arg_vocab) {}
  std::size_t action_w(int k) const { return static_cast<std::size_t>(k) * d; }
  std::size_t arg_w(int v) const { return static_cast<std::size_t>(K + v) * d; }
  std::size_t action_b(int k) const { return static_cast<std::size_t>(K + V) * d + k; }
  std::size_t arg_b(int v) const { return static_cast<std::size_t>(K + V) * d + K + v; }
};

// Deterministic hashed bag-of-tokens features: app, category, instruction
// tokens and a step-index bucket; subgoal tokens are added when low_level is
// set. Unit L2 norm; a token-free step maps to the fixed basis vector e0.
std::vector<double> featurize_step(const Episode& episode, const Step& step, int feature_dim,
                                   bool low_level);

// Hashed argument-vocabulary slot for a step's action_args.
int arg_token(const std::string& action_args, int arg_vocab);

struct TrainExample {
  std::vector<double> features;
  int action_label = 0;
  int arg_label = 0;
};

TrainExample make_example(const Episode& episode, const Step& step, const ModelConfig& cfg,
                          bool low_level);

// Mean softmax cross-entropy over both heads, plus the (mu/2)*||w - w_global||^2
// proximal term. The gradient is the exact analytic gradient; when a control
// correction is supplied it is added to the gradient (it never enters the
// reported loss).
struct LossGrad {
  double loss = 0.0;
  std::vector<double> grad;
};

LossGrad loss_and_grad(const ParamVector& params, const std::vector<TrainExample>& batch,
                       const ModelConfig& cfg, const ParamVector& global_params, double mu,
                       const std::vector<double>* control_correction = nullptr);

struct LocalTrainConfig {
  double learning_rate = 2.0;  // sized for the 10-round x 10%-subsample budget
  int epochs = 3;
  int batch_size = 8;
  double prox_mu = 0.0;
  double subsample_fraction = 0.1;  // fraction of the client's episodes per round
  std::uint64_t seed = 0;
};

struct LocalUpdate {
  ParamVector new_params;
  std::int64_t n_steps_trained = 0;    // S_k
  std::int64_t n_episodes_trained = 0; // E_k
  std::int64_t n_sgd_steps = 0;        // batches processed across epochs
  double mean_loss = 0.0;
};

// Subsamples ceil(subsample_fraction * episodes) episodes by seed and runs
// `epochs` passes of mini-batch SGD over their steps. Pure function of its
// inputs. epochs == 0 returns the parameters untouched with zero counts.
LocalUpdate local_train(const ParamVector& params,
                        const std::vector<const Episode*>& client_episodes,
                        const LocalTrainConfig& cfg, const ModelConfig& model_cfg,
                        const ParamVector& global_params,
                        const std::vector<double>* control_correction = nullptr,
                        bool low_level = false);

// Canonical response serialization: `<action_type> arg<slot>`, both heads by
// argmax with ties broken toward the lowest index.
std::string predict_response(const ParamVector& params, const Episode& episode, const Step& step,
                             const ModelConfig& cfg, bool low_level);

// The same serialization applied to a step's ground truth.
std::string gold_response(const Step& step, const ModelConfig& cfg);

}  // namespace fedsim

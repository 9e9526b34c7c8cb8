#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "fedsim/episode.hpp"

namespace fedsim {

// Recipe for a deterministic synthetic dataset. `app_profile` is an ordered
// list so quota allocation (largest remainder over the weights) is stable.
// When `target_total_steps` is nonzero the drawn step counts are nudged by
// +-1 until the dataset total matches it exactly.
struct GenSpec {
  std::int64_t n_episodes = 0;
  std::vector<std::pair<std::string, double>> app_profile;
  double mean_steps = 6.7;
  std::uint64_t seed = 0;
  std::string id_prefix = "ep-";
  std::int64_t target_total_steps = 0;
  double noise_rate = 0.1;  // fraction of mid-episode steps with random labels
};

inline constexpr int kMaxEpisodeSteps = 30;

// Deterministic for a fixed spec: same spec+seed => identical datasets.
// Step counts follow a geometric distribution truncated to [1, 30] whose
// truncated mean equals `mean_steps`; instructions, subgoals and action
// arguments come from a fixed vocabulary conditioned on the app.
Dataset generate_synthetic_dataset(const GenSpec& spec,
                                   const AppCatalog& catalog = AppCatalog::builtin());

// Canonical episode lengths achievable by the truncated geometric.
double min_mean_steps();
double max_mean_steps();

}  // namespace fedsim

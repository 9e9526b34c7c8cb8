#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "fedsim/episode.hpp"

namespace fedsim {

enum class PartitionFamily : int {
  BasicIID = 0,
  StepEpisode,
  CategoryLevel,
  AppLevel,
  ScaleApp,
};

enum class PartitionVariant : int {
  IID = 0,
  EpisodeSkew,
  StepSkew,
  BothSkew,
  Skew,
  HalfSkew,
  NonUniform,
  AppSkew,
  AppRandom,
  Random,
};

struct PartitionScheme {
  PartitionFamily family = PartitionFamily::BasicIID;
  PartitionVariant variant = PartitionVariant::IID;
  int n_clients = 1;
  std::uint64_t seed = 0;
};

// Parses "family" or "family/variant" spellings, e.g. "category-level/skew",
// "step-episode/episode-skew", "basic-iid". Raises InvalidSpec for unknown
// names or a variant that is not legal for the family.
PartitionScheme parse_scheme(const std::string& text, int n_clients, std::uint64_t seed);
std::string scheme_name(const PartitionScheme& scheme);
std::vector<std::string> scheme_names();

struct PartitionAssignment {
  PartitionScheme scheme;
  std::unordered_map<std::string, int> client_of;
};

// Deterministic for fixed (dataset, scheme). Raises EmptyDataset or
// InfeasibleScheme (naming the violated requirement).
PartitionAssignment partition(const Dataset& dataset, const PartitionScheme& scheme);

struct VerifyReport {
  bool ok = true;
  std::vector<std::string> violations;
};

// Structural checks for the assignment's variant. Coverage problems (missing
// or unknown episodes, bad client index) raise CoverageMismatch; rule
// violations are reported with the offending client.
VerifyReport verify_partition(const Dataset& dataset, const PartitionAssignment& assignment);

enum class LabelAxis { App, Category };

struct DistributionMatrix {
  std::vector<std::string> labels;
  // counts[client][label] = episode count
  std::vector<std::vector<std::int64_t>> counts;
};

DistributionMatrix distribution_matrix(const Dataset& dataset,
                                       const PartitionAssignment& assignment, LabelAxis axis);

struct ClientCounts {
  std::int64_t episodes = 0;
  std::int64_t steps = 0;
};

std::vector<ClientCounts> client_counts(const Dataset& dataset,
                                        const PartitionAssignment& assignment);

// `episode_id<TAB>client_index` lines, dataset order.
void save_assignment(const Dataset& dataset, const PartitionAssignment& assignment,
                     const std::string& path);
std::unordered_map<std::string, int> load_assignment(const std::string& path);

// CSV heatmap: header row of labels, then one row per client.
void save_heatmap_csv(const DistributionMatrix& matrix, const std::string& path);

// Client shards in index order; raises CoverageMismatch on unknown ids.
std::vector<std::vector<const Episode*>> group_by_client(
    const Dataset& dataset, const std::unordered_map<std::string, int>& client_of,
    int n_clients);

}  // namespace fedsim

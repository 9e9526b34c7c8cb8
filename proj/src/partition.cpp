#include "fedsim/partition.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <set>

#include "fedsim/error.hpp"
#include "fedsim/rng.hpp"

namespace fedsim {

namespace {

struct VariantName {
  PartitionVariant variant;
  const char* name;
};

struct FamilyInfo {
  PartitionFamily family;
  const char* name;
  std::vector<VariantName> variants;
};

const std::vector<FamilyInfo>& family_table() {
  static const std::vector<FamilyInfo> table = {
      {PartitionFamily::BasicIID, "basic-iid", {{PartitionVariant::IID, "iid"}}},
      {PartitionFamily::StepEpisode,
       "step-episode",
       {{PartitionVariant::IID, "iid"},
        {PartitionVariant::EpisodeSkew, "episode-skew"},
        {PartitionVariant::StepSkew, "step-skew"},
        {PartitionVariant::BothSkew, "both-skew"}}},
      {PartitionFamily::CategoryLevel,
       "category-level",
       {{PartitionVariant::IID, "iid"},
        {PartitionVariant::Skew, "skew"},
        {PartitionVariant::HalfSkew, "half-skew"},
        {PartitionVariant::NonUniform, "non-uniform"},
        {PartitionVariant::AppSkew, "app-skew"},
        {PartitionVariant::AppRandom, "app-random"}}},
      {PartitionFamily::AppLevel,
       "app-level",
       {{PartitionVariant::IID, "iid"},
        {PartitionVariant::Skew, "skew"},
        {PartitionVariant::HalfSkew, "half-skew"},
        {PartitionVariant::NonUniform, "non-uniform"}}},
      {PartitionFamily::ScaleApp,
       "scaleapp",
       {{PartitionVariant::IID, "iid"},
        {PartitionVariant::Skew, "skew"},
        {PartitionVariant::Random, "random"}}},
  };
  return table;
}

std::vector<std::size_t> iota_indices(std::size_t n) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  return idx;
}

std::int64_t episode_len(const Episode& ep) { return static_cast<std::int64_t>(ep.n_steps()); }

// Episode order used by the deterministic constructions: length descending,
// id ascending as the tiebreak.
std::vector<std::size_t> by_length_desc(const Dataset& dataset) {
  auto idx = iota_indices(dataset.size());
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    if (dataset[a].n_steps() != dataset[b].n_steps())
      return dataset[a].n_steps() > dataset[b].n_steps();
    return dataset[a].episode_id < dataset[b].episode_id;
  });
  return idx;
}

// Descending geometric target shares (client 0 largest), summing to `sum`.
std::vector<double> geometric_targets(int n_clients, double ratio, double sum) {
  std::vector<double> weights(static_cast<std::size_t>(n_clients));
  double total = 0.0;
  for (int k = 0; k < n_clients; ++k) {
    weights[static_cast<std::size_t>(k)] = std::pow(ratio, n_clients - 1 - k);
    total += weights[static_cast<std::size_t>(k)];
  }
  for (double& w : weights) w = w / total * sum;
  return weights;
}

// Integer counts from weights by largest remainder, ties to lowest index.
std::vector<std::int64_t> integer_shares(const std::vector<double>& weights, std::int64_t n) {
  double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  std::vector<std::int64_t> counts(weights.size(), 0);
  std::vector<double> frac(weights.size(), 0.0);
  std::int64_t assigned = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    double share = n * weights[i] / total;
    counts[i] = static_cast<std::int64_t>(std::floor(share));
    frac[i] = share - static_cast<double>(counts[i]);
    assigned += counts[i];
  }
  auto order = iota_indices(weights.size());
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return frac[a] > frac[b]; });
  for (std::int64_t k = 0; k < n - assigned; ++k) counts[order[static_cast<std::size_t>(k)]] += 1;
  return counts;
}

// Splits `n` items of one label across clients. `capacity` is each client's
// remaining episode budget and `reserve` the number of labels still to come
// after this one: a client may not spend below its reserve, so it can still
// take at least one item of every later label. Every client with headroom
// gets at least one item when `n` allows. Weights guide the rest.
std::vector<std::int64_t> capacity_allocate(std::int64_t n, const std::vector<double>& weights,
                                            std::vector<std::int64_t>& capacity,
                                            std::int64_t reserve) {
  std::size_t m = weights.size();
  std::vector<std::int64_t> max_take(m, 0);
  std::int64_t open_clients = 0;
  for (std::size_t k = 0; k < m; ++k) {
    max_take[k] = std::max<std::int64_t>(0, capacity[k] - reserve);
    open_clients += (max_take[k] > 0) ? 1 : 0;
  }

  std::vector<std::int64_t> out(m, 0);
  std::int64_t remaining = n;
  if (remaining >= open_clients) {
    for (std::size_t k = 0; k < m; ++k) {
      if (max_take[k] > 0) {
        out[k] = 1;
        --remaining;
      }
    }
  }

  double weight_total = 0.0;
  for (std::size_t k = 0; k < m; ++k) {
    if (max_take[k] > out[k]) weight_total += weights[k];
  }
  std::vector<double> frac(m, 0.0);
  if (weight_total > 0.0) {
    for (std::size_t k = 0; k < m; ++k) {
      if (max_take[k] <= out[k]) continue;
      double share = remaining * weights[k] / weight_total;
      auto extra = std::min<std::int64_t>(static_cast<std::int64_t>(std::floor(share)),
                                          max_take[k] - out[k]);
      out[k] += extra;
      frac[k] = share - std::floor(share);
    }
    remaining = n;
    for (std::size_t k = 0; k < m; ++k) remaining -= out[k];
  }
  // Hand out the remainder by largest fraction, cycling while headroom lasts.
  auto order = iota_indices(m);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return frac[a] > frac[b]; });
  while (remaining > 0) {
    bool moved = false;
    for (std::size_t k : order) {
      if (remaining == 0) break;
      if (out[k] < max_take[k]) {
        out[k] += 1;
        --remaining;
        moved = true;
      }
    }
    if (!moved) raise(errc::infeasible_scheme, "allocation exceeded client capacity");
  }
  for (std::size_t k = 0; k < m; ++k) capacity[k] -= out[k];
  return out;
}

std::string label_of(const Episode& ep, LabelAxis axis) {
  return axis == LabelAxis::App ? ep.app : std::string(category_name(ep.category));
}

// Labels ranked by episode count descending; ties broken by canonical order
// (alphabetical apps, enum-ordered categories).
struct RankedLabels {
  std::vector<std::string> labels;                       // rank -> label
  std::map<std::string, std::vector<std::size_t>> members;  // label -> episode indices
};

RankedLabels rank_labels(const Dataset& dataset, LabelAxis axis) {
  RankedLabels ranked;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    ranked.members[label_of(dataset[i], axis)].push_back(i);
  }
  std::vector<std::string> canonical;
  if (axis == LabelAxis::App) {
    for (const auto& [label, members] : ranked.members) canonical.push_back(label);
  } else {
    for (int c = 0; c < kNumCategories; ++c) {
      std::string name = category_name(static_cast<Category>(c));
      if (ranked.members.count(name)) canonical.push_back(name);
    }
  }
  std::stable_sort(canonical.begin(), canonical.end(), [&](const auto& a, const auto& b) {
    return ranked.members.at(a).size() > ranked.members.at(b).size();
  });
  ranked.labels = std::move(canonical);
  return ranked;
}

using Assign = std::vector<int>;  // episode index -> client

// -- Family builders ---------------------------------------------------------

Assign build_basic_iid(const Dataset& dataset, const PartitionScheme& scheme) {
  auto idx = iota_indices(dataset.size());
  SplitMix64 rng(derive_seed(scheme.seed, "basic-iid"));
  rng.shuffle(idx);
  Assign assign(dataset.size(), 0);
  for (std::size_t pos = 0; pos < idx.size(); ++pos) {
    assign[idx[pos]] = static_cast<int>(pos % static_cast<std::size_t>(scheme.n_clients));
  }
  return assign;
}

Assign build_step_episode(const Dataset& dataset, const PartitionScheme& scheme) {
  const int K = scheme.n_clients;
  const auto N = static_cast<std::int64_t>(dataset.size());
  std::int64_t total_steps = 0;
  for (const Episode& ep : dataset) total_steps += episode_len(ep);
  Assign assign(dataset.size(), -1);

  if (scheme.variant == PartitionVariant::IID) {
    // Balance episode counts strictly and step totals greedily.
    std::vector<std::int64_t> episodes(K, 0), steps(K, 0);
    for (std::size_t i : by_length_desc(dataset)) {
      int best = 0;
      for (int k = 1; k < K; ++k) {
        if (episodes[k] < episodes[best] ||
            (episodes[k] == episodes[best] && steps[k] < steps[best])) {
          best = k;
        }
      }
      assign[i] = best;
      episodes[best] += 1;
      steps[best] += episode_len(dataset[i]);
    }
    return assign;
  }

  // The fixed skew profiles cannot reach the CV >= 0.3 contract below these
  // client counts (a lone client has CV 0; the 1.5-ratio profile tops out at
  // CV 0.2 for two).
  if ((scheme.variant == PartitionVariant::StepSkew ||
       scheme.variant == PartitionVariant::BothSkew) &&
      K < 3) {
    raise(errc::infeasible_scheme, "step/both skew needs at least 3 clients");
  }
  if (scheme.variant == PartitionVariant::EpisodeSkew && K < 2) {
    raise(errc::infeasible_scheme, "episode skew needs at least 2 clients");
  }

  if (scheme.variant == PartitionVariant::StepSkew) {
    // Equal episode quotas; step totals pushed toward a geometric profile
    // (ratio 1.5 between adjacent clients, client 0 largest).
    std::vector<std::int64_t> quota(K, N / K);
    for (std::int64_t k = 0; k < N % K; ++k) quota[static_cast<std::size_t>(k)] += 1;
    std::vector<double> target =
        geometric_targets(K, 1.5, static_cast<double>(total_steps));
    std::vector<std::int64_t> steps(K, 0);
    for (std::size_t i : by_length_desc(dataset)) {
      int best = -1;
      double best_deficit = 0.0;
      for (int k = 0; k < K; ++k) {
        if (quota[k] == 0) continue;
        double deficit = target[k] - static_cast<double>(steps[k]);
        if (best < 0 || deficit > best_deficit) {
          best = k;
          best_deficit = deficit;
        }
      }
      assign[i] = best;
      quota[best] -= 1;
      steps[best] += episode_len(dataset[i]);
    }
    return assign;
  }

  if (scheme.variant == PartitionVariant::EpisodeSkew) {
    // Episode counts follow a 4:1 staircase; step totals equalized by giving
    // long episodes to the low-count clients.
    std::vector<double> stair(K);
    for (int k = 0; k < K; ++k) {
      stair[k] = (K == 1) ? 1.0 : 4.0 - 3.0 * static_cast<double>(k) / (K - 1);
    }
    std::vector<std::int64_t> quota = integer_shares(stair, N);
    double target = static_cast<double>(total_steps) / K;
    std::vector<std::int64_t> steps(K, 0);
    std::vector<std::int64_t> left = quota;
    for (std::size_t i : by_length_desc(dataset)) {
      int best = -1;
      double best_score = 0.0;
      for (int k = 0; k < K; ++k) {
        if (left[k] == 0) continue;
        double score = (target - static_cast<double>(steps[k])) / static_cast<double>(left[k]);
        if (best < 0 || score > best_score) {
          best = k;
          best_score = score;
        }
      }
      assign[i] = best;
      left[best] -= 1;
      steps[best] += episode_len(dataset[i]);
    }
    // Swap refinement: trade one episode between the most-over and most-under
    // clients while it tightens the step-total band.
    for (int pass = 0; pass < 200; ++pass) {
      int over = 0, under = 0;
      for (int k = 1; k < K; ++k) {
        if (steps[k] > steps[over]) over = k;
        if (steps[k] < steps[under]) under = k;
      }
      double band = 0.10 * target;
      if (static_cast<double>(steps[over]) <= target + band &&
          static_cast<double>(steps[under]) >= target - band) {
        break;
      }
      std::int64_t want = (steps[over] - steps[under]) / 2;
      std::size_t best_a = dataset.size(), best_b = dataset.size();
      std::int64_t best_gap = steps[over] - steps[under];
      for (std::size_t a = 0; a < dataset.size(); ++a) {
        if (assign[a] != over) continue;
        for (std::size_t b = 0; b < dataset.size(); ++b) {
          if (assign[b] != under) continue;
          std::int64_t delta = episode_len(dataset[a]) - episode_len(dataset[b]);
          if (delta <= 0) continue;
          std::int64_t gap = std::llabs((steps[over] - delta) - (steps[under] + delta));
          if (gap < best_gap) {
            best_gap = gap;
            best_a = a;
            best_b = b;
            if (delta == want) break;
          }
        }
      }
      if (best_a == dataset.size()) break;
      std::int64_t delta = episode_len(dataset[best_a]) - episode_len(dataset[best_b]);
      assign[best_a] = under;
      assign[best_b] = over;
      steps[over] -= delta;
      steps[under] += delta;
    }
    return assign;
  }

  // BothSkew: episode counts follow the geometric profile and episodes are
  // dealt at random, so step totals track episode counts.
  std::vector<double> weights = geometric_targets(K, 1.5, 1.0);
  std::vector<std::int64_t> quota = integer_shares(weights, N);
  auto idx = iota_indices(dataset.size());
  SplitMix64 rng(derive_seed(scheme.seed, "both-skew"));
  rng.shuffle(idx);
  std::size_t cursor = 0;
  for (int k = 0; k < K; ++k) {
    for (std::int64_t j = 0; j < quota[k]; ++j) assign[idx[cursor++]] = k;
  }
  return assign;
}

// Category-level and app-level variants share label machinery; `axis` picks
// which attribute drives the scheme.
Assign build_label_scheme(const Dataset& dataset, const PartitionScheme& scheme,
                          LabelAxis axis) {
  const int K = scheme.n_clients;
  const auto N = static_cast<std::int64_t>(dataset.size());
  RankedLabels ranked = rank_labels(dataset, axis);
  const auto L = static_cast<int>(ranked.labels.size());
  const char* axis_name = axis == LabelAxis::App ? "apps" : "categories";
  Assign assign(dataset.size(), -1);

  if (scheme.variant == PartitionVariant::IID) {
    // Per-app even deal regardless of axis: this makes categories even too.
    RankedLabels apps = rank_labels(dataset, LabelAxis::App);
    for (const std::string& app : apps.labels) {
      const auto& members = apps.members.at(app);
      for (std::size_t pos = 0; pos < members.size(); ++pos) {
        assign[members[pos]] = static_cast<int>(pos % static_cast<std::size_t>(K));
      }
    }
    return assign;
  }

  if (scheme.variant == PartitionVariant::Skew) {
    if (L != K) {
      raise(errc::infeasible_scheme,
            "skew requires exactly as many " + std::string(axis_name) + " as clients (" +
                std::to_string(L) + " labels, " + std::to_string(K) + " clients)");
    }
    for (int k = 0; k < K; ++k) {
      for (std::size_t i : ranked.members.at(ranked.labels[static_cast<std::size_t>(k)])) {
        assign[i] = k;
      }
    }
    return assign;
  }

  if (scheme.variant == PartitionVariant::HalfSkew) {
    if (L < 2 || 2 * K < L) {
      raise(errc::infeasible_scheme,
            "half-skew needs 2 <= labels <= 2*clients (" + std::to_string(L) + " " + axis_name +
                ", " + std::to_string(K) + " clients)");
    }
    // Client k claims labels (2k mod L, 2k+1 mod L); each label's episodes are
    // split evenly among its claimants.
    std::vector<std::vector<int>> claimants(static_cast<std::size_t>(L));
    for (int k = 0; k < K; ++k) {
      claimants[static_cast<std::size_t>((2 * k) % L)].push_back(k);
      claimants[static_cast<std::size_t>((2 * k + 1) % L)].push_back(k);
    }
    for (int l = 0; l < L; ++l) {
      const auto& members = ranked.members.at(ranked.labels[static_cast<std::size_t>(l)]);
      const auto& owners = claimants[static_cast<std::size_t>(l)];
      if (members.size() < owners.size()) {
        raise(errc::infeasible_scheme,
              "half-skew: label " + ranked.labels[static_cast<std::size_t>(l)] + " has " +
                  std::to_string(members.size()) + " episodes for " +
                  std::to_string(owners.size()) + " claimant clients");
      }
      std::size_t m = owners.size();
      std::size_t base = members.size() / m;
      std::size_t extra = members.size() % m;
      std::size_t cursor = 0;
      for (std::size_t o = 0; o < m; ++o) {
        std::size_t take = base + (o < extra ? 1 : 0);
        for (std::size_t j = 0; j < take; ++j) assign[members[cursor++]] = owners[o];
      }
    }
    return assign;
  }

  if (scheme.variant == PartitionVariant::NonUniform) {
    // Per-label Dirichlet(0.5) splits. Category-level additionally equalizes
    // per-client totals; app-level lets totals float.
    bool equal_rows = scheme.family == PartitionFamily::CategoryLevel;
    std::vector<std::int64_t> capacity(static_cast<std::size_t>(K), 0);
    if (equal_rows) {
      for (int k = 0; k < K; ++k) {
        capacity[static_cast<std::size_t>(k)] = N / K + (k < static_cast<int>(N % K) ? 1 : 0);
      }
    } else {
      for (auto& c : capacity) c = N;  // effectively unconstrained
    }
    for (int l = 0; l < L; ++l) {
      const auto& members = ranked.members.at(ranked.labels[static_cast<std::size_t>(l)]);
      SplitMix64 rng(derive_seed(scheme.seed, "dirichlet", static_cast<std::uint64_t>(l)));
      std::vector<double> weights(static_cast<std::size_t>(K));
      for (auto& w : weights) w = rng.next_gamma(0.5) + 1e-12;
      std::vector<std::int64_t> take =
          capacity_allocate(static_cast<std::int64_t>(members.size()), weights, capacity,
                            /*reserve=*/static_cast<std::int64_t>(L - l - 1));
      std::size_t cursor = 0;
      for (int k = 0; k < K; ++k) {
        for (std::int64_t j = 0; j < take[static_cast<std::size_t>(k)]; ++j) {
          assign[members[cursor++]] = k;
        }
      }
    }
    return assign;
  }

  if (scheme.variant == PartitionVariant::AppSkew) {
    // Within each category, whole apps are packed into equal-episode groups,
    // one group per client.
    RankedLabels categories = rank_labels(dataset, LabelAxis::Category);
    for (const std::string& cat : categories.labels) {
      std::map<std::string, std::vector<std::size_t>> apps;
      for (std::size_t i : categories.members.at(cat)) apps[dataset[i].app].push_back(i);
      if (static_cast<int>(apps.size()) < K) {
        raise(errc::infeasible_scheme, "app-skew needs >= " + std::to_string(K) +
                                           " apps in category " + cat + " (found " +
                                           std::to_string(apps.size()) + ")");
      }
      std::vector<std::string> names;
      for (const auto& [app, members] : apps) names.push_back(app);
      std::stable_sort(names.begin(), names.end(), [&](const auto& a, const auto& b) {
        return apps.at(a).size() > apps.at(b).size();
      });
      std::vector<std::int64_t> load(static_cast<std::size_t>(K), 0);
      for (const std::string& app : names) {
        int best = 0;
        for (int k = 1; k < K; ++k) {
          if (load[static_cast<std::size_t>(k)] < load[static_cast<std::size_t>(best)]) best = k;
        }
        for (std::size_t i : apps.at(app)) assign[i] = best;
        load[static_cast<std::size_t>(best)] += static_cast<std::int64_t>(apps.at(app).size());
      }
    }
    return assign;
  }

  // AppRandom: whole apps shuffled onto clients, then rebalanced toward equal
  // episode totals while keeping each app on exactly one client.
  RankedLabels apps = rank_labels(dataset, LabelAxis::App);
  if (static_cast<int>(apps.labels.size()) < K) {
    raise(errc::infeasible_scheme,
          "app-random needs at least as many apps as clients (" +
              std::to_string(apps.labels.size()) + " apps, " + std::to_string(K) + " clients)");
  }
  std::vector<std::string> names = apps.labels;
  std::sort(names.begin(), names.end());
  SplitMix64 rng(derive_seed(scheme.seed, "app-random"));
  rng.shuffle(names);
  std::vector<std::int64_t> load(static_cast<std::size_t>(K), 0);
  std::vector<int> app_client(names.size(), 0);
  for (std::size_t a = 0; a < names.size(); ++a) {
    int best = 0;
    for (int k = 1; k < K; ++k) {
      if (load[static_cast<std::size_t>(k)] < load[static_cast<std::size_t>(best)]) best = k;
    }
    app_client[a] = best;
    load[static_cast<std::size_t>(best)] +=
        static_cast<std::int64_t>(apps.members.at(names[a]).size());
  }
  // Rebalance: move the best-fitting app from the heaviest to the lightest
  // client while the spread shrinks.
  for (int pass = 0; pass < 200; ++pass) {
    int over = 0, under = 0;
    for (int k = 1; k < K; ++k) {
      if (load[static_cast<std::size_t>(k)] > load[static_cast<std::size_t>(over)]) over = k;
      if (load[static_cast<std::size_t>(k)] < load[static_cast<std::size_t>(under)]) under = k;
    }
    std::int64_t spread = load[static_cast<std::size_t>(over)] -
                          load[static_cast<std::size_t>(under)];
    std::size_t best_app = names.size();
    std::int64_t best_spread = spread;
    for (std::size_t a = 0; a < names.size(); ++a) {
      if (app_client[a] != over) continue;
      auto size = static_cast<std::int64_t>(apps.members.at(names[a]).size());
      std::int64_t new_spread = std::llabs((load[static_cast<std::size_t>(over)] - size) -
                                           (load[static_cast<std::size_t>(under)] + size));
      if (new_spread < best_spread) {
        best_spread = new_spread;
        best_app = a;
      }
    }
    if (best_app == names.size()) break;
    auto size = static_cast<std::int64_t>(apps.members.at(names[best_app]).size());
    app_client[best_app] = under;
    load[static_cast<std::size_t>(over)] -= size;
    load[static_cast<std::size_t>(under)] += size;
  }
  for (std::size_t a = 0; a < names.size(); ++a) {
    for (std::size_t i : apps.members.at(names[a])) assign[i] = app_client[a];
  }
  return assign;
}

Assign build_scaleapp(const Dataset& dataset, const PartitionScheme& scheme) {
  const int K = scheme.n_clients;
  RankedLabels apps = rank_labels(dataset, LabelAxis::App);
  if (static_cast<int>(apps.labels.size()) != K) {
    raise(errc::infeasible_scheme,
          "scaleapp requires one app per client (" + std::to_string(apps.labels.size()) +
              " apps, " + std::to_string(K) + " clients)");
  }
  // Client k's episode count always equals the count of the rank-k app, so
  // the three variants differ only in composition.
  std::vector<std::int64_t> profile(static_cast<std::size_t>(K), 0);
  for (int k = 0; k < K; ++k) {
    profile[static_cast<std::size_t>(k)] =
        static_cast<std::int64_t>(apps.members.at(apps.labels[static_cast<std::size_t>(k)]).size());
  }
  Assign assign(dataset.size(), -1);

  if (scheme.variant == PartitionVariant::Skew) {
    for (int k = 0; k < K; ++k) {
      for (std::size_t i : apps.members.at(apps.labels[static_cast<std::size_t>(k)])) {
        assign[i] = k;
      }
    }
    return assign;
  }

  if (scheme.variant == PartitionVariant::Random) {
    auto idx = iota_indices(dataset.size());
    SplitMix64 rng(derive_seed(scheme.seed, "scaleapp-random"));
    rng.shuffle(idx);
    std::size_t cursor = 0;
    for (int k = 0; k < K; ++k) {
      for (std::int64_t j = 0; j < profile[static_cast<std::size_t>(k)]; ++j) {
        assign[idx[cursor++]] = k;
      }
    }
    return assign;
  }

  // IID: every client sees every app, cells proportional to row * column.
  std::vector<std::int64_t> capacity = profile;
  for (int a = 0; a < K; ++a) {
    const auto& members = apps.members.at(apps.labels[static_cast<std::size_t>(a)]);
    std::vector<double> weights(static_cast<std::size_t>(K));
    for (int k = 0; k < K; ++k) {
      weights[static_cast<std::size_t>(k)] = static_cast<double>(profile[static_cast<std::size_t>(k)]);
    }
    std::vector<std::int64_t> take =
        capacity_allocate(static_cast<std::int64_t>(members.size()), weights, capacity,
                          /*reserve=*/static_cast<std::int64_t>(K - a - 1));
    std::size_t cursor = 0;
    for (int k = 0; k < K; ++k) {
      for (std::int64_t j = 0; j < take[static_cast<std::size_t>(k)]; ++j) {
        assign[members[cursor++]] = k;
      }
    }
  }
  return assign;
}

// -- Verification helpers ----------------------------------------------------

double coefficient_of_variation(const std::vector<std::int64_t>& values) {
  if (values.empty()) return 0.0;
  double mean = 0.0;
  for (auto v : values) mean += static_cast<double>(v);
  mean /= static_cast<double>(values.size());
  if (mean == 0.0) return 0.0;
  double var = 0.0;
  for (auto v : values) {
    double d = static_cast<double>(v) - mean;
    var += d * d;
  }
  var /= static_cast<double>(values.size());
  return std::sqrt(var) / mean;
}

bool within_band(const std::vector<std::int64_t>& values, double rel_band) {
  if (values.empty()) return true;
  double mean = 0.0;
  for (auto v : values) mean += static_cast<double>(v);
  mean /= static_cast<double>(values.size());
  for (auto v : values) {
    if (std::abs(static_cast<double>(v) - mean) > rel_band * mean) return false;
  }
  return true;
}

bool max_minus_min_at_most(const std::vector<std::int64_t>& values, std::int64_t limit) {
  auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  return *hi - *lo <= limit;
}

}  // namespace

PartitionScheme parse_scheme(const std::string& text, int n_clients, std::uint64_t seed) {
  std::string family_name = text;
  std::string variant_name;
  std::size_t slash = text.find('/');
  if (slash != std::string::npos) {
    family_name = text.substr(0, slash);
    variant_name = text.substr(slash + 1);
  }
  for (const FamilyInfo& info : family_table()) {
    if (family_name != info.name) continue;
    PartitionScheme scheme;
    scheme.family = info.family;
    scheme.n_clients = n_clients;
    scheme.seed = seed;
    if (variant_name.empty()) {
      scheme.variant = info.variants.front().variant;
      return scheme;
    }
    for (const VariantName& v : info.variants) {
      if (variant_name == v.name) {
        scheme.variant = v.variant;
        return scheme;
      }
    }
    raise(errc::invalid_spec,
          "variant `" + variant_name + "` is not valid for family `" + family_name + "`");
  }
  raise(errc::invalid_spec, "unknown partition scheme: " + text);
}

std::string scheme_name(const PartitionScheme& scheme) {
  for (const FamilyInfo& info : family_table()) {
    if (info.family != scheme.family) continue;
    for (const VariantName& v : info.variants) {
      if (v.variant == scheme.variant) return std::string(info.name) + "/" + v.name;
    }
  }
  return "?";
}

std::vector<std::string> scheme_names() {
  std::vector<std::string> names;
  for (const FamilyInfo& info : family_table()) {
    for (const VariantName& v : info.variants) {
      names.push_back(std::string(info.name) + "/" + v.name);
    }
  }
  return names;
}

PartitionAssignment partition(const Dataset& dataset, const PartitionScheme& scheme) {
  if (dataset.empty()) raise(errc::empty_dataset, "cannot partition an empty dataset");
  if (scheme.n_clients < 1) raise(errc::invalid_spec, "n_clients must be >= 1");
  if (static_cast<std::size_t>(scheme.n_clients) > dataset.size()) {
    raise(errc::infeasible_scheme, "fewer episodes than clients");
  }

  Assign assign;
  switch (scheme.family) {
    case PartitionFamily::BasicIID:
      assign = build_basic_iid(dataset, scheme);
      break;
    case PartitionFamily::StepEpisode:
      assign = build_step_episode(dataset, scheme);
      break;
    case PartitionFamily::CategoryLevel:
      assign = build_label_scheme(dataset, scheme, LabelAxis::Category);
      break;
    case PartitionFamily::AppLevel:
      assign = build_label_scheme(dataset, scheme, LabelAxis::App);
      break;
    case PartitionFamily::ScaleApp:
      assign = build_scaleapp(dataset, scheme);
      break;
  }

  PartitionAssignment result;
  result.scheme = scheme;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    result.client_of[dataset[i].episode_id] = assign[i];
  }
  return result;
}

VerifyReport verify_partition(const Dataset& dataset, const PartitionAssignment& assignment) {
  const PartitionScheme& scheme = assignment.scheme;
  const int K = scheme.n_clients;

  // Coverage first: every episode mapped exactly once to a valid client.
  if (assignment.client_of.size() != dataset.size()) {
    raise(errc::coverage_mismatch,
          "assignment covers " + std::to_string(assignment.client_of.size()) + " episodes, dataset has " +
              std::to_string(dataset.size()));
  }
  std::vector<int> assign(dataset.size(), -1);
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    auto it = assignment.client_of.find(dataset[i].episode_id);
    if (it == assignment.client_of.end()) {
      raise(errc::coverage_mismatch, "episode " + dataset[i].episode_id + " is not assigned");
    }
    if (it->second < 0 || it->second >= K) {
      raise(errc::coverage_mismatch, "episode " + dataset[i].episode_id +
                                         " assigned to invalid client " +
                                         std::to_string(it->second));
    }
    assign[i] = it->second;
  }

  VerifyReport report;
  auto violate = [&report](int client, const std::string& rule) {
    report.ok = false;
    report.violations.push_back("client " + std::to_string(client) + ": " + rule);
  };

  std::vector<std::int64_t> episodes(static_cast<std::size_t>(K), 0);
  std::vector<std::int64_t> steps(static_cast<std::size_t>(K), 0);
  std::vector<std::set<std::string>> client_apps(static_cast<std::size_t>(K));
  std::vector<std::set<std::string>> client_categories(static_cast<std::size_t>(K));
  std::map<std::string, std::set<int>> app_clients;
  std::map<std::string, std::vector<std::int64_t>> app_per_client;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    auto k = static_cast<std::size_t>(assign[i]);
    episodes[k] += 1;
    steps[k] += episode_len(dataset[i]);
    client_apps[k].insert(dataset[i].app);
    client_categories[k].insert(category_name(dataset[i].category));
    app_clients[dataset[i].app].insert(assign[i]);
    auto& row = app_per_client[dataset[i].app];
    if (row.empty()) row.assign(static_cast<std::size_t>(K), 0);
    row[k] += 1;
  }

  auto check_label_cardinality = [&](const std::vector<std::set<std::string>>& sets,
                                     std::size_t expected, const char* what) {
    for (int k = 0; k < K; ++k) {
      if (sets[static_cast<std::size_t>(k)].size() != expected) {
        violate(k, std::string("holds ") + std::to_string(sets[static_cast<std::size_t>(k)].size()) +
                       " " + what + ", expected " + std::to_string(expected));
      }
    }
  };
  auto check_app_exclusive = [&]() {
    for (const auto& [app, clients] : app_clients) {
      if (clients.size() > 1) {
        violate(*clients.rbegin(), "app " + app + " is split across " +
                                       std::to_string(clients.size()) + " clients");
      }
    }
  };
  auto check_sees_all = [&](LabelAxis axis, const char* what) {
    RankedLabels ranked = rank_labels(dataset, axis);
    for (const std::string& label : ranked.labels) {
      if (static_cast<int>(ranked.members.at(label).size()) < K) continue;  // too small to demand
      for (int k = 0; k < K; ++k) {
        const auto& sets = axis == LabelAxis::App ? client_apps : client_categories;
        if (!sets[static_cast<std::size_t>(k)].count(label)) {
          violate(k, std::string("missing ") + what + " " + label);
        }
      }
    }
  };
  auto check_per_app_even = [&]() {
    for (const auto& [app, row] : app_per_client) {
      if (!max_minus_min_at_most(row, 1)) {
        auto heaviest = static_cast<int>(
            std::max_element(row.begin(), row.end()) - row.begin());
        violate(heaviest, "app " + app + " is not evenly allocated across clients");
      }
    }
  };
  auto check_profile_rows = [&]() {
    RankedLabels apps = rank_labels(dataset, LabelAxis::App);
    for (int k = 0; k < K && k < static_cast<int>(apps.labels.size()); ++k) {
      auto expect = static_cast<std::int64_t>(
          apps.members.at(apps.labels[static_cast<std::size_t>(k)]).size());
      if (episodes[static_cast<std::size_t>(k)] != expect) {
        violate(k, "episode count " + std::to_string(episodes[static_cast<std::size_t>(k)]) +
                       " does not match the rank-" + std::to_string(k) + " app count " +
                       std::to_string(expect));
      }
    }
  };

  switch (scheme.family) {
    case PartitionFamily::BasicIID:
      if (!max_minus_min_at_most(episodes, 1)) violate(0, "episode counts differ by more than 1");
      break;
    case PartitionFamily::StepEpisode:
      switch (scheme.variant) {
        case PartitionVariant::IID:
          if (!max_minus_min_at_most(episodes, 1))
            violate(0, "episode counts differ by more than 1");
          if (!within_band(steps, 0.10)) violate(0, "step totals outside +-10% band");
          break;
        case PartitionVariant::StepSkew:
          if (!max_minus_min_at_most(episodes, 1))
            violate(0, "episode counts differ by more than 1");
          if (coefficient_of_variation(steps) < 0.3)
            violate(0, "step-total CV below 0.3");
          break;
        case PartitionVariant::EpisodeSkew:
          if (!within_band(steps, 0.10)) violate(0, "step totals outside +-10% band");
          if (coefficient_of_variation(episodes) < 0.3)
            violate(0, "episode-count CV below 0.3");
          break;
        default:  // BothSkew
          if (coefficient_of_variation(episodes) < 0.3)
            violate(0, "episode-count CV below 0.3");
          if (coefficient_of_variation(steps) < 0.3) violate(0, "step-total CV below 0.3");
          break;
      }
      break;
    case PartitionFamily::CategoryLevel:
      switch (scheme.variant) {
        case PartitionVariant::IID:
          check_per_app_even();
          break;
        case PartitionVariant::Skew:
          check_label_cardinality(client_categories, 1, "categories");
          break;
        case PartitionVariant::HalfSkew:
          check_label_cardinality(client_categories, 2, "categories");
          break;
        case PartitionVariant::NonUniform:
          if (!max_minus_min_at_most(episodes, 1))
            violate(0, "episode counts differ by more than 1");
          check_sees_all(LabelAxis::Category, "category");
          break;
        case PartitionVariant::AppSkew:
          check_app_exclusive();
          check_sees_all(LabelAxis::Category, "category");
          break;
        default:  // AppRandom
          check_app_exclusive();
          break;
      }
      break;
    case PartitionFamily::AppLevel:
      switch (scheme.variant) {
        case PartitionVariant::IID:
          check_per_app_even();
          break;
        case PartitionVariant::Skew:
          check_label_cardinality(client_apps, 1, "apps");
          break;
        case PartitionVariant::HalfSkew:
          check_label_cardinality(client_apps, 2, "apps");
          break;
        default:  // NonUniform
          check_sees_all(LabelAxis::App, "app");
          break;
      }
      break;
    case PartitionFamily::ScaleApp:
      check_profile_rows();
      if (scheme.variant == PartitionVariant::Skew) {
        check_label_cardinality(client_apps, 1, "apps");
      } else if (scheme.variant == PartitionVariant::IID) {
        check_sees_all(LabelAxis::App, "app");
      }
      break;
  }
  return report;
}

DistributionMatrix distribution_matrix(const Dataset& dataset,
                                       const PartitionAssignment& assignment, LabelAxis axis) {
  DistributionMatrix matrix;
  std::map<std::string, std::size_t> label_index;
  if (axis == LabelAxis::Category) {
    std::set<std::string> present;
    for (const Episode& ep : dataset) present.insert(category_name(ep.category));
    for (int c = 0; c < kNumCategories; ++c) {
      std::string name = category_name(static_cast<Category>(c));
      if (present.count(name)) {
        label_index[name] = matrix.labels.size();
        matrix.labels.push_back(name);
      }
    }
  } else {
    std::set<std::string> present;
    for (const Episode& ep : dataset) present.insert(ep.app);
    for (const std::string& app : present) {
      label_index[app] = matrix.labels.size();
      matrix.labels.push_back(app);
    }
  }
  matrix.counts.assign(static_cast<std::size_t>(assignment.scheme.n_clients),
                       std::vector<std::int64_t>(matrix.labels.size(), 0));
  for (const Episode& ep : dataset) {
    auto it = assignment.client_of.find(ep.episode_id);
    if (it == assignment.client_of.end()) {
      raise(errc::coverage_mismatch, "episode " + ep.episode_id + " is not assigned");
    }
    matrix.counts[static_cast<std::size_t>(it->second)][label_index[label_of(ep, axis)]] += 1;
  }
  return matrix;
}

std::vector<ClientCounts> client_counts(const Dataset& dataset,
                                        const PartitionAssignment& assignment) {
  std::vector<ClientCounts> counts(static_cast<std::size_t>(assignment.scheme.n_clients));
  for (const Episode& ep : dataset) {
    auto it = assignment.client_of.find(ep.episode_id);
    if (it == assignment.client_of.end()) {
      raise(errc::coverage_mismatch, "episode " + ep.episode_id + " is not assigned");
    }
    counts[static_cast<std::size_t>(it->second)].episodes += 1;
    counts[static_cast<std::size_t>(it->second)].steps += episode_len(ep);
  }
  return counts;
}

void save_assignment(const Dataset& dataset, const PartitionAssignment& assignment,
                     const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) raise(errc::io_error, "cannot write assignment file: " + path);
  for (const Episode& ep : dataset) {
    auto it = assignment.client_of.find(ep.episode_id);
    if (it == assignment.client_of.end()) {
      raise(errc::coverage_mismatch, "episode " + ep.episode_id + " is not assigned");
    }
    out << ep.episode_id << '\t' << it->second << '\n';
  }
  if (!out) raise(errc::io_error, "write failed: " + path);
}

std::unordered_map<std::string, int> load_assignment(const std::string& path) {
  std::ifstream in(path);
  if (!in) raise(errc::io_error, "cannot open assignment file: " + path);
  std::unordered_map<std::string, int> client_of;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::size_t tab = line.find('\t');
    int client = -1;
    if (tab != std::string::npos) {
      try {
        std::size_t consumed = 0;
        client = std::stoi(line.substr(tab + 1), &consumed);
        if (consumed != line.size() - tab - 1) client = -1;
      } catch (const std::exception&) {
        client = -1;
      }
    }
    if (tab == std::string::npos || client < 0) {
      raise(errc::io_error, path + ":" + std::to_string(line_no) + ": expected `id<TAB>client`");
    }
    client_of[line.substr(0, tab)] = client;
  }
  return client_of;
}

void save_heatmap_csv(const DistributionMatrix& matrix, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) raise(errc::io_error, "cannot write heatmap file: " + path);
  out << "client";
  for (const std::string& label : matrix.labels) out << ',' << label;
  out << '\n';
  for (std::size_t k = 0; k < matrix.counts.size(); ++k) {
    out << k;
    for (std::int64_t v : matrix.counts[k]) out << ',' << v;
    out << '\n';
  }
  if (!out) raise(errc::io_error, "write failed: " + path);
}

std::vector<std::vector<const Episode*>> group_by_client(
    const Dataset& dataset, const std::unordered_map<std::string, int>& client_of,
    int n_clients) {
  std::vector<std::vector<const Episode*>> clients(static_cast<std::size_t>(n_clients));
  for (const Episode& ep : dataset) {
    auto it = client_of.find(ep.episode_id);
    if (it == client_of.end()) {
      raise(errc::coverage_mismatch, "episode " + ep.episode_id + " is not assigned");
    }
    if (it->second < 0 || it->second >= n_clients) {
      raise(errc::coverage_mismatch, "episode " + ep.episode_id + " assigned to invalid client " +
                                         std::to_string(it->second));
    }
    clients[static_cast<std::size_t>(it->second)].push_back(&ep);
  }
  return clients;
}

}  // namespace fedsim

#include "fedsim/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iterator>
#include <numeric>

#include "fedsim/error.hpp"
#include "fedsim/rng.hpp"
#include "fedsim/text.hpp"

namespace fedsim {

namespace {

constexpr const char* kTaskVerbs[] = {
    "search for", "add",      "remove",  "check",   "update", "review",
    "schedule",   "organize", "compare", "bookmark", "share",  "track",
};

constexpr const char* kTaskNouns[] = {
    "wireless headphones", "the weekly summary", "a morning reminder", "the delivery status",
    "new arrivals",        "my saved items",     "the latest messages", "a monthly report",
    "nearby offers",       "the travel plan",    "account settings",    "today's highlights",
    "the photo album",     "recent activity",    "a quick note",        "the watch list",
};

constexpr const char* kArgWords[] = {
    "cart",     "search",   "settings", "profile", "inbox",   "checkout", "filter",  "favorites",
    "menu",     "home",     "orders",   "alarm",   "compose", "archive",  "details", "reviews",
    "wishlist", "timeline", "gallery",  "player",  "map",     "schedule", "notes",   "basket",
    "account",  "explore",  "library",  "updates", "trends",  "history",  "support", "offers",
    "alerts",   "summary",  "tracker",  "planner", "feed",    "catalog",  "booking", "receipt",
};

// Enough tasks per app that one client's shard cannot cover every
// (app, task) pairing; shared structure still transfers across clients.
constexpr int kNumTasks = 40;

const char* mid_action_verb(ActionType a) {
  switch (a) {
    case ActionType::click: return "tap";
    case ActionType::scroll: return "swipe through";
    case ActionType::type: return "enter text in";
    case ActionType::long_press: return "hold";
    default: return "use";
  }
}

// E[X | X <= n] for X ~ Geometric(p) on {1, 2, ...} truncated at n. Summed
// termwise; the closed form cancels catastrophically as p -> 0.
double truncated_geometric_mean(double p) {
  double q = 1.0 - p;
  double numerator = 0.0;
  double pmf = p;
  for (int k = 1; k <= kMaxEpisodeSteps; ++k) {
    numerator += k * pmf;
    pmf *= q;
  }
  double denominator = -std::expm1(kMaxEpisodeSteps * std::log1p(-p));
  return numerator / denominator;
}

double solve_geometric_p(double target_mean) {
  double lo = 1e-9, hi = 1.0 - 1e-12;
  for (int i = 0; i < 200; ++i) {
    double mid = 0.5 * (lo + hi);
    if (truncated_geometric_mean(mid) > target_mean) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

int draw_truncated_geometric(SplitMix64& rng, double p) {
  double q = 1.0 - p;
  double u = rng.next_double();
  double cdf = 0.0;
  double pmf = p / (1.0 - std::pow(q, kMaxEpisodeSteps));
  for (int k = 1; k <= kMaxEpisodeSteps; ++k) {
    cdf += pmf;
    if (u < cdf) return k;
    pmf *= q;
  }
  return kMaxEpisodeSteps;
}

// Largest-remainder allocation of n among weights. When n allows it, every
// positive-weight app keeps at least one episode: zero quotas are topped up
// by taking from the largest allocations, which leaves proportions intact.
std::vector<std::int64_t> quota_allocate(std::int64_t n,
                                         const std::vector<double>& weights) {
  std::size_t m = weights.size();
  double total = std::accumulate(weights.begin(), weights.end(), 0.0);

  std::vector<std::int64_t> counts(m, 0);
  std::vector<double> frac(m, 0.0);
  std::int64_t assigned = 0;
  for (std::size_t i = 0; i < m; ++i) {
    double share = n * weights[i] / total;
    counts[i] = static_cast<std::int64_t>(std::floor(share));
    assigned += counts[i];
    frac[i] = share - static_cast<double>(counts[i]);
  }
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return frac[a] > frac[b]; });
  for (std::int64_t k = 0; k < n - assigned; ++k) {
    counts[order[static_cast<std::size_t>(k) % m]] += 1;
  }

  std::int64_t n_positive = 0;
  for (double w : weights) n_positive += (w > 0.0) ? 1 : 0;
  if (n >= n_positive) {
    for (std::size_t i = 0; i < m; ++i) {
      if (weights[i] <= 0.0 || counts[i] > 0) continue;
      std::size_t donor = 0;
      for (std::size_t j = 1; j < m; ++j) {
        if (counts[j] > counts[donor]) donor = j;
      }
      counts[donor] -= 1;
      counts[i] += 1;
    }
  }
  return counts;
}

struct AppStyle {
  std::uint64_t base;
  explicit AppStyle(const std::string& app) : base(fnv1a64(normalize_app_key(app))) {}

  std::string task_phrase(int task) const {
    std::uint64_t h = fnv1a64_mix(base, 0x7461736bull + static_cast<std::uint64_t>(task));
    const char* verb = kTaskVerbs[h % std::size(kTaskVerbs)];
    const char* noun = kTaskNouns[(h >> 17) % std::size(kTaskNouns)];
    return std::string(verb) + " " + noun;
  }

  // Signature control word: constant per app, the app-preference signal.
  std::string signature_word() const { return kArgWords[base % std::size(kArgWords)]; }

  std::string task_word(int task) const {
    std::uint64_t h = fnv1a64_mix(base, 0x776f7264ull + static_cast<std::uint64_t>(task));
    return kArgWords[h % std::size(kArgWords)];
  }
};

Episode make_episode(const std::string& id, const std::string& app, Category category,
                     int n_steps, double noise_rate, SplitMix64& rng) {
  AppStyle style(app);
  int task = static_cast<int>(rng.next_below(kNumTasks));

  Episode episode;
  episode.episode_id = id;
  episode.app = app;
  episode.category = category;
  episode.instruction = "Open the " + app + " app and " + style.task_phrase(task);
  episode.steps.reserve(static_cast<std::size_t>(n_steps));

  for (int j = 0; j < n_steps; ++j) {
    Step step;
    step.index = j;
    if (j == 0) {
      step.action_type = ActionType::open_app;
      step.action_args = app;
      step.subgoal = "open the " + app + " app";
    } else if (j == n_steps - 1) {
      step.action_type = ActionType::complete;
      step.action_args = "";
      step.subgoal = "confirm the task is complete";
    } else {
      int bucket = std::min(j, 8);
      constexpr ActionType kMidActions[] = {ActionType::click, ActionType::scroll,
                                            ActionType::type};
      step.action_type = kMidActions[bucket % 3];
      step.action_args = (bucket % 2 == 1) ? style.signature_word() : style.task_word(task);
      if (rng.next_double() < noise_rate) {
        step.action_type = static_cast<ActionType>(rng.next_below(kNumActionTypes));
        step.action_args = kArgWords[rng.next_below(std::size(kArgWords))];
      }
      step.subgoal = std::string(mid_action_verb(step.action_type)) + " the " +
                     (step.action_args.empty() ? "screen" : step.action_args) + " control";
    }
    episode.steps.push_back(std::move(step));
  }
  return episode;
}

std::string format_id(const std::string& prefix, std::int64_t i) {
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%06lld", static_cast<long long>(i));
  return prefix + buf;
}

}  // namespace

double min_mean_steps() { return 1.0; }
double max_mean_steps() { return truncated_geometric_mean(1e-9); }

Dataset generate_synthetic_dataset(const GenSpec& spec, const AppCatalog& catalog) {
  if (spec.n_episodes < 1) raise(errc::invalid_spec, "n_episodes must be >= 1");
  if (spec.app_profile.empty()) raise(errc::invalid_spec, "app_profile is empty");
  double weight_total = 0.0;
  for (const auto& [app, w] : spec.app_profile) {
    if (w < 0.0) raise(errc::invalid_spec, "negative weight for app " + app);
    weight_total += w;
  }
  if (weight_total <= 0.0) raise(errc::invalid_spec, "app_profile weights are all zero");
  if (spec.mean_steps < min_mean_steps() || spec.mean_steps > max_mean_steps()) {
    raise(errc::invalid_spec, "mean_steps outside achievable range [1, " +
                                  std::to_string(max_mean_steps()) + "]");
  }
  if (spec.target_total_steps != 0 &&
      (spec.target_total_steps < spec.n_episodes ||
       spec.target_total_steps > spec.n_episodes * kMaxEpisodeSteps)) {
    raise(errc::invalid_spec, "target_total_steps infeasible for episode count");
  }

  // App sequence: quota per app, then a seeded shuffle.
  std::vector<double> weights;
  weights.reserve(spec.app_profile.size());
  for (const auto& [app, w] : spec.app_profile) weights.push_back(w);
  std::vector<std::int64_t> quotas = quota_allocate(spec.n_episodes, weights);

  std::vector<std::size_t> app_of_episode;
  app_of_episode.reserve(static_cast<std::size_t>(spec.n_episodes));
  for (std::size_t a = 0; a < quotas.size(); ++a) {
    for (std::int64_t k = 0; k < quotas[a]; ++k) app_of_episode.push_back(a);
  }
  SplitMix64 shuffle_rng(derive_seed(spec.seed, "app-shuffle"));
  shuffle_rng.shuffle(app_of_episode);

  // Episode lengths, then the optional exact-total repair.
  double p = solve_geometric_p(spec.mean_steps);
  std::vector<int> lengths(static_cast<std::size_t>(spec.n_episodes));
  std::int64_t total = 0;
  for (std::int64_t i = 0; i < spec.n_episodes; ++i) {
    SplitMix64 rng(derive_seed(spec.seed, "length", static_cast<std::uint64_t>(i)));
    lengths[static_cast<std::size_t>(i)] = draw_truncated_geometric(rng, p);
    total += lengths[static_cast<std::size_t>(i)];
  }
  if (spec.target_total_steps != 0) {
    std::vector<std::size_t> walk(lengths.size());
    std::iota(walk.begin(), walk.end(), 0);
    SplitMix64 walk_rng(derive_seed(spec.seed, "length-repair"));
    walk_rng.shuffle(walk);
    std::int64_t diff = spec.target_total_steps - total;
    std::size_t cursor = 0;
    while (diff != 0) {
      std::size_t i = walk[cursor];
      cursor = (cursor + 1) % walk.size();
      if (diff > 0 && lengths[i] < kMaxEpisodeSteps) {
        lengths[i] += 1;
        --diff;
      } else if (diff < 0 && lengths[i] > 1) {
        lengths[i] -= 1;
        ++diff;
      }
    }
  }

  Dataset dataset;
  dataset.reserve(static_cast<std::size_t>(spec.n_episodes));
  for (std::int64_t i = 0; i < spec.n_episodes; ++i) {
    const std::string& app = spec.app_profile[app_of_episode[static_cast<std::size_t>(i)]].first;
    SplitMix64 rng(derive_seed(spec.seed, "content", static_cast<std::uint64_t>(i)));
    dataset.push_back(make_episode(format_id(spec.id_prefix, i), app,
                                   categorize_app(app, catalog),
                                   lengths[static_cast<std::size_t>(i)], spec.noise_rate, rng));
  }
  return dataset;
}

}  // namespace fedsim

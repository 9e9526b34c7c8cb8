#include "fedsim/presets.hpp"

#include <algorithm>
#include <cmath>

#include "fedsim/error.hpp"
#include "fedsim/rng.hpp"

namespace fedsim {

namespace {

using Profile = std::vector<std::pair<std::string, double>>;

// 48 apps at 20 episodes plus 4 at 10 -> 52 apps, 1000 episodes.
Profile category_level_profile() {
  Profile profile = {
      {"Amazon", 20},         {"eBay", 20},        {"Flipkart", 20},   {"Adidas", 20},
      {"Nike", 20},           {"Decathlon", 20},   {"Etsy", 20},       {"Puma", 20},
      {"Temu", 20},           {"Snapdeal", 20},    {"Google Maps", 20}, {"Expedia", 20},
      {"Omio", 20},           {"Booking.com", 20}, {"Citymapper", 20}, {"Trainline", 20},
      {"Kayak", 20},          {"Cruisemapper", 20}, {"MakeMyTrip", 20}, {"Agoda", 20},
      {"Gmail", 20},          {"Clock", 20},       {"Google Drive", 20}, {"Google Docs", 20},
      {"Calendar", 20},       {"Google Keep", 20}, {"Contacts", 20},   {"Reminder", 20},
      {"Recorder", 20},       {"Voice Recorder", 20}, {"Kitchen Stories", 20}, {"Home Workout", 20},
      {"Sidechef", 20},       {"Yummly", 20},      {"Blossom", 20},    {"Plantum", 20},
      {"Simple Habit", 20},   {"Leafsnap", 20},    {"Medito", 20},     {"Insight Timer", 20},
      {"YouTube", 20},        {"Vimeo", 20},       {"Artsy", 20},      {"Sketchbook", 20},
      {"Messenger", 20},      {"Pinterest", 20},   {"Flipboard", 20},  {"SoundCloud", 20},
      {"Snapchat", 10},       {"SmartNews", 10},   {"The Hindu", 10},  {"CNN", 10},
  };
  return profile;
}

Profile app_level_profile() {
  return {{"Amazon", 150}, {"Clock", 150}, {"Ebay", 150}, {"Flipkart", 150}, {"Gmail", 150}};
}

// 30 apps, geometric decay flattening after rank 14 (the long tail shares one
// episode count), normalized to 2500 episodes at generation time.
Profile scaleapp_profile() {
  const char* apps[30] = {
      "Amazon",   "eBay",        "Flipkart",     "Gmail",     "Clock",
      "Google Maps", "YouTube",  "Temu",         "Expedia",   "Calendar",
      "Messenger", "Pinterest",  "Nike",         "Etsy",      "Agoda",
      "Kitchen Stories", "Home Workout", "Trainline", "Kayak", "Google Drive",
      "Google Docs", "Contacts", "Vimeo",        "SoundCloud", "Yummly",
      "Blossom",  "Medito",      "Snapchat",     "CNN",       "Omio",
  };
  Profile profile;
  for (int i = 0; i < 30; ++i) {
    profile.emplace_back(apps[i], std::pow(0.86, std::min(i, 14)));
  }
  return profile;
}

// Long-tail roster: the 52 catalog apps followed by synthetic names, with
// Zipf-like weights.
Profile long_tail_profile(int n_apps) {
  Profile profile = category_level_profile();
  for (auto& [app, w] : profile) w = 1.0;
  for (int i = static_cast<int>(profile.size()); i < n_apps; ++i) {
    profile.emplace_back("App" + std::to_string(i + 1), 1.0);
  }
  for (std::size_t i = 0; i < profile.size(); ++i) {
    profile[i].second = 1.0 / std::pow(static_cast<double>(i + 1), 0.85);
  }
  return profile;
}

GenSpec base_spec(std::int64_t n, Profile profile, double mean, std::uint64_t seed,
                  std::int64_t target_steps, const char* prefix) {
  GenSpec spec;
  spec.n_episodes = n;
  spec.app_profile = std::move(profile);
  spec.mean_steps = mean;
  spec.seed = seed;
  spec.id_prefix = prefix;
  spec.target_total_steps = target_steps;
  return spec;
}

DataPreset basic_ac_preset(const std::string& name, std::int64_t n, std::uint64_t seed) {
  DataPreset preset;
  preset.name = name;
  preset.train = base_spec(n, long_tail_profile(877), 6.72, seed, 0, "ep-");
  preset.test = base_spec(std::max<std::int64_t>(1, n / 10), long_tail_profile(877), 6.72,
                          derive_seed(seed, "test-split"), 0, "te-");
  return preset;
}

}  // namespace

std::vector<std::string> preset_names() {
  return {"basic-ac-200", "basic-ac-500",  "basic-ac-1000", "basic-ac-3000",
          "basic-ac-5000", "basic-ac-7000", "step-episode",  "category-level",
          "app-level",     "scaleapp"};
}

bool is_preset(const std::string& name) {
  auto names = preset_names();
  return std::find(names.begin(), names.end(), name) != names.end();
}

DataPreset make_preset(const std::string& name, std::uint64_t seed) {
  if (name == "category-level") {
    DataPreset preset;
    preset.name = name;
    preset.train = base_spec(1000, category_level_profile(), 7.127, seed, 7127, "ep-");
    preset.test = base_spec(100, category_level_profile(), 7.03, derive_seed(seed, "test-split"),
                            703, "te-");
    return preset;
  }
  if (name == "app-level") {
    DataPreset preset;
    preset.name = name;
    preset.train = base_spec(750, app_level_profile(), 4456.0 / 750.0, seed, 4456, "ep-");
    // Test split holds an equal number of episodes for each of the five apps.
    preset.test =
        base_spec(100, app_level_profile(), 5.74, derive_seed(seed, "test-split"), 574, "te-");
    return preset;
  }
  if (name == "scaleapp") {
    DataPreset preset;
    preset.name = name;
    preset.train = base_spec(2500, scaleapp_profile(), 15700.0 / 2500.0, seed, 15700, "ep-");
    // 10% of the episodes of each app: reuse the training quotas as weights.
    Dataset train = generate_synthetic_dataset(preset.train);
    Profile test_profile = scaleapp_profile();
    DatasetStats stats = dataset_stats(train);
    for (auto& [app, w] : test_profile) w = static_cast<double>(stats.per_app.at(app).episodes);
    preset.test = base_spec(250, std::move(test_profile), 1691.0 / 250.0,
                            derive_seed(seed, "test-split"), 1691, "te-");
    return preset;
  }
  if (name == "step-episode") {
    DataPreset preset;
    preset.name = name;
    preset.train = base_spec(1000, long_tail_profile(293), 6.685, seed, 6685, "ep-");
    preset.test = base_spec(100, long_tail_profile(293), 6.35, derive_seed(seed, "test-split"),
                            635, "te-");
    return preset;
  }
  for (std::int64_t n : {200, 500, 1000, 3000, 5000, 7000}) {
    std::string candidate = "basic-ac-" + std::to_string(n);
    if (name == candidate) return basic_ac_preset(candidate, n, seed);
  }
  raise(errc::invalid_spec, "unknown preset: " + name);
}

}  // namespace fedsim

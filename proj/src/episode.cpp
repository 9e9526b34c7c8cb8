#include "fedsim/episode.hpp"

#include <fstream>
#include <regex>

#include "fedsim/error.hpp"
#include "fedsim/text.hpp"

namespace fedsim {

namespace {

constexpr const char* kActionNames[kNumActionTypes] = {
    "click",         "complete", "long_press", "navigate_back", "navigate_home",
    "open_app",      "scroll",   "type",       "wait",
};

constexpr const char* kCategoryNames[kNumCategories] = {
    "Shopping", "Traveling", "Office", "Lives", "Entertainment", "Unknown",
};

struct CatalogRow {
  const char* app;
  Category category;
};

// The shipped catalog: 52 apps spanning the five categories.
constexpr CatalogRow kBuiltinCatalog[] = {
    // Shopping
    {"Amazon", Category::Shopping},
    {"eBay", Category::Shopping},
    {"Flipkart", Category::Shopping},
    {"Adidas", Category::Shopping},
    {"Nike", Category::Shopping},
    {"Decathlon", Category::Shopping},
    {"Etsy", Category::Shopping},
    {"Puma", Category::Shopping},
    {"Temu", Category::Shopping},
    {"Snapdeal", Category::Shopping},
    // Traveling
    {"Google Maps", Category::Traveling},
    {"Expedia", Category::Traveling},
    {"Omio", Category::Traveling},
    {"Booking.com", Category::Traveling},
    {"Citymapper", Category::Traveling},
    {"Trainline", Category::Traveling},
    {"Kayak", Category::Traveling},
    {"Cruisemapper", Category::Traveling},
    {"MakeMyTrip", Category::Traveling},
    {"Agoda", Category::Traveling},
    // Office
    {"Gmail", Category::Office},
    {"Clock", Category::Office},
    {"Google Drive", Category::Office},
    {"Google Docs", Category::Office},
    {"Calendar", Category::Office},
    {"Google Keep", Category::Office},
    {"Contacts", Category::Office},
    {"Reminder", Category::Office},
    {"Recorder", Category::Office},
    {"Voice Recorder", Category::Office},
    // Lives
    {"Kitchen Stories", Category::Lives},
    {"Home Workout", Category::Lives},
    {"Sidechef", Category::Lives},
    {"Yummly", Category::Lives},
    {"Blossom", Category::Lives},
    {"Plantum", Category::Lives},
    {"Simple Habit", Category::Lives},
    {"Leafsnap", Category::Lives},
    {"Medito", Category::Lives},
    {"Insight Timer", Category::Lives},
    // Entertainment
    {"YouTube", Category::Entertainment},
    {"Vimeo", Category::Entertainment},
    {"Artsy", Category::Entertainment},
    {"Sketchbook", Category::Entertainment},
    {"Messenger", Category::Entertainment},
    {"Pinterest", Category::Entertainment},
    {"Flipboard", Category::Entertainment},
    {"SoundCloud", Category::Entertainment},
    {"Snapchat", Category::Entertainment},
    {"SmartNews", Category::Entertainment},
    {"The Hindu", Category::Entertainment},
    {"CNN", Category::Entertainment},
};

}  // namespace

const char* action_type_name(ActionType a) {
  return kActionNames[static_cast<int>(a)];
}

std::optional<ActionType> action_type_from_name(std::string_view name) {
  for (int i = 0; i < kNumActionTypes; ++i) {
    if (name == kActionNames[i]) return static_cast<ActionType>(i);
  }
  return std::nullopt;
}

const char* category_name(Category c) { return kCategoryNames[static_cast<int>(c)]; }

std::optional<Category> category_from_name(std::string_view name) {
  std::string lowered = to_lower(name);
  for (int i = 0; i < kNumCategories; ++i) {
    if (lowered == to_lower(kCategoryNames[i])) return static_cast<Category>(i);
  }
  // Common alternate spelling.
  if (lowered == "travelling") return Category::Traveling;
  return std::nullopt;
}

DatasetStats dataset_stats(const Dataset& dataset) {
  DatasetStats stats;
  stats.n_episodes = static_cast<std::int64_t>(dataset.size());
  for (const Episode& ep : dataset) {
    auto n = static_cast<std::int64_t>(ep.n_steps());
    stats.n_steps += n;
    AppCounts& app = stats.per_app[ep.app];
    app.episodes += 1;
    app.steps += n;
    AppCounts& cat = stats.per_category[category_name(ep.category)];
    cat.episodes += 1;
    cat.steps += n;
  }
  stats.n_apps = static_cast<std::int64_t>(stats.per_app.size());
  stats.n_categories = static_cast<std::int64_t>(stats.per_category.size());
  return stats;
}

AppCatalog AppCatalog::builtin() {
  AppCatalog catalog;
  for (const CatalogRow& row : kBuiltinCatalog) catalog.add(row.app, row.category);
  return catalog;
}

void AppCatalog::load_overlay(const std::string& path) {
  std::ifstream in(path);
  if (!in) raise(errc::io_error, "cannot open catalog file: " + path);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string cleaned = strip_bom(line);
    std::size_t hash = cleaned.find('#');
    if (hash != std::string::npos) cleaned.erase(hash);
    if (collapse_whitespace(cleaned).empty()) continue;
    std::size_t tab = cleaned.find('\t');
    if (tab == std::string::npos) {
      raise(errc::invalid_spec,
            "catalog line " + std::to_string(line_no) + " is not `app<TAB>category`");
    }
    std::string app = collapse_whitespace(cleaned.substr(0, tab));
    std::string cat_text = collapse_whitespace(cleaned.substr(tab + 1));
    auto category = category_from_name(cat_text);
    if (app.empty() || !category) {
      raise(errc::invalid_spec,
            "catalog line " + std::to_string(line_no) + ": bad app or category `" + cat_text + "`");
    }
    add(app, *category);
  }
}

void AppCatalog::add(std::string_view app, Category category) {
  entries_[normalize_app_key(app)] = category;
}

Category AppCatalog::lookup(std::string_view app) const {
  auto it = entries_.find(normalize_app_key(app));
  return it == entries_.end() ? Category::Unknown : it->second;
}

Category categorize_app(std::string_view app, const AppCatalog& catalog) {
  return catalog.lookup(app);
}

std::optional<std::string> extract_app_name(const std::vector<RawAction>& actions,
                                            std::string_view goal) {
  for (const RawAction& action : actions) {
    if (action.action_type == "open_app") {
      std::string name = collapse_whitespace(strip_bom(action.app_name));
      if (!name.empty()) return name;
    }
  }
  static const std::regex pattern(R"(\bthe\s+(\w+(?:\s+\w+)?)\s+app\b)",
                                  std::regex::ECMAScript | std::regex::icase);
  std::match_results<std::string_view::const_iterator> match;
  if (std::regex_search(goal.begin(), goal.end(), match, pattern)) {
    return collapse_whitespace(match[1].str());
  }
  return std::nullopt;
}

}  // namespace fedsim

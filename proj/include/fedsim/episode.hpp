#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace fedsim {

// Closed action space. Order is lexicographic so that index 0 is the
// lexicographically-first action, which is what an all-ties argmax returns.
enum class ActionType : int {
  click = 0,
  complete,
  long_press,
  navigate_back,
  navigate_home,
  open_app,
  scroll,
  type,
  wait,
};

inline constexpr int kNumActionTypes = 9;

const char* action_type_name(ActionType a);
std::optional<ActionType> action_type_from_name(std::string_view name);

enum class Category : int {
  Shopping = 0,
  Traveling,
  Office,
  Lives,
  Entertainment,
  Unknown,
};

inline constexpr int kNumCategories = 6;  // includes Unknown

const char* category_name(Category c);
std::optional<Category> category_from_name(std::string_view name);

struct Step {
  int index = 0;
  std::string subgoal;
  ActionType action_type = ActionType::click;
  std::string action_args;
};

// One task trajectory: an instruction plus an ordered list of steps.
struct Episode {
  std::string episode_id;
  std::string instruction;
  std::string app;
  Category category = Category::Unknown;
  std::vector<Step> steps;

  std::size_t n_steps() const { return steps.size(); }
};

using Dataset = std::vector<Episode>;

struct AppCounts {
  std::int64_t episodes = 0;
  std::int64_t steps = 0;
};

struct DatasetStats {
  std::int64_t n_episodes = 0;
  std::int64_t n_steps = 0;
  std::int64_t n_apps = 0;
  std::int64_t n_categories = 0;
  std::map<std::string, AppCounts> per_app;       // keyed by display name
  std::map<std::string, AppCounts> per_category;  // keyed by category name
};

DatasetStats dataset_stats(const Dataset& dataset);

// app name (case-normalized) -> category.
class AppCatalog {
 public:
  // The built-in catalog covers the 52 apps of the category-level corpus.
  static AppCatalog builtin();

  // Two-column text: `app<TAB>category`, `#` comments and blank lines allowed.
  // Entries are merged over the current contents (user overlay wins).
  void load_overlay(const std::string& path);

  void add(std::string_view app, Category category);
  Category lookup(std::string_view app) const;
  std::size_t size() const { return entries_.size(); }

 private:
  std::unordered_map<std::string, Category> entries_;
};

Category categorize_app(std::string_view app, const AppCatalog& catalog);

// Dual-strategy app-name extraction from a raw record: an open_app action's
// app name wins; otherwise the first "the <name> app" capture from the goal
// text. Returns nullopt when both strategies fail (callers drop the episode).
struct RawAction {
  std::string action_type;
  std::string app_name;  // optional, open_app only
};

std::optional<std::string> extract_app_name(const std::vector<RawAction>& actions,
                                            std::string_view goal);

}  // namespace fedsim

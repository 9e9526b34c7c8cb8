#include "fedsim/dataset_io.hpp"

#include <fstream>

#include "fedsim/error.hpp"
#include "fedsim/text.hpp"

namespace fedsim {

namespace {

std::string require_string(const json& record, const char* field, const std::string& where) {
  auto it = record.find(field);
  if (it == record.end() || !it->is_string()) {
    raise(errc::missing_field, where + ": missing or non-string field `" + field + "`");
  }
  return it->get<std::string>();
}

std::string optional_string(const json& record, const char* field) {
  auto it = record.find(field);
  if (it != record.end() && it->is_string()) return it->get<std::string>();
  return {};
}

}  // namespace

Episode parse_episode(const json& record, const AppCatalog& catalog) {
  if (!record.is_object()) raise(errc::missing_field, "record is not an object");
  Episode episode;
  episode.episode_id = require_string(record, "episode_id", "record");

  if (record.contains("instruction") && record["instruction"].is_string()) {
    episode.instruction = record["instruction"].get<std::string>();
  } else if (record.contains("goal") && record["goal"].is_string()) {
    episode.instruction = record["goal"].get<std::string>();
  } else {
    raise(errc::missing_field,
          "episode " + episode.episode_id + ": missing `instruction` (or `goal`)");
  }

  episode.app = optional_string(record, "app");

  auto steps_it = record.find("steps");
  if (steps_it == record.end() || !steps_it->is_array()) {
    raise(errc::missing_field, "episode " + episode.episode_id + ": missing `steps` array");
  }
  if (steps_it->empty()) {
    raise(errc::empty_steps, "episode " + episode.episode_id + " has no steps");
  }

  int index = 0;
  for (const json& raw : *steps_it) {
    Step step;
    step.index = index++;  // indices are positional regardless of the stored value
    std::string type_name =
        require_string(raw, "action_type", "episode " + episode.episode_id + " step " +
                                               std::to_string(step.index));
    auto action = action_type_from_name(type_name);
    if (!action) {
      raise(errc::unknown_action_type, "episode " + episode.episode_id + " step " +
                                           std::to_string(step.index) + ": `" + type_name + "`");
    }
    step.action_type = *action;
    step.subgoal = optional_string(raw, "subgoal");
    step.action_args = optional_string(raw, "action_args");
    episode.steps.push_back(std::move(step));
  }

  if (record.contains("category") && record["category"].is_string()) {
    auto category = category_from_name(record["category"].get<std::string>());
    episode.category = category.value_or(Category::Unknown);
  } else {
    episode.category = categorize_app(episode.app, catalog);
  }
  return episode;
}

json serialize_episode(const Episode& episode) {
  json record;
  record["episode_id"] = episode.episode_id;
  record["instruction"] = episode.instruction;
  record["app"] = episode.app;
  record["category"] = category_name(episode.category);
  json steps = json::array();
  for (const Step& step : episode.steps) {
    json s;
    s["index"] = step.index;
    s["subgoal"] = step.subgoal;
    s["action_type"] = action_type_name(step.action_type);
    s["action_args"] = step.action_args;
    steps.push_back(std::move(s));
  }
  record["steps"] = std::move(steps);
  return record;
}

std::optional<std::string> extract_app_name(const json& record) {
  std::vector<RawAction> actions;
  auto steps_it = record.find("steps");
  if (steps_it != record.end() && steps_it->is_array()) {
    for (const json& raw : *steps_it) {
      RawAction action;
      action.action_type = optional_string(raw, "action_type");
      action.app_name = optional_string(raw, "app_name");
      if (action.app_name.empty()) action.app_name = optional_string(raw, "action_args");
      actions.push_back(std::move(action));
    }
  }
  // Records converted from task_info-style dumps carry the name at top level.
  if (record.contains("app_name") && record["app_name"].is_string()) {
    for (RawAction& action : actions) {
      if (action.action_type == "open_app" && action.app_name.empty()) {
        action.app_name = record["app_name"].get<std::string>();
      }
    }
  }
  std::string goal = optional_string(record, "goal");
  if (goal.empty()) goal = optional_string(record, "instruction");
  return extract_app_name(actions, goal);
}

Dataset load_dataset(const std::string& path, const AppCatalog& catalog) {
  std::ifstream in(path);
  if (!in) raise(errc::io_error, "cannot open dataset file: " + path);
  Dataset dataset;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json record = json::parse(line, nullptr, false);
    if (record.is_discarded()) {
      raise(errc::io_error, path + ":" + std::to_string(line_no) + ": invalid JSON");
    }
    dataset.push_back(parse_episode(record, catalog));
  }
  return dataset;
}

void save_dataset(const Dataset& dataset, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) raise(errc::io_error, "cannot write dataset file: " + path);
  for (const Episode& episode : dataset) {
    out << serialize_episode(episode).dump() << '\n';
  }
  if (!out) raise(errc::io_error, "write failed: " + path);
}

}  // namespace fedsim

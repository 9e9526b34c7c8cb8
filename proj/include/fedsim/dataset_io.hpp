#pragma once

#include <optional>
#include <string>

#include <json.hpp>

#include "fedsim/episode.hpp"

namespace fedsim {

using json = nlohmann::ordered_json;

// Builds a validated Episode from a line-delimited record. `goal` is accepted
// as an alias for `instruction`; a missing category falls back to a catalog
// lookup of the app; unknown extra fields are ignored.
Episode parse_episode(const json& record, const AppCatalog& catalog = AppCatalog::builtin());

// Field-exact inverse of parse_episode for valid episodes. Features are never
// serialized; they are recomputed from the episode content.
json serialize_episode(const Episode& episode);

// extract_app_name over a raw record (steps' action types plus goal text).
std::optional<std::string> extract_app_name(const json& record);

// One JSON object per line, UTF-8.
Dataset load_dataset(const std::string& path, const AppCatalog& catalog = AppCatalog::builtin());
void save_dataset(const Dataset& dataset, const std::string& path);

}  // namespace fedsim

#pragma once

#include <string>
#include <vector>

#include "fedsim/synth.hpp"

namespace fedsim {

// Ready-made dataset recipes matching the benchmark corpus shapes: episode
// counts, app rosters and exact step totals per family, plus the paired test
// split (roughly 10% of the training size, drawn with an independent seed).
struct DataPreset {
  std::string name;
  GenSpec train;
  GenSpec test;
};

std::vector<std::string> preset_names();
bool is_preset(const std::string& name);
DataPreset make_preset(const std::string& name, std::uint64_t seed);

}  // namespace fedsim

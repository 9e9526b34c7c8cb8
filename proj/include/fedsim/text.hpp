#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace fedsim {

// Lowercase tokens split on runs of non-alphanumeric bytes. This is the one
// tokenizer shared by featurization and TF-IDF scoring.
std::vector<std::string> tokenize(std::string_view text);

// Trim leading/trailing whitespace and collapse internal runs to one space.
std::string collapse_whitespace(std::string_view text);

// Case-folded key used for catalog lookups: trimmed, collapsed, lowercased.
// Original casing is preserved elsewhere for display.
std::string normalize_app_key(std::string_view app);

// Strips UTF-8 byte-order marks anywhere in the string.
std::string strip_bom(std::string_view text);

std::string to_lower(std::string_view text);

}  // namespace fedsim

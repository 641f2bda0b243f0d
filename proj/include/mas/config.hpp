#pragma once

#include <string>

#include "json.hpp"

namespace mas {

/// Parses the TOML subset used by run configs into a JSON object.
///
/// Supported: comments, [table] and [a.b] headers, bare / quoted / dotted
/// keys, basic and literal strings, integers (sign, '_', 0x), floats
/// (exponents, inf, nan), booleans, arrays (multi-line, nested, trailing
/// comma) and inline tables. Not supported: arrays of tables, multi-line
/// strings, dates. Errors carry the line number.
nlohmann::json parse_toml(const std::string& text);
nlohmann::json load_toml_file(const std::string& path);

/// Recursively overlays `patch` onto `base` (objects merge, everything else
/// replaces).
void merge_json(nlohmann::json& base, const nlohmann::json& patch);

} // namespace mas

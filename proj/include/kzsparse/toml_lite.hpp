#pragma once

#include <string>

#include <json.hpp>

namespace kzsparse {

/// Parses the TOML subset used by experiment configs into a JSON tree.
///
/// Supported: comments, [table] and [dotted.table] headers, bare and dotted
/// keys, basic strings, integers, floats, booleans and (possibly multi-line)
/// arrays of those. Anything else throws std::runtime_error with a line number.
nlohmann::json parse_toml_lite(const std::string& text);

}  // namespace kzsparse

#pragma once

#include "mslin/types.hpp"

#include <string>

namespace mslin {

/// Shortest-safe text for a double: 17 significant digits, round-trips exactly.
std::string fmt17(double v);

/// Comma-joined fmt17 entries of v.
std::string join17(const Vector& v);

/// Write `content` to `path` through a sibling temporary file and a rename.
void write_atomic(const std::string& path, const std::string& content);

}  // namespace mslin

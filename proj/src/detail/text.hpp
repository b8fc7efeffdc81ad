#pragma once

#include <cstdio>
#include <string>

namespace ising::detail {

/// Shortest decimal form that round-trips a double exactly; all persisted
/// floats go through this so files are byte-stable across runs.
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace ising::detail

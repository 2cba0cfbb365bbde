#pragma once

#include <cmath>
#include <cstdio>
#include <string>

namespace fracsys {

/// Shortest-safe round-trip text for a double: 17 significant digits.
/// NaN prints as an empty field.
inline std::string fmt17(double v) {
  if (std::isnan(v)) return {};
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string fmt17(long double v) { return fmt17(static_cast<double>(v)); }

}  // namespace fracsys

#pragma once

#include <cstdio>
#include <string>

namespace gada {

/// Shortest-faithful double formatting for every text artifact the library
/// emits (logs, reports, manifests). 17 significant digits round-trip f64
/// exactly, which the bitwise-reproducibility contract relies on.
inline std::string fmt_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return std::string(buf);
}

}  // namespace gada

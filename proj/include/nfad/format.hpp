#pragma once

#include <cstdio>
#include <string>

namespace nfad {

// Shortest round-trippable decimal form; reruns of a deterministic pipeline
// then produce byte-identical output files.
inline std::string g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return std::string(buf);
}

}  // namespace nfad

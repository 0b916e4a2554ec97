#pragma once

#include <string>

#include "nfad/classifier.hpp"
#include "nfad/dataset.hpp"
#include "nfad/flows.hpp"

namespace nfad {

// Single-file model format:
//   magic "NFAD1" | u32 version | u8 kind (0 flow, 1 classifier)
//   | u32 json length | architecture descriptor (json)
//   | u32 d | d means | d stds          (standardizer)
//   | u64 parameter count | parameters  (64-bit reals)
//   | u32 crc32 of everything above
// All integers and reals little-endian. Loading verifies the checksum,
// magic, version, kind and parameter count before touching anything.

struct FlowModel {
  FlowStack flow;
  Standardizer scaler;
};

struct ClfModel {
  MlpClassifier clf;
  Standardizer scaler;
};

void save_flow(const std::string& path, FlowStack& flow,
               const Standardizer& scaler);
FlowModel load_flow(const std::string& path);

void save_classifier(const std::string& path, MlpClassifier& clf,
                     const Standardizer& scaler);
ClfModel load_classifier(const std::string& path);

}  // namespace nfad

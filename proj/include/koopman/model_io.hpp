#pragma once

#include <istream>
#include <ostream>
#include <string>
#include <utility>

#include "koopman/distributed.hpp"

namespace koopman {

/// Persisted model. Centralized models are stored as a single-block
/// partition. Numbers are full-precision decimal text; save -> load -> save
/// is byte-identical. The metadata block is informational only and is the
/// one part excluded from reproducibility comparisons.
struct ModelFile {
  BlockDictionary dictionary;
  KoopmanMatrix k;
  Normalizer norm;
  bool append_one = false;
  std::vector<std::pair<std::string, std::string>> metadata;

  /// State dimension in original units (before the constant-1 append).
  int original_dim() const {
    return dictionary.partition.state_dim() - (append_one ? 1 : 0);
  }
};

void save_model(std::ostream& os, const ModelFile& model);
ModelFile load_model(std::istream& is);

void save_model_file(const std::string& path, const ModelFile& model);
ModelFile load_model_file(const std::string& path);

}  // namespace koopman

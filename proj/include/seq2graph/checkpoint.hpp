// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "seq2graph/data.hpp"
#include "seq2graph/model.hpp"

namespace seq2graph::model {

inline constexpr int kCheckpointVersion = 1;

struct Checkpoint {
  Model model;
  std::vector<std::string> series_names;  // column order the model was trained on
  data::Scaler scaler;
};

/// JSON text holding the version tag, config, series order, scaler and every tensor by name.
std::string checkpoint_to_json(const Checkpoint& checkpoint);

/// Throws SchemaError on version mismatch, missing or misshapen tensors.
Checkpoint checkpoint_from_json(std::string_view text);

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace seq2graph::model

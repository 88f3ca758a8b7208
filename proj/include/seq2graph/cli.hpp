// SPDX-License-Identifier: Apache-2.0
//
// Command-line entry point: generate | train | evaluate | infer | baseline.
#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "seq2graph/model.hpp"
#include "seq2graph/synthetic.hpp"
#include "seq2graph/training.hpp"

namespace seq2graph::cli {

enum ExitCode : int { kSuccess = 0, kRuntimeFailure = 1, kUsageError = 2 };

/// Everything a command needs. Loaded from --config, then overridden by flags, and
/// written back as run_config.json next to the outputs.
struct RunConfig {
  std::uint64_t seed = 0;
  std::filesystem::path out_dir = "out";
  std::filesystem::path input;
  std::filesystem::path checkpoint;

  model::ModelConfig model;
  train::TrainConfig train;
  data::SyntheticConfig synthetic;

  // multi-step objective (train)
  std::optional<std::string> target_series;
  std::size_t horizon = 1;

  // evaluate
  std::string split = "test";

  // infer: rows of the newest input value; negative end counts from the last row
  std::optional<std::int64_t> range_start;
  std::optional<std::int64_t> range_end;
  std::string graph_format = "both";
  double threshold_primary = 0.0;    // 0 selects 1.5 / D
  double threshold_secondary = 0.0;  // 0 selects 0.75 / D

  // baseline
  std::string method = "var";
  std::size_t lag_order = 0;  // 0 selects the window length
  std::optional<std::string> granger_target;
  std::optional<std::string> granger_candidate;
};

std::string run_config_to_json(const RunConfig& config);
/// Fields absent from the text keep the values already in `base`.
RunConfig run_config_from_json(const std::string& text, RunConfig base = {});

/// Named sub-seeds of the run seed.
void derive_component_seeds(RunConfig& config);

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run_cli(int argc, char** argv);

}  // namespace seq2graph::cli

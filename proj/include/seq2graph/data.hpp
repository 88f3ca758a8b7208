// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "seq2graph/tensor.hpp"

namespace seq2graph::data {

/// D named series sampled on a common clock. Values are row-major T x D.
class TimeSeriesFrame {
 public:
  TimeSeriesFrame() = default;
  TimeSeriesFrame(std::vector<std::string> names, std::vector<double> values,
                  std::optional<std::vector<double>> timestamps = std::nullopt);

  std::size_t length() const { return names_.empty() ? 0 : values_.size() / names_.size(); }
  std::size_t series() const { return names_.size(); }
  const std::vector<std::string>& names() const { return names_; }
  const std::vector<double>& values() const { return values_; }
  const std::optional<std::vector<double>>& timestamps() const { return timestamps_; }

  double at(std::size_t t, std::size_t d) const { return values_[t * names_.size() + d]; }
  std::vector<double> column(std::size_t d) const;
  std::vector<double> row(std::size_t t) const;
  /// Index of a series by name; throws ContractViolation when absent.
  std::size_t index_of(const std::string& name) const;

  /// Rows [first, first + count).
  TimeSeriesFrame slice_rows(std::size_t first, std::size_t count) const;

 private:
  std::vector<std::string> names_;
  std::vector<double> values_;
  std::optional<std::vector<double>> timestamps_;
};

/// Reads a comma-separated file with a header row. Columns are reordered
/// lexicographically by name; a leading column named "timestamp" becomes the clock.
TimeSeriesFrame load_csv(const std::filesystem::path& path);
TimeSeriesFrame parse_csv(const std::string& text, const std::string& source = "<memory>");
void write_csv(const TimeSeriesFrame& frame, const std::filesystem::path& path);
std::string format_csv(const TimeSeriesFrame& frame);

/// Per-series min-max scaling fitted on a training range.
struct Scaler {
  std::vector<double> min;
  std::vector<double> max;
  /// Series whose training range was constant; they use max = min + 1.
  std::vector<bool> constant;

  double apply(std::size_t d, double x) const { return (x - min[d]) / (max[d] - min[d]); }
  double invert(std::size_t d, double y) const { return min[d] + y * (max[d] - min[d]); }
  TimeSeriesFrame apply(const TimeSeriesFrame& frame) const;
  TimeSeriesFrame invert(const TimeSeriesFrame& frame) const;
  bool any_constant() const;
};

/// Fits on rows [first_row, first_row + row_count).
Scaler fit_scaler(const TimeSeriesFrame& frame, std::size_t first_row, std::size_t row_count);

struct WindowSample {
  Tensor inputs;           // [m, D], oldest row first
  Tensor target;           // [D] next row, or [horizon] of one series
  std::size_t last_row = 0;  // frame row of the newest input
};

/// Sample k covers rows k..k+m-1 with target row k+m; T - m samples in total.
std::vector<WindowSample> make_windows(const TimeSeriesFrame& frame, std::size_t m);

/// Targets are the next `horizon` values of one series.
std::vector<WindowSample> make_horizon_windows(const TimeSeriesFrame& frame, std::size_t m,
                                               std::size_t target_series, std::size_t horizon);

/// Chronological row ranges.
struct SplitRanges {
  std::size_t train_end = 0;  // rows [0, train_end)
  std::size_t dev_end = 0;    // rows [train_end, dev_end)
  std::size_t length = 0;     // test rows [dev_end, length)
};

/// 70:15:15 by default.
SplitRanges chronological_split(std::size_t length, double train_fraction = 0.70,
                                double dev_fraction = 0.15);

/// Windows whose target row (last_row + 1) lies in [first_row, end_row).
std::vector<WindowSample> windows_targeting(const std::vector<WindowSample>& windows,
                                            std::size_t first_row, std::size_t end_row);

struct WindowSplits {
  std::vector<WindowSample> train, dev, test;
};

WindowSplits split_windows(const std::vector<WindowSample>& windows, const SplitRanges& ranges);

}  // namespace seq2graph::data

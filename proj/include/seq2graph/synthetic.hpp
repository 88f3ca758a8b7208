// SPDX-License-Identifier: Apache-2.0
//
// Bivariate series whose next row is produced by one of two if-then rules:
//
//   A[t] <  0.5:  A[t+1] = A[t-4],                 B[t+1] = (B[t-3] + B[t-6]) / 2
//   A[t] >= 0.5:  A[t+1] = (A[t-6] + B[t-3]) / 2,  B[t+1] = A[t-3]
//
// Without outside randomness the rules contract to a constant, so on a fraction of
// steps the referenced lagged values are replaced by fresh Uniform[0, 1] draws before
// the rule is applied. The stored history is never rewritten.
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "seq2graph/data.hpp"

namespace seq2graph::data {

enum class Rule : std::uint8_t { kWarmup = 0, kAutoregressive = 1, kCoupled = 2 };

/// Rows before the first rule application (deepest lag 6 plus the current row).
inline constexpr std::size_t kWarmupRows = 7;

struct SyntheticConfig {
  std::size_t length = 10000;
  std::uint64_t seed = 0;
  double regen_probability = 0.01;

  /// Throws ContractViolation when length <= 10 or the probability is outside [0, 1].
  void validate() const;
};

struct RuleStep {
  double a_next = 0.0;
  double b_next = 0.0;
  Rule rule = Rule::kWarmup;
};

/// Next row from histories whose last index is t (t >= 6).
RuleStep apply_rule(std::span<const double> a, std::span<const double> b, std::size_t t);

struct SyntheticSeries {
  TimeSeriesFrame frame;            // columns SeriesA, SeriesB
  std::vector<Rule> rules;          // rule that produced each row
  std::vector<bool> regenerated;    // row was computed from redrawn lagged values
};

SyntheticSeries generate_bivariate(const SyntheticConfig& config);

/// Sidecar CSV: row,rule,regenerated
std::string format_labels(const SyntheticSeries& series);
void write_labels(const SyntheticSeries& series, const std::filesystem::path& path);

struct LabelRecord {
  Rule rule = Rule::kWarmup;
  bool regenerated = false;
};
std::vector<LabelRecord> load_labels(const std::filesystem::path& path);

}  // namespace seq2graph::data

// SPDX-License-Identifier: Apache-2.0
//
// Dependency artifacts derived from attention coefficients: directed weighted graphs
// from the inter-series coefficients and lag profiles from the temporal ones.
#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "seq2graph/tensor.hpp"

namespace seq2graph::analysis {

enum class Tier { kPrimary, kSecondary };

std::string_view tier_name(Tier tier);

/// Edge source -> target: the target series' next value depends on the source series.
struct Edge {
  std::size_t source = 0;
  std::size_t target = 0;
  double weight = 0.0;
  Tier tier = Tier::kSecondary;

  friend bool operator==(const Edge&, const Edge&) = default;
};

struct DependencyGraph {
  double timestamp = 0.0;
  std::vector<std::string> nodes;
  std::vector<Edge> edges;
  Tensor beta_matrix;  // [D, D], row i = coefficients of target i over sources

  friend bool operator==(const DependencyGraph& a, const DependencyGraph& b);
};

struct GraphThresholds {
  double primary = 0.0;
  double secondary = 0.0;

  /// primary >= 1.5 / D, secondary >= 0.75 / D.
  static GraphThresholds relative_to_uniform(std::size_t series);
};

/// betas[i][d] is the weight of source d for target i; rows must sum to 1 within 1e-6.
DependencyGraph build_graph(const Tensor& betas, const std::vector<std::string>& names,
                            const GraphThresholds& thresholds, double timestamp);

/// Column means of a row-stochastic [m, m] alpha matrix (columns oldest to newest),
/// renormalized and reversed so index 0 is the latest time point.
std::vector<double> aggregate_lags(const Tensor& alphas);

enum class GraphFormat { kJson, kDot };

GraphFormat parse_graph_format(std::string_view name);

std::string export_graph(const DependencyGraph& graph, GraphFormat format);
DependencyGraph graph_from_json(std::string_view text);

/// CSV "series,lag0,...,lag{m-1}", one row per series.
std::string format_lag_profiles(const std::vector<std::string>& names,
                                const std::vector<std::vector<double>>& profiles);

}  // namespace seq2graph::analysis

// SPDX-License-Identifier: Apache-2.0
#include "seq2graph/graph.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include <json.hpp>

#include "seq2graph/error.hpp"

namespace seq2graph::analysis {

std::string_view tier_name(Tier tier) {
  return tier == Tier::kPrimary ? "primary" : "secondary";
}

bool operator==(const DependencyGraph& a, const DependencyGraph& b) {
  if (a.timestamp != b.timestamp || a.nodes != b.nodes || a.edges != b.edges) return false;
  if (!(a.beta_matrix.shape() == b.beta_matrix.shape())) return false;
  for (std::size_t i = 0; i < a.beta_matrix.size(); ++i) {
    if (a.beta_matrix[i] != b.beta_matrix[i]) return false;
  }
  return true;
}

GraphThresholds GraphThresholds::relative_to_uniform(std::size_t series) {
  const double uniform = 1.0 / static_cast<double>(series);
  return {1.5 * uniform, 0.75 * uniform};
}

DependencyGraph build_graph(const Tensor& betas, const std::vector<std::string>& names,
                            const GraphThresholds& thresholds, double timestamp) {
  const std::size_t D = names.size();
  if (betas.shape().rank() != 2 || betas.rows() != D || betas.cols() != D) {
    throw ContractViolation("beta matrix " + betas.shape().str() + " does not match " +
                            std::to_string(D) + " series");
  }
  for (std::size_t i = 0; i < D; ++i) {
    double row = 0.0;
    for (std::size_t d = 0; d < D; ++d) {
      if (betas.at(i, d) < 0.0) throw ContractViolation("beta entries must be non-negative");
      row += betas.at(i, d);
    }
    if (std::abs(row - 1.0) > 1e-6) {
      throw ContractViolation("beta row " + std::to_string(i) + " sums to " + std::to_string(row));
    }
  }

  DependencyGraph g;
  g.timestamp = timestamp;
  g.nodes = names;
  g.beta_matrix = betas;
  for (std::size_t i = 0; i < D; ++i) {
    for (std::size_t d = 0; d < D; ++d) {
      const double w = betas.at(i, d);
      if (w < thresholds.secondary) continue;
      g.edges.push_back(
          Edge{d, i, w, w >= thresholds.primary ? Tier::kPrimary : Tier::kSecondary});
    }
  }
  return g;
}

std::vector<double> aggregate_lags(const Tensor& alphas) {
  if (alphas.shape().rank() != 2 || alphas.rows() != alphas.cols()) {
    throw ContractViolation("alpha matrix must be square, got " + alphas.shape().str());
  }
  const std::size_t m = alphas.rows();
  std::vector<double> profile(m, 0.0);
  for (std::size_t t = 0; t < m; ++t)
    for (std::size_t j = 0; j < m; ++j) profile[m - 1 - j] += alphas.at(t, j);
  double total = 0.0;
  for (double v : profile) total += v;
  for (double& v : profile) v /= total;
  return profile;
}

GraphFormat parse_graph_format(std::string_view name) {
  if (name == "json") return GraphFormat::kJson;
  if (name == "dot") return GraphFormat::kDot;
  throw ContractViolation("unknown graph format '" + std::string(name) + "'");
}

namespace {

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string quoted(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + "\"";
}

std::string to_json(const DependencyGraph& g) {
  using nlohmann::ordered_json;
  ordered_json doc;
  doc["timestamp"] = g.timestamp;
  doc["nodes"] = g.nodes;
  doc["edges"] = ordered_json::array();
  for (const Edge& e : g.edges) {
    doc["edges"].push_back(ordered_json{{"source", g.nodes[e.source]},
                                        {"target", g.nodes[e.target]},
                                        {"weight", e.weight},
                                        {"tier", tier_name(e.tier)}});
  }
  ordered_json rows = ordered_json::array();
  for (std::size_t i = 0; i < g.beta_matrix.rows(); ++i) {
    ordered_json row = ordered_json::array();
    for (std::size_t d = 0; d < g.beta_matrix.cols(); ++d) row.push_back(g.beta_matrix.at(i, d));
    rows.push_back(std::move(row));
  }
  doc["beta_matrix"] = std::move(rows);
  return doc.dump(2) + "\n";
}

std::string to_dot(const DependencyGraph& g) {
  std::ostringstream out;
  out << "digraph dependencies {\n";
  out << "  label=" << quoted("t = " + fixed(g.timestamp, 0)) << ";\n";
  for (const auto& name : g.nodes) out << "  " << quoted(name) << ";\n";
  for (const Edge& e : g.edges) {
    out << "  " << quoted(g.nodes[e.source]) << " -> " << quoted(g.nodes[e.target])
        << " [weight=" << fixed(e.weight, 6) << ", penwidth=" << fixed(1.0 + 4.0 * e.weight, 3)
        << ", style=" << (e.tier == Tier::kPrimary ? "solid" : "dashed")
        << ", label=" << quoted(fixed(e.weight, 3)) << "];\n";
  }
  out << "}\n";
  return out.str();
}

}  // namespace

std::string export_graph(const DependencyGraph& graph, GraphFormat format) {
  switch (format) {
    case GraphFormat::kJson: return to_json(graph);
    case GraphFormat::kDot: return to_dot(graph);
  }
  throw ContractViolation("unknown graph format");
}

DependencyGraph graph_from_json(std::string_view text) {
  try {
    const auto doc = nlohmann::json::parse(text);
    DependencyGraph g;
    g.timestamp = doc.at("timestamp").get<double>();
    g.nodes = doc.at("nodes").get<std::vector<std::string>>();
    const std::size_t D = g.nodes.size();
    std::vector<double> betas;
    for (const auto& row : doc.at("beta_matrix")) {
      if (row.size() != D) throw SchemaError("beta_matrix row width differs from node count");
      for (const auto& v : row) betas.push_back(v.get<double>());
    }
    if (betas.size() != D * D) throw SchemaError("beta_matrix must be square over the nodes");
    g.beta_matrix = Tensor(Shape{D, D}, std::move(betas));
    auto node_index = [&](const std::string& name) {
      for (std::size_t i = 0; i < D; ++i)
        if (g.nodes[i] == name) return i;
      throw SchemaError("edge refers to unknown node '" + name + "'");
    };
    for (const auto& e : doc.at("edges")) {
      const std::string tier = e.at("tier").get<std::string>();
      if (tier != "primary" && tier != "secondary") throw SchemaError("unknown tier '" + tier + "'");
      g.edges.push_back(Edge{node_index(e.at("source").get<std::string>()),
                             node_index(e.at("target").get<std::string>()),
                             e.at("weight").get<double>(),
                             tier == "primary" ? Tier::kPrimary : Tier::kSecondary});
    }
    return g;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("malformed graph document: ") + e.what());
  }
}

std::string format_lag_profiles(const std::vector<std::string>& names,
                                const std::vector<std::vector<double>>& profiles) {
  if (names.size() != profiles.size()) throw ContractViolation("one lag profile per series");
  std::ostringstream out;
  out.precision(17);
  out << "series";
  const std::size_t m = profiles.empty() ? 0 : profiles.front().size();
  for (std::size_t k = 0; k < m; ++k) out << ",lag" << k;
  out << '\n';
  for (std::size_t d = 0; d < names.size(); ++d) {
    out << names[d];
    for (double v : profiles[d]) out << ',' << v;
    out << '\n';
  }
  return out.str();
}

}  // namespace seq2graph::analysis

// SPDX-License-Identifier: Apache-2.0
#include "seq2graph/synthetic.hpp"

#include <fstream>
#include <random>
#include <sstream>

#include "seq2graph/error.hpp"
#include "seq2graph/random.hpp"

namespace seq2graph::data {

void SyntheticConfig::validate() const {
  if (length <= 10) {
    throw ContractViolation("synthetic length must exceed 10 (deepest lag is 6), got " +
                            std::to_string(length));
  }
  if (!(regen_probability >= 0.0 && regen_probability <= 1.0)) {
    throw ContractViolation("regen_probability must lie in [0, 1]");
  }
}

namespace {

struct LaggedSources {
  double first, second, third;
};

// The three lagged values each rule reads, in a fixed order.
LaggedSources sources(std::span<const double> a, std::span<const double> b, std::size_t t,
                      Rule rule) {
  if (rule == Rule::kAutoregressive) return {a[t - 4], b[t - 3], b[t - 6]};
  return {a[t - 6], b[t - 3], a[t - 3]};
}

RuleStep combine(const LaggedSources& s, Rule rule) {
  if (rule == Rule::kAutoregressive) return {s.first, 0.5 * (s.second + s.third), rule};
  return {0.5 * (s.first + s.second), s.third, rule};
}

Rule rule_for(double a_now) { return a_now < 0.5 ? Rule::kAutoregressive : Rule::kCoupled; }

}  // namespace

RuleStep apply_rule(std::span<const double> a, std::span<const double> b, std::size_t t) {
  if (t < 6 || t >= a.size() || t >= b.size()) {
    throw ContractViolation("rule needs history indices t-6..t");
  }
  const Rule rule = rule_for(a[t]);
  return combine(sources(a, b, t, rule), rule);
}

SyntheticSeries generate_bivariate(const SyntheticConfig& config) {
  config.validate();
  std::mt19937_64 engine(config.seed);
  std::vector<double> a, b;
  a.reserve(config.length);
  b.reserve(config.length);
  SyntheticSeries out;
  for (std::size_t t = 0; t < kWarmupRows; ++t) {
    a.push_back(unit_uniform(engine));
    b.push_back(unit_uniform(engine));
    out.rules.push_back(Rule::kWarmup);
    out.regenerated.push_back(false);
  }
  while (a.size() < config.length) {
    const std::size_t t = a.size() - 1;
    const Rule rule = rule_for(a[t]);
    LaggedSources s = sources(a, b, t, rule);
    const bool regen = unit_uniform(engine) < config.regen_probability;
    if (regen) {
      s.first = unit_uniform(engine);
      s.second = unit_uniform(engine);
      s.third = unit_uniform(engine);
    }
    const RuleStep next = combine(s, rule);
    a.push_back(next.a_next);
    b.push_back(next.b_next);
    out.rules.push_back(rule);
    out.regenerated.push_back(regen);
  }
  std::vector<double> values;
  values.reserve(2 * config.length);
  for (std::size_t t = 0; t < config.length; ++t) {
    values.push_back(a[t]);
    values.push_back(b[t]);
  }
  out.frame = TimeSeriesFrame({"SeriesA", "SeriesB"}, std::move(values));
  return out;
}

std::string format_labels(const SyntheticSeries& series) {
  std::ostringstream out;
  out << "row,rule,regenerated\n";
  for (std::size_t t = 0; t < series.rules.size(); ++t) {
    out << t << ',' << static_cast<int>(series.rules[t]) << ',' << (series.regenerated[t] ? 1 : 0)
        << '\n';
  }
  return out.str();
}

void write_labels(const SyntheticSeries& series, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << format_labels(series);
}

std::vector<LabelRecord> load_labels(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IngestionError("cannot open " + path.string());
  std::string line;
  std::getline(in, line);
  std::vector<LabelRecord> out;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream row(line);
    std::size_t index = 0;
    int rule = 0, regen = 0;
    char c1 = 0, c2 = 0;
    if (!(row >> index >> c1 >> rule >> c2 >> regen) || c1 != ',' || c2 != ',' || rule < 0 ||
        rule > 2 || index != out.size()) {
      throw IngestionError(path.string() + ": malformed label row " + std::to_string(line_no));
    }
    out.push_back(LabelRecord{static_cast<Rule>(rule), regen != 0});
  }
  return out;
}

}  // namespace seq2graph::data

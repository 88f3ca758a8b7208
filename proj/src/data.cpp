// SPDX-License-Identifier: Apache-2.0
#include "seq2graph/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "seq2graph/error.hpp"

namespace seq2graph::data {

TimeSeriesFrame::TimeSeriesFrame(std::vector<std::string> names, std::vector<double> values,
                                 std::optional<std::vector<double>> timestamps)
    : names_(std::move(names)), values_(std::move(values)), timestamps_(std::move(timestamps)) {
  if (names_.empty()) throw ContractViolation("a frame needs at least one series");
  if (values_.size() % names_.size() != 0) {
    throw ContractViolation("frame values do not form whole rows");
  }
  std::set<std::string> unique(names_.begin(), names_.end());
  if (unique.size() != names_.size()) throw ContractViolation("series names must be unique");
  if (timestamps_ && timestamps_->size() != length()) {
    throw ContractViolation("timestamp count does not match row count");
  }
}

std::vector<double> TimeSeriesFrame::column(std::size_t d) const {
  std::vector<double> out(length());
  for (std::size_t t = 0; t < out.size(); ++t) out[t] = at(t, d);
  return out;
}

std::vector<double> TimeSeriesFrame::row(std::size_t t) const {
  const auto first = values_.begin() + static_cast<std::ptrdiff_t>(t * series());
  return {first, first + static_cast<std::ptrdiff_t>(series())};
}

std::size_t TimeSeriesFrame::index_of(const std::string& name) const {
  const auto it = std::find(names_.begin(), names_.end(), name);
  if (it == names_.end()) throw ContractViolation("no series named '" + name + "'");
  return static_cast<std::size_t>(it - names_.begin());
}

TimeSeriesFrame TimeSeriesFrame::slice_rows(std::size_t first, std::size_t count) const {
  if (first + count > length()) throw ContractViolation("row slice out of range");
  const auto begin = values_.begin() + static_cast<std::ptrdiff_t>(first * series());
  std::vector<double> values(begin, begin + static_cast<std::ptrdiff_t>(count * series()));
  std::optional<std::vector<double>> stamps;
  if (timestamps_) {
    const auto tb = timestamps_->begin() + static_cast<std::ptrdiff_t>(first);
    stamps.emplace(tb, tb + static_cast<std::ptrdiff_t>(count));
  }
  return TimeSeriesFrame(names_, std::move(values), std::move(stamps));
}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) cells.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

double parse_number(const std::string& cell, const std::string& where) {
  double value = 0.0;
  const char* end = cell.data() + cell.size();
  const auto [ptr, ec] = std::from_chars(cell.data(), end, value);
  if (cell.empty() || ec != std::errc() || ptr != end || !std::isfinite(value)) {
    throw IngestionError(where + ": not a finite number: '" + cell + "'");
  }
  return value;
}

}  // namespace

TimeSeriesFrame parse_csv(const std::string& text, const std::string& source) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (!trim(line).empty()) {
      header = split_line(line);
      break;
    }
  }
  if (header.empty()) throw IngestionError(source + ": missing header row");

  const bool has_clock = header.front() == "timestamp";
  const std::size_t first_series = has_clock ? 1 : 0;
  std::vector<std::string> names(header.begin() + static_cast<std::ptrdiff_t>(first_series),
                                 header.end());
  if (names.empty()) throw IngestionError(source + ": header names no series");
  for (std::size_t c = 0; c < names.size(); ++c) {
    if (names[c].empty()) {
      throw IngestionError(source + ": header column " + std::to_string(c + first_series + 1) +
                           " is empty");
    }
    for (std::size_t k = 0; k < c; ++k) {
      if (names[k] == names[c]) throw IngestionError(source + ": duplicate series '" + names[c] + "'");
    }
  }

  std::vector<std::size_t> order(names.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return names[a] < names[b]; });

  std::vector<double> values;
  std::vector<double> stamps;
  std::vector<double> row(names.size());
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split_line(line);
    if (cells.size() != header.size()) {
      throw IngestionError(source + ": row " + std::to_string(line_no) + " has " +
                           std::to_string(cells.size()) + " cells, header has " +
                           std::to_string(header.size()));
    }
    for (std::size_t c = 0; c < cells.size(); ++c) {
      const std::string where =
          source + ": row " + std::to_string(line_no) + ", column " + std::to_string(c + 1);
      const double v = parse_number(cells[c], where);
      if (c < first_series) {
        if (!stamps.empty() && v < stamps.back()) {
          throw IngestionError(where + ": timestamps must be non-decreasing");
        }
        stamps.push_back(v);
      } else {
        row[c - first_series] = v;
      }
    }
    for (std::size_t k : order) values.push_back(row[k]);
  }
  if (values.empty()) throw IngestionError(source + ": no data rows");

  std::vector<std::string> sorted;
  for (std::size_t k : order) sorted.push_back(names[k]);
  std::optional<std::vector<double>> clock;
  if (has_clock) clock = std::move(stamps);
  return TimeSeriesFrame(std::move(sorted), std::move(values), std::move(clock));
}

TimeSeriesFrame load_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IngestionError("cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_csv(buffer.str(), path.string());
}

std::string format_csv(const TimeSeriesFrame& frame) {
  std::ostringstream out;
  out.precision(17);
  const bool clock = frame.timestamps().has_value();
  if (clock) out << "timestamp,";
  for (std::size_t d = 0; d < frame.series(); ++d) out << (d ? "," : "") << frame.names()[d];
  out << '\n';
  for (std::size_t t = 0; t < frame.length(); ++t) {
    if (clock) out << (*frame.timestamps())[t] << ',';
    for (std::size_t d = 0; d < frame.series(); ++d) out << (d ? "," : "") << frame.at(t, d);
    out << '\n';
  }
  return out.str();
}

void write_csv(const TimeSeriesFrame& frame, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << format_csv(frame);
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

Scaler fit_scaler(const TimeSeriesFrame& frame, std::size_t first_row, std::size_t row_count) {
  if (row_count == 0) throw ContractViolation("scaler needs a non-empty training range");
  if (first_row + row_count > frame.length()) throw ContractViolation("scaler range out of bounds");
  Scaler s;
  for (std::size_t d = 0; d < frame.series(); ++d) {
    double lo = frame.at(first_row, d);
    double hi = lo;
    for (std::size_t t = first_row; t < first_row + row_count; ++t) {
      lo = std::min(lo, frame.at(t, d));
      hi = std::max(hi, frame.at(t, d));
    }
    const bool flat = !(hi > lo);
    s.min.push_back(lo);
    s.max.push_back(flat ? lo + 1.0 : hi);
    s.constant.push_back(flat);
  }
  return s;
}

bool Scaler::any_constant() const {
  return std::find(constant.begin(), constant.end(), true) != constant.end();
}

TimeSeriesFrame Scaler::apply(const TimeSeriesFrame& frame) const {
  std::vector<double> values = frame.values();
  const std::size_t D = frame.series();
  for (std::size_t i = 0; i < values.size(); ++i) values[i] = apply(i % D, values[i]);
  return TimeSeriesFrame(frame.names(), std::move(values), frame.timestamps());
}

TimeSeriesFrame Scaler::invert(const TimeSeriesFrame& frame) const {
  std::vector<double> values = frame.values();
  const std::size_t D = frame.series();
  for (std::size_t i = 0; i < values.size(); ++i) values[i] = invert(i % D, values[i]);
  return TimeSeriesFrame(frame.names(), std::move(values), frame.timestamps());
}

namespace {

Tensor window_inputs(const TimeSeriesFrame& frame, std::size_t first, std::size_t m) {
  const std::size_t D = frame.series();
  const auto begin = frame.values().begin() + static_cast<std::ptrdiff_t>(first * D);
  return Tensor(Shape{m, D}, std::vector<double>(begin, begin + static_cast<std::ptrdiff_t>(m * D)));
}

}  // namespace

std::vector<WindowSample> make_windows(const TimeSeriesFrame& frame, std::size_t m) {
  if (m == 0) throw ContractViolation("window length must be at least 1");
  if (frame.length() < m + 1) {
    throw ContractViolation("series of length " + std::to_string(frame.length()) +
                            " is too short for windows of " + std::to_string(m));
  }
  std::vector<WindowSample> out;
  out.reserve(frame.length() - m);
  for (std::size_t k = 0; k + m < frame.length(); ++k) {
    out.push_back(WindowSample{window_inputs(frame, k, m), Tensor::vector(frame.row(k + m)),
                               k + m - 1});
  }
  return out;
}

std::vector<WindowSample> make_horizon_windows(const TimeSeriesFrame& frame, std::size_t m,
                                               std::size_t target_series, std::size_t horizon) {
  if (m == 0 || horizon == 0) throw ContractViolation("window and horizon must be at least 1");
  if (target_series >= frame.series()) throw ContractViolation("target series out of range");
  if (frame.length() < m + horizon) {
    throw ContractViolation("series too short for window " + std::to_string(m) +
                            " plus horizon " + std::to_string(horizon));
  }
  std::vector<WindowSample> out;
  for (std::size_t k = 0; k + m + horizon <= frame.length(); ++k) {
    std::vector<double> target(horizon);
    for (std::size_t h = 0; h < horizon; ++h) target[h] = frame.at(k + m + h, target_series);
    out.push_back(WindowSample{window_inputs(frame, k, m), Tensor::vector(std::move(target)),
                               k + m - 1});
  }
  return out;
}

SplitRanges chronological_split(std::size_t length, double train_fraction, double dev_fraction) {
  if (!(train_fraction > 0.0) || !(dev_fraction >= 0.0) || train_fraction + dev_fraction >= 1.0) {
    throw ContractViolation("split fractions must be positive and sum below 1");
  }
  SplitRanges r;
  r.length = length;
  r.train_end = static_cast<std::size_t>(std::floor(train_fraction * static_cast<double>(length)));
  r.dev_end = static_cast<std::size_t>(
      std::floor((train_fraction + dev_fraction) * static_cast<double>(length)));
  return r;
}

std::vector<WindowSample> windows_targeting(const std::vector<WindowSample>& windows,
                                            std::size_t first_row, std::size_t end_row) {
  std::vector<WindowSample> out;
  for (const auto& w : windows) {
    const std::size_t target = w.last_row + 1;
    if (target >= first_row && target < end_row) out.push_back(w);
  }
  return out;
}

WindowSplits split_windows(const std::vector<WindowSample>& windows, const SplitRanges& ranges) {
  WindowSplits s;
  s.train = windows_targeting(windows, 0, ranges.train_end);
  s.dev = windows_targeting(windows, ranges.train_end, ranges.dev_end);
  s.test = windows_targeting(windows, ranges.dev_end, ranges.length);
  return s;
}

}  // namespace seq2graph::data

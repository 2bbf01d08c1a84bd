// Copyright 2026 The VISA Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef VISA_EXPERIMENT_CSV_HPP
#define VISA_EXPERIMENT_CSV_HPP

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "visa/error.hpp"
#include "visa/metrics.hpp"

namespace visa::csv {

/// Shortest round-trip text for a double ("inf", "-inf", "nan" for non-finite values).
inline std::string format_double(double x) {
  if (std::isnan(x)) {
    return "nan";
  }
  if (std::isinf(x)) {
    return x > 0 ? "inf" : "-inf";
  }
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view field) {
  const std::string s(field);
  if (s == "inf") {
    return std::numeric_limits<double>::infinity();
  }
  if (s == "-inf") {
    return -std::numeric_limits<double>::infinity();
  }
  if (s == "nan") {
    return std::numeric_limits<double>::quiet_NaN();
  }
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw Error("csv: not a number: '" + s + "'");
  }
  if (used != s.size()) {
    throw Error("csv: not a number: '" + s + "'");
  }
  return v;
}

inline std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) {
    out.push_back(field);
  }
  if (!line.empty() && line.back() == ',') {
    out.emplace_back();
  }
  return out;
}

inline std::vector<std::vector<std::string>> read_rows(const std::string& path, std::vector<std::string>& header) {
  std::ifstream in(path);
  if (!in) {
    throw Error("csv: cannot open " + path);
  }
  std::string line;
  if (!std::getline(in, line)) {
    throw Error("csv: empty file " + path);
  }
  header = split(line);
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) {
      continue;
    }
    auto row = split(line);
    if (row.size() != header.size()) {
      throw Error("csv: row with " + std::to_string(row.size()) + " fields in " + path + ", expected " +
                  std::to_string(header.size()));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

/// Observation table: header `t,<names...>`, row k holds time `times[k]` and `values.row(k)`.
inline void write_dataset(const std::string& path, const std::vector<std::string>& names,
                          const std::vector<int>& times, const Eigen::MatrixXd& values) {
  std::ofstream out(path);
  if (!out) {
    throw Error("csv: cannot write " + path);
  }
  out << "t";
  for (const auto& n : names) {
    out << ',' << n;
  }
  out << '\n';
  for (Eigen::Index r = 0; r < values.rows(); ++r) {
    out << times[static_cast<std::size_t>(r)];
    for (Eigen::Index c = 0; c < values.cols(); ++c) {
      out << ',' << format_double(values(r, c));
    }
    out << '\n';
  }
}

/// Reads a dataset written by `write_dataset`; the time column is dropped.
inline Eigen::MatrixXd read_dataset(const std::string& path, std::size_t expected_columns) {
  std::vector<std::string> header;
  const auto rows = read_rows(path, header);
  if (header.empty() || header[0] != "t" || header.size() != expected_columns + 1) {
    throw Error("csv: " + path + " does not have the expected dataset header");
  }
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(expected_columns));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < expected_columns; ++c) {
      out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = parse_double(rows[r][c + 1]);
    }
  }
  return out;
}

/// Reference samples: header `dim_0,...,dim_{D-1},log_joint`.
inline void write_reference(const std::string& path, const ReferenceSampleSet& ref) {
  std::ofstream out(path);
  if (!out) {
    throw Error("csv: cannot write " + path);
  }
  const Eigen::Index d = ref.samples.cols();
  for (Eigen::Index i = 0; i < d; ++i) {
    out << "dim_" << i << ',';
  }
  out << "log_joint\n";
  for (Eigen::Index r = 0; r < ref.samples.rows(); ++r) {
    for (Eigen::Index i = 0; i < d; ++i) {
      out << format_double(ref.samples(r, i)) << ',';
    }
    out << format_double(ref.log_joint[r]) << '\n';
  }
}

inline ReferenceSampleSet read_reference(const std::string& path) {
  std::vector<std::string> header;
  const auto rows = read_rows(path, header);
  if (header.size() < 2 || header.back() != "log_joint") {
    throw Error("csv: " + path + " is not a reference sample file");
  }
  const auto d = static_cast<Eigen::Index>(header.size() - 1);
  for (Eigen::Index i = 0; i < d; ++i) {
    if (header[static_cast<std::size_t>(i)] != "dim_" + std::to_string(i)) {
      throw Error("csv: " + path + " has an unexpected column " + header[static_cast<std::size_t>(i)]);
    }
  }
  ReferenceSampleSet ref;
  ref.provenance = ReferenceSampleSet::Provenance::rwmh;
  ref.samples.resize(static_cast<Eigen::Index>(rows.size()), d);
  ref.log_joint.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto ri = static_cast<Eigen::Index>(r);
    for (Eigen::Index i = 0; i < d; ++i) {
      ref.samples(ri, i) = parse_double(rows[r][static_cast<std::size_t>(i)]);
    }
    ref.log_joint[ri] = parse_double(rows[r].back());
  }
  return ref;
}

inline constexpr std::string_view kTraceHeader =
    "method,lr,alpha,seed,step,model_evals,train_loss,test_metric,refreshed";

/// One row of an experiment trace.
struct TraceRow {
  std::string method;
  double lr = 0.0;
  std::optional<double> alpha;
  std::uint64_t seed = 0;
  std::int64_t step = 0;
  std::uint64_t model_evals = 0;
  double train_loss = 0.0;
  std::optional<double> test_metric;
  bool refreshed = false;
};

inline std::string format_row(const TraceRow& row) {
  std::string out = row.method;
  out += ',' + format_double(row.lr);
  out += ',' + (row.alpha ? format_double(*row.alpha) : std::string());
  out += ',' + std::to_string(row.seed);
  out += ',' + std::to_string(row.step);
  out += ',' + std::to_string(row.model_evals);
  out += ',' + format_double(row.train_loss);
  out += ',' + (row.test_metric ? format_double(*row.test_metric) : std::string());
  out += row.refreshed ? ",true" : ",false";
  return out;
}

inline std::vector<TraceRow> read_trace(const std::string& path) {
  std::vector<std::string> header;
  const auto rows = read_rows(path, header);
  std::string joined;
  for (std::size_t i = 0; i < header.size(); ++i) {
    joined += (i ? "," : "") + header[i];
  }
  if (joined != kTraceHeader) {
    throw Error("csv: " + path + " does not have the trace header");
  }
  std::vector<TraceRow> out;
  out.reserve(rows.size());
  for (const auto& r : rows) {
    TraceRow row;
    row.method = r[0];
    row.lr = parse_double(r[1]);
    if (!r[2].empty()) {
      row.alpha = parse_double(r[2]);
    }
    row.seed = std::stoull(r[3]);
    row.step = std::stoll(r[4]);
    row.model_evals = std::stoull(r[5]);
    row.train_loss = parse_double(r[6]);
    if (!r[7].empty()) {
      row.test_metric = parse_double(r[7]);
    }
    if (r[8] != "true" && r[8] != "false") {
      throw Error("csv: refreshed must be true or false in " + path);
    }
    row.refreshed = r[8] == "true";
    out.push_back(std::move(row));
  }
  return out;
}

}  // namespace visa::csv

#endif  // VISA_EXPERIMENT_CSV_HPP

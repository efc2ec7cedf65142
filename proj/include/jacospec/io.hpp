// Copyright 2026 The jacospec Authors.
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

#pragma once

#include <cstdint>
#include <json.hpp>
#include <string>
#include <string_view>
#include <vector>

/// CSV and JSON artifacts with run manifests.
namespace jacospec::io {

using Json = nlohmann::ordered_json;

/// 17 significant digits, locale independent. Non-finite values print
/// as nan, inf, -inf.
std::string format_double(double x);

/// Parses a number written by format_double. Throws DomainError.
double parse_double(std::string_view text);

/// Writes content to path.tmp then renames it over path.
void atomic_write(const std::string& path, std::string_view content);

std::string read_file(const std::string& path);

struct CsvTable {
  std::vector<std::string> header;
  /// rows[i][j] is column header[j] of row i.
  std::vector<std::vector<std::string>> rows;

  /// Index of a column; throws DomainError naming it when absent.
  std::size_t column(std::string_view name) const;
  std::vector<double> numeric_column(std::string_view name) const;
};

class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> header);
  CsvWriter& cell(double x);
  CsvWriter& cell(std::int64_t x);
  CsvWriter& cell(std::string_view text);
  /// Ends the current row; throws DomainError on a width mismatch.
  void end_row();
  const std::string& str() const { return out_; }
  void write(const std::string& path) const { atomic_write(path, out_); }

 private:
  std::size_t width_;
  std::size_t filled_ = 0;
  std::string out_;
};

/// Throws DomainError on ragged rows or an empty file.
CsvTable read_csv(const std::string& path);
CsvTable parse_csv(std::string_view text);

struct RunManifest {
  std::string command;
  Json parameters = Json::object();
  std::uint64_t seed = 0;
  std::string tool_version;
  /// ISO 8601 UTC.
  std::string timestamp;

  Json to_json() const;
  /// Stamps version and current time.
  static RunManifest make(std::string command, Json parameters, std::uint64_t seed = 0);
};

std::string tool_version();

/// JSON text with a trailing newline; doubles kept at full precision.
std::string dump(const Json& j);

}  // namespace jacospec::io

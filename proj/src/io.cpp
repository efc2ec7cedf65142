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

#include "jacospec/io.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "jacospec/errors.hpp"

#ifndef JACOSPEC_VERSION
#define JACOSPEC_VERSION "0.0.0"
#endif

namespace jacospec::io {

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::general, 17);
  return std::string(buf, r.ptr);
}

double parse_double(std::string_view text) {
  if (text == "nan") return std::nan("");
  if (text == "inf") return HUGE_VAL;
  if (text == "-inf") return -HUGE_VAL;
  double x = 0.0;
  const auto r = std::from_chars(text.data(), text.data() + text.size(), x);
  if (r.ec != std::errc() || r.ptr != text.data() + text.size())
    throw DomainError("not a number: '" + std::string(text) + "'");
  return x;
}

void atomic_write(const std::string& path, std::string_view content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open " + tmp);
    out.write(content.data(), std::streamsize(content.size()));
    out.flush();
    if (!out) throw Error("cannot write " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw Error("cannot rename " + tmp + ": " + ec.message());
  }
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::size_t CsvTable::column(std::string_view name) const {
  for (std::size_t j = 0; j < header.size(); ++j)
    if (header[j] == name) return j;
  throw DomainError("missing column '" + std::string(name) + "'");
}

std::vector<double> CsvTable::numeric_column(std::string_view name) const {
  const std::size_t j = column(name);
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(parse_double(r[j]));
  return out;
}

CsvWriter::CsvWriter(std::vector<std::string> header) : width_(header.size()) {
  for (std::size_t j = 0; j < header.size(); ++j) {
    if (j) out_ += ',';
    out_ += header[j];
  }
  out_ += '\n';
}

CsvWriter& CsvWriter::cell(double x) { return cell(std::string_view(format_double(x))); }

CsvWriter& CsvWriter::cell(std::int64_t x) { return cell(std::string_view(std::to_string(x))); }

CsvWriter& CsvWriter::cell(std::string_view text) {
  if (filled_ == width_) throw DomainError("csv row too wide");
  if (filled_) out_ += ',';
  out_ += text;
  ++filled_;
  return *this;
}

void CsvWriter::end_row() {
  if (filled_ != width_) throw DomainError("csv row too narrow");
  out_ += '\n';
  filled_ = 0;
}

namespace {

std::vector<std::string> split(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    out.emplace_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

}  // namespace

CsvTable parse_csv(std::string_view text) {
  CsvTable t;
  std::size_t pos = 0;
  bool first = true;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    pos = end + 1;
    if (line.empty()) continue;
    auto cells = split(line);
    if (first) {
      t.header = std::move(cells);
      first = false;
    } else {
      if (cells.size() != t.header.size()) throw DomainError("ragged csv row");
      t.rows.push_back(std::move(cells));
    }
  }
  if (first) throw DomainError("empty csv");
  return t;
}

CsvTable read_csv(const std::string& path) { return parse_csv(read_file(path)); }

Json RunManifest::to_json() const {
  Json j;
  j["command"] = command;
  j["parameters"] = parameters;
  j["seed"] = seed;
  j["tool_version"] = tool_version;
  j["timestamp"] = timestamp;
  return j;
}

RunManifest RunManifest::make(std::string command, Json parameters, std::uint64_t seed) {
  RunManifest m;
  m.command = std::move(command);
  m.parameters = std::move(parameters);
  m.seed = seed;
  m.tool_version = io::tool_version();
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm utc{};
  gmtime_r(&now, &utc);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &utc);
  m.timestamp = buf;
  return m;
}

std::string tool_version() { return JACOSPEC_VERSION; }

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

}  // namespace jacospec::io

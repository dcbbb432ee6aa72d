/*
Copyright (c) 2026 The gasline Authors

   Licensed under the Apache License, Version 2.0 (the "License");
   you may not use this file except in compliance with the License.
   You may obtain a copy of the License at

       http://www.apache.org/licenses/LICENSE-2.0

   Unless required by applicable law or agreed to in writing, software
   distributed under the License is distributed on an "AS IS" BASIS,
   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
   See the License for the specific language governing permissions and
   limitations under the License.
*/
#include "gasline/feature_store.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>

#include "gasline/error.hpp"

namespace gasline {

const char* to_string(Scope scope) { return scope == Scope::Vertex ? "vertex" : "edge"; }

void FeatureStore::attach(Scope scope, std::string name, Matrix values) {
  if (values.rows() != rows(scope)) {
    throw ShapeError(std::string(to_string(scope)) + " feature '" + name + "' has " +
                     std::to_string(values.rows()) + " rows, expected " +
                     std::to_string(rows(scope)));
  }
  auto& t = scope == Scope::Vertex ? vertex_ : edge_;
  if (t.contains(name)) {
    throw ContractError(std::string(to_string(scope)) + " feature '" + name +
                        "' is already attached");
  }
  t.emplace(std::move(name), std::move(values));
}

const Matrix& FeatureStore::get(Scope scope, const std::string& name) const {
  const auto& t = table(scope);
  auto it = t.find(name);
  if (it == t.end()) {
    throw NotFoundError(std::string(to_string(scope)) + " feature '" + name + "' not found");
  }
  ++reads_;
  return it->second;
}

bool FeatureStore::contains(Scope scope, const std::string& name) const {
  return table(scope).contains(name);
}

std::optional<std::size_t> FeatureStore::cols(Scope scope, const std::string& name) const {
  const auto& t = table(scope);
  auto it = t.find(name);
  if (it == t.end()) return std::nullopt;
  return it->second.cols();
}

std::vector<std::string> FeatureStore::names(Scope scope) const {
  std::vector<std::string> out;
  for (const auto& [name, _] : table(scope)) out.push_back(name);
  return out;
}

namespace {

std::vector<std::string_view> split_spaces(std::string_view line) {
  std::vector<std::string_view> tokens;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
    if (j > i) tokens.push_back(line.substr(i, j - i));
    i = j;
  }
  return tokens;
}

template <typename T>
bool parse_whole(std::string_view s, T& out) {
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

}  // namespace

Matrix read_feature_file(std::istream& in) {
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line)) throw ParseError("missing \"rows cols\" header", line_no);
  const auto header = split_spaces(line);
  std::size_t rows = 0;
  std::size_t cols = 0;
  if (header.size() != 2 || !parse_whole(header[0], rows) || !parse_whole(header[1], cols)) {
    throw ParseError("expected \"rows cols\" header, got \"" + line + "\"", line_no);
  }
  Matrix m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    ++line_no;
    if (!std::getline(in, line)) {
      throw ParseError("expected " + std::to_string(rows) + " rows, file ends after " +
                       std::to_string(r), line_no);
    }
    const auto tokens = split_spaces(line);
    if (tokens.size() != cols) {
      throw ParseError("expected " + std::to_string(cols) + " values, got " +
                       std::to_string(tokens.size()), line_no);
    }
    for (std::size_t c = 0; c < cols; ++c) {
      if (!parse_whole(tokens[c], m(r, c))) {
        throw ParseError("malformed float \"" + std::string(tokens[c]) + "\"", line_no);
      }
    }
  }
  while (std::getline(in, line)) {
    ++line_no;
    if (!split_spaces(line).empty()) throw ParseError("unexpected data after last row", line_no);
  }
  return m;
}

Matrix read_feature_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw NotFoundError("cannot open feature file " + path.string());
  return read_feature_file(in);
}

void write_feature_file(std::ostream& out, MatrixView values) {
  out << values.rows() << ' ' << values.cols() << '\n';
  char buf[64];
  for (std::size_t r = 0; r < values.rows(); ++r) {
    for (std::size_t c = 0; c < values.cols(); ++c) {
      if (c > 0) out << ' ';
      const auto res = std::to_chars(buf, buf + sizeof(buf), values(r, c));
      out.write(buf, res.ptr - buf);
    }
    out << '\n';
  }
}

void write_feature_file(const std::filesystem::path& path, MatrixView values) {
  std::ofstream out(path);
  if (!out) throw NotFoundError("cannot write feature file " + path.string());
  write_feature_file(out, values);
}

}  // namespace gasline

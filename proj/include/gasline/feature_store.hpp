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
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gasline/matrix.hpp"

namespace gasline {

enum class Scope : std::uint8_t { Vertex, Edge };

const char* to_string(Scope scope);

/// Named vertex and edge features. Vertex features have one row per vertex,
/// edge features one row per edge id.
///
/// Every get() is counted as a data read; metadata queries (contains, cols)
/// are not. The counter lets tests check that plan construction is lazy.
class FeatureStore {
 public:
  FeatureStore(std::size_t num_vertices, std::size_t num_edges)
      : num_vertices_(num_vertices), num_edges_(num_edges) {}

  std::size_t rows(Scope scope) const noexcept {
    return scope == Scope::Vertex ? num_vertices_ : num_edges_;
  }

  /// ShapeError on a row-count mismatch, ContractError on a duplicate name.
  void attach(Scope scope, std::string name, Matrix values);
  /// NotFoundError naming the scope and feature.
  const Matrix& get(Scope scope, const std::string& name) const;

  bool contains(Scope scope, const std::string& name) const;
  std::optional<std::size_t> cols(Scope scope, const std::string& name) const;
  std::vector<std::string> names(Scope scope) const;

  std::size_t reads() const noexcept { return reads_; }
  void reset_reads() noexcept { reads_ = 0; }

 private:
  const std::map<std::string, Matrix>& table(Scope scope) const {
    return scope == Scope::Vertex ? vertex_ : edge_;
  }

  std::size_t num_vertices_;
  std::size_t num_edges_;
  std::map<std::string, Matrix> vertex_;
  std::map<std::string, Matrix> edge_;
  mutable std::size_t reads_ = 0;
};

/// Feature file: a "rows cols" header line, then `rows` lines of `cols`
/// space-separated floats. ParseError with line numbers on malformed input.
Matrix read_feature_file(std::istream& in);
Matrix read_feature_file(const std::filesystem::path& path);

/// Writes values in shortest round-trip form, so files are byte-reproducible.
void write_feature_file(std::ostream& out, MatrixView values);
void write_feature_file(const std::filesystem::path& path, MatrixView values);

}  // namespace gasline

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
#include "gasline/kernels.hpp"

#include <algorithm>
#include <cmath>

#include "gasline/error.hpp"
#include "kernels_internal.hpp"

namespace gasline {

const char* to_string(ReduceOp op) {
  switch (op) {
    case ReduceOp::Sum: return "sum";
    case ReduceOp::Mean: return "mean";
    case ReduceOp::Max: return "max";
  }
  return "?";
}

namespace detail {

void matmul_into(MatrixView a, MatrixView b, float* out) {
  const std::size_t n = a.rows();
  const std::size_t k = a.cols();
  const std::size_t m = b.cols();
  std::fill(out, out + n * m, 0.0f);
  // i-t-j order: each out[i][j] still accumulates in ascending t.
  for (std::size_t i = 0; i < n; ++i) {
    float* orow = out + i * m;
    const float* arow = a.data() + i * k;
    for (std::size_t t = 0; t < k; ++t) {
      const float av = arow[t];
      const float* brow = b.data() + t * m;
      for (std::size_t j = 0; j < m; ++j) orow[j] += av * brow[j];
    }
  }
}

void reduce_sum_into(const float* x, std::size_t rows, std::size_t cols, std::size_t groups,
                     float* out) {
  const std::size_t width = cols / groups;
  for (std::size_t r = 0; r < rows; ++r) {
    const float* xr = x + r * cols;
    for (std::size_t g = 0; g < groups; ++g) {
      float acc = 0.0f;
      for (std::size_t c = g * width; c < (g + 1) * width; ++c) acc += xr[c];
      out[r * groups + g] = acc;
    }
  }
}

void scale_rows_into(const float* x, std::size_t rows, std::size_t cols, const float* scale,
                     std::size_t groups, float* out) {
  const std::size_t width = cols / groups;
  for (std::size_t r = 0; r < rows; ++r) {
    const float* xr = x + r * cols;
    float* orow = out + r * cols;
    for (std::size_t g = 0; g < groups; ++g) {
      const float s = scale[r * groups + g];
      for (std::size_t c = g * width; c < (g + 1) * width; ++c) orow[c] = xr[c] * s;
    }
  }
}

void check_groups(std::size_t cols, std::size_t groups, const char* what) {
  if (groups == 0 || cols % groups != 0) {
    throw ShapeError(std::string(what) + ": " + std::to_string(groups) +
                     " groups do not divide " + std::to_string(cols) + " columns");
  }
}

}  // namespace detail

Matrix matmul(MatrixView a, MatrixView b) {
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul shape mismatch: " + shape_string(a) + " x " + shape_string(b));
  }
  Matrix out(a.rows(), b.cols());
  detail::matmul_into(a, b, out.data());
  return out;
}

Matrix leaky_relu(MatrixView x, float slope) {
  Matrix out(x.rows(), x.cols());
  const float* in = x.data();
  float* o = out.data();
  for (std::size_t i = 0; i < x.size(); ++i) o[i] = in[i] >= 0.0f ? in[i] : slope * in[i];
  return out;
}

namespace {

void require_same(MatrixView a, MatrixView b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ShapeError(std::string(op) + " shape mismatch: " + shape_string(a) + " vs " +
                     shape_string(b));
  }
}

void check_segments(std::span<const std::uint32_t> segment_of_row, std::size_t rows,
                    std::size_t num_segments) {
  if (segment_of_row.size() != rows) {
    throw ContractError("segment id count " + std::to_string(segment_of_row.size()) +
                        " does not match " + std::to_string(rows) + " rows");
  }
  for (std::size_t i = 0; i < segment_of_row.size(); ++i) {
    if (segment_of_row[i] >= num_segments) {
      throw ContractError("segment id " + std::to_string(segment_of_row[i]) + " at row " +
                          std::to_string(i) + " is not below " + std::to_string(num_segments));
    }
    if (i > 0 && segment_of_row[i] < segment_of_row[i - 1]) {
      throw ContractError("segment ids are not sorted at row " + std::to_string(i));
    }
  }
}

}  // namespace

Matrix elem_add(MatrixView a, MatrixView b) {
  require_same(a, b, "add");
  Matrix out(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.size(); ++i) out.data()[i] = a.data()[i] + b.data()[i];
  return out;
}

Matrix elem_mul(MatrixView a, MatrixView b) {
  require_same(a, b, "mul");
  Matrix out(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.size(); ++i) out.data()[i] = a.data()[i] * b.data()[i];
  return out;
}

Matrix elem_exp(MatrixView x) {
  Matrix out(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.size(); ++i) out.data()[i] = std::exp(x.data()[i]);
  return out;
}

Matrix reduce_sum_last_dim(MatrixView x, std::size_t groups) {
  detail::check_groups(x.cols(), groups, "reduce_sum");
  Matrix out(x.rows(), groups);
  detail::reduce_sum_into(x.data(), x.rows(), x.cols(), groups, out.data());
  return out;
}

Matrix scale_rows(MatrixView x, MatrixView scale) {
  if (scale.rows() != x.rows()) {
    throw ShapeError("scale_rows row mismatch: " + shape_string(x) + " vs " +
                     shape_string(scale));
  }
  detail::check_groups(x.cols(), scale.cols(), "scale_rows");
  Matrix out(x.rows(), x.cols());
  detail::scale_rows_into(x.data(), x.rows(), x.cols(), scale.data(), scale.cols(), out.data());
  return out;
}

Matrix broadcast_row(std::span<const float> row, std::size_t rows) {
  Matrix out(rows, row.size());
  for (std::size_t r = 0; r < rows; ++r) std::copy(row.begin(), row.end(), out.row(r).begin());
  return out;
}

Matrix segment_reduce(MatrixView values, std::span<const std::uint32_t> segment_of_row,
                      std::size_t num_segments, ReduceOp op) {
  check_segments(segment_of_row, values.rows(), num_segments);
  const std::size_t f = values.cols();
  Matrix out(num_segments, f);
  std::vector<std::size_t> count(num_segments, 0);
  for (std::size_t r = 0; r < values.rows(); ++r) {
    const std::uint32_t s = segment_of_row[r];
    float* o = out.data() + s * f;
    const float* v = values.data() + r * f;
    if (count[s] == 0) {
      std::copy(v, v + f, o);
    } else if (op == ReduceOp::Max) {
      for (std::size_t c = 0; c < f; ++c) o[c] = std::max(o[c], v[c]);
    } else {
      for (std::size_t c = 0; c < f; ++c) o[c] += v[c];
    }
    ++count[s];
  }
  if (op == ReduceOp::Mean) {
    for (std::size_t s = 0; s < num_segments; ++s) {
      if (count[s] == 0) continue;
      const float denom = static_cast<float>(count[s]);
      for (auto& x : out.row(s)) x /= denom;
    }
  }
  return out;
}

Matrix segment_softmax(MatrixView logits, std::span<const std::uint32_t> segment_of_row,
                       std::size_t num_segments) {
  check_segments(segment_of_row, logits.rows(), num_segments);
  const std::size_t h = logits.cols();
  Matrix out(logits.rows(), h);
  std::size_t begin = 0;
  std::vector<float> peak(h);
  std::vector<float> total(h);
  while (begin < logits.rows()) {
    std::size_t end = begin + 1;
    while (end < logits.rows() && segment_of_row[end] == segment_of_row[begin]) ++end;
    std::copy(logits.data() + begin * h, logits.data() + (begin + 1) * h, peak.begin());
    for (std::size_t r = begin + 1; r < end; ++r) {
      for (std::size_t c = 0; c < h; ++c) peak[c] = std::max(peak[c], logits(r, c));
    }
    std::fill(total.begin(), total.end(), 0.0f);
    for (std::size_t r = begin; r < end; ++r) {
      for (std::size_t c = 0; c < h; ++c) {
        const float e = std::exp(logits(r, c) - peak[c]);
        out(r, c) = e;
        total[c] += e;
      }
    }
    for (std::size_t r = begin; r < end; ++r) {
      for (std::size_t c = 0; c < h; ++c) out(r, c) /= total[c];
    }
    begin = end;
  }
  return out;
}

Matrix gather_rows(MatrixView x, std::span<const std::uint32_t> index) {
  Matrix out(index.size(), x.cols());
  for (std::size_t i = 0; i < index.size(); ++i) {
    if (index[i] >= x.rows()) {
      throw ContractError("gather index " + std::to_string(index[i]) + " out of range for " +
                          shape_string(x));
    }
    const auto src = x.row(index[i]);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}

}  // namespace gasline

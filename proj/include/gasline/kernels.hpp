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

#include <cstdint>
#include <span>

#include "gasline/matrix.hpp"

// Dense kernels. All are pure functions of their inputs; every reduction
// accumulates in ascending index order so results are reproducible bit for bit.

namespace gasline {

enum class ReduceOp { Sum, Mean, Max };

const char* to_string(ReduceOp op);

/// out[i][j] = sum_t a[i][t] * b[t][j], accumulated in ascending t.
Matrix matmul(MatrixView a, MatrixView b);

/// out = x where x >= 0, slope * x elsewhere.
Matrix leaky_relu(MatrixView x, float slope);

Matrix elem_add(MatrixView a, MatrixView b);
Matrix elem_mul(MatrixView a, MatrixView b);
Matrix elem_exp(MatrixView x);

/// Sums each row in `groups` contiguous column blocks. groups must divide cols.
/// groups == 1 is the plain last-dimension sum.
Matrix reduce_sum_last_dim(MatrixView x, std::size_t groups = 1);

/// Scales each row of x by the matching row of scale. scale.cols() = g must
/// divide x.cols(); column block k of every row is scaled by scale[r][k].
Matrix scale_rows(MatrixView x, MatrixView scale);

/// Broadcasts a 1 x c row to rows x c.
Matrix broadcast_row(std::span<const float> row, std::size_t rows);

/// Per-segment reduction of rows. segment_of_row must be nondecreasing with
/// every id < num_segments (ContractError otherwise). Empty segments yield 0
/// for every op, including Max.
Matrix segment_reduce(MatrixView values, std::span<const std::uint32_t> segment_of_row,
                      std::size_t num_segments, ReduceOp op);

/// Column-wise softmax within each segment, shifted by the segment maximum.
/// Same segment contract as segment_reduce.
Matrix segment_softmax(MatrixView logits, std::span<const std::uint32_t> segment_of_row,
                       std::size_t num_segments);

/// out[i] = x[index[i]].
Matrix gather_rows(MatrixView x, std::span<const std::uint32_t> index);

}  // namespace gasline

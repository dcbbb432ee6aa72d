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

#include "gasline/matrix.hpp"

// Allocation-free kernel bodies shared by the public kernels and compiled
// programs. Callers have already validated shapes.

namespace gasline::detail {

void matmul_into(MatrixView a, MatrixView b, float* out);
void reduce_sum_into(const float* x, std::size_t rows, std::size_t cols, std::size_t groups,
                     float* out);
void scale_rows_into(const float* x, std::size_t rows, std::size_t cols, const float* scale,
                     std::size_t groups, float* out);
void check_groups(std::size_t cols, std::size_t groups, const char* what);

}  // namespace gasline::detail

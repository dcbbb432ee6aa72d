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

#include <map>
#include <span>
#include <string>
#include <vector>

#include "gasline/matrix.hpp"
#include "gasline/module_graph.hpp"

namespace gasline {

/// Reference evaluation: every node is computed by a standalone kernel call in
/// topological order, materializing each intermediate. Inputs are positional
/// by input slot and must share one row count.
std::vector<Matrix> interpret_module(const ModuleGraph& m, std::span<const MatrixView> inputs);

/// Name-keyed convenience overload (input slot names in, output slot names out).
std::map<std::string, Matrix> interpret_module(const ModuleGraph& m,
                                               const std::map<std::string, Matrix>& inputs);

}  // namespace gasline

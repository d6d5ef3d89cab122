// Copyright 2026 The dceeval Authors
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

#include <string>
#include <vector>

#include "dceeval/cli.hpp"

// Command bodies behind dceeval::cli::execute. Each returns the report
// filenames it wrote below config.out.
namespace dceeval::cli::detail {

std::vector<std::string> evaluate_pairs(const RunConfig& config);
std::vector<std::string> frechet(const RunConfig& config);
std::vector<std::string> same_select(const RunConfig& config);
std::vector<std::string> subtract(const RunConfig& config);
std::vector<std::string> stack(const RunConfig& config);
std::vector<std::string> kinetics(const RunConfig& config);
std::vector<std::string> phantom(const RunConfig& config);
std::vector<std::string> extract_features(const RunConfig& config);

}  // namespace dceeval::cli::detail

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

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dceeval/pair_metrics.hpp"

namespace dceeval::cli {

namespace fs = std::filesystem;

inline constexpr const char* kToolkitName = "dceeval";
inline constexpr const char* kToolkitVersion = "0.1.0";
inline constexpr const char* kWorkersEnv = "DCEEVAL_WORKERS";

enum class Command {
  kEvaluatePairs,
  kFrechet,
  kSameSelect,
  kSubtract,
  kStack,
  kKinetics,
  kPhantom,
  kExtractFeatures,
};

std::string_view command_name(Command c);
std::optional<Command> parse_command(std::string_view name);

struct RunConfig {
  Command command = Command::kEvaluatePairs;
  fs::path inputs_a;
  fs::path inputs_b;
  fs::path bboxes;
  fs::path features_a;
  fs::path features_b;
  fs::path directions;
  fs::path spec;
  fs::path out;
  std::string extractor_id;  // for header-less CSV feature input
  int workers = 1;
  metrics::MetricSelection metrics;
  std::string metrics_list = "mse,mae,psnr,ssim,msssim";

  /// Checks that the inputs the command needs exist and the output
  /// directory can be created. Throws dceeval::Error.
  void validate() const;
};

/// Worker default: DCEEVAL_WORKERS when set to a positive integer, else 1.
int default_workers();

/// Parses argv (argv[0] is the program name). Throws dceeval::Error on
/// usage errors. Returns nullopt when help was printed.
std::optional<RunConfig> parse_command_line(int argc, const char* const* argv);

/// Executes one command: writes its reports and `run-manifest.json` under
/// config.out. Throws dceeval::Error on failure.
void execute(const RunConfig& config);

/// execute() wrapped for process use: returns 0 on success; otherwise prints
/// an error JSON document to stderr, writes `error.json` when the output
/// directory is usable, and returns nonzero.
int run(const RunConfig& config);

/// Full process entry point: parse, then run.
int main(int argc, const char* const* argv);

// Report filenames.
inline constexpr const char* kPairsCsv = "pairs.csv";
inline constexpr const char* kSummaryJson = "summary.json";
inline constexpr const char* kUnpairedCsv = "unpaired.csv";
inline constexpr const char* kManifestJson = "run-manifest.json";
inline constexpr const char* kErrorJson = "error.json";
inline constexpr const char* kFrechetJson = "frechet.json";
inline constexpr const char* kSameCsv = "same_scaled.csv";
inline constexpr const char* kSameJson = "same.json";
inline constexpr const char* kFeaturesFile = "features.fset";
inline constexpr const char* kFeatureIndexCsv = "features_index.csv";
inline constexpr const char* kStackJson = "stack.json";
inline constexpr const char* kKineticsCsv = "kinetics_cases.csv";
inline constexpr const char* kKineticsWarningsCsv = "kinetics_warnings.csv";
inline constexpr const char* kOffsetJson = "kinetics_offset.json";
inline constexpr const char* kBboxesCsv = "bboxes.csv";

}  // namespace dceeval::cli

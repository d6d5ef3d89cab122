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

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace dceeval::same {

// Scaled Aggregate Measure (SAMe).
//
// Every metric is min-max scaled to [0, 1] across the checkpoint cohort and
// aligned so that 0 is best: higher-is-better metrics are reversed after
// scaling. A checkpoint's score is the unweighted mean of its scaled values
// and the lowest score wins.
//
// The cohort is exactly the set of checkpoints passed in. Adding or removing
// a checkpoint moves the min/max anchors and can change every score, so the
// same raw numbers scaled within a subset may select a different winner.

enum class Direction { kLowerBetter, kHigherBetter };

/// Built-in directions: MSE, MAE, LPIPS and any FID variant are lower-better;
/// SSIM, MS-SSIM and PSNR are higher-better. Matching is case-insensitive.
std::optional<Direction> default_direction(std::string_view metric);

/// Accepts "lower" / "higher".
std::optional<Direction> parse_direction(std::string_view token);
std::string_view direction_name(Direction d);

using DirectionMap = std::map<std::string, Direction>;

struct CheckpointRecord {
  std::string checkpoint_id;
  std::map<std::string, double> raw;
};

struct ScaledCheckpoint {
  std::string checkpoint_id;
  std::map<std::string, double> scaled;
  double score = 0.0;
};

struct SAMeTable {
  std::vector<std::string> metrics;  // sorted
  DirectionMap directions;
  std::vector<ScaledCheckpoint> rows;  // cohort order
  std::string selected;
};

/// Value a constant metric (max == min) contributes for every checkpoint.
inline constexpr double kConstantMetricScore = 0.5;

/// Scales a cohort of at least two checkpoints. Metrics without an entry in
/// `directions` fall back to default_direction(); an unknown metric is an
/// error.
SAMeTable scale_cohort(const std::vector<CheckpointRecord>& records,
                       const DirectionMap& directions = {});

/// Checkpoint with the lowest score; ties go to the earliest in cohort order.
std::string select_checkpoint(const SAMeTable& table);

/// `checkpoint_id,<metric>,...` with one row per checkpoint.
std::vector<CheckpointRecord> records_from_csv(std::string_view text);

/// `{"metric": "lower" | "higher", ...}`
DirectionMap directions_from_json(std::string_view text);

/// `checkpoint_id,<metrics...>,same` with scaled values.
std::string table_to_csv(const SAMeTable& table);

/// `{"scores": {checkpoint: same}, "selected": id}`
std::string table_to_json(const SAMeTable& table);

}  // namespace dceeval::same

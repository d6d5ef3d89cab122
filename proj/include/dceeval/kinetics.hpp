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

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dceeval/image.hpp"

namespace dceeval::kinetics {

enum class Source { kReal, kSynthetic };

std::string_view source_name(Source s);  // REAL / SYNTHETIC
std::optional<Source> parse_source(std::string_view token);

/// Pooled intensity statistics of one phase inside the lesion box.
/// `std` is the population standard deviation over pooled pixels.
struct PhaseStats {
  double mean = 0.0;
  double std = 0.0;
  std::size_t pixel_count = 0;
  std::uint64_t sum = 0;
  std::uint64_t sum_sq = 0;
};

struct KineticsSeries {
  std::string case_id;
  Source source = Source::kReal;
  std::map<Phase, PhaseStats> phases;
  /// Phases for which no volume was supplied. Non-empty means the series is
  /// partial.
  std::vector<Phase> missing_phases;
};

/// Pools every pixel inside the box rectangle over slices [slice_lo,
/// slice_hi) for each supplied phase. With `roi`, only pixels that are also
/// set in the 3D mask (width, height, depth) are pooled.
KineticsSeries case_kinetics(const std::map<Phase, Volume>& volumes,
                             const BoundingBox& bbox, Source source,
                             const Mask* roi = nullptr);

struct PhaseAggregate {
  double mean_of_means = 0.0;
  double std_across_cases = 0.0;   // population std of the case means
  double std_within_pixels = 0.0;  // population std of all pooled pixels
  std::size_t n_cases = 0;
  std::size_t pixel_count = 0;
};

struct KineticsAggregate {
  Source source = Source::kReal;
  std::size_t n_cases = 0;
  std::map<Phase, PhaseAggregate> phases;
};

/// Per phase, over the series that contain it. Series are ordered by case_id
/// before reduction. All series must share one source.
KineticsAggregate aggregate_kinetics(std::vector<KineticsSeries> series);

struct OrderingReport {
  std::size_t n_cases = 0;
  std::size_t n_increasing = 0;
  double fraction = 0.0;
};

/// Share of cases whose means strictly increase DCE_P1 < DCE_P2 < DCE_P3.
OrderingReport ordering_report(const std::vector<KineticsSeries>& series);
double ordering_fraction(const std::vector<KineticsSeries>& series);

/// Per phase: real mean-of-means minus synthetic mean-of-means.
std::map<Phase, double> source_offset(const KineticsAggregate& real,
                                      const KineticsAggregate& synthetic);

/// `case_id,source,phase,mean,std,pixel_count`, rows sorted by case, source
/// and phase.
std::string series_to_csv(std::vector<KineticsSeries> series);
std::string aggregate_to_json(const KineticsAggregate& aggregate);
std::string ordering_to_json(const OrderingReport& report);

}  // namespace dceeval::kinetics

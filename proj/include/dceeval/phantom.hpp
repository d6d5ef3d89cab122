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

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "dceeval/image.hpp"

namespace dceeval::phantom {

/// SplitMix64 evaluated in counter mode: the value equals the (counter+1)-th
/// output of a SplitMix64 stream seeded with `seed`, so any voxel's noise can
/// be reproduced independently of generation order.
std::uint64_t splitmix64_at(std::uint64_t seed, std::uint64_t counter);

/// Uniform integer in [-amplitude, amplitude] from one generator output.
int uniform_offset(std::uint64_t random_bits, int amplitude);

struct Ellipsoid {
  std::array<double, 3> center{};      // x, y, slice
  std::array<double, 3> semi_axes{};   // x, y, slice; all > 0
};

struct PhantomSpec {
  std::uint64_t seed = 0;
  std::string case_id = "phantom";
  int width = 64;
  int height = 64;
  int depth = 8;
  int background_mean = 20;
  int noise_amplitude = 0;
  Ellipsoid lesion;
  std::map<Phase, int> lesion_means;

  /// Throws unless dimensions, intensities and the lesion placement are valid.
  void validate() const;
};

struct PhantomCase {
  std::map<Phase, Volume> volumes;
  BoundingBox bbox;  // tight box around the lesion voxels
  Mask mask;         // 3D (width, height, depth); set on lesion voxels
};

PhantomCase generate_phantom(const PhantomSpec& spec);

/// JSON object form:
///   {"seed", "case_id", "width", "height", "depth", "background_mean",
///    "noise_amplitude", "lesion": {"center": [x,y,z], "semi_axes": [x,y,z]},
///    "phase_means": {"PRE": v, "DCE_P1": v, ...}}
PhantomSpec spec_from_json(std::string_view text);
std::vector<PhantomSpec> specs_from_json(std::string_view text);

/// Writes `<out>/images/<case>/<phase>/` volume directories and
/// `<out>/masks/<case>/<case>_MASK_<slice>.png`.
void write_phantom(const PhantomCase& phantom, const std::filesystem::path& out);

}  // namespace dceeval::phantom

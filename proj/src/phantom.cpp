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

#include "dceeval/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include <json.hpp>

#include "dceeval/error.hpp"
#include "dceeval/image_io.hpp"

namespace dceeval::phantom {

std::uint64_t splitmix64_at(std::uint64_t seed, std::uint64_t counter) {
  std::uint64_t z = seed + (counter + 1) * 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

int uniform_offset(std::uint64_t random_bits, int amplitude) {
  if (amplitude <= 0) return 0;
  const auto span = static_cast<std::uint64_t>(2 * amplitude + 1);
  return static_cast<int>(random_bits % span) - amplitude;
}

void PhantomSpec::validate() const {
  auto fail = [&](const std::string& why) {
    throw Error("phantom '" + case_id + "': " + why);
  };
  if (width < 1 || height < 1 || depth < 1) fail("dimensions must be positive");
  if (background_mean < 0 || background_mean > 255)
    fail("background mean outside [0,255]");
  if (noise_amplitude < 0 || noise_amplitude > 255)
    fail("noise amplitude outside [0,255]");
  if (lesion_means.empty()) fail("no phase means programmed");
  for (const auto& [phase, mean] : lesion_means) {
    if (mean < 0 || mean > 255) {
      fail("lesion mean for " + std::string(phase_name(phase)) +
           " outside [0,255]");
    }
  }
  const std::array<int, 3> extent = {width, height, depth};
  const char* axis[3] = {"x", "y", "slice"};
  for (int i = 0; i < 3; ++i) {
    const double c = lesion.center[i];
    const double r = lesion.semi_axes[i];
    if (!(r > 0.0) || !std::isfinite(c) || !std::isfinite(r)) {
      fail(std::string("lesion semi-axis along ") + axis[i] + " must be positive");
    }
    if (c - r < 0.0 || c + r > extent[i] - 1) {
      fail(std::string("lesion ellipsoid leaves the volume along ") + axis[i]);
    }
  }
}

PhantomCase generate_phantom(const PhantomSpec& spec) {
  spec.validate();
  const int w = spec.width;
  const int h = spec.height;
  const int d = spec.depth;
  const std::size_t plane = static_cast<std::size_t>(w) * h;

  std::vector<std::uint8_t> inside(plane * d, 0);
  int x0 = w, y0 = h, z0 = d, x1 = -1, y1 = -1, z1 = -1;
  for (int z = 0; z < d; ++z) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const double dx = (x - spec.lesion.center[0]) / spec.lesion.semi_axes[0];
        const double dy = (y - spec.lesion.center[1]) / spec.lesion.semi_axes[1];
        const double dz = (z - spec.lesion.center[2]) / spec.lesion.semi_axes[2];
        if (dx * dx + dy * dy + dz * dz <= 1.0) {
          inside[z * plane + static_cast<std::size_t>(y) * w + x] = 1;
          x0 = std::min(x0, x);
          x1 = std::max(x1, x);
          y0 = std::min(y0, y);
          y1 = std::max(y1, y);
          z0 = std::min(z0, z);
          z1 = std::max(z1, z);
        }
      }
    }
  }
  if (x1 < 0) {
    throw Error("phantom '" + spec.case_id +
                "': lesion ellipsoid contains no voxel centre");
  }

  std::map<Phase, Volume> volumes;
  for (const auto& [phase, lesion_mean] : spec.lesion_means) {
    const auto phase_index = static_cast<std::uint64_t>(phase);
    std::vector<Image2D> slices;
    slices.reserve(d);
    for (int z = 0; z < d; ++z) {
      std::vector<std::uint8_t> px(plane);
      for (std::size_t i = 0; i < plane; ++i) {
        const std::size_t voxel = z * plane + i;
        const int base = inside[voxel] ? lesion_mean : spec.background_mean;
        const std::uint64_t counter = phase_index * plane * d + voxel;
        const int noise = uniform_offset(splitmix64_at(spec.seed, counter),
                                         spec.noise_amplitude);
        px[i] = static_cast<std::uint8_t>(std::clamp(base + noise, 0, 255));
      }
      slices.emplace_back(w, h, std::move(px), spec.case_id, phase, z);
    }
    volumes.emplace(phase, Volume(std::move(slices)));
  }

  BoundingBox box{spec.case_id, x0, y0, x1 + 1, y1 + 1, z0, z1 + 1};
  Mask mask({static_cast<std::size_t>(w), static_cast<std::size_t>(h),
             static_cast<std::size_t>(d)},
            std::move(inside));
  return PhantomCase{std::move(volumes), std::move(box), std::move(mask)};
}

namespace {

PhantomSpec spec_from_object(const nlohmann::json& j) {
  if (!j.is_object()) throw Error("phantom spec must be a JSON object");
  PhantomSpec s;
  try {
    s.seed = j.value("seed", std::uint64_t{0});
    s.case_id = j.value("case_id", s.case_id);
    s.width = j.value("width", s.width);
    s.height = j.value("height", s.height);
    s.depth = j.value("depth", s.depth);
    s.background_mean = j.value("background_mean", s.background_mean);
    s.noise_amplitude = j.value("noise_amplitude", s.noise_amplitude);
    const auto& lesion = j.at("lesion");
    const auto center = lesion.at("center").get<std::vector<double>>();
    const auto axes = lesion.at("semi_axes").get<std::vector<double>>();
    if (center.size() != 3 || axes.size() != 3) {
      throw Error("lesion center and semi_axes need three values each");
    }
    std::copy(center.begin(), center.end(), s.lesion.center.begin());
    std::copy(axes.begin(), axes.end(), s.lesion.semi_axes.begin());
    for (const auto& [name, value] : j.at("phase_means").items()) {
      const auto phase = parse_phase(name);
      if (!phase) throw Error("unknown phase '" + name + "' in phase_means");
      s.lesion_means[*phase] = value.get<int>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("invalid phantom spec: ") + e.what());
  }
  s.validate();
  return s;
}

}  // namespace

PhantomSpec spec_from_json(std::string_view text) {
  try {
    return spec_from_object(nlohmann::json::parse(text));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(std::string("invalid phantom spec JSON: ") + e.what());
  }
}

std::vector<PhantomSpec> specs_from_json(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(std::string("invalid phantom spec JSON: ") + e.what());
  }
  std::vector<PhantomSpec> out;
  if (j.is_array()) {
    for (const auto& item : j) out.push_back(spec_from_object(item));
  } else {
    out.push_back(spec_from_object(j));
  }
  return out;
}

void write_phantom(const PhantomCase& phantom, const std::filesystem::path& out) {
  for (const auto& [phase, volume] : phantom.volumes) {
    io::write_volume_dir(volume, out / "images" / volume.case_id() /
                                     std::string(phase_name(phase)));
  }
  const auto& shape = phantom.mask.shape();
  const int w = static_cast<int>(shape[0]);
  const int h = static_cast<int>(shape[1]);
  const std::size_t plane = shape[0] * shape[1];
  const auto dir = out / "masks" / phantom.bbox.case_id;
  std::filesystem::create_directories(dir);
  const auto values = phantom.mask.values();
  for (std::size_t z = 0; z < shape[2]; ++z) {
    std::vector<std::uint8_t> bits(values.begin() + z * plane,
                                   values.begin() + (z + 1) * plane);
    char name[64];
    std::snprintf(name, sizeof(name), "_MASK_%04zu.png", z);
    io::write_mask_png(w, h, bits, dir / (phantom.bbox.case_id + name));
  }
}

}  // namespace dceeval::phantom

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

#include <gtest/gtest.h>

#include "dceeval/error.hpp"
#include "dceeval/image_io.hpp"
#include "dceeval/pair_metrics.hpp"
#include "test_support.hpp"

namespace dceeval::phantom {
namespace {

using testing::lesion_spec;

TEST(SplitMix64, ReferenceSequenceForSeedZero) {
  EXPECT_EQ(splitmix64_at(0, 0), 0xE220A8397B1DCDAFULL);
  EXPECT_EQ(splitmix64_at(0, 1), 0x6E789E6AA1B965F4ULL);
  EXPECT_EQ(splitmix64_at(0, 2), 0x06C45D188009454FULL);
}

TEST(UniformOffset, BoundedAndCoversRange) {
  EXPECT_EQ(uniform_offset(12345, 0), 0);
  std::array<int, 5> hits{};
  for (std::uint64_t i = 0; i < 1000; ++i) {
    const int v = uniform_offset(splitmix64_at(9, i), 2);
    ASSERT_GE(v, -2);
    ASSERT_LE(v, 2);
    ++hits[v + 2];
  }
  for (int h : hits) EXPECT_GT(h, 100);
}

TEST(Phantom, ZeroNoiseLesionEqualsProgrammedMean) {
  const auto ph = generate_phantom(lesion_spec(1, "p", {30, 80, 120, 140}, 0));
  const std::size_t plane = 48 * 40;
  for (const auto& [phase, vol] : ph.volumes) {
    const int expect = phase == Phase::kPre ? 30 : phase == Phase::kDceP1 ? 80
                       : phase == Phase::kDceP2 ? 120 : 140;
    for (int z = 0; z < vol.depth(); ++z) {
      for (int y = 0; y < 40; ++y) {
        for (int x = 0; x < 48; ++x) {
          const bool in = ph.mask[z * plane + y * 48 + x];
          EXPECT_EQ(vol.slice(z).at(x, y), in ? expect : 20);
        }
      }
    }
  }
}

TEST(Phantom, DeterministicAndSeedSensitive) {
  const auto spec = lesion_spec(77, "p", {30, 80, 120, 140}, 5);
  const auto a = generate_phantom(spec);
  const auto b = generate_phantom(spec);
  EXPECT_EQ(a.volumes, b.volumes);
  EXPECT_EQ(a.bbox, b.bbox);
  auto other = spec;
  other.seed = 78;
  EXPECT_NE(generate_phantom(other).volumes, a.volumes);
}

TEST(Phantom, NoiseBounded) {
  const auto ph = generate_phantom(lesion_spec(3, "p", {30, 80, 120, 140}, 3));
  const auto flat = generate_phantom(lesion_spec(3, "p", {30, 80, 120, 140}, 0));
  for (const auto& [phase, vol] : ph.volumes) {
    for (int z = 0; z < vol.depth(); ++z) {
      const auto noisy = vol.slice(z).pixels();
      const auto clean = flat.volumes.at(phase).slice(z).pixels();
      for (std::size_t i = 0; i < noisy.size(); ++i) {
        ASSERT_LE(std::abs(int(noisy[i]) - int(clean[i])), 3);
      }
    }
  }
}

TEST(Phantom, MaskInsideTightBox) {
  const auto ph = generate_phantom(lesion_spec(4, "p", {30, 80, 120, 140}, 1));
  const auto& box = ph.bbox;
  const std::size_t plane = 48 * 40;
  int x0 = 48, x1 = -1, y0 = 40, y1 = -1, z0 = 10, z1 = -1;
  for (int z = 0; z < 10; ++z) {
    for (int y = 0; y < 40; ++y) {
      for (int x = 0; x < 48; ++x) {
        if (!ph.mask[z * plane + y * 48 + x]) continue;
        EXPECT_TRUE(x >= box.x0 && x < box.x1 && y >= box.y0 && y < box.y1 &&
                    z >= box.slice_lo && z < box.slice_hi);
        x0 = std::min(x0, x), x1 = std::max(x1, x);
        y0 = std::min(y0, y), y1 = std::max(y1, y);
        z0 = std::min(z0, z), z1 = std::max(z1, z);
      }
    }
  }
  EXPECT_EQ(box, (BoundingBox{"p", x0, y0, x1 + 1, y1 + 1, z0, z1 + 1}));
  EXPECT_EQ(metrics::dice(ph.mask, ph.mask), 1.0);
}

TEST(Phantom, Validation) {
  auto spec = lesion_spec(1, "p", {30, 80, 120, 140}, 0);
  spec.lesion.center[0] = 2.0;
  EXPECT_THROW(generate_phantom(spec), Error);
  spec = lesion_spec(1, "p", {30, 80, 120, 300}, 0);
  EXPECT_THROW(generate_phantom(spec), Error);
  spec = lesion_spec(1, "p", {30, 80, 120, 140}, 0);
  spec.lesion.semi_axes[2] = 0.0;
  EXPECT_THROW(generate_phantom(spec), Error);
}

TEST(Phantom, SpecJson) {
  const auto spec = spec_from_json(R"({
    "seed": 5, "case_id": "ph1", "width": 32, "height": 32, "depth": 6,
    "background_mean": 15, "noise_amplitude": 2,
    "lesion": {"center": [16, 16, 2.5], "semi_axes": [6, 5, 2]},
    "phase_means": {"PRE": 40, "DCE_P1": 90, "DCE_P2": 110, "DCE_P3": 130}
  })");
  EXPECT_EQ(spec.seed, 5u);
  EXPECT_EQ(spec.case_id, "ph1");
  EXPECT_EQ(spec.lesion_means.at(Phase::kDceP2), 110);
  EXPECT_EQ(spec.lesion.semi_axes[1], 5.0);
  EXPECT_EQ(specs_from_json("[" + std::string(R"({"lesion": {"center": [30, 30, 3], "semi_axes": [4, 4, 2]}, "phase_means": {"DCE_P1": 50}})") + "]").size(), 1u);
  EXPECT_THROW(spec_from_json(R"({"phase_means": {"P9": 1}})"), Error);
  EXPECT_THROW(spec_from_json("{"), Error);
}

TEST(Phantom, WriteLayout) {
  testing::TempDir dir;
  const auto ph = generate_phantom(lesion_spec(8, "case7", {30, 80, 120, 140}, 2));
  write_phantom(ph, dir.path());
  EXPECT_TRUE(std::filesystem::exists(dir / "images/case7/DCE_P2/case7_DCE_P2_0003.png"));
  EXPECT_TRUE(std::filesystem::exists(dir / "masks/case7/case7_MASK_0003.png"));
  const auto loaded = io::load_volumes(dir / "images");
  EXPECT_EQ(loaded.size(), 4u);
  EXPECT_EQ(loaded.at({"case7", Phase::kDceP3}), ph.volumes.at(Phase::kDceP3));
}

}  // namespace
}  // namespace dceeval::phantom

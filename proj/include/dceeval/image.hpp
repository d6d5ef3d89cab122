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
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace dceeval {

/// Acquisition phase of a slice: pre-contrast or one of the first three
/// post-contrast DCE timepoints.
enum class Phase : std::uint8_t { kPre = 0, kDceP1 = 1, kDceP2 = 2, kDceP3 = 3 };

inline constexpr std::array<Phase, 4> kAllPhases = {Phase::kPre, Phase::kDceP1,
                                                    Phase::kDceP2, Phase::kDceP3};

/// Canonical token used in filenames and reports: PRE, DCE_P1, DCE_P2, DCE_P3.
std::string_view phase_name(Phase phase);
std::optional<Phase> parse_phase(std::string_view token);

/// Round-half-up to the nearest integer, clamped to the 8-bit range.
std::uint8_t round_to_u8(double value);

/// One axial grayscale slice with 8-bit intensities, stored row-major.
class Image2D {
 public:
  Image2D(int width, int height, std::vector<std::uint8_t> pixels,
          std::string case_id = {}, Phase phase = Phase::kPre,
          int slice_index = 0);

  static Image2D filled(int width, int height, std::uint8_t value,
                        std::string case_id = {}, Phase phase = Phase::kPre,
                        int slice_index = 0);

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return pixels_.size(); }
  std::span<const std::uint8_t> pixels() const { return pixels_; }
  std::uint8_t at(int x, int y) const {
    return pixels_[static_cast<std::size_t>(y) * width_ + x];
  }

  const std::string& case_id() const { return case_id_; }
  Phase phase() const { return phase_; }
  int slice_index() const { return slice_index_; }

  /// Same pixels, different identity metadata.
  Image2D relabeled(std::string case_id, Phase phase, int slice_index) const;

  bool same_shape(const Image2D& other) const {
    return width_ == other.width_ && height_ == other.height_;
  }

  friend bool operator==(const Image2D&, const Image2D&) = default;

 private:
  int width_;
  int height_;
  std::vector<std::uint8_t> pixels_;
  std::string case_id_;
  Phase phase_;
  int slice_index_;
};

/// Real-valued source array before normalization. Values are laid out with
/// x fastest, then y, then slice.
struct RawVolume {
  int width = 0;
  int height = 0;
  int depth = 0;
  std::vector<double> values;
};

/// Ordered stack of slices forming one case/phase acquisition.
class Volume {
 public:
  explicit Volume(std::vector<Image2D> slices,
                  std::optional<RawVolume> raw = std::nullopt);

  int width() const { return slices_.front().width(); }
  int height() const { return slices_.front().height(); }
  int depth() const { return static_cast<int>(slices_.size()); }
  const std::string& case_id() const { return slices_.front().case_id(); }
  Phase phase() const { return slices_.front().phase(); }

  const std::vector<Image2D>& slices() const { return slices_; }
  const Image2D& slice(int index) const { return slices_.at(index); }
  const std::optional<RawVolume>& raw() const { return raw_; }

  // Equality is over the slices; the raw source array is provenance only.
  friend bool operator==(const Volume& a, const Volume& b) {
    return a.slices_ == b.slices_;
  }

 private:
  std::vector<Image2D> slices_;
  std::optional<RawVolume> raw_;
};

/// Lesion region of interest. Pixel and slice ranges are half-open.
struct BoundingBox {
  std::string case_id;
  int x0 = 0;
  int y0 = 0;
  int x1 = 0;
  int y1 = 0;
  int slice_lo = 0;
  int slice_hi = 0;

  int width() const { return x1 - x0; }
  int height() const { return y1 - y0; }
  std::size_t pixel_count() const {
    return static_cast<std::size_t>(width()) * height() * (slice_hi - slice_lo);
  }

  /// Throws unless the box is non-empty and lies within the given extents.
  void validate(int image_width, int image_height, int depth) const;

  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

/// Binary mask over a 2D (width, height) or 3D (width, height, depth) grid.
class Mask {
 public:
  Mask(std::vector<std::size_t> shape, std::vector<std::uint8_t> values);

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t size() const { return values_.size(); }
  bool operator[](std::size_t i) const { return values_[i] != 0; }
  std::span<const std::uint8_t> values() const { return values_; }
  std::size_t count() const;

 private:
  std::vector<std::size_t> shape_;
  std::vector<std::uint8_t> values_;
};

/// Min-max normalize a raw volume to [0, 255] per volume. A constant volume
/// maps to all zeros.
Volume normalize_volume(const RawVolume& raw, std::string case_id = {},
                        Phase phase = Phase::kPre);

/// Bilinear resize with half-pixel-centered sampling and round-half-up.
Image2D resize_to_unit_aspect(const Image2D& img, int target_width,
                              int target_height);

/// Stack ordered slices into a volume. Slices must share dimensions and
/// identity, with indices 0..n-1 in order.
Volume stack_volume(std::vector<Image2D> slices);

std::vector<Image2D> extract_slices(const Volume& volume);

/// max(post - pre, 0) per pixel. The result carries post's identity.
Image2D subtraction_image(const Image2D& pre, const Image2D& post);

}  // namespace dceeval

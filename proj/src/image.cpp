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

#include "dceeval/image.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <utility>

#include "dceeval/error.hpp"

namespace dceeval {

std::string_view phase_name(Phase phase) {
  switch (phase) {
    case Phase::kPre:
      return "PRE";
    case Phase::kDceP1:
      return "DCE_P1";
    case Phase::kDceP2:
      return "DCE_P2";
    case Phase::kDceP3:
      return "DCE_P3";
  }
  return "UNKNOWN";
}

std::optional<Phase> parse_phase(std::string_view token) {
  for (Phase p : kAllPhases) {
    if (phase_name(p) == token) return p;
  }
  return std::nullopt;
}

std::uint8_t round_to_u8(double value) {
  const double r = std::floor(value + 0.5);
  if (!(r > 0.0)) return 0;
  if (r >= 255.0) return 255;
  return static_cast<std::uint8_t>(r);
}

// ---------------------------------------------------------------------------
// Image2D

Image2D::Image2D(int width, int height, std::vector<std::uint8_t> pixels,
                 std::string case_id, Phase phase, int slice_index)
    : width_(width),
      height_(height),
      pixels_(std::move(pixels)),
      case_id_(std::move(case_id)),
      phase_(phase),
      slice_index_(slice_index) {
  if (width_ < 1 || height_ < 1) {
    std::ostringstream msg;
    msg << "image dimensions must be at least 1x1, got " << width_ << "x"
        << height_;
    throw Error(msg.str());
  }
  if (pixels_.size() != static_cast<std::size_t>(width_) * height_) {
    std::ostringstream msg;
    msg << "pixel buffer holds " << pixels_.size() << " values, expected "
        << static_cast<std::size_t>(width_) * height_ << " for " << width_
        << "x" << height_;
    throw Error(msg.str());
  }
  if (slice_index_ < 0) {
    throw Error("slice index must be non-negative, got " +
                std::to_string(slice_index_));
  }
}

Image2D Image2D::filled(int width, int height, std::uint8_t value,
                        std::string case_id, Phase phase, int slice_index) {
  const auto n = static_cast<std::size_t>(std::max(width, 0)) *
                 static_cast<std::size_t>(std::max(height, 0));
  return Image2D(width, height, std::vector<std::uint8_t>(n, value),
                 std::move(case_id), phase, slice_index);
}

Image2D Image2D::relabeled(std::string case_id, Phase phase,
                           int slice_index) const {
  return Image2D(width_, height_, pixels_, std::move(case_id), phase,
                 slice_index);
}

// ---------------------------------------------------------------------------
// Volume

namespace {

void check_slice_sequence(const std::vector<Image2D>& slices) {
  if (slices.empty()) throw Error("volume requires at least one slice");
  const Image2D& first = slices.front();
  for (std::size_t i = 0; i < slices.size(); ++i) {
    const Image2D& s = slices[i];
    if (!s.same_shape(first)) {
      std::ostringstream msg;
      msg << "slice " << i << " has dimensions " << s.width() << "x"
          << s.height() << ", expected " << first.width() << "x"
          << first.height();
      throw Error(msg.str());
    }
    if (s.case_id() != first.case_id()) {
      throw Error("slice " + std::to_string(i) + " belongs to case '" +
                  s.case_id() + "', expected '" + first.case_id() + "'");
    }
    if (s.phase() != first.phase()) {
      throw Error("slice " + std::to_string(i) + " has phase " +
                  std::string(phase_name(s.phase())) + ", expected " +
                  std::string(phase_name(first.phase())));
    }
    const auto expected = static_cast<int>(i);
    if (s.slice_index() > expected) {
      throw Error("gap at index " + std::to_string(expected));
    }
    if (s.slice_index() < expected) {
      throw Error("slice indices not strictly increasing at position " +
                  std::to_string(i) + " (index " +
                  std::to_string(s.slice_index()) + ")");
    }
  }
}

}  // namespace

Volume::Volume(std::vector<Image2D> slices, std::optional<RawVolume> raw)
    : slices_(std::move(slices)), raw_(std::move(raw)) {
  check_slice_sequence(slices_);
  if (raw_ && (raw_->width != width() || raw_->height != height() ||
               raw_->depth != depth())) {
    throw Error("raw source array dimensions do not match the slices");
  }
}

// ---------------------------------------------------------------------------
// BoundingBox / Mask

void BoundingBox::validate(int image_width, int image_height,
                           int depth) const {
  std::ostringstream msg;
  msg << "bounding box for case '" << case_id << "' (" << x0 << "," << y0
      << ")-(" << x1 << "," << y1 << ") slices [" << slice_lo << ","
      << slice_hi << ")";
  if (!(0 <= x0 && x0 < x1 && x1 <= image_width)) {
    throw Error(msg.str() + " has x range outside [0," +
                std::to_string(image_width) + "]");
  }
  if (!(0 <= y0 && y0 < y1 && y1 <= image_height)) {
    throw Error(msg.str() + " has y range outside [0," +
                std::to_string(image_height) + "]");
  }
  if (!(0 <= slice_lo && slice_lo < slice_hi && slice_hi <= depth)) {
    throw Error(msg.str() + " has slice range outside [0," +
                std::to_string(depth) + "]");
  }
}

Mask::Mask(std::vector<std::size_t> shape, std::vector<std::uint8_t> values)
    : shape_(std::move(shape)), values_(std::move(values)) {
  if (shape_.size() != 2 && shape_.size() != 3) {
    throw Error("mask must be 2D or 3D");
  }
  std::size_t n = 1;
  for (std::size_t extent : shape_) n *= extent;
  if (n != values_.size()) {
    throw Error("mask holds " + std::to_string(values_.size()) +
                " values, shape requires " + std::to_string(n));
  }
}

std::size_t Mask::count() const {
  return static_cast<std::size_t>(
      std::count_if(values_.begin(), values_.end(),
                    [](std::uint8_t v) { return v != 0; }));
}

// ---------------------------------------------------------------------------
// Operations

Volume normalize_volume(const RawVolume& raw, std::string case_id,
                        Phase phase) {
  if (raw.width < 1 || raw.height < 1 || raw.depth < 1 || raw.values.empty()) {
    throw Error("raw volume is empty");
  }
  const std::size_t plane = static_cast<std::size_t>(raw.width) * raw.height;
  if (raw.values.size() != plane * raw.depth) {
    throw Error("raw volume holds " + std::to_string(raw.values.size()) +
                " values, dimensions require " +
                std::to_string(plane * raw.depth));
  }

  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < raw.values.size(); ++i) {
    const double v = raw.values[i];
    if (!std::isfinite(v)) {
      const std::size_t z = i / plane;
      const std::size_t y = (i % plane) / raw.width;
      const std::size_t x = i % raw.width;
      std::ostringstream msg;
      msg << "non-finite raw value at voxel index " << i << " (x=" << x
          << ", y=" << y << ", slice=" << z << ")";
      throw Error(msg.str());
    }
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }

  const double range = hi - lo;
  std::vector<Image2D> slices;
  slices.reserve(raw.depth);
  for (int z = 0; z < raw.depth; ++z) {
    std::vector<std::uint8_t> px(plane, 0);
    if (range > 0.0) {
      const double* src = raw.values.data() + z * plane;
      for (std::size_t i = 0; i < plane; ++i) {
        px[i] = round_to_u8((src[i] - lo) / range * 255.0);
      }
    }
    slices.emplace_back(raw.width, raw.height, std::move(px), case_id, phase,
                        z);
  }
  return Volume(std::move(slices), raw);
}

Image2D resize_to_unit_aspect(const Image2D& img, int target_width,
                              int target_height) {
  if (target_width < 1 || target_height < 1) {
    std::ostringstream msg;
    msg << "resize target must be at least 1x1, got " << target_width << "x"
        << target_height;
    throw Error(msg.str());
  }
  if (target_width == img.width() && target_height == img.height()) {
    return img;
  }

  // Source coordinate of a destination pixel centre, clamped to the edge
  // pixel centres.
  struct Tap {
    int lo;
    int hi;
    double frac;
  };
  auto taps = [](int src, int dst) {
    std::vector<Tap> out(dst);
    const double scale = static_cast<double>(src) / dst;
    for (int i = 0; i < dst; ++i) {
      double s = (i + 0.5) * scale - 0.5;
      s = std::clamp(s, 0.0, static_cast<double>(src - 1));
      const int lo = static_cast<int>(std::floor(s));
      const int hi = std::min(lo + 1, src - 1);
      out[i] = {lo, hi, s - lo};
    }
    return out;
  };
  const auto xs = taps(img.width(), target_width);
  const auto ys = taps(img.height(), target_height);

  std::vector<std::uint8_t> out(static_cast<std::size_t>(target_width) *
                                target_height);
  for (int y = 0; y < target_height; ++y) {
    const Tap& ty = ys[y];
    for (int x = 0; x < target_width; ++x) {
      const Tap& tx = xs[x];
      const double top = img.at(tx.lo, ty.lo) * (1.0 - tx.frac) +
                         img.at(tx.hi, ty.lo) * tx.frac;
      const double bottom = img.at(tx.lo, ty.hi) * (1.0 - tx.frac) +
                            img.at(tx.hi, ty.hi) * tx.frac;
      out[static_cast<std::size_t>(y) * target_width + x] =
          round_to_u8(top * (1.0 - ty.frac) + bottom * ty.frac);
    }
  }
  return Image2D(target_width, target_height, std::move(out), img.case_id(),
                 img.phase(), img.slice_index());
}

Volume stack_volume(std::vector<Image2D> slices) {
  return Volume(std::move(slices));
}

std::vector<Image2D> extract_slices(const Volume& volume) {
  return volume.slices();
}

Image2D subtraction_image(const Image2D& pre, const Image2D& post) {
  if (!pre.same_shape(post)) {
    std::ostringstream msg;
    msg << "subtraction requires identical dimensions, got pre " << pre.width()
        << "x" << pre.height() << " and post " << post.width() << "x"
        << post.height();
    throw Error(msg.str());
  }
  const auto a = pre.pixels();
  const auto b = post.pixels();
  std::vector<std::uint8_t> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = b[i] > a[i] ? static_cast<std::uint8_t>(b[i] - a[i]) : 0;
  }
  return Image2D(post.width(), post.height(), std::move(out), post.case_id(),
                 post.phase(), post.slice_index());
}

}  // namespace dceeval

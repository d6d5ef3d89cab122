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
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dceeval/image.hpp"

namespace dceeval::io {

namespace fs = std::filesystem;

/// Identity of a slice as encoded in its filename.
struct SliceKey {
  std::string case_id;
  Phase phase = Phase::kPre;
  int slice_index = 0;

  friend auto operator<=>(const SliceKey&, const SliceKey&) = default;
};

/// `<case_id>_<phase>_<slice_index:04d>.png`
std::string slice_filename(const SliceKey& key);
std::string slice_stem(const SliceKey& key);
std::optional<SliceKey> parse_slice_filename(const std::string& filename);

/// Reads an 8-bit grayscale PNG. Three-channel input is accepted only when
/// every pixel has identical channels. Identity metadata is taken from the
/// filename when it follows the slice convention.
Image2D read_png(const fs::path& path);

enum class PngSpeed { kDefault, kFast };
void write_png(const Image2D& img, const fs::path& path,
               PngSpeed speed = PngSpeed::kDefault);

/// Writes a 2D binary mask as 0/255 PNG.
void write_mask_png(int width, int height,
                    const std::vector<std::uint8_t>& bits,
                    const fs::path& path);

/// A slice PNG discovered on disk.
struct SliceFile {
  fs::path path;
  SliceKey key;
};

/// Recursively lists PNG files below root that follow the slice naming
/// convention, sorted by key then path. Files that do not follow the
/// convention are returned in `ignored` when provided.
std::vector<SliceFile> scan_slices(const fs::path& root,
                                   std::vector<fs::path>* ignored = nullptr);

/// Writes every slice of the volume into dir plus a `manifest.json` sidecar.
void write_volume_dir(const Volume& volume, const fs::path& dir,
                      PngSpeed speed = PngSpeed::kDefault);

/// Reads a single-volume directory. When `manifest.json` exists its case,
/// phase, dimensions and slice count must agree with the slices found.
Volume read_volume_dir(const fs::path& dir);

/// Groups every convention-named slice below root into volumes.
std::map<std::pair<std::string, Phase>, Volume> load_volumes(
    const fs::path& root);

/// Bounding-box CSV with header `case_id,x0,y0,x1,y1,slice_lo,slice_hi`.
std::vector<BoundingBox> read_bboxes(const fs::path& path);
void write_bboxes(const std::vector<BoundingBox>& boxes, const fs::path& path);

/// Writes text atomically enough for reports: truncate and write.
void write_text(const fs::path& path, const std::string& text);
std::string read_text(const fs::path& path);

}  // namespace dceeval::io

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

#include "dceeval/image_io.hpp"

#include <png.h>
#include <zlib.h>

#include <algorithm>
#include <csetjmp>
#include <cstdio>
#include <fstream>
#include <memory>
#include <sstream>

#include <json.hpp>

#include "dceeval/csv.hpp"
#include "dceeval/error.hpp"

namespace dceeval::io {

namespace {

constexpr const char* kManifestName = "manifest.json";

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

void png_error_handler(png_structp png, png_const_charp msg) {
  auto* text = static_cast<std::string*>(png_get_error_ptr(png));
  if (text) *text = msg;
  png_longjmp(png, 1);
}

void png_warning_handler(png_structp, png_const_charp) {}

}  // namespace

std::string slice_stem(const SliceKey& key) {
  char index[16];
  std::snprintf(index, sizeof(index), "%04d", key.slice_index);
  return key.case_id + "_" + std::string(phase_name(key.phase)) + "_" + index;
}

std::string slice_filename(const SliceKey& key) {
  return slice_stem(key) + ".png";
}

std::optional<SliceKey> parse_slice_filename(const std::string& filename) {
  constexpr std::string_view ext = ".png";
  if (filename.size() <= ext.size() ||
      filename.compare(filename.size() - ext.size(), ext.size(), ext) != 0) {
    return std::nullopt;
  }
  const std::string stem = filename.substr(0, filename.size() - ext.size());
  const auto last = stem.rfind('_');
  if (last == std::string::npos || last + 1 >= stem.size()) return std::nullopt;
  const std::string digits = stem.substr(last + 1);
  if (digits.size() < 4 || digits.size() > 9 ||
      !std::all_of(digits.begin(), digits.end(),
                   [](char c) { return c >= '0' && c <= '9'; })) {
    return std::nullopt;
  }
  const std::string head = stem.substr(0, last);
  for (Phase p : kAllPhases) {
    const std::string suffix = "_" + std::string(phase_name(p));
    if (head.size() > suffix.size() &&
        head.compare(head.size() - suffix.size(), suffix.size(), suffix) == 0) {
      SliceKey key;
      key.case_id = head.substr(0, head.size() - suffix.size());
      key.phase = p;
      key.slice_index = std::stoi(digits);
      return key;
    }
  }
  return std::nullopt;
}

Image2D read_png(const fs::path& path) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.c_str())) {
    const std::string why = image.message;
    png_image_free(&image);
    throw Error("cannot decode PNG " + path.string() + ": " + why);
  }
  if (image.format & PNG_FORMAT_FLAG_LINEAR) {
    png_image_free(&image);
    throw Error("PNG " + path.string() + " is 16-bit; expected 8-bit");
  }
  if (image.format & PNG_FORMAT_FLAG_ALPHA) {
    png_image_free(&image);
    throw Error("PNG " + path.string() + " has an alpha channel");
  }
  const bool color = (image.format & PNG_FORMAT_FLAG_COLOR) != 0;
  image.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  const int width = static_cast<int>(image.width);
  const int height = static_cast<int>(image.height);
  std::vector<png_byte> buffer(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr)) {
    const std::string why = image.message;
    png_image_free(&image);
    throw Error("cannot decode PNG " + path.string() + ": " + why);
  }

  std::vector<std::uint8_t> pixels;
  if (color) {
    const std::size_t n = static_cast<std::size_t>(width) * height;
    pixels.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const png_byte r = buffer[3 * i];
      if (buffer[3 * i + 1] != r || buffer[3 * i + 2] != r) {
        throw Error("PNG " + path.string() +
                    " has differing color channels at pixel " +
                    std::to_string(i));
      }
      pixels[i] = r;
    }
  } else {
    pixels.assign(buffer.begin(), buffer.end());
  }

  const auto key = parse_slice_filename(path.filename().string());
  if (key) {
    return Image2D(width, height, std::move(pixels), key->case_id, key->phase,
                   key->slice_index);
  }
  return Image2D(width, height, std::move(pixels));
}

namespace {

void write_gray_png(int width, int height, const std::uint8_t* data,
                    const fs::path& path, PngSpeed speed) {
  FilePtr file(std::fopen(path.c_str(), "wb"));
  if (!file) throw Error("cannot open " + path.string() + " for writing");

  std::string error_text;
  png_structp png = png_create_write_struct(
      PNG_LIBPNG_VER_STRING, &error_text, png_error_handler, png_warning_handler);
  if (!png) throw Error("cannot allocate PNG writer");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw Error("cannot allocate PNG writer");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error("cannot write PNG " + path.string() + ": " + error_text);
  }
  png_init_io(png, file.get());
  if (speed == PngSpeed::kFast) {
    png_set_compression_level(png, Z_BEST_SPEED);
    png_set_filter(png, PNG_FILTER_TYPE_BASE, PNG_FILTER_SUB);
  }
  png_set_IHDR(png, info, static_cast<png_uint_32>(width),
               static_cast<png_uint_32>(height), 8, PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < height; ++y) {
    png_write_row(png, const_cast<png_bytep>(data) +
                           static_cast<std::size_t>(y) * width);
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  if (std::fflush(file.get()) != 0) {
    throw Error("cannot flush " + path.string());
  }
}

}  // namespace

void write_png(const Image2D& img, const fs::path& path, PngSpeed speed) {
  write_gray_png(img.width(), img.height(), img.pixels().data(), path, speed);
}

void write_mask_png(int width, int height,
                    const std::vector<std::uint8_t>& bits,
                    const fs::path& path) {
  if (bits.size() != static_cast<std::size_t>(width) * height) {
    throw Error("mask slice size does not match its dimensions");
  }
  std::vector<std::uint8_t> px(bits.size());
  for (std::size_t i = 0; i < bits.size(); ++i) px[i] = bits[i] ? 255 : 0;
  write_gray_png(width, height, px.data(), path, PngSpeed::kDefault);
}

std::vector<SliceFile> scan_slices(const fs::path& root,
                                   std::vector<fs::path>* ignored) {
  if (!fs::is_directory(root)) {
    throw Error("not a directory: " + root.string());
  }
  std::vector<SliceFile> out;
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    if (!entry.is_regular_file()) continue;
    const fs::path& p = entry.path();
    if (p.extension() != ".png") continue;
    if (auto key = parse_slice_filename(p.filename().string())) {
      out.push_back({p, std::move(*key)});
    } else if (ignored) {
      ignored->push_back(p);
    }
  }
  std::sort(out.begin(), out.end(), [](const SliceFile& a, const SliceFile& b) {
    if (a.key != b.key) return a.key < b.key;
    return a.path < b.path;
  });
  if (ignored) std::sort(ignored->begin(), ignored->end());
  return out;
}

void write_volume_dir(const Volume& volume, const fs::path& dir,
                      PngSpeed speed) {
  fs::create_directories(dir);
  for (const Image2D& s : volume.slices()) {
    write_png(s, dir / slice_filename({s.case_id(), s.phase(), s.slice_index()}),
              speed);
  }
  nlohmann::json manifest = {
      {"case_id", volume.case_id()},
      {"phase", std::string(phase_name(volume.phase()))},
      {"width", volume.width()},
      {"height", volume.height()},
      {"slice_count", volume.depth()},
  };
  write_text(dir / kManifestName, manifest.dump(2) + "\n");
}

Volume read_volume_dir(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw Error("not a directory: " + dir.string());
  std::vector<SliceFile> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    if (auto key = parse_slice_filename(entry.path().filename().string())) {
      files.push_back({entry.path(), std::move(*key)});
    }
  }
  if (files.empty()) throw Error("no slice PNGs in " + dir.string());
  std::sort(files.begin(), files.end(),
            [](const SliceFile& a, const SliceFile& b) { return a.key < b.key; });
  std::vector<Image2D> slices;
  slices.reserve(files.size());
  for (const auto& f : files) slices.push_back(read_png(f.path));
  Volume volume = stack_volume(std::move(slices));

  const fs::path manifest_path = dir / kManifestName;
  if (fs::exists(manifest_path)) {
    nlohmann::json m;
    try {
      m = nlohmann::json::parse(read_text(manifest_path));
    } catch (const nlohmann::json::exception& e) {
      throw Error("invalid manifest " + manifest_path.string() + ": " +
                  e.what());
    }
    auto mismatch = [&](const std::string& field) {
      return Error("manifest " + manifest_path.string() + " field '" + field +
                   "' disagrees with the slices on disk");
    };
    if (m.value("case_id", volume.case_id()) != volume.case_id())
      throw mismatch("case_id");
    if (m.value("phase", std::string(phase_name(volume.phase()))) !=
        phase_name(volume.phase()))
      throw mismatch("phase");
    if (m.value("width", volume.width()) != volume.width()) throw mismatch("width");
    if (m.value("height", volume.height()) != volume.height())
      throw mismatch("height");
    if (m.value("slice_count", volume.depth()) != volume.depth())
      throw mismatch("slice_count");
  }
  return volume;
}

std::map<std::pair<std::string, Phase>, Volume> load_volumes(
    const fs::path& root) {
  std::map<std::pair<std::string, Phase>, std::vector<Image2D>> groups;
  for (const SliceFile& f : scan_slices(root)) {
    auto& group = groups[{f.key.case_id, f.key.phase}];
    if (!group.empty() && group.back().slice_index() == f.key.slice_index) {
      throw Error("duplicate slice " + slice_filename(f.key) + " below " +
                  root.string());
    }
    group.push_back(read_png(f.path));
  }
  std::map<std::pair<std::string, Phase>, Volume> out;
  for (auto& [key, slices] : groups) {
    try {
      out.emplace(key, stack_volume(std::move(slices)));
    } catch (const Error& e) {
      throw Error("volume " + key.first + "/" +
                  std::string(phase_name(key.second)) + ": " + e.what());
    }
  }
  return out;
}

std::vector<BoundingBox> read_bboxes(const fs::path& path) {
  const auto rows = csv::read_file(path);
  const csv::Row header = {"case_id", "x0", "y0", "x1",
                           "y1",      "slice_lo", "slice_hi"};
  if (rows.empty() || rows.front() != header) {
    throw Error("bounding-box CSV " + path.string() +
                " must start with header case_id,x0,y0,x1,y1,slice_lo,slice_hi");
  }
  std::vector<BoundingBox> out;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() == 1 && row[0].empty()) continue;
    if (row.size() != header.size()) {
      throw Error(path.string() + " line " + std::to_string(r + 1) +
                  ": expected 7 fields, got " + std::to_string(row.size()));
    }
    auto integer = [&](std::size_t col) {
      try {
        std::size_t used = 0;
        const int v = std::stoi(row[col], &used);
        if (used != row[col].size()) throw std::invalid_argument("trailing");
        return v;
      } catch (const std::exception&) {
        throw Error(path.string() + " line " + std::to_string(r + 1) +
                    ": field '" + header[col] + "' is not an integer");
      }
    };
    BoundingBox b;
    b.case_id = row[0];
    b.x0 = integer(1);
    b.y0 = integer(2);
    b.x1 = integer(3);
    b.y1 = integer(4);
    b.slice_lo = integer(5);
    b.slice_hi = integer(6);
    if (!(b.x0 < b.x1 && b.y0 < b.y1 && b.slice_lo < b.slice_hi)) {
      throw Error(path.string() + " line " + std::to_string(r + 1) +
                  ": empty bounding box for case '" + b.case_id + "'");
    }
    out.push_back(std::move(b));
  }
  return out;
}

void write_bboxes(const std::vector<BoundingBox>& boxes, const fs::path& path) {
  std::string text = "case_id,x0,y0,x1,y1,slice_lo,slice_hi\n";
  for (const auto& b : boxes) {
    text += csv::format_row({b.case_id, std::to_string(b.x0),
                             std::to_string(b.y0), std::to_string(b.x1),
                             std::to_string(b.y1), std::to_string(b.slice_lo),
                             std::to_string(b.slice_hi)});
    text += '\n';
  }
  write_text(path, text);
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw Error("cannot write " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace dceeval::io

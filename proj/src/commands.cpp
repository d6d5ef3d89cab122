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

#include "commands.hpp"

#include <algorithm>
#include <map>
#include <set>

#include <json.hpp>

#include "dceeval/csv.hpp"
#include "dceeval/error.hpp"
#include "dceeval/frechet.hpp"
#include "dceeval/image_io.hpp"
#include "dceeval/kinetics.hpp"
#include "dceeval/pair_metrics.hpp"
#include "dceeval/parallel.hpp"
#include "dceeval/phantom.hpp"
#include "dceeval/same.hpp"

namespace dceeval::cli::detail {

namespace {

using io::SliceFile;
using io::SliceKey;

std::string relative_to(const fs::path& p, const fs::path& root) {
  return fs::relative(p, root).generic_string();
}

struct UnpairedRow {
  std::string side;
  std::string path;
  std::string reason;

  friend auto operator<=>(const UnpairedRow&, const UnpairedRow&) = default;
};

void write_unpaired(std::vector<UnpairedRow> rows, const fs::path& path) {
  std::sort(rows.begin(), rows.end());
  std::string text = "side,path,reason\n";
  for (const auto& r : rows) text += csv::format_row({r.side, r.path, r.reason}) + "\n";
  io::write_text(path, text);
}

std::map<SliceKey, fs::path> index_by_key(const std::vector<SliceFile>& files,
                                          const fs::path& root) {
  std::map<SliceKey, fs::path> out;
  for (const auto& f : files) {
    auto [it, inserted] = out.emplace(f.key, f.path);
    if (!inserted) {
      throw Error("slice " + io::slice_filename(f.key) + " appears twice under " +
                  root.string() + ": " + relative_to(it->second, root) + " and " +
                  relative_to(f.path, root));
    }
  }
  return out;
}

// Features for every convention-named slice below root, in key order.
struct ExtractedFeatures {
  fid::FeatureSet features;
  std::vector<fs::path> files;
};

ExtractedFeatures extract_dir(const fs::path& root, int workers) {
  const auto files = io::scan_slices(root);
  if (files.empty()) throw Error("no slice PNGs found under " + root.string());
  std::vector<std::vector<double>> rows(files.size());
  std::vector<std::pair<int, int>> dims(files.size());
  parallel_for(files.size(), workers, [&](std::size_t i) {
    const Image2D img = io::read_png(files[i].path);
    dims[i] = {img.width(), img.height()};
    rows[i] = fid::baseline_features(img);
  });
  fid::RowMatrix data(static_cast<Eigen::Index>(files.size()),
                      fid::kBaselineGrid * fid::kBaselineGrid);
  for (std::size_t i = 0; i < files.size(); ++i) {
    if (dims[i] != dims.front()) {
      throw Error("baseline extraction requires equal image dimensions; " +
                  files[i].path.string() + " differs from " +
                  files.front().path.string());
    }
    for (std::size_t c = 0; c < rows[i].size(); ++c) {
      data(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = rows[i][c];
    }
  }
  std::vector<fs::path> paths;
  for (const auto& f : files) paths.push_back(f.path);
  return {fid::FeatureSet(std::move(data), fid::kBaselineExtractorId),
          std::move(paths)};
}

fid::FeatureSet load_features(const fs::path& features, const fs::path& images,
                              const std::string& extractor_id, int workers) {
  if (!features.empty()) {
    if (features.extension() == ".csv") {
      return fid::read_featureset_csv(
          features, extractor_id.empty() ? "csv" : extractor_id);
    }
    return fid::read_featureset(features);
  }
  return extract_dir(images, workers).features;
}

}  // namespace

std::vector<std::string> evaluate_pairs(const RunConfig& config) {
  std::vector<fs::path> ignored_a, ignored_b;
  const auto files_a = io::scan_slices(config.inputs_a, &ignored_a);
  const auto files_b = io::scan_slices(config.inputs_b, &ignored_b);
  const auto by_key_a = index_by_key(files_a, config.inputs_a);
  const auto by_key_b = index_by_key(files_b, config.inputs_b);

  struct Task {
    SliceKey key;
    fs::path a;
    fs::path b;
  };
  std::vector<Task> tasks;
  std::vector<UnpairedRow> unpaired;
  for (const auto& [key, path] : by_key_a) {
    const auto it = by_key_b.find(key);
    if (it == by_key_b.end()) {
      unpaired.push_back({"a", relative_to(path, config.inputs_a), "no-counterpart"});
    } else {
      tasks.push_back({key, path, it->second});
    }
  }
  for (const auto& [key, path] : by_key_b) {
    if (!by_key_a.count(key)) {
      unpaired.push_back({"b", relative_to(path, config.inputs_b), "no-counterpart"});
    }
  }
  for (const auto& p : ignored_a)
    unpaired.push_back({"a", relative_to(p, config.inputs_a), "unrecognized-name"});
  for (const auto& p : ignored_b)
    unpaired.push_back({"b", relative_to(p, config.inputs_b), "unrecognized-name"});

  if (tasks.empty()) {
    write_unpaired(unpaired, config.out / kUnpairedCsv);
    throw Error("no image pairs found between " + config.inputs_a.string() +
                " and " + config.inputs_b.string());
  }

  std::vector<metrics::PairMetricsRecord> records(tasks.size());
  parallel_for(tasks.size(), config.workers, [&](std::size_t i) {
    const Task& t = tasks[i];
    const Image2D a = io::read_png(t.a);
    const Image2D b = io::read_png(t.b);
    if (!a.same_shape(b)) {
      throw Error("pair " + io::slice_stem(t.key) + ": " + t.a.string() + " is " +
                  std::to_string(a.width()) + "x" + std::to_string(a.height()) +
                  " but " + t.b.string() + " is " + std::to_string(b.width()) +
                  "x" + std::to_string(b.height()));
    }
    try {
      records[i] = metrics::evaluate_pair(io::slice_stem(t.key), a, b,
                                          config.metrics);
    } catch (const Error& e) {
      throw Error("pair " + io::slice_stem(t.key) + ": " + e.what());
    }
  });
  std::sort(records.begin(), records.end(),
            [](const auto& x, const auto& y) { return x.pair_id < y.pair_id; });

  io::write_text(config.out / kPairsCsv, metrics::records_to_csv(records));
  io::write_text(config.out / kSummaryJson,
                 metrics::summary_to_json(metrics::summarize_pairs(records)));
  write_unpaired(std::move(unpaired), config.out / kUnpairedCsv);
  return {kPairsCsv, kSummaryJson, kUnpairedCsv};
}

std::vector<std::string> frechet(const RunConfig& config) {
  const auto a = load_features(config.features_a, config.inputs_a,
                               config.extractor_id, config.workers);
  const auto b = load_features(config.features_b, config.inputs_b,
                               config.extractor_id, config.workers);
  const double fd = fid::frechet_between_sets(a, b);
  auto describe = [](const fid::FeatureSet& fs) {
    return nlohmann::json{
        {"n", fs.n()}, {"d", fs.d()}, {"extractor_id", fs.extractor_id()}};
  };
  nlohmann::json j = {{"frechet_distance", fd},
                      {"a", describe(a)},
                      {"b", describe(b)},
                      {"extractor_match", a.extractor_id() == b.extractor_id()}};
  io::write_text(config.out / kFrechetJson, j.dump(2) + "\n");
  return {kFrechetJson};
}

std::vector<std::string> same_select(const RunConfig& config) {
  const auto records = same::records_from_csv(io::read_text(config.inputs_a));
  same::DirectionMap directions;
  if (!config.directions.empty()) {
    directions = same::directions_from_json(io::read_text(config.directions));
  }
  const auto table = same::scale_cohort(records, directions);
  io::write_text(config.out / kSameCsv, same::table_to_csv(table));
  io::write_text(config.out / kSameJson, same::table_to_json(table));
  return {kSameCsv, kSameJson};
}

std::vector<std::string> subtract(const RunConfig& config) {
  std::vector<fs::path> ignored_pre, ignored_post;
  const auto pre_files = io::scan_slices(config.inputs_a, &ignored_pre);
  const auto post_files = io::scan_slices(config.inputs_b, &ignored_post);

  // Pre-contrast slices are matched by case and slice index only.
  std::map<std::pair<std::string, int>, fs::path> pre;
  for (const auto& f : pre_files) {
    auto [it, inserted] =
        pre.emplace(std::pair(f.key.case_id, f.key.slice_index), f.path);
    if (!inserted) {
      throw Error("pre-contrast root " + config.inputs_a.string() +
                  " holds two slices for case '" + f.key.case_id + "' index " +
                  std::to_string(f.key.slice_index));
    }
  }
  const auto post = index_by_key(post_files, config.inputs_b);

  struct Task {
    SliceKey key;
    fs::path pre;
    fs::path post;
  };
  std::vector<Task> tasks;
  std::vector<UnpairedRow> unpaired;
  std::set<std::pair<std::string, int>> used;
  for (const auto& [key, path] : post) {
    const auto it = pre.find({key.case_id, key.slice_index});
    if (it == pre.end()) {
      unpaired.push_back({"b", relative_to(path, config.inputs_b), "no-counterpart"});
    } else {
      tasks.push_back({key, it->second, path});
      used.insert(it->first);
    }
  }
  for (const auto& [key, path] : pre) {
    if (!used.count(key)) {
      unpaired.push_back({"a", relative_to(path, config.inputs_a), "no-counterpart"});
    }
  }
  for (const auto& p : ignored_pre)
    unpaired.push_back({"a", relative_to(p, config.inputs_a), "unrecognized-name"});
  for (const auto& p : ignored_post)
    unpaired.push_back({"b", relative_to(p, config.inputs_b), "unrecognized-name"});

  const fs::path image_dir = config.out / "images";
  fs::create_directories(image_dir);
  parallel_for(tasks.size(), config.workers, [&](std::size_t i) {
    const Task& t = tasks[i];
    const Image2D diff =
        subtraction_image(io::read_png(t.pre), io::read_png(t.post));
    io::write_png(diff, image_dir / io::slice_filename(t.key));
  });

  std::string index = "pre,post,output\n";
  for (const auto& t : tasks) {
    index += csv::format_row({relative_to(t.pre, config.inputs_a),
                              relative_to(t.post, config.inputs_b),
                              "images/" + io::slice_filename(t.key)}) +
             "\n";
  }
  io::write_text(config.out / "subtraction.csv", index);
  write_unpaired(std::move(unpaired), config.out / kUnpairedCsv);
  return {"images/", "subtraction.csv", kUnpairedCsv};
}

std::vector<std::string> stack(const RunConfig& config) {
  std::map<std::pair<std::string, Phase>, std::vector<SliceFile>> groups;
  for (auto& f : io::scan_slices(config.inputs_a)) {
    groups[{f.key.case_id, f.key.phase}].push_back(std::move(f));
  }
  if (groups.empty()) {
    throw Error("no slice PNGs found under " + config.inputs_a.string());
  }
  std::vector<std::pair<std::string, Phase>> keys;
  for (const auto& [key, files] : groups) keys.push_back(key);

  std::vector<nlohmann::json> summaries(keys.size());
  parallel_for(keys.size(), config.workers, [&](std::size_t i) {
    const auto& files = groups.at(keys[i]);
    std::vector<Image2D> slices;
    slices.reserve(files.size());
    for (const auto& f : files) slices.push_back(io::read_png(f.path));
    const std::string label =
        keys[i].first + "/" + std::string(phase_name(keys[i].second));
    try {
      const Volume v = stack_volume(std::move(slices));
      io::write_volume_dir(v, config.out / "volumes" / keys[i].first /
                                  std::string(phase_name(keys[i].second)));
      summaries[i] = {{"case_id", v.case_id()},
                      {"phase", std::string(phase_name(v.phase()))},
                      {"width", v.width()},
                      {"height", v.height()},
                      {"slice_count", v.depth()}};
    } catch (const Error& e) {
      throw Error("volume " + label + ": " + e.what());
    }
  });
  nlohmann::json j = {{"volumes", summaries}};
  io::write_text(config.out / kStackJson, j.dump(2) + "\n");
  return {"volumes/", kStackJson};
}

std::vector<std::string> kinetics(const RunConfig& config) {
  auto boxes = io::read_bboxes(config.bboxes);
  if (boxes.empty()) throw Error("no bounding boxes in " + config.bboxes.string());
  std::sort(boxes.begin(), boxes.end(),
            [](const auto& a, const auto& b) { return a.case_id < b.case_id; });
  for (std::size_t i = 1; i < boxes.size(); ++i) {
    if (boxes[i].case_id == boxes[i - 1].case_id) {
      throw Error("case '" + boxes[i].case_id + "' has more than one bounding box");
    }
  }

  struct SourceRoot {
    kinetics::Source source;
    fs::path root;
  };
  std::vector<SourceRoot> roots = {{kinetics::Source::kReal, config.inputs_a}};
  if (!config.inputs_b.empty()) {
    roots.push_back({kinetics::Source::kSynthetic, config.inputs_b});
  }

  std::vector<std::string> written;
  std::vector<kinetics::KineticsSeries> all_series;
  std::map<kinetics::Source, kinetics::KineticsAggregate> aggregates;
  std::string warnings = "case_id,source,missing_phase\n";

  for (const auto& [source, root] : roots) {
    std::map<std::string, std::map<Phase, std::vector<SliceFile>>> by_case;
    for (auto& f : io::scan_slices(root)) {
      by_case[f.key.case_id][f.key.phase].push_back(std::move(f));
    }
    std::vector<kinetics::KineticsSeries> series(boxes.size());
    parallel_for(boxes.size(), config.workers, [&](std::size_t i) {
      const BoundingBox& box = boxes[i];
      const auto it = by_case.find(box.case_id);
      if (it == by_case.end()) {
        throw Error("case '" + box.case_id + "' has no slices under " +
                    root.string());
      }
      std::map<Phase, Volume> volumes;
      for (const auto& [phase, files] : it->second) {
        std::vector<Image2D> slices;
        for (const auto& f : files) slices.push_back(io::read_png(f.path));
        try {
          volumes.emplace(phase, stack_volume(std::move(slices)));
        } catch (const Error& e) {
          throw Error("case '" + box.case_id + "' " +
                      std::string(phase_name(phase)) + " under " +
                      root.string() + ": " + e.what());
        }
      }
      series[i] = kinetics::case_kinetics(volumes, box, source);
    });

    bool complete = true;
    for (const auto& s : series) {
      for (Phase p : s.missing_phases) {
        warnings += csv::format_row({s.case_id,
                                     std::string(kinetics::source_name(source)),
                                     std::string(phase_name(p))}) +
                    "\n";
        if (p != Phase::kPre) complete = false;
      }
    }

    std::string tag(kinetics::source_name(source));
    std::transform(tag.begin(), tag.end(), tag.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    const auto aggregate = kinetics::aggregate_kinetics(series);
    const std::string agg_name = "kinetics_aggregate_" + tag + ".json";
    io::write_text(config.out / agg_name, kinetics::aggregate_to_json(aggregate));
    written.push_back(agg_name);
    if (complete) {
      const std::string ord_name = "ordering_" + tag + ".json";
      io::write_text(config.out / ord_name,
                     kinetics::ordering_to_json(kinetics::ordering_report(series)));
      written.push_back(ord_name);
    }
    aggregates.emplace(source, aggregate);
    all_series.insert(all_series.end(), series.begin(), series.end());
  }

  io::write_text(config.out / kKineticsCsv, kinetics::series_to_csv(all_series));
  io::write_text(config.out / kKineticsWarningsCsv, warnings);
  written.insert(written.begin(), {kKineticsCsv, kKineticsWarningsCsv});

  if (aggregates.size() == 2) {
    const auto offsets =
        kinetics::source_offset(aggregates.at(kinetics::Source::kReal),
                                aggregates.at(kinetics::Source::kSynthetic));
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [phase, value] : offsets) j[std::string(phase_name(phase))] = value;
    io::write_text(config.out / kOffsetJson, j.dump(2) + "\n");
    written.push_back(kOffsetJson);
  }
  return written;
}

std::vector<std::string> phantom(const RunConfig& config) {
  const auto specs = phantom::specs_from_json(io::read_text(config.spec));
  std::set<std::string> ids;
  for (const auto& s : specs) {
    if (!ids.insert(s.case_id).second) {
      throw Error("phantom case id '" + s.case_id + "' is used twice");
    }
  }
  std::vector<BoundingBox> boxes(specs.size());
  parallel_for(specs.size(), config.workers, [&](std::size_t i) {
    const auto generated = phantom::generate_phantom(specs[i]);
    phantom::write_phantom(generated, config.out);
    boxes[i] = generated.bbox;
  });
  std::sort(boxes.begin(), boxes.end(),
            [](const auto& a, const auto& b) { return a.case_id < b.case_id; });
  io::write_bboxes(boxes, config.out / kBboxesCsv);
  return {"images/", "masks/", kBboxesCsv};
}

std::vector<std::string> extract_features(const RunConfig& config) {
  const auto extracted = extract_dir(config.inputs_a, config.workers);
  fid::write_featureset(extracted.features, config.out / kFeaturesFile);
  std::string index = "row,path\n";
  for (std::size_t i = 0; i < extracted.files.size(); ++i) {
    index += csv::format_row({std::to_string(i),
                              relative_to(extracted.files[i], config.inputs_a)}) +
             "\n";
  }
  io::write_text(config.out / kFeatureIndexCsv, index);
  return {kFeaturesFile, kFeatureIndexCsv};
}

}  // namespace dceeval::cli::detail

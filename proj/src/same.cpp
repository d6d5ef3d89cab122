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

#include "dceeval/same.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>

#include <json.hpp>

#include "dceeval/csv.hpp"
#include "dceeval/error.hpp"

namespace dceeval::same {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return out;
}

}  // namespace

std::optional<Direction> default_direction(std::string_view metric) {
  const std::string m = lower(metric);
  if (m == "mse" || m == "mae" || m == "lpips" || m.rfind("fid", 0) == 0) {
    return Direction::kLowerBetter;
  }
  if (m == "ssim" || m == "ms_ssim" || m == "msssim" || m == "ms-ssim" ||
      m == "psnr") {
    return Direction::kHigherBetter;
  }
  return std::nullopt;
}

std::optional<Direction> parse_direction(std::string_view token) {
  const std::string t = lower(token);
  if (t == "lower") return Direction::kLowerBetter;
  if (t == "higher") return Direction::kHigherBetter;
  return std::nullopt;
}

std::string_view direction_name(Direction d) {
  return d == Direction::kLowerBetter ? "lower" : "higher";
}

SAMeTable scale_cohort(const std::vector<CheckpointRecord>& records,
                       const DirectionMap& directions) {
  if (records.size() < 2) {
    throw Error("SAMe needs a cohort of at least 2 checkpoints, got " +
                std::to_string(records.size()));
  }

  SAMeTable table;
  std::set<std::string> ids;
  for (const auto& [name, value] : records.front().raw) {
    table.metrics.push_back(name);
  }
  if (table.metrics.empty()) throw Error("SAMe cohort has no metrics");

  for (const auto& rec : records) {
    if (!ids.insert(rec.checkpoint_id).second) {
      throw Error("duplicate checkpoint '" + rec.checkpoint_id + "' in cohort");
    }
    for (const auto& name : table.metrics) {
      const auto it = rec.raw.find(name);
      if (it == rec.raw.end()) {
        throw Error("checkpoint '" + rec.checkpoint_id + "' is missing metric '" +
                    name + "'");
      }
      if (!std::isfinite(it->second)) {
        throw Error("checkpoint '" + rec.checkpoint_id + "' has non-finite '" +
                    name + "'");
      }
    }
    for (const auto& [name, value] : rec.raw) {
      if (!records.front().raw.count(name)) {
        throw Error("checkpoint '" + records.front().checkpoint_id +
                    "' is missing metric '" + name + "'");
      }
    }
  }

  for (const auto& name : table.metrics) {
    const auto it = directions.find(name);
    std::optional<Direction> dir =
        it != directions.end() ? std::optional(it->second)
                               : default_direction(name);
    if (!dir) {
      throw Error("no direction known for metric '" + name +
                  "'; declare it lower or higher");
    }
    table.directions[name] = *dir;
  }

  table.rows.resize(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    table.rows[i].checkpoint_id = records[i].checkpoint_id;
  }

  for (const auto& name : table.metrics) {
    double lo = records.front().raw.at(name);
    double hi = lo;
    for (const auto& rec : records) {
      lo = std::min(lo, rec.raw.at(name));
      hi = std::max(hi, rec.raw.at(name));
    }
    const bool reversed = table.directions[name] == Direction::kHigherBetter;
    for (std::size_t i = 0; i < records.size(); ++i) {
      const double v = records[i].raw.at(name);
      double scaled;
      if (hi == lo) {
        scaled = kConstantMetricScore;
      } else if (reversed) {
        // 1 - (v - lo)/(hi - lo), written so that it is bitwise the min-max
        // scaling of the negated metric.
        scaled = (hi - v) / (hi - lo);
      } else {
        scaled = (v - lo) / (hi - lo);
      }
      table.rows[i].scaled[name] = scaled;
    }
  }

  for (auto& row : table.rows) {
    double sum = 0.0;
    for (const auto& name : table.metrics) sum += row.scaled.at(name);
    row.score = sum / static_cast<double>(table.metrics.size());
  }
  table.selected = select_checkpoint(table);
  return table;
}

std::string select_checkpoint(const SAMeTable& table) {
  if (table.rows.empty()) throw Error("cannot select from an empty SAMe table");
  const ScaledCheckpoint* best = &table.rows.front();
  for (const auto& row : table.rows) {
    if (row.score < best->score) best = &row;
  }
  return best->checkpoint_id;
}

std::vector<CheckpointRecord> records_from_csv(std::string_view text) {
  const auto rows = csv::parse(text);
  if (rows.empty() || rows.front().empty() ||
      rows.front().front() != "checkpoint_id") {
    throw Error("checkpoint CSV must start with header checkpoint_id,<metric>,...");
  }
  const auto& header = rows.front();
  std::set<std::string> seen;
  for (std::size_t c = 1; c < header.size(); ++c) {
    if (header[c].empty() || !seen.insert(header[c]).second) {
      throw Error("checkpoint CSV has an empty or repeated metric column '" +
                  header[c] + "'");
    }
  }
  std::vector<CheckpointRecord> out;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() != header.size()) {
      throw Error("checkpoint CSV line " + std::to_string(r + 1) + " has " +
                  std::to_string(row.size()) + " fields, expected " +
                  std::to_string(header.size()));
    }
    CheckpointRecord rec;
    rec.checkpoint_id = row[0];
    for (std::size_t c = 1; c < row.size(); ++c) {
      try {
        rec.raw[header[c]] = csv::parse_number(row[c]);
      } catch (const Error& e) {
        throw Error("checkpoint CSV line " + std::to_string(r + 1) + ", metric '" +
                    header[c] + "': " + e.what());
      }
    }
    out.push_back(std::move(rec));
  }
  return out;
}

DirectionMap directions_from_json(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("invalid directions JSON: ") + e.what());
  }
  if (!j.is_object()) throw Error("directions JSON must be an object");
  DirectionMap out;
  for (const auto& [metric, value] : j.items()) {
    const auto dir = value.is_string() ? parse_direction(value.get<std::string>())
                                       : std::nullopt;
    if (!dir) {
      throw Error("direction for metric '" + metric +
                  "' must be \"lower\" or \"higher\"");
    }
    out[metric] = *dir;
  }
  return out;
}

std::string table_to_csv(const SAMeTable& table) {
  csv::Row header{"checkpoint_id"};
  header.insert(header.end(), table.metrics.begin(), table.metrics.end());
  header.push_back("same");
  std::string out = csv::format_row(header) + "\n";
  for (const auto& row : table.rows) {
    csv::Row fields{row.checkpoint_id};
    for (const auto& name : table.metrics) {
      fields.push_back(csv::format_number(row.scaled.at(name)));
    }
    fields.push_back(csv::format_number(row.score));
    out += csv::format_row(fields) + "\n";
  }
  return out;
}

std::string table_to_json(const SAMeTable& table) {
  nlohmann::json scores = nlohmann::json::object();
  for (const auto& row : table.rows) scores[row.checkpoint_id] = row.score;
  nlohmann::json j = {{"selected", table.selected}, {"scores", scores}};
  return j.dump(2) + "\n";
}

}  // namespace dceeval::same

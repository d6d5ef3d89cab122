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

#include "dceeval/kinetics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <json.hpp>

#include "dceeval/csv.hpp"
#include "dceeval/error.hpp"

namespace dceeval::kinetics {

namespace {

PhaseStats finish(std::size_t count, std::uint64_t sum, std::uint64_t sum_sq) {
  PhaseStats s;
  s.pixel_count = count;
  s.sum = sum;
  s.sum_sq = sum_sq;
  const auto n = static_cast<unsigned __int128>(count);
  s.mean = static_cast<double>(sum) / static_cast<double>(count);
  // n * sum_sq - sum^2 is exact in 128-bit integers.
  const unsigned __int128 num = n * sum_sq - static_cast<unsigned __int128>(sum) * sum;
  s.std = std::sqrt(static_cast<double>(num) /
                    (static_cast<double>(count) * static_cast<double>(count)));
  return s;
}

double population_std(const std::vector<double>& v, double mean) {
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(v.size()));
}

}  // namespace

std::string_view source_name(Source s) {
  return s == Source::kReal ? "REAL" : "SYNTHETIC";
}

std::optional<Source> parse_source(std::string_view token) {
  if (token == "REAL") return Source::kReal;
  if (token == "SYNTHETIC") return Source::kSynthetic;
  return std::nullopt;
}

KineticsSeries case_kinetics(const std::map<Phase, Volume>& volumes,
                             const BoundingBox& bbox, Source source,
                             const Mask* roi) {
  KineticsSeries out;
  out.case_id = bbox.case_id;
  out.source = source;
  for (Phase phase : kAllPhases) {
    const auto it = volumes.find(phase);
    if (it == volumes.end()) {
      out.missing_phases.push_back(phase);
      continue;
    }
    const Volume& vol = it->second;
    try {
      bbox.validate(vol.width(), vol.height(), vol.depth());
    } catch (const Error& e) {
      throw Error(std::string(phase_name(phase)) + " volume: " + e.what());
    }
    if (roi) {
      const std::vector<std::size_t> expected = {
          static_cast<std::size_t>(vol.width()),
          static_cast<std::size_t>(vol.height()),
          static_cast<std::size_t>(vol.depth())};
      if (roi->shape() != expected) {
        throw Error("ROI mask shape does not match the " +
                    std::string(phase_name(phase)) + " volume of case '" +
                    bbox.case_id + "'");
      }
    }
    std::size_t count = 0;
    std::uint64_t sum = 0;
    std::uint64_t sum_sq = 0;
    const std::size_t plane = static_cast<std::size_t>(vol.width()) * vol.height();
    for (int z = bbox.slice_lo; z < bbox.slice_hi; ++z) {
      const Image2D& s = vol.slice(z);
      for (int y = bbox.y0; y < bbox.y1; ++y) {
        for (int x = bbox.x0; x < bbox.x1; ++x) {
          if (roi && !(*roi)[z * plane + static_cast<std::size_t>(y) * vol.width() + x]) {
            continue;
          }
          const std::uint64_t v = s.at(x, y);
          ++count;
          sum += v;
          sum_sq += v * v;
        }
      }
    }
    if (count == 0) {
      throw Error("no pixels selected for case '" + bbox.case_id + "' phase " +
                  std::string(phase_name(phase)));
    }
    out.phases[phase] = finish(count, sum, sum_sq);
  }
  if (out.phases.empty()) {
    throw Error("no phase volumes supplied for case '" + bbox.case_id + "'");
  }
  return out;
}

KineticsAggregate aggregate_kinetics(std::vector<KineticsSeries> series) {
  if (series.empty()) throw Error("cannot aggregate an empty series list");
  std::sort(series.begin(), series.end(),
            [](const KineticsSeries& a, const KineticsSeries& b) {
              return a.case_id < b.case_id;
            });
  KineticsAggregate agg;
  agg.source = series.front().source;
  agg.n_cases = series.size();
  for (std::size_t i = 0; i < series.size(); ++i) {
    if (series[i].source != agg.source) {
      throw Error("cannot aggregate mixed sources: case '" + series[i].case_id +
                  "' is " + std::string(source_name(series[i].source)) +
                  ", expected " + std::string(source_name(agg.source)));
    }
    if (i > 0 && series[i].case_id == series[i - 1].case_id) {
      throw Error("case '" + series[i].case_id + "' appears more than once");
    }
  }

  for (Phase phase : kAllPhases) {
    std::vector<double> means;
    std::size_t pixels = 0;
    std::uint64_t sum = 0;
    std::uint64_t sum_sq = 0;
    for (const auto& s : series) {
      const auto it = s.phases.find(phase);
      if (it == s.phases.end()) continue;
      means.push_back(it->second.mean);
      pixels += it->second.pixel_count;
      sum += it->second.sum;
      sum_sq += it->second.sum_sq;
    }
    if (means.empty()) continue;
    PhaseAggregate pa;
    pa.n_cases = means.size();
    double total = 0.0;
    for (double m : means) total += m;
    pa.mean_of_means = total / static_cast<double>(means.size());
    pa.std_across_cases = population_std(means, pa.mean_of_means);
    pa.std_within_pixels = finish(pixels, sum, sum_sq).std;
    pa.pixel_count = pixels;
    agg.phases[phase] = pa;
  }
  return agg;
}

OrderingReport ordering_report(const std::vector<KineticsSeries>& series) {
  if (series.empty()) throw Error("ordering needs at least one case");
  OrderingReport report;
  for (const auto& s : series) {
    double m[3];
    const Phase dce[3] = {Phase::kDceP1, Phase::kDceP2, Phase::kDceP3};
    for (int i = 0; i < 3; ++i) {
      const auto it = s.phases.find(dce[i]);
      if (it == s.phases.end()) {
        throw Error("case '" + s.case_id + "' is missing phase " +
                    std::string(phase_name(dce[i])));
      }
      m[i] = it->second.mean;
    }
    ++report.n_cases;
    if (m[0] < m[1] && m[1] < m[2]) ++report.n_increasing;
  }
  report.fraction = static_cast<double>(report.n_increasing) /
                    static_cast<double>(report.n_cases);
  return report;
}

double ordering_fraction(const std::vector<KineticsSeries>& series) {
  return ordering_report(series).fraction;
}

std::map<Phase, double> source_offset(const KineticsAggregate& real,
                                      const KineticsAggregate& synthetic) {
  std::map<Phase, double> out;
  for (const auto& [phase, r] : real.phases) {
    const auto it = synthetic.phases.find(phase);
    if (it == synthetic.phases.end()) {
      throw Error("phase " + std::string(phase_name(phase)) +
                  " present in the real aggregate only");
    }
    out[phase] = r.mean_of_means - it->second.mean_of_means;
  }
  for (const auto& [phase, s] : synthetic.phases) {
    if (!real.phases.count(phase)) {
      throw Error("phase " + std::string(phase_name(phase)) +
                  " present in the synthetic aggregate only");
    }
  }
  return out;
}

std::string series_to_csv(std::vector<KineticsSeries> series) {
  std::sort(series.begin(), series.end(),
            [](const KineticsSeries& a, const KineticsSeries& b) {
              if (a.case_id != b.case_id) return a.case_id < b.case_id;
              return a.source < b.source;
            });
  std::string out = "case_id,source,phase,mean,std,pixel_count\n";
  for (const auto& s : series) {
    for (const auto& [phase, st] : s.phases) {
      out += csv::format_row({s.case_id, std::string(source_name(s.source)),
                              std::string(phase_name(phase)),
                              csv::format_number(st.mean),
                              csv::format_number(st.std),
                              std::to_string(st.pixel_count)});
      out += '\n';
    }
  }
  return out;
}

std::string aggregate_to_json(const KineticsAggregate& aggregate) {
  nlohmann::json phases = nlohmann::json::object();
  for (const auto& [phase, pa] : aggregate.phases) {
    phases[std::string(phase_name(phase))] = {
        {"mean_of_means", pa.mean_of_means},
        {"std_across_cases", pa.std_across_cases},
        {"std_within_pixels", pa.std_within_pixels},
        {"n_cases", pa.n_cases},
        {"pixel_count", pa.pixel_count},
    };
  }
  nlohmann::json j = {{"source", std::string(source_name(aggregate.source))},
                      {"n_cases", aggregate.n_cases},
                      {"phases", phases}};
  return j.dump(2) + "\n";
}

std::string ordering_to_json(const OrderingReport& report) {
  nlohmann::json j = {{"n_cases", report.n_cases},
                      {"n_increasing", report.n_increasing},
                      {"fraction", report.fraction}};
  return j.dump(2) + "\n";
}

}  // namespace dceeval::kinetics

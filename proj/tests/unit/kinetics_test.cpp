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

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "dceeval/error.hpp"
#include "dceeval/phantom.hpp"
#include "test_support.hpp"

namespace dceeval::kinetics {
namespace {

using testing::lesion_spec;

std::map<Phase, Volume> single_phase(Phase p, std::vector<Image2D> slices) {
  for (std::size_t z = 0; z < slices.size(); ++z) {
    slices[z] = slices[z].relabeled("c", p, static_cast<int>(z));
  }
  std::map<Phase, Volume> out;
  out.emplace(p, Volume(std::move(slices)));
  return out;
}

KineticsSeries series_with(std::string id, Source src, std::array<double, 3> dce) {
  KineticsSeries s;
  s.case_id = std::move(id);
  s.source = src;
  const Phase ph[3] = {Phase::kDceP1, Phase::kDceP2, Phase::kDceP3};
  for (int i = 0; i < 3; ++i) s.phases[ph[i]].mean = dce[i];
  return s;
}

TEST(CaseKinetics, ConstantRegion) {
  const auto vols = single_phase(Phase::kDceP1, {Image2D::filled(6, 6, 50),
                                                 Image2D::filled(6, 6, 50)});
  const auto s = case_kinetics(vols, {"c", 1, 1, 4, 5, 0, 2}, Source::kReal);
  const auto& st = s.phases.at(Phase::kDceP1);
  EXPECT_EQ(st.mean, 50.0);
  EXPECT_EQ(st.std, 0.0);
  EXPECT_EQ(st.pixel_count, 24u);
  EXPECT_EQ(s.missing_phases.size(), 3u);
}

TEST(CaseKinetics, TwoPointStatistics) {
  const auto vols = single_phase(Phase::kPre, {Image2D(2, 1, {0, 100})});
  const auto s = case_kinetics(vols, {"c", 0, 0, 2, 1, 0, 1}, Source::kReal);
  EXPECT_EQ(s.phases.at(Phase::kPre).mean, 50.0);
  EXPECT_EQ(s.phases.at(Phase::kPre).std, 50.0);
}

TEST(CaseKinetics, MatchesFlatLoopAndShiftCovariance) {
  std::mt19937_64 rng(71);
  for (int trial = 0; trial < 30; ++trial) {
    const int w = 3 + rng() % 10, h = 3 + rng() % 10, d = 1 + rng() % 4;
    std::vector<Image2D> slices, shifted;
    std::uniform_int_distribution<int> val(0, 200);
    const int c = rng() % 55;
    for (int z = 0; z < d; ++z) {
      std::vector<std::uint8_t> px(w * h), moved(w * h);
      for (int i = 0; i < w * h; ++i) {
        px[i] = val(rng);
        moved[i] = px[i] + c;
      }
      slices.emplace_back(w, h, px);
      shifted.emplace_back(w, h, moved);
    }
    const BoundingBox box{"c", int(rng() % 2), int(rng() % 2), w - int(rng() % 2),
                          h - int(rng() % 2), 0, d};
    const auto s = case_kinetics(single_phase(Phase::kDceP2, slices), box, Source::kReal)
                       .phases.at(Phase::kDceP2);
    double sum = 0, n = 0;
    for (int z = box.slice_lo; z < box.slice_hi; ++z)
      for (int y = box.y0; y < box.y1; ++y)
        for (int x = box.x0; x < box.x1; ++x) sum += slices[z].at(x, y), ++n;
    const double mean = sum / n;
    double ss = 0;
    for (int z = box.slice_lo; z < box.slice_hi; ++z)
      for (int y = box.y0; y < box.y1; ++y)
        for (int x = box.x0; x < box.x1; ++x)
          ss += (slices[z].at(x, y) - mean) * (slices[z].at(x, y) - mean);
    EXPECT_NEAR(s.mean, mean, 1e-12);
    EXPECT_NEAR(s.std, std::sqrt(ss / n), 1e-9);
    EXPECT_EQ(s.pixel_count, static_cast<std::size_t>(n));

    const auto t = case_kinetics(single_phase(Phase::kDceP2, shifted), box, Source::kReal)
                       .phases.at(Phase::kDceP2);
    EXPECT_NEAR(t.mean, s.mean + c, 1e-12);
    EXPECT_NEAR(t.std, s.std, 1e-9);
  }
}

TEST(CaseKinetics, BoxOutOfBoundsRejected) {
  const auto vols = single_phase(Phase::kPre, {Image2D::filled(4, 4, 1)});
  EXPECT_THROW(case_kinetics(vols, {"c", 0, 0, 5, 4, 0, 1}, Source::kReal), Error);
  EXPECT_THROW(case_kinetics(vols, {"c", 0, 0, 4, 4, 0, 2}, Source::kReal), Error);
  EXPECT_THROW(case_kinetics({}, {"c", 0, 0, 4, 4, 0, 1}, Source::kReal), Error);
}

TEST(CaseKinetics, PhantomRecovery) {
  const auto ph = phantom::generate_phantom(lesion_spec(5, "p", {30, 80, 120, 140}, 2));
  const auto s = case_kinetics(ph.volumes, ph.bbox, Source::kSynthetic, &ph.mask);
  const double expect[4] = {30, 80, 120, 140};
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_NEAR(s.phases.at(kAllPhases[i]).mean, expect[i], 1.0);
  }
}

TEST(CaseKinetics, ZeroNoiseBoxMixtureClosedForm) {
  const auto ph = phantom::generate_phantom(lesion_spec(5, "p", {30, 80, 120, 140}, 0));
  const auto s = case_kinetics(ph.volumes, ph.bbox, Source::kReal);
  std::size_t inside = 0;
  const std::size_t plane = 48 * 40;
  for (int z = ph.bbox.slice_lo; z < ph.bbox.slice_hi; ++z)
    for (int y = ph.bbox.y0; y < ph.bbox.y1; ++y)
      for (int x = ph.bbox.x0; x < ph.bbox.x1; ++x) inside += ph.mask[z * plane + y * 48 + x];
  const double total = static_cast<double>(ph.bbox.pixel_count());
  const double mix = (inside * 120.0 + (total - inside) * 20.0) / total;
  EXPECT_NEAR(s.phases.at(Phase::kDceP2).mean, mix, 1e-12);
  const auto masked = case_kinetics(ph.volumes, ph.bbox, Source::kReal, &ph.mask);
  EXPECT_EQ(masked.phases.at(Phase::kDceP2).mean, 120.0);
  EXPECT_EQ(masked.phases.at(Phase::kDceP2).std, 0.0);
}

TEST(Aggregate, SingleAndTwoCases) {
  auto one = series_with("a", Source::kReal, {100, 110, 120});
  one.phases[Phase::kDceP1].pixel_count = 1;
  const auto agg1 = aggregate_kinetics({one});
  EXPECT_EQ(agg1.phases.at(Phase::kDceP1).mean_of_means, 100.0);
  EXPECT_EQ(agg1.phases.at(Phase::kDceP1).std_across_cases, 0.0);
  EXPECT_EQ(agg1.n_cases, 1u);

  const auto agg2 = aggregate_kinetics({series_with("b", Source::kReal, {120, 0, 0}),
                                        series_with("a", Source::kReal, {100, 0, 0})});
  EXPECT_EQ(agg2.phases.at(Phase::kDceP1).mean_of_means, 110.0);
  EXPECT_EQ(agg2.phases.at(Phase::kDceP1).std_across_cases, 10.0);
}

TEST(Aggregate, Errors) {
  EXPECT_THROW(aggregate_kinetics({}), Error);
  EXPECT_THROW(aggregate_kinetics({series_with("a", Source::kReal, {1, 2, 3}),
                                   series_with("b", Source::kSynthetic, {1, 2, 3})}),
               Error);
  EXPECT_THROW(aggregate_kinetics({series_with("a", Source::kReal, {1, 2, 3}),
                                   series_with("a", Source::kReal, {1, 2, 3})}),
               Error);
}

TEST(Aggregate, PooledPixelsMatchFlatLoop) {
  std::vector<KineticsSeries> cohort;
  std::vector<double> all;
  for (int c = 0; c < 4; ++c) {
    const auto ph = phantom::generate_phantom(
        lesion_spec(100 + c, "c" + std::to_string(c), {30, 80, 120, 140}, 6));
    cohort.push_back(case_kinetics(ph.volumes, ph.bbox, Source::kReal));
    const auto& vol = ph.volumes.at(Phase::kDceP3);
    for (int z = ph.bbox.slice_lo; z < ph.bbox.slice_hi; ++z)
      for (int y = ph.bbox.y0; y < ph.bbox.y1; ++y)
        for (int x = ph.bbox.x0; x < ph.bbox.x1; ++x) all.push_back(vol.slice(z).at(x, y));
  }
  double mean = 0;
  for (double v : all) mean += v;
  mean /= all.size();
  double ss = 0;
  for (double v : all) ss += (v - mean) * (v - mean);
  const auto agg = aggregate_kinetics(cohort);
  EXPECT_NEAR(agg.phases.at(Phase::kDceP3).std_within_pixels, std::sqrt(ss / all.size()), 1e-9);
  EXPECT_EQ(agg.phases.at(Phase::kDceP3).pixel_count, all.size());
}

TEST(Ordering, Fractions) {
  const auto inc = series_with("a", Source::kReal, {1, 2, 3});
  const auto dec = series_with("b", Source::kReal, {3, 2, 1});
  const auto flat = series_with("c", Source::kReal, {2, 2, 3});
  EXPECT_NEAR(ordering_fraction({inc, dec, series_with("d", Source::kReal, {4, 5, 6})}),
              2.0 / 3.0, 1e-15);
  EXPECT_EQ(ordering_fraction({inc}), 1.0);
  EXPECT_EQ(ordering_fraction({flat}), 0.0);
  const auto report = ordering_report({inc, dec, flat});
  EXPECT_EQ(report.n_cases, 3u);
  EXPECT_EQ(report.n_increasing, 1u);

  KineticsSeries missing = inc;
  missing.case_id = "gap";
  missing.phases.erase(Phase::kDceP2);
  try {
    ordering_fraction({inc, missing});
    FAIL() << "expected rejection";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("'gap'"), std::string::npos);
  }
}

TEST(Offset, Examples) {
  KineticsAggregate real, syn;
  real.phases[Phase::kDceP1].mean_of_means = 100;
  syn.phases[Phase::kDceP1].mean_of_means = 90;
  EXPECT_EQ(source_offset(real, syn).at(Phase::kDceP1), 10.0);
  EXPECT_EQ(source_offset(real, real).at(Phase::kDceP1), 0.0);
  syn.phases[Phase::kDceP2].mean_of_means = 1;
  EXPECT_THROW(source_offset(real, syn), Error);
}

TEST(Io, CsvLayout) {
  auto s = series_with("b", Source::kSynthetic, {1, 2, 3});
  const std::string text = series_to_csv({s, series_with("a", Source::kSynthetic, {1, 2, 3})});
  EXPECT_EQ(text.substr(0, text.find('\n')), "case_id,source,phase,mean,std,pixel_count");
  EXPECT_LT(text.find("\na,"), text.find("\nb,"));
  EXPECT_NE(text.find("SYNTHETIC"), std::string::npos);
  EXPECT_NE(ordering_to_json({3, 2, 2.0 / 3.0}).find("\"n_increasing\": 2"), std::string::npos);
}

}  // namespace
}  // namespace dceeval::kinetics

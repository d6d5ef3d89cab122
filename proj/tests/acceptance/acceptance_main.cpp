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

// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any FAIL.
//
// DCEEVAL_ACCEPTANCE_PAIRS overrides the pair count of the throughput run
// (default 5000) for local profiling only.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <limits>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "dceeval/cli.hpp"
#include "dceeval/frechet.hpp"
#include "dceeval/image.hpp"
#include "dceeval/image_io.hpp"
#include "dceeval/kinetics.hpp"
#include "dceeval/pair_metrics.hpp"
#include "dceeval/parallel.hpp"
#include "dceeval/phantom.hpp"
#include "dceeval/same.hpp"
#include "test_support.hpp"

namespace {

using namespace dceeval;
using Clock = std::chrono::steady_clock;
namespace fs = std::filesystem;

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  // Records a failed check; only the first few are kept in the detail line.
  void check(bool ok, const std::string& what) {
    if (ok) return;
    if (pass || failures < 3) detail << " [" << what << "]";
    pass = false;
    ++failures;
  }
  int failures = 0;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(3);
  s << std::scientific << v;
  return s.str();
}

fid::FeatureSet as_set(const Eigen::MatrixXd& m) {
  return fid::FeatureSet(fid::RowMatrix(m), "acceptance");
}

void analytic_frechet(Outcome& o) {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(1001);
  double worst = 0.0;
  for (int i = 0; i < 20; ++i) {
    const auto fit = fid::fit_gaussian(as_set(testing::random_samples(rng, 50, 1 + i % 6)));
    worst = std::max(worst, std::fabs(fid::frechet_distance(fit, fit)));
  }
  o.check(worst <= 1e-9, "identical fits " + fmt(worst));

  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(2, 2);
  const double shift = fid::frechet_distance({Eigen::Vector2d(0, 0), eye},
                                             {Eigen::Vector2d(3, 4), eye});
  o.check(std::fabs(shift - 25.0) <= 1e-9, "mean shift " + fmt(shift));

  std::uniform_real_distribution<double> mu(-10, 10), sd(0.01, 5);
  double worst_1d = 0.0;
  for (int i = 0; i < 20; ++i) {
    const double m1 = mu(rng), m2 = mu(rng), s1 = sd(rng), s2 = sd(rng);
    const double fd = fid::frechet_distance(
        {Eigen::VectorXd::Constant(1, m1), Eigen::MatrixXd::Constant(1, 1, s1 * s1)},
        {Eigen::VectorXd::Constant(1, m2), Eigen::MatrixXd::Constant(1, 1, s2 * s2)});
    const double expect = (m1 - m2) * (m1 - m2) + (s1 - s2) * (s1 - s2);
    worst_1d = std::max(worst_1d, std::fabs(fd - expect));
  }
  o.check(worst_1d <= 1e-9, "1-D closed form " + fmt(worst_1d));
  const double t = seconds_since(t0);
  o.check(t < 1.0, "runtime " + std::to_string(t) + " s");
  o.detail << " identical=" << fmt(worst) << " shift=" << shift
           << " 1d_err=" << fmt(worst_1d) << " t=" << t << "s";
}

void frechet_oracle(Outcome& o) {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(1002);
  double worst = 0.0, worst_sym = 0.0;
  for (int i = 0; i < 100; ++i) {
    const int d = 1 + static_cast<int>(rng() % 5);
    const int na = 2 * d + 2 + static_cast<int>(rng() % (499 - 2 * d));
    const int nb = 2 * d + 2 + static_cast<int>(rng() % (499 - 2 * d));
    const Eigen::MatrixXd a = testing::random_samples(rng, na, d);
    const Eigen::MatrixXd b = testing::random_samples(rng, nb, d, (i % 4) * 0.5);
    const double ab = fid::frechet_between_sets(as_set(a), as_set(b));
    const double ba = fid::frechet_between_sets(as_set(b), as_set(a));
    worst = std::max(worst, std::fabs(ab - testing::oracle_frechet(a, b)));
    worst_sym = std::max(worst_sym, std::fabs(ab - ba));
  }
  o.check(worst <= 1e-8, "oracle " + fmt(worst));
  o.check(worst_sym <= 1e-6, "symmetry " + fmt(worst_sym));
  const double t = seconds_since(t0);
  o.check(t < 10.0, "runtime " + std::to_string(t) + " s");
  o.detail << " oracle_err=" << fmt(worst) << " sym_err=" << fmt(worst_sym)
           << " t=" << t << "s";
}

void same_fixture(Outcome& o) {
  const auto table = same::scale_cohort(same::records_from_csv(testing::kTable1Csv));
  for (std::size_t i = 0; i < 4; ++i) {
    const double got = table.rows[i].score;
    o.check(std::fabs(got - testing::kTable1Same[i]) <= 1e-3,
            table.rows[i].checkpoint_id + "=" + std::to_string(got));
    o.detail << " " << table.rows[i].checkpoint_id << "=" << got;
  }
  o.check(table.selected == "ep10", "selected " + table.selected);
  o.detail << " selected=" << table.selected;
}

void same_affine(Outcome& o) {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(1004);
  const std::vector<std::string> metrics = {"fid_img", "fid_rad", "ssim", "mae", "mse"};
  std::uniform_int_distribution<int> raw(-5000, 5000), small(-3, 3);
  std::uniform_int_distribution<int> scale(1, 1000), offset(-1000000, 1000000);
  int mismatches = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 2 + static_cast<int>(rng() % 16);
    std::vector<same::CheckpointRecord> cohort(n);
    for (int i = 0; i < n; ++i) {
      cohort[i].checkpoint_id = "ep" + std::to_string(10 * (i + 1));
      for (const auto& m : metrics) {
        cohort[i].raw[m] = trial % 5 == 0 ? small(rng) : raw(rng);
      }
    }
    auto moved = cohort;
    for (const auto& m : metrics) {
      const double a = scale(rng), b = offset(rng);
      for (auto& r : moved) r.raw[m] = a * r.raw[m] + b;
    }
    const auto x = same::scale_cohort(cohort);
    const auto y = same::scale_cohort(moved);
    bool same = x.selected == y.selected;
    for (int i = 0; i < n; ++i) {
      same = same && x.rows[i].scaled == y.rows[i].scaled &&
             x.rows[i].score == y.rows[i].score;
    }
    mismatches += !same;
  }
  o.check(mismatches == 0, std::to_string(mismatches) + " cohorts changed");
  const double t = seconds_since(t0);
  o.check(t < 5.0, "runtime " + std::to_string(t) + " s");
  o.detail << " cohorts=200 mismatches=" << mismatches << " t=" << t << "s";
}

void pair_metrics(Outcome& o) {
  using namespace metrics;
  const auto t0 = Clock::now();
  std::mt19937_64 rng(1005);
  constexpr double kInf = std::numeric_limits<double>::infinity();
  int exact_failures = 0;
  int invariant_failures = 0;
  double ssim_err = 0.0, ms_err = 0.0;
  for (int i = 0; i < 100; ++i) {
    const int w = 1 + static_cast<int>(rng() % 16), h = 1 + static_cast<int>(rng() % 16);
    const Image2D a = testing::random_image(rng, w, h);
    const Image2D b = i % 2 ? testing::random_image(rng, w, h)
                            : testing::perturbed(rng, a, 1 + i % 40);
    std::vector<std::uint8_t> ma(w * h), mb(w * h);
    for (auto& v : ma) v = rng() % 2;
    for (auto& v : mb) v = rng() % 3 == 0;
    const std::vector<std::size_t> shape = {std::size_t(w), std::size_t(h)};
    const Mask mask_a(shape, ma), mask_b(shape, mb);
    exact_failures += mse(a, b) != testing::oracle_mse(a, b);
    exact_failures += mae(a, b) != testing::oracle_mae(a, b);
    exact_failures += dice(mask_a, mask_b) != testing::oracle_dice(ma, mb);

    invariant_failures += mse(a, a) != 0.0 || mae(a, a) != 0.0 || psnr(a, a) != kInf;
    invariant_failures += mse(a, b) != mse(b, a) || mae(a, b) != mae(b, a);
    invariant_failures += dice(mask_a, mask_b) != dice(mask_b, mask_a);
    const double dc = dice(mask_a, mask_b);
    invariant_failures += dc < 0.0 || dc > 1.0 || dice(mask_a, mask_a) != 1.0;
    invariant_failures += mse(a, b) < 0.0 || mae(a, b) < 0.0;
    invariant_failures += (psnr(a, b) == kInf) != (mse(a, b) == 0.0);

    const Image2D c = testing::random_image(rng, 16, 16);
    const Image2D d = i % 2 ? testing::random_image(rng, 16, 16)
                            : testing::perturbed(rng, c, 1 + i % 60);
    const double s = ssim(c, d);
    ssim_err = std::max(ssim_err, std::fabs(s - testing::oracle_ssim(c, d)));
    invariant_failures += std::fabs(ssim(c, c) - 1.0) > 1e-12;
    invariant_failures += std::fabs(s - ssim(d, c)) > 1e-12 || s < -1.0 || s > 1.0;
  }
  for (int i = 0; i < 4; ++i) {
    const Image2D a = testing::structured_image(rng, 256, 256);
    const Image2D b = i == 3 ? testing::random_image(rng, 256, 256)
                             : testing::perturbed(rng, a, 8 + 20 * i);
    const double m = ms_ssim(a, b);
    ms_err = std::max(ms_err, std::fabs(m - testing::oracle_ms_ssim(a, b)));
    invariant_failures += std::fabs(ms_ssim(a, a) - 1.0) > 1e-12;
    invariant_failures += std::fabs(m - ms_ssim(b, a)) > 1e-12 || m < 0.0 || m > 1.0;
  }
  o.check(exact_failures == 0, std::to_string(exact_failures) + " loop-oracle mismatches");
  o.check(ssim_err <= 1e-9, "ssim " + fmt(ssim_err));
  o.check(ms_err <= 1e-6, "ms_ssim " + fmt(ms_err));
  o.check(invariant_failures == 0, std::to_string(invariant_failures) + " invariant failures");
  const double t = seconds_since(t0);
  o.check(t < 30.0, "runtime " + std::to_string(t) + " s");
  o.detail << " exact_mismatches=" << exact_failures << " ssim_err=" << fmt(ssim_err)
           << " ms_ssim_err=" << fmt(ms_err) << " t=" << t << "s";
}

// Returns the number of violated Jensen relations in one record set.
int jensen_violations(const std::vector<metrics::PairMetricsRecord>& records) {
  int bad = 0;
  for (const auto& r : records) bad += *r.mae > std::sqrt(*r.mse);
  const auto s = metrics::summarize_pairs(records);
  if (s.psnr_excluded_count == 0) {
    const double bound = metrics::psnr_from_mse(s.metrics.at("mse").mean);
    bad += s.metrics.at("psnr").mean < bound - 1e-12 * std::fabs(bound);
  }
  return bad;
}

void jensen(Outcome& o, const std::vector<std::vector<metrics::PairMetricsRecord>>& extra) {
  std::mt19937_64 rng(1006);
  int violations = 0;
  int sets = 0;
  const auto selection = metrics::MetricSelection::parse("mse,mae,psnr");
  for (int set = 0; set < 100; ++set, ++sets) {
    std::vector<metrics::PairMetricsRecord> records;
    const int n = 1 + static_cast<int>(rng() % 30);
    const int amp = 1 + static_cast<int>(rng() % 120);
    for (int i = 0; i < n; ++i) {
      const Image2D a = testing::random_image(rng, 8 + rng() % 24, 8 + rng() % 24);
      records.push_back(metrics::evaluate_pair(std::to_string(i), a,
                                               testing::perturbed(rng, a, amp), selection));
    }
    violations += jensen_violations(records);
  }
  for (const auto& records : extra) {
    violations += jensen_violations(records);
    ++sets;
  }
  const double anchor = metrics::psnr_from_mse(34.882);
  o.check(violations == 0, std::to_string(violations) + " violations");
  o.check(32.91 >= anchor, "published means " + std::to_string(anchor));
  o.detail << " record_sets=" << sets << " violations=" << violations
           << " anchor: 32.91 >= " << anchor;
}

std::vector<kinetics::KineticsSeries> phantom_cohort(std::uint64_t seed,
                                                     std::array<int, 4> means,
                                                     kinetics::Source source,
                                                     int noise = 2) {
  std::vector<kinetics::KineticsSeries> out;
  for (int c = 0; c < 10; ++c) {
    const auto ph = phantom::generate_phantom(
        testing::lesion_spec(seed + c, "case" + std::to_string(c), means, noise));
    out.push_back(kinetics::case_kinetics(ph.volumes, ph.bbox, source, &ph.mask));
  }
  return out;
}

void kinetics_oracle(Outcome& o) {
  const std::array<int, 4> programmed = {30, 80, 120, 140};
  const auto real = phantom_cohort(2000, programmed, kinetics::Source::kReal);
  double worst = 0.0;
  for (const auto& s : real) {
    for (std::size_t p = 0; p < 4; ++p) {
      worst = std::max(worst, std::fabs(s.phases.at(kAllPhases[p]).mean - programmed[p]));
    }
  }
  const auto agg_real = kinetics::aggregate_kinetics(real);
  for (std::size_t p = 0; p < 4; ++p) {
    worst = std::max(worst, std::fabs(agg_real.phases.at(kAllPhases[p]).mean_of_means -
                                      programmed[p]));
  }
  o.check(worst <= 1.0, "mean recovery error " + std::to_string(worst));

  const double inc = kinetics::ordering_fraction(real);
  const double dec = kinetics::ordering_fraction(
      phantom_cohort(3000, {30, 140, 120, 80}, kinetics::Source::kReal));
  o.check(inc == 1.0, "increasing fraction " + std::to_string(inc));
  o.check(dec == 0.0, "decreasing fraction " + std::to_string(dec));

  const auto syn = phantom_cohort(4000, {35, 85, 125, 145}, kinetics::Source::kSynthetic);
  const auto offsets = kinetics::source_offset(agg_real, kinetics::aggregate_kinetics(syn));
  double worst_offset = 0.0;
  for (const auto& [phase, v] : offsets) {
    worst_offset = std::max(worst_offset, std::fabs(v - (-5.0)));
  }
  o.check(offsets.size() == 4 && worst_offset <= 1.0,
          "offset error " + std::to_string(worst_offset));
  o.detail << " max_mean_err=" << worst << " ordering(inc)=" << inc
           << " ordering(dec)=" << dec << " max_offset_err=" << worst_offset;
}

void subtraction_stacking(Outcome& o) {
  int bad = 0;
  for (int pre = 0; pre < 256; ++pre) {
    for (int post = 0; post < 256; ++post) {
      const Image2D out = subtraction_image(Image2D(1, 1, {std::uint8_t(pre)}),
                                            Image2D(1, 1, {std::uint8_t(post)}));
      bad += out.at(0, 0) != std::max(post - pre, 0);
    }
  }
  o.check(bad == 0, std::to_string(bad) + " subtraction mismatches");

  std::mt19937_64 rng(1008);
  int round_trip_failures = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const int w = 1 + rng() % 40, h = 1 + rng() % 40, depth = 1 + rng() % 12;
    std::vector<Image2D> slices;
    for (int z = 0; z < depth; ++z) {
      slices.push_back(testing::random_image(rng, w, h).relabeled("v", Phase::kDceP2, z));
    }
    const Volume v = stack_volume(slices);
    round_trip_failures += !(stack_volume(extract_slices(v)) == v);
    round_trip_failures += !(extract_slices(stack_volume(slices)) == slices);
  }
  o.check(round_trip_failures == 0, std::to_string(round_trip_failures) + " round-trip failures");
  o.detail << " combinations=65536 mismatches=" << bad
           << " volumes=200 round_trip_failures=" << round_trip_failures;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(DCEEVAL_CLI_PATH) + " " + args;
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

void determinism_throughput(Outcome& o,
                            std::vector<std::vector<metrics::PairMetricsRecord>>& sets) {
  std::size_t pairs = 5000;
  if (const char* env = std::getenv("DCEEVAL_ACCEPTANCE_PAIRS")) pairs = std::stoul(env);
  testing::TempDir dir("dceeval-acceptance");
  fs::create_directories(dir / "real");
  fs::create_directories(dir / "syn");

  const auto g0 = Clock::now();
  // Each pair draws from its own seeded stream, so generation order is free.
  parallel_for(pairs, 1, [&](std::size_t i) {
    std::mt19937_64 rng(50000 + i);
    const io::SliceKey key{"case" + std::to_string(i / 100), Phase::kDceP1,
                           static_cast<int>(i % 100)};
    const Image2D real = testing::structured_image(rng, 512, 512);
    io::write_png(real, dir / "real" / io::slice_filename(key), io::PngSpeed::kFast);
    io::write_png(testing::perturbed(rng, real, 6), dir / "syn" / io::slice_filename(key),
                  io::PngSpeed::kFast);
  });
  const double gen_time = seconds_since(g0);

  std::map<int, std::string> bundles;
  std::map<int, double> times;
  for (int workers : {1, 4, 8}) {
    const fs::path out = dir / ("out" + std::to_string(workers));
    const auto t0 = Clock::now();
    const int rc = run_cli("evaluate-pairs --inputs-a " + (dir / "real").string() +
                           " --inputs-b " + (dir / "syn").string() + " --out " +
                           out.string() + " --workers " + std::to_string(workers) +
                           " --metrics mse,mae,psnr,ssim,msssim");
    times[workers] = seconds_since(t0);
    o.check(rc == 0, "workers=" + std::to_string(workers) + " exit " + std::to_string(rc));
    if (rc != 0) continue;
    std::string bundle;
    for (const char* f : {cli::kPairsCsv, cli::kSummaryJson, cli::kUnpairedCsv}) {
      bundle += io::read_text(out / f) + '\x1e';
    }
    bundles[workers] = bundle;
    if (workers == 1) {
      sets.push_back(metrics::records_from_csv(io::read_text(out / cli::kPairsCsv)));
      o.check(sets.back().size() == pairs, "pairs.csv rows " + std::to_string(sets.back().size()));
    }
  }
  const bool identical = bundles.size() == 3 && bundles[1] == bundles[4] && bundles[1] == bundles[8];
  o.check(identical, "reports differ across worker counts");
  for (const auto& [w, t] : times) {
    o.check(t < 300.0, "workers=" + std::to_string(w) + " took " + std::to_string(t) + " s");
  }
  o.detail << " pairs=" << pairs << " size=512x512 identical=" << (identical ? "yes" : "no")
           << " t(w1)=" << times[1] << "s t(w4)=" << times[4] << "s t(w8)=" << times[8]
           << "s cores=" << std::thread::hardware_concurrency()
           << " (generation " << gen_time << "s)";
}

}  // namespace

int main() {
  std::vector<std::vector<metrics::PairMetricsRecord>> throughput_sets;
  struct Criterion {
    const char* name;
    std::function<void(Outcome&)> body;
  };
  const std::vector<Criterion> criteria = {
      {"frechet-analytic", analytic_frechet},
      {"frechet-oracle", frechet_oracle},
      {"same-table1-fixture", same_fixture},
      {"same-affine-invariance", same_affine},
      {"pair-metric-oracles", pair_metrics},
      {"determinism-throughput",
       [&](Outcome& o) { determinism_throughput(o, throughput_sets); }},
      {"jensen-consistency", [&](Outcome& o) { jensen(o, throughput_sets); }},
      {"kinetics-phantom-oracle", kinetics_oracle},
      {"subtraction-stacking", subtraction_stacking},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    Outcome o;
    try {
      c.body(o);
    } catch (const std::exception& e) {
      o.check(false, std::string("exception: ") + e.what());
    }
    std::cout << (o.pass ? "PASS " : "FAIL ") << c.name << ":" << o.detail.str()
              << std::endl;
    failed += !o.pass;
  }
  std::cout << (failed ? "FAILED " : "ALL PASSED ") << criteria.size() - failed << "/"
            << criteria.size() << std::endl;
  return failed ? 1 : 0;
}

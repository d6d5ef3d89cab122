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
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dceeval/image.hpp"

namespace dceeval::metrics {

/// Canonical SSIM settings: 11x11 Gaussian window with sigma 1.5,
/// K1 = 0.01, K2 = 0.03, dynamic range 255.
struct SsimConstants {
  static constexpr int kWindow = 11;
  static constexpr double kSigma = 1.5;
  static constexpr double kK1 = 0.01;
  static constexpr double kK2 = 0.03;
  static constexpr double kRange = 255.0;
  static constexpr double kC1 = (kK1 * kRange) * (kK1 * kRange);
  static constexpr double kC2 = (kK2 * kRange) * (kK2 * kRange);
};

inline constexpr std::array<double, 5> kMsSsimWeights = {0.0448, 0.2856, 0.3001,
                                                         0.2363, 0.1333};
inline constexpr int kMsSsimScales = 5;
/// Smallest side length that still leaves an 11-pixel image at the coarsest
/// of five dyadic scales.
inline constexpr int kMsSsimMinSize = 176;

/// Normalized 1D Gaussian taps; the 2D window is their outer product.
const std::array<double, SsimConstants::kWindow>& ssim_gaussian_taps();

double mse(const Image2D& a, const Image2D& b);
double mae(const Image2D& a, const Image2D& b);

/// 10*log10(255^2 / mse); +infinity when mse == 0.
double psnr(const Image2D& a, const Image2D& b);
double psnr_from_mse(double mse_value);

/// Mean SSIM over all fully-contained 11x11 windows.
double ssim(const Image2D& a, const Image2D& b);

/// Five-scale MS-SSIM with 2x2 average-pool downsampling. Contrast-structure
/// terms are clamped at zero before exponentiation.
double ms_ssim(const Image2D& a, const Image2D& b);

/// 2|A and B| / (|A| + |B|); two empty masks score 1.
double dice(const Mask& a, const Mask& b);

/// Which metrics an evaluation computes.
struct MetricSelection {
  bool mse = true;
  bool mae = true;
  bool psnr = true;
  bool ssim = true;
  bool ms_ssim = true;

  /// Parses a comma list of mse, mae, psnr, ssim, msssim (ms_ssim accepted).
  static MetricSelection parse(std::string_view list);
  bool any() const { return mse || mae || psnr || ssim || ms_ssim; }
};

/// Per-pair results; metrics that were not selected stay empty.
struct PairMetricsRecord {
  std::string pair_id;
  std::optional<double> mse;
  std::optional<double> mae;
  std::optional<double> psnr;
  std::optional<double> ssim;
  std::optional<double> ms_ssim;
};

/// Computes the selected metrics for one pair, sharing the finest-scale
/// SSIM statistics between SSIM and MS-SSIM.
PairMetricsRecord evaluate_pair(std::string pair_id, const Image2D& a,
                                const Image2D& b,
                                const MetricSelection& selection = {});

struct MetricStats {
  double mean = 0.0;
  double std = 0.0;  // population
  std::size_t n = 0;
};

struct DatasetMetricsSummary {
  std::size_t n_pairs = 0;
  std::map<std::string, MetricStats> metrics;  // keyed by CSV column name
  std::size_t psnr_excluded_count = 0;
};

/// Mean and population standard deviation per metric. Records are sorted by
/// pair_id first so the result does not depend on input order. Pairs with
/// infinite PSNR are left out of the PSNR statistics and counted instead.
DatasetMetricsSummary summarize_pairs(std::vector<PairMetricsRecord> records);

/// `pair_id,mse,mae,psnr,ssim,ms_ssim` with `inf` for infinite PSNR.
std::string records_to_csv(const std::vector<PairMetricsRecord>& records);
std::vector<PairMetricsRecord> records_from_csv(std::string_view text);

/// Pretty-printed JSON with sorted keys.
std::string summary_to_json(const DatasetMetricsSummary& summary);

}  // namespace dceeval::metrics

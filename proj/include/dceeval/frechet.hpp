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

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "dceeval/image.hpp"

namespace dceeval::fid {

using RowMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// n x d embedding matrix, one row per image, tagged with the extractor that
/// produced it. All entries are finite and n >= 1; fitting a Gaussian further
/// requires n >= 2.
class FeatureSet {
 public:
  FeatureSet(RowMatrix data, std::string extractor_id);

  std::size_t n() const { return static_cast<std::size_t>(data_.rows()); }
  std::size_t d() const { return static_cast<std::size_t>(data_.cols()); }
  const RowMatrix& data() const { return data_; }
  const std::string& extractor_id() const { return extractor_id_; }

 private:
  RowMatrix data_;
  std::string extractor_id_;
};

struct GaussianFit {
  Eigen::VectorXd mu;
  Eigen::MatrixXd sigma;
};

/// Column means and the unbiased (n - 1) covariance, symmetrized.
GaussianFit fit_gaussian(const FeatureSet& features);

/// Squared Frechet distance between two Gaussians:
///
///   |mu_x - mu_y|^2 + tr(S_x) + tr(S_y) - 2 tr((S_x^1/2 S_y S_x^1/2)^1/2)
///
/// The trace of the product square root is taken through the symmetric
/// sandwich, which has the same spectrum as S_x S_y but stays symmetric.
/// Negative eigenvalues are clamped to zero. If an eigendecomposition does
/// not converge, both covariances receive a 1e-6 ridge and the evaluation is
/// retried once. Results in (-1e-8, 0) are reported as 0; anything more
/// negative is treated as a numerical failure.
double frechet_distance(const GaussianFit& x, const GaussianFit& y);

double frechet_between_sets(const FeatureSet& a, const FeatureSet& b);

inline constexpr const char* kBaselineExtractorId = "baseline-avgpool-8x8";
inline constexpr int kBaselineGrid = 8;

/// Deterministic stand-in extractor: 8x8 grid of block means scaled to
/// [0, 1] (64 features). Images whose sides are not multiples of 8 are padded
/// by replicating the last row/column.
FeatureSet baseline_extract(const std::vector<Image2D>& images);
std::vector<double> baseline_features(const Image2D& image);

// Binary layout, all little-endian:
//   "FSET" | u32 version | u64 n | u64 d | u32 id_len | id bytes |
//   n*d f32 row-major
inline constexpr std::uint32_t kFeatureFormatVersion = 1;

/// Values are narrowed to single precision on write.
void write_featureset(const FeatureSet& fs, const std::filesystem::path& path);
std::vector<std::uint8_t> encode_featureset(const FeatureSet& fs);

FeatureSet read_featureset(const std::filesystem::path& path);
FeatureSet decode_featureset(const std::vector<std::uint8_t>& bytes);

/// Header-less CSV: n rows of d numeric columns.
FeatureSet read_featureset_csv(const std::filesystem::path& path,
                               std::string extractor_id);

}  // namespace dceeval::fid

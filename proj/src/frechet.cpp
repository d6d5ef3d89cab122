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

#include "dceeval/frechet.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <optional>
#include <sstream>

#include "dceeval/csv.hpp"
#include "dceeval/error.hpp"

namespace dceeval::fid {

namespace {

constexpr double kRidge = 1e-6;
constexpr double kNegativeTolerance = 1e-8;
constexpr char kMagic[4] = {'F', 'S', 'E', 'T'};

// Eigenvalues at or below the numerical-rank tolerance are roundoff; their
// square roots would otherwise inject O(sqrt(eps)) noise on singular inputs.
Eigen::VectorXd clamped_roots(const Eigen::VectorXd& eigenvalues) {
  const double top = eigenvalues.size() ? eigenvalues.cwiseAbs().maxCoeff() : 0.0;
  const double tol = static_cast<double>(eigenvalues.size()) *
                     std::numeric_limits<double>::epsilon() * top;
  return eigenvalues.unaryExpr([tol](double v) { return v > tol ? std::sqrt(v) : 0.0; });
}

// Symmetric PSD square root via eigendecomposition.
std::optional<Eigen::MatrixXd> psd_sqrt(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  if (es.info() != Eigen::Success) return std::nullopt;
  const Eigen::VectorXd roots = clamped_roots(es.eigenvalues());
  return es.eigenvectors() * roots.asDiagonal() *
         es.eigenvectors().transpose();
}

std::optional<double> try_frechet(const Eigen::VectorXd& mu_x,
                                  const Eigen::MatrixXd& sx,
                                  const Eigen::VectorXd& mu_y,
                                  const Eigen::MatrixXd& sy) {
  const auto root_x = psd_sqrt(sx);
  if (!root_x) return std::nullopt;
  Eigen::MatrixXd sandwich = (*root_x) * sy * (*root_x);
  sandwich = (0.5 * (sandwich + sandwich.transpose())).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sandwich,
                                                    Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) return std::nullopt;
  const double trace_root = clamped_roots(es.eigenvalues()).sum();
  const double value = (mu_x - mu_y).squaredNorm() + sx.trace() + sy.trace() -
                       2.0 * trace_root;
  if (!std::isfinite(value)) return std::nullopt;
  return value;
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}

  std::size_t offset() const { return pos_; }
  std::size_t remaining() const { return bytes_.size() - pos_; }

  void need(std::size_t count, const char* what) const {
    if (remaining() < count) {
      std::ostringstream msg;
      msg << "truncated feature file: " << what << " at offset " << pos_
          << " needs " << count << " bytes, " << remaining() << " available";
      throw Error(msg.str());
    }
  }

  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }

  std::uint64_t u64(const char* what) {
    need(8, what);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += 8;
    return v;
  }

  float f32() {
    const std::uint32_t bits = u32("feature value");
    float f;
    std::memcpy(&f, &bits, sizeof(f));
    return f;
  }

  std::string text(std::size_t len, const char* what) {
    need(len, what);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), len);
    pos_ += len;
    return s;
  }

 private:
  const std::vector<std::uint8_t>& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

FeatureSet::FeatureSet(RowMatrix data, std::string extractor_id)
    : data_(std::move(data)), extractor_id_(std::move(extractor_id)) {
  if (data_.rows() < 1 || data_.cols() < 1) {
    throw Error("feature set must have at least one row and one column");
  }
  for (Eigen::Index r = 0; r < data_.rows(); ++r) {
    for (Eigen::Index c = 0; c < data_.cols(); ++c) {
      if (!std::isfinite(data_(r, c))) {
        throw Error("non-finite feature at row " + std::to_string(r) +
                    ", column " + std::to_string(c));
      }
    }
  }
}

GaussianFit fit_gaussian(const FeatureSet& features) {
  if (features.n() < 2) {
    throw Error("fitting a Gaussian requires at least 2 samples, got " +
                std::to_string(features.n()));
  }
  const RowMatrix& x = features.data();
  GaussianFit fit;
  fit.mu = x.colwise().mean().transpose();
  const Eigen::MatrixXd centered = x.rowwise() - fit.mu.transpose();
  Eigen::MatrixXd s = (centered.transpose() * centered) /
                      static_cast<double>(features.n() - 1);
  fit.sigma = 0.5 * (s + s.transpose());
  return fit;
}

double frechet_distance(const GaussianFit& x, const GaussianFit& y) {
  const auto d = x.mu.size();
  if (y.mu.size() != d || x.sigma.rows() != d || x.sigma.cols() != d ||
      y.sigma.rows() != d || y.sigma.cols() != d) {
    std::ostringstream msg;
    msg << "Frechet distance requires matching dimensions, got " << d
        << " and " << y.mu.size();
    throw Error(msg.str());
  }
  std::optional<double> value = try_frechet(x.mu, x.sigma, y.mu, y.sigma);
  if (!value) {
    const Eigen::MatrixXd ridge =
        kRidge * Eigen::MatrixXd::Identity(d, d);
    value = try_frechet(x.mu, x.sigma + ridge, y.mu, y.sigma + ridge);
  }
  if (!value) {
    throw Error(
        "eigendecomposition failed for the covariance square root even after "
        "adding a 1e-6 ridge; check the feature sets for degenerate values");
  }
  if (*value < -kNegativeTolerance) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "Frechet distance evaluated to " << *value
        << ", below the roundoff tolerance of -1e-8";
    throw Error(msg.str());
  }
  return std::max(*value, 0.0);
}

double frechet_between_sets(const FeatureSet& a, const FeatureSet& b) {
  if (a.d() != b.d()) {
    throw Error("feature dimensions differ: " + std::to_string(a.d()) +
                " vs " + std::to_string(b.d()));
  }
  return frechet_distance(fit_gaussian(a), fit_gaussian(b));
}

std::vector<double> baseline_features(const Image2D& image) {
  constexpr int G = kBaselineGrid;
  const int pw = (image.width() + G - 1) / G * G;
  const int ph = (image.height() + G - 1) / G * G;
  const int bw = pw / G;
  const int bh = ph / G;
  std::vector<double> out(G * G);
  for (int by = 0; by < G; ++by) {
    for (int bx = 0; bx < G; ++bx) {
      std::uint64_t sum = 0;
      for (int y = by * bh; y < (by + 1) * bh; ++y) {
        const int sy = std::min(y, image.height() - 1);
        for (int x = bx * bw; x < (bx + 1) * bw; ++x) {
          sum += image.at(std::min(x, image.width() - 1), sy);
        }
      }
      out[by * G + bx] =
          static_cast<double>(sum) / (static_cast<double>(bw) * bh) / 255.0;
    }
  }
  return out;
}

FeatureSet baseline_extract(const std::vector<Image2D>& images) {
  if (images.empty()) throw Error("baseline extraction needs at least one image");
  const Image2D& first = images.front();
  RowMatrix data(static_cast<Eigen::Index>(images.size()),
                 kBaselineGrid * kBaselineGrid);
  for (std::size_t i = 0; i < images.size(); ++i) {
    if (!images[i].same_shape(first)) {
      throw Error("baseline extraction requires equal image dimensions; image " +
                  std::to_string(i) + " differs");
    }
    const auto f = baseline_features(images[i]);
    for (std::size_t c = 0; c < f.size(); ++c) {
      data(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = f[c];
    }
  }
  return FeatureSet(std::move(data), kBaselineExtractorId);
}

std::vector<std::uint8_t> encode_featureset(const FeatureSet& fs) {
  std::vector<std::uint8_t> out;
  out.reserve(32 + fs.extractor_id().size() + fs.n() * fs.d() * 4);
  out.insert(out.end(), std::begin(kMagic), std::end(kMagic));
  put_u32(out, kFeatureFormatVersion);
  put_u64(out, fs.n());
  put_u64(out, fs.d());
  if (fs.extractor_id().size() > std::numeric_limits<std::uint32_t>::max()) {
    throw Error("extractor id too long");
  }
  put_u32(out, static_cast<std::uint32_t>(fs.extractor_id().size()));
  out.insert(out.end(), fs.extractor_id().begin(), fs.extractor_id().end());
  const RowMatrix& m = fs.data();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      const float f = static_cast<float>(m(r, c));
      std::uint32_t bits;
      std::memcpy(&bits, &f, sizeof(bits));
      put_u32(out, bits);
    }
  }
  return out;
}

FeatureSet decode_featureset(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw Error("bad magic at offset 0: expected 'FSET'");
  }
  Reader in(bytes);
  in.text(4, "magic");
  const std::uint32_t version = in.u32("format version");
  if (version != kFeatureFormatVersion) {
    throw Error("unsupported feature file version " + std::to_string(version) +
                " at offset 4");
  }
  const std::size_t n_offset = in.offset();
  const std::uint64_t n = in.u64("sample count");
  const std::uint64_t d = in.u64("feature dimension");
  const std::uint32_t id_len = in.u32("extractor id length");
  std::string id = in.text(id_len, "extractor id");

  constexpr std::uint64_t kMaxValues =
      std::numeric_limits<std::uint64_t>::max() / 4;
  if (n == 0 || d == 0) {
    throw Error("feature file declares an empty matrix (n=" +
                std::to_string(n) + ", d=" + std::to_string(d) +
                ") at offset " + std::to_string(n_offset));
  }
  if (n > kMaxValues / d ||
      n * d > static_cast<std::uint64_t>(std::numeric_limits<Eigen::Index>::max())) {
    throw Error("dimension overflow: n=" + std::to_string(n) +
                " d=" + std::to_string(d) + " at offset " +
                std::to_string(n_offset));
  }
  const std::uint64_t payload = n * d * 4;
  if (payload > in.remaining()) {
    std::ostringstream msg;
    msg << "truncated feature payload at offset " << in.offset() << ": n=" << n
        << " d=" << d << " needs " << payload << " bytes, "
        << in.remaining() << " available (" << in.remaining() / (4 * d)
        << " complete rows)";
    throw Error(msg.str());
  }
  if (payload < in.remaining()) {
    throw Error("unexpected " + std::to_string(in.remaining() - payload) +
                " trailing bytes after feature payload at offset " +
                std::to_string(in.offset() + payload));
  }
  RowMatrix data(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  for (Eigen::Index r = 0; r < data.rows(); ++r) {
    for (Eigen::Index c = 0; c < data.cols(); ++c) data(r, c) = in.f32();
  }
  return FeatureSet(std::move(data), std::move(id));
}

void write_featureset(const FeatureSet& fs, const std::filesystem::path& path) {
  const auto bytes = encode_featureset(fs);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("cannot write " + path.string());
}

FeatureSet read_featureset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open feature file " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  try {
    return decode_featureset(bytes);
  } catch (const Error& e) {
    throw Error(path.string() + ": " + e.what());
  }
}

FeatureSet read_featureset_csv(const std::filesystem::path& path,
                               std::string extractor_id) {
  const auto rows = csv::read_file(path);
  if (rows.empty()) throw Error("feature CSV " + path.string() + " is empty");
  const std::size_t d = rows.front().size();
  RowMatrix data(static_cast<Eigen::Index>(rows.size()),
                 static_cast<Eigen::Index>(d));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != d) {
      throw Error(path.string() + " line " + std::to_string(r + 1) + ": " +
                  std::to_string(rows[r].size()) + " columns, expected " +
                  std::to_string(d));
    }
    for (std::size_t c = 0; c < d; ++c) {
      try {
        data(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
            csv::parse_number(rows[r][c]);
      } catch (const Error& e) {
        throw Error(path.string() + " line " + std::to_string(r + 1) + ": " +
                    e.what());
      }
    }
  }
  return FeatureSet(std::move(data), std::move(extractor_id));
}

}  // namespace dceeval::fid

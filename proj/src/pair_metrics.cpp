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

#include "dceeval/pair_metrics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "dceeval/csv.hpp"
#include "dceeval/error.hpp"

namespace dceeval::metrics {

namespace {

using C = SsimConstants;

void require_same_shape(const Image2D& a, const Image2D& b,
                        std::string_view metric) {
  if (!a.same_shape(b)) {
    std::ostringstream msg;
    msg << metric << " requires identical dimensions, got " << a.width() << "x"
        << a.height() << " and " << b.width() << "x" << b.height();
    throw Error(msg.str());
  }
}

struct Plane {
  int width = 0;
  int height = 0;
  std::vector<double> v;
};

Plane to_plane(const Image2D& img) {
  Plane p{img.width(), img.height(), {}};
  const auto px = img.pixels();
  p.v.assign(px.begin(), px.end());
  return p;
}

// 2x2 average pooling; a trailing odd row or column is dropped.
Plane downsample(const Plane& in) {
  Plane out{in.width / 2, in.height / 2, {}};
  out.v.resize(static_cast<std::size_t>(out.width) * out.height);
  for (int y = 0; y < out.height; ++y) {
    const double* r0 = in.v.data() + static_cast<std::size_t>(2 * y) * in.width;
    const double* r1 = r0 + in.width;
    double* o = out.v.data() + static_cast<std::size_t>(y) * out.width;
    for (int x = 0; x < out.width; ++x) {
      o[x] = (r0[2 * x] + r0[2 * x + 1] + r1[2 * x] + r1[2 * x + 1]) * 0.25;
    }
  }
  return out;
}

struct WindowMeans {
  double ssim = 0.0;
  double cs = 0.0;
};

// Mean SSIM and mean contrast-structure term over all valid windows, using
// the separable Gaussian (horizontal pass, then vertical pass).
WindowMeans window_means(const Plane& a, const Plane& b) {
  constexpr int K = C::kWindow;
  const auto& g = ssim_gaussian_taps();
  const int w = a.width;
  const int h = a.height;
  const int ow = w - K + 1;
  const int oh = h - K + 1;
  const std::size_t hsize = static_cast<std::size_t>(ow) * h;

  // Horizontal pass for a, b, a^2, b^2, ab.
  std::vector<double> hz(5 * hsize, 0.0);
  double* ha = hz.data();
  double* hb = ha + hsize;
  double* haa = hb + hsize;
  double* hbb = haa + hsize;
  double* hab = hbb + hsize;
  std::vector<double> raa(w), rbb(w), rab(w);
  for (int y = 0; y < h; ++y) {
    const double* ra = a.v.data() + static_cast<std::size_t>(y) * w;
    const double* rb = b.v.data() + static_cast<std::size_t>(y) * w;
    for (int x = 0; x < w; ++x) {
      raa[x] = ra[x] * ra[x];
      rbb[x] = rb[x] * rb[x];
      rab[x] = ra[x] * rb[x];
    }
    const std::size_t off = static_cast<std::size_t>(y) * ow;
    for (int k = 0; k < K; ++k) {
      const double gk = g[k];
      for (int x = 0; x < ow; ++x) {
        ha[off + x] += gk * ra[x + k];
        hb[off + x] += gk * rb[x + k];
        haa[off + x] += gk * raa[x + k];
        hbb[off + x] += gk * rbb[x + k];
        hab[off + x] += gk * rab[x + k];
      }
    }
  }

  std::vector<double> acc(5 * static_cast<std::size_t>(ow));
  double* ma = acc.data();
  double* mb = ma + ow;
  double* maa = mb + ow;
  double* mbb = maa + ow;
  double* mab = mbb + ow;
  double sum_ssim = 0.0;
  double sum_cs = 0.0;
  for (int y = 0; y < oh; ++y) {
    std::fill(acc.begin(), acc.end(), 0.0);
    for (int k = 0; k < K; ++k) {
      const double gk = g[k];
      const std::size_t off = static_cast<std::size_t>(y + k) * ow;
      for (int x = 0; x < ow; ++x) {
        ma[x] += gk * ha[off + x];
        mb[x] += gk * hb[off + x];
        maa[x] += gk * haa[off + x];
        mbb[x] += gk * hbb[off + x];
        mab[x] += gk * hab[off + x];
      }
    }
    double row_ssim = 0.0;
    double row_cs = 0.0;
    for (int x = 0; x < ow; ++x) {
      const double mu_a = ma[x];
      const double mu_b = mb[x];
      const double var_a = maa[x] - mu_a * mu_a;
      const double var_b = mbb[x] - mu_b * mu_b;
      const double cov = mab[x] - mu_a * mu_b;
      const double cs = (2.0 * cov + C::kC2) / (var_a + var_b + C::kC2);
      const double lum = (2.0 * mu_a * mu_b + C::kC1) /
                         (mu_a * mu_a + mu_b * mu_b + C::kC1);
      row_ssim += lum * cs;
      row_cs += cs;
    }
    sum_ssim += row_ssim;
    sum_cs += row_cs;
  }
  const double n = static_cast<double>(ow) * oh;
  return {sum_ssim / n, sum_cs / n};
}

void require_ssim_size(const Image2D& a) {
  if (std::min(a.width(), a.height()) < C::kWindow) {
    std::ostringstream msg;
    msg << "SSIM requires images of at least " << C::kWindow << "x"
        << C::kWindow << ", got " << a.width() << "x" << a.height();
    throw Error(msg.str());
  }
}

void require_ms_ssim_size(const Image2D& a) {
  if (std::min(a.width(), a.height()) < kMsSsimMinSize) {
    std::ostringstream msg;
    msg << "MS-SSIM requires images of at least " << kMsSsimMinSize << "x"
        << kMsSsimMinSize << " (five dyadic scales with an " << C::kWindow
        << "-pixel window), got " << a.width() << "x" << a.height();
    throw Error(msg.str());
  }
}

// Continues MS-SSIM from precomputed finest-scale statistics.
double ms_ssim_from(const Plane& pa, const Plane& pb, const WindowMeans& fine) {
  std::array<double, kMsSsimScales> terms{};
  terms[0] = fine.cs;
  Plane ca = downsample(pa);
  Plane cb = downsample(pb);
  for (int s = 1; s < kMsSsimScales; ++s) {
    const WindowMeans m = window_means(ca, cb);
    if (s == kMsSsimScales - 1) {
      terms[s] = m.ssim;
    } else {
      terms[s] = m.cs;
      ca = downsample(ca);
      cb = downsample(cb);
    }
  }
  double out = 1.0;
  for (int s = 0; s < kMsSsimScales; ++s) {
    out *= std::pow(std::max(terms[s], 0.0), kMsSsimWeights[s]);
  }
  return std::clamp(out, 0.0, 1.0);
}

}  // namespace

const std::array<double, SsimConstants::kWindow>& ssim_gaussian_taps() {
  static const std::array<double, C::kWindow> taps = [] {
    std::array<double, C::kWindow> t{};
    constexpr int half = C::kWindow / 2;
    double sum = 0.0;
    for (int i = 0; i < C::kWindow; ++i) {
      const double d = i - half;
      t[i] = std::exp(-(d * d) / (2.0 * C::kSigma * C::kSigma));
      sum += t[i];
    }
    for (double& v : t) v /= sum;
    return t;
  }();
  return taps;
}

double mse(const Image2D& a, const Image2D& b) {
  require_same_shape(a, b, "MSE");
  const auto pa = a.pixels();
  const auto pb = b.pixels();
  std::uint64_t sum = 0;
  for (std::size_t i = 0; i < pa.size(); ++i) {
    const int d = static_cast<int>(pa[i]) - static_cast<int>(pb[i]);
    sum += static_cast<std::uint64_t>(d * d);
  }
  return static_cast<double>(sum) / static_cast<double>(pa.size());
}

double mae(const Image2D& a, const Image2D& b) {
  require_same_shape(a, b, "MAE");
  const auto pa = a.pixels();
  const auto pb = b.pixels();
  std::uint64_t sum = 0;
  for (std::size_t i = 0; i < pa.size(); ++i) {
    const int d = static_cast<int>(pa[i]) - static_cast<int>(pb[i]);
    sum += static_cast<std::uint64_t>(d < 0 ? -d : d);
  }
  return static_cast<double>(sum) / static_cast<double>(pa.size());
}

double psnr_from_mse(double mse_value) {
  if (mse_value < 0.0 || std::isnan(mse_value)) {
    throw Error("PSNR is undefined for negative or NaN MSE");
  }
  if (mse_value == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(C::kRange * C::kRange / mse_value);
}

double psnr(const Image2D& a, const Image2D& b) {
  require_same_shape(a, b, "PSNR");
  return psnr_from_mse(mse(a, b));
}

double ssim(const Image2D& a, const Image2D& b) {
  require_same_shape(a, b, "SSIM");
  require_ssim_size(a);
  return window_means(to_plane(a), to_plane(b)).ssim;
}

double ms_ssim(const Image2D& a, const Image2D& b) {
  require_same_shape(a, b, "MS-SSIM");
  require_ms_ssim_size(a);
  const Plane pa = to_plane(a);
  const Plane pb = to_plane(b);
  return ms_ssim_from(pa, pb, window_means(pa, pb));
}

double dice(const Mask& a, const Mask& b) {
  if (a.shape() != b.shape()) {
    throw Error("Dice requires masks of identical shape");
  }
  std::size_t inter = 0;
  std::size_t na = 0;
  std::size_t nb = 0;
  const auto va = a.values();
  const auto vb = b.values();
  for (std::size_t i = 0; i < va.size(); ++i) {
    const bool x = va[i] != 0;
    const bool y = vb[i] != 0;
    na += x;
    nb += y;
    inter += x && y;
  }
  if (na + nb == 0) return 1.0;
  return 2.0 * static_cast<double>(inter) / static_cast<double>(na + nb);
}

MetricSelection MetricSelection::parse(std::string_view list) {
  MetricSelection sel{false, false, false, false, false};
  std::size_t start = 0;
  while (start <= list.size()) {
    const std::size_t comma = std::min(list.find(',', start), list.size());
    std::string token(list.substr(start, comma - start));
    token.erase(std::remove_if(token.begin(), token.end(),
                               [](unsigned char c) { return std::isspace(c); }),
                token.end());
    std::transform(token.begin(), token.end(), token.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    if (token == "mse") {
      sel.mse = true;
    } else if (token == "mae") {
      sel.mae = true;
    } else if (token == "psnr") {
      sel.psnr = true;
    } else if (token == "ssim") {
      sel.ssim = true;
    } else if (token == "msssim" || token == "ms_ssim" || token == "ms-ssim") {
      sel.ms_ssim = true;
    } else if (!token.empty()) {
      throw Error("unknown metric '" + token +
                  "' (expected mse, mae, psnr, ssim, msssim)");
    }
    start = comma + 1;
  }
  if (!sel.any()) throw Error("metric selection is empty");
  return sel;
}

PairMetricsRecord evaluate_pair(std::string pair_id, const Image2D& a,
                                const Image2D& b,
                                const MetricSelection& selection) {
  require_same_shape(a, b, "pair " + pair_id);
  PairMetricsRecord rec;
  rec.pair_id = std::move(pair_id);
  if (selection.mse || selection.psnr) {
    const double m = mse(a, b);
    if (selection.mse) rec.mse = m;
    if (selection.psnr) rec.psnr = psnr_from_mse(m);
  }
  if (selection.mae) rec.mae = mae(a, b);
  if (selection.ssim || selection.ms_ssim) {
    require_ssim_size(a);
    if (selection.ms_ssim) require_ms_ssim_size(a);
    const Plane pa = to_plane(a);
    const Plane pb = to_plane(b);
    const WindowMeans fine = window_means(pa, pb);
    if (selection.ssim) rec.ssim = fine.ssim;
    if (selection.ms_ssim) rec.ms_ssim = ms_ssim_from(pa, pb, fine);
  }
  return rec;
}

DatasetMetricsSummary summarize_pairs(std::vector<PairMetricsRecord> records) {
  if (records.empty()) throw Error("cannot summarize an empty record set");
  std::sort(records.begin(), records.end(),
            [](const PairMetricsRecord& x, const PairMetricsRecord& y) {
              return x.pair_id < y.pair_id;
            });

  DatasetMetricsSummary out;
  out.n_pairs = records.size();

  auto reduce = [&](const char* name,
                    std::optional<double> PairMetricsRecord::*field,
                    bool skip_infinite) {
    std::vector<double> values;
    std::size_t excluded = 0;
    bool present = false;
    for (const auto& r : records) {
      const auto& v = r.*field;
      if (!v) continue;
      present = true;
      if (skip_infinite && std::isinf(*v)) {
        ++excluded;
        continue;
      }
      values.push_back(*v);
    }
    if (!present) return;
    MetricStats s;
    s.n = values.size();
    if (values.empty()) {
      s.mean = std::numeric_limits<double>::quiet_NaN();
      s.std = std::numeric_limits<double>::quiet_NaN();
    } else {
      double sum = 0.0;
      for (double v : values) sum += v;
      s.mean = sum / static_cast<double>(values.size());
      double ss = 0.0;
      for (double v : values) ss += (v - s.mean) * (v - s.mean);
      s.std = std::sqrt(ss / static_cast<double>(values.size()));
    }
    out.metrics[name] = s;
    if (skip_infinite) out.psnr_excluded_count = excluded;
  };
  reduce("mse", &PairMetricsRecord::mse, false);
  reduce("mae", &PairMetricsRecord::mae, false);
  reduce("psnr", &PairMetricsRecord::psnr, true);
  reduce("ssim", &PairMetricsRecord::ssim, false);
  reduce("ms_ssim", &PairMetricsRecord::ms_ssim, false);
  return out;
}

std::string records_to_csv(const std::vector<PairMetricsRecord>& records) {
  std::string out = "pair_id,mse,mae,psnr,ssim,ms_ssim\n";
  auto cell = [](const std::optional<double>& v) {
    return v ? csv::format_number(*v) : std::string();
  };
  for (const auto& r : records) {
    out += csv::format_row({r.pair_id, cell(r.mse), cell(r.mae), cell(r.psnr),
                            cell(r.ssim), cell(r.ms_ssim)});
    out += '\n';
  }
  return out;
}

std::vector<PairMetricsRecord> records_from_csv(std::string_view text) {
  const auto rows = csv::parse(text);
  const csv::Row header = {"pair_id", "mse", "mae", "psnr", "ssim", "ms_ssim"};
  if (rows.empty() || rows.front() != header) {
    throw Error("per-pair CSV must start with header " + csv::format_row(header));
  }
  std::vector<PairMetricsRecord> out;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& row = rows[i];
    if (row.size() != header.size()) {
      throw Error("per-pair CSV line " + std::to_string(i + 1) +
                  " has " + std::to_string(row.size()) + " fields");
    }
    auto cell = [](const std::string& s) -> std::optional<double> {
      if (s.empty()) return std::nullopt;
      return csv::parse_number(s);
    };
    out.push_back({row[0], cell(row[1]), cell(row[2]), cell(row[3]),
                   cell(row[4]), cell(row[5])});
  }
  return out;
}

std::string summary_to_json(const DatasetMetricsSummary& summary) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [name, s] : summary.metrics) {
    nlohmann::json m;
    m["mean"] = s.n ? nlohmann::json(s.mean) : nlohmann::json(nullptr);
    m["std"] = s.n ? nlohmann::json(s.std) : nlohmann::json(nullptr);
    m["n"] = s.n;
    j[name] = m;
  }
  j["n_pairs"] = summary.n_pairs;
  j["psnr_excluded_count"] = summary.psnr_excluded_count;
  return j.dump(2) + "\n";
}

}  // namespace dceeval::metrics

#pragma once

#include <cmath>
#include <fstream>
#include <string>
#include <vector>

#include "panosphere/image.hpp"
#include "panosphere/sphgeo.hpp"

namespace panosphere {
namespace metrics {

/// Zero-error sentinel in dB.
inline constexpr double kPsnrCap = 99.0;

/// Row-constant spherical weights w(i,j) = cos((j + 0.5 - N/2) * pi / N).
struct WeightMap {
  int height = 0;
  int width = 0;
  std::vector<double> row_weight;  // one entry per row

  double at(int /*col*/, int row) const { return row_weight[row]; }
};

inline WeightMap ws_weight_map(int N, int M) {
  if (M != 2 * N)
    throw std::invalid_argument("ws_weight_map: expected M == 2N");
  WeightMap map;
  map.height = N;
  map.width = M;
  map.row_weight.resize(N);
  for (int j = 0; j < N; ++j)
    map.row_weight[j] = std::cos((j + 0.5 - N / 2.0) * sphgeo::kPi / N);
  return map;
}

/// WS-PSNR in dB over [0, peak] data; identical inputs return the +99 cap.
inline double ws_psnr(const ErpImage& a, const ErpImage& b, double peak = 1.0) {
  require_same_dims(a, b, "ws_psnr");
  require_erp(a, "ws_psnr");
  WeightMap weights = ws_weight_map(a.height, a.width);

  double num = 0.0, den = 0.0;
  for (int j = 0; j < a.height; ++j) {
    double w = weights.row_weight[j];
    double row_sq = 0.0;
    for (int i = 0; i < a.width; ++i)
      for (int c = 0; c < 3; ++c) {
        double d = static_cast<double>(a.at(j, i, c)) - b.at(j, i, c);
        row_sq += d * d;
      }
    num += w * row_sq;
    den += w * 3.0 * a.width;
  }
  double wmse = num / den;
  if (wmse == 0.0) return kPsnrCap;
  return 10.0 * std::log10(peak * peak / wmse);
}

/// Plain PSNR (unit weights), same cap convention.
inline double psnr(const ErpImage& a, const ErpImage& b, double peak = 1.0) {
  require_same_dims(a, b, "psnr");
  double sq = 0.0;
  for (std::size_t k = 0; k < a.data.size(); ++k) {
    double d = static_cast<double>(a.data[k]) - b.data[k];
    sq += d * d;
  }
  double mse = sq / static_cast<double>(a.data.size());
  if (mse == 0.0) return kPsnrCap;
  return 10.0 * std::log10(peak * peak / mse);
}

/// Appends one (run_id, image_id, metric, value) row; writes the header
/// when the file starts empty.
inline void append_metric_csv(const std::string& path, const std::string& run_id,
                              const std::string& image_id,
                              const std::string& metric, double value) {
  bool need_header = true;
  {
    std::ifstream probe(path);
    need_header = !probe.good() || probe.peek() == std::ifstream::traits_type::eof();
  }
  std::ofstream os(path, std::ios::app);
  if (!os) throw io_error("append_metric_csv: cannot open " + path);
  if (need_header) os << "run_id,image_id,metric,value\n";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  os << run_id << ',' << image_id << ',' << metric << ',' << buf << '\n';
  if (!os) throw io_error("append_metric_csv: write failed for " + path);
}

}  // namespace metrics
}  // namespace panosphere

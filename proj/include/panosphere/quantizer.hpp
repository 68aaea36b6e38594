#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "panosphere/core.hpp"
#include "panosphere/harmonics.hpp"
#include "panosphere/image.hpp"
#include "panosphere/metrics.hpp"

namespace panosphere {
namespace quant {

/// Continuous latent grid: h*w cells of d floats each. `scale` and
/// `sh_channels` record how patch_encode built the cells.
struct FeatureGrid {
  int h = 0, w = 0, d = 0;
  int scale = 0;
  int sh_channels = 0;
  std::vector<float> data;

  const float* cell(int r, int c) const {
    return &data[(static_cast<std::size_t>(r) * w + c) * d];
  }
  float* cell(int r, int c) {
    return &data[(static_cast<std::size_t>(r) * w + c) * d];
  }
  std::size_t cells() const { return static_cast<std::size_t>(h) * w; }
};

enum class InitMode { random, sh_seeded };

inline const char* init_mode_name(InitMode m) {
  return m == InitMode::random ? "random" : "sh_seeded";
}

inline InitMode init_mode_from_name(const std::string& name) {
  if (name == "random") return InitMode::random;
  if (name == "sh_seeded") return InitMode::sh_seeded;
  throw std::invalid_argument("unknown init mode: " + name);
}

/// K code vectors of dimension d plus fitting provenance. degree = -1 means
/// the entries carry no SH channels.
struct Codebook {
  int K = 0, d = 0;
  int scale = 0;
  int degree = -1;
  InitMode init_mode = InitMode::random;
  std::string corpus = "unspecified";
  std::vector<float> entries;

  const float* entry(int k) const {
    return &entries[static_cast<std::size_t>(k) * d];
  }
  int sh_channels() const { return degree < 0 ? 0 : (degree + 1) * (degree + 1); }
};

/// Discrete latent panorama: h*w codebook indices.
struct CodeGrid {
  int h = 0, w = 0;
  std::vector<int> indices;

  int at(int r, int c) const {
    return indices[static_cast<std::size_t>(r) * w + c];
  }
  int& at(int r, int c) { return indices[static_cast<std::size_t>(r) * w + c]; }
};

/// Deterministic patch codec: each latent cell is the flattened f x f x 3
/// pixel block (d = 3f^2); with `sh` given, the per-patch channel means of
/// the SH map are appended (d = 3f^2 + channels).
inline FeatureGrid patch_encode(const ErpImage& image, int f,
                                const harmonics::ShMap* sh = nullptr) {
  if (f < 1 || image.height % f != 0 || image.width % f != 0)
    throw std::invalid_argument("patch_encode: f must divide both dimensions");
  if (sh && (sh->height != image.height || sh->width != image.width))
    throw std::invalid_argument("patch_encode: SH map dimensions differ");

  FeatureGrid grid;
  grid.h = image.height / f;
  grid.w = image.width / f;
  grid.scale = f;
  grid.sh_channels = sh ? sh->channels : 0;
  grid.d = 3 * f * f + grid.sh_channels;
  grid.data.resize(grid.cells() * grid.d);

  double inv_area = 1.0 / (static_cast<double>(f) * f);
  for (int r = 0; r < grid.h; ++r) {
    for (int c = 0; c < grid.w; ++c) {
      float* cell = grid.cell(r, c);
      int t = 0;
      for (int py = 0; py < f; ++py)
        for (int px = 0; px < f; ++px)
          for (int ch = 0; ch < 3; ++ch)
            cell[t++] = image.at(r * f + py, c * f + px, ch);
      if (sh) {
        for (int ch = 0; ch < sh->channels; ++ch) {
          double acc = 0.0;
          for (int py = 0; py < f; ++py)
            for (int px = 0; px < f; ++px)
              acc += sh->at(r * f + py, c * f + px, ch);
          cell[t++] = static_cast<float>(acc * inv_area);
        }
      }
    }
  }
  return grid;
}

/// Inverse of patch_encode on the pixel component; SH channels are ignored
/// and output values are clamped to [0,1].
inline ErpImage patch_decode(const FeatureGrid& grid, int f) {
  if (grid.d < 3 * f * f)
    throw std::invalid_argument("patch_decode: cell dimension below 3*f*f");
  ErpImage image(grid.h * f, grid.w * f);
  for (int r = 0; r < grid.h; ++r)
    for (int c = 0; c < grid.w; ++c) {
      const float* cell = grid.cell(r, c);
      int t = 0;
      for (int py = 0; py < f; ++py)
        for (int px = 0; px < f; ++px)
          for (int ch = 0; ch < 3; ++ch)
            image.at(r * f + py, c * f + px, ch) = clamp01(cell[t++]);
    }
  return image;
}

namespace detail {

inline double sq_dist(const float* a, const float* b, int d) {
  double acc = 0.0;
  for (int t = 0; t < d; ++t) {
    double diff = static_cast<double>(a[t]) - static_cast<double>(b[t]);
    acc += diff * diff;
  }
  return acc;
}

/// Exact nearest entry: ascending scan with strict <, so equidistant
/// entries resolve to the lowest index. Partial sums are non-decreasing,
/// so pruning a candidate once its prefix distance exceeds the incumbent
/// cannot change the winner.
inline int nearest_entry(const float* cell, const Codebook& cb) {
  int best = 0;
  double best_dist = sq_dist(cell, cb.entry(0), cb.d);
  constexpr int kBlock = 64;
  for (int k = 1; k < cb.K; ++k) {
    const float* entry = cb.entry(k);
    double dist = 0.0;
    int t = 0;
    for (; t + kBlock <= cb.d; t += kBlock) {
      for (int q = t; q < t + kBlock; ++q) {
        double diff = static_cast<double>(cell[q]) - static_cast<double>(entry[q]);
        dist += diff * diff;
      }
      if (dist > best_dist) break;
    }
    if (dist > best_dist) continue;
    for (; t < cb.d; ++t) {
      double diff = static_cast<double>(cell[t]) - static_cast<double>(entry[t]);
      dist += diff * diff;
    }
    if (dist < best_dist) {
      best = k;
      best_dist = dist;
    }
  }
  return best;
}

}  // namespace detail

struct QuantizeResult {
  CodeGrid codes;
  FeatureGrid quantized;
};

/// Per-cell argmin_k ||z - z_k||^2; the quantized grid holds bit-exact
/// copies of the selected entries.
inline QuantizeResult quantize(const FeatureGrid& grid, const Codebook& cb) {
  if (grid.d != cb.d)
    throw std::invalid_argument("quantize: grid and codebook dimension differ");
  if (cb.K < 1) throw std::invalid_argument("quantize: empty codebook");

  QuantizeResult out;
  out.codes.h = grid.h;
  out.codes.w = grid.w;
  out.codes.indices.resize(grid.cells());
  out.quantized = grid;

  parallel_chunks(grid.cells(), [&](std::size_t lo, std::size_t hi) {
    for (std::size_t ci = lo; ci < hi; ++ci) {
      const float* cell = &grid.data[ci * grid.d];
      int k = detail::nearest_entry(cell, cb);
      out.codes.indices[ci] = k;
      std::copy(cb.entry(k), cb.entry(k) + cb.d, &out.quantized.data[ci * grid.d]);
    }
  });
  return out;
}

struct CodebookLoss {
  double commitment = 0.0;
  double codebook_term = 0.0;
  double total = 0.0;
};

/// Both stop-gradient terms evaluate to the mean (over cells) squared L2
/// distance between z_e and z_q; they are reported separately because they
/// drive different parameters during training.
inline CodebookLoss codebook_loss(const FeatureGrid& z_e, const FeatureGrid& z_q) {
  if (z_e.h != z_q.h || z_e.w != z_q.w || z_e.d != z_q.d)
    throw std::invalid_argument("codebook_loss: shape mismatch");
  double acc = 0.0;
  for (std::size_t ci = 0; ci < z_e.cells(); ++ci)
    acc += detail::sq_dist(&z_e.data[ci * z_e.d], &z_q.data[ci * z_q.d], z_e.d);
  double mean_sq = acc / static_cast<double>(z_e.cells());
  return CodebookLoss{mean_sq, mean_sq, 2.0 * mean_sq};
}

namespace detail {

// Fitting works on a flat view of every cell across the input grids.
struct CellPool {
  const float* base(std::size_t ci) const { return ptrs[ci]; }
  std::vector<const float*> ptrs;
  int d = 0;
};

/// One nearest-centroid pass over dims [off, off+len) of each cell, in
/// float with blockwise pruning (partial squared distances only grow, so
/// a candidate past the incumbent can be dropped without changing the
/// winner); `dist` gets the squared distance to the chosen centroid.
struct AssignPass {
  std::vector<int> assign;
  std::vector<float> dist;
  double objective = 0.0;
};

inline AssignPass assign_cells(const CellPool& pool,
                               const std::vector<float>& centroids, int K,
                               int off, int len) {
  std::size_t n = pool.ptrs.size();
  AssignPass pass;
  pass.assign.resize(n);
  pass.dist.resize(n);
  constexpr int kBlock = 64;

  parallel_chunks(n, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t ci = lo; ci < hi; ++ci) {
      const float* z = pool.base(ci) + off;
      int best = 0;
      float best_dist = 0.0f;
      for (int t = 0; t < len; ++t) {
        float diff = z[t] - centroids[t];
        best_dist += diff * diff;
      }
      for (int k = 1; k < K; ++k) {
        const float* c = &centroids[static_cast<std::size_t>(k) * len];
        float dist = 0.0f;
        int t = 0;
        for (; t + kBlock <= len; t += kBlock) {
          for (int q = t; q < t + kBlock; ++q) {
            float diff = z[q] - c[q];
            dist += diff * diff;
          }
          if (dist > best_dist) break;
        }
        if (dist > best_dist) continue;
        for (; t < len; ++t) {
          float diff = z[t] - c[t];
          dist += diff * diff;
        }
        if (dist < best_dist) {
          best = k;
          best_dist = dist;
        }
      }
      pass.assign[ci] = best;
      pass.dist[ci] = best_dist;
    }
  });

  double obj = 0.0;
  for (float v : pass.dist) obj += v;
  pass.objective = obj;
  return pass;
}

inline void update_centroids(const CellPool& pool, const AssignPass& pass,
                             std::vector<float>& centroids, int K, int off,
                             int len, std::vector<std::size_t>& counts) {
  std::vector<double> acc(static_cast<std::size_t>(K) * len, 0.0);
  counts.assign(K, 0);
  for (std::size_t ci = 0; ci < pool.ptrs.size(); ++ci) {
    int k = pass.assign[ci];
    const float* z = pool.base(ci) + off;
    double* a = &acc[static_cast<std::size_t>(k) * len];
    for (int t = 0; t < len; ++t) a[t] += z[t];
    ++counts[k];
  }
  for (int k = 0; k < K; ++k) {
    if (counts[k] == 0) continue;
    double inv = 1.0 / static_cast<double>(counts[k]);
    float* c = &centroids[static_cast<std::size_t>(k) * len];
    const double* a = &acc[static_cast<std::size_t>(k) * len];
    for (int t = 0; t < len; ++t) c[t] = static_cast<float>(a[t] * inv);
  }
}

/// Reseeds empty clusters from the cells farthest from their assigned
/// centroid, one distinct cell per empty cluster in descending distance.
inline void repair_empty(const CellPool& pool, const AssignPass& pass,
                         std::vector<float>& centroids, int off, int len,
                         const std::vector<std::size_t>& counts) {
  std::vector<int> empties;
  for (int k = 0; k < static_cast<int>(counts.size()); ++k)
    if (counts[k] == 0) empties.push_back(k);
  if (empties.empty()) return;

  std::vector<std::size_t> order(pool.ptrs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return pass.dist[a] > pass.dist[b];
  });
  std::size_t next = 0;
  for (int k : empties) {
    if (next >= order.size()) break;
    const float* z = pool.base(order[next++]) + off;
    std::copy(z, z + len, &centroids[static_cast<std::size_t>(k) * len]);
  }
}

inline std::vector<std::size_t> sample_distinct(std::size_t n, int K,
                                                std::mt19937_64& eng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (int k = 0; k < K; ++k) {
    std::size_t j = k + static_cast<std::size_t>(rng::uniform01(eng) * (n - k));
    if (j >= n) j = n - 1;
    std::swap(idx[k], idx[j]);
  }
  idx.resize(K);
  return idx;
}

/// Post-fit repair: entries equal within 1e-12 are reseeded from far,
/// distinct cells so the fitted codebook carries no duplicates.
inline void dedup_entries(const CellPool& pool, const AssignPass& pass,
                          std::vector<float>& centroids, int K, int d) {
  auto same = [&](const float* a, const float* b) {
    for (int t = 0; t < d; ++t)
      if (std::fabs(static_cast<double>(a[t]) - b[t]) > 1e-12) return false;
    return true;
  };
  std::vector<std::size_t> order(pool.ptrs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return pass.dist[a] > pass.dist[b];
  });
  std::size_t next = 0;
  for (int k = 1; k < K; ++k) {
    float* ck = &centroids[static_cast<std::size_t>(k) * d];
    bool dup = false;
    for (int j = 0; j < k && !dup; ++j)
      dup = same(ck, &centroids[static_cast<std::size_t>(j) * d]);
    while (dup && next < order.size()) {
      const float* z = pool.base(order[next++]);
      bool clashes = false;
      for (int j = 0; j < K && !clashes; ++j)
        if (j != k) clashes = same(z, &centroids[static_cast<std::size_t>(j) * d]);
      if (!clashes) {
        std::copy(z, z + d, ck);
        dup = false;
      }
    }
  }
}

}  // namespace detail

/// Lloyd k-means over every cell of `features`. random init seeds from K
/// distinct cells; sh_seeded first clusters the cells by their SH-channel
/// sub-vector and seeds each entry from the mean full vector of a stratum.
/// Empty clusters reseed from the farthest cell each iteration. The
/// optional objective log records the assignment objective per iteration.
inline Codebook fit_codebook(const std::vector<FeatureGrid>& features, int K,
                             InitMode mode, std::uint64_t seed, int iters,
                             std::vector<double>* objective_log = nullptr) {
  if (features.empty()) throw std::invalid_argument("fit_codebook: no features");
  if (K < 1) throw std::invalid_argument("fit_codebook: K must be positive");
  if (iters < 1) throw std::invalid_argument("fit_codebook: iters must be >= 1");

  int d = features[0].d;
  int shc = features[0].sh_channels;
  int scale = features[0].scale;
  detail::CellPool pool;
  pool.d = d;
  for (const auto& grid : features) {
    if (grid.d != d || grid.sh_channels != shc)
      throw std::invalid_argument("fit_codebook: inconsistent feature grids");
    for (std::size_t ci = 0; ci < grid.cells(); ++ci)
      pool.ptrs.push_back(&grid.data[ci * grid.d]);
  }
  if (pool.ptrs.size() < static_cast<std::size_t>(K))
    throw std::invalid_argument("fit_codebook: K exceeds the number of cells");
  if (mode == InitMode::sh_seeded && shc == 0)
    throw std::invalid_argument("fit_codebook: sh_seeded needs SH channels");

  std::mt19937_64 eng(seed);
  std::vector<float> centroids(static_cast<std::size_t>(K) * d);

  if (mode == InitMode::random) {
    auto picks = detail::sample_distinct(pool.ptrs.size(), K, eng);
    for (int k = 0; k < K; ++k)
      std::copy(pool.base(picks[k]), pool.base(picks[k]) + d,
                &centroids[static_cast<std::size_t>(k) * d]);
  } else {
    // stratify by SH sub-vector (the trailing shc dims); those vectors
    // depend only on the cell position, so most cells collide and the
    // stratum k-means is seeded from distinct values where possible
    int off = d - shc;
    std::vector<float> sh_centroids(static_cast<std::size_t>(K) * shc);
    std::map<std::vector<float>, std::size_t> distinct;
    for (std::size_t ci = 0; ci < pool.ptrs.size(); ++ci) {
      std::vector<float> key(pool.base(ci) + off, pool.base(ci) + d);
      distinct.emplace(std::move(key), ci);
    }
    std::vector<std::size_t> candidates;
    candidates.reserve(distinct.size());
    for (const auto& [key, ci] : distinct) candidates.push_back(ci);
    std::vector<std::size_t> seeds;
    if (candidates.size() >= static_cast<std::size_t>(K)) {
      auto order = detail::sample_distinct(candidates.size(), K, eng);
      for (auto idx : order) seeds.push_back(candidates[idx]);
    } else {
      seeds = candidates;
      auto extra = detail::sample_distinct(pool.ptrs.size(),
                                           K - static_cast<int>(seeds.size()), eng);
      seeds.insert(seeds.end(), extra.begin(), extra.end());
    }
    for (int k = 0; k < K; ++k)
      std::copy(pool.base(seeds[k]) + off, pool.base(seeds[k]) + d,
                &sh_centroids[static_cast<std::size_t>(k) * shc]);
    detail::AssignPass pass;
    std::vector<std::size_t> counts;
    const int kShIters = 4;
    for (int it = 0; it < kShIters; ++it) {
      pass = detail::assign_cells(pool, sh_centroids, K, off, shc);
      detail::update_centroids(pool, pass, sh_centroids, K, off, shc, counts);
      detail::repair_empty(pool, pass, sh_centroids, off, shc, counts);
    }
    pass = detail::assign_cells(pool, sh_centroids, K, off, shc);

    // stratum means of the full vectors
    std::vector<double> acc(static_cast<std::size_t>(K) * d, 0.0);
    counts.assign(K, 0);
    for (std::size_t ci = 0; ci < pool.ptrs.size(); ++ci) {
      int k = pass.assign[ci];
      const float* z = pool.base(ci);
      double* a = &acc[static_cast<std::size_t>(k) * d];
      for (int t = 0; t < d; ++t) a[t] += z[t];
      ++counts[k];
    }
    for (int k = 0; k < K; ++k) {
      float* c = &centroids[static_cast<std::size_t>(k) * d];
      if (counts[k] == 0) continue;
      double inv = 1.0 / static_cast<double>(counts[k]);
      for (int t = 0; t < d; ++t)
        c[t] = static_cast<float>(acc[static_cast<std::size_t>(k) * d + t] * inv);
    }
    detail::repair_empty(pool, pass, centroids, 0, d, counts);
  }

  detail::AssignPass pass;
  std::vector<std::size_t> counts;
  for (int it = 0; it < iters; ++it) {
    pass = detail::assign_cells(pool, centroids, K, 0, d);
    if (objective_log) objective_log->push_back(pass.objective);
    detail::update_centroids(pool, pass, centroids, K, 0, d, counts);
    detail::repair_empty(pool, pass, centroids, 0, d, counts);
  }
  detail::dedup_entries(pool, pass, centroids, K, d);

  Codebook cb;
  cb.K = K;
  cb.d = d;
  cb.scale = scale;
  cb.degree = shc == 0 ? -1 : static_cast<int>(std::lround(std::sqrt(shc))) - 1;
  cb.init_mode = mode;
  cb.entries = std::move(centroids);
  return cb;
}

/// Fraction of codebook entries selected at least once across the grids.
inline double codebook_usage(const std::vector<CodeGrid>& grids, int K) {
  if (K < 1) throw std::invalid_argument("codebook_usage: K must be >= 1");
  std::vector<std::uint8_t> seen(K, 0);
  for (const auto& grid : grids)
    for (int idx : grid.indices) {
      if (idx < 0 || idx >= K)
        throw data_error("codebook_usage: index outside [0, K)");
      seen[idx] = 1;
    }
  std::size_t used = 0;
  for (auto v : seen) used += v;
  return static_cast<double>(used) / static_cast<double>(K);
}

struct Reconstruction {
  ErpImage image;
  double ws_psnr = 0.0;
};

/// decode(quantize(encode(image))) plus WS-PSNR against the input.
inline Reconstruction reconstruct(const ErpImage& image, const Codebook& cb,
                                  int f) {
  if (cb.scale != f)
    throw std::invalid_argument("reconstruct: codebook was fit at another f");
  harmonics::ShMap sh;
  const harmonics::ShMap* sh_ptr = nullptr;
  if (cb.degree >= 0) {
    sh = harmonics::sh_map(image.height, image.width, cb.degree);
    sh_ptr = &sh;
  }
  FeatureGrid enc = patch_encode(image, f, sh_ptr);
  QuantizeResult q = quantize(enc, cb);
  Reconstruction out;
  out.image = patch_decode(q.quantized, f);
  out.ws_psnr = metrics::ws_psnr(out.image, image);
  return out;
}

/// Raster-order (row-major) serialization of a code grid.
inline std::vector<int> seq_encode(const CodeGrid& grid) { return grid.indices; }

inline CodeGrid seq_decode(const std::vector<int>& seq, int h, int w) {
  if (seq.size() != static_cast<std::size_t>(h) * w)
    throw std::invalid_argument("seq_decode: sequence length != h*w");
  CodeGrid grid;
  grid.h = h;
  grid.w = w;
  grid.indices = seq;
  return grid;
}

inline void codebook_save_json(const std::string& path, const Codebook& cb) {
  nlohmann::json j;
  j["version"] = 1;
  j["K"] = cb.K;
  j["d"] = cb.d;
  j["f"] = cb.scale;
  j["init_mode"] = init_mode_name(cb.init_mode);
  j["degree"] = cb.degree;
  j["corpus"] = cb.corpus;
  auto entries = nlohmann::json::array();
  for (int k = 0; k < cb.K; ++k) {
    auto row = nlohmann::json::array();
    for (int t = 0; t < cb.d; ++t) row.push_back(cb.entry(k)[t]);
    entries.push_back(std::move(row));
  }
  j["entries"] = std::move(entries);
  std::ofstream os(path);
  if (!os) throw io_error("codebook_save_json: cannot open " + path);
  os << j.dump(1) << '\n';
  if (!os) throw io_error("codebook_save_json: write failed for " + path);
}

inline Codebook codebook_load_json(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw io_error("codebook_load_json: cannot open " + path);
  nlohmann::json j;
  try {
    is >> j;
  } catch (const nlohmann::json::exception& e) {
    throw data_error("codebook_load_json: " + path + ": " + e.what());
  }
  Codebook cb;
  try {
    cb.K = j.at("K").get<int>();
    cb.d = j.at("d").get<int>();
    cb.scale = j.at("f").get<int>();
    cb.init_mode = init_mode_from_name(j.at("init_mode").get<std::string>());
    cb.degree = j.at("degree").get<int>();
    if (j.contains("corpus")) cb.corpus = j["corpus"].get<std::string>();
    cb.entries.reserve(static_cast<std::size_t>(cb.K) * cb.d);
    for (const auto& row : j.at("entries"))
      for (const auto& v : row) cb.entries.push_back(v.get<float>());
  } catch (const nlohmann::json::exception& e) {
    throw data_error("codebook_load_json: " + path + ": " + e.what());
  }
  if (cb.entries.size() != static_cast<std::size_t>(cb.K) * cb.d)
    throw data_error("codebook_load_json: entry count mismatch in " + path);
  return cb;
}

}  // namespace quant
}  // namespace panosphere

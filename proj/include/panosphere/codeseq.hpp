#pragma once

#include <array>
#include <cmath>
#include <compare>
#include <cstdint>
#include <fstream>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "panosphere/binio.hpp"
#include "panosphere/core.hpp"
#include "panosphere/image.hpp"
#include "panosphere/quantizer.hpp"

namespace panosphere {
namespace codeseq {

/// Condition bucket for a target cell: its known flag plus the row band
/// (top / middle / bottom third of the latent grid).
struct Cond {
  bool known = true;
  int band = 0;
};

inline int row_band(int row, int h) {
  int band = (3 * row) / h;
  return band > 2 ? 2 : band;
}

inline std::uint8_t cond_bucket(const Cond& c) {
  return static_cast<std::uint8_t>((c.known ? 1 : 0) * 3 + c.band);
}

/// Latent-resolution known flags: a cell is known iff at least half of its
/// f x f pixel block is given (the exact-50% case counts as known).
inline MaskMap latent_mask(const MaskMap& mask, int f) {
  if (f < 1 || mask.height % f != 0 || mask.width % f != 0)
    throw std::invalid_argument("latent_mask: f must divide mask dimensions");
  MaskMap flags(mask.height / f, mask.width / f);
  for (int r = 0; r < flags.height; ++r)
    for (int c = 0; c < flags.width; ++c) {
      int given = 0;
      for (int py = 0; py < f; ++py)
        for (int px = 0; px < f; ++px)
          given += mask.at(r * f + py, c * f + px) ? 1 : 0;
      flags.set(r, c, 2 * given >= f * f);
    }
  return flags;
}

/// Count-based conditional model over code-index sequences: additive
/// smoothing with backoff from the longest matching context down to the
/// unigram table. Contexts of every length up to n-1 are accumulated.
struct NGramModel {
  static constexpr int kMaxContext = 8;

  int n = 2;
  int K = 0;
  double alpha = 1.0;

  struct Key {
    std::uint8_t len = 0;
    std::array<std::uint32_t, kMaxContext> ctx{};
    std::uint8_t cond = 0;
    auto operator<=>(const Key&) const = default;
  };
  struct Counts {
    std::map<std::uint32_t, std::uint64_t> per_index;
    std::uint64_t total = 0;
    bool operator==(const Counts&) const = default;
  };
  std::map<Key, Counts> table;

  NGramModel() = default;
  NGramModel(int order, int vocab, double smoothing)
      : n(order), K(vocab), alpha(smoothing) {
    if (order < 1 || order > kMaxContext + 1)
      throw std::invalid_argument("NGramModel: order outside [1, 9]");
    if (vocab < 1) throw std::invalid_argument("NGramModel: K must be >= 1");
    if (!(smoothing > 0.0))
      throw std::invalid_argument("NGramModel: alpha must be > 0");
  }
};

inline NGramModel fit_ngram(const std::vector<quant::CodeGrid>& corpus,
                            const std::vector<MaskMap>& conditions, int K,
                            int n, double alpha) {
  if (corpus.empty()) throw std::invalid_argument("fit_ngram: empty corpus");
  if (conditions.size() != corpus.size())
    throw std::invalid_argument("fit_ngram: one condition grid per code grid");

  NGramModel model(n, K, alpha);
  for (std::size_t g = 0; g < corpus.size(); ++g) {
    const auto& grid = corpus[g];
    const auto& flags = conditions[g];
    if (flags.height != grid.h || flags.width != grid.w)
      throw std::invalid_argument("fit_ngram: condition dims differ from grid");
    std::size_t len = grid.indices.size();
    for (std::size_t t = 0; t < len; ++t) {
      int idx = grid.indices[t];
      if (idx < 0 || idx >= K)
        throw data_error("fit_ngram: index outside [0, K)");
      int row = static_cast<int>(t) / grid.w;
      int col = static_cast<int>(t) % grid.w;
      Cond cond{flags.at(row, col), row_band(row, grid.h)};
      int max_len = std::min<std::size_t>(n - 1, t);
      NGramModel::Key key;
      key.cond = cond_bucket(cond);
      for (int L = 0; L <= max_len; ++L) {
        key.len = static_cast<std::uint8_t>(L);
        for (int q = 0; q < L; ++q)
          key.ctx[q] = static_cast<std::uint32_t>(grid.indices[t - L + q]);
        auto& counts = model.table[key];
        ++counts.per_index[static_cast<std::uint32_t>(idx)];
        ++counts.total;
      }
    }
  }
  return model;
}

/// p(s | context, cond) of length K. The longest stored suffix of the
/// context that has mass is used; with nothing stored the smoothed zero
/// counts give the uniform distribution.
inline std::vector<double> predict_dist(const NGramModel& model,
                                        const std::vector<int>& context,
                                        const Cond& cond) {
  int max_len = std::min<std::size_t>(model.n - 1, context.size());
  NGramModel::Key key;
  key.cond = cond_bucket(cond);
  const NGramModel::Counts* found = nullptr;
  for (int L = max_len; L >= 0 && !found; --L) {
    key.len = static_cast<std::uint8_t>(L);
    key.ctx.fill(0);
    for (int q = 0; q < L; ++q)
      key.ctx[q] = static_cast<std::uint32_t>(context[context.size() - L + q]);
    auto it = model.table.find(key);
    if (it != model.table.end() && it->second.total > 0) found = &it->second;
  }

  std::vector<double> dist(model.K, 0.0);
  double denom = (found ? static_cast<double>(found->total) : 0.0) +
                 model.K * model.alpha;
  for (int k = 0; k < model.K; ++k) dist[k] = model.alpha / denom;
  if (found)
    for (const auto& [idx, count] : found->per_index)
      dist[idx] = (static_cast<double>(count) + model.alpha) / denom;
  return dist;
}

/// Mean negative log-likelihood of a grid under the model, raster order.
inline double nll(const NGramModel& model, const quant::CodeGrid& grid,
                  const MaskMap& flags) {
  if (flags.height != grid.h || flags.width != grid.w)
    throw std::invalid_argument("nll: condition dims differ from grid");
  double acc = 0.0;
  std::vector<int> context;
  context.reserve(model.n);
  for (std::size_t t = 0; t < grid.indices.size(); ++t) {
    int row = static_cast<int>(t) / grid.w;
    int col = static_cast<int>(t) % grid.w;
    Cond cond{flags.at(row, col), row_band(row, grid.h)};
    int take = std::min<std::size_t>(model.n - 1, t);
    context.assign(grid.indices.begin() + (t - take), grid.indices.begin() + t);
    acc -= std::log(predict_dist(model, context, cond)[grid.indices[t]]);
  }
  return acc / static_cast<double>(grid.indices.size());
}

/// Inputs of the circular completion: a latent grid with known flags, the
/// wrap-duplication width in columns, and the sampler settings. pad_w = 0
/// disables the wrap (the ablated variant).
struct OutpaintTask {
  quant::CodeGrid grid;
  MaskMap known;
  int pad_w = 1;
  double temperature = 1.0;
  std::uint64_t seed = 0;
};

namespace detail {

inline void validate_task(const OutpaintTask& task) {
  if (task.known.height != task.grid.h || task.known.width != task.grid.w)
    throw std::invalid_argument("outpaint: known flags dims differ from grid");
  if (!(task.temperature > 0.0))
    throw std::invalid_argument("outpaint: temperature must be > 0");
  if (task.pad_w < 0 || task.pad_w > task.grid.w / 4)
    throw std::invalid_argument("outpaint: pad_w outside [0, w/4]");
}

/// Sample proportional to p^(1/T) in log space. At or below 1e-9 the
/// rescaled distribution is no longer representable, so the draw becomes
/// the greedy argmax (lowest index on ties).
template <typename Engine>
int sample_tempered(const std::vector<double>& dist, double temperature,
                    Engine& eng) {
  if (temperature <= 1e-9) {
    int best = 0;
    for (std::size_t k = 1; k < dist.size(); ++k)
      if (dist[k] > dist[best]) best = static_cast<int>(k);
    return best;
  }
  std::vector<double> weight(dist.size());
  double peak = -1e300;
  for (std::size_t k = 0; k < dist.size(); ++k) {
    weight[k] = std::log(dist[k]) / temperature;
    peak = std::max(peak, weight[k]);
  }
  double sum = 0.0;
  for (auto& w : weight) {
    w = std::exp(w - peak);
    sum += w;
  }
  double u = rng::uniform01(eng) * sum;
  double cum = 0.0;
  for (std::size_t k = 0; k < weight.size(); ++k) {
    cum += weight[k];
    if (u < cum) return static_cast<int>(k);
  }
  return static_cast<int>(weight.size()) - 1;
}

}  // namespace detail

/// Circular completion: the grid is extended by pad_w wrap-copied columns
/// per side, cells are processed in raster order over the extension (known
/// cells pass through, unknown cells are sampled), and after each row the
/// pad columns are rewritten from their wrap sources so later contexts see
/// consistent seam values. Returns the central h x w region.
inline quant::CodeGrid circular_outpaint(const NGramModel& model,
                                         const OutpaintTask& task) {
  detail::validate_task(task);
  int h = task.grid.h, w = task.grid.w, p = task.pad_w;
  int ew = w + 2 * p;

  std::vector<int> values(static_cast<std::size_t>(h) * ew);
  std::vector<std::uint8_t> known(static_cast<std::size_t>(h) * ew);
  auto at = [&](int r, int c) -> int& {
    return values[static_cast<std::size_t>(r) * ew + c];
  };
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < ew; ++c) {
      int src = c < p ? w - p + c : (c < p + w ? c - p : c - p - w);
      at(r, c) = task.grid.at(r, src);
      known[static_cast<std::size_t>(r) * ew + c] = task.known.at(r, src) ? 1 : 0;
    }

  std::mt19937_64 eng(task.seed);
  std::vector<int> context;
  context.reserve(model.n);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < ew; ++c) {
      if (known[static_cast<std::size_t>(r) * ew + c]) continue;
      context.clear();
      int take = std::min<long>(model.n - 1,
                                static_cast<long>(r) * ew + c);
      for (int q = take; q >= 1; --q) {
        long flat = static_cast<long>(r) * ew + c - q;
        context.push_back(values[static_cast<std::size_t>(flat)]);
      }
      Cond cond{false, row_band(r, h)};
      at(r, c) = detail::sample_tempered(predict_dist(model, context, cond),
                                         task.temperature, eng);
    }
    for (int k = 0; k < p; ++k) {
      at(r, k) = at(r, w + k);
      at(r, p + w + k) = at(r, p + k);
    }
  }

  quant::CodeGrid out;
  out.h = h;
  out.w = w;
  out.indices.resize(static_cast<std::size_t>(h) * w);
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) out.at(r, c) = at(r, p + c);
  return out;
}

/// n_samples independent completions with per-sample seeds derived from
/// the task seed; known cells are identical across all samples.
inline std::vector<quant::CodeGrid> diverse_outpaint(const NGramModel& model,
                                                     const OutpaintTask& task,
                                                     int n_samples) {
  if (n_samples < 1)
    throw std::invalid_argument("diverse_outpaint: n_samples must be >= 1");
  std::vector<quant::CodeGrid> samples;
  samples.reserve(n_samples);
  for (int i = 0; i < n_samples; ++i) {
    OutpaintTask run = task;
    run.seed = rng::derive(task.seed, static_cast<std::uint64_t>(i));
    samples.push_back(circular_outpaint(model, run));
  }
  return samples;
}

/// Binary layout: "NGRM", u32 n, u32 K, f64 alpha, u64 record count, then
/// sorted records (u8 ctx_len, ctx_len x u32 context, u8 cond, u32 index,
/// u64 count), all little-endian. Sorted order makes files byte-comparable.
inline void model_save(const std::string& path, const NGramModel& model) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw io_error("model_save: cannot open " + path);
  os.write("NGRM", 4);
  binio::write_u32_le(os, static_cast<std::uint32_t>(model.n));
  binio::write_u32_le(os, static_cast<std::uint32_t>(model.K));
  binio::write_f64_le(os, model.alpha);
  std::uint64_t records = 0;
  for (const auto& [key, counts] : model.table)
    records += counts.per_index.size();
  binio::write_u64_le(os, records);
  for (const auto& [key, counts] : model.table)
    for (const auto& [idx, count] : counts.per_index) {
      os.put(static_cast<char>(key.len));
      for (int q = 0; q < key.len; ++q) binio::write_u32_le(os, key.ctx[q]);
      os.put(static_cast<char>(key.cond));
      binio::write_u32_le(os, idx);
      binio::write_u64_le(os, count);
    }
  if (!os) throw io_error("model_save: write failed for " + path);
}

inline NGramModel model_load(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw io_error("model_load: cannot open " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "NGRM", 4) != 0)
    throw data_error("model_load: bad magic in " + path);
  int n = static_cast<int>(binio::read_u32_le(is));
  int K = static_cast<int>(binio::read_u32_le(is));
  double alpha = binio::read_f64_le(is);
  NGramModel model(n, K, alpha);
  std::uint64_t records = binio::read_u64_le(is);
  for (std::uint64_t rec = 0; rec < records; ++rec) {
    NGramModel::Key key;
    key.len = static_cast<std::uint8_t>(is.get());
    if (key.len > NGramModel::kMaxContext)
      throw data_error("model_load: corrupt record in " + path);
    for (int q = 0; q < key.len; ++q) key.ctx[q] = binio::read_u32_le(is);
    key.cond = static_cast<std::uint8_t>(is.get());
    std::uint32_t idx = binio::read_u32_le(is);
    std::uint64_t count = binio::read_u64_le(is);
    if (!is) throw data_error("model_load: truncated file " + path);
    auto& counts = model.table[key];
    counts.per_index[idx] = count;
    counts.total += count;
  }
  return model;
}

}  // namespace codeseq
}  // namespace panosphere

#include "skipgram.hpp"

#include "error.hpp"
#include "rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace a2v::skipgram {

namespace {

void check_finite(const Matrix& m, const char* what) {
  for (double v : m.data)
    if (!std::isfinite(v)) throw NumericError(std::string(what) + ": non-finite entry");
}

// log sum_k exp(context_k . v) with max-subtraction; also fills p with the
// softmax row when non-null.
double log_partition(const Matrix& context, const double* v, std::size_t dim,
                     std::vector<double>* p) {
  std::size_t w = context.rows;
  double maxs = -std::numeric_limits<double>::infinity();
  std::vector<double> scores(w);
  for (std::size_t k = 0; k < w; ++k) {
    scores[k] = dot({context.row(k), dim}, {v, dim});
    maxs = std::max(maxs, scores[k]);
  }
  double z = 0;
  for (std::size_t k = 0; k < w; ++k) z += std::exp(scores[k] - maxs);
  if (p) {
    p->resize(w);
    for (std::size_t k = 0; k < w; ++k) (*p)[k] = std::exp(scores[k] - maxs) / z;
  }
  double logz = maxs + std::log(z);
  if (!std::isfinite(logz)) throw NumericError("softmax partition is non-finite");
  return logz;
}

struct ContextWalker {
  int window;
  // calls fn(center_pos, context_pos) for every in-window pair
  template <typename F>
  void pairs(std::size_t len, F&& fn) const {
    for (std::size_t t = 0; t < len; ++t) {
      std::size_t lo = t >= static_cast<std::size_t>(window) ? t - window : 0;
      std::size_t hi = std::min(len - 1, t + window);
      for (std::size_t j = lo; j <= hi; ++j)
        if (j != t) fn(t, j);
    }
  }
};

std::vector<std::vector<std::size_t>> index_sequences(const Sequences& sequences,
                                                      const AssetVocabulary& vocab) {
  std::vector<std::vector<std::size_t>> out;
  out.reserve(sequences.size());
  for (const auto& seq : sequences) {
    std::vector<std::size_t> idx;
    idx.reserve(seq.assets.size());
    for (const auto& a : seq.assets) idx.push_back(vocab.at(a));
    out.push_back(std::move(idx));
  }
  return out;
}

} // namespace

std::size_t AssetVocabulary::at(const std::string& id) const {
  auto it = index.find(id);
  if (it == index.end()) throw NotFoundError("asset not in vocabulary: " + id);
  return it->second;
}

void SkipGramConfig::validate() const {
  if (dim < 1) throw std::invalid_argument("skipgram config: dim < 1");
  if (window < 1) throw std::invalid_argument("skipgram config: window < 1");
  if (epochs < 1) throw std::invalid_argument("skipgram config: epochs < 1");
  if (!(learning_rate > 0)) throw std::invalid_argument("skipgram config: learning_rate <= 0");
  if (objective == Objective::negative_sampling && negative_k < 1)
    throw std::invalid_argument("skipgram config: negative_k < 1");
}

AssetVocabulary build_vocab(const Sequences& sequences) {
  AssetVocabulary vocab;
  for (const auto& seq : sequences) {
    for (const auto& asset : seq.assets) {
      auto [it, inserted] = vocab.index.try_emplace(asset, vocab.asset_ids.size());
      if (inserted) {
        vocab.asset_ids.push_back(asset);
        vocab.counts.push_back(0);
      }
      ++vocab.counts[it->second];
    }
  }
  if (vocab.asset_ids.empty()) throw std::invalid_argument("build_vocab: no assets in sequences");
  return vocab;
}

double softmax_prob(std::size_t center_index, std::size_t context_index,
                    const EmbeddingMatrix& emb) {
  if (center_index >= emb.input.rows || context_index >= emb.context.rows)
    throw std::invalid_argument("softmax_prob: index out of range");
  check_finite(emb.input, "softmax_prob input");
  check_finite(emb.context, "softmax_prob context");
  const double* v = emb.input.row(center_index);
  double logz = log_partition(emb.context, v, emb.dim, nullptr);
  double s = dot({emb.context.row(context_index), emb.dim}, {v, emb.dim});
  return std::exp(s - logz);
}

double skipgram_loss(const Sequences& sequences, const AssetVocabulary& vocab,
                     const EmbeddingMatrix& emb, int window) {
  if (window < 1) throw std::invalid_argument("skipgram_loss: window < 1");
  auto indexed = index_sequences(sequences, vocab);
  ContextWalker walk{window};

  double total = 0;
  std::size_t positions = 0;
  for (const auto& seq : indexed) {
    positions += seq.size();
    // one partition evaluation per center position serves all its pairs
    std::vector<double> logz_at(seq.size());
    for (std::size_t t = 0; t < seq.size(); ++t)
      logz_at[t] = log_partition(emb.context, emb.input.row(seq[t]), emb.dim, nullptr);
    walk.pairs(seq.size(), [&](std::size_t t, std::size_t j) {
      double s = dot({emb.context.row(seq[j]), emb.dim}, {emb.input.row(seq[t]), emb.dim});
      double logp = s - logz_at[t];
      if (std::exp(logp) <= 0)
        throw NumericError("skipgram_loss: context probability underflowed to zero");
      total -= logp;
    });
  }
  if (positions == 0) return 0;
  return total / static_cast<double>(positions);
}

LossGradient skipgram_loss_gradient(const Sequences& sequences, const AssetVocabulary& vocab,
                                    const EmbeddingMatrix& emb, int window) {
  auto indexed = index_sequences(sequences, vocab);
  std::size_t w = emb.input.rows;
  std::size_t dim = emb.dim;

  LossGradient grad;
  grad.input = Matrix(w, dim);
  grad.context = Matrix(w, dim);

  std::size_t positions = 0;
  for (const auto& seq : indexed) positions += seq.size();
  if (positions == 0) return grad;
  double inv_t = 1.0 / static_cast<double>(positions);

  std::vector<double> p;
  for (const auto& seq : indexed) {
    for (std::size_t t = 0; t < seq.size(); ++t) {
      std::size_t lo = t >= static_cast<std::size_t>(window) ? t - window : 0;
      std::size_t hi = std::min(seq.size() - 1, t + static_cast<std::size_t>(window));
      std::size_t npairs = (hi - lo + 1) - 1;
      if (npairs == 0) continue;

      std::size_t center = seq[t];
      const double* v = emb.input.row(center);
      log_partition(emb.context, v, dim, &p);

      // d/dv: npairs * sum_k p_k c_k - sum_{j in window} c_j
      double* gv = grad.input.row(center);
      for (std::size_t k = 0; k < w; ++k) {
        const double* ck = emb.context.row(k);
        double coeff = static_cast<double>(npairs) * p[k] * inv_t;
        for (std::size_t d = 0; d < dim; ++d) gv[d] += coeff * ck[d];
        // d/dc_k: npairs * p_k * v
        double* gc = grad.context.row(k);
        for (std::size_t d = 0; d < dim; ++d) gc[d] += coeff * v[d];
      }
      for (std::size_t j = lo; j <= hi; ++j) {
        if (j == t) continue;
        const double* cj = emb.context.row(seq[j]);
        double* gc = grad.context.row(seq[j]);
        for (std::size_t d = 0; d < dim; ++d) {
          gv[d] -= cj[d] * inv_t;
          gc[d] -= v[d] * inv_t;
        }
      }
    }
  }
  return grad;
}

EmbeddingMatrix init_embedding(std::size_t vocab_size, int dim, std::uint64_t seed) {
  EmbeddingMatrix emb;
  emb.dim = static_cast<std::size_t>(dim);
  emb.input = Matrix(vocab_size, emb.dim);
  emb.context = Matrix(vocab_size, emb.dim);
  Rng rng(seed);
  double half = 0.5 / dim;
  for (double& v : emb.input.data) v = rng.uniform(-half, half);
  return emb;
}

namespace {

// cumulative unigram^0.75 table for negative sampling
struct NoiseTable {
  std::vector<double> cumulative;

  explicit NoiseTable(const std::vector<long>& counts) {
    cumulative.reserve(counts.size());
    double acc = 0;
    for (long c : counts) {
      acc += std::pow(static_cast<double>(c), 0.75);
      cumulative.push_back(acc);
    }
  }

  std::size_t sample(Rng& rng) const {
    double u = rng.uniform() * cumulative.back();
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
    if (it == cumulative.end()) --it;
    return static_cast<std::size_t>(it - cumulative.begin());
  }
};

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

} // namespace

EmbeddingMatrix train_skipgram(const Sequences& sequences, const AssetVocabulary& vocab,
                               const SkipGramConfig& config, const EmbeddingMatrix* init,
                               std::vector<double>* epoch_losses) {
  config.validate();
  auto indexed = index_sequences(sequences, vocab);
  std::size_t w = vocab.size();
  std::size_t dim = static_cast<std::size_t>(config.dim);

  EmbeddingMatrix emb;
  if (init) {
    if (init->input.rows != w || init->dim != dim)
      throw std::invalid_argument("train_skipgram: init shape does not match vocabulary/config");
    emb = *init;
  } else {
    emb = init_embedding(w, config.dim, config.seed);
  }

  std::size_t positions_per_epoch = 0;
  for (const auto& seq : indexed) positions_per_epoch += seq.size();
  if (positions_per_epoch == 0) throw std::invalid_argument("train_skipgram: empty sequences");
  double total_positions =
      static_cast<double>(positions_per_epoch) * static_cast<double>(config.epochs);

  Rng rng(config.seed ^ 0xa5a5a5a5a5a5a5a5ULL);
  NoiseTable noise(vocab.counts);

  std::vector<double> p, pbar(dim), g_center(dim);
  std::size_t processed = 0;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::size_t step = 0;
    for (const auto& seq : indexed) {
      for (std::size_t t = 0; t < seq.size(); ++t, ++processed, ++step) {
        double lr = config.learning_rate *
                    std::max(1.0 - static_cast<double>(processed) / total_positions, 1e-4);
        std::size_t lo = t >= static_cast<std::size_t>(config.window) ? t - config.window : 0;
        std::size_t hi = std::min(seq.size() - 1, t + static_cast<std::size_t>(config.window));
        std::size_t npairs = (hi - lo + 1) - 1;
        if (npairs == 0) continue;
        std::size_t center = seq[t];
        double* v = emb.input.row(center);

        if (config.objective == Objective::full_softmax) {
          log_partition(emb.context, v, dim, &p);
          std::fill(pbar.begin(), pbar.end(), 0.0);
          for (std::size_t k = 0; k < w; ++k) {
            const double* ck = emb.context.row(k);
            for (std::size_t d = 0; d < dim; ++d) pbar[d] += p[k] * ck[d];
          }
          for (std::size_t d = 0; d < dim; ++d)
            g_center[d] = static_cast<double>(npairs) * pbar[d];
          for (std::size_t j = lo; j <= hi; ++j) {
            if (j == t) continue;
            const double* cj = emb.context.row(seq[j]);
            for (std::size_t d = 0; d < dim; ++d) g_center[d] -= cj[d];
          }
          // context rows move against npairs * p_k * v, window rows gain v
          for (std::size_t k = 0; k < w; ++k) {
            double coeff = lr * static_cast<double>(npairs) * p[k];
            double* ck = emb.context.row(k);
            for (std::size_t d = 0; d < dim; ++d) ck[d] -= coeff * v[d];
          }
          for (std::size_t j = lo; j <= hi; ++j) {
            if (j == t) continue;
            double* cj = emb.context.row(seq[j]);
            for (std::size_t d = 0; d < dim; ++d) cj[d] += lr * v[d];
          }
          for (std::size_t d = 0; d < dim; ++d) v[d] -= lr * g_center[d];
        } else {
          for (std::size_t j = lo; j <= hi; ++j) {
            if (j == t) continue;
            std::fill(g_center.begin(), g_center.end(), 0.0);
            for (int s = 0; s <= config.negative_k; ++s) {
              std::size_t target;
              double label;
              if (s == 0) {
                target = seq[j];
                label = 1.0;
              } else {
                target = noise.sample(rng);
                if (target == seq[j]) continue;
                label = 0.0;
              }
              double* ct = emb.context.row(target);
              double g = (label - sigmoid(dot({ct, dim}, {v, dim}))) * lr;
              for (std::size_t d = 0; d < dim; ++d) {
                g_center[d] += g * ct[d];
                ct[d] += g * v[d];
              }
            }
            for (std::size_t d = 0; d < dim; ++d) v[d] += g_center[d];
          }
        }

        for (std::size_t d = 0; d < dim; ++d)
          if (!std::isfinite(v[d]))
            throw NumericError("train_skipgram: NaN at epoch " + std::to_string(epoch) +
                               ", step " + std::to_string(step) +
                               "; reduce the learning rate");
      }
    }
    if (epoch_losses) epoch_losses->push_back(skipgram_loss(sequences, vocab, emb, config.window));
  }
  return emb;
}

double cosine_similarity(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) throw std::invalid_argument("cosine_similarity: length mismatch");
  double uu = dot(u, u), vv = dot(v, v);
  if (uu == 0 || vv == 0) throw std::invalid_argument("cosine_similarity: zero vector");
  return std::clamp(dot(u, v) / std::sqrt(uu * vv), -1.0, 1.0);
}

namespace {

std::vector<Match> rank_by_cosine(const VectorTable& table, std::span<const double> target,
                                  std::size_t k,
                                  const std::vector<std::size_t>& excluded) {
  std::vector<std::pair<double, std::size_t>> scored;
  scored.reserve(table.size());
  for (std::size_t i = 0; i < table.size(); ++i) {
    if (std::find(excluded.begin(), excluded.end(), i) != excluded.end()) continue;
    scored.emplace_back(cosine_similarity(target, table.vectors.row_span(i)), i);
  }
  std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  if (scored.size() > k) scored.resize(k);
  std::vector<Match> out;
  out.reserve(scored.size());
  for (const auto& [sim, i] : scored) out.push_back({table.ids[i], sim});
  return out;
}

std::size_t require_id(const VectorTable& table, const std::string& id) {
  auto it = table.index.find(id);
  if (it == table.index.end()) throw NotFoundError("asset not in table: " + id);
  return it->second;
}

} // namespace

std::vector<Match> nearest_neighbors(const VectorTable& table, const std::string& asset_id,
                                     std::size_t k) {
  std::size_t q = require_id(table, asset_id);
  return rank_by_cosine(table, table.vectors.row_span(q), k, {q});
}

std::vector<Match> partner_query(const VectorTable& table, const std::string& a1,
                                 const std::string& beacon, std::size_t k) {
  std::size_t ia = require_id(table, a1);
  std::size_t ib = require_id(table, beacon);
  std::vector<double> target(table.dim());
  auto va = table.vectors.row_span(ia);
  auto vb = table.vectors.row_span(ib);
  double norm2 = 0;
  for (std::size_t d = 0; d < target.size(); ++d) {
    target[d] = vb[d] - va[d];
    norm2 += target[d] * target[d];
  }
  if (norm2 == 0)
    throw std::invalid_argument("partner_query: beacon and anchor have identical vectors");
  return rank_by_cosine(table, target, k, {ia, ib});
}

VectorTable to_table(const AssetVocabulary& vocab, const EmbeddingMatrix& emb) {
  VectorTable table = VectorTable::with_dim(emb.dim);
  for (std::size_t i = 0; i < vocab.size(); ++i)
    table.add(vocab.asset_ids[i], emb.input.row_span(i));
  return table;
}

} // namespace a2v::skipgram

#pragma once

#include "event_log.hpp"
#include "matrix.hpp"
#include "vector_table.hpp"

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

namespace a2v::skipgram {

struct AssetVocabulary {
  std::vector<std::string> asset_ids;               // index -> id, first-appearance order
  std::unordered_map<std::string, std::size_t> index;
  std::vector<long> counts;                          // occurrences in the sequences

  std::size_t size() const { return asset_ids.size(); }
  std::size_t at(const std::string& id) const;
};

// Input vectors are the exported representation; context vectors exist only
// for the softmax side of training.
struct EmbeddingMatrix {
  std::size_t dim = 0;
  Matrix input;   // W x dim
  Matrix context; // W x dim
};

enum class Objective { full_softmax, negative_sampling };

struct SkipGramConfig {
  int dim = 50;
  int window = 3;
  int epochs = 5;
  double learning_rate = 0.05; // linear decay to 1e-4 of this value
  Objective objective = Objective::full_softmax;
  int negative_k = 5;          // negative-sampling draws per context pair
  std::uint64_t seed = 1;

  void validate() const;
};

using Sequences = std::vector<events::AssetSequence>;

AssetVocabulary build_vocab(const Sequences& sequences);

// p(context | center) under the full softmax, computed with max-subtraction.
double softmax_prob(std::size_t center_index, std::size_t context_index,
                    const EmbeddingMatrix& emb);

// Average negative log-likelihood of every (center, context) pair within the
// window, averaged over center positions. Throws NumericError if any pair
// probability underflows to zero.
double skipgram_loss(const Sequences& sequences, const AssetVocabulary& vocab,
                     const EmbeddingMatrix& emb, int window);

// Analytic gradient of skipgram_loss with respect to both matrices.
struct LossGradient {
  Matrix input;
  Matrix context;
};
LossGradient skipgram_loss_gradient(const Sequences& sequences, const AssetVocabulary& vocab,
                                    const EmbeddingMatrix& emb, int window);

// Seeded initialization: input vectors uniform in [-0.5/dim, 0.5/dim],
// context vectors zero.
EmbeddingMatrix init_embedding(std::size_t vocab_size, int dim, std::uint64_t seed);

// SGD training; deterministic for a fixed seed. `init` overrides the seeded
// initialization when given (must match the vocabulary and config.dim).
// Epoch-level loss is non-increasing on small instances for learning rates
// up to about 0.05; `epoch_losses`, when non-null, records the full-softmax
// loss after every epoch.
EmbeddingMatrix train_skipgram(const Sequences& sequences, const AssetVocabulary& vocab,
                               const SkipGramConfig& config,
                               const EmbeddingMatrix* init = nullptr,
                               std::vector<double>* epoch_losses = nullptr);

double cosine_similarity(std::span<const double> u, std::span<const double> v);

struct Match {
  std::string asset_id;
  double similarity = 0;
};

// Top-k by cosine similarity, descending, query excluded, ties broken by
// table index.
std::vector<Match> nearest_neighbors(const VectorTable& table, const std::string& asset_id,
                                     std::size_t k);

// Top-k assets nearest to v_beacon - v_a1: the candidates x for which
// v_a1 + v_x best lands on the beacon.
std::vector<Match> partner_query(const VectorTable& table, const std::string& a1,
                                 const std::string& beacon, std::size_t k);

// The exported (input-vector) representation keyed by asset id.
VectorTable to_table(const AssetVocabulary& vocab, const EmbeddingMatrix& emb);

} // namespace a2v::skipgram

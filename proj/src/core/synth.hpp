#pragma once

#include "matrix.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace a2v::synth {

// A synthetic course with planted structure: students navigate assets
// block-locally (so the context embedding has something to find) and each
// asset's popularity is Poisson with a log-rate driven by its block's latent
// features (so the regression has something to recover).
struct SynthConfig {
  int n_students = 100;
  int n_assets = 3000;      // labeled assets; ghosts are extra
  int n_blocks = 10;        // must divide n_assets
  int n_ghosts = 300;       // under-interacted decoys, dropped by the ghost filter
  double block_affinity = 0.9;     // probability the next visit stays in-block
  std::vector<double> pop_weights; // w*; empty selects the default
  double pop_bias = 1.0;
  double latent_jitter = 0.05;     // within-block latent-feature noise
  int extra_interactions = 2;      // max repeat events per interactor
  double content_topic_mix = 0.3;  // probability a content word ignores the block topic
  int vocab_size = 200;
  int word_vec_dim = 50;
  std::int64_t course_start_ms = 1000000;
  std::int64_t course_end_ms = 1000000 + 14LL * 7 * 24 * 3600 * 1000;
  std::uint64_t seed = 1;

  void validate() const;
  std::vector<double> effective_weights() const;
};

// Writes events.csv, creators.csv, content.csv, instructor.csv,
// word_vectors.txt and ground_truth.json into out_dir. Byte-identical for a
// fixed config.
void generate(const SynthConfig& config, const std::filesystem::path& out_dir);

// Plain Poisson-regression draw: X entries standard normal,
// y ~ Poisson(exp(weights . x + bias)).
struct RegressionDraw {
  Matrix x;
  std::vector<double> y;
};
RegressionDraw make_poisson_regression(std::size_t n, std::span<const double> weights,
                                       double bias, std::uint64_t seed);

} // namespace a2v::synth

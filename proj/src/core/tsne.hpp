#pragma once

#include "matrix.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace a2v::tsne {

struct TsneConfig {
  double perplexity = 30;
  double theta = 0.5; // 0 = exact, larger = coarser Barnes-Hut cells
  int iterations = 1000;
  double early_exaggeration = 12.0;
  int exaggeration_iters = 250;
  double learning_rate = 200.0;
  double initial_momentum = 0.5;
  double final_momentum = 0.8;
  int momentum_switch_iter = 250;
  std::uint64_t seed = 1;

  void validate(std::size_t n) const;
};

// Gaussian affinities for one point: n-1 squared distances to the others.
// Binary search on the kernel precision until the row entropy matches
// log(perplexity) (tolerance 1e-5, at most 200 halvings); the row sums to 1.
std::vector<double> perplexity_calibration(std::span<const double> sq_distances,
                                           double target_perplexity);

// Symmetrized joint affinities: non-negative, symmetric, sums to 1.
Matrix input_affinities(const Matrix& x, double perplexity);

// KL gradient at the layout y (n x 2). theta = 0 reproduces the exact
// O(n^2) gradient; otherwise quadtree cells with side/distance < theta are
// summarized by their center of mass.
Matrix kl_gradient(const Matrix& p, const Matrix& y, double theta);

double kl_divergence(const Matrix& p, const Matrix& y);

// Seeded Gaussian layout with sigma 1e-4, the conventional t-SNE start.
Matrix initial_layout(std::size_t n, std::uint64_t seed);

struct TsneResult {
  Matrix points; // n x 2
  double kl_divergence = 0;
};

TsneResult run_tsne(const Matrix& x, const TsneConfig& config);

struct Embedding2D {
  std::vector<std::string> asset_ids;
  Matrix points;
  double kl_divergence = 0;
};

// Self-contained SVG scatter, one circle per point, colored by a sequential
// colormap over log(1 + popularity).
std::string render_scatter_svg(const Matrix& points, std::span<const long> popularity);

// Layout CSV `asset_id,x,y,popularity`; coordinates round-trip bit-exactly.
void write_layout_csv(std::ostream& out, const Embedding2D& embedding,
                      std::span<const long> popularity);
Embedding2D read_layout_csv(std::istream& in, std::vector<long>* popularity);

} // namespace a2v::tsne

#pragma once

#include "matrix.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace a2v::models {

// Predictions use an exponential link, so outputs are always positive and
// the Poisson loss below is the matching negative log-likelihood core.
double poisson_loss(std::span<const double> predictions, std::span<const double> labels);

struct PoissonGLM {
  std::vector<double> weights;
  double bias = 0;

  double predict(std::span<const double> x) const;
};

struct MLPModel {
  std::size_t inputs = 0;
  std::size_t hidden = 8;
  Matrix w1;               // inputs x hidden
  std::vector<double> b1;  // hidden
  std::vector<double> w2;  // hidden
  double b2 = 0;

  double predict(std::span<const double> x) const;
};

struct ConstantModel {
  double mean = 0;
  double predict(std::span<const double>) const { return mean; }
};

struct TrainConfig {
  double learning_rate = 0.05;
  int max_epochs = 5000;
  int patience = 50;    // epochs without validation improvement
  std::uint64_t seed = 1;

  void validate() const;
};

struct TrainInfo {
  int epochs_run = 0;
  double final_train_loss = 0;
  double best_validation_loss = 0;
};

// The hold-out both trainers use internally: seeded shuffle, last 20% (at
// least one row) validates.
struct ValidationSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
};
ValidationSplit validation_split(std::size_t n, std::uint64_t seed);

// Full-batch gradient descent on the Poisson loss. A seeded shuffle sets
// aside the last 20% of rows for validation; the returned parameters are the
// ones with the best validation loss (early stopping).
PoissonGLM train_glm(const Matrix& x, std::span<const double> y, const TrainConfig& config,
                     TrainInfo* info = nullptr);

MLPModel train_mlp(const Matrix& x, std::span<const double> y, const TrainConfig& config,
                   std::size_t hidden = 8, TrainInfo* info = nullptr);

ConstantModel baseline_fit(std::span<const double> y_train);

// Analytic gradients, exposed so they can be checked against finite
// differences. Parameter order matches flatten()/unflatten below.
std::vector<double> glm_loss_gradient(const PoissonGLM& model, const Matrix& x,
                                      std::span<const double> y);
std::vector<double> mlp_loss_gradient(const MLPModel& model, const Matrix& x,
                                      std::span<const double> y);

std::vector<double> flatten(const PoissonGLM& model);
void unflatten(std::span<const double> params, PoissonGLM& model);
std::vector<double> flatten(const MLPModel& model);
void unflatten(std::span<const double> params, MLPModel& model);

void save_glm(std::ostream& out, const PoissonGLM& model, const TrainInfo& info);
void save_mlp(std::ostream& out, const MLPModel& model, const TrainInfo& info);
void save_baseline(std::ostream& out, const ConstantModel& model);

// Reads any of the three variants back; `variant` receives the tag.
struct LoadedModel {
  std::string variant;
  PoissonGLM glm;
  MLPModel mlp;
  ConstantModel baseline;

  double predict(std::span<const double> x) const;
};
LoadedModel load_model(std::istream& in);

} // namespace a2v::models

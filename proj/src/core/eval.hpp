#pragma once

#include "features.hpp"
#include "models.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace a2v::eval {

struct FoldPlan {
  int k = 5;
  std::vector<int> fold_of; // row index -> fold, sizes differ by at most 1
};

FoldPlan kfold_split(std::size_t n, int k, std::uint64_t seed);

enum class ModelType { baseline, glm, mlp };

ModelType model_type_from_string(const std::string& s);
const char* model_type_to_string(ModelType t);

struct EvalConfig {
  int folds = 5;
  std::size_t hidden = 8;
  models::TrainConfig train;
  std::uint64_t seed = 1;
};

struct EvalReport {
  std::string representation;
  std::string model;
  std::vector<double> fold_rmse;
  std::vector<std::string> asset_ids;      // row order of the representation
  std::vector<double> predictions;         // one per asset, from its test fold
  std::vector<double> abs_errors;          // |prediction - label| per asset
  double overall_rmse = 0;
  EvalConfig config;
};

// Per fold: z-score instructor features on the training portion, train the
// model (with its internal 80/20 validation split), predict the held-out
// fold. Errors are pooled per asset across folds.
EvalReport cross_validate(const features::RepresentationSet& rep, ModelType model_type,
                          const EvalConfig& config);

double rmse(std::span<const double> pred, std::span<const double> actual);

// Pearson correlation of average-ranked data; ties get average ranks.
double spearman_rho(std::span<const double> x, std::span<const double> y);

struct TTestResult {
  double t = 0;
  double p = 0; // two-sided
  std::size_t df = 0;
};

// Paired t-test over differences of squared errors, paired by position.
TTestResult paired_ttest(std::span<const double> errors_a, std::span<const double> errors_b);

// t statistic over a vector of paired differences (sample stddev).
TTestResult ttest_from_differences(std::span<const double> d);

double regularized_incomplete_beta(double x, double a, double b);
double students_t_cdf(double t, double df);

struct KdeCurve {
  std::vector<double> grid;
  std::vector<double> density;
  double bandwidth = 0;
};

// Gaussian KDE with Silverman bandwidth 1.06 * sigma * n^(-1/5) (floored at
// 1e-6) on a uniform grid over [0, 1.1 * max].
KdeCurve abs_error_kde(std::span<const double> errors, std::size_t grid_points = 256);

void save_report(std::ostream& out, const EvalReport& report);
void save_kde_csv(std::ostream& out, const KdeCurve& curve);

} // namespace a2v::eval

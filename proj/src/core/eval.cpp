#include "eval.hpp"

#include "csv.hpp"
#include "error.hpp"
#include "rng.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

namespace a2v::eval {

using nlohmann::json;

FoldPlan kfold_split(std::size_t n, int k, std::uint64_t seed) {
  if (k < 2) throw std::invalid_argument("kfold_split: k < 2");
  if (n < static_cast<std::size_t>(k)) throw std::invalid_argument("kfold_split: n < k");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  rng.shuffle(order);

  FoldPlan plan;
  plan.k = k;
  plan.fold_of.assign(n, 0);
  std::size_t base = n / static_cast<std::size_t>(k);
  std::size_t rem = n % static_cast<std::size_t>(k);
  std::size_t pos = 0;
  for (int f = 0; f < k; ++f) {
    std::size_t size = base + (static_cast<std::size_t>(f) < rem ? 1 : 0);
    for (std::size_t i = 0; i < size; ++i) plan.fold_of[order[pos++]] = f;
  }
  return plan;
}

ModelType model_type_from_string(const std::string& s) {
  if (s == "baseline") return ModelType::baseline;
  if (s == "glm") return ModelType::glm;
  if (s == "mlp") return ModelType::mlp;
  throw std::invalid_argument("unknown model type: '" + s + "'");
}

const char* model_type_to_string(ModelType t) {
  switch (t) {
  case ModelType::baseline: return "baseline";
  case ModelType::glm: return "glm";
  case ModelType::mlp: return "mlp";
  }
  return "?";
}

EvalReport cross_validate(const features::RepresentationSet& rep, ModelType model_type,
                          const EvalConfig& config) {
  std::size_t n = rep.matrix.rows;
  auto plan = kfold_split(n, config.folds, config.seed);

  EvalReport report;
  report.representation = features::representation_to_string(rep.name);
  report.model = model_type_to_string(model_type);
  report.asset_ids = rep.asset_ids;
  report.predictions.assign(n, 0.0);
  report.abs_errors.assign(n, 0.0);
  report.config = config;

  Rng seeder(config.seed);
  for (int fold = 0; fold < config.folds; ++fold) {
    std::vector<std::size_t> train_rows, test_rows;
    for (std::size_t i = 0; i < n; ++i)
      (plan.fold_of[i] == fold ? test_rows : train_rows).push_back(i);

    Matrix train_x(train_rows.size(), rep.matrix.cols);
    std::vector<double> train_y(train_rows.size());
    for (std::size_t i = 0; i < train_rows.size(); ++i) {
      std::copy_n(rep.matrix.row(train_rows[i]), rep.matrix.cols, train_x.row(i));
      train_y[i] = rep.labels[train_rows[i]];
    }
    Matrix test_x(test_rows.size(), rep.matrix.cols);
    for (std::size_t i = 0; i < test_rows.size(); ++i)
      std::copy_n(rep.matrix.row(test_rows[i]), rep.matrix.cols, test_x.row(i));

    if (rep.name == features::Representation::instructor) {
      auto stats = features::zscore_fit(train_x);
      train_x = features::zscore_apply(train_x, stats);
      test_x = features::zscore_apply(test_x, stats);
    }

    models::TrainConfig tc = config.train;
    tc.seed = seeder.fork(static_cast<std::uint64_t>(fold)).next_u64();

    std::vector<double> fold_pred(test_rows.size());
    try {
      switch (model_type) {
      case ModelType::baseline: {
        auto m = models::baseline_fit(train_y);
        std::fill(fold_pred.begin(), fold_pred.end(), m.mean);
        break;
      }
      case ModelType::glm: {
        auto m = models::train_glm(train_x, train_y, tc);
        for (std::size_t i = 0; i < test_rows.size(); ++i) fold_pred[i] = m.predict(test_x.row_span(i));
        break;
      }
      case ModelType::mlp: {
        auto m = models::train_mlp(train_x, train_y, tc, config.hidden);
        for (std::size_t i = 0; i < test_rows.size(); ++i) fold_pred[i] = m.predict(test_x.row_span(i));
        break;
      }
      }
    } catch (const std::exception& e) {
      throw NumericError("fold " + std::to_string(fold) + ": " + e.what());
    }

    std::vector<double> fold_actual(test_rows.size());
    for (std::size_t i = 0; i < test_rows.size(); ++i) {
      fold_actual[i] = rep.labels[test_rows[i]];
      report.predictions[test_rows[i]] = fold_pred[i];
      report.abs_errors[test_rows[i]] = std::abs(fold_pred[i] - fold_actual[i]);
    }
    report.fold_rmse.push_back(rmse(fold_pred, fold_actual));
  }

  double sq = 0;
  for (double e : report.abs_errors) sq += e * e;
  report.overall_rmse = std::sqrt(sq / static_cast<double>(n));
  return report;
}

double rmse(std::span<const double> pred, std::span<const double> actual) {
  if (pred.size() != actual.size()) throw std::invalid_argument("rmse: length mismatch");
  if (pred.empty()) throw std::invalid_argument("rmse: empty input");
  double sq = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    double d = pred[i] - actual[i];
    sq += d * d;
  }
  return std::sqrt(sq / static_cast<double>(pred.size()));
}

namespace {

std::vector<double> average_ranks(std::span<const double> x) {
  std::size_t n = x.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && x[order[j + 1]] == x[order[i]]) ++j;
    double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = avg;
    i = j + 1;
  }
  return ranks;
}

double pearson(std::span<const double> x, std::span<const double> y) {
  std::size_t n = x.size();
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0 || syy == 0)
    throw NumericError("spearman_rho: zero rank variance, correlation undefined");
  return sxy / std::sqrt(sxx * syy);
}

} // namespace

double spearman_rho(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("spearman_rho: length mismatch");
  if (x.size() < 3) throw std::invalid_argument("spearman_rho: need at least 3 points");
  auto rx = average_ranks(x);
  auto ry = average_ranks(y);
  return std::clamp(pearson(rx, ry), -1.0, 1.0);
}

TTestResult ttest_from_differences(std::span<const double> d) {
  std::size_t n = d.size();
  if (n < 2) throw std::invalid_argument("ttest: need at least 2 pairs");
  double mean = 0;
  for (double v : d) mean += v;
  mean /= static_cast<double>(n);
  double ss = 0;
  for (double v : d) ss += (v - mean) * (v - mean);
  double sd = std::sqrt(ss / static_cast<double>(n - 1));
  if (sd == 0) throw NumericError("ttest: zero variance of differences");
  TTestResult r;
  r.df = n - 1;
  r.t = mean / (sd / std::sqrt(static_cast<double>(n)));
  r.p = 2.0 * (1.0 - students_t_cdf(std::abs(r.t), static_cast<double>(r.df)));
  return r;
}

TTestResult paired_ttest(std::span<const double> errors_a, std::span<const double> errors_b) {
  if (errors_a.size() != errors_b.size())
    throw std::invalid_argument("paired_ttest: length mismatch");
  std::vector<double> d(errors_a.size());
  for (std::size_t i = 0; i < d.size(); ++i)
    d[i] = errors_a[i] * errors_a[i] - errors_b[i] * errors_b[i];
  return ttest_from_differences(d);
}

namespace {

double log_beta(double a, double b) { return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b); }

// 1 + d1/(1 + d2/(1 + ...)) with the textbook incomplete-beta terms,
// evaluated by the modified Lentz algorithm
double beta_cf(double x, double a, double b) {
  constexpr double tiny = 1e-300;
  constexpr int max_terms = 200000;
  auto term = [&](int n) -> double {
    if (n % 2 == 0) {
      double m = n / 2;
      return m * (b - m) * x / ((a + 2 * m - 1) * (a + 2 * m));
    }
    double m = (n - 1) / 2;
    return -(a + m) * (a + b + m) * x / ((a + 2 * m) * (a + 2 * m + 1));
  };
  double f = 1.0, c = 1.0, d = 0.0;
  for (int n = 1; n <= max_terms; ++n) {
    double an = term(n);
    d = 1.0 + an * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    double delta = c * d;
    f *= delta;
    if (std::abs(delta - 1.0) < 1e-16) break;
  }
  return f;
}

} // namespace

double regularized_incomplete_beta(double x, double a, double b) {
  if (!(a > 0) || !(b > 0)) throw std::invalid_argument("incomplete beta: a, b must be > 0");
  if (x < 0 || x > 1) throw std::invalid_argument("incomplete beta: x outside [0, 1]");
  if (x == 0) return 0;
  if (x == 1) return 1;
  double front = std::exp(a * std::log(x) + b * std::log1p(-x) - log_beta(a, b));
  if (x < (a + 1) / (a + b + 2)) return front / (a * beta_cf(x, a, b));
  return 1.0 - front / (b * beta_cf(1.0 - x, b, a));
}

double students_t_cdf(double t, double df) {
  if (!(df > 0)) throw std::invalid_argument("students_t_cdf: df must be > 0");
  double x = df / (t * t + df);
  double tail = 0.5 * regularized_incomplete_beta(x, df / 2.0, 0.5);
  return t >= 0 ? 1.0 - tail : tail;
}

KdeCurve abs_error_kde(std::span<const double> errors, std::size_t grid_points) {
  if (errors.empty()) throw std::invalid_argument("abs_error_kde: empty input");
  if (grid_points < 2) throw std::invalid_argument("abs_error_kde: need at least 2 grid points");
  double maxe = 0, mean = 0;
  for (double e : errors) {
    if (e < 0) throw std::invalid_argument("abs_error_kde: negative error");
    maxe = std::max(maxe, e);
    mean += e;
  }
  std::size_t n = errors.size();
  mean /= static_cast<double>(n);
  double var = 0;
  for (double e : errors) var += (e - mean) * (e - mean);
  double sigma = std::sqrt(var / static_cast<double>(n));
  double h = std::max(1.06 * sigma * std::pow(static_cast<double>(n), -0.2), 1e-6);

  KdeCurve curve;
  curve.bandwidth = h;
  double upper = maxe > 0 ? 1.1 * maxe : 1.0;
  curve.grid.resize(grid_points);
  curve.density.resize(grid_points);
  constexpr double inv_sqrt_2pi = 0.3989422804014327;
  for (std::size_t g = 0; g < grid_points; ++g) {
    double x = upper * static_cast<double>(g) / static_cast<double>(grid_points - 1);
    curve.grid[g] = x;
    double sum = 0;
    for (double e : errors) {
      double z = (x - e) / h;
      sum += std::exp(-0.5 * z * z);
    }
    curve.density[g] = sum * inv_sqrt_2pi / (static_cast<double>(n) * h);
  }
  return curve;
}

void save_report(std::ostream& out, const EvalReport& report) {
  json j = {{"representation", report.representation},
            {"model", report.model},
            {"fold_rmse", report.fold_rmse},
            {"overall_rmse", report.overall_rmse},
            {"asset_ids", report.asset_ids},
            {"predictions", report.predictions},
            {"abs_errors", report.abs_errors},
            {"config",
             {{"folds", report.config.folds},
              {"hidden", report.config.hidden},
              {"learning_rate", report.config.train.learning_rate},
              {"max_epochs", report.config.train.max_epochs},
              {"patience", report.config.train.patience},
              {"seed", report.config.seed}}}};
  out << j.dump(2) << '\n';
}

void save_kde_csv(std::ostream& out, const KdeCurve& curve) {
  out << "x,density\n";
  for (std::size_t i = 0; i < curve.grid.size(); ++i)
    out << csv::format_double(curve.grid[i]) << ',' << csv::format_double(curve.density[i])
        << '\n';
}

} // namespace a2v::eval

#include <doctest.h>

#include "core/error.hpp"
#include "core/eval.hpp"
#include "core/rng.hpp"
#include "core/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

using namespace a2v;
using namespace a2v::eval;

TEST_CASE("kfold_split partitions into near-equal folds deterministically") {
  SUBCASE("even split") {
    auto plan = kfold_split(10, 5, 3);
    std::vector<int> sizes(5, 0);
    for (int f : plan.fold_of) ++sizes[f];
    for (int s : sizes) CHECK(s == 2);
  }
  SUBCASE("remainder spreads one extra row") {
    auto plan = kfold_split(11, 5, 3);
    std::vector<int> sizes(5, 0);
    for (int f : plan.fold_of) ++sizes[f];
    std::sort(sizes.begin(), sizes.end());
    CHECK(sizes == std::vector<int>{2, 2, 2, 2, 3});
  }
  SUBCASE("same seed, same plan") {
    CHECK(kfold_split(37, 5, 9).fold_of == kfold_split(37, 5, 9).fold_of);
  }
  SUBCASE("n below k is an error") { CHECK_THROWS_AS(kfold_split(3, 5, 1), std::invalid_argument); }
}

namespace {

features::RepresentationSet planted_set(std::size_t n, std::size_t p, std::uint64_t seed,
                                        bool with_signal) {
  auto w = std::vector<double>(p, 0.0);
  if (with_signal)
    for (std::size_t j = 0; j < p; ++j) w[j] = (j % 2 ? -0.6 : 0.6);
  auto draw = synth::make_poisson_regression(n, w, 1.2, seed);
  features::RepresentationSet set;
  set.name = features::Representation::asset2vec;
  set.matrix = std::move(draw.x);
  set.labels = std::move(draw.y);
  for (std::size_t i = 0; i < n; ++i) set.asset_ids.push_back("a" + std::to_string(i));
  return set;
}

} // namespace

TEST_CASE("cross_validate baseline on constant labels has zero RMSE") {
  auto set = planted_set(25, 3, 2, false);
  std::fill(set.labels.begin(), set.labels.end(), 4.0);
  EvalConfig config;
  config.folds = 5;
  auto report = cross_validate(set, ModelType::baseline, config);
  for (double r : report.fold_rmse) CHECK(r == doctest::Approx(0.0));
  CHECK(report.overall_rmse == doctest::Approx(0.0));
}

TEST_CASE("cross_validate baseline matches a hand-rolled CV loop") {
  auto set = planted_set(53, 3, 8, true);
  EvalConfig config;
  config.folds = 5;
  config.seed = 17;
  auto report = cross_validate(set, ModelType::baseline, config);

  auto plan = kfold_split(53, 5, 17);
  std::vector<double> pooled_sq(53);
  for (int fold = 0; fold < 5; ++fold) {
    double mean = 0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < 53; ++i)
      if (plan.fold_of[i] != fold) {
        mean += set.labels[i];
        ++count;
      }
    mean /= static_cast<double>(count);
    for (std::size_t i = 0; i < 53; ++i)
      if (plan.fold_of[i] == fold)
        pooled_sq[i] = (mean - set.labels[i]) * (mean - set.labels[i]);
  }
  double expected = std::sqrt(std::accumulate(pooled_sq.begin(), pooled_sq.end(), 0.0) / 53.0);
  CHECK(report.overall_rmse == doctest::Approx(expected).epsilon(1e-12));
  for (std::size_t i = 0; i < 53; ++i)
    CHECK(report.abs_errors[i] == doctest::Approx(std::sqrt(pooled_sq[i])).epsilon(1e-12));
}

TEST_CASE("cross_validate attaches the fold index to training failures") {
  auto set = planted_set(40, 3, 4, true);
  EvalConfig config;
  config.folds = 5;
  config.train.learning_rate = 1e9; // guaranteed divergence
  CHECK_THROWS_WITH_AS(cross_validate(set, ModelType::glm, config), doctest::Contains("fold"),
                       NumericError);
}

TEST_CASE("glm on planted-signal features beats the mean baseline") {
  auto set = planted_set(300, 4, 5, true);
  EvalConfig config;
  config.folds = 5;
  config.seed = 4;
  config.train.learning_rate = 0.1;
  config.train.max_epochs = 2000;
  config.train.patience = 50;
  auto glm = cross_validate(set, ModelType::glm, config);
  auto base = cross_validate(set, ModelType::baseline, config);
  CHECK(glm.overall_rmse < base.overall_rmse * 0.95);
  CHECK(glm.fold_rmse.size() == 5);
  CHECK(glm.abs_errors.size() == 300);
}

TEST_CASE("rmse hand values and symmetry") {
  CHECK(rmse(std::vector<double>{1, 2, 3}, std::vector<double>{1, 2, 3}) == doctest::Approx(0.0));
  CHECK(rmse(std::vector<double>{0, 0}, std::vector<double>{3, 4}) ==
        doctest::Approx(5.0 / std::sqrt(2.0)));
  CHECK(rmse(std::vector<double>{2}, std::vector<double>{5}) == doctest::Approx(3.0));
  Rng rng(3);
  std::vector<double> a(10), b(10);
  for (int i = 0; i < 10; ++i) {
    a[i] = rng.uniform(-5, 5);
    b[i] = rng.uniform(-5, 5);
  }
  CHECK(rmse(a, b) == doctest::Approx(rmse(b, a)));
  CHECK_THROWS_AS(rmse(a, std::vector<double>{1.0}), std::invalid_argument);
}

namespace {

// rank-by-sorting oracle with average ranks for ties
std::vector<double> oracle_ranks(const std::vector<double>& x) {
  std::vector<double> sorted = x;
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> ranks(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    auto lo = std::lower_bound(sorted.begin(), sorted.end(), x[i]) - sorted.begin();
    auto hi = std::upper_bound(sorted.begin(), sorted.end(), x[i]) - sorted.begin();
    ranks[i] = (static_cast<double>(lo) + static_cast<double>(hi - 1)) / 2.0 + 1.0;
  }
  return ranks;
}

double oracle_pearson(const std::vector<double>& x, const std::vector<double>& y) {
  double mx = std::accumulate(x.begin(), x.end(), 0.0) / x.size();
  double my = std::accumulate(y.begin(), y.end(), 0.0) / y.size();
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

} // namespace

TEST_CASE("spearman_rho endpoints and error cases") {
  std::vector<double> x = {1, 2, 3, 4, 5};
  std::vector<double> rev = {5, 4, 3, 2, 1};
  CHECK(spearman_rho(x, x) == doctest::Approx(1.0));
  CHECK(spearman_rho(x, rev) == doctest::Approx(-1.0));
  CHECK_THROWS_AS(spearman_rho(std::vector<double>{1, 1, 1}, x = {1, 2, 3}), NumericError);
  CHECK_THROWS_AS(spearman_rho(std::vector<double>{1, 2}, std::vector<double>{2, 1}),
                  std::invalid_argument);
}

TEST_CASE("spearman_rho handles ties like the average-rank oracle") {
  std::vector<double> x = {3, 1, 4, 1, 5, 9};
  std::vector<double> y = {2, 7, 1, 8, 2, 8};
  double expected = oracle_pearson(oracle_ranks(x), oracle_ranks(y));
  CHECK(spearman_rho(x, y) == doctest::Approx(expected).epsilon(1e-12));

  Rng rng(10);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<double> a(12), b(12);
    for (int i = 0; i < 12; ++i) {
      a[i] = static_cast<double>(rng.below(6)); // plenty of ties
      b[i] = static_cast<double>(rng.below(6));
    }
    if (std::set<double>(a.begin(), a.end()).size() < 2) continue;
    if (std::set<double>(b.begin(), b.end()).size() < 2) continue;
    double oracle = oracle_pearson(oracle_ranks(a), oracle_ranks(b));
    CHECK(spearman_rho(a, b) == doctest::Approx(oracle).epsilon(1e-12));
  }
}

TEST_CASE("spearman_rho is invariant under strictly monotone transforms") {
  Rng rng(44);
  std::vector<double> x(15), y(15);
  for (int i = 0; i < 15; ++i) {
    x[i] = rng.uniform(-3, 3);
    y[i] = rng.uniform(-3, 3);
  }
  double base = spearman_rho(x, y);
  std::vector<double> cubed = x, exped = y;
  for (double& v : cubed) v = v * v * v + 2 * v;
  for (double& v : exped) v = std::exp(v);
  CHECK(spearman_rho(cubed, y) == doctest::Approx(base).epsilon(1e-12));
  CHECK(spearman_rho(x, exped) == doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("paired_ttest over squared-error differences") {
  SUBCASE("identical errors have zero variance") {
    std::vector<double> e = {1, 2, 3, 4};
    CHECK_THROWS_AS(paired_ttest(e, e), NumericError);
  }
  SUBCASE("symmetric differences give t = 0, p = 1") {
    // squared-error differences are [1, -1, 1, -1]
    std::vector<double> a = {std::sqrt(2.0), 1.0, std::sqrt(2.0), 1.0};
    std::vector<double> b = {1.0, std::sqrt(2.0), 1.0, std::sqrt(2.0)};
    auto r = paired_ttest(a, b);
    CHECK(r.t == doctest::Approx(0.0));
    CHECK(r.p == doctest::Approx(1.0));
  }
  SUBCASE("textbook formula on a fixed difference vector") {
    std::vector<double> d = {2, 1, 3, 2, 4};
    auto r = ttest_from_differences(d);
    double mean = 2.4;
    double sd = std::sqrt(((0.4 * 0.4) + (1.4 * 1.4) + (0.6 * 0.6) + (0.4 * 0.4) + (1.6 * 1.6)) /
                          4.0);
    CHECK(r.t == doctest::Approx(mean / (sd / std::sqrt(5.0))).epsilon(1e-6));
    CHECK(r.df == 4);
    CHECK(r.p > 0);
    CHECK(r.p < 0.1);
  }
  SUBCASE("antisymmetric under swapping the inputs") {
    std::vector<double> a = {0.5, 2.5, 1.0, 3.0, 0.25};
    std::vector<double> b = {1.5, 0.5, 2.0, 1.0, 1.25};
    auto ab = paired_ttest(a, b);
    auto ba = paired_ttest(b, a);
    CHECK(ab.t == doctest::Approx(-ba.t));
    CHECK(ab.p == doctest::Approx(ba.p));
  }
}

namespace {

// Simpson integration of the t density, the numeric oracle for the CDF
double t_pdf(double x, double v) {
  double c = std::lgamma((v + 1) / 2) - std::lgamma(v / 2) - 0.5 * std::log(v * M_PI);
  return std::exp(c - (v + 1) / 2 * std::log1p(x * x / v));
}

double t_cdf_by_integration(double t, double v) {
  double lo = 0, hi = std::abs(t);
  const int steps = 20000; // even
  double h = (hi - lo) / steps;
  double acc = t_pdf(lo, v) + t_pdf(hi, v);
  for (int i = 1; i < steps; ++i) acc += t_pdf(lo + i * h, v) * (i % 2 ? 4.0 : 2.0);
  double integral = acc * h / 3.0;
  return t >= 0 ? 0.5 + integral : 0.5 - integral;
}

} // namespace

TEST_CASE("students_t_cdf matches numerical integration of the density") {
  for (double v : {1.0, 2.0, 4.0, 9.0, 29.0, 120.0}) {
    for (double t : {0.0, 0.31, 1.0, 2.05, 3.352, 5.786, -1.3, -2.7}) {
      CHECK(students_t_cdf(t, v) == doctest::Approx(t_cdf_by_integration(t, v)).epsilon(1e-8));
    }
  }
  CHECK(students_t_cdf(0.0, 7.0) == doctest::Approx(0.5));
}

TEST_CASE("regularized incomplete beta basics") {
  CHECK(regularized_incomplete_beta(0.0, 2.0, 3.0) == 0.0);
  CHECK(regularized_incomplete_beta(1.0, 2.0, 3.0) == 1.0);
  // I_x(1,1) = x
  for (double x : {0.1, 0.5, 0.9})
    CHECK(regularized_incomplete_beta(x, 1.0, 1.0) == doctest::Approx(x).epsilon(1e-12));
  // symmetry: I_x(a,b) = 1 - I_{1-x}(b,a)
  CHECK(regularized_incomplete_beta(0.3, 2.5, 4.5) ==
        doctest::Approx(1.0 - regularized_incomplete_beta(0.7, 4.5, 2.5)).epsilon(1e-12));
  CHECK_THROWS_AS(regularized_incomplete_beta(-0.1, 1, 1), std::invalid_argument);
}

TEST_CASE("abs_error_kde matches a direct kernel sum") {
  Rng rng(26);
  std::vector<double> errors(100);
  for (double& e : errors) e = std::abs(rng.normal()) * 2.0;
  auto curve = abs_error_kde(errors);
  REQUIRE(curve.grid.size() == 256);

  // recompute from the published formula
  double mean = std::accumulate(errors.begin(), errors.end(), 0.0) / errors.size();
  double var = 0;
  for (double e : errors) var += (e - mean) * (e - mean);
  double sigma = std::sqrt(var / errors.size());
  double h = std::max(1.06 * sigma * std::pow(100.0, -0.2), 1e-6);
  CHECK(curve.bandwidth == doctest::Approx(h).epsilon(1e-12));
  for (std::size_t g = 0; g < curve.grid.size(); ++g) {
    double sum = 0;
    for (double e : errors) {
      double z = (curve.grid[g] - e) / h;
      sum += std::exp(-0.5 * z * z) / std::sqrt(2.0 * M_PI);
    }
    CHECK(std::abs(curve.density[g] - sum / (errors.size() * h)) <= 1e-10);
  }

  // trapezoid mass on the grid loses only the tail below zero
  double mass = 0;
  for (std::size_t g = 1; g < curve.grid.size(); ++g)
    mass += 0.5 * (curve.density[g] + curve.density[g - 1]) * (curve.grid[g] - curve.grid[g - 1]);
  CHECK(mass >= 0.9);
  CHECK(mass <= 1.0 + 1e-9);
}

TEST_CASE("abs_error_kde edge cases") {
  SUBCASE("single value peaks at that value") {
    // zero is always on the grid, so the floored-bandwidth spike is visible
    auto at_zero = abs_error_kde(std::vector<double>{0.0}, 128);
    auto peak = std::max_element(at_zero.density.begin(), at_zero.density.end());
    CHECK(at_zero.grid[peak - at_zero.density.begin()] == 0.0);
    CHECK(*peak > 0);
    // a slightly spread sample keeps a resolvable bandwidth: still unimodal
    auto spread = abs_error_kde(std::vector<double>{1.9, 2.0, 2.1}, 128);
    auto p2 = std::max_element(spread.density.begin(), spread.density.end());
    CHECK(std::abs(spread.grid[p2 - spread.density.begin()] - 2.0) < 0.05);
    for (auto it = spread.density.begin(); it != p2; ++it) CHECK(*it <= *(it + 1) + 1e-12);
    for (auto it = p2; it + 1 != spread.density.end(); ++it) CHECK(*it >= *(it + 1) - 1e-12);
  }
  SUBCASE("identical values fall back to the bandwidth floor") {
    auto curve = abs_error_kde(std::vector<double>{1.5, 1.5, 1.5});
    CHECK(curve.bandwidth == doctest::Approx(1e-6));
    for (double d : curve.density) CHECK(std::isfinite(d));
  }
  SUBCASE("negative errors are rejected") {
    CHECK_THROWS_AS(abs_error_kde(std::vector<double>{-1.0}), std::invalid_argument);
  }
}

TEST_CASE("report and KDE exports are well formed") {
  auto set = planted_set(20, 2, 6, false);
  EvalConfig config;
  config.folds = 4;
  auto report = cross_validate(set, ModelType::baseline, config);
  std::ostringstream out;
  save_report(out, report);
  CHECK(out.str().find("\"overall_rmse\"") != std::string::npos);
  CHECK(out.str().find("\"fold_rmse\"") != std::string::npos);

  auto curve = abs_error_kde(report.abs_errors);
  std::ostringstream kde;
  save_kde_csv(kde, curve);
  CHECK(kde.str().rfind("x,density\n", 0) == 0);
}

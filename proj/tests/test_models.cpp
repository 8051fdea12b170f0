#include <doctest.h>

#include "core/error.hpp"
#include "core/models.hpp"
#include "core/rng.hpp"
#include "core/synth.hpp"

#include <cmath>
#include <sstream>

using namespace a2v;
using namespace a2v::models;

TEST_CASE("poisson_loss hand values") {
  CHECK(poisson_loss(std::vector<double>{1.0}, std::vector<double>{0.0}) == doctest::Approx(1.0));
  double e = std::exp(1.0);
  CHECK(poisson_loss(std::vector<double>{e}, std::vector<double>{1.0}) ==
        doctest::Approx(e - 1.0));
  CHECK_THROWS_AS(poisson_loss(std::vector<double>{1.0, 2.0}, std::vector<double>{1.0}),
                  std::invalid_argument);
}

TEST_CASE("poisson_loss is minimized elementwise at the label") {
  Rng rng(6);
  for (int trial = 0; trial < 100; ++trial) {
    double y = 0.5 + rng.uniform() * 10;
    double at_label = poisson_loss(std::vector<double>{y}, std::vector<double>{y});
    double other = std::max(1e-6, y + rng.uniform(-0.5, 4.0) * (rng.uniform() < 0.5 ? -1 : 1));
    CHECK(at_label <= poisson_loss(std::vector<double>{other}, std::vector<double>{y}) + 1e-12);
  }
}

TEST_CASE("glm_predict is exp of the linear score") {
  PoissonGLM zero;
  zero.weights = {0.0, 0.0};
  CHECK(zero.predict(std::vector<double>{3.0, -4.0}) == doctest::Approx(1.0));

  PoissonGLM m;
  m.weights = {1.0, 0.0};
  CHECK(m.predict(std::vector<double>{std::log(3.0), 7.0}) == doctest::Approx(3.0));

  SUBCASE("random model matches a scalar oracle") {
    Rng rng(4);
    PoissonGLM r;
    r.weights = {rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
    r.bias = rng.uniform(-1, 1);
    for (int i = 0; i < 20; ++i) {
      std::vector<double> x = {rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2)};
      double score = r.bias;
      for (int j = 0; j < 3; ++j) score += r.weights[j] * x[j];
      CHECK(r.predict(x) == doctest::Approx(std::exp(score)).epsilon(1e-12));
      CHECK(r.predict(x) > 0);
    }
  }
}

TEST_CASE("glm gradient matches central finite differences") {
  Rng rng(15);
  Matrix x(6, 3);
  std::vector<double> y(6);
  for (double& v : x.data) v = rng.uniform(-1, 1);
  for (double& v : y) v = static_cast<double>(rng.below(6));
  PoissonGLM model;
  model.weights = {rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
  model.bias = rng.uniform(-1, 1);

  auto analytic = glm_loss_gradient(model, x, y);
  auto params = flatten(model);
  const double h = 1e-5;
  double num = 0, den = 0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto probe = [&](double delta) {
      auto p = params;
      p[i] += delta;
      PoissonGLM m = model;
      unflatten(p, m);
      std::vector<double> pred(x.rows);
      for (std::size_t r = 0; r < x.rows; ++r) pred[r] = m.predict(x.row_span(r));
      return poisson_loss(pred, y);
    };
    double fd = (probe(h) - probe(-h)) / (2 * h);
    num += (analytic[i] - fd) * (analytic[i] - fd);
    den += fd * fd;
  }
  CHECK(std::sqrt(num / den) < 1e-4);
}

TEST_CASE("intercept-only glm converges to log of the label mean") {
  SUBCASE("uniform labels: every subset has the same mean") {
    Matrix x(40, 1); // all-zero feature column
    std::vector<double> y(40, 4.0);
    TrainConfig config;
    config.learning_rate = 0.2;
    config.max_epochs = 4000;
    config.patience = 200;
    config.seed = 2;
    auto model = train_glm(x, y, config);
    CHECK(model.predict(std::vector<double>{0.0}) == doctest::Approx(4.0).epsilon(1e-3));
    CHECK(model.bias == doctest::Approx(std::log(4.0)).epsilon(1e-3));
  }
  SUBCASE("mixed labels balanced across the internal split") {
    // alternate 2 and 6 within each subset so train, validation and the
    // whole set share mean 4 and early stopping cannot move the target
    TrainConfig config;
    config.learning_rate = 0.2;
    config.max_epochs = 8000;
    config.patience = 400;
    config.seed = 2;
    Matrix x(40, 1);
    std::vector<double> y(40);
    auto split = validation_split(40, config.seed);
    for (std::size_t i = 0; i < split.train.size(); ++i) y[split.train[i]] = i % 2 ? 2.0 : 6.0;
    for (std::size_t i = 0; i < split.validation.size(); ++i)
      y[split.validation[i]] = i % 2 ? 2.0 : 6.0;
    auto model = train_glm(x, y, config);
    CHECK(model.bias == doctest::Approx(std::log(4.0)).epsilon(1e-3));
  }
}

TEST_CASE("train_glm recovers planted coefficients") {
  std::vector<double> w_star = {0.6, -0.4, 0.5, 0.3, -0.35};
  auto draw = synth::make_poisson_regression(2000, w_star, 0.8, 77);
  TrainConfig config;
  config.learning_rate = 0.1;
  config.max_epochs = 4000;
  config.patience = 100;
  config.seed = 3;
  auto model = train_glm(draw.x, draw.y, config);
  double err2 = (model.bias - 0.8) * (model.bias - 0.8);
  for (std::size_t j = 0; j < w_star.size(); ++j)
    err2 += (model.weights[j] - w_star[j]) * (model.weights[j] - w_star[j]);
  CHECK(std::sqrt(err2) < 0.1);
}

TEST_CASE("train_glm is deterministic and detects divergence") {
  auto draw = synth::make_poisson_regression(60, std::vector<double>{0.5, -0.5}, 0.5, 5);
  TrainConfig config;
  config.seed = 11;
  auto a = train_glm(draw.x, draw.y, config);
  auto b = train_glm(draw.x, draw.y, config);
  CHECK(a.weights == b.weights);
  CHECK(a.bias == b.bias);

  TrainConfig wild = config;
  wild.learning_rate = 1e6;
  CHECK_THROWS_WITH_AS(train_glm(draw.x, draw.y, wild), doctest::Contains("learning_rate"),
                       NumericError);
}

TEST_CASE("mlp_predict forward pass") {
  MLPModel zero;
  zero.inputs = 2;
  zero.hidden = 3;
  zero.w1 = Matrix(2, 3);
  zero.b1 = {0, 0, 0};
  zero.w2 = {0, 0, 0};
  CHECK(zero.predict(std::vector<double>{1.0, -1.0}) == doctest::Approx(1.0));

  MLPModel m;
  m.inputs = 1;
  m.hidden = 1;
  m.w1 = Matrix(1, 1);
  m.b1 = {0.0};
  m.w2 = {1.0};
  m.b2 = std::log(2.0);
  CHECK(m.predict(std::vector<double>{5.0}) == doctest::Approx(2.0)); // tanh(0) = 0

  SUBCASE("random model matches a layer-by-layer oracle") {
    Rng rng(9);
    MLPModel r;
    r.inputs = 3;
    r.hidden = 2;
    r.w1 = Matrix(3, 2);
    for (double& v : r.w1.data) v = rng.uniform(-1, 1);
    r.b1 = {rng.uniform(-1, 1), rng.uniform(-1, 1)};
    r.w2 = {rng.uniform(-1, 1), rng.uniform(-1, 1)};
    r.b2 = rng.uniform(-1, 1);
    for (int trial = 0; trial < 10; ++trial) {
      std::vector<double> x = {rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2)};
      double h0 = std::tanh(x[0] * r.w1.at(0, 0) + x[1] * r.w1.at(1, 0) + x[2] * r.w1.at(2, 0) +
                            r.b1[0]);
      double h1 = std::tanh(x[0] * r.w1.at(0, 1) + x[1] * r.w1.at(1, 1) + x[2] * r.w1.at(2, 1) +
                            r.b1[1]);
      double expected = std::exp(r.w2[0] * h0 + r.w2[1] * h1 + r.b2);
      CHECK(r.predict(x) == doctest::Approx(expected).epsilon(1e-12));
      CHECK(r.predict(x) > 0);
    }
  }
}

TEST_CASE("mlp gradient matches central finite differences") {
  Rng rng(23);
  Matrix x(5, 3);
  std::vector<double> y(5);
  for (double& v : x.data) v = rng.uniform(-1, 1);
  for (double& v : y) v = static_cast<double>(rng.below(5));
  MLPModel model;
  model.inputs = 3;
  model.hidden = 2;
  model.w1 = Matrix(3, 2);
  for (double& v : model.w1.data) v = rng.uniform(-0.7, 0.7);
  model.b1 = {rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5)};
  model.w2 = {rng.uniform(-0.7, 0.7), rng.uniform(-0.7, 0.7)};
  model.b2 = rng.uniform(-0.5, 0.5);

  auto analytic = mlp_loss_gradient(model, x, y);
  auto params = flatten(model);
  const double h = 1e-5;
  double num = 0, den = 0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto probe = [&](double delta) {
      auto p = params;
      p[i] += delta;
      MLPModel m = model;
      unflatten(p, m);
      std::vector<double> pred(x.rows);
      for (std::size_t r = 0; r < x.rows; ++r) pred[r] = m.predict(x.row_span(r));
      return poisson_loss(pred, y);
    };
    double fd = (probe(h) - probe(-h)) / (2 * h);
    num += (analytic[i] - fd) * (analytic[i] - fd);
    den += fd * fd;
  }
  CHECK(std::sqrt(num / den) < 1e-4);
}

TEST_CASE("mlp on constant features reduces to fitting the mean") {
  Matrix x(30, 2); // all zeros
  std::vector<double> y(30);
  Rng rng(31);
  for (double& v : y) v = static_cast<double>(rng.poisson(3.0));

  TrainConfig config;
  config.learning_rate = 0.2;
  config.max_epochs = 4000;
  config.patience = 200;
  config.seed = 7;
  TrainInfo info;
  auto model = train_mlp(x, y, config, 4, &info);

  // with constant inputs the model can only express a constant, so its best
  // validation loss must land between the validation-optimal constant and
  // the intercept-only mean fit of the training rows
  auto split = validation_split(30, config.seed);
  std::vector<double> y_val;
  for (std::size_t i : split.validation) y_val.push_back(y[i]);
  double train_mean = 0;
  for (std::size_t i : split.train) train_mean += y[i];
  train_mean /= static_cast<double>(split.train.size());
  double mean_fit_val = poisson_loss(std::vector<double>(y_val.size(), train_mean), y_val);
  double val_mean = 0;
  for (double v : y_val) val_mean += v;
  val_mean /= static_cast<double>(y_val.size());
  double val_optimum = poisson_loss(std::vector<double>(y_val.size(), val_mean), y_val);

  CHECK(info.best_validation_loss <= mean_fit_val + 1e-3);
  CHECK(info.best_validation_loss >= val_optimum - 1e-9);
}

TEST_CASE("train_mlp is deterministic for a fixed seed") {
  auto draw = synth::make_poisson_regression(50, std::vector<double>{0.4, -0.3}, 0.6, 13);
  TrainConfig config;
  config.max_epochs = 300;
  config.seed = 21;
  auto a = train_mlp(draw.x, draw.y, config, 3);
  auto b = train_mlp(draw.x, draw.y, config, 3);
  CHECK(a.w1.data == b.w1.data);
  CHECK(a.b1 == b.b1);
  CHECK(a.w2 == b.w2);
  CHECK(a.b2 == b.b2);
}

TEST_CASE("baseline predicts the training mean") {
  CHECK(baseline_fit(std::vector<double>{2.0, 4.0}).mean == doctest::Approx(3.0));
  CHECK(baseline_fit(std::vector<double>{5.0}).mean == doctest::Approx(5.0));
  CHECK_THROWS_AS(baseline_fit(std::vector<double>{}), std::invalid_argument);
}

TEST_CASE("the training mean minimizes the Poisson loss among constants") {
  Rng rng(12);
  std::vector<double> y(25);
  for (double& v : y) v = static_cast<double>(rng.poisson(5.0));
  double mean = baseline_fit(y).mean;
  auto loss_at = [&](double c) {
    return poisson_loss(std::vector<double>(y.size(), c), y);
  };
  double best = loss_at(mean);
  for (double c = 0.25; c < 15.0; c += 0.25) CHECK(best <= loss_at(c) + 1e-12);
  // derivative check: d/dc [c - y log c] = 1 - mean/c vanishes at c = mean
  double h = 1e-6;
  CHECK(std::abs((loss_at(mean + h) - loss_at(mean - h)) / (2 * h)) < 1e-6);
}

TEST_CASE("model JSON round-trips all three variants") {
  SUBCASE("glm") {
    PoissonGLM m;
    m.weights = {0.25, -1.5};
    m.bias = 0.75;
    TrainInfo info{120, 0.5, 0.6};
    std::ostringstream out;
    save_glm(out, m, info);
    std::istringstream in(out.str());
    auto loaded = load_model(in);
    CHECK(loaded.variant == "glm");
    CHECK(loaded.glm.weights == m.weights);
    CHECK(loaded.glm.bias == m.bias);
    CHECK(loaded.predict(std::vector<double>{1.0, 1.0}) ==
          doctest::Approx(m.predict(std::vector<double>{1.0, 1.0})));
  }
  SUBCASE("mlp") {
    MLPModel m;
    m.inputs = 2;
    m.hidden = 2;
    m.w1 = Matrix(2, 2);
    m.w1.data = {0.1, 0.2, 0.3, 0.4};
    m.b1 = {0.5, -0.5};
    m.w2 = {1.0, -1.0};
    m.b2 = 0.25;
    std::ostringstream out;
    save_mlp(out, m, TrainInfo{});
    std::istringstream in(out.str());
    auto loaded = load_model(in);
    CHECK(loaded.variant == "mlp");
    CHECK(loaded.mlp.w1.data == m.w1.data);
    CHECK(loaded.predict(std::vector<double>{0.3, -0.8}) ==
          doctest::Approx(m.predict(std::vector<double>{0.3, -0.8})));
  }
  SUBCASE("baseline") {
    std::ostringstream out;
    save_baseline(out, ConstantModel{4.25});
    std::istringstream in(out.str());
    auto loaded = load_model(in);
    CHECK(loaded.variant == "baseline");
    CHECK(loaded.baseline.mean == 4.25);
  }
  SUBCASE("unknown variant is a parse error") {
    std::istringstream in("{\"variant\": \"forest\"}");
    CHECK_THROWS_AS(load_model(in), ParseError);
  }
}

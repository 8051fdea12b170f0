#include "models.hpp"

#include "error.hpp"
#include "rng.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <ostream>

namespace a2v::models {

using nlohmann::json;

namespace {

constexpr double kLossClamp = 1e-10;

void check_prediction(double y) {
  if (!std::isfinite(y)) throw NumericError("prediction is non-finite");
}

} // namespace

double poisson_loss(std::span<const double> predictions, std::span<const double> labels) {
  if (predictions.size() != labels.size())
    throw std::invalid_argument("poisson_loss: length mismatch");
  if (predictions.empty()) throw std::invalid_argument("poisson_loss: empty input");
  double total = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    double p = std::max(predictions[i], kLossClamp);
    total += p - labels[i] * std::log(p);
  }
  return total / static_cast<double>(predictions.size());
}

double PoissonGLM::predict(std::span<const double> x) const {
  if (x.size() != weights.size()) throw std::invalid_argument("glm_predict: width mismatch");
  double y = std::exp(dot(weights, x) + bias);
  check_prediction(y);
  return y;
}

double MLPModel::predict(std::span<const double> x) const {
  if (x.size() != inputs) throw std::invalid_argument("mlp_predict: width mismatch");
  double s = b2;
  for (std::size_t j = 0; j < hidden; ++j) {
    double a = b1[j];
    for (std::size_t i = 0; i < inputs; ++i) a += x[i] * w1.at(i, j);
    s += w2[j] * std::tanh(a);
  }
  double y = std::exp(s);
  check_prediction(y);
  return y;
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0)) throw std::invalid_argument("train config: learning_rate <= 0");
  if (max_epochs < 1) throw std::invalid_argument("train config: max_epochs < 1");
  if (patience < 1) throw std::invalid_argument("train config: patience < 1");
}

ValidationSplit validation_split(std::size_t n, std::uint64_t seed) {
  if (n < 2) throw std::invalid_argument("validation_split: need at least 2 rows");
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(seed);
  rng.shuffle(order);
  std::size_t n_val = std::max<std::size_t>(1, n / 5);
  if (n_val >= n) n_val = n - 1;
  ValidationSplit s;
  s.train.assign(order.begin(), order.end() - n_val);
  s.validation.assign(order.end() - n_val, order.end());
  return s;
}

namespace {

double subset_loss(const auto& model, const Matrix& x, std::span<const double> y,
                   const std::vector<std::size_t>& rows) {
  std::vector<double> pred, lab;
  pred.reserve(rows.size());
  lab.reserve(rows.size());
  for (std::size_t i : rows) {
    pred.push_back(model.predict(x.row_span(i)));
    lab.push_back(y[i]);
  }
  return poisson_loss(pred, lab);
}

// Shared early-stopping driver: `step` applies one full-batch update over
// the training rows, `params`/`restore` snapshot the best state.
template <typename Model>
Model descend(Model model, const Matrix& x, std::span<const double> y, const TrainConfig& config,
              TrainInfo* info,
              const std::function<void(Model&, const std::vector<std::size_t>&, double)>& step) {
  auto split = validation_split(x.rows, config.seed);
  Model best = model;
  double best_val = subset_loss(model, x, y, split.validation);
  int best_epoch = 0;
  int epoch = 0;
  double train_loss = 0;
  for (epoch = 1; epoch <= config.max_epochs; ++epoch) {
    double val_loss;
    try {
      step(model, split.train, config.learning_rate);
      train_loss = subset_loss(model, x, y, split.train);
      if (!std::isfinite(train_loss)) throw NumericError("loss is non-finite");
      val_loss = subset_loss(model, x, y, split.validation);
    } catch (const NumericError&) {
      throw NumericError("training diverged at epoch " + std::to_string(epoch) +
                         "; try a smaller learning_rate");
    }
    if (val_loss < best_val) {
      best_val = val_loss;
      best = model;
      best_epoch = epoch;
    }
    if (epoch - best_epoch >= config.patience) break;
  }
  if (info) {
    info->epochs_run = std::min(epoch, config.max_epochs);
    info->final_train_loss = train_loss;
    info->best_validation_loss = best_val;
  }
  return best;
}

} // namespace

PoissonGLM train_glm(const Matrix& x, std::span<const double> y, const TrainConfig& config,
                     TrainInfo* info) {
  config.validate();
  if (x.rows < 2) throw std::invalid_argument("train_glm: need at least 2 rows");
  if (x.rows != y.size()) throw std::invalid_argument("train_glm: label count mismatch");

  PoissonGLM model;
  model.weights.resize(x.cols);
  Rng rng(config.seed);
  double scale = x.cols > 0 ? 1.0 / std::sqrt(static_cast<double>(x.cols)) : 1.0;
  for (double& w : model.weights) w = rng.uniform(-scale, scale);

  auto step = [&](PoissonGLM& m, const std::vector<std::size_t>& rows, double lr) {
    std::vector<double> gw(m.weights.size(), 0.0);
    double gb = 0;
    for (std::size_t i : rows) {
      const double* xi = x.row(i);
      double resid = m.predict(x.row_span(i)) - y[i];
      for (std::size_t j = 0; j < gw.size(); ++j) gw[j] += resid * xi[j];
      gb += resid;
    }
    double inv_n = 1.0 / static_cast<double>(rows.size());
    for (std::size_t j = 0; j < gw.size(); ++j) m.weights[j] -= lr * gw[j] * inv_n;
    m.bias -= lr * gb * inv_n;
  };
  return descend<PoissonGLM>(std::move(model), x, y, config, info, step);
}

MLPModel train_mlp(const Matrix& x, std::span<const double> y, const TrainConfig& config,
                   std::size_t hidden, TrainInfo* info) {
  config.validate();
  if (hidden < 1) throw std::invalid_argument("train_mlp: hidden < 1");
  if (x.rows < 2) throw std::invalid_argument("train_mlp: need at least 2 rows");
  if (x.rows != y.size()) throw std::invalid_argument("train_mlp: label count mismatch");

  MLPModel model;
  model.inputs = x.cols;
  model.hidden = hidden;
  model.w1 = Matrix(x.cols, hidden);
  model.b1.assign(hidden, 0.0);
  model.w2.assign(hidden, 0.0);
  Rng rng(config.seed);
  double in_scale = x.cols > 0 ? 1.0 / std::sqrt(static_cast<double>(x.cols)) : 1.0;
  for (double& w : model.w1.data) w = rng.uniform(-in_scale, in_scale);
  double out_scale = 1.0 / std::sqrt(static_cast<double>(hidden));
  for (double& w : model.w2) w = rng.uniform(-out_scale, out_scale);

  auto step = [&](MLPModel& m, const std::vector<std::size_t>& rows, double lr) {
    Matrix gw1(m.inputs, m.hidden);
    std::vector<double> gb1(m.hidden, 0.0), gw2(m.hidden, 0.0), h(m.hidden);
    double gb2 = 0;
    for (std::size_t i : rows) {
      const double* xi = x.row(i);
      double s = m.b2;
      for (std::size_t j = 0; j < m.hidden; ++j) {
        double a = m.b1[j];
        for (std::size_t k = 0; k < m.inputs; ++k) a += xi[k] * m.w1.at(k, j);
        h[j] = std::tanh(a);
        s += m.w2[j] * h[j];
      }
      double resid = std::exp(s) - y[i]; // d loss / d pre-activation output
      gb2 += resid;
      for (std::size_t j = 0; j < m.hidden; ++j) {
        gw2[j] += resid * h[j];
        double dh = resid * m.w2[j] * (1.0 - h[j] * h[j]);
        gb1[j] += dh;
        for (std::size_t k = 0; k < m.inputs; ++k) gw1.at(k, j) += dh * xi[k];
      }
    }
    double inv_n = 1.0 / static_cast<double>(rows.size());
    for (std::size_t idx = 0; idx < gw1.data.size(); ++idx)
      m.w1.data[idx] -= lr * gw1.data[idx] * inv_n;
    for (std::size_t j = 0; j < m.hidden; ++j) {
      m.b1[j] -= lr * gb1[j] * inv_n;
      m.w2[j] -= lr * gw2[j] * inv_n;
    }
    m.b2 -= lr * gb2 * inv_n;
  };
  return descend<MLPModel>(std::move(model), x, y, config, info, step);
}

ConstantModel baseline_fit(std::span<const double> y_train) {
  if (y_train.empty()) throw std::invalid_argument("baseline_fit: empty labels");
  double sum = 0;
  for (double v : y_train) sum += v;
  return {sum / static_cast<double>(y_train.size())};
}

std::vector<double> glm_loss_gradient(const PoissonGLM& model, const Matrix& x,
                                      std::span<const double> y) {
  std::vector<double> grad(model.weights.size() + 1, 0.0);
  for (std::size_t i = 0; i < x.rows; ++i) {
    double resid = model.predict(x.row_span(i)) - y[i];
    for (std::size_t j = 0; j < model.weights.size(); ++j) grad[j] += resid * x.at(i, j);
    grad.back() += resid;
  }
  for (double& g : grad) g /= static_cast<double>(x.rows);
  return grad;
}

std::vector<double> mlp_loss_gradient(const MLPModel& model, const Matrix& x,
                                      std::span<const double> y) {
  Matrix gw1(model.inputs, model.hidden);
  std::vector<double> gb1(model.hidden, 0.0), gw2(model.hidden, 0.0), h(model.hidden);
  double gb2 = 0;
  for (std::size_t i = 0; i < x.rows; ++i) {
    const double* xi = x.row(i);
    double s = model.b2;
    for (std::size_t j = 0; j < model.hidden; ++j) {
      double a = model.b1[j];
      for (std::size_t k = 0; k < model.inputs; ++k) a += xi[k] * model.w1.at(k, j);
      h[j] = std::tanh(a);
      s += model.w2[j] * h[j];
    }
    double resid = std::exp(s) - y[i];
    gb2 += resid;
    for (std::size_t j = 0; j < model.hidden; ++j) {
      gw2[j] += resid * h[j];
      double dh = resid * model.w2[j] * (1.0 - h[j] * h[j]);
      gb1[j] += dh;
      for (std::size_t k = 0; k < model.inputs; ++k) gw1.at(k, j) += dh * xi[k];
    }
  }
  std::vector<double> grad;
  grad.reserve(gw1.data.size() + gb1.size() + gw2.size() + 1);
  grad.insert(grad.end(), gw1.data.begin(), gw1.data.end());
  grad.insert(grad.end(), gb1.begin(), gb1.end());
  grad.insert(grad.end(), gw2.begin(), gw2.end());
  grad.push_back(gb2);
  for (double& g : grad) g /= static_cast<double>(x.rows);
  return grad;
}

std::vector<double> flatten(const PoissonGLM& model) {
  std::vector<double> out = model.weights;
  out.push_back(model.bias);
  return out;
}

void unflatten(std::span<const double> params, PoissonGLM& model) {
  if (params.size() != model.weights.size() + 1)
    throw std::invalid_argument("unflatten: size mismatch");
  std::copy(params.begin(), params.end() - 1, model.weights.begin());
  model.bias = params.back();
}

std::vector<double> flatten(const MLPModel& model) {
  std::vector<double> out = model.w1.data;
  out.insert(out.end(), model.b1.begin(), model.b1.end());
  out.insert(out.end(), model.w2.begin(), model.w2.end());
  out.push_back(model.b2);
  return out;
}

void unflatten(std::span<const double> params, MLPModel& model) {
  std::size_t expected = model.w1.data.size() + model.b1.size() + model.w2.size() + 1;
  if (params.size() != expected) throw std::invalid_argument("unflatten: size mismatch");
  auto it = params.begin();
  std::copy(it, it + model.w1.data.size(), model.w1.data.begin());
  it += model.w1.data.size();
  std::copy(it, it + model.b1.size(), model.b1.begin());
  it += model.b1.size();
  std::copy(it, it + model.w2.size(), model.w2.begin());
  it += model.w2.size();
  model.b2 = *it;
}

namespace {

json info_json(const TrainInfo& info) {
  return {{"epochs_run", info.epochs_run},
          {"final_train_loss", info.final_train_loss},
          {"best_validation_loss", info.best_validation_loss}};
}

} // namespace

void save_glm(std::ostream& out, const PoissonGLM& model, const TrainInfo& info) {
  json j = {{"variant", "glm"},
            {"inputs", model.weights.size()},
            {"weights", model.weights},
            {"bias", model.bias},
            {"training", info_json(info)}};
  out << j.dump(2) << '\n';
}

void save_mlp(std::ostream& out, const MLPModel& model, const TrainInfo& info) {
  json j = {{"variant", "mlp"},
            {"inputs", model.inputs},
            {"hidden", model.hidden},
            {"w1", model.w1.data}, // row-major inputs x hidden
            {"b1", model.b1},
            {"w2", model.w2},
            {"b2", model.b2},
            {"training", info_json(info)}};
  out << j.dump(2) << '\n';
}

void save_baseline(std::ostream& out, const ConstantModel& model) {
  json j = {{"variant", "baseline"}, {"mean", model.mean}};
  out << j.dump(2) << '\n';
}

double LoadedModel::predict(std::span<const double> x) const {
  if (variant == "glm") return glm.predict(x);
  if (variant == "mlp") return mlp.predict(x);
  return baseline.predict(x);
}

LoadedModel load_model(std::istream& in) {
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ParseError(std::string("model file: ") + e.what());
  }
  LoadedModel m;
  m.variant = j.at("variant").get<std::string>();
  if (m.variant == "glm") {
    m.glm.weights = j.at("weights").get<std::vector<double>>();
    m.glm.bias = j.at("bias").get<double>();
  } else if (m.variant == "mlp") {
    m.mlp.inputs = j.at("inputs").get<std::size_t>();
    m.mlp.hidden = j.at("hidden").get<std::size_t>();
    m.mlp.w1 = Matrix(m.mlp.inputs, m.mlp.hidden);
    m.mlp.w1.data = j.at("w1").get<std::vector<double>>();
    if (m.mlp.w1.data.size() != m.mlp.inputs * m.mlp.hidden)
      throw ParseError("model file: w1 size mismatch");
    m.mlp.b1 = j.at("b1").get<std::vector<double>>();
    m.mlp.w2 = j.at("w2").get<std::vector<double>>();
    m.mlp.b2 = j.at("b2").get<double>();
  } else if (m.variant == "baseline") {
    m.baseline.mean = j.at("mean").get<double>();
  } else {
    throw ParseError("model file: unknown variant '" + m.variant + "'");
  }
  return m;
}

} // namespace a2v::models

// Copyright 2026 The facts Authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "facts/predictor.hpp"

#include <algorithm>
#include <cmath>

#include "facts/graph.hpp"

namespace facts {

namespace {

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

double cross_entropy(const Eigen::VectorXd& p, const Eigen::VectorXd& y) {
  double loss = 0.0;
  for (int i = 0; i < p.size(); ++i) {
    double pi = std::clamp(p[i], 1e-12, 1.0 - 1e-12);
    loss += y[i] > 0.5 ? -std::log(pi) : -std::log(1.0 - pi);
  }
  return loss / p.size();
}

std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double uniform_pm(std::uint64_t& state, double scale) {
  double u = static_cast<double>(splitmix64(state) >> 11) * 0x1.0p-53;
  return (2.0 * u - 1.0) * scale;
}

void check_labels(const Eigen::VectorXd& y) {
  if (y.size() == 0) throw Error("E_FIT", "empty training set");
  if (y.maxCoeff() == y.minCoeff())
    throw Error("E_FIT", "outcome has a single class");
}

// Full-batch descent with monotone recorded losses: a step that raises the
// loss is retried at half the rate; underflow of the rate aborts.
template <typename LossFn, typename GradFn>
Eigen::VectorXd descend(Eigen::VectorXd params, LossFn loss_at, GradFn grad_at,
                        double lr, int epochs) {
  double loss = loss_at(params);
  if (!std::isfinite(loss)) throw Error("E_FIT", "non-finite initial loss");
  for (int epoch = 0; epoch < epochs; ++epoch) {
    Eigen::VectorXd grad = grad_at(params);
    for (;;) {
      Eigen::VectorXd next = params - lr * grad;
      double next_loss = loss_at(next);
      if (std::isfinite(next_loss) && next_loss <= loss) {
        params = std::move(next);
        loss = next_loss;
        break;
      }
      lr *= 0.5;
      if (lr < 1e-15)
        throw Error("E_FIT", "training stalled: step size underflow at epoch " +
                                 std::to_string(epoch));
    }
  }
  return params;
}

}  // namespace

std::vector<double> Predictor::score_batch(
    const std::vector<Eigen::VectorXd>& xs) const {
  std::vector<double> out;
  out.reserve(xs.size());
  for (const auto& x : xs) out.push_back(score(x));
  return out;
}

double LogisticPredictor::score(const Eigen::VectorXd& x) const {
  if (x.size() + 1 != weights_.size())
    throw Error("E_PREDICT", "input dimension mismatch");
  return sigmoid(weights_[0] + weights_.tail(x.size()).dot(x));
}

MlpPredictor::MlpPredictor(int input_dim, int hidden, std::uint64_t seed) {
  if (hidden < 1) throw Error("E_FIT", "hidden width must be positive");
  w1_.resize(hidden, input_dim);
  b1_ = Eigen::VectorXd::Zero(hidden);
  w2_.resize(hidden);
  std::uint64_t state = seed ^ 0xa5a5a5a5a5a5a5a5ULL;
  double scale = 1.0 / std::sqrt(static_cast<double>(input_dim > 0 ? input_dim : 1));
  for (int h = 0; h < hidden; ++h)
    for (int d = 0; d < input_dim; ++d) w1_(h, d) = uniform_pm(state, scale);
  double scale2 = 1.0 / std::sqrt(static_cast<double>(hidden));
  for (int h = 0; h < hidden; ++h) w2_[h] = uniform_pm(state, scale2);
}

double MlpPredictor::score(const Eigen::VectorXd& x) const {
  if (x.size() != w1_.cols())
    throw Error("E_PREDICT", "input dimension mismatch");
  Eigen::VectorXd h = (w1_ * x + b1_).array().tanh();
  return sigmoid(w2_.dot(h) + b2_);
}

double MlpPredictor::loss(const Eigen::MatrixXd& X,
                          const Eigen::VectorXd& y) const {
  Eigen::MatrixXd h = ((X * w1_.transpose()).rowwise() + b1_.transpose())
                          .array()
                          .tanh();
  Eigen::VectorXd p =
      ((h * w2_).array() + b2_).unaryExpr([](double z) { return sigmoid(z); });
  return cross_entropy(p, y);
}

Eigen::VectorXd MlpPredictor::flat_params() const {
  const int hd = static_cast<int>(w1_.size());
  Eigen::VectorXd out(hd + b1_.size() + w2_.size() + 1);
  int pos = 0;
  for (int h = 0; h < w1_.rows(); ++h)
    for (int d = 0; d < w1_.cols(); ++d) out[pos++] = w1_(h, d);
  for (int h = 0; h < b1_.size(); ++h) out[pos++] = b1_[h];
  for (int h = 0; h < w2_.size(); ++h) out[pos++] = w2_[h];
  out[pos] = b2_;
  return out;
}

void MlpPredictor::set_flat_params(const Eigen::VectorXd& params) {
  int pos = 0;
  for (int h = 0; h < w1_.rows(); ++h)
    for (int d = 0; d < w1_.cols(); ++d) w1_(h, d) = params[pos++];
  for (int h = 0; h < b1_.size(); ++h) b1_[h] = params[pos++];
  for (int h = 0; h < w2_.size(); ++h) w2_[h] = params[pos++];
  b2_ = params[pos];
}

Eigen::VectorXd MlpPredictor::flat_grad(const Eigen::MatrixXd& X,
                                        const Eigen::VectorXd& y) const {
  const int n = static_cast<int>(X.rows());
  Eigen::MatrixXd pre = (X * w1_.transpose()).rowwise() + b1_.transpose();
  Eigen::MatrixXd h = pre.array().tanh();
  Eigen::VectorXd p =
      ((h * w2_).array() + b2_).unaryExpr([](double z) { return sigmoid(z); });
  Eigen::VectorXd delta = (p - y) / static_cast<double>(n);
  Eigen::VectorXd grad_w2 = h.transpose() * delta;
  double grad_b2 = delta.sum();
  Eigen::MatrixXd back =
      (delta * w2_.transpose()).array() * (1.0 - h.array().square());
  Eigen::MatrixXd grad_w1 = back.transpose() * X;
  Eigen::VectorXd grad_b1 = back.colwise().sum();

  Eigen::VectorXd out(w1_.size() + b1_.size() + w2_.size() + 1);
  int pos = 0;
  for (int r = 0; r < grad_w1.rows(); ++r)
    for (int c = 0; c < grad_w1.cols(); ++c) out[pos++] = grad_w1(r, c);
  for (int r = 0; r < grad_b1.size(); ++r) out[pos++] = grad_b1[r];
  for (int r = 0; r < grad_w2.size(); ++r) out[pos++] = grad_w2[r];
  out[pos] = grad_b2;
  return out;
}

std::unique_ptr<Predictor> train_logistic(const Eigen::MatrixXd& X,
                                          const Eigen::VectorXd& y,
                                          const TrainConfig& config) {
  check_labels(y);
  const int d = static_cast<int>(X.cols());
  auto loss_at = [&](const Eigen::VectorXd& w) {
    Eigen::VectorXd p = ((X * w.tail(d)).array() + w[0])
                            .unaryExpr([](double z) { return sigmoid(z); });
    return cross_entropy(p, y);
  };
  auto grad_at = [&](const Eigen::VectorXd& w) {
    Eigen::VectorXd p = ((X * w.tail(d)).array() + w[0])
                            .unaryExpr([](double z) { return sigmoid(z); });
    Eigen::VectorXd delta = (p - y) / static_cast<double>(X.rows());
    Eigen::VectorXd grad(d + 1);
    grad[0] = delta.sum();
    grad.tail(d) = X.transpose() * delta;
    return grad;
  };
  Eigen::VectorXd weights =
      descend(Eigen::VectorXd::Zero(d + 1), loss_at, grad_at,
              config.learning_rate, config.epochs);
  auto model = std::make_unique<LogisticPredictor>(std::move(weights));
  model->thresholded = config.thresholded;
  model->tau = config.tau;
  return model;
}

std::unique_ptr<Predictor> train_mlp(const Eigen::MatrixXd& X,
                                     const Eigen::VectorXd& y,
                                     const TrainConfig& config) {
  check_labels(y);
  auto model = std::make_unique<MlpPredictor>(static_cast<int>(X.cols()),
                                              config.hidden, config.seed);
  auto loss_at = [&](const Eigen::VectorXd& params) {
    MlpPredictor probe = *model;
    probe.set_flat_params(params);
    return probe.loss(X, y);
  };
  auto grad_at = [&](const Eigen::VectorXd& params) {
    MlpPredictor probe = *model;
    probe.set_flat_params(params);
    return probe.flat_grad(X, y);
  };
  Eigen::VectorXd fitted = descend(model->flat_params(), loss_at, grad_at,
                                   config.learning_rate, config.epochs);
  model->set_flat_params(fitted);
  model->thresholded = config.thresholded;
  model->tau = config.tau;
  return model;
}

Eigen::MatrixXd encode_rows(const Dataset& data, const Encoding& encoding) {
  Eigen::MatrixXd X(data.rows(), encoding.dim());
  for (int r = 0; r < data.rows(); ++r)
    X.row(r) = encoding.encode_row(data, r);
  return X;
}

std::unique_ptr<Predictor> train_predictor(const Dataset& data,
                                           const Encoding& encoding,
                                           const std::string& kind,
                                           const TrainConfig& config) {
  if (data.outcome_col() < 0)
    throw Error("E_OUTCOME", "training needs an outcome column");
  Eigen::MatrixXd X = encode_rows(data, encoding);
  Eigen::VectorXd y(data.rows());
  for (int r = 0; r < data.rows(); ++r)
    y[r] = data.value(r, data.outcome_col());
  if (kind == "logistic") return train_logistic(X, y, config);
  if (kind == "mlp") return train_mlp(X, y, config);
  throw Error("E_PREDICT", "unknown predictor kind '" + kind + "'");
}

}  // namespace facts

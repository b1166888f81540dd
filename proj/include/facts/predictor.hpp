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

#ifndef FACTS_PREDICTOR_HPP_
#define FACTS_PREDICTOR_HPP_

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "facts/dataset.hpp"

namespace facts {

// Classifier under explanation. score() returns a probability; predict()
// applies the output mode (probability or indicator(score >= tau)).
class Predictor {
 public:
  virtual ~Predictor() = default;
  virtual double score(const Eigen::VectorXd& x) const = 0;
  virtual std::vector<double> score_batch(
      const std::vector<Eigen::VectorXd>& xs) const;
  virtual int input_dim() const = 0;
  virtual std::string kind() const = 0;

  double predict(const Eigen::VectorXd& x) const {
    double s = score(x);
    return thresholded ? (s >= tau ? 1.0 : 0.0) : s;
  }

  bool thresholded = false;
  double tau = 0.5;
};

class LogisticPredictor : public Predictor {
 public:
  explicit LogisticPredictor(Eigen::VectorXd weights)  // [intercept, w...]
      : weights_(std::move(weights)) {}

  double score(const Eigen::VectorXd& x) const override;
  int input_dim() const override { return static_cast<int>(weights_.size()) - 1; }
  std::string kind() const override { return "logistic"; }
  const Eigen::VectorXd& weights() const { return weights_; }

 private:
  Eigen::VectorXd weights_;
};

// One hidden layer, tanh activation, sigmoid output.
class MlpPredictor : public Predictor {
 public:
  MlpPredictor(int input_dim, int hidden, std::uint64_t seed);

  double score(const Eigen::VectorXd& x) const override;
  int input_dim() const override { return static_cast<int>(w1_.cols()); }
  std::string kind() const override { return "mlp"; }
  int hidden() const { return static_cast<int>(w1_.rows()); }

  // Mean cross-entropy over rows of X against labels y.
  double loss(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) const;
  Eigen::VectorXd flat_params() const;
  void set_flat_params(const Eigen::VectorXd& params);
  Eigen::VectorXd flat_grad(const Eigen::MatrixXd& X,
                            const Eigen::VectorXd& y) const;

 private:
  Eigen::MatrixXd w1_;
  Eigen::VectorXd b1_;
  Eigen::VectorXd w2_;
  double b2_ = 0.0;
};

struct TrainConfig {
  int hidden = 32;
  double learning_rate = 0.5;
  int epochs = 400;
  std::uint64_t seed = 1;
  double tau = 0.5;
  bool thresholded = false;
};

// Trains the built-in models with full-batch gradient descent; the recorded
// per-epoch losses are kept monotone by halving the step on any increase,
// aborting when the step underflows.
std::unique_ptr<Predictor> train_logistic(const Eigen::MatrixXd& X,
                                          const Eigen::VectorXd& y,
                                          const TrainConfig& config = {});
std::unique_ptr<Predictor> train_mlp(const Eigen::MatrixXd& X,
                                     const Eigen::VectorXd& y,
                                     const TrainConfig& config = {});

// Convenience wrapper: encodes the dataset's rows over `encoding`, takes
// labels from the outcome column, dispatches on kind ("logistic" or "mlp").
std::unique_ptr<Predictor> train_predictor(const Dataset& data,
                                           const Encoding& encoding,
                                           const std::string& kind,
                                           const TrainConfig& config = {});

Eigen::MatrixXd encode_rows(const Dataset& data, const Encoding& encoding);

}  // namespace facts

#endif  // FACTS_PREDICTOR_HPP_

#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

namespace hflsim {

// Classifier shape: input -> hidden (tanh) -> softmax. hidden_dim == 0 drops
// the hidden layer (multinomial logistic regression, convex loss).
struct Architecture {
  int input_dim = 784;
  int hidden_dim = 32;
  int class_count = 10;

  void validate() const;
  // Flat parameter count: [W1 | b1 | W2 | b2] or [W | b] when hidden_dim == 0.
  int param_count() const;
};

using ModelParams = Eigen::VectorXd;

// Scaled-uniform fan-in init: weights ~ U(-sqrt(3/fan_in), sqrt(3/fan_in)),
// biases zero. Deterministic under seed.
ModelParams init_params(const Architecture& arch, uint64_t seed);

// Rows are softmax class probabilities (log-sum-exp stabilized).
Eigen::MatrixXd forward(const Architecture& arch, const ModelParams& params,
                        const Eigen::MatrixXd& batch);

// Mean cross-entropy over the batch plus its analytic gradient.
struct LossGrad {
  double loss = 0.0;
  Eigen::VectorXd grad;
};
LossGrad loss_and_grad(const Architecture& arch, const ModelParams& params,
                       const Eigen::MatrixXd& batch, const std::vector<int>& labels);

}  // namespace hflsim

#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <random>

#include "hflsim/model.hpp"
#include "hflsim/rng.hpp"

using namespace hflsim;

namespace {

Eigen::MatrixXd random_batch(std::mt19937_64& rng, int n, int dim) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::MatrixXd x(n, dim);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < dim; ++k) x(i, k) = u(rng);
  return x;
}

std::vector<int> random_labels(std::mt19937_64& rng, int n, int c) {
  std::uniform_int_distribution<int> u(0, c - 1);
  std::vector<int> y(n);
  for (auto& v : y) v = u(rng);
  return y;
}

}  // namespace

TEST_CASE("forward: all-zero parameters give uniform class probabilities") {
  Architecture a{6, 4, 5};
  ModelParams p = ModelParams::Zero(a.param_count());
  auto rng = make_rng(1);
  auto probs = forward(a, p, random_batch(rng, 3, 6));
  for (int i = 0; i < 3; ++i)
    for (int c = 0; c < 5; ++c) CHECK(probs(i, c) == doctest::Approx(0.2).epsilon(1e-12));
}

TEST_CASE("forward: rows sum to one for many random inputs") {
  Architecture a{8, 5, 3};
  auto p = init_params(a, 4);
  auto rng = make_rng(2);
  auto probs = forward(a, p, random_batch(rng, 1000, 8));
  for (int i = 0; i < 1000; ++i)
    CHECK(std::abs(probs.row(i).sum() - 1.0) < 1e-12);
}

TEST_CASE("forward: shifting all logits leaves probabilities unchanged") {
  // with hidden_dim == 0 a constant added to every output bias shifts each
  // row of logits uniformly
  Architecture a{4, 0, 3};
  auto p = init_params(a, 5);
  ModelParams shifted = p;
  for (int c = 0; c < 3; ++c) shifted(4 * 3 + c) += 7.5;
  auto rng = make_rng(3);
  auto x = random_batch(rng, 10, 4);
  auto p1 = forward(a, p, x);
  auto p2 = forward(a, shifted, x);
  CHECK((p1 - p2).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("forward: dimension mismatch is an argument error") {
  Architecture a{4, 0, 3};
  auto p = init_params(a, 5);
  Eigen::MatrixXd bad(2, 5);
  bad.setZero();
  CHECK_THROWS_AS(forward(a, p, bad), std::invalid_argument);
}

TEST_CASE("loss_and_grad: uniform model has loss ln C") {
  Architecture a{6, 0, 4};
  ModelParams p = ModelParams::Zero(a.param_count());
  auto rng = make_rng(6);
  auto x = random_batch(rng, 8, 6);
  auto y = random_labels(rng, 8, 4);
  auto lg = loss_and_grad(a, p, x, y);
  CHECK(lg.loss == doctest::Approx(std::log(4.0)).epsilon(1e-12));
}

TEST_CASE("loss_and_grad: confident correct predictions give near-zero loss and gradient") {
  Architecture a{2, 0, 2};
  // weights push class 0 for x0-heavy inputs with a huge margin
  ModelParams p = ModelParams::Zero(a.param_count());
  p(0) = 50.0;   // w(x0 -> class0)
  p(1) = -50.0;  // w(x0 -> class1)... column-major: [w00 w10 w01 w11 b0 b1]
  Eigen::MatrixXd x(2, 2);
  x << 1.0, 0.0, 1.0, 0.0;
  std::vector<int> y = {0, 0};
  auto lg = loss_and_grad(a, p, x, y);
  CHECK(lg.loss < 1e-10);
  CHECK(lg.grad.cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("loss_and_grad: finite differences confirm the gradient") {
  for (int hidden : {0, 7}) {
    Architecture a{5, hidden, 3};
    auto p = init_params(a, 11 + hidden);
    auto rng = make_rng(12 + hidden);
    for (int trial = 0; trial < 10; ++trial) {
      auto x = random_batch(rng, 4, 5);
      auto y = random_labels(rng, 4, 3);
      auto lg = loss_and_grad(a, p, x, y);
      const double h = 1e-6;
      for (int k = 0; k < a.param_count(); k += 3) {  // probe a spread of coordinates
        ModelParams pp = p, pm = p;
        pp(k) += h;
        pm(k) -= h;
        double fd = (loss_and_grad(a, pp, x, y).loss - loss_and_grad(a, pm, x, y).loss) /
                    (2.0 * h);
        double scale = std::max(std::abs(lg.grad(k)), 1e-3);
        CHECK(std::abs(fd - lg.grad(k)) / scale < 1e-4);
      }
    }
  }
}

TEST_CASE("loss_and_grad: duplicating every sample changes nothing") {
  Architecture a{5, 4, 3};
  auto p = init_params(a, 21);
  auto rng = make_rng(22);
  auto x = random_batch(rng, 6, 5);
  auto y = random_labels(rng, 6, 3);
  Eigen::MatrixXd x2(12, 5);
  x2 << x, x;
  std::vector<int> y2 = y;
  y2.insert(y2.end(), y.begin(), y.end());
  auto a1 = loss_and_grad(a, p, x, y);
  auto a2 = loss_and_grad(a, p, x2, y2);
  CHECK(a1.loss == doctest::Approx(a2.loss).epsilon(1e-12));
  CHECK((a1.grad - a2.grad).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("loss is non-negative") {
  Architecture a{3, 2, 2};
  auto p = init_params(a, 31);
  auto rng = make_rng(32);
  for (int t = 0; t < 20; ++t) {
    auto x = random_batch(rng, 5, 3);
    auto y = random_labels(rng, 5, 2);
    CHECK(loss_and_grad(a, p, x, y).loss >= 0.0);
  }
}

TEST_CASE("init_params: deterministic under seed, bounded by the fan-in rule") {
  Architecture a{10, 6, 4};
  auto p1 = init_params(a, 77);
  auto p2 = init_params(a, 77);
  CHECK(p1 == p2);
  double bound1 = std::sqrt(3.0 / 10.0);
  for (int k = 0; k < 10 * 6; ++k) CHECK(std::abs(p1(k)) <= bound1);
  // biases stay zero
  for (int k = 10 * 6; k < 10 * 6 + 6; ++k) CHECK(p1(k) == 0.0);
}

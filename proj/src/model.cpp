#include "hflsim/model.hpp"

#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "hflsim/rng.hpp"

namespace hflsim {

void Architecture::validate() const {
  if (input_dim <= 0) throw std::invalid_argument("input_dim must be positive");
  if (hidden_dim < 0) throw std::invalid_argument("hidden_dim must be >= 0");
  if (class_count < 2) throw std::invalid_argument("class_count must be >= 2");
}

int Architecture::param_count() const {
  if (hidden_dim == 0) return input_dim * class_count + class_count;
  return input_dim * hidden_dim + hidden_dim + hidden_dim * class_count + class_count;
}

namespace {

struct Views {
  Eigen::Map<const Eigen::MatrixXd> w1, w2;
  Eigen::Map<const Eigen::VectorXd> b1, b2;
};

Views map_params(const Architecture& a, const ModelParams& p) {
  if (p.size() != a.param_count()) throw std::invalid_argument("parameter length mismatch");
  const double* d = p.data();
  if (a.hidden_dim == 0) {
    Eigen::Map<const Eigen::MatrixXd> w(d, a.input_dim, a.class_count);
    Eigen::Map<const Eigen::VectorXd> b(d + a.input_dim * a.class_count, a.class_count);
    // hidden maps alias the output ones; unused in this mode
    return Views{w, w, b, b};
  }
  const double* p1 = d;
  const double* p2 = p1 + a.input_dim * a.hidden_dim;
  const double* p3 = p2 + a.hidden_dim;
  const double* p4 = p3 + a.hidden_dim * a.class_count;
  return Views{Eigen::Map<const Eigen::MatrixXd>(p1, a.input_dim, a.hidden_dim),
               Eigen::Map<const Eigen::MatrixXd>(p3, a.hidden_dim, a.class_count),
               Eigen::Map<const Eigen::VectorXd>(p2, a.hidden_dim),
               Eigen::Map<const Eigen::VectorXd>(p4, a.class_count)};
}

// Row-wise stable softmax; also returns per-row log-normalizers for the loss.
Eigen::MatrixXd softmax_rows(Eigen::MatrixXd logits, Eigen::VectorXd* log_norm = nullptr) {
  Eigen::VectorXd row_max = logits.rowwise().maxCoeff();
  logits.colwise() -= row_max;
  Eigen::MatrixXd e = logits.array().exp().matrix();
  Eigen::VectorXd sums = e.rowwise().sum();
  if (log_norm) *log_norm = sums.array().log().matrix() + row_max;
  e.array().colwise() /= sums.array();
  return e;
}

Eigen::MatrixXd logits_of(const Architecture& a, const Views& v, const Eigen::MatrixXd& x,
                          Eigen::MatrixXd* hidden_out = nullptr) {
  if (x.cols() != a.input_dim) throw std::invalid_argument("batch width != input_dim");
  if (a.hidden_dim == 0) {
    return (x * v.w1).rowwise() + v.b1.transpose();
  }
  Eigen::MatrixXd h = ((x * v.w1).rowwise() + v.b1.transpose()).array().tanh().matrix();
  if (hidden_out) *hidden_out = h;
  return (h * v.w2).rowwise() + v.b2.transpose();
}

}  // namespace

ModelParams init_params(const Architecture& arch, uint64_t seed) {
  arch.validate();
  ModelParams p = ModelParams::Zero(arch.param_count());
  auto rng = make_rng(seed);
  auto fill = [&rng](double* dst, int count, int fan_in) {
    double bound = std::sqrt(3.0 / static_cast<double>(fan_in));
    std::uniform_real_distribution<double> u(-bound, bound);
    for (int i = 0; i < count; ++i) dst[i] = u(rng);
  };
  if (arch.hidden_dim == 0) {
    fill(p.data(), arch.input_dim * arch.class_count, arch.input_dim);
  } else {
    fill(p.data(), arch.input_dim * arch.hidden_dim, arch.input_dim);
    fill(p.data() + arch.input_dim * arch.hidden_dim + arch.hidden_dim,
         arch.hidden_dim * arch.class_count, arch.hidden_dim);
  }
  return p;
}

Eigen::MatrixXd forward(const Architecture& arch, const ModelParams& params,
                        const Eigen::MatrixXd& batch) {
  arch.validate();
  auto v = map_params(arch, params);
  return softmax_rows(logits_of(arch, v, batch));
}

LossGrad loss_and_grad(const Architecture& arch, const ModelParams& params,
                       const Eigen::MatrixXd& batch, const std::vector<int>& labels) {
  arch.validate();
  if (static_cast<Eigen::Index>(labels.size()) != batch.rows())
    throw std::invalid_argument("labels/batch size mismatch");
  for (int y : labels)
    if (y < 0 || y >= arch.class_count) throw std::invalid_argument("label out of range");

  auto v = map_params(arch, params);
  Eigen::MatrixXd hidden;
  Eigen::MatrixXd logits = logits_of(arch, v, batch, &hidden);
  Eigen::VectorXd log_norm;
  Eigen::MatrixXd probs = softmax_rows(logits, &log_norm);

  const auto b = batch.rows();
  double loss = 0.0;
  for (Eigen::Index i = 0; i < b; ++i)
    loss += log_norm(i) - logits(i, labels[i]);
  loss /= static_cast<double>(b);

  // dL/dlogits = (probs - onehot) / batch
  Eigen::MatrixXd dlogits = probs;
  for (Eigen::Index i = 0; i < b; ++i) dlogits(i, labels[i]) -= 1.0;
  dlogits /= static_cast<double>(b);

  LossGrad out;
  out.loss = loss;
  out.grad = Eigen::VectorXd::Zero(params.size());
  double* g = out.grad.data();
  if (arch.hidden_dim == 0) {
    Eigen::Map<Eigen::MatrixXd> gw(g, arch.input_dim, arch.class_count);
    Eigen::Map<Eigen::VectorXd> gb(g + arch.input_dim * arch.class_count, arch.class_count);
    gw = batch.transpose() * dlogits;
    gb = dlogits.colwise().sum();
    return out;
  }
  Eigen::Map<Eigen::MatrixXd> gw1(g, arch.input_dim, arch.hidden_dim);
  Eigen::Map<Eigen::VectorXd> gb1(g + arch.input_dim * arch.hidden_dim, arch.hidden_dim);
  Eigen::Map<Eigen::MatrixXd> gw2(g + arch.input_dim * arch.hidden_dim + arch.hidden_dim,
                                  arch.hidden_dim, arch.class_count);
  Eigen::Map<Eigen::VectorXd> gb2(
      g + arch.input_dim * arch.hidden_dim + arch.hidden_dim + arch.hidden_dim * arch.class_count,
      arch.class_count);
  gw2 = hidden.transpose() * dlogits;
  gb2 = dlogits.colwise().sum();
  Eigen::MatrixXd dh =
      (dlogits * v.w2.transpose()).array() * (1.0 - hidden.array().square());
  gw1 = batch.transpose() * dh;
  gb1 = dh.colwise().sum();
  return out;
}

}  // namespace hflsim

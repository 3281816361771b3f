#include "sod/ppo/net.hpp"

#include <random>
#include <stdexcept>

namespace sod::ppo {

DenseNet::DenseNet(std::vector<int> sizes) : sizes_(std::move(sizes)) {
  if (sizes_.size() < 2) throw std::invalid_argument("DenseNet: need at least input and output sizes");
  Eigen::Index total = 0;
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    if (sizes_[l] <= 0 || sizes_[l + 1] <= 0) throw std::invalid_argument("DenseNet: layer sizes must be > 0");
    offsets_.push_back(total);
    total += static_cast<Eigen::Index>(sizes_[l + 1]) * (sizes_[l] + 1);
  }
  params_ = VectorXd::Zero(total);
}

DenseNet DenseNet::orthogonal(std::vector<int> sizes, std::uint64_t seed, double hidden_gain,
                              double output_gain) {
  DenseNet net(std::move(sizes));
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int l = 0; l < net.layer_count(); ++l) {
    const int rows = net.sizes_[l + 1];
    const int cols = net.sizes_[l];
    const int big = std::max(rows, cols);
    const int small = std::min(rows, cols);
    MatrixXd g(big, small);
    for (Eigen::Index j = 0; j < g.cols(); ++j) {
      for (Eigen::Index i = 0; i < g.rows(); ++i) g(i, j) = normal(rng);
    }
    Eigen::HouseholderQR<MatrixXd> qr(g);
    MatrixXd q = qr.householderQ() * MatrixXd::Identity(big, small);
    // Sign fix so the result is uniformly distributed over orthogonal matrices.
    const MatrixXd r = qr.matrixQR().topRows(small).triangularView<Eigen::Upper>();
    for (int j = 0; j < small; ++j) {
      if (r(j, j) < 0.0) q.col(j) *= -1.0;
    }
    MatrixXd w = rows >= cols ? q : MatrixXd(q.transpose());
    const double gain = l + 1 == net.layer_count() ? output_gain : hidden_gain;
    Eigen::Map<MatrixXd>(net.params_.data() + net.weight_offset(l), rows, cols) = gain * w;
  }
  return net;
}

void DenseNet::set_parameters(const VectorXd& p) {
  if (p.size() != params_.size()) throw std::invalid_argument("DenseNet: parameter count mismatch");
  params_ = p;
}

MatrixXd DenseNet::forward(const MatrixXd& x) const {
  Tape tape;
  return forward(x, tape);
}

MatrixXd DenseNet::forward(const MatrixXd& x, Tape& tape) const {
  if (x.rows() != input_size()) throw std::invalid_argument("DenseNet: input size mismatch");
  tape.activations.clear();
  tape.activations.push_back(x);
  MatrixXd a = x;
  for (int l = 0; l < layer_count(); ++l) {
    const int rows = sizes_[l + 1];
    const int cols = sizes_[l];
    Eigen::Map<const MatrixXd> w(params_.data() + weight_offset(l), rows, cols);
    Eigen::Map<const VectorXd> b(params_.data() + bias_offset(l), rows);
    MatrixXd z = w * a;
    z.colwise() += b;
    if (l + 1 < layer_count()) z = z.array().tanh().matrix();
    tape.activations.push_back(z);
    a = std::move(z);
  }
  return a;
}

VectorXd DenseNet::forward(const VectorXd& x) const {
  const MatrixXd out = forward(MatrixXd(x));
  return out.col(0);
}

VectorXd DenseNet::backward(const Tape& tape, const MatrixXd& grad_out) const {
  VectorXd grad = VectorXd::Zero(params_.size());
  MatrixXd delta = grad_out;
  for (int l = layer_count() - 1; l >= 0; --l) {
    const int rows = sizes_[l + 1];
    const int cols = sizes_[l];
    if (l + 1 < layer_count()) {
      // Through tanh: d/dz = 1 - a^2.
      delta = (delta.array() * (1.0 - tape.activations[l + 1].array().square())).matrix();
    }
    const MatrixXd& input = tape.activations[l];
    Eigen::Map<MatrixXd>(grad.data() + weight_offset(l), rows, cols) = delta * input.transpose();
    Eigen::Map<VectorXd>(grad.data() + bias_offset(l), rows) = delta.rowwise().sum();
    if (l > 0) {
      Eigen::Map<const MatrixXd> w(params_.data() + weight_offset(l), rows, cols);
      delta = w.transpose() * delta;
    }
  }
  return grad;
}

VectorXd softmax(const VectorXd& logits) {
  const VectorXd e = (logits.array() - logits.maxCoeff()).exp().matrix();
  return e / e.sum();
}

VectorXd log_softmax(const VectorXd& logits) {
  const double m = logits.maxCoeff();
  const double lse = m + std::log((logits.array() - m).exp().sum());
  return (logits.array() - lse).matrix();
}

int argmax(const VectorXd& v) {
  int best = 0;
  for (int i = 1; i < v.size(); ++i) {
    if (v[i] > v[best]) best = i;
  }
  return best;
}

}  // namespace sod::ppo

#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

namespace sod::ppo {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Fully connected network with tanh hidden layers and a linear output layer.
// Parameters live in one flat vector: per layer, the weight matrix
// (outputs x inputs, column-major) followed by the bias vector.
class DenseNet {
 public:
  DenseNet() = default;
  // Zero-initialized network with the given layer sizes (input first).
  explicit DenseNet(std::vector<int> sizes);

  // Orthogonal initialization: hidden layers scaled by hidden_gain, the output
  // layer by output_gain, zero biases.
  static DenseNet orthogonal(std::vector<int> sizes, std::uint64_t seed, double hidden_gain,
                             double output_gain);

  const std::vector<int>& sizes() const { return sizes_; }
  int input_size() const { return sizes_.front(); }
  int output_size() const { return sizes_.back(); }
  int layer_count() const { return static_cast<int>(sizes_.size()) - 1; }

  Eigen::Index parameter_count() const { return params_.size(); }
  const VectorXd& parameters() const { return params_; }
  VectorXd& parameters() { return params_; }
  void set_parameters(const VectorXd& p);

  // Activations kept for backpropagation; activations[0] is the input.
  struct Tape {
    std::vector<MatrixXd> activations;
  };

  // Batched forward pass, one sample per column.
  MatrixXd forward(const MatrixXd& x) const;
  MatrixXd forward(const MatrixXd& x, Tape& tape) const;
  VectorXd forward(const VectorXd& x) const;

  // Gradient of sum(grad_out .* output) with respect to the parameters.
  VectorXd backward(const Tape& tape, const MatrixXd& grad_out) const;

 private:
  Eigen::Index weight_offset(int layer) const { return offsets_[layer]; }
  Eigen::Index bias_offset(int layer) const {
    return offsets_[layer] + static_cast<Eigen::Index>(sizes_[layer + 1]) * sizes_[layer];
  }

  std::vector<int> sizes_;
  std::vector<Eigen::Index> offsets_;
  VectorXd params_;
};

VectorXd softmax(const VectorXd& logits);
VectorXd log_softmax(const VectorXd& logits);
// Index of the largest entry; ties go to the lowest index.
int argmax(const VectorXd& v);

}  // namespace sod::ppo

#pragma once

#include <vector>

#include "uisrnn/model.hpp"

namespace uisrnn {

// Gradients for every network parameter, shaped like the model. sigma2 is
// optimized in log space; its gradient lives in `d_log_sigma2`.
struct ModelGradients {
  MatrixXd W_u, U_u, W_r, U_r, W_c, U_c;
  VectorXd b_u, b_r, b_c;
  MatrixXd head_W;
  VectorXd head_b;
  VectorXd d_log_sigma2;

  static ModelGradients zeros(const ModelConfig& config);
  ModelGradients& operator+=(const ModelGradients& other);
  ModelGradients& scale_network(double factor);  // leaves d_log_sigma2 alone
  bool all_finite() const;
};

// Cached forward pass over one single-speaker sequence of length L. Step k
// consumes input x_k (x_1 is the zero vector, x_k = frame k-1 afterwards) and
// emits head output o_k; the prediction scored against target j is the
// running mean of o_1..o_j.
struct SequenceForward {
  std::vector<VectorXd> inputs;   // x_1..x_L
  std::vector<VectorXd> h_prev;   // hidden entering each step
  std::vector<VectorXd> update;   // u_k
  std::vector<VectorXd> reset;    // r_k
  std::vector<VectorXd> cand;     // c_k
  std::vector<VectorXd> hidden;   // h_k
  std::vector<VectorXd> outputs;  // o_k = head(h_k)
  std::vector<VectorXd> means;    // running means mu_1..mu_L

  int length() const { return static_cast<int>(outputs.size()); }
};

// Runs the instance forward over `frames` (L x D), recording everything the
// backward pass needs. Numerically identical to new_instance + observe.
SequenceForward sequence_forward(const SpeakerModel& model,
                                 const MatrixXd& frames);

// Per-dimension squared prediction error of the cached pass against targets.
VectorXd squared_error_per_dim(const SequenceForward& fwd,
                               const std::vector<VectorXd>& targets);

// Backpropagation through time. `residual_weight` scales the residual per
// dimension: dLoss/dmu_j = residual_weight .* (mu_j - target_j). Accumulates
// into `grads` (network tensors only).
void sequence_backward(const SpeakerModel& model, const SequenceForward& fwd,
                       const std::vector<VectorXd>& targets,
                       const VectorXd& residual_weight, ModelGradients& grads);

}  // namespace uisrnn

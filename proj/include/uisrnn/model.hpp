#pragma once

#include <cstdint>
#include <string>

#include "uisrnn/priors.hpp"
#include "uisrnn/types.hpp"

namespace uisrnn {

struct ModelConfig {
  int embedding_dim = 0;     // D
  int hidden_units = 200;    // recurrent state size
  int head_units = 200;      // width of the fully connected output layer
  double sigma2_init = 0.5;  // initial observation variance
  bool per_dim_sigma2 = false;

  void validate() const;
};

// Shared parameters of the per-speaker generative network: a gated recurrent
// cell plus an affine head mapping the hidden state to embedding space, and
// the observation variance of the Gaussian emission.
struct SpeakerModel {
  ModelConfig config;

  // Gate weights: W_* over the input, U_* over the hidden state.
  MatrixXd W_u, U_u, W_r, U_r, W_c, U_c;  // hidden x D, hidden x hidden
  VectorXd b_u, b_r, b_c;                 // hidden
  MatrixXd head_W;                        // D x hidden
  VectorXd head_b;                        // D
  VectorXd sigma2;                        // size 1, or D when per-dim

  int dim() const { return config.embedding_dim; }
  int hidden() const { return config.hidden_units; }

  // Zero parameters, sigma2 from config.
  static SpeakerModel zeros(const ModelConfig& config);
  // Uniform Glorot initialization, deterministic given the seed.
  static SpeakerModel init(const ModelConfig& config, std::uint64_t seed);

  void validate() const;

  // Expands sigma2 to a per-dimension vector regardless of storage.
  VectorXd sigma2_per_dim() const;

  VectorXd head(const VectorXd& hidden_state) const {
    return head_W * hidden_state + head_b;
  }
};

// u = logistic(W_u x + U_u h + b_u)
// r = logistic(W_r x + U_r h + b_r)
// c = tanh(W_c x + U_c (r .* h) + b_c)
// h' = (1 - u) .* h + u .* c
VectorXd gru_step(const SpeakerModel& model, const VectorXd& hidden,
                  const VectorXd& x);

// One speaker's running state inside a decode or training pass. `steps`
// counts recorded head outputs and always equals observed + 1 because every
// fresh instance takes one step on a zero input before seeing data, so a
// prediction exists for the speaker's first frame.
struct SpeakerInstanceState {
  VectorXd hidden;
  VectorXd mean_sum;  // sum of head outputs recorded so far
  int steps = 0;
  int observed = 0;

  VectorXd predict_mean() const { return mean_sum / steps; }
};

SpeakerInstanceState new_instance(const SpeakerModel& model);
SpeakerInstanceState observe(const SpeakerModel& model,
                             const SpeakerInstanceState& state,
                             const VectorXd& x);

// log N(x; mu, diag(sigma2)); sigma2 of size 1 is broadcast to all dims.
double log_likelihood(const VectorXd& x, const VectorXd& mu,
                      const VectorXd& sigma2);
inline double log_likelihood(const SpeakerModel& model, const VectorXd& x,
                             const VectorXd& mu) {
  return log_likelihood(x, mu, model.sigma2);
}

// Checkpoint: u64 little-endian JSON header length, UTF-8 JSON header
// {format_version, config, tensors: name -> {offset, shape}}, then raw f64
// little-endian blobs. Round-trips bit-exactly.
void save_checkpoint(const SpeakerModel& model, const PriorParams& priors,
                     const std::string& path);
std::pair<SpeakerModel, PriorParams> load_checkpoint(const std::string& path);

}  // namespace uisrnn

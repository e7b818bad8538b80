#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "uisrnn/dataset.hpp"
#include "uisrnn/grad.hpp"
#include "uisrnn/model.hpp"

namespace uisrnn {

enum class LossKind { mse, sml };

struct TrainConfig {
  LossKind loss_kind = LossKind::sml;
  int num_samples = 2;        // N draws for the sample-mean target
  double learning_rate = 1e-3;
  int batch_size = 10;        // sequences per step
  int epochs = 20;
  double l2_weight = 1e-5;    // lambda
  double sigma2_prior_a = 1.0;  // inverse-gamma shape
  double sigma2_prior_b = 1.0;  // inverse-gamma scale
  std::uint64_t seed = 1;
  int crop_length = 0;        // 0 = no cropping
  int permutations = 10;      // P copies per (recording, speaker)
  int eval_every = 5;         // epochs between validation decodes
  int validation_beam_width = 2;
  int threads = 0;            // 0 = all cores

  void validate() const;
};

struct IterationStats {
  int iteration = 0;
  double loss = 0.0;
  double cluster_mean_variance = 0.0;
};

struct TrainReport {
  std::vector<IterationStats> iterations;
  std::vector<std::pair<int, double>> validation_der;  // (iteration, der)
  double final_validation_der = 0.0;
  bool diverged = false;
};

std::string train_report_jsonl(const TrainReport& report);

struct LossResult {
  double loss = 0.0;
  ModelGradients grads;
};

// Mean of `num_samples` draws uniform with replacement from the suffix.
VectorXd sample_mean(const MatrixXd& frames, int suffix_start, int num_samples,
                     Rng& rng);

// Targets for one sequence: frame j itself (mse) or the sample mean of the
// unseen suffix starting at j (sml). Targets carry no gradient.
std::vector<VectorXd> mse_targets(const MatrixXd& frames);
std::vector<VectorXd> sml_targets(const MatrixXd& frames, int num_samples,
                                  Rng& rng);

// Sum over positions of the squared distance between the target and the
// running-mean prediction, with gradients over the network parameters.
LossResult mse_loss(const SpeakerModel& model, const SpeakerTrainSequence& seq);
LossResult sml_loss(const SpeakerModel& model, const SpeakerTrainSequence& seq,
                    int num_samples, Rng& rng);

// Full objective over a batch: squared error / (2 sigma^2) plus the Gaussian
// volume term, an L2 penalty on the network parameters and an inverse-gamma
// penalty on sigma^2. sigma^2 is parameterized as log sigma^2.
struct ObjectiveResult {
  double loss = 0.0;
  ModelGradients grads;
  double squared_error = 0.0;
  long prediction_count = 0;
};

ObjectiveResult training_objective(
    const SpeakerModel& model,
    std::span<const SpeakerTrainSequence* const> batch,
    const TrainConfig& config, std::uint64_t batch_seed);

// Frozen-target variant used by gradient checks: targets[i][j] pins the
// target for batch item i position j.
ObjectiveResult training_objective_with_targets(
    const SpeakerModel& model,
    std::span<const SpeakerTrainSequence* const> batch,
    const std::vector<std::vector<VectorXd>>& targets,
    const TrainConfig& config);

// ---------------------------------------------------------------------------
// Adam
// ---------------------------------------------------------------------------

struct AdamHyper {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  ModelGradients m;  // first moment
  ModelGradients v;  // second moment
  long t = 0;

  static AdamState zeros(const ModelConfig& config);
};

// Textbook Adam with bias correction over every network tensor and
// log sigma^2. log sigma^2 is floored at log(1e-8) with a warning.
void adam_step(SpeakerModel& model, const ModelGradients& grads,
               AdamState& state, const AdamHyper& hyper);

// ---------------------------------------------------------------------------
// Diagnostics and the full loop
// ---------------------------------------------------------------------------

// Population variance of a trace of vectors: per-dimension variance across
// positions, averaged over dimensions.
double mean_trace_variance(const std::vector<VectorXd>& trace);

// Average over sequences of the variance of the running-mean outputs the
// network produces along each sequence.
double cluster_mean_variance(const SpeakerModel& model,
                             std::span<const SpeakerTrainSequence* const> sample);

struct TrainResult {
  SpeakerModel model;
  PriorParams priors;
  TrainReport report;
};

// Builds the permuted single-speaker corpus, estimates priors from the
// training labels, optimizes with Adam and keeps the snapshot with the best
// validation DER (decoded with a narrow beam).
TrainResult train(const Dataset& train_set, const Dataset& validation_set,
                  const ModelConfig& model_config, const TrainConfig& config);

}  // namespace uisrnn

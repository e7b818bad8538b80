#include "uisrnn/training.hpp"

#include <cmath>
#include <sstream>

#include "uisrnn/decoder.hpp"
#include "uisrnn/evaluation.hpp"

namespace uisrnn {

namespace {
const double kLogSigma2Floor = std::log(1e-8);
}

void TrainConfig::validate() const {
  if (num_samples < 1) throw Error(ErrCode::config, "num_samples must be >= 1");
  if (!(learning_rate > 0.0)) throw Error(ErrCode::config, "learning_rate <= 0");
  if (batch_size < 1) throw Error(ErrCode::config, "batch_size must be >= 1");
  if (epochs < 1) throw Error(ErrCode::config, "epochs must be >= 1");
  if (l2_weight < 0.0) throw Error(ErrCode::config, "l2_weight must be >= 0");
  if (!(sigma2_prior_a > 0.0) || !(sigma2_prior_b > 0.0))
    throw Error(ErrCode::config, "sigma2 prior parameters must be positive");
  if (crop_length < 0) throw Error(ErrCode::config, "crop_length must be >= 0");
  if (permutations < 1) throw Error(ErrCode::config, "permutations must be >= 1");
  if (eval_every < 1) throw Error(ErrCode::config, "eval_every must be >= 1");
  if (validation_beam_width < 1)
    throw Error(ErrCode::config, "validation beam width must be >= 1");
}

std::string train_report_jsonl(const TrainReport& report) {
  std::ostringstream out;
  out.precision(17);
  for (const auto& it : report.iterations)
    out << "{\"iteration\":" << it.iteration << ",\"loss\":" << it.loss
        << ",\"cluster_mean_variance\":" << it.cluster_mean_variance << "}\n";
  for (const auto& [iter, der] : report.validation_der)
    out << "{\"iteration\":" << iter << ",\"validation_der\":" << der << "}\n";
  out << "{\"final_validation_der\":" << report.final_validation_der
      << ",\"diverged\":" << (report.diverged ? "true" : "false") << "}\n";
  return out.str();
}

VectorXd sample_mean(const MatrixXd& frames, int suffix_start, int num_samples,
                     Rng& rng) {
  const int L = static_cast<int>(frames.rows());
  if (suffix_start < 0 || suffix_start >= L)
    throw Error(ErrCode::validation, "sample_mean: empty suffix");
  if (num_samples < 1)
    throw Error(ErrCode::validation, "sample_mean: need at least one draw");
  VectorXd acc = VectorXd::Zero(frames.cols());
  const std::uint64_t span = static_cast<std::uint64_t>(L - suffix_start);
  for (int n = 0; n < num_samples; ++n) {
    int idx = suffix_start + static_cast<int>(rng.uniform_u64(span));
    acc += frames.row(idx).transpose();
  }
  return acc / num_samples;
}

std::vector<VectorXd> mse_targets(const MatrixXd& frames) {
  std::vector<VectorXd> targets;
  targets.reserve(frames.rows());
  for (long j = 0; j < frames.rows(); ++j)
    targets.push_back(frames.row(j).transpose());
  return targets;
}

std::vector<VectorXd> sml_targets(const MatrixXd& frames, int num_samples,
                                  Rng& rng) {
  std::vector<VectorXd> targets;
  targets.reserve(frames.rows());
  for (long j = 0; j < frames.rows(); ++j)
    targets.push_back(
        sample_mean(frames, static_cast<int>(j), num_samples, rng));
  return targets;
}

namespace {

LossResult raw_squared_loss(const SpeakerModel& model, const MatrixXd& frames,
                            const std::vector<VectorXd>& targets) {
  LossResult result;
  result.grads = ModelGradients::zeros(model.config);
  SequenceForward fwd = sequence_forward(model, frames);
  result.loss = squared_error_per_dim(fwd, targets).sum();
  VectorXd weight = VectorXd::Constant(model.dim(), 2.0);
  sequence_backward(model, fwd, targets, weight, result.grads);
  return result;
}

}  // namespace

LossResult mse_loss(const SpeakerModel& model, const SpeakerTrainSequence& seq) {
  return raw_squared_loss(model, seq.frames, mse_targets(seq.frames));
}

LossResult sml_loss(const SpeakerModel& model, const SpeakerTrainSequence& seq,
                    int num_samples, Rng& rng) {
  return raw_squared_loss(model, seq.frames,
                          sml_targets(seq.frames, num_samples, rng));
}

ObjectiveResult training_objective_with_targets(
    const SpeakerModel& model,
    std::span<const SpeakerTrainSequence* const> batch,
    const std::vector<std::vector<VectorXd>>& targets,
    const TrainConfig& config) {
  if (batch.empty()) throw Error(ErrCode::validation, "empty batch");
  if (targets.size() != batch.size())
    throw Error(ErrCode::dim_mismatch, "targets do not match batch");

  const int D = model.dim();
  const VectorXd sigma2 = model.sigma2_per_dim();
  const VectorXd inv_sigma2 = sigma2.cwiseInverse();

  ObjectiveResult result;
  result.grads = ModelGradients::zeros(model.config);

  // Per-sequence passes may run concurrently; the reduction below walks the
  // batch in index order so results do not depend on the thread count.
  std::vector<ModelGradients> item_grads(batch.size());
  std::vector<VectorXd> item_error(batch.size());
  std::vector<long> item_count(batch.size());
  parallel_for(batch.size(), config.threads, [&](std::size_t i) {
    item_grads[i] = ModelGradients::zeros(model.config);
    SequenceForward fwd = sequence_forward(model, batch[i]->frames);
    item_error[i] = squared_error_per_dim(fwd, targets[i]);
    item_count[i] = fwd.length();
    sequence_backward(model, fwd, targets[i], inv_sigma2, item_grads[i]);
  });

  VectorXd error_per_dim = VectorXd::Zero(D);
  long count = 0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    result.grads += item_grads[i];
    error_per_dim += item_error[i];
    count += item_count[i];
  }
  result.squared_error = error_per_dim.sum();
  result.prediction_count = count;

  const double a = config.sigma2_prior_a;
  const double b = config.sigma2_prior_b;
  const double lambda = config.l2_weight;

  double loss = 0.0;
  if (model.sigma2.size() == 1) {
    double s2 = sigma2(0);
    loss += result.squared_error / (2.0 * s2) +
            0.5 * D * count * std::log(s2) + (a + 1.0) * std::log(s2) + b / s2;
    result.grads.d_log_sigma2(0) = -result.squared_error / (2.0 * s2) +
                                   0.5 * D * count + (a + 1.0) - b / s2;
  } else {
    for (int d = 0; d < D; ++d) {
      double s2 = sigma2(d);
      loss += error_per_dim(d) / (2.0 * s2) + 0.5 * count * std::log(s2) +
              (a + 1.0) * std::log(s2) + b / s2;
      result.grads.d_log_sigma2(d) =
          -error_per_dim(d) / (2.0 * s2) + 0.5 * count + (a + 1.0) - b / s2;
    }
  }

  if (lambda > 0.0) {
    double norm2 = model.W_u.squaredNorm() + model.U_u.squaredNorm() +
                   model.b_u.squaredNorm() + model.W_r.squaredNorm() +
                   model.U_r.squaredNorm() + model.b_r.squaredNorm() +
                   model.W_c.squaredNorm() + model.U_c.squaredNorm() +
                   model.b_c.squaredNorm() + model.head_W.squaredNorm() +
                   model.head_b.squaredNorm();
    loss += lambda * norm2;
    result.grads.W_u += 2.0 * lambda * model.W_u;
    result.grads.U_u += 2.0 * lambda * model.U_u;
    result.grads.b_u += 2.0 * lambda * model.b_u;
    result.grads.W_r += 2.0 * lambda * model.W_r;
    result.grads.U_r += 2.0 * lambda * model.U_r;
    result.grads.b_r += 2.0 * lambda * model.b_r;
    result.grads.W_c += 2.0 * lambda * model.W_c;
    result.grads.U_c += 2.0 * lambda * model.U_c;
    result.grads.b_c += 2.0 * lambda * model.b_c;
    result.grads.head_W += 2.0 * lambda * model.head_W;
    result.grads.head_b += 2.0 * lambda * model.head_b;
  }

  result.loss = loss;
  return result;
}

ObjectiveResult training_objective(
    const SpeakerModel& model,
    std::span<const SpeakerTrainSequence* const> batch,
    const TrainConfig& config, std::uint64_t batch_seed) {
  std::vector<std::vector<VectorXd>> targets(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    if (config.loss_kind == LossKind::mse) {
      targets[i] = mse_targets(batch[i]->frames);
    } else {
      Rng rng(derive_seed(batch_seed, "sml-target", i));
      targets[i] = sml_targets(batch[i]->frames, config.num_samples, rng);
    }
  }
  return training_objective_with_targets(model, batch, targets, config);
}

// ---------------------------------------------------------------------------
// Adam
// ---------------------------------------------------------------------------

AdamState AdamState::zeros(const ModelConfig& config) {
  return {ModelGradients::zeros(config), ModelGradients::zeros(config), 0};
}

namespace {

void adam_update(Eigen::Ref<MatrixXd> param, const MatrixXd& grad,
                 MatrixXd& m, MatrixXd& v, const AdamHyper& hyper,
                 double bias1, double bias2) {
  m = hyper.beta1 * m + (1.0 - hyper.beta1) * grad;
  v = hyper.beta2 * v + (1.0 - hyper.beta2) * grad.cwiseProduct(grad);
  MatrixXd m_hat = m / bias1;
  MatrixXd v_hat = v / bias2;
  param -= hyper.learning_rate *
           m_hat.cwiseQuotient((v_hat.cwiseSqrt().array() + hyper.epsilon)
                                   .matrix());
}

void adam_update_vec(Eigen::Ref<VectorXd> param, const VectorXd& grad,
                     VectorXd& m, VectorXd& v, const AdamHyper& hyper,
                     double bias1, double bias2) {
  m = hyper.beta1 * m + (1.0 - hyper.beta1) * grad;
  v = hyper.beta2 * v + (1.0 - hyper.beta2) * grad.cwiseProduct(grad);
  VectorXd m_hat = m / bias1;
  VectorXd v_hat = v / bias2;
  param -= hyper.learning_rate *
           m_hat.cwiseQuotient((v_hat.cwiseSqrt().array() + hyper.epsilon)
                                   .matrix());
}

}  // namespace

void adam_step(SpeakerModel& model, const ModelGradients& grads,
               AdamState& state, const AdamHyper& hyper) {
  state.t += 1;
  double bias1 = 1.0 - std::pow(hyper.beta1, static_cast<double>(state.t));
  double bias2 = 1.0 - std::pow(hyper.beta2, static_cast<double>(state.t));

  adam_update(model.W_u, grads.W_u, state.m.W_u, state.v.W_u, hyper, bias1, bias2);
  adam_update(model.U_u, grads.U_u, state.m.U_u, state.v.U_u, hyper, bias1, bias2);
  adam_update_vec(model.b_u, grads.b_u, state.m.b_u, state.v.b_u, hyper, bias1, bias2);
  adam_update(model.W_r, grads.W_r, state.m.W_r, state.v.W_r, hyper, bias1, bias2);
  adam_update(model.U_r, grads.U_r, state.m.U_r, state.v.U_r, hyper, bias1, bias2);
  adam_update_vec(model.b_r, grads.b_r, state.m.b_r, state.v.b_r, hyper, bias1, bias2);
  adam_update(model.W_c, grads.W_c, state.m.W_c, state.v.W_c, hyper, bias1, bias2);
  adam_update(model.U_c, grads.U_c, state.m.U_c, state.v.U_c, hyper, bias1, bias2);
  adam_update_vec(model.b_c, grads.b_c, state.m.b_c, state.v.b_c, hyper, bias1, bias2);
  adam_update(model.head_W, grads.head_W, state.m.head_W, state.v.head_W, hyper, bias1, bias2);
  adam_update_vec(model.head_b, grads.head_b, state.m.head_b, state.v.head_b, hyper, bias1, bias2);

  // sigma2 moves in log space so it stays positive.
  VectorXd log_sigma2 = model.sigma2.array().log().matrix();
  adam_update_vec(log_sigma2, grads.d_log_sigma2, state.m.d_log_sigma2,
                  state.v.d_log_sigma2, hyper, bias1, bias2);
  bool clamped = false;
  for (long d = 0; d < log_sigma2.size(); ++d) {
    if (log_sigma2(d) < kLogSigma2Floor) {
      log_sigma2(d) = kLogSigma2Floor;
      clamped = true;
    }
  }
  if (clamped) log_warn("sigma2 clamped at its floor of 1e-8");
  model.sigma2 = log_sigma2.array().exp().matrix();
}

// ---------------------------------------------------------------------------
// Diagnostics
// ---------------------------------------------------------------------------

double mean_trace_variance(const std::vector<VectorXd>& trace) {
  if (trace.empty()) throw Error(ErrCode::validation, "empty trace");
  const long D = trace.front().size();
  VectorXd mean = VectorXd::Zero(D);
  for (const auto& v : trace) mean += v;
  mean /= static_cast<double>(trace.size());
  VectorXd var = VectorXd::Zero(D);
  for (const auto& v : trace) var += (v - mean).cwiseProduct(v - mean);
  var /= static_cast<double>(trace.size());
  return var.mean();
}

double cluster_mean_variance(
    const SpeakerModel& model,
    std::span<const SpeakerTrainSequence* const> sample) {
  if (sample.empty()) throw Error(ErrCode::validation, "empty sample");
  double acc = 0.0;
  for (const auto* seq : sample) {
    SequenceForward fwd = sequence_forward(model, seq->frames);
    acc += mean_trace_variance(fwd.means);
  }
  return acc / static_cast<double>(sample.size());
}

// ---------------------------------------------------------------------------
// Training loop
// ---------------------------------------------------------------------------

namespace {

MatrixXd crop_frames(const MatrixXd& frames, int crop_length, Rng& rng) {
  const long L = frames.rows();
  if (crop_length <= 0 || L <= crop_length) return frames;
  long offset =
      static_cast<long>(rng.uniform_u64(static_cast<std::uint64_t>(L - crop_length + 1)));
  return frames.middleRows(offset, crop_length);
}

double validate_der(const SpeakerModel& model, const PriorParams& priors,
                    const Dataset& validation_set, int beam_width, int threads) {
  DecodeConfig config;
  config.beam_width = beam_width;
  std::vector<LabelSequence> hyps(validation_set.recordings.size());
  std::vector<FrameReference> refs(validation_set.recordings.size());
  parallel_for(validation_set.recordings.size(), threads, [&](std::size_t i) {
    const auto& rec = validation_set.recordings[i];
    hyps[i] = beam_decode(rec.embeddings, model, priors, config).labels;
    refs[i] = reference_from_labels(rec.labels, rec.embeddings.frame_duration);
  });
  std::vector<ScoredRecording> pairs;
  for (std::size_t i = 0; i < hyps.size(); ++i)
    pairs.push_back({validation_set.recordings[i].domain, &refs[i], &hyps[i]});
  return der_corpus(pairs).overall.der();
}

}  // namespace

TrainResult train(const Dataset& train_set, const Dataset& validation_set,
                  const ModelConfig& model_config, const TrainConfig& config) {
  config.validate();
  if (train_set.empty() || validation_set.empty())
    throw Error(ErrCode::validation, "train and validation sets must be nonempty");

  auto corpus = build_training_sequences(train_set, config.permutations,
                                         derive_seed(config.seed, "permute"));
  if (corpus.empty())
    throw Error(ErrCode::validation, "no training sequences");

  std::vector<LabelSequence> train_labels;
  for (const auto& rec : train_set.recordings)
    train_labels.push_back(rec.labels);

  TrainResult result;
  result.priors.alpha = estimate_alpha(train_labels);
  result.priors.p0 = estimate_p0(train_labels);

  SpeakerModel model =
      SpeakerModel::init(model_config, derive_seed(config.seed, "init"));
  AdamState adam = AdamState::zeros(model_config);
  AdamHyper hyper;
  hyper.learning_rate = config.learning_rate;

  SpeakerModel best_model = model;
  double best_der = std::numeric_limits<double>::infinity();
  bool evaluated = false;

  Rng shuffle_rng(derive_seed(config.seed, "epoch-shuffle"));
  int iteration = 0;

  for (int epoch = 1; epoch <= config.epochs && !result.report.diverged;
       ++epoch) {
    std::vector<int> order(corpus.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    shuffle_rng.shuffle(order);

    for (std::size_t start = 0; start < order.size();
         start += config.batch_size) {
      std::size_t end =
          std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));

      // Crops are re-sampled per visit; cropped copies live for this batch.
      std::vector<SpeakerTrainSequence> cropped;
      std::vector<const SpeakerTrainSequence*> batch;
      cropped.reserve(end - start);
      for (std::size_t i = start; i < end; ++i) {
        const auto& seq = corpus[order[i]];
        if (config.crop_length > 0 && seq.length() > config.crop_length) {
          Rng crop_rng(derive_seed(config.seed, "crop",
                                   static_cast<std::uint64_t>(epoch),
                                   static_cast<std::uint64_t>(order[i])));
          SpeakerTrainSequence c = seq;
          c.frames = crop_frames(seq.frames, config.crop_length, crop_rng);
          cropped.push_back(std::move(c));
          batch.push_back(&cropped.back());
        } else {
          batch.push_back(&seq);
        }
      }

      std::uint64_t batch_seed =
          derive_seed(config.seed, "batch", static_cast<std::uint64_t>(epoch),
                      static_cast<std::uint64_t>(start));
      ObjectiveResult obj = training_objective(
          model, std::span<const SpeakerTrainSequence* const>(batch), config,
          batch_seed);
      if (!std::isfinite(obj.loss) || !obj.grads.all_finite()) {
        log_warn("training diverged at iteration " + std::to_string(iteration));
        result.report.diverged = true;
        break;
      }
      adam_step(model, obj.grads, adam, hyper);

      IterationStats stats;
      stats.iteration = iteration;
      stats.loss = obj.loss;
      stats.cluster_mean_variance = cluster_mean_variance(
          model, std::span<const SpeakerTrainSequence* const>(batch));
      result.report.iterations.push_back(stats);
      ++iteration;
    }

    if (result.report.diverged) break;
    if (epoch % config.eval_every == 0 || epoch == config.epochs) {
      double der = validate_der(model, result.priors, validation_set,
                                config.validation_beam_width, config.threads);
      result.report.validation_der.emplace_back(iteration, der);
      if (!evaluated || der < best_der) {
        best_der = der;
        best_model = model;
        evaluated = true;
      }
    }
  }

  if (!evaluated) {
    best_der = validate_der(model, result.priors, validation_set,
                            config.validation_beam_width, config.threads);
    best_model = model;
  }
  result.model = std::move(best_model);
  result.report.final_validation_der = best_der;
  return result;
}

}  // namespace uisrnn

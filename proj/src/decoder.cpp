#include "uisrnn/decoder.hpp"

namespace uisrnn {

std::vector<Expansion> expand(const BeamHypothesis& hyp, const VectorXd& x,
                              const SpeakerModel& model,
                              const PriorParams& priors, int max_speakers) {
  GruBackend backend(model);
  return detail::expand_generic(hyp, x, backend, priors, max_speakers);
}

DecodeResult beam_decode(const EmbeddingSequence& sequence,
                         const SpeakerModel& model, const PriorParams& priors,
                         const DecodeConfig& config) {
  model.validate();
  GruBackend backend(model);
  return detail::beam_decode_generic(sequence, backend, priors, config);
}

DecodeResult exhaustive_decode(const EmbeddingSequence& sequence,
                               const SpeakerModel& model,
                               const PriorParams& priors, int limit) {
  model.validate();
  priors.validate();
  GruBackend backend(model);
  return detail::exhaustive_decode_generic(sequence, backend, priors, limit);
}

DecodeResult cumulative_mean_decode(const EmbeddingSequence& sequence,
                                    const PriorParams& priors,
                                    const DecodeConfig& config, double sigma2) {
  CumulativeMeanBackend backend(sequence.dim(), sigma2);
  return detail::beam_decode_generic(sequence, backend, priors, config);
}

double score_labeling(const EmbeddingSequence& sequence,
                      const LabelSequence& labels, const SpeakerModel& model,
                      const PriorParams& priors) {
  GruBackend backend(model);
  return detail::score_labeling_generic(sequence, labels, backend, priors);
}

double label_process_log_prob(const LabelSequence& labels,
                              const PriorParams& priors) {
  priors.validate();
  if (!labels.is_canonical())
    throw Error(ErrCode::validation, "labeling is not canonical");
  BlockCounts blocks = update_blocks(BlockCounts{}, 1);
  double total = 0.0;
  for (std::size_t t = 1; t < labels.labels.size(); ++t) {
    int y = labels.labels[t];
    int prev = labels.labels[t - 1];
    if (y == prev) {
      total += change_log_prob(priors.p0, false);
    } else {
      bool is_new = y == blocks.num_speakers() + 1;
      total += change_log_prob(priors.p0, true) +
               assignment_log_prob(blocks, priors.alpha,
                                   is_new ? kNewSpeaker : y);
      blocks = update_blocks(blocks, y);
    }
  }
  return total;
}

std::vector<std::vector<int>> enumerate_canonical_labelings(int T) {
  if (T < 1) throw Error(ErrCode::validation, "T must be >= 1");
  std::vector<std::vector<int>> out;
  std::vector<int> prefix;
  auto recurse = [&](auto&& self, int max_used) -> void {
    if (static_cast<int>(prefix.size()) == T) {
      out.push_back(prefix);
      return;
    }
    for (int y = 1; y <= max_used + 1; ++y) {
      prefix.push_back(y);
      self(self, std::max(max_used, y));
      prefix.pop_back();
    }
  };
  prefix.push_back(1);
  recurse(recurse, 1);
  return out;
}

}  // namespace uisrnn

#pragma once

#include <algorithm>
#include <memory>
#include <vector>

#include "uisrnn/model.hpp"
#include "uisrnn/priors.hpp"
#include "uisrnn/types.hpp"

namespace uisrnn {

struct DecodeConfig {
  int beam_width = 15;
  int max_speakers = 0;  // 0 = unbounded
  bool trace = false;

  void validate() const {
    if (beam_width < 1) throw Error(ErrCode::config, "beam width must be >= 1");
    if (max_speakers < 0) throw Error(ErrCode::config, "max_speakers < 0");
  }
};

struct DecodeResult {
  LabelSequence labels;
  double log_joint = 0.0;
  // With trace enabled: surviving hypothesis scores per frame, descending.
  std::vector<std::vector<double>> beam_trace;
};

// One partial labeling under beam search. Speaker states are shared between
// hypotheses and replaced copy-on-write when a speaker observes a frame.
template <typename State>
struct BasicHypothesis {
  std::vector<int> labels;
  double log_joint = 0.0;
  std::vector<std::shared_ptr<const State>> instances;
  BlockCounts blocks;

  int num_speakers() const { return static_cast<int>(instances.size()); }
  int current_speaker() const { return labels.back(); }
};

using BeamHypothesis = BasicHypothesis<SpeakerInstanceState>;

struct Expansion {
  int label = 0;      // num_speakers() + 1 denotes a new speaker
  double delta = 0.0; // log-joint increment
};

// Scores every admissible continuation of `hyp` against frame x: continue the
// current speaker, switch to each other existing speaker, or open a new one.
std::vector<Expansion> expand(const BeamHypothesis& hyp, const VectorXd& x,
                              const SpeakerModel& model,
                              const PriorParams& priors, int max_speakers = 0);

DecodeResult beam_decode(const EmbeddingSequence& sequence,
                         const SpeakerModel& model, const PriorParams& priors,
                         const DecodeConfig& config);

// Enumerates every canonical labeling (T <= limit) and returns the exact
// maximizer of the factorized joint. Test oracle for beam_decode.
DecodeResult exhaustive_decode(const EmbeddingSequence& sequence,
                               const SpeakerModel& model,
                               const PriorParams& priors, int limit = 10);

// Same search with the network replaced by a running arithmetic mean of each
// speaker's observed embeddings; a new speaker's first frame scores at zero
// distance. sigma2 is fixed and supplied by the caller.
DecodeResult cumulative_mean_decode(const EmbeddingSequence& sequence,
                                    const PriorParams& priors,
                                    const DecodeConfig& config, double sigma2);

// Log joint of a fixed labeling, accumulated frame by frame in decode order.
double score_labeling(const EmbeddingSequence& sequence,
                      const LabelSequence& labels, const SpeakerModel& model,
                      const PriorParams& priors);

// The change x assignment part of the joint, without observation densities.
double label_process_log_prob(const LabelSequence& labels,
                              const PriorParams& priors);

// All restricted-growth label strings of length T in lexicographic order.
std::vector<std::vector<int>> enumerate_canonical_labelings(int T);

// ---------------------------------------------------------------------------
// Generic engine. A Backend supplies per-speaker state and the emission
// model; the label process always comes from PriorParams.
//
//   struct Backend {
//     using State = ...;
//     State new_state(int speaker_index, const VectorXd& x) const;
//     VectorXd predict(const State& s) const;
//     State advance(const State& s, const VectorXd& x) const;
//     double loglik(const VectorXd& x, const VectorXd& mu) const;
//     double loglik_new(int speaker_index, const VectorXd& x) const;
//     int dim() const;
//   };
// ---------------------------------------------------------------------------

namespace detail {

template <typename Backend>
std::vector<Expansion> expand_generic(
    const BasicHypothesis<typename Backend::State>& hyp, const VectorXd& x,
    const Backend& backend, const PriorParams& priors, int max_speakers) {
  std::vector<Expansion> out;
  const int K = hyp.num_speakers();
  const int cur = hyp.current_speaker();
  out.reserve(K + 1);
  out.push_back({cur, change_log_prob(priors.p0, false) +
                          backend.loglik(x, backend.predict(*hyp.instances[cur - 1]))});
  for (int k = 1; k <= K; ++k) {
    if (k == cur) continue;
    out.push_back({k, change_log_prob(priors.p0, true) +
                          assignment_log_prob(hyp.blocks, priors.alpha, k) +
                          backend.loglik(x, backend.predict(*hyp.instances[k - 1]))});
  }
  if (max_speakers == 0 || K < max_speakers) {
    out.push_back({K + 1, change_log_prob(priors.p0, true) +
                              assignment_log_prob(hyp.blocks, priors.alpha,
                                                  kNewSpeaker) +
                              backend.loglik_new(K, x)});
  }
  return out;
}

template <typename Backend>
DecodeResult beam_decode_generic(const EmbeddingSequence& sequence,
                                 const Backend& backend,
                                 const PriorParams& priors,
                                 const DecodeConfig& config) {
  using Hyp = BasicHypothesis<typename Backend::State>;
  sequence.validate();
  priors.validate();
  config.validate();
  if (sequence.dim() != backend.dim())
    throw Error(ErrCode::dim_mismatch,
                "sequence dim " + std::to_string(sequence.dim()) +
                    " != model dim " + std::to_string(backend.dim()));

  const int T = sequence.length();
  DecodeResult result;

  Hyp root;
  root.labels = {1};
  {
    VectorXd x1 = sequence.frame(0);
    root.log_joint = backend.loglik_new(0, x1);
    root.instances.push_back(std::make_shared<const typename Backend::State>(
        backend.new_state(0, x1)));
    root.blocks = update_blocks(BlockCounts{}, 1);
  }
  std::vector<Hyp> beam{std::move(root)};
  if (config.trace) result.beam_trace.push_back({beam[0].log_joint});

  struct Candidate {
    int parent;
    int label;
    double score;
  };
  auto candidate_less = [&beam](const Candidate& a, const Candidate& b) {
    if (a.score != b.score) return a.score > b.score;
    const auto& la = beam[a.parent].labels;
    const auto& lb = beam[b.parent].labels;
    if (la != lb)
      return std::lexicographical_compare(la.begin(), la.end(), lb.begin(),
                                          lb.end());
    return a.label < b.label;
  };

  for (int t = 1; t < T; ++t) {
    VectorXd x = sequence.frame(t);
    std::vector<Candidate> candidates;
    for (int hi = 0; hi < static_cast<int>(beam.size()); ++hi) {
      for (const auto& e :
           expand_generic(beam[hi], x, backend, priors, config.max_speakers))
        candidates.push_back({hi, e.label, beam[hi].log_joint + e.delta});
    }
    std::size_t keep =
        std::min<std::size_t>(candidates.size(), config.beam_width);
    std::partial_sort(candidates.begin(), candidates.begin() + keep,
                      candidates.end(), candidate_less);
    candidates.resize(keep);

    std::vector<Hyp> next;
    next.reserve(keep);
    for (const auto& cand : candidates) {
      const Hyp& parent = beam[cand.parent];
      Hyp hyp;
      hyp.labels = parent.labels;
      hyp.labels.push_back(cand.label);
      hyp.log_joint = cand.score;
      hyp.instances = parent.instances;
      if (cand.label == parent.num_speakers() + 1) {
        hyp.instances.push_back(
            std::make_shared<const typename Backend::State>(
                backend.new_state(parent.num_speakers(), x)));
      } else {
        hyp.instances[cand.label - 1] =
            std::make_shared<const typename Backend::State>(
                backend.advance(*hyp.instances[cand.label - 1], x));
      }
      hyp.blocks = cand.label == parent.current_speaker()
                       ? parent.blocks
                       : update_blocks(parent.blocks, cand.label);
      next.push_back(std::move(hyp));
    }
    beam = std::move(next);
    if (config.trace) {
      std::vector<double> scores;
      for (const auto& hyp : beam) scores.push_back(hyp.log_joint);
      result.beam_trace.push_back(std::move(scores));
    }
  }

  result.labels.labels = beam.front().labels;
  result.log_joint = beam.front().log_joint;
  return result;
}

template <typename Backend>
double score_labeling_generic(const EmbeddingSequence& sequence,
                              const LabelSequence& labels,
                              const Backend& backend,
                              const PriorParams& priors) {
  sequence.validate();
  priors.validate();
  if (labels.length() != sequence.length())
    throw Error(ErrCode::dim_mismatch, "labels length != sequence length");
  if (!labels.is_canonical())
    throw Error(ErrCode::validation, "labeling is not canonical");

  std::vector<typename Backend::State> states;
  BlockCounts blocks;
  double log_joint = 0.0;
  for (int t = 0; t < sequence.length(); ++t) {
    VectorXd x = sequence.frame(t);
    int y = labels.labels[t];
    int K = static_cast<int>(states.size());
    if (t == 0) {
      log_joint = backend.loglik_new(0, x);
    } else {
      int prev = labels.labels[t - 1];
      if (y == prev) {
        log_joint += change_log_prob(priors.p0, false) +
                     backend.loglik(x, backend.predict(states[y - 1]));
      } else if (y <= K) {
        log_joint += change_log_prob(priors.p0, true) +
                     assignment_log_prob(blocks, priors.alpha, y) +
                     backend.loglik(x, backend.predict(states[y - 1]));
      } else {
        log_joint += change_log_prob(priors.p0, true) +
                     assignment_log_prob(blocks, priors.alpha, kNewSpeaker) +
                     backend.loglik_new(K, x);
      }
    }
    if (y == K + 1)
      states.push_back(backend.new_state(K, x));
    else
      states[y - 1] = backend.advance(states[y - 1], x);
    blocks = y == blocks.current_speaker ? blocks : update_blocks(blocks, y);
  }
  return log_joint;
}

template <typename Backend>
DecodeResult exhaustive_decode_generic(const EmbeddingSequence& sequence,
                                       const Backend& backend,
                                       const PriorParams& priors, int limit) {
  sequence.validate();
  if (sequence.length() > limit)
    throw Error(ErrCode::unsupported,
                "exhaustive decode refused for T=" +
                    std::to_string(sequence.length()) + " > limit " +
                    std::to_string(limit));
  DecodeResult best;
  bool have = false;
  LabelSequence candidate;
  for (const auto& labeling : enumerate_canonical_labelings(sequence.length())) {
    candidate.labels = labeling;
    double score = score_labeling_generic(sequence, candidate, backend, priors);
    // Lexicographic enumeration + strict improvement = smallest tie wins.
    if (!have || score > best.log_joint) {
      best.labels = candidate;
      best.log_joint = score;
      have = true;
    }
  }
  return best;
}

}  // namespace detail

// Backends ------------------------------------------------------------------

struct GruBackend {
  const SpeakerModel* model;
  SpeakerInstanceState fresh;

  using State = SpeakerInstanceState;
  explicit GruBackend(const SpeakerModel& m)
      : model(&m), fresh(new_instance(m)) {}

  State new_state(int, const VectorXd& x) const {
    return observe(*model, fresh, x);
  }
  VectorXd predict(const State& s) const { return s.predict_mean(); }
  State advance(const State& s, const VectorXd& x) const {
    return observe(*model, s, x);
  }
  double loglik(const VectorXd& x, const VectorXd& mu) const {
    return log_likelihood(x, mu, model->sigma2);
  }
  double loglik_new(int, const VectorXd& x) const {
    return loglik(x, fresh.predict_mean());
  }
  int dim() const { return model->dim(); }
};

struct CumulativeMeanBackend {
  int dim_ = 0;
  VectorXd sigma2;

  CumulativeMeanBackend(int dim, double s2)
      : dim_(dim), sigma2(VectorXd::Constant(1, s2)) {
    if (!(s2 > 0.0)) throw Error(ErrCode::config, "sigma2 must be positive");
  }

  struct State {
    VectorXd sum;
    int count = 0;
  };
  State new_state(int, const VectorXd& x) const { return {x, 1}; }
  VectorXd predict(const State& s) const { return s.sum / s.count; }
  State advance(const State& s, const VectorXd& x) const {
    return {s.sum + x, s.count + 1};
  }
  double loglik(const VectorXd& x, const VectorXd& mu) const {
    return log_likelihood(x, mu, sigma2);
  }
  // A new speaker's mean is taken to be the frame itself: zero distance.
  double loglik_new(int, const VectorXd& x) const { return loglik(x, x); }
  int dim() const { return dim_; }
};

// Test/verification backend: every speaker's mean is known in advance.
struct FixedMeansBackend {
  std::vector<VectorXd> means;  // means[k] for the k-th speaker to appear
  VectorXd sigma2;

  FixedMeansBackend(std::vector<VectorXd> m, double s2)
      : means(std::move(m)), sigma2(VectorXd::Constant(1, s2)) {}

  struct State {
    int speaker = 0;
  };
  State new_state(int speaker_index, const VectorXd&) const {
    return {speaker_index};
  }
  VectorXd predict(const State& s) const { return means[s.speaker]; }
  State advance(const State& s, const VectorXd&) const { return s; }
  double loglik(const VectorXd& x, const VectorXd& mu) const {
    return log_likelihood(x, mu, sigma2);
  }
  double loglik_new(int speaker_index, const VectorXd& x) const {
    return loglik(x, means.at(speaker_index));
  }
  int dim() const { return static_cast<int>(means.at(0).size()); }
};

template <typename Backend>
DecodeResult beam_decode_with(const EmbeddingSequence& sequence,
                              const Backend& backend, const PriorParams& priors,
                              const DecodeConfig& config) {
  return detail::beam_decode_generic(sequence, backend, priors, config);
}

template <typename Backend>
double score_labeling_with(const EmbeddingSequence& sequence,
                           const LabelSequence& labels, const Backend& backend,
                           const PriorParams& priors) {
  return detail::score_labeling_generic(sequence, labels, backend, priors);
}

}  // namespace uisrnn

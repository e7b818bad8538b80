#include "uisrnn/synthesis.hpp"

#include <map>

#include "uisrnn/priors.hpp"

namespace uisrnn {

void SynthConfig::validate() const {
  if (num_speakers < 1) throw Error(ErrCode::config, "num_speakers must be >= 1");
  if (dim < 1) throw Error(ErrCode::config, "dim must be >= 1");
  if (frames < 1) throw Error(ErrCode::config, "frames must be >= 1");
  if (!(sigma > 0.0)) throw Error(ErrCode::config, "sigma must be positive");
  if (!(p0 > 0.0 && p0 < 1.0)) throw Error(ErrCode::config, "p0 must be in (0,1)");
  if (!(alpha > 0.0)) throw Error(ErrCode::config, "alpha must be positive");
  if (overlap_fraction < 0.0 || overlap_fraction >= 1.0)
    throw Error(ErrCode::config, "overlap_fraction must be in [0, 1)");
  if (!(mean_scale >= 0.0)) throw Error(ErrCode::config, "mean_scale must be >= 0");
  if (!(frame_duration > 0.0))
    throw Error(ErrCode::config, "frame_duration must be positive");
}

SynthResult generate(const SynthConfig& config, const std::string& recording_id,
                     const std::string& domain) {
  config.validate();
  Rng rng(derive_seed(config.seed, "synth:" + recording_id));

  std::vector<VectorXd> means(config.num_speakers);
  for (auto& m : means) {
    m.resize(config.dim);
    for (int d = 0; d < config.dim; ++d) m(d) = config.mean_scale * rng.normal();
  }

  SynthResult result;
  std::vector<int> speakers(config.frames);  // true speaker per frame
  BlockCounts blocks = update_blocks(BlockCounts{}, 1);
  speakers[0] = 1;

  for (int t = 1; t < config.frames; ++t) {
    int prev = speakers[t - 1];
    int next = prev;
    if (rng.uniform() < config.p0) {
      // Weighted choice over other existing speakers plus (under the cap) a
      // new one; when the cap binds the new-speaker mass is dropped and the
      // rest renormalizes.
      bool allow_new = blocks.num_speakers() < config.num_speakers;
      if (!allow_new) ++result.cap_events;
      double z = allow_new ? config.alpha : 0.0;
      for (int k = 1; k <= blocks.num_speakers(); ++k)
        if (k != prev) z += blocks.count_of(k);
      if (z > 0.0) {
        double draw = rng.uniform() * z;
        double acc = 0.0;
        next = 0;
        for (int k = 1; k <= blocks.num_speakers(); ++k) {
          if (k == prev) continue;
          acc += blocks.count_of(k);
          if (draw < acc) {
            next = k;
            break;
          }
        }
        if (next == 0) next = blocks.num_speakers() + 1;  // new speaker
      }
      // z == 0: only the current speaker exists and the cap is hit; stay.
    }
    speakers[t] = next;
    if (next != prev) blocks = update_blocks(blocks, next);
  }

  // Per-frame speaker sets; a slice of frames mixes in a second speaker.
  result.reference.frame_duration = config.frame_duration;
  result.reference.frames.resize(config.frames);
  int instantiated = blocks.num_speakers();
  for (int k = 1; k <= instantiated; ++k)
    result.reference.speaker_names.push_back("spk" + std::to_string(k));

  EmbeddingSequence emb;
  emb.frame_duration = config.frame_duration;
  emb.frames.resize(config.frames, config.dim);
  std::vector<int> raw_labels(config.frames);
  std::map<std::pair<int, int>, int> overlap_ids;
  int next_overlap_id = instantiated + 1;

  for (int t = 0; t < config.frames; ++t) {
    int a = speakers[t];
    bool overlap = config.overlap_fraction > 0.0 && instantiated >= 2 &&
                   rng.uniform() < config.overlap_fraction;
    if (overlap) {
      int partner = 1 + static_cast<int>(rng.uniform_u64(instantiated - 1));
      if (partner >= a) ++partner;
      int lo = std::min(a, partner), hi = std::max(a, partner);
      result.reference.frames[t] = {lo, hi};
      VectorXd mixed = 0.5 * (means[lo - 1] + means[hi - 1]);
      for (int d = 0; d < config.dim; ++d)
        emb.frames(t, d) = mixed(d) + config.sigma * rng.normal();
      auto [it, inserted] = overlap_ids.emplace(std::make_pair(lo, hi),
                                                next_overlap_id);
      if (inserted) ++next_overlap_id;
      raw_labels[t] = it->second;
    } else {
      result.reference.frames[t] = {a};
      for (int d = 0; d < config.dim; ++d)
        emb.frames(t, d) = means[a - 1](d) + config.sigma * rng.normal();
      raw_labels[t] = a;
    }
  }

  result.recording.id = recording_id;
  result.recording.domain = domain;
  result.recording.embeddings = std::move(emb);
  result.recording.labels = relabel_canonical(raw_labels);
  result.recording.validate();
  result.means.assign(means.begin(), means.begin() + instantiated);
  return result;
}

}  // namespace uisrnn

#pragma once

#include <vector>

#include "uisrnn/types.hpp"

namespace uisrnn {

// Label-process parameters: p0 is the Bernoulli speaker-change probability,
// alpha the new-speaker concentration of the assignment process.
struct PriorParams {
  double alpha = 1.0;
  double p0 = 0.5;

  void validate() const;
};

// Block counts per speaker: N_k = number of maximal contiguous runs of
// speaker k seen so far, plus the speaker holding the floor.
struct BlockCounts {
  std::vector<int> counts;  // counts[k-1] = N_k
  int current_speaker = 0;  // 0 before the first frame

  int num_speakers() const { return static_cast<int>(counts.size()); }
  int count_of(int speaker) const { return counts[speaker - 1]; }
};

// Candidate label for the assignment factor; speaker 0 denotes a new speaker.
constexpr int kNewSpeaker = 0;

// alpha = (new-speaker events beyond each recording's first speaker) /
//         (speaker-change events), summed over the corpus.
double estimate_alpha(const std::vector<LabelSequence>& corpus);

// p0 = (speaker-change events) / (adjacent frame pairs), clamped away from
// {0, 1} so log probabilities stay finite.
double estimate_p0(const std::vector<LabelSequence>& corpus);

// ln p0 if changed, ln(1 - p0) otherwise.
double change_log_prob(double p0, bool changed);

// Log probability of switching to `target` given a change: existing speakers
// weigh their block counts, a new speaker weighs alpha, and the current
// speaker is excluded from the normalizer (a change cannot stay put).
double assignment_log_prob(const BlockCounts& blocks, double alpha, int target);

// Advances block counts past label y_t.
BlockCounts update_blocks(const BlockCounts& blocks, int y_t);

}  // namespace uisrnn

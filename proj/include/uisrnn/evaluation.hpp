#pragma once

#include <map>
#include <string>
#include <vector>

#include "uisrnn/types.hpp"

namespace uisrnn {

// Frame-level diarization error, scored without a forgiveness collar.
struct DerBreakdown {
  double missed = 0.0;       // seconds
  double false_alarm = 0.0;  // seconds
  double confusion = 0.0;    // seconds
  double total = 0.0;        // reference speaker-seconds

  double der() const { return (missed + false_alarm + confusion) / total; }

  DerBreakdown& operator+=(const DerBreakdown& other) {
    missed += other.missed;
    false_alarm += other.false_alarm;
    confusion += other.confusion;
    total += other.total;
    return *this;
  }
};

// Injective (possibly partial) map from hypothesis labels to reference
// speakers maximizing the count of frames where the mapped label is active in
// the reference. index = hypothesis label - 1; -1 means unmapped.
std::vector<int> optimal_mapping(const FrameReference& reference,
                                 const LabelSequence& hypothesis);

// Per frame with reference set R and mapped hypothesis singleton H:
//   missed     += max(0, |R| - |H|)
//   false alarm+= max(0, |H| - |R|)
//   confusion  += min(|R|, |H|) - |R intersect H|
//   total      += |R|
// all in frame_duration seconds. With exclude_overlap, frames where |R| >= 2
// are skipped entirely.
DerBreakdown der(const FrameReference& reference, const LabelSequence& hypothesis,
                 bool exclude_overlap = false);

struct ScoredRecording {
  std::string domain;
  const FrameReference* reference;
  const LabelSequence* hypothesis;
};

struct CorpusDer {
  DerBreakdown overall;
  std::map<std::string, DerBreakdown> per_domain;
};

// Components are summed over recordings before dividing (time-weighted).
CorpusDer der_corpus(const std::vector<ScoredRecording>& pairs,
                     bool exclude_overlap = false);

}  // namespace uisrnn

#include "uisrnn/evaluation.hpp"

#include <algorithm>

#include "uisrnn/hungarian.hpp"

namespace uisrnn {

namespace {

void check_lengths(const FrameReference& reference,
                   const LabelSequence& hypothesis) {
  if (reference.length() != hypothesis.length())
    throw Error(ErrCode::dim_mismatch,
                "reference has " + std::to_string(reference.length()) +
                    " frames, hypothesis " +
                    std::to_string(hypothesis.length()));
  if (reference.length() == 0)
    throw Error(ErrCode::validation, "empty reference");
}

int max_ref_speaker(const FrameReference& reference) {
  int m = 0;
  for (const auto& set : reference.frames)
    for (int s : set) m = std::max(m, s);
  return m;
}

}  // namespace

std::vector<int> optimal_mapping(const FrameReference& reference,
                                 const LabelSequence& hypothesis) {
  check_lengths(reference, hypothesis);
  int num_hyp = hypothesis.num_speakers();
  int num_ref = max_ref_speaker(reference);

  std::vector<std::vector<double>> overlap(
      num_hyp, std::vector<double>(num_ref, 0.0));
  for (int f = 0; f < reference.length(); ++f) {
    int h = hypothesis.labels[f];
    for (int s : reference.frames[f]) overlap[h - 1][s - 1] += 1.0;
  }
  auto mapping = assign_max_weight(overlap);
  // Assignments that never co-occur carry no information; keep them unmapped.
  for (int h = 0; h < num_hyp; ++h)
    if (mapping[h] >= 0 && overlap[h][mapping[h]] == 0.0) mapping[h] = -1;
  for (auto& m : mapping)
    if (m >= 0) m += 1;  // back to 1-based speaker ids
  return mapping;
}

DerBreakdown der(const FrameReference& reference,
                 const LabelSequence& hypothesis, bool exclude_overlap) {
  check_lengths(reference, hypothesis);
  auto mapping = optimal_mapping(reference, hypothesis);
  const double dt = reference.frame_duration;

  DerBreakdown out;
  for (int f = 0; f < reference.length(); ++f) {
    const auto& ref_set = reference.frames[f];
    if (ref_set.empty())
      throw Error(ErrCode::validation,
                  "frame " + std::to_string(f) + " has an empty reference set");
    if (exclude_overlap && ref_set.size() >= 2) continue;
    int mapped = mapping[hypothesis.labels[f] - 1];
    bool hit = mapped > 0 && std::binary_search(ref_set.begin(), ref_set.end(),
                                                mapped);
    const double R = static_cast<double>(ref_set.size());
    out.missed += std::max(0.0, R - 1.0) * dt;
    out.false_alarm += std::max(0.0, 1.0 - R) * dt;
    out.confusion += (std::min(R, 1.0) - (hit ? 1.0 : 0.0)) * dt;
    out.total += R * dt;
  }
  if (out.total == 0.0)
    throw Error(ErrCode::validation, "reference has no scored speaker time");
  return out;
}

CorpusDer der_corpus(const std::vector<ScoredRecording>& pairs,
                     bool exclude_overlap) {
  if (pairs.empty())
    throw Error(ErrCode::validation, "no recordings to score");
  CorpusDer out;
  for (const auto& item : pairs) {
    DerBreakdown one = der(*item.reference, *item.hypothesis, exclude_overlap);
    out.overall += one;
    out.per_domain[item.domain] += one;
  }
  return out;
}

}  // namespace uisrnn

#include "uisrnn/priors.hpp"

#include <algorithm>
#include <cmath>

namespace uisrnn {

namespace {
constexpr double kP0Floor = 1e-6;
}

void PriorParams::validate() const {
  if (!(alpha > 0.0) || !std::isfinite(alpha))
    throw Error(ErrCode::validation, "alpha must be positive");
  if (!(p0 > 0.0 && p0 < 1.0))
    throw Error(ErrCode::validation, "p0 must be in (0, 1)");
}

double estimate_alpha(const std::vector<LabelSequence>& corpus) {
  long new_events = 0;
  long change_events = 0;
  for (const auto& seq : corpus) {
    if (!seq.is_canonical())
      throw Error(ErrCode::validation, "labels must be canonical");
    new_events += seq.num_speakers() - 1;
    for (std::size_t t = 1; t < seq.labels.size(); ++t)
      if (seq.labels[t] != seq.labels[t - 1]) ++change_events;
  }
  if (change_events == 0)
    throw Error(ErrCode::validation, "no speaker changes in corpus");
  return static_cast<double>(new_events) / static_cast<double>(change_events);
}

double estimate_p0(const std::vector<LabelSequence>& corpus) {
  long changes = 0;
  long pairs = 0;
  for (const auto& seq : corpus) {
    if (seq.labels.empty())
      throw Error(ErrCode::validation, "empty label sequence");
    pairs += static_cast<long>(seq.labels.size()) - 1;
    for (std::size_t t = 1; t < seq.labels.size(); ++t)
      if (seq.labels[t] != seq.labels[t - 1]) ++changes;
  }
  if (pairs == 0)
    throw Error(ErrCode::validation, "no adjacent frame pairs in corpus");
  double p0 = static_cast<double>(changes) / static_cast<double>(pairs);
  return std::clamp(p0, kP0Floor, 1.0 - kP0Floor);
}

double change_log_prob(double p0, bool changed) {
  if (!(p0 > 0.0 && p0 < 1.0))
    throw Error(ErrCode::validation, "p0 must be in (0, 1)");
  return changed ? std::log(p0) : std::log1p(-p0);
}

double assignment_log_prob(const BlockCounts& blocks, double alpha, int target) {
  if (!(alpha > 0.0))
    throw Error(ErrCode::validation, "alpha must be positive");
  if (target == blocks.current_speaker && target != kNewSpeaker)
    throw Error(ErrCode::validation,
                "assignment factor applies only when the speaker changes");
  double others = 0.0;
  for (int k = 1; k <= blocks.num_speakers(); ++k)
    if (k != blocks.current_speaker) others += blocks.count_of(k);
  double z = alpha + others;
  if (target == kNewSpeaker) return std::log(alpha) - std::log(z);
  if (target < 1 || target > blocks.num_speakers())
    throw Error(ErrCode::validation,
                "assignment target " + std::to_string(target) + " unseen");
  return std::log(static_cast<double>(blocks.count_of(target))) - std::log(z);
}

BlockCounts update_blocks(const BlockCounts& blocks, int y_t) {
  if (y_t < 1 || y_t > blocks.num_speakers() + 1)
    throw Error(ErrCode::validation,
                "label " + std::to_string(y_t) + " breaks canonical order");
  BlockCounts out = blocks;
  if (y_t == out.current_speaker) return out;
  if (y_t == out.num_speakers() + 1)
    out.counts.push_back(1);
  else
    out.counts[y_t - 1] += 1;
  out.current_speaker = y_t;
  return out;
}

}  // namespace uisrnn

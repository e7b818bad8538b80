#include "uisrnn/types.hpp"

#include <algorithm>
#include <unordered_map>

namespace uisrnn {

void EmbeddingSequence::validate() const {
  if (frames.rows() < 1)
    throw Error(ErrCode::validation, "embedding sequence has no frames");
  if (frames.cols() < 1)
    throw Error(ErrCode::validation, "embedding dimension must be >= 1");
  if (!frames.allFinite())
    throw Error(ErrCode::validation, "embedding sequence has non-finite values");
  if (!(frame_duration > 0.0))
    throw Error(ErrCode::validation, "frame duration must be positive");
}

int LabelSequence::num_speakers() const {
  int m = 0;
  for (int y : labels) m = std::max(m, y);
  return m;
}

bool LabelSequence::is_canonical() const {
  int seen = 0;
  for (int y : labels) {
    if (y < 1 || y > seen + 1) return false;
    seen = std::max(seen, y);
  }
  return !labels.empty();
}

LabelSequence relabel_canonical(const std::vector<int>& raw_labels) {
  if (raw_labels.empty())
    throw Error(ErrCode::validation, "cannot relabel an empty sequence");
  std::unordered_map<int, int> remap;
  LabelSequence out;
  out.labels.reserve(raw_labels.size());
  for (int y : raw_labels) {
    auto [it, inserted] = remap.emplace(y, static_cast<int>(remap.size()) + 1);
    out.labels.push_back(it->second);
  }
  return out;
}

void LabeledRecording::validate() const {
  embeddings.validate();
  if (labels.length() != embeddings.length())
    throw Error(ErrCode::validation,
                "recording '" + id + "': labels length " +
                    std::to_string(labels.length()) + " != frames " +
                    std::to_string(embeddings.length()));
  if (!labels.is_canonical())
    throw Error(ErrCode::validation,
                "recording '" + id + "': labels are not canonical");
}

FrameReference reference_from_labels(const LabelSequence& labels,
                                     double frame_duration) {
  FrameReference ref;
  ref.frame_duration = frame_duration;
  ref.frames.reserve(labels.labels.size());
  int max_label = 0;
  for (int y : labels.labels) {
    ref.frames.push_back({y});
    max_label = std::max(max_label, y);
  }
  for (int k = 1; k <= max_label; ++k)
    ref.speaker_names.push_back("spk" + std::to_string(k));
  return ref;
}

}  // namespace uisrnn

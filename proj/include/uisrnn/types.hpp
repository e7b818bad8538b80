#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "uisrnn/common.hpp"

namespace uisrnn {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// One observation sequence: T frames of D-dimensional embeddings, one frame
// per fixed-length segment.
struct EmbeddingSequence {
  MatrixXd frames;             // T x D, one row per frame
  double frame_duration = 1.0; // seconds per frame

  int length() const { return static_cast<int>(frames.rows()); }
  int dim() const { return static_cast<int>(frames.cols()); }
  VectorXd frame(int t) const { return frames.row(t).transpose(); }

  // Throws on empty sequence, zero dimension or non-finite entries.
  void validate() const;
};

// Speaker ids in order of first appearance: 1, 2, 3, ...
struct LabelSequence {
  std::vector<int> labels;

  int length() const { return static_cast<int>(labels.size()); }
  int num_speakers() const;
  bool is_canonical() const;
};

// Renumbers labels by order of first appearance starting from 1. Idempotent
// and preserves the equality partition of positions.
LabelSequence relabel_canonical(const std::vector<int>& raw_labels);

struct LabeledRecording {
  std::string id;
  std::string domain;
  EmbeddingSequence embeddings;
  LabelSequence labels;

  void validate() const;
};

struct Dataset {
  std::vector<LabeledRecording> recordings;

  bool empty() const { return recordings.empty(); }
  int size() const { return static_cast<int>(recordings.size()); }
};

// Per-frame reference speaker sets for scoring. Speakers are small integer
// ids; `speaker_names` maps id -> display name. Sets are kept sorted.
struct FrameReference {
  std::vector<std::vector<int>> frames;
  double frame_duration = 1.0;
  std::vector<std::string> speaker_names;

  int length() const { return static_cast<int>(frames.size()); }
};

// Singleton reference sets from a single-label sequence.
FrameReference reference_from_labels(const LabelSequence& labels,
                                     double frame_duration);

}  // namespace uisrnn

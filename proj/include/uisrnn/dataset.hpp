#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "uisrnn/types.hpp"

namespace uisrnn {

// One single-speaker training sequence: a seeded permutation of all frames a
// given speaker produced in one recording.
struct SpeakerTrainSequence {
  std::string recording_id;
  int speaker_label = 0;
  int copy_index = 0;   // which of the P permutations
  MatrixXd frames;      // L x D

  int length() const { return static_cast<int>(frames.rows()); }
  int dim() const { return static_cast<int>(frames.cols()); }
};

// For each (recording, speaker) pair emits `permutations` independently
// permuted copies of that speaker's frames. Deterministic given the seed:
// each copy's permutation is seeded by (seed, recording id, speaker, copy).
std::vector<SpeakerTrainSequence> build_training_sequences(
    const Dataset& dataset, int permutations, std::uint64_t seed);

struct SplitResult {
  Dataset train;
  Dataset validation;
  std::vector<int> train_indices;       // into the input dataset
  std::vector<int> validation_indices;
};

// Splits per domain as close to `train_ratio` as rounding allows; disjoint
// and exhaustive; deterministic given the seed. A domain with a single
// recording goes to train with a warning.
SplitResult stratified_split(const Dataset& dataset, double train_ratio,
                             std::uint64_t seed);

}  // namespace uisrnn

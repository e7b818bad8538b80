#pragma once

#include <string>

#include "uisrnn/types.hpp"

namespace uisrnn {

// Forward simulation of the generative story: Bernoulli speaker changes,
// block-proportional assignment with new-speaker weight alpha (truncated at
// num_speakers), and Gaussian emissions around per-speaker means.
struct SynthConfig {
  int num_speakers = 4;      // K, cap on distinct speakers
  int dim = 8;               // D
  double mean_scale = 10.0;  // inter-speaker spread
  double sigma = 1.0;        // within-speaker standard deviation
  int frames = 200;          // T
  double p0 = 0.1;
  double alpha = 1.0;
  std::uint64_t seed = 1;
  double overlap_fraction = 0.0;
  double frame_duration = 1.0;

  void validate() const;
};

struct SynthResult {
  LabeledRecording recording;   // labels use the overlap-as-new-speaker trick
  FrameReference reference;     // true per-frame speaker sets
  std::vector<VectorXd> means;  // true speaker means, appearance order
  int cap_events = 0;  // times the speaker cap bent the assignment process
};

SynthResult generate(const SynthConfig& config, const std::string& recording_id,
                     const std::string& domain = "synthetic");

}  // namespace uisrnn

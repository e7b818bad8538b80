#pragma once

#include <string>
#include <vector>

#include "uisrnn/types.hpp"

namespace uisrnn {

// One SPEAKER line of an RTTM file.
struct RttmSegment {
  std::string recording_id;
  double onset = 0.0;     // seconds
  double duration = 0.0;  // seconds, > 0
  std::string speaker;
};

// Parses SPEAKER lines; other record types and ';;' comments are skipped.
// Throws a parse error (with line number) for short or unreadable lines and a
// validation error for non-positive durations.
std::vector<RttmSegment> parse_rttm(const std::string& text);

std::string format_rttm(const std::vector<RttmSegment>& segments);

// How to label frames whose midpoint is covered by two or more speakers.
enum class OverlapPolicy {
  error,        // refuse multi-speaker frames
  first_wins,   // keep the speaker whose segment started earliest
  new_speaker,  // each distinct concurrent speaker set becomes its own label
};

struct FrameLabeling {
  LabelSequence labels;     // canonical single-label stream for the model
  FrameReference reference; // raw per-frame speaker sets for the scorer
};

// Assigns each of T frames (frame f covers [f*dt, (f+1)*dt)) the set of
// speakers active at its midpoint, then flattens to a canonical single-label
// stream under `policy`. Frames with an empty speaker set are an error: the
// caller must restrict to speech frames first.
FrameLabeling segments_to_frame_labels(const std::vector<RttmSegment>& segments,
                                       int frame_count, double frame_duration,
                                       OverlapPolicy policy);

// Contiguous runs of each reference speaker, for writing RTTM files.
std::vector<RttmSegment> reference_to_segments(const FrameReference& ref,
                                               const std::string& recording_id);

}  // namespace uisrnn

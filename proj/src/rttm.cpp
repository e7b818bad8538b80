#include "uisrnn/rttm.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <sstream>

namespace uisrnn {

std::vector<RttmSegment> parse_rttm(const std::string& text) {
  std::vector<RttmSegment> segments;
  std::istringstream stream(text);
  std::string line;
  int line_no = 0;
  while (std::getline(stream, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    if (line.rfind(";;", 0) == 0) continue;
    std::istringstream fields(line);
    std::vector<std::string> f;
    std::string tok;
    while (fields >> tok) f.push_back(tok);
    if (f.size() < 9)
      throw Error(ErrCode::parse, "rttm line " + std::to_string(line_no) +
                                      ": expected >= 9 fields, got " +
                                      std::to_string(f.size()));
    if (f[0] != "SPEAKER") continue;
    RttmSegment seg;
    seg.recording_id = f[1];
    try {
      std::size_t used = 0;
      seg.onset = std::stod(f[3], &used);
      if (used != f[3].size()) throw std::invalid_argument(f[3]);
      seg.duration = std::stod(f[4], &used);
      if (used != f[4].size()) throw std::invalid_argument(f[4]);
    } catch (const std::exception&) {
      throw Error(ErrCode::parse, "rttm line " + std::to_string(line_no) +
                                      ": unreadable onset/duration");
    }
    seg.speaker = f[7];
    if (seg.onset < 0.0)
      throw Error(ErrCode::validation, "rttm line " + std::to_string(line_no) +
                                           ": negative onset");
    if (!(seg.duration > 0.0))
      throw Error(ErrCode::validation, "rttm line " + std::to_string(line_no) +
                                           ": non-positive duration");
    segments.push_back(std::move(seg));
  }
  return segments;
}

std::string format_rttm(const std::vector<RttmSegment>& segments) {
  std::string out;
  char buf[64];
  for (const auto& seg : segments) {
    std::snprintf(buf, sizeof(buf), " 1 %.3f %.3f ", seg.onset, seg.duration);
    out += "SPEAKER " + seg.recording_id + buf + "<NA> <NA> " + seg.speaker +
           " <NA> <NA>\n";
  }
  return out;
}

FrameLabeling segments_to_frame_labels(const std::vector<RttmSegment>& segments,
                                       int frame_count, double frame_duration,
                                       OverlapPolicy policy) {
  if (frame_count < 1)
    throw Error(ErrCode::validation, "frame count must be >= 1");
  if (!(frame_duration > 0.0))
    throw Error(ErrCode::validation, "frame duration must be positive");

  // Speaker name -> id in order of first appearance across segments.
  std::vector<std::string> names;
  auto speaker_id = [&](const std::string& name) {
    for (std::size_t i = 0; i < names.size(); ++i)
      if (names[i] == name) return static_cast<int>(i) + 1;
    names.push_back(name);
    return static_cast<int>(names.size());
  };

  FrameLabeling out;
  out.reference.frame_duration = frame_duration;
  out.reference.frames.assign(frame_count, {});

  std::vector<std::vector<std::pair<double, int>>> active(frame_count);
  for (const auto& seg : segments) {
    int id = speaker_id(seg.speaker);
    for (int f = 0; f < frame_count; ++f) {
      double mid = (f + 0.5) * frame_duration;
      if (mid >= seg.onset && mid < seg.onset + seg.duration)
        active[f].emplace_back(seg.onset, id);
    }
  }

  std::vector<int> raw(frame_count);
  // Distinct concurrent speaker sets get synthetic ids above the real ones.
  std::map<std::vector<int>, int> set_ids;
  int next_synthetic = static_cast<int>(names.size()) + 1;

  for (int f = 0; f < frame_count; ++f) {
    auto& entries = active[f];
    std::sort(entries.begin(), entries.end());
    std::vector<int> set;
    for (const auto& [onset, id] : entries) set.push_back(id);
    std::sort(set.begin(), set.end());
    set.erase(std::unique(set.begin(), set.end()), set.end());
    if (set.empty())
      throw Error(ErrCode::validation,
                  "frame " + std::to_string(f) +
                      " has no active speaker; restrict to speech frames first");
    out.reference.frames[f] = set;
    if (set.size() == 1) {
      raw[f] = set[0];
    } else {
      switch (policy) {
        case OverlapPolicy::error:
          throw Error(ErrCode::validation,
                      "frame " + std::to_string(f) +
                          " has overlapping speakers; enable an overlap policy");
        case OverlapPolicy::first_wins:
          raw[f] = entries.front().second;
          break;
        case OverlapPolicy::new_speaker: {
          auto [it, inserted] = set_ids.emplace(set, next_synthetic);
          if (inserted) ++next_synthetic;
          raw[f] = it->second;
          break;
        }
      }
    }
  }

  out.labels = relabel_canonical(raw);
  out.reference.speaker_names = std::move(names);
  return out;
}

std::vector<RttmSegment> reference_to_segments(const FrameReference& ref,
                                               const std::string& recording_id) {
  std::vector<RttmSegment> segments;
  int num_speakers = static_cast<int>(ref.speaker_names.size());
  for (int k = 1; k <= num_speakers; ++k) {
    int run_start = -1;
    for (int f = 0; f <= ref.length(); ++f) {
      bool on = f < ref.length() &&
                std::binary_search(ref.frames[f].begin(), ref.frames[f].end(), k);
      if (on && run_start < 0) run_start = f;
      if (!on && run_start >= 0) {
        RttmSegment seg;
        seg.recording_id = recording_id;
        seg.onset = run_start * ref.frame_duration;
        seg.duration = (f - run_start) * ref.frame_duration;
        seg.speaker = ref.speaker_names[k - 1];
        segments.push_back(std::move(seg));
        run_start = -1;
      }
    }
  }
  std::sort(segments.begin(), segments.end(),
            [](const RttmSegment& a, const RttmSegment& b) {
              return std::tie(a.onset, a.speaker) < std::tie(b.onset, b.speaker);
            });
  return segments;
}

}  // namespace uisrnn

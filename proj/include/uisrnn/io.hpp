#pragma once

#include <optional>
#include <string>
#include <vector>

#include "uisrnn/rttm.hpp"
#include "uisrnn/types.hpp"

namespace uisrnn {

// Embedding file ("UEMB"): little-endian magic, u32 format version = 1,
// u32 T, u32 D, f32 frame_duration, then T*D IEEE-754 f32 values row-major.
// If expected_dim > 0 the stored dimension must match it.
EmbeddingSequence read_embeddings(const std::string& path, int expected_dim = 0);
void write_embeddings(const EmbeddingSequence& seq, const std::string& path);

// Label file: UTF-8 text, one positive decimal integer per line.
LabelSequence read_labels(const std::string& path);
void write_labels(const LabelSequence& labels, const std::string& path);

// Dataset manifest: JSON list of {id, domain, embeddings_path,
// labels_path | rttm_path}. Paths are resolved relative to the manifest.
struct ManifestEntry {
  std::string id;
  std::string domain;
  std::string embeddings_path;
  std::optional<std::string> labels_path;
  std::optional<std::string> rttm_path;
};

std::vector<ManifestEntry> read_manifest(const std::string& path);
void write_manifest(const std::vector<ManifestEntry>& entries,
                    const std::string& path);

struct LoadedRecording {
  LabeledRecording recording;
  FrameReference reference;
};

// Loads one manifest entry. The single-label stream comes from the label file
// when present, otherwise from the RTTM under `policy`; the reference always
// keeps the raw speaker sets.
LoadedRecording load_recording(const ManifestEntry& entry,
                               const std::string& manifest_dir,
                               OverlapPolicy policy = OverlapPolicy::new_speaker);

struct LoadedCorpus {
  Dataset dataset;
  std::vector<FrameReference> references;  // aligned with dataset.recordings
};

LoadedCorpus load_corpus(const std::string& manifest_path,
                         OverlapPolicy policy = OverlapPolicy::new_speaker);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);
std::string dirname_of(const std::string& path);

}  // namespace uisrnn

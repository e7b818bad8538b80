#include "uisrnn/io.hpp"

#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace uisrnn {

namespace {

constexpr char kMagic[4] = {'U', 'E', 'M', 'B'};
constexpr std::uint32_t kEmbeddingFormatVersion = 1;

template <typename T>
void put_le(std::string& out, T value) {
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  out.append(reinterpret_cast<char*>(bytes), sizeof(T));
}

template <typename T>
T get_le(const std::string& data, std::size_t& pos) {
  if (pos + sizeof(T) > data.size())
    throw Error(ErrCode::truncated, "unexpected end of file");
  T value;
  std::memcpy(&value, data.data() + pos, sizeof(T));
  pos += sizeof(T);
  return value;
}

}  // namespace

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrCode::io, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrCode::io, "cannot write '" + path + "'");
  out << content;
  if (!out) throw Error(ErrCode::io, "write to '" + path + "' failed");
}

std::string dirname_of(const std::string& path) {
  auto parent = std::filesystem::path(path).parent_path();
  return parent.empty() ? std::string(".") : parent.string();
}

EmbeddingSequence read_embeddings(const std::string& path, int expected_dim) {
  std::string data = read_text_file(path);
  if (data.size() < 4 || std::memcmp(data.data(), kMagic, 4) != 0)
    throw Error(ErrCode::bad_magic, "'" + path + "' is not an embedding file");
  std::size_t pos = 4;
  auto version = get_le<std::uint32_t>(data, pos);
  if (version != kEmbeddingFormatVersion)
    throw Error(ErrCode::version_mismatch,
                "embedding format version " + std::to_string(version));
  auto T = get_le<std::uint32_t>(data, pos);
  auto D = get_le<std::uint32_t>(data, pos);
  auto frame_duration = get_le<float>(data, pos);
  if (T == 0 || D == 0)
    throw Error(ErrCode::corrupt, "'" + path + "': zero frame count or dim");
  if (expected_dim > 0 && static_cast<int>(D) != expected_dim)
    throw Error(ErrCode::dim_mismatch,
                "'" + path + "': dim " + std::to_string(D) + ", expected " +
                    std::to_string(expected_dim));
  std::size_t need = static_cast<std::size_t>(T) * D * sizeof(float);
  if (data.size() - pos < need)
    throw Error(ErrCode::truncated,
                "'" + path + "': payload has " +
                    std::to_string((data.size() - pos) / (D * sizeof(float))) +
                    " rows, header claims " + std::to_string(T));

  EmbeddingSequence seq;
  seq.frame_duration = frame_duration;
  seq.frames.resize(T, D);
  for (std::uint32_t t = 0; t < T; ++t)
    for (std::uint32_t d = 0; d < D; ++d)
      seq.frames(t, d) = static_cast<double>(get_le<float>(data, pos));
  seq.validate();
  return seq;
}

void write_embeddings(const EmbeddingSequence& seq, const std::string& path) {
  seq.validate();
  std::string out;
  out.append(kMagic, 4);
  put_le<std::uint32_t>(out, kEmbeddingFormatVersion);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(seq.length()));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(seq.dim()));
  put_le<float>(out, static_cast<float>(seq.frame_duration));
  for (int t = 0; t < seq.length(); ++t)
    for (int d = 0; d < seq.dim(); ++d)
      put_le<float>(out, static_cast<float>(seq.frames(t, d)));
  write_text_file(path, out);
}

LabelSequence read_labels(const std::string& path) {
  std::istringstream stream(read_text_file(path));
  LabelSequence out;
  std::string line;
  int line_no = 0;
  while (std::getline(stream, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::size_t used = 0;
    long value = 0;
    try {
      value = std::stol(line, &used);
    } catch (const std::exception&) {
      throw Error(ErrCode::parse,
                  "'" + path + "' line " + std::to_string(line_no) +
                      ": not an integer");
    }
    if (used != line.size() || value < 1)
      throw Error(ErrCode::parse,
                  "'" + path + "' line " + std::to_string(line_no) +
                      ": labels must be positive integers");
    out.labels.push_back(static_cast<int>(value));
  }
  if (out.labels.empty())
    throw Error(ErrCode::parse, "'" + path + "' has no labels");
  return out;
}

void write_labels(const LabelSequence& labels, const std::string& path) {
  std::string out;
  for (int y : labels.labels) out += std::to_string(y) + "\n";
  write_text_file(path, out);
}

std::vector<ManifestEntry> read_manifest(const std::string& path) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(read_text_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrCode::parse, "'" + path + "': " + e.what());
  }
  if (!doc.is_array())
    throw Error(ErrCode::parse, "'" + path + "': manifest must be a JSON list");
  std::vector<ManifestEntry> entries;
  for (const auto& item : doc) {
    ManifestEntry e;
    try {
      e.id = item.at("id").get<std::string>();
      e.domain = item.value("domain", std::string("default"));
      e.embeddings_path = item.at("embeddings_path").get<std::string>();
      if (item.contains("labels_path"))
        e.labels_path = item["labels_path"].get<std::string>();
      if (item.contains("rttm_path"))
        e.rttm_path = item["rttm_path"].get<std::string>();
    } catch (const nlohmann::json::exception& ex) {
      throw Error(ErrCode::parse, "'" + path + "': " + ex.what());
    }
    if (!e.labels_path && !e.rttm_path)
      throw Error(ErrCode::validation,
                  "manifest entry '" + e.id +
                      "' needs labels_path or rttm_path");
    entries.push_back(std::move(e));
  }
  if (entries.empty())
    throw Error(ErrCode::validation, "'" + path + "': manifest is empty");
  return entries;
}

void write_manifest(const std::vector<ManifestEntry>& entries,
                    const std::string& path) {
  nlohmann::ordered_json doc = nlohmann::ordered_json::array();
  for (const auto& e : entries) {
    nlohmann::ordered_json item;
    item["id"] = e.id;
    item["domain"] = e.domain;
    item["embeddings_path"] = e.embeddings_path;
    if (e.labels_path) item["labels_path"] = *e.labels_path;
    if (e.rttm_path) item["rttm_path"] = *e.rttm_path;
    doc.push_back(std::move(item));
  }
  write_text_file(path, doc.dump(2) + "\n");
}

LoadedRecording load_recording(const ManifestEntry& entry,
                               const std::string& manifest_dir,
                               OverlapPolicy policy) {
  auto resolve = [&](const std::string& p) {
    std::filesystem::path fp(p);
    if (fp.is_absolute()) return p;
    return (std::filesystem::path(manifest_dir) / fp).string();
  };

  LoadedRecording out;
  out.recording.id = entry.id;
  out.recording.domain = entry.domain;
  out.recording.embeddings = read_embeddings(resolve(entry.embeddings_path));
  const int T = out.recording.embeddings.length();
  const double dt = out.recording.embeddings.frame_duration;

  if (entry.rttm_path) {
    auto segments = parse_rttm(read_text_file(resolve(*entry.rttm_path)));
    auto labeling = segments_to_frame_labels(segments, T, dt, policy);
    out.reference = std::move(labeling.reference);
    if (entry.labels_path) {
      out.recording.labels = read_labels(resolve(*entry.labels_path));
    } else {
      out.recording.labels = std::move(labeling.labels);
    }
  } else {
    out.recording.labels = read_labels(resolve(*entry.labels_path));
    out.reference = reference_from_labels(out.recording.labels, dt);
  }
  out.recording.validate();
  if (out.reference.length() != T)
    throw Error(ErrCode::dim_mismatch,
                "recording '" + entry.id + "': reference frame count " +
                    std::to_string(out.reference.length()) + " != " +
                    std::to_string(T));
  return out;
}

LoadedCorpus load_corpus(const std::string& manifest_path, OverlapPolicy policy) {
  auto entries = read_manifest(manifest_path);
  std::string dir = dirname_of(manifest_path);
  LoadedCorpus corpus;
  for (const auto& entry : entries) {
    auto loaded = load_recording(entry, dir, policy);
    corpus.dataset.recordings.push_back(std::move(loaded.recording));
    corpus.references.push_back(std::move(loaded.reference));
  }
  return corpus;
}

}  // namespace uisrnn

#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <cstdio>
#include <filesystem>
#include <set>

#include "uisrnn/dataset.hpp"
#include "uisrnn/io.hpp"
#include "uisrnn/pca.hpp"
#include "uisrnn/rttm.hpp"

using namespace uisrnn;

namespace {

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

EmbeddingSequence make_sequence(const std::vector<std::vector<double>>& rows,
                                double dt = 1.0) {
  EmbeddingSequence seq;
  seq.frame_duration = dt;
  seq.frames.resize(rows.size(), rows[0].size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j)
      seq.frames(i, j) = rows[i][j];
  return seq;
}

}  // namespace

TEST_CASE("parse_rttm maps SPEAKER fields") {
  auto segs = parse_rttm("SPEAKER rec1 1 0.00 2.50 <NA> <NA> spkA <NA> <NA>\n");
  REQUIRE(segs.size() == 1);
  CHECK(segs[0].recording_id == "rec1");
  CHECK(segs[0].onset == doctest::Approx(0.0));
  CHECK(segs[0].duration == doctest::Approx(2.5));
  CHECK(segs[0].speaker == "spkA");
}

TEST_CASE("parse_rttm empty input and comments") {
  CHECK(parse_rttm("").empty());
  CHECK(parse_rttm("\n\n").empty());
  CHECK(parse_rttm(";; a comment line\n").empty());
}

TEST_CASE("parse_rttm rejects short lines with the line number") {
  try {
    parse_rttm("SPEAKER rec1 1 0.0 2.5 <NA> <NA> spkA <NA> <NA>\nSPEAKER x 1 0 1\n");
    FAIL("expected parse error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrCode::parse);
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
}

TEST_CASE("parse_rttm rejects non-positive durations") {
  CHECK_THROWS_AS(parse_rttm("SPEAKER r 1 0.0 -1.0 <NA> <NA> a <NA> <NA>\n"),
                  Error);
  CHECK_THROWS_AS(parse_rttm("SPEAKER r 1 0.0 0.0 <NA> <NA> a <NA> <NA>\n"),
                  Error);
}

TEST_CASE("parse_rttm skips non-SPEAKER records") {
  auto segs = parse_rttm(
      "LEXEME r 1 0.0 1.0 <NA> <NA> word <NA> <NA>\n"
      "SPEAKER r 1 0.0 1.0 <NA> <NA> a <NA> <NA>\n");
  CHECK(segs.size() == 1);
}

TEST_CASE("segments_to_frame_labels single speaker") {
  std::vector<RttmSegment> segs{{"r", 0.0, 3.0, "spkA"}};
  auto out = segments_to_frame_labels(segs, 3, 1.0, OverlapPolicy::new_speaker);
  CHECK(out.labels.labels == std::vector<int>{1, 1, 1});
  CHECK(out.reference.frames[1] == std::vector<int>{1});
}

TEST_CASE("segments_to_frame_labels overlap becomes a synthetic speaker") {
  // spkA on [0,2), spkB on [1,3): midpoints 0.5 {A}, 1.5 {A,B}, 2.5 {B}.
  std::vector<RttmSegment> segs{{"r", 0.0, 2.0, "spkA"}, {"r", 1.0, 2.0, "spkB"}};
  auto out = segments_to_frame_labels(segs, 3, 1.0, OverlapPolicy::new_speaker);
  CHECK(out.labels.labels == std::vector<int>{1, 2, 3});
  CHECK(out.reference.frames[0] == std::vector<int>{1});
  CHECK(out.reference.frames[1] == std::vector<int>{1, 2});
  CHECK(out.reference.frames[2] == std::vector<int>{2});

  CHECK_THROWS_AS(
      segments_to_frame_labels(segs, 3, 1.0, OverlapPolicy::error), Error);

  auto first = segments_to_frame_labels(segs, 3, 1.0, OverlapPolicy::first_wins);
  CHECK(first.labels.labels == std::vector<int>{1, 1, 2});
}

TEST_CASE("segments_to_frame_labels rejects silent frames") {
  std::vector<RttmSegment> segs{{"r", 0.0, 1.0, "spkA"}};
  CHECK_THROWS_AS(
      segments_to_frame_labels(segs, 3, 1.0, OverlapPolicy::new_speaker), Error);
}

TEST_CASE("relabel_canonical worked examples") {
  CHECK(relabel_canonical({7, 7, 3, 7}).labels == std::vector<int>{1, 1, 2, 1});
  CHECK(relabel_canonical({1, 2, 3}).labels == std::vector<int>{1, 2, 3});
  CHECK(relabel_canonical({2, 2, 2}).labels == std::vector<int>{1, 1, 1});
}

TEST_CASE("relabel_canonical is idempotent and preserves the partition") {
  Rng rng(99);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<int> raw;
    int n = 1 + static_cast<int>(rng.uniform_u64(20));
    for (int i = 0; i < n; ++i)
      raw.push_back(1 + static_cast<int>(rng.uniform_u64(6)) * 3);
    auto once = relabel_canonical(raw);
    auto twice = relabel_canonical(once.labels);
    CHECK(once.labels == twice.labels);
    CHECK(once.is_canonical());
    for (std::size_t i = 0; i < raw.size(); ++i)
      for (std::size_t j = 0; j < raw.size(); ++j)
        CHECK((raw[i] == raw[j]) == (once.labels[i] == once.labels[j]));
  }
}

TEST_CASE("build_training_sequences counts and determinism") {
  LabeledRecording rec;
  rec.id = "r1";
  rec.domain = "d";
  rec.embeddings = make_sequence({{1, 0}, {2, 0}, {3, 0}});
  rec.labels.labels = {1, 1, 2};
  Dataset ds{{rec}};

  auto seqs = build_training_sequences(ds, 1, 7);
  REQUIRE(seqs.size() == 2);
  CHECK(seqs[0].length() == 2);
  CHECK(seqs[1].length() == 1);

  // Single-frame speaker; three permutations of one element are identical.
  auto three = build_training_sequences(ds, 3, 7);
  REQUIRE(three.size() == 6);
  for (const auto& s : three)
    if (s.speaker_label == 2) CHECK(s.frames(0, 0) == doctest::Approx(3.0));

  auto again = build_training_sequences(ds, 3, 7);
  for (std::size_t i = 0; i < three.size(); ++i)
    CHECK(three[i].frames == again[i].frames);
}

TEST_CASE("build_training_sequences preserves each speaker's frame multiset") {
  Rng rng(5);
  LabeledRecording rec;
  rec.id = "r1";
  rec.domain = "d";
  std::vector<std::vector<double>> rows;
  std::vector<int> raw;
  for (int t = 0; t < 30; ++t) {
    rows.push_back({rng.normal(), rng.normal()});
    raw.push_back(1 + static_cast<int>(rng.uniform_u64(3)));
  }
  rec.embeddings = make_sequence(rows);
  rec.labels = relabel_canonical(raw);
  Dataset ds{{rec}};

  auto seqs = build_training_sequences(ds, 2, 11);
  for (const auto& seq : seqs) {
    std::multiset<double> got, want;
    for (int i = 0; i < seq.length(); ++i) got.insert(seq.frames(i, 0));
    for (int t = 0; t < rec.labels.length(); ++t)
      if (rec.labels.labels[t] == seq.speaker_label)
        want.insert(rec.embeddings.frames(t, 0));
    CHECK(got == want);
  }
}

TEST_CASE("pca on collinear data reconstructs exactly") {
  // Points on the line y = x: one direction carries all variance.
  std::vector<std::vector<double>> rows;
  for (int i = 0; i < 10; ++i)
    rows.push_back({static_cast<double>(i), static_cast<double>(i)});
  auto seq = make_sequence(rows);
  auto proj = pca_fit({seq}, 1);
  auto projected = pca_apply(proj, seq);

  for (int i = 0; i < 10; ++i)
    for (int j = 0; j < 10; ++j) {
      double d_orig = (seq.frames.row(i) - seq.frames.row(j)).norm();
      double d_proj =
          std::abs(projected.frames(i, 0) - projected.frames(j, 0));
      CHECK(d_proj == doctest::Approx(d_orig).epsilon(1e-9));
    }

  // Reconstruction error is zero for data in a 1-D subspace.
  for (int i = 0; i < 10; ++i) {
    Eigen::VectorXd rec =
        proj.basis.transpose() * projected.frames.row(i).transpose() + proj.mean;
    CHECK((rec - seq.frames.row(i).transpose()).norm() ==
          doctest::Approx(0.0).epsilon(1e-9));
  }
}

TEST_CASE("pca full-dimensional projection preserves pairwise distances") {
  Rng rng(13);
  std::vector<std::vector<double>> rows;
  for (int i = 0; i < 25; ++i)
    rows.push_back({rng.normal(), rng.normal(), rng.normal()});
  auto seq = make_sequence(rows);
  auto proj = pca_fit({seq}, 3);
  auto projected = pca_apply(proj, seq);
  for (int i = 0; i < 25; ++i)
    for (int j = i + 1; j < 25; ++j) {
      double before = (seq.frames.row(i) - seq.frames.row(j)).squaredNorm();
      double after =
          (projected.frames.row(i) - projected.frames.row(j)).squaredNorm();
      CHECK(after == doctest::Approx(before).epsilon(1e-9));
    }
}

TEST_CASE("pca captured variance matches a dense eigensolver oracle") {
  Rng rng(21);
  const int dim = 6;
  std::vector<std::vector<double>> rows;
  for (int i = 0; i < 4000; ++i) {
    std::vector<double> row(dim);
    for (auto& v : row) v = rng.normal();
    rows.push_back(std::move(row));
  }
  auto seq = make_sequence(rows);
  auto proj = pca_fit({seq}, 2);

  // Oracle: eigenvalues of the explicit sample covariance.
  Eigen::MatrixXd centered =
      seq.frames.rowwise() - seq.frames.colwise().mean();
  Eigen::MatrixXd cov =
      centered.transpose() * centered / (seq.frames.rows() - 1.0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  Eigen::VectorXd evs = eig.eigenvalues().reverse();

  CHECK(proj.eigenvalues(0) == doctest::Approx(evs(0)).epsilon(1e-8));
  CHECK(proj.eigenvalues(1) == doctest::Approx(evs(1)).epsilon(1e-8));

  double captured = proj.eigenvalues.sum() / evs.sum();
  CHECK(captured == doctest::Approx(2.0 / dim).epsilon(0.10));
}

TEST_CASE("pca rejects impossible output dims") {
  auto seq = make_sequence({{1, 2}, {3, 4}, {5, 6}});
  CHECK_THROWS_AS(pca_fit({seq}, 3), Error);
}

TEST_CASE("pca captured variance is monotone in output dim") {
  Rng rng(31);
  std::vector<std::vector<double>> rows;
  for (int i = 0; i < 60; ++i) {
    std::vector<double> row(4);
    for (int d = 0; d < 4; ++d) row[d] = (d + 1.0) * rng.normal();
    rows.push_back(std::move(row));
  }
  auto seq = make_sequence(rows);
  double prev = 0.0;
  for (int k = 1; k <= 4; ++k) {
    auto proj = pca_fit({seq}, k);
    double captured = proj.eigenvalues.sum();
    CHECK(captured >= prev - 1e-12);
    prev = captured;
  }
}

TEST_CASE("stratified_split ratios per domain") {
  Dataset ds;
  for (int i = 0; i < 10; ++i) {
    LabeledRecording rec;
    rec.id = "a" + std::to_string(i);
    rec.domain = "one";
    rec.embeddings = make_sequence({{0.0}});
    rec.labels.labels = {1};
    ds.recordings.push_back(rec);
  }
  auto split = stratified_split(ds, 0.8, 3);
  CHECK(split.train.size() == 8);
  CHECK(split.validation.size() == 2);

  Dataset two;
  for (int d = 0; d < 2; ++d)
    for (int i = 0; i < 5; ++i) {
      LabeledRecording rec;
      rec.id = "d" + std::to_string(d) + "_" + std::to_string(i);
      rec.domain = d == 0 ? "telephone" : "meeting";
      rec.embeddings = make_sequence({{0.0}});
      rec.labels.labels = {1};
      two.recordings.push_back(rec);
    }
  auto split2 = stratified_split(two, 0.8, 3);
  CHECK(split2.train.size() == 8);
  CHECK(split2.validation.size() == 2);
  int tel = 0, meet = 0;
  for (const auto& rec : split2.validation.recordings)
    (rec.domain == "telephone" ? tel : meet)++;
  CHECK(tel == 1);
  CHECK(meet == 1);
}

TEST_CASE("stratified_split is deterministic, disjoint and exhaustive") {
  Rng rng(17);
  Dataset ds;
  for (int i = 0; i < 23; ++i) {
    LabeledRecording rec;
    rec.id = "r" + std::to_string(i);
    rec.domain = "dom" + std::to_string(rng.uniform_u64(3));
    rec.embeddings = make_sequence({{0.0}});
    rec.labels.labels = {1};
    ds.recordings.push_back(rec);
  }
  auto a = stratified_split(ds, 0.8, 5);
  auto b = stratified_split(ds, 0.8, 5);
  CHECK(a.train_indices == b.train_indices);
  CHECK(a.validation_indices == b.validation_indices);

  for (std::uint64_t seed : {1, 2, 3}) {
    auto s = stratified_split(ds, 0.7, seed);
    std::set<int> seen;
    for (int i : s.train_indices) seen.insert(i);
    for (int i : s.validation_indices) {
      CHECK(seen.count(i) == 0);
      seen.insert(i);
    }
    CHECK(static_cast<int>(seen.size()) == ds.size());
  }

  auto c = stratified_split(ds, 0.8, 6);
  CHECK(a.train_indices != c.train_indices);  // different seeds repartition
}

TEST_CASE("single-recording domain goes to train") {
  Dataset ds;
  LabeledRecording rec;
  rec.id = "only";
  rec.domain = "lonely";
  rec.embeddings = make_sequence({{0.0}});
  rec.labels.labels = {1};
  ds.recordings.push_back(rec);
  for (int i = 0; i < 4; ++i) {
    rec.id = "r" + std::to_string(i);
    rec.domain = "big";
    ds.recordings.push_back(rec);
  }
  auto split = stratified_split(ds, 0.5, 1);
  bool in_train = false;
  for (const auto& r : split.train.recordings)
    if (r.id == "only") in_train = true;
  CHECK(in_train);
}

TEST_CASE("embedding file round trip at 32-bit precision") {
  auto seq = make_sequence({{1.5, -2.25}, {0.0, 3.0}}, 0.5);
  std::string path = temp_path("uisrnn_roundtrip.uemb");
  write_embeddings(seq, path);
  auto back = read_embeddings(path);
  CHECK(back.frames == seq.frames);
  CHECK(back.frame_duration == doctest::Approx(0.5));
  std::remove(path.c_str());
}

TEST_CASE("embedding file error codes are distinct") {
  std::string path = temp_path("uisrnn_bad.uemb");

  write_text_file(path, "XXXXgarbage");
  try {
    read_embeddings(path);
    FAIL("expected bad magic");
  } catch (const Error& e) {
    CHECK(e.code() == ErrCode::bad_magic);
  }

  // Header claims 10 rows; payload carries 9.
  auto seq = make_sequence({{1.0}, {2.0}, {3.0}, {4.0}, {5.0},
                            {6.0}, {7.0}, {8.0}, {9.0}, {10.0}});
  write_embeddings(seq, path);
  std::string data = read_text_file(path);
  write_text_file(path, data.substr(0, data.size() - sizeof(float)));
  try {
    read_embeddings(path);
    FAIL("expected truncation");
  } catch (const Error& e) {
    CHECK(e.code() == ErrCode::truncated);
  }

  write_embeddings(seq, path);
  try {
    read_embeddings(path, 4);
    FAIL("expected dim mismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrCode::dim_mismatch);
  }
  std::remove(path.c_str());
}

TEST_CASE("label file round trip and validation") {
  LabelSequence labels;
  labels.labels = {1, 1, 2, 1, 3};
  std::string path = temp_path("uisrnn_labels.txt");
  write_labels(labels, path);
  CHECK(read_labels(path).labels == labels.labels);
  write_text_file(path, "1\n0\n");
  CHECK_THROWS_AS(read_labels(path), Error);
  std::remove(path.c_str());
}

TEST_CASE("manifest round trip") {
  std::string dir = temp_path("uisrnn_manifest_dir");
  std::filesystem::create_directories(dir);
  auto seq = make_sequence({{1.0}, {2.0}});
  write_embeddings(seq, dir + "/rec1.uemb");
  LabelSequence labels;
  labels.labels = {1, 2};
  write_labels(labels, dir + "/rec1.labels");

  ManifestEntry entry;
  entry.id = "rec1";
  entry.domain = "d";
  entry.embeddings_path = "rec1.uemb";
  entry.labels_path = "rec1.labels";
  write_manifest({entry}, dir + "/manifest.json");

  auto corpus = load_corpus(dir + "/manifest.json");
  REQUIRE(corpus.dataset.size() == 1);
  CHECK(corpus.dataset.recordings[0].labels.labels == labels.labels);
  CHECK(corpus.references[0].frames[1] == std::vector<int>{2});
  std::filesystem::remove_all(dir);
}

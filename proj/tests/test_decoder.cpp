#include <doctest.h>

#include <cmath>

#include "uisrnn/decoder.hpp"
#include "uisrnn/evaluation.hpp"

using namespace uisrnn;

namespace {

ModelConfig small_config(int dim, int hidden, double sigma2 = 0.8) {
  ModelConfig c;
  c.embedding_dim = dim;
  c.hidden_units = hidden;
  c.head_units = dim;
  c.sigma2_init = sigma2;
  return c;
}

SpeakerModel random_model(int dim, int hidden, std::uint64_t seed) {
  auto model = SpeakerModel::init(small_config(dim, hidden), seed);
  Rng rng(derive_seed(seed, "extras"));
  for (int d = 0; d < dim; ++d) model.head_b(d) = rng.normal();
  model.sigma2(0) = 0.4 + rng.uniform();
  return model;
}

EmbeddingSequence random_sequence(int length, int dim, std::uint64_t seed) {
  EmbeddingSequence seq;
  seq.frames.resize(length, dim);
  Rng rng(seed);
  for (int t = 0; t < length; ++t)
    for (int d = 0; d < dim; ++d) seq.frames(t, d) = 2.0 * rng.normal();
  return seq;
}

PriorParams random_priors(Rng& rng) {
  PriorParams p;
  p.alpha = 0.2 + 2.0 * rng.uniform();
  p.p0 = 0.05 + 0.8 * rng.uniform();
  return p;
}

long bell_number(int n) {
  std::vector<std::vector<long>> tri{{1}};
  for (int i = 1; i <= n; ++i) {
    std::vector<long> row{tri.back().back()};
    for (long v : tri.back()) row.push_back(row.back() + v);
    tri.push_back(std::move(row));
  }
  return tri[n][0];
}

// Scalar three-factor oracle for one expansion step, evaluated in probability
// space: change * assignment * Gaussian density.
double factor_oracle(const BeamHypothesis& hyp, const VectorXd& x,
                     const SpeakerModel& model, const PriorParams& priors,
                     int label) {
  int cur = hyp.current_speaker();
  int K = hyp.num_speakers();
  double change, assign;
  VectorXd mu;
  if (label == cur) {
    change = 1.0 - priors.p0;
    assign = 1.0;
    mu = hyp.instances[label - 1]->predict_mean();
  } else {
    change = priors.p0;
    double z = priors.alpha;
    for (int k = 1; k <= K; ++k)
      if (k != cur) z += hyp.blocks.count_of(k);
    if (label == K + 1) {
      assign = priors.alpha / z;
      mu = new_instance(model).predict_mean();
    } else {
      assign = hyp.blocks.count_of(label) / z;
      mu = hyp.instances[label - 1]->predict_mean();
    }
  }
  double d2 = (x - mu).squaredNorm();
  double s2 = model.sigma2(0);
  double density = std::exp(-d2 / (2.0 * s2)) /
                   std::pow(2.0 * M_PI * s2, model.dim() / 2.0);
  return change * assign * density;
}

BeamHypothesis replay_hypothesis(const EmbeddingSequence& seq,
                                 const std::vector<int>& labels,
                                 const SpeakerModel& model) {
  BeamHypothesis hyp;
  hyp.labels = labels;
  for (std::size_t t = 0; t < labels.size(); ++t) {
    int y = labels[t];
    if (y == hyp.num_speakers() + 1) {
      hyp.instances.push_back(std::make_shared<const SpeakerInstanceState>(
          observe(model, new_instance(model), seq.frame(t))));
    } else {
      hyp.instances[y - 1] = std::make_shared<const SpeakerInstanceState>(
          observe(model, *hyp.instances[y - 1], seq.frame(t)));
    }
    hyp.blocks = y == hyp.blocks.current_speaker ? hyp.blocks
                                                 : update_blocks(hyp.blocks, y);
  }
  return hyp;
}

}  // namespace

TEST_CASE("expand offers exactly the admissible candidates") {
  auto model = random_model(2, 3, 1);
  auto seq = random_sequence(2, 2, 2);
  auto hyp = replay_hypothesis(seq, {1}, model);
  PriorParams priors{1.0, 0.3};

  auto expansions = expand(hyp, seq.frame(1), model, priors);
  REQUIRE(expansions.size() == 2);  // continue 1, or open speaker 2
  CHECK(expansions[0].label == 1);
  CHECK(expansions[1].label == 2);

  auto longer = random_sequence(4, 2, 3);
  auto hyp3 = replay_hypothesis(longer, {1, 2, 1}, model);
  auto exp3 = expand(hyp3, longer.frame(3), model, priors);
  REQUIRE(exp3.size() == 3);  // continue 1, switch to 2, new 3

  auto capped = expand(hyp3, longer.frame(3), model, priors, 2);
  REQUIRE(capped.size() == 2);  // cap forbids a third speaker
}

TEST_CASE("as p0 vanishes continuing dominates switching") {
  auto model = random_model(2, 3, 4);
  auto seq = random_sequence(3, 2, 5);
  auto hyp = replay_hypothesis(seq, {1, 2}, model);
  PriorParams priors{1.0, 1e-12};
  auto expansions = expand(hyp, seq.frame(2), model, priors);
  double continue_delta = 0.0, best_other = -1e300;
  for (const auto& e : expansions) {
    if (e.label == hyp.current_speaker())
      continue_delta = e.delta;
    else
      best_other = std::max(best_other, e.delta);
  }
  CHECK(continue_delta > best_other);
}

TEST_CASE("expansion deltas match the three-factor oracle") {
  Rng rng(99);
  for (int trial = 0; trial < 20; ++trial) {
    auto model = random_model(2, 4, rng.next_u64());
    auto seq = random_sequence(4, 2, rng.next_u64());
    auto priors = random_priors(rng);
    auto hyp = replay_hypothesis(seq, {1, 2, 1}, model);
    for (const auto& e : expand(hyp, seq.frame(3), model, priors)) {
      double direct = factor_oracle(hyp, seq.frame(3), model, priors, e.label);
      CHECK(std::exp(e.delta) == doctest::Approx(direct).epsilon(1e-10));
    }
  }
}

TEST_CASE("single-frame decode is forced to one speaker") {
  auto model = random_model(2, 3, 6);
  auto seq = random_sequence(1, 2, 7);
  PriorParams priors{1.0, 0.5};
  auto result = beam_decode(seq, model, priors, DecodeConfig{});
  CHECK(result.labels.labels == std::vector<int>{1});
}

TEST_CASE("beam rejects empty or mismatched input") {
  auto model = random_model(2, 3, 8);
  PriorParams priors{1.0, 0.5};
  EmbeddingSequence empty;
  empty.frames.resize(0, 2);
  CHECK_THROWS_AS(beam_decode(empty, model, priors, DecodeConfig{}), Error);
  auto wrong = random_sequence(3, 5, 9);
  CHECK_THROWS_AS(beam_decode(wrong, model, priors, DecodeConfig{}), Error);
}

TEST_CASE("exhaustive decode on a two-frame continue-favoring instance") {
  auto model = SpeakerModel::zeros(small_config(1, 2, 1.0));
  EmbeddingSequence seq;
  seq.frames.resize(2, 1);
  seq.frames << 0.0, 0.0;  // both frames sit on the model's constant mean
  PriorParams priors{1.0, 0.2};
  auto result = exhaustive_decode(seq, model, priors);
  // Continue pays ln(1-p0), a new speaker ln p0; same densities.
  CHECK(result.labels.labels == std::vector<int>{1, 1});
}

TEST_CASE("exhaustive decode refuses long sequences") {
  auto model = random_model(1, 2, 10);
  auto seq = random_sequence(11, 1, 11);
  PriorParams priors{1.0, 0.5};
  CHECK_THROWS_AS(exhaustive_decode(seq, model, priors, 10), Error);
}

TEST_CASE("label process probabilities sum to one") {
  Rng rng(7);
  for (int trial = 0; trial < 10; ++trial) {
    auto priors = random_priors(rng);
    for (int T : {2, 3, 4}) {
      double total = 0.0;
      LabelSequence labels;
      for (const auto& labeling : enumerate_canonical_labelings(T)) {
        labels.labels = labeling;
        total += std::exp(label_process_log_prob(labels, priors));
      }
      CHECK(total == doctest::Approx(1.0).epsilon(1e-10));
    }
  }
}

TEST_CASE("full-width beam equals the exhaustive oracle") {
  Rng rng(2718);
  for (int trial = 0; trial < 25; ++trial) {
    int T = 2 + static_cast<int>(rng.uniform_u64(5));
    int dim = 1 + static_cast<int>(rng.uniform_u64(3));
    auto model = random_model(dim, 3, rng.next_u64());
    auto seq = random_sequence(T, dim, rng.next_u64());
    auto priors = random_priors(rng);

    DecodeConfig config;
    config.beam_width = static_cast<int>(bell_number(T));
    auto beam = beam_decode(seq, model, priors, config);
    auto oracle = exhaustive_decode(seq, model, priors);
    CHECK(beam.labels.labels == oracle.labels.labels);
    CHECK(beam.log_joint == doctest::Approx(oracle.log_joint).epsilon(1e-9));
  }
}

TEST_CASE("decodes are canonical, self-consistent and beam-monotone") {
  Rng rng(321);
  for (int trial = 0; trial < 15; ++trial) {
    int T = 3 + static_cast<int>(rng.uniform_u64(5));
    auto model = random_model(2, 3, rng.next_u64());
    auto seq = random_sequence(T, 2, rng.next_u64());
    auto priors = random_priors(rng);

    double prev = -std::numeric_limits<double>::infinity();
    for (int beta : {1, 2, 4, 64}) {
      DecodeConfig config;
      config.beam_width = beta;
      auto result = beam_decode(seq, model, priors, config);
      CHECK(result.labels.is_canonical());
      // Re-scoring the returned labeling reproduces its log joint.
      CHECK(score_labeling(seq, result.labels, model, priors) ==
            doctest::Approx(result.log_joint).epsilon(1e-10));
      CHECK(result.log_joint >= prev - 1e-12);
      prev = result.log_joint;
    }
  }
}

TEST_CASE("cumulative mean decode keeps a tight cluster together") {
  EmbeddingSequence seq;
  seq.frames.resize(12, 2);
  Rng rng(5);
  for (int t = 0; t < 12; ++t)
    for (int d = 0; d < 2; ++d) seq.frames(t, d) = 3.0 + 0.01 * rng.normal();
  PriorParams priors{0.3, 0.05};
  auto result = cumulative_mean_decode(seq, priors, DecodeConfig{}, 0.05);
  CHECK(result.labels.num_speakers() == 1);
}

TEST_CASE("cumulative mean decode separates two distant clusters") {
  EmbeddingSequence seq;
  seq.frames.resize(20, 2);
  Rng rng(6);
  std::vector<int> truth;
  for (int t = 0; t < 20; ++t) {
    int spk = (t / 5) % 2;  // blocks of 5, alternating
    truth.push_back(spk + 1);
    for (int d = 0; d < 2; ++d)
      seq.frames(t, d) = (spk == 0 ? -20.0 : 20.0) + 0.3 * rng.normal();
  }
  PriorParams priors{0.3, 0.2};
  auto result = cumulative_mean_decode(seq, priors, DecodeConfig{}, 1.0);

  LabelSequence ref_labels;
  ref_labels.labels = truth;
  auto ref = reference_from_labels(ref_labels, 1.0);
  CHECK(der(ref, result.labels).der() == doctest::Approx(0.0));

  // Score/decode consistency holds for the baseline too.
  CumulativeMeanBackend backend(2, 1.0);
  CHECK(score_labeling_with(seq, result.labels, backend, priors) ==
        doctest::Approx(result.log_joint).epsilon(1e-10));
}

TEST_CASE("decode trace records per-frame beam scores") {
  auto model = random_model(2, 3, 50);
  auto seq = random_sequence(5, 2, 51);
  PriorParams priors{1.0, 0.3};
  DecodeConfig config;
  config.beam_width = 3;
  config.trace = true;
  auto result = beam_decode(seq, model, priors, config);
  REQUIRE(result.beam_trace.size() == 5);
  CHECK(result.beam_trace[0].size() == 1);
  for (const auto& frame : result.beam_trace) {
    for (std::size_t i = 1; i < frame.size(); ++i)
      CHECK(frame[i - 1] >= frame[i]);
  }
  CHECK(result.beam_trace.back().front() == doctest::Approx(result.log_joint));
}

#include <doctest.h>

#include <cmath>

#include "uisrnn/decoder.hpp"
#include "uisrnn/evaluation.hpp"
#include "uisrnn/priors.hpp"
#include "uisrnn/synthesis.hpp"

using namespace uisrnn;

TEST_CASE("one-speaker config produces one tight cluster") {
  SynthConfig cfg;
  cfg.num_speakers = 1;
  cfg.dim = 3;
  cfg.frames = 50;
  cfg.sigma = 0.2;
  cfg.seed = 4;
  auto result = generate(cfg, "rec");
  for (int y : result.recording.labels.labels) CHECK(y == 1);
  VectorXd centroid = result.recording.embeddings.frames.colwise().mean();
  CHECK((centroid - result.means[0]).norm() < 0.2);
}

TEST_CASE("generated labels are canonical and references align") {
  SynthConfig cfg;
  cfg.num_speakers = 5;
  cfg.dim = 2;
  cfg.frames = 120;
  cfg.p0 = 0.25;
  cfg.overlap_fraction = 0.1;
  cfg.seed = 9;
  auto result = generate(cfg, "rec");
  CHECK(result.recording.labels.is_canonical());
  CHECK(result.reference.length() == cfg.frames);
  for (const auto& set : result.reference.frames) {
    CHECK(!set.empty());
    CHECK(set.size() <= 2);
  }
}

TEST_CASE("empirical change rate tracks p0") {
  SynthConfig cfg;
  cfg.num_speakers = 6;
  cfg.dim = 2;
  cfg.frames = 10000;
  cfg.p0 = 1e-4;
  cfg.seed = 10;
  auto rare = generate(cfg, "rec");
  int changes = 0;
  for (int t = 1; t < rare.recording.labels.length(); ++t)
    if (rare.recording.labels.labels[t] != rare.recording.labels.labels[t - 1])
      ++changes;
  CHECK(changes / static_cast<double>(cfg.frames) < 0.01);

  cfg.p0 = 0.2;
  cfg.frames = 20000;
  auto frequent = generate(cfg, "rec2");
  changes = 0;
  for (int t = 1; t < frequent.recording.labels.length(); ++t)
    if (frequent.recording.labels.labels[t] !=
        frequent.recording.labels.labels[t - 1])
      ++changes;
  double rate = changes / static_cast<double>(cfg.frames - 1);
  double tolerance = 3.0 * std::sqrt(cfg.p0 * (1 - cfg.p0) / cfg.frames);
  CHECK(std::abs(rate - cfg.p0) < tolerance);
}

TEST_CASE("estimators recover generator parameters") {
  // p0: the realized change rate is exactly Bernoulli(p0) while some other
  // speaker exists, so the pooled estimate gets an analytic standard error.
  SynthConfig cfg;
  cfg.num_speakers = 30;  // high cap: ~60 changes spawn well under 30 speakers
  cfg.dim = 2;
  cfg.frames = 400;
  cfg.p0 = 0.15;
  cfg.alpha = 0.6;

  std::vector<LabelSequence> corpus;
  long pairs = 0;
  int cap_events = 0;
  for (int r = 0; r < 50; ++r) {
    cfg.seed = 1000 + r;
    auto result = generate(cfg, "rec" + std::to_string(r));
    cap_events += result.cap_events;
    corpus.push_back(result.recording.labels);
    pairs += cfg.frames - 1;
  }
  REQUIRE(cap_events == 0);  // cap never binds at these settings
  double se = std::sqrt(cfg.p0 * (1 - cfg.p0) / pairs);
  CHECK(std::abs(estimate_p0(corpus) - cfg.p0) < 3.0 * se);
}

TEST_CASE("alpha estimate is consistent with the generator spread") {
  // Short recordings with a couple of changes each keep the block-count
  // normalizer small, where the ratio estimator is nearly unbiased. The
  // estimate from one corpus should sit within three standard errors, with
  // the spread measured across replicate corpora.
  SynthConfig cfg;
  cfg.num_speakers = 12;
  cfg.dim = 2;
  cfg.frames = 15;
  cfg.p0 = 0.15;
  cfg.alpha = 0.6;

  const int replicates = 60;
  const int recordings = 8;
  std::vector<double> estimates;
  for (int rep = 0; rep < replicates; ++rep) {
    std::vector<LabelSequence> corpus;
    for (int r = 0; r < recordings; ++r) {
      cfg.seed = derive_seed(5000, "alpha", rep, r);
      auto result = generate(cfg, "rec");
      corpus.push_back(result.recording.labels);
    }
    bool any_change = false;
    for (const auto& s : corpus)
      for (std::size_t t = 1; t < s.labels.size(); ++t)
        if (s.labels[t] != s.labels[t - 1]) any_change = true;
    if (any_change) estimates.push_back(estimate_alpha(corpus));
  }
  REQUIRE(estimates.size() > 50);
  double mean = 0.0;
  for (double e : estimates) mean += e;
  mean /= estimates.size();
  double sd = 0.0;
  for (double e : estimates) sd += (e - mean) * (e - mean);
  sd = std::sqrt(sd / (estimates.size() - 1));
  CHECK(std::abs(estimates.front() - cfg.alpha) < 3.0 * sd);
  CHECK(std::abs(mean - cfg.alpha) < 3.0 * sd);
}

TEST_CASE("oracle-mean decoding drives DER to zero as separation grows") {
  SynthConfig cfg;
  cfg.num_speakers = 4;
  cfg.dim = 4;
  cfg.frames = 150;
  cfg.p0 = 0.12;
  cfg.alpha = 0.8;
  cfg.sigma = 1.0;

  double previous_der = 1.0;
  for (double scale : {0.5, 4.0, 40.0}) {
    cfg.mean_scale = scale;
    cfg.seed = 999;
    auto synth = generate(cfg, "rec");

    auto priors_labels = std::vector<LabelSequence>{synth.recording.labels};
    PriorParams priors;
    priors.alpha = estimate_alpha(priors_labels);
    priors.p0 = estimate_p0(priors_labels);

    FixedMeansBackend backend(synth.means, cfg.sigma * cfg.sigma);
    DecodeConfig config;
    config.beam_width = 8;
    config.max_speakers = static_cast<int>(synth.means.size());
    auto decoded =
        beam_decode_with(synth.recording.embeddings, backend, priors, config);

    double score = der(synth.reference, decoded.labels).der();
    CHECK(score <= previous_der + 1e-9);
    previous_der = score;
  }
  CHECK(previous_der == doctest::Approx(0.0));
}

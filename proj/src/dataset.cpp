#include "uisrnn/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

namespace uisrnn {

std::vector<SpeakerTrainSequence> build_training_sequences(
    const Dataset& dataset, int permutations, std::uint64_t seed) {
  if (permutations < 1)
    throw Error(ErrCode::validation, "permutation count must be >= 1");
  if (dataset.empty())
    throw Error(ErrCode::validation, "dataset is empty");

  std::vector<SpeakerTrainSequence> out;
  for (const auto& rec : dataset.recordings) {
    rec.validate();
    int num_speakers = rec.labels.num_speakers();
    for (int spk = 1; spk <= num_speakers; ++spk) {
      std::vector<int> positions;
      for (int t = 0; t < rec.labels.length(); ++t)
        if (rec.labels.labels[t] == spk) positions.push_back(t);
      if (positions.empty()) continue;  // unreachable with canonical labels
      for (int copy = 0; copy < permutations; ++copy) {
        Rng rng(derive_seed(seed, rec.id, static_cast<std::uint64_t>(spk),
                            static_cast<std::uint64_t>(copy)));
        std::vector<int> order = positions;
        rng.shuffle(order);
        SpeakerTrainSequence seq;
        seq.recording_id = rec.id;
        seq.speaker_label = spk;
        seq.copy_index = copy;
        seq.frames.resize(static_cast<long>(order.size()),
                          rec.embeddings.dim());
        for (std::size_t i = 0; i < order.size(); ++i)
          seq.frames.row(static_cast<long>(i)) = rec.embeddings.frames.row(order[i]);
        out.push_back(std::move(seq));
      }
    }
  }
  return out;
}

SplitResult stratified_split(const Dataset& dataset, double train_ratio,
                             std::uint64_t seed) {
  if (!(train_ratio > 0.0 && train_ratio < 1.0))
    throw Error(ErrCode::validation, "split ratio must be in (0, 1)");
  if (dataset.empty())
    throw Error(ErrCode::validation, "dataset is empty");

  std::map<std::string, std::vector<int>> by_domain;
  for (int i = 0; i < dataset.size(); ++i)
    by_domain[dataset.recordings[i].domain].push_back(i);

  SplitResult result;
  for (const auto& [domain, indices] : by_domain) {
    int n = static_cast<int>(indices.size());
    if (n == 1) {
      log_warn("domain '" + domain + "' has a single recording; assigned to train");
      result.train_indices.push_back(indices[0]);
      continue;
    }
    int n_train = static_cast<int>(std::lround(train_ratio * n));
    n_train = std::clamp(n_train, 0, n);
    std::vector<int> shuffled = indices;
    Rng rng(derive_seed(seed, "split:" + domain));
    rng.shuffle(shuffled);
    for (int i = 0; i < n; ++i) {
      if (i < n_train)
        result.train_indices.push_back(shuffled[i]);
      else
        result.validation_indices.push_back(shuffled[i]);
    }
  }
  std::sort(result.train_indices.begin(), result.train_indices.end());
  std::sort(result.validation_indices.begin(), result.validation_indices.end());
  for (int i : result.train_indices)
    result.train.recordings.push_back(dataset.recordings[i]);
  for (int i : result.validation_indices)
    result.validation.recordings.push_back(dataset.recordings[i]);
  return result;
}

}  // namespace uisrnn

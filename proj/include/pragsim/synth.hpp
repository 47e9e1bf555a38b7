#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pragsim/dataset.hpp"

namespace pragsim {

struct SynthClass {
  std::string label;
  int n_speakers = 1;
  int utterances_per_speaker = 1;
  double duration_mean_s = 4.0;
  double duration_speaker_sd_s = 0.4;
  double duration_utterance_sd_s = 0.8;
};

/// Recipe for a seeded synthetic embedding corpus.
///
/// Per layer, every class gets a centroid base + (separation / sqrt 2) u_c with
/// orthonormal directions u_c, so class centroids sit `separation` apart.
/// Each speaker adds a N(0, speaker_sd^2) offset and every utterance adds
/// N(0, 1 - speaker_sd^2) noise, so within-class spread is one unit per
/// coordinate. `base_scale` controls the shared offset that pushes raw
/// cosines toward 1, mimicking pooled transformer features.
struct SynthSpec {
  std::vector<SynthClass> classes;
  int dim = 32;
  int layers = 24;
  double separation = 8.0;
  double speaker_sd = 0.5;
  double base_scale = 1.0;
  std::uint64_t seed = 1;
  std::optional<int> age_min;  // integer ages drawn per speaker when both set
  std::optional<int> age_max;
  std::string name = "synthetic";

  void validate() const;
};

/// Deterministic for a given spec: identical specs give identical datasets.
EmbeddingDataset gen_synthetic(const SynthSpec& spec);

/// Copy of `dataset` with speaker labels permuted across speakers.
EmbeddingDataset permute_speaker_labels(const EmbeddingDataset& dataset, std::uint64_t seed);

}  // namespace pragsim

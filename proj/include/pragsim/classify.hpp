#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "pragsim/dataset.hpp"
#include "pragsim/evalmetrics.hpp"
#include "pragsim/simcore.hpp"

namespace pragsim {

struct KnnConfig {
  std::size_t k = 7;
  /// Layers voting per utterance; empty means every layer 1..L.
  std::vector<int> layers;
  FeatureMask mask;

  /// Throws InvalidArgument / InvalidLayerIndex / InvalidMask.
  void validate(const EmbeddingDataset& dataset) const;
  std::vector<int> resolved_layers(const EmbeddingDataset& dataset) const;
};

/// Outcome of one k-nearest-neighbour vote on one layer.
struct LayerVote {
  std::string label;
  /// Summed similarity of the neighbours that carry `label`.
  double support = 0.0;
  std::map<std::string, std::size_t> counts;
};

/// kNN over precomputed reference rows. `reference` holds dataset
/// positions; neighbour ties break by utterance id, label ties by summed
/// similarity and then lexicographically.
LayerVote knn_vote(const VectorTable& table, const std::vector<std::size_t>& reference, std::size_t query,
                   std::size_t k);

std::string classify_utterance_layer(const EmbeddingDataset& dataset, const std::vector<std::string>& ref_ids,
                                     const std::string& utt_id, int layer, std::size_t k);

struct UtteranceDecision {
  std::string label;
  std::map<std::string, std::size_t> layer_votes;
  /// Per label, summed support of the layers that voted for it.
  std::map<std::string, double> margin;
};

std::string classify_utterance(const EmbeddingDataset& dataset, const std::vector<std::string>& ref_ids,
                               const std::string& utt_id, const KnnConfig& cfg);

struct SpeakerDecision {
  std::string speaker_id;
  std::string label;
  std::map<std::string, std::size_t> utterance_votes;
  std::map<std::string, std::size_t> layer_votes;  // summed over utterances
};

SpeakerDecision classify_speaker(const EmbeddingDataset& dataset, const std::vector<std::string>& ref_ids,
                                 const std::string& speaker_id, const KnnConfig& cfg);

struct SpeakerPrediction {
  std::string speaker_id;
  std::string true_label;
  std::string predicted;
};

struct LosoResult {
  ConfusionMatrix confusion;
  std::vector<SpeakerPrediction> per_speaker;  // sorted by speaker id
};

/// Leave-one-speaker-out: each speaker is classified against every other
/// speaker's utterances.
LosoResult loso_evaluate(const EmbeddingDataset& dataset, const KnnConfig& cfg);

/// Utterance-length rule: a speaker whose mean duration is below
/// ratio x (mean duration of TD utterances, excluding the speaker's own) gets
/// target_label, otherwise td_label.
LosoResult length_baseline(const EmbeddingDataset& dataset, const std::string& td_label,
                           const std::string& target_label, double ratio = 0.70);

}  // namespace pragsim

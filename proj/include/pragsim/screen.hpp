#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "pragsim/dataset.hpp"
#include "pragsim/simcore.hpp"

namespace pragsim {

/// Number of nearest typical utterances averaged into a typicality score.
inline constexpr std::size_t kTypicalityNeighbours = 3;

/// Mean similarity of `utterance_id` to its 3 most similar utterances in
/// `typical_ids`, never counting utterances of its own speaker.
/// Throws PoolTooSmall if fewer than 3 remain.
double utterance_typicality(const VectorTable& table, const std::string& utterance_id,
                            const std::vector<std::string>& typical_ids);
double utterance_typicality(const EmbeddingDataset& dataset, const SimilarityConfig& cfg,
                            const std::string& utterance_id, const std::vector<std::string>& typical_ids);

/// Mean utterance typicality over the speaker's utterances against the
/// utterances of the typical speakers (the speaker itself left out).
double speaker_typicality_knn(const EmbeddingDataset& dataset, const SimilarityConfig& cfg,
                              const std::string& speaker_id, const std::vector<std::string>& typical_speaker_ids);

/// Cosine between the speaker's centroid and the pooled centroid of all
/// typical speakers' utterances (speaker left out if a member).
double speaker_centroid_typicality(const EmbeddingDataset& dataset, const SimilarityConfig& cfg,
                                   const std::string& speaker_id,
                                   const std::vector<std::string>& typical_speaker_ids);

enum class ScreeningModel { Knn3, Centroid };

std::string to_string(ScreeningModel model);
ScreeningModel parse_screening_model(const std::string& name);

/// Scores every speaker in `speakers` under the chosen model.
std::map<std::string, double> score_speakers(const EmbeddingDataset& dataset, const SimilarityConfig& cfg,
                                             ScreeningModel model, const std::vector<std::string>& speakers,
                                             const std::vector<std::string>& typical_speaker_ids);

enum class Decision { Typical, Atypical };

struct ScreeningEntry {
  std::string speaker_id;
  double score = 0.0;
  Decision decision = Decision::Typical;
};

struct ScreeningReport {
  std::vector<ScreeningEntry> speakers;  // sorted by speaker id
  double threshold = 0.0;
  std::string model;
};

/// score < threshold -> atypical.
ScreeningReport threshold_classify(const std::map<std::string, double>& scores, double threshold,
                                   const std::string& model = "");

struct SweepRow {
  double threshold = 0.0;
  std::int64_t atypical_flagged = 0;  // true atypical, predicted atypical
  std::int64_t atypical_missed = 0;   // true atypical, predicted typical
  std::int64_t typical_flagged = 0;   // true typical, predicted atypical
  std::int64_t typical_passed = 0;    // true typical, predicted typical
  double accuracy = 0.0;
};

/// Evaluates -inf, every midpoint between consecutive distinct scores, and
/// +inf. `is_atypical` gives the binary ground truth per speaker.
std::vector<SweepRow> threshold_sweep(const std::map<std::string, double>& scores,
                                      const std::map<std::string, bool>& is_atypical);

}  // namespace pragsim

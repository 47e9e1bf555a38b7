#pragma once

#include <cstddef>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "pragsim/dataset.hpp"
#include "pragsim/simcore.hpp"

namespace pragsim {

struct RetrievalConstraints {
  bool exclude_same_speaker = false;
  std::optional<std::string> label_filter;
  std::set<std::string> exclude_ids;
  /// Inclusive clip-length window in seconds.
  std::optional<double> min_duration_s;
  std::optional<double> max_duration_s;
};

struct RankedEntry {
  std::string utterance_id;
  double score = 0.0;
  /// 1-based position in the full sorted pool.
  std::size_t rank = 0;
};

struct RankedList {
  std::string query;
  std::vector<RankedEntry> entries;
};

/// Dataset positions eligible under `constraints` for `query_id` (never the
/// query itself). Throws UnknownUtterance for exclude_ids not in the data.
std::vector<std::size_t> eligible_pool(const EmbeddingDataset& dataset, const std::string& query_id,
                                       const RetrievalConstraints& constraints);

/// Pool positions sorted by similarity to `query` descending, id ascending.
std::vector<RankedEntry> rank_pool(const VectorTable& table, std::size_t query,
                                   const std::vector<std::size_t>& pool);

RankedList top_k_similar(const EmbeddingDataset& dataset, const SimilarityConfig& cfg, const std::string& query_id,
                         std::size_t k, const RetrievalConstraints& constraints = {});

inline const std::vector<double> kDefaultPercentiles{99, 97, 95, 90, 80, 60, 30};

/// Stimulus sampler over the other-speaker pool: ranks 1..top_m, then for
/// each percentile p the rank max(top_m + 1, round(N (100 - p) / 100)),
/// advancing past ranks already taken. Entries come back in rank order.
RankedList percentile_candidates(const EmbeddingDataset& dataset, const SimilarityConfig& cfg,
                                 const std::string& query_id,
                                 const std::vector<double>& percentiles = kDefaultPercentiles,
                                 std::size_t top_m = 3, const RetrievalConstraints& extra = {});

/// Pure rank rule behind percentile_candidates. Returns 1-based ranks.
std::vector<std::size_t> percentile_ranks(std::size_t pool_size, const std::vector<double>& percentiles,
                                          std::size_t top_m);

/// The speaker's utterance with the highest mean similarity to the rest.
std::string medoid_utterance(const EmbeddingDataset& dataset, const SimilarityConfig& cfg,
                             const std::string& speaker_id);

/// The m least typical utterances of a speaker, ascending by typicality
/// (mean similarity to the 3 nearest reference utterances of other speakers).
RankedList atypical_utterances(const EmbeddingDataset& dataset, const SimilarityConfig& cfg,
                               const std::string& speaker_id, const std::vector<std::string>& reference_ids,
                               std::size_t m);

/// Cosine between two speakers' utterance centroids.
double speaker_similarity(const EmbeddingDataset& dataset, const SimilarityConfig& cfg, const std::string& speaker_a,
                          const std::string& speaker_b);

}  // namespace pragsim

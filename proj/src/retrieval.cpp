#include "pragsim/retrieval.hpp"

#include <algorithm>
#include <cmath>

#include "pragsim/error.hpp"
#include "pragsim/screen.hpp"

namespace pragsim {

std::vector<std::size_t> eligible_pool(const EmbeddingDataset& dataset, const std::string& query_id,
                                       const RetrievalConstraints& constraints) {
  const auto& query = dataset.utterance(query_id);
  for (const auto& id : constraints.exclude_ids) {
    if (!dataset.contains(id)) fail(ErrorCode::UnknownUtterance, "excluded id " + id + " is not in the dataset");
  }
  std::vector<std::size_t> pool;
  const auto& utts = dataset.utterances();
  for (std::size_t p = 0; p < utts.size(); ++p) {
    const auto& u = utts[p];
    if (u.utterance_id == query_id) continue;
    if (constraints.exclude_same_speaker && u.speaker_id == query.speaker_id) continue;
    if (constraints.label_filter && u.condition_label != constraints.label_filter) continue;
    if (constraints.exclude_ids.contains(u.utterance_id)) continue;
    if (constraints.min_duration_s && u.duration_s < *constraints.min_duration_s) continue;
    if (constraints.max_duration_s && u.duration_s > *constraints.max_duration_s) continue;
    pool.push_back(p);
  }
  return pool;
}

std::vector<RankedEntry> rank_pool(const VectorTable& table, std::size_t query,
                                   const std::vector<std::size_t>& pool) {
  const auto& utts = table.dataset().utterances();
  std::vector<RankedEntry> entries;
  entries.reserve(pool.size());
  for (auto p : pool) entries.push_back({utts[p].utterance_id, table.score(query, p), 0});
  std::sort(entries.begin(), entries.end(), [](const RankedEntry& a, const RankedEntry& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.utterance_id < b.utterance_id;
  });
  for (std::size_t i = 0; i < entries.size(); ++i) entries[i].rank = i + 1;
  return entries;
}

RankedList top_k_similar(const EmbeddingDataset& dataset, const SimilarityConfig& cfg, const std::string& query_id,
                         std::size_t k, const RetrievalConstraints& constraints) {
  if (k == 0) fail(ErrorCode::InvalidArgument, "k must be >= 1");
  const auto pool = eligible_pool(dataset, query_id, constraints);
  if (pool.empty()) fail(ErrorCode::PoolTooSmall, "no eligible utterances for query " + query_id);
  const VectorTable table(dataset, cfg);
  auto ranked = rank_pool(table, dataset.position(query_id), pool);
  if (ranked.size() > k) ranked.resize(k);
  return {query_id, std::move(ranked)};
}

std::vector<std::size_t> percentile_ranks(std::size_t pool_size, const std::vector<double>& percentiles,
                                          std::size_t top_m) {
  const std::size_t wanted = top_m + percentiles.size();
  if (pool_size < wanted) {
    fail(ErrorCode::PoolTooSmall, "pool of " + std::to_string(pool_size) + " cannot supply " +
                                      std::to_string(wanted) + " distinct candidates");
  }
  std::vector<bool> taken(pool_size + 1, false);
  std::vector<std::size_t> ranks;
  for (std::size_t r = 1; r <= top_m; ++r) {
    taken[r] = true;
    ranks.push_back(r);
  }
  for (double p : percentiles) {
    if (!(p >= 0.0 && p <= 100.0)) fail(ErrorCode::InvalidArgument, "percentile outside [0, 100]");
    const double raw = std::round(static_cast<double>(pool_size) * (100.0 - p) / 100.0);
    std::size_t r = std::max<std::size_t>(top_m + 1, static_cast<std::size_t>(std::max(raw, 0.0)));
    r = std::min(r, pool_size);
    while (r <= pool_size && taken[r]) ++r;
    if (r > pool_size) {
      // ran off the bottom of the pool: take the best free rank below top_m
      r = top_m + 1;
      while (taken[r]) ++r;
    }
    taken[r] = true;
    ranks.push_back(r);
  }
  std::sort(ranks.begin(), ranks.end());
  return ranks;
}

RankedList percentile_candidates(const EmbeddingDataset& dataset, const SimilarityConfig& cfg,
                                 const std::string& query_id, const std::vector<double>& percentiles,
                                 std::size_t top_m, const RetrievalConstraints& extra) {
  RetrievalConstraints constraints = extra;
  constraints.exclude_same_speaker = true;
  const auto pool = eligible_pool(dataset, query_id, constraints);
  const auto ranks = percentile_ranks(pool.size(), percentiles, top_m);
  const VectorTable table(dataset, cfg);
  const auto ranked = rank_pool(table, dataset.position(query_id), pool);
  RankedList out{query_id, {}};
  for (auto r : ranks) out.entries.push_back(ranked[r - 1]);
  return out;
}

std::string medoid_utterance(const EmbeddingDataset& dataset, const SimilarityConfig& cfg,
                             const std::string& speaker_id) {
  const auto& ids = dataset.speaker_utterances(speaker_id);
  if (ids.size() < 2) fail(ErrorCode::DegenerateInput, "speaker " + speaker_id + " has a single utterance");
  const VectorTable table(dataset, cfg);
  std::vector<std::size_t> pos;
  for (const auto& id : ids) pos.push_back(dataset.position(id));

  std::string best;
  double best_mean = 0.0;
  for (std::size_t i = 0; i < pos.size(); ++i) {
    double sum = 0.0;
    for (std::size_t j = 0; j < pos.size(); ++j) {
      if (j != i) sum += table.score(pos[i], pos[j]);
    }
    const double mean = sum / static_cast<double>(pos.size() - 1);
    if (best.empty() || mean > best_mean || (mean == best_mean && ids[i] < best)) {
      best = ids[i];
      best_mean = mean;
    }
  }
  return best;
}

RankedList atypical_utterances(const EmbeddingDataset& dataset, const SimilarityConfig& cfg,
                               const std::string& speaker_id, const std::vector<std::string>& reference_ids,
                               std::size_t m) {
  if (m == 0) fail(ErrorCode::InvalidArgument, "m must be >= 1");
  if (reference_ids.empty()) fail(ErrorCode::PoolTooSmall, "reference pool is empty");
  const auto& ids = dataset.speaker_utterances(speaker_id);
  const VectorTable table(dataset, cfg);
  RankedList out{speaker_id, {}};
  for (const auto& id : ids) {
    out.entries.push_back({id, utterance_typicality(table, id, reference_ids), 0});
  }
  std::sort(out.entries.begin(), out.entries.end(), [](const RankedEntry& a, const RankedEntry& b) {
    if (a.score != b.score) return a.score < b.score;
    return a.utterance_id < b.utterance_id;
  });
  for (std::size_t i = 0; i < out.entries.size(); ++i) out.entries[i].rank = i + 1;
  if (out.entries.size() > m) out.entries.resize(m);
  return out;
}

double speaker_similarity(const EmbeddingDataset& dataset, const SimilarityConfig& cfg, const std::string& speaker_a,
                          const std::string& speaker_b) {
  const VectorTable table(dataset, cfg);
  const auto ca = centroid(table, dataset.speaker_utterances(speaker_a));
  if (speaker_a == speaker_b) {
    if (squared_norm(ca) == 0.0) fail(ErrorCode::ZeroNorm, "speaker " + speaker_a + " has a zero centroid");
    return 1.0;
  }
  const auto cb = centroid(table, dataset.speaker_utterances(speaker_b));
  return cosine(ca, cb);
}

}  // namespace pragsim

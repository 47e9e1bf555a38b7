#include "pragsim/screen.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "pragsim/error.hpp"
#include "pragsim/parallel.hpp"

namespace pragsim {

double utterance_typicality(const VectorTable& table, const std::string& utterance_id,
                            const std::vector<std::string>& typical_ids) {
  const auto& dataset = table.dataset();
  const auto query = dataset.position(utterance_id);
  const auto& speaker = dataset.utterances()[query].speaker_id;

  std::vector<std::pair<double, const std::string*>> scored;
  scored.reserve(typical_ids.size());
  for (const auto& id : typical_ids) {
    const auto p = dataset.position(id);
    if (p == query || dataset.utterances()[p].speaker_id == speaker) continue;
    scored.emplace_back(table.score(query, p), &id);
  }
  if (scored.size() < kTypicalityNeighbours) {
    fail(ErrorCode::PoolTooSmall, "typical pool for " + utterance_id + " has " + std::to_string(scored.size()) +
                                      " utterances, need " + std::to_string(kTypicalityNeighbours));
  }
  auto better = [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return *a.second < *b.second;
  };
  std::partial_sort(scored.begin(), scored.begin() + kTypicalityNeighbours, scored.end(), better);
  double sum = 0.0;
  for (std::size_t i = 0; i < kTypicalityNeighbours; ++i) sum += scored[i].first;
  return sum / static_cast<double>(kTypicalityNeighbours);
}

double utterance_typicality(const EmbeddingDataset& dataset, const SimilarityConfig& cfg,
                            const std::string& utterance_id, const std::vector<std::string>& typical_ids) {
  return utterance_typicality(VectorTable(dataset, cfg), utterance_id, typical_ids);
}

namespace {

std::vector<std::string> pooled_utterances(const EmbeddingDataset& dataset, const std::vector<std::string>& speakers,
                                           const std::string& leave_out) {
  std::vector<std::string> ids;
  for (const auto& s : std::set<std::string>(speakers.begin(), speakers.end())) {
    if (s == leave_out) continue;
    const auto& utts = dataset.speaker_utterances(s);
    ids.insert(ids.end(), utts.begin(), utts.end());
  }
  return ids;
}

double knn_score(const VectorTable& table, const std::string& speaker_id,
                 const std::vector<std::string>& typical_speaker_ids) {
  const auto& dataset = table.dataset();
  const auto pool = pooled_utterances(dataset, typical_speaker_ids, speaker_id);
  const auto& utts = dataset.speaker_utterances(speaker_id);
  double sum = 0.0;
  for (const auto& id : utts) sum += utterance_typicality(table, id, pool);
  return sum / static_cast<double>(utts.size());
}

double centroid_score(const VectorTable& table, const std::string& speaker_id,
                      const std::vector<std::string>& typical_speaker_ids) {
  const auto& dataset = table.dataset();
  const auto pool = pooled_utterances(dataset, typical_speaker_ids, speaker_id);
  if (pool.empty()) fail(ErrorCode::PoolTooSmall, "typical set is empty after leaving out " + speaker_id);
  const auto own = centroid(table, dataset.speaker_utterances(speaker_id));
  const auto typical = centroid(table, pool);
  try {
    return cosine(own, typical);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::ZeroNorm) throw;
    fail(ErrorCode::ZeroNorm, "zero-norm centroid while screening " + speaker_id);
  }
}

}  // namespace

double speaker_typicality_knn(const EmbeddingDataset& dataset, const SimilarityConfig& cfg,
                              const std::string& speaker_id, const std::vector<std::string>& typical_speaker_ids) {
  return knn_score(VectorTable(dataset, cfg), speaker_id, typical_speaker_ids);
}

double speaker_centroid_typicality(const EmbeddingDataset& dataset, const SimilarityConfig& cfg,
                                   const std::string& speaker_id,
                                   const std::vector<std::string>& typical_speaker_ids) {
  return centroid_score(VectorTable(dataset, cfg), speaker_id, typical_speaker_ids);
}

std::string to_string(ScreeningModel model) { return model == ScreeningModel::Knn3 ? "knn3" : "centroid"; }

ScreeningModel parse_screening_model(const std::string& name) {
  if (name == "knn3") return ScreeningModel::Knn3;
  if (name == "centroid") return ScreeningModel::Centroid;
  fail(ErrorCode::InvalidArgument, "unknown screening model '" + name + "' (expected knn3 or centroid)");
}

std::map<std::string, double> score_speakers(const EmbeddingDataset& dataset, const SimilarityConfig& cfg,
                                             ScreeningModel model, const std::vector<std::string>& speakers,
                                             const std::vector<std::string>& typical_speaker_ids) {
  for (const auto& s : typical_speaker_ids) dataset.speaker_utterances(s);
  const VectorTable table(dataset, cfg);
  std::vector<double> scores(speakers.size());
  parallel_for(speakers.size(), [&](std::size_t i) {
    scores[i] = model == ScreeningModel::Knn3 ? knn_score(table, speakers[i], typical_speaker_ids)
                                              : centroid_score(table, speakers[i], typical_speaker_ids);
  });
  std::map<std::string, double> out;
  for (std::size_t i = 0; i < speakers.size(); ++i) out[speakers[i]] = scores[i];
  return out;
}

ScreeningReport threshold_classify(const std::map<std::string, double>& scores, double threshold,
                                   const std::string& model) {
  ScreeningReport r;
  r.threshold = threshold;
  r.model = model;
  for (const auto& [speaker, score] : scores) {
    if (!std::isfinite(score)) fail(ErrorCode::InvalidArgument, "non-finite score for speaker " + speaker);
    r.speakers.push_back({speaker, score, score < threshold ? Decision::Atypical : Decision::Typical});
  }
  return r;
}

std::vector<SweepRow> threshold_sweep(const std::map<std::string, double>& scores,
                                      const std::map<std::string, bool>& is_atypical) {
  if (scores.empty()) fail(ErrorCode::DegenerateInput, "threshold sweep of no speakers");
  std::vector<double> distinct;
  for (const auto& [speaker, score] : scores) {
    if (!std::isfinite(score)) fail(ErrorCode::DegenerateInput, "non-finite score for speaker " + speaker);
    if (!is_atypical.contains(speaker)) fail(ErrorCode::DegenerateInput, "no ground truth for speaker " + speaker);
    distinct.push_back(score);
  }
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());

  std::vector<double> thresholds;
  thresholds.push_back(-std::numeric_limits<double>::infinity());
  for (std::size_t i = 1; i < distinct.size(); ++i) thresholds.push_back(distinct[i - 1] + (distinct[i] - distinct[i - 1]) / 2.0);
  thresholds.push_back(std::numeric_limits<double>::infinity());

  std::vector<SweepRow> rows;
  for (double t : thresholds) {
    const auto report = threshold_classify(scores, t);
    SweepRow row;
    row.threshold = t;
    for (const auto& e : report.speakers) {
      const bool truth = is_atypical.at(e.speaker_id);
      const bool flagged = e.decision == Decision::Atypical;
      if (truth && flagged) ++row.atypical_flagged;
      else if (truth) ++row.atypical_missed;
      else if (flagged) ++row.typical_flagged;
      else ++row.typical_passed;
    }
    row.accuracy = static_cast<double>(row.atypical_flagged + row.typical_passed) / static_cast<double>(scores.size());
    rows.push_back(row);
  }
  return rows;
}

}  // namespace pragsim

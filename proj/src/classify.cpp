#include "pragsim/classify.hpp"

#include <algorithm>
#include <numeric>

#include "pragsim/error.hpp"
#include "pragsim/parallel.hpp"

namespace pragsim {

void KnnConfig::validate(const EmbeddingDataset& dataset) const {
  if (k == 0) fail(ErrorCode::InvalidArgument, "k must be >= 1");
  for (int l : resolved_layers(dataset)) mask.check_bounds(dataset.layer(l).dim());
}

std::vector<int> KnnConfig::resolved_layers(const EmbeddingDataset& dataset) const {
  if (!layers.empty()) {
    for (int l : layers) dataset.layer(l);
    return layers;
  }
  std::vector<int> all(static_cast<std::size_t>(dataset.layer_count()));
  std::iota(all.begin(), all.end(), 1);
  return all;
}

namespace {

template <typename Score>
std::string pick_label(const std::map<std::string, std::size_t>& counts, const Score& tie_score) {
  // highest count, then highest tie score, then lexicographically smallest
  const std::string* best = nullptr;
  for (const auto& [label, n] : counts) {
    if (!best) {
      best = &label;
      continue;
    }
    const auto bn = counts.at(*best);
    if (n > bn || (n == bn && tie_score(label) > tie_score(*best))) best = &label;
  }
  return *best;
}

std::vector<VectorTable> layer_tables(const EmbeddingDataset& dataset, const KnnConfig& cfg) {
  cfg.validate(dataset);
  std::vector<VectorTable> tables;
  for (int l : cfg.resolved_layers(dataset)) {
    SimilarityConfig sc;
    sc.layer_index = l;
    sc.mask = cfg.mask;
    tables.emplace_back(dataset, sc);
  }
  return tables;
}

std::vector<std::size_t> reference_positions(const EmbeddingDataset& dataset, const std::vector<std::string>& ref_ids,
                                             std::size_t k) {
  if (ref_ids.size() < k) {
    fail(ErrorCode::PoolTooSmall, "reference has " + std::to_string(ref_ids.size()) + " utterances, k = " + std::to_string(k));
  }
  std::vector<std::size_t> pos;
  pos.reserve(ref_ids.size());
  for (const auto& id : ref_ids) {
    const auto p = dataset.position(id);
    if (!dataset.utterances()[p].condition_label) fail(ErrorCode::MissingLabel, "reference utterance " + id + " is unlabelled");
    pos.push_back(p);
  }
  return pos;
}

UtteranceDecision decide_utterance(const std::vector<VectorTable>& tables, const std::vector<std::size_t>& reference,
                                   std::size_t query, std::size_t k) {
  UtteranceDecision d;
  for (const auto& table : tables) {
    const auto vote = knn_vote(table, reference, query, k);
    ++d.layer_votes[vote.label];
    d.margin[vote.label] += vote.support;
  }
  d.label = pick_label(d.layer_votes, [&](const std::string& l) { return d.margin.at(l); });
  return d;
}

SpeakerDecision decide_speaker(const EmbeddingDataset& dataset, const std::vector<VectorTable>& tables,
                               const std::vector<std::size_t>& reference, const std::string& speaker_id,
                               std::size_t k) {
  SpeakerDecision d;
  d.speaker_id = speaker_id;
  for (const auto& id : dataset.speaker_utterances(speaker_id)) {
    const auto u = decide_utterance(tables, reference, dataset.position(id), k);
    ++d.utterance_votes[u.label];
    for (const auto& [label, n] : u.layer_votes) d.layer_votes[label] += n;
  }
  d.label = pick_label(d.utterance_votes, [&](const std::string& l) {
    auto it = d.layer_votes.find(l);
    return it == d.layer_votes.end() ? std::size_t{0} : it->second;
  });
  return d;
}

}  // namespace

LayerVote knn_vote(const VectorTable& table, const std::vector<std::size_t>& reference, std::size_t query,
                   std::size_t k) {
  const auto& utts = table.dataset().utterances();
  if (reference.size() < k) fail(ErrorCode::PoolTooSmall, "reference smaller than k");
  std::vector<std::pair<double, std::size_t>> scored;
  scored.reserve(reference.size());
  for (auto p : reference) {
    if (p == query) fail(ErrorCode::InvalidArgument, "query " + utts[query].utterance_id + " is in its own reference");
    scored.emplace_back(table.score(query, p), p);
  }
  auto nearer = [&](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return utts[a.second].utterance_id < utts[b.second].utterance_id;
  };
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(k), scored.end(), nearer);

  LayerVote vote;
  std::map<std::string, double> summed;
  for (std::size_t i = 0; i < k; ++i) {
    const auto& label = *utts[scored[i].second].condition_label;
    ++vote.counts[label];
    summed[label] += scored[i].first;
  }
  vote.label = pick_label(vote.counts, [&](const std::string& l) { return summed.at(l); });
  vote.support = summed.at(vote.label);
  return vote;
}

std::string classify_utterance_layer(const EmbeddingDataset& dataset, const std::vector<std::string>& ref_ids,
                                     const std::string& utt_id, int layer, std::size_t k) {
  if (k == 0) fail(ErrorCode::InvalidArgument, "k must be >= 1");
  SimilarityConfig sc;
  sc.layer_index = layer;
  const VectorTable table(dataset, sc);
  return knn_vote(table, reference_positions(dataset, ref_ids, k), dataset.position(utt_id), k).label;
}

std::string classify_utterance(const EmbeddingDataset& dataset, const std::vector<std::string>& ref_ids,
                               const std::string& utt_id, const KnnConfig& cfg) {
  const auto tables = layer_tables(dataset, cfg);
  return decide_utterance(tables, reference_positions(dataset, ref_ids, cfg.k), dataset.position(utt_id), cfg.k).label;
}

SpeakerDecision classify_speaker(const EmbeddingDataset& dataset, const std::vector<std::string>& ref_ids,
                                 const std::string& speaker_id, const KnnConfig& cfg) {
  const auto tables = layer_tables(dataset, cfg);
  const auto reference = reference_positions(dataset, ref_ids, cfg.k);
  for (auto p : reference) {
    if (dataset.utterances()[p].speaker_id == speaker_id) {
      fail(ErrorCode::InvalidArgument, "reference contains utterances of speaker " + speaker_id);
    }
  }
  return decide_speaker(dataset, tables, reference, speaker_id, cfg.k);
}

LosoResult loso_evaluate(const EmbeddingDataset& dataset, const KnnConfig& cfg) {
  const auto& speakers = dataset.speakers();
  if (speakers.size() < 2) fail(ErrorCode::DegenerateInput, "leave-one-speaker-out needs at least 2 speakers");
  std::vector<std::string> speaker_ids;
  for (const auto& [s, _] : speakers) {
    dataset.speaker_label(s);
    speaker_ids.push_back(s);
  }
  const auto tables = layer_tables(dataset, cfg);

  std::vector<SpeakerPrediction> predictions(speaker_ids.size());
  parallel_for(speaker_ids.size(), [&](std::size_t i) {
    const auto& speaker = speaker_ids[i];
    std::vector<std::string> ref_ids;
    for (const auto& u : dataset.utterances()) {
      if (u.speaker_id != speaker) ref_ids.push_back(u.utterance_id);
    }
    const auto reference = reference_positions(dataset, ref_ids, cfg.k);
    const auto d = decide_speaker(dataset, tables, reference, speaker, cfg.k);
    predictions[i] = {speaker, dataset.speaker_label(speaker), d.label};
  });

  LosoResult r;
  for (const auto& p : predictions) r.confusion.add(p.true_label, p.predicted);
  r.per_speaker = std::move(predictions);
  return r;
}

LosoResult length_baseline(const EmbeddingDataset& dataset, const std::string& td_label,
                           const std::string& target_label, double ratio) {
  if (!(ratio > 0.0 && ratio < 1.0)) fail(ErrorCode::InvalidArgument, "ratio must lie in (0, 1)");
  struct Durations {
    std::string label;
    double sum = 0.0;
    std::size_t count = 0;
  };
  std::map<std::string, Durations> per_speaker;
  bool any_td = false;
  for (const auto& [s, ids] : dataset.speakers()) {
    Durations d{dataset.speaker_label(s)};
    for (const auto& id : ids) d.sum += dataset.utterance(id).duration_s;
    d.count = ids.size();
    any_td = any_td || d.label == td_label;
    per_speaker.emplace(s, std::move(d));
  }
  if (!any_td) fail(ErrorCode::DegenerateInput, "no speakers labelled " + td_label);

  LosoResult r;
  r.confusion = ConfusionMatrix({td_label, target_label});
  for (const auto& [s, own] : per_speaker) {
    // TD average over every TD utterance except the speaker's own
    double ref_sum = 0.0;
    std::size_t ref_count = 0;
    for (const auto& [other, d] : per_speaker) {
      if (other == s || d.label != td_label) continue;
      ref_sum += d.sum;
      ref_count += d.count;
    }
    if (ref_count == 0) fail(ErrorCode::DegenerateInput, "only one " + td_label + " speaker; no reference average remains");
    const double td_mean = ref_sum / static_cast<double>(ref_count);
    const double mean = own.sum / static_cast<double>(own.count);
    const std::string predicted = mean < ratio * td_mean ? target_label : td_label;
    r.per_speaker.push_back({s, own.label, predicted});
    r.confusion.add(own.label, predicted);
  }
  return r;
}

}  // namespace pragsim

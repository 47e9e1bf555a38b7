#include "pragsim/featsel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <utility>

#include "pragsim/error.hpp"
#include "pragsim/evalmetrics.hpp"
#include "pragsim/parallel.hpp"

namespace pragsim {

std::vector<RatedPair> average_ratings(const std::vector<RatedPair>& pairs) {
  std::map<std::pair<std::string, std::string>, std::size_t> slot;
  std::vector<RatedPair> out;
  std::vector<std::size_t> counts;
  for (const auto& p : pairs) {
    if (!std::isfinite(p.rating)) fail(ErrorCode::InvalidArgument, "non-finite rating for " + p.id_a + "/" + p.id_b);
    auto key = p.id_a < p.id_b ? std::pair{p.id_a, p.id_b} : std::pair{p.id_b, p.id_a};
    auto [it, inserted] = slot.emplace(key, out.size());
    if (inserted) {
      out.push_back({p.id_a, p.id_b, p.rating, std::nullopt});
      counts.push_back(1);
    } else {
      out[it->second].rating += p.rating;
      ++counts[it->second];
    }
  }
  for (std::size_t i = 0; i < out.size(); ++i) out[i].rating /= static_cast<double>(counts[i]);
  return out;
}

namespace {

struct PreparedPairs {
  std::vector<std::pair<std::size_t, std::size_t>> rows;  // dataset positions
  std::vector<double> ratings;
};

PreparedPairs prepare(const EmbeddingDataset& dataset, const std::vector<RatedPair>& pairs) {
  const auto averaged = average_ratings(pairs);
  if (averaged.size() < 3) {
    fail(ErrorCode::DegenerateInput, "need at least 3 distinct rated pairs, got " + std::to_string(averaged.size()));
  }
  PreparedPairs prepared;
  for (const auto& p : averaged) {
    prepared.rows.emplace_back(dataset.position(p.id_a), dataset.position(p.id_b));
    prepared.ratings.push_back(p.rating);
  }
  bool constant = true;
  for (double r : prepared.ratings) constant = constant && r == prepared.ratings.front();
  if (constant) fail(ErrorCode::DegenerateInput, "ratings have zero variance");
  return prepared;
}

double score_mask(const EmbeddingDataset& dataset, int layer_index, const FeatureMask& mask,
                  const PreparedPairs& prepared) {
  SimilarityConfig cfg;
  cfg.layer_index = layer_index;
  cfg.mask = mask;
  cfg.validate(dataset);
  const auto& layer = dataset.layer(layer_index);
  const auto& utts = dataset.utterances();

  std::vector<double> a(mask.width(layer.dim()));
  std::vector<double> b(a.size());
  auto load = [&](std::size_t position, std::vector<double>& out) {
    const auto row = layer.row(utts[position].row_index);
    if (mask.is_all()) {
      for (std::size_t i = 0; i < out.size(); ++i) out[i] = row[i];
    } else {
      for (std::size_t i = 0; i < out.size(); ++i) out[i] = row[mask.indices()[i]];
    }
  };

  std::vector<double> sims(prepared.rows.size());
  for (std::size_t k = 0; k < prepared.rows.size(); ++k) {
    const auto [pa, pb] = prepared.rows[k];
    if (pa == pb) {
      load(pa, a);
      if (squared_norm(a) == 0.0) fail(ErrorCode::ZeroNorm, "zero masked vector for " + utts[pa].utterance_id);
      sims[k] = 1.0;
      continue;
    }
    load(pa, a);
    load(pb, b);
    sims[k] = cosine(a, b);
  }
  return pearson(sims, prepared.ratings);
}

}  // namespace

double evaluate_mask(const EmbeddingDataset& dataset, int layer_index, const FeatureMask& mask,
                     const std::vector<RatedPair>& pairs) {
  return score_mask(dataset, layer_index, mask, prepare(dataset, pairs));
}

GreedyForwardSelector::GreedyForwardSelector(std::size_t max_features, double min_gain)
    : max_features_(max_features), min_gain_(min_gain) {
  if (max_features_ == 0) fail(ErrorCode::InvalidArgument, "max_features must be positive");
  if (!(min_gain_ >= 0.0)) fail(ErrorCode::InvalidArgument, "min_gain must be >= 0");
}

SelectionResult GreedyForwardSelector::select(const EmbeddingDataset& dataset, int layer_index,
                                              const std::vector<RatedPair>& pairs) const {
  const auto prepared = prepare(dataset, pairs);
  const std::size_t dim = dataset.layer(layer_index).dim();
  constexpr double kUndefined = -std::numeric_limits<double>::infinity();

  std::vector<std::size_t> chosen;
  std::vector<bool> in_mask(dim, false);
  SelectionResult result;
  double current = kUndefined;

  while (chosen.size() < std::min(max_features_, dim)) {
    std::vector<double> scores(dim, kUndefined);
    parallel_for(dim, [&](std::size_t f) {
      if (in_mask[f]) return;
      std::vector<std::size_t> trial = chosen;
      trial.insert(std::upper_bound(trial.begin(), trial.end(), f), f);
      try {
        scores[f] = score_mask(dataset, layer_index, FeatureMask::of(std::move(trial)), prepared);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::ZeroNorm && e.code() != ErrorCode::DegenerateInput) throw;
      }
    });

    // max score, smallest index on ties
    std::size_t best = dim;
    for (std::size_t f = 0; f < dim; ++f) {
      if (scores[f] == kUndefined) continue;
      if (best == dim || scores[f] > scores[best]) best = f;
    }
    if (best == dim) {
      if (chosen.empty()) fail(ErrorCode::DegenerateInput, "no single feature yields a defined correlation");
      break;
    }
    if (!chosen.empty() && scores[best] - current < min_gain_) break;

    chosen.insert(std::upper_bound(chosen.begin(), chosen.end(), best), best);
    in_mask[best] = true;
    current = scores[best];
    result.path.push_back({best, current});
  }
  result.mask = FeatureMask::of(chosen);
  return result;
}

FeatureMask greedy_select(const EmbeddingDataset& dataset, int layer_index, const std::vector<RatedPair>& pairs,
                          std::size_t max_features, double min_gain) {
  return GreedyForwardSelector(max_features, min_gain).select(dataset, layer_index, pairs).mask;
}

}  // namespace pragsim

#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "pragsim/dataset.hpp"
#include "pragsim/simcore.hpp"

namespace pragsim {

struct RatedPair {
  std::string id_a;
  std::string id_b;
  double rating = 0.0;
  std::optional<std::string> judge_id;
};

/// Collapses repeated ratings of the same unordered pair to their mean.
/// Output order follows first appearance.
std::vector<RatedPair> average_ratings(const std::vector<RatedPair>& pairs);

/// Pearson correlation between masked model similarity and the
/// judge-averaged ratings. Needs >= 3 distinct pairs and nonconstant
/// ratings (DegenerateInput otherwise).
double evaluate_mask(const EmbeddingDataset& dataset, int layer_index, const FeatureMask& mask,
                     const std::vector<RatedPair>& pairs);

struct SelectionStep {
  std::size_t feature = 0;
  double objective = 0.0;
};

struct SelectionResult {
  FeatureMask mask;
  std::vector<SelectionStep> path;  // accepted features, in acceptance order
};

/// Strategy interface so other search procedures can sit behind the same call.
class FeatureSelector {
 public:
  virtual ~FeatureSelector() = default;
  virtual SelectionResult select(const EmbeddingDataset& dataset, int layer_index,
                                 const std::vector<RatedPair>& pairs) const = 0;
};

/// Forward selection: repeatedly add the feature with the highest
/// evaluate_mask score (ties -> smallest index). Stops at max_features or
/// when the best gain drops below min_gain; the first feature is always
/// admitted. Candidates whose score is undefined (a zero-norm masked vector
/// or constant similarities) are skipped.
class GreedyForwardSelector final : public FeatureSelector {
 public:
  GreedyForwardSelector(std::size_t max_features, double min_gain);
  SelectionResult select(const EmbeddingDataset& dataset, int layer_index,
                         const std::vector<RatedPair>& pairs) const override;

 private:
  std::size_t max_features_;
  double min_gain_;
};

FeatureMask greedy_select(const EmbeddingDataset& dataset, int layer_index, const std::vector<RatedPair>& pairs,
                          std::size_t max_features, double min_gain);

}  // namespace pragsim

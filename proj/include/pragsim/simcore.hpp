#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pragsim/dataset.hpp"

namespace pragsim {

/// Either "all features" or a nonempty, strictly increasing index set.
class FeatureMask {
 public:
  FeatureMask() = default;  // all
  static FeatureMask all() { return {}; }
  /// Throws InvalidMask unless `indices` is nonempty and strictly increasing.
  static FeatureMask of(std::vector<std::size_t> indices);

  bool is_all() const noexcept { return !indices_; }
  const std::vector<std::size_t>& indices() const;
  /// Number of retained features for a layer of the given width.
  std::size_t width(std::size_t dim) const noexcept { return indices_ ? indices_->size() : dim; }
  /// Throws InvalidMask if any index is >= dim.
  void check_bounds(std::size_t dim) const;

  bool operator==(const FeatureMask&) const = default;

 private:
  std::optional<std::vector<std::size_t>> indices_;
};

struct SimilarityConfig {
  int layer_index = 24;
  FeatureMask mask;
  bool mean_center = false;
  /// Per-feature means over the reference data, in masked coordinates.
  std::optional<std::vector<double>> center;

  /// Throws InvalidConfig / InvalidLayerIndex / InvalidMask.
  void validate(const EmbeddingDataset& dataset) const;
};

/// Builds a mean-centering config, freezing the centre over `dataset`.
SimilarityConfig centered_config(const EmbeddingDataset& dataset, int layer_index, FeatureMask mask);

double dot(std::span<const double> u, std::span<const double> v);
double squared_norm(std::span<const double> u);

/// Cosine with 64-bit accumulation in ascending index order, clamped to
/// [-1, 1]. Throws LengthMismatch, or ZeroNorm for a zero vector.
double cosine(std::span<const double> u, std::span<const double> v);

/// Per-feature arithmetic mean over all rows, restricted to the mask.
std::vector<double> center_stats(const EmbeddingDataset& dataset, int layer_index, const FeatureMask& mask);

/// Masked, then (optionally) centred copy of a stored row. Masking comes
/// first; the centre is expressed in masked coordinates.
std::vector<double> processed_vector(const EmbeddingDataset& dataset, const SimilarityConfig& cfg,
                                     const std::string& utterance_id);

/// Cosine between processed vectors. Self-similarity is exactly 1.
double similarity(const EmbeddingDataset& dataset, const SimilarityConfig& cfg, const std::string& id_a,
                  const std::string& id_b);

/// Processed vectors and squared norms for every dataset row under one
/// config. Scores computed through this table are bit-identical to
/// similarity().
class VectorTable {
 public:
  VectorTable(const EmbeddingDataset& dataset, const SimilarityConfig& cfg);

  std::size_t width() const noexcept { return width_; }
  std::span<const double> vector(std::size_t position) const noexcept {
    return std::span<const double>(values_).subspan(position * width_, width_);
  }
  double squared_norm(std::size_t position) const noexcept { return norms_[position]; }
  /// Similarity between the utterances at two dataset positions.
  double score(std::size_t a, std::size_t b) const;

  const EmbeddingDataset& dataset() const noexcept { return *dataset_; }

 private:
  const EmbeddingDataset* dataset_;
  std::size_t width_ = 0;
  std::vector<double> values_;
  std::vector<double> norms_;
};

/// cosine of two vectors whose dot product and squared norms are known.
double cosine_from_parts(double dot_uv, double norm_u, double norm_v);

/// Row-major square matrix.
struct SquareMatrix {
  std::size_t size = 0;
  std::vector<double> values;
  double at(std::size_t i, std::size_t j) const { return values[i * size + j]; }
};

SquareMatrix pairwise_matrix(const EmbeddingDataset& dataset, const SimilarityConfig& cfg,
                             const std::vector<std::string>& ids);

/// Arithmetic mean of processed vectors of the given utterances.
std::vector<double> centroid(const VectorTable& table, const std::vector<std::string>& ids);

}  // namespace pragsim

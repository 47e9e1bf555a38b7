#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace pragsim {

struct UtteranceRecord {
  std::string utterance_id;
  std::string speaker_id;
  std::optional<std::string> condition_label;
  double duration_s = 0.0;
  std::size_t row_index = 0;
  std::optional<double> age_years;

  bool operator==(const UtteranceRecord&) const = default;
};

/// One encoder layer: n rows of `dim` float32 features, row-major.
class LayerMatrix {
 public:
  LayerMatrix() = default;
  LayerMatrix(int layer_index, std::size_t rows, std::size_t dim, std::vector<float> values);

  int layer_index() const noexcept { return layer_index_; }
  std::size_t rows() const noexcept { return rows_; }
  std::size_t dim() const noexcept { return dim_; }
  std::span<const float> values() const noexcept { return values_; }
  std::span<const float> row(std::size_t r) const noexcept {
    return std::span<const float>(values_).subspan(r * dim_, dim_);
  }

  bool operator==(const LayerMatrix&) const = default;

 private:
  int layer_index_ = 0;
  std::size_t rows_ = 0;
  std::size_t dim_ = 0;
  std::vector<float> values_;
};

/// Utterance metadata plus per-layer embedding matrices. Immutable once
/// constructed; construction runs every validation rule, so any instance in
/// hand is valid.
class EmbeddingDataset {
 public:
  /// Validates and builds. `layers[i]` must carry layer_index i + 1.
  EmbeddingDataset(std::string name, std::vector<UtteranceRecord> utterances,
                   std::vector<LayerMatrix> layers);

  const std::string& name() const noexcept { return name_; }
  int layer_count() const noexcept { return static_cast<int>(layers_.size()); }
  std::size_t size() const noexcept { return utterances_.size(); }

  /// 1-based layer access.
  const LayerMatrix& layer(int layer_index) const;
  const std::vector<LayerMatrix>& layers() const noexcept { return layers_; }

  const std::vector<UtteranceRecord>& utterances() const noexcept { return utterances_; }
  const UtteranceRecord& utterance(const std::string& id) const;
  bool contains(const std::string& id) const { return by_id_.contains(id); }
  /// Position of `id` in utterances().
  std::size_t position(const std::string& id) const;

  /// Embedding row of utterance `id` on the given layer.
  std::span<const float> embedding(int layer_index, const std::string& id) const;

  /// speaker_id -> utterance ids, in manifest order. Keys sorted.
  const std::map<std::string, std::vector<std::string>>& speakers() const noexcept {
    return speakers_;
  }
  bool has_speaker(const std::string& speaker_id) const { return speakers_.contains(speaker_id); }
  const std::vector<std::string>& speaker_utterances(const std::string& speaker_id) const;

  /// The single condition label shared by all of a speaker's utterances.
  /// Throws MissingLabel / InconsistentSpeakerLabel otherwise.
  const std::string& speaker_label(const std::string& speaker_id) const;

  bool operator==(const EmbeddingDataset& other) const {
    return name_ == other.name_ && utterances_ == other.utterances_ && layers_ == other.layers_;
  }

 private:
  std::string name_;
  std::vector<UtteranceRecord> utterances_;
  std::vector<LayerMatrix> layers_;
  std::unordered_map<std::string, std::size_t> by_id_;
  std::map<std::string, std::vector<std::string>> speakers_;
};

/// Reads `dir/manifest.json` and `dir/layers/layer_NN.f32`.
EmbeddingDataset load_dataset(const std::filesystem::path& dir);

/// Writes the manifest and one raw little-endian float32 file per layer.
void save_dataset(const EmbeddingDataset& dataset, const std::filesystem::path& dir);

/// Stable subset; row indices are recompacted to 0..m-1 in manifest order.
/// Throws EmptySelection when nothing matches.
EmbeddingDataset filter_dataset(const EmbeddingDataset& dataset,
                                const std::function<bool(const UtteranceRecord&)>& keep);

/// utterance_id,speaker_id,condition_label,duration_s,age_years
void export_utterances_csv(const EmbeddingDataset& dataset, const std::filesystem::path& file);

std::string layer_file_name(int layer_index);

}  // namespace pragsim

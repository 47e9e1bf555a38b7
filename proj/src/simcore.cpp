#include "pragsim/simcore.hpp"

#include <algorithm>
#include <cmath>

#include "pragsim/error.hpp"
#include "pragsim/parallel.hpp"

namespace pragsim {

FeatureMask FeatureMask::of(std::vector<std::size_t> indices) {
  if (indices.empty()) fail(ErrorCode::InvalidMask, "feature mask must be nonempty");
  for (std::size_t i = 1; i < indices.size(); ++i) {
    if (indices[i] <= indices[i - 1]) {
      fail(ErrorCode::InvalidMask, "feature mask indices must be strictly increasing (position " +
                                       std::to_string(i) + ")");
    }
  }
  FeatureMask m;
  m.indices_ = std::move(indices);
  return m;
}

const std::vector<std::size_t>& FeatureMask::indices() const {
  if (!indices_) fail(ErrorCode::InvalidMask, "mask 'all' has no explicit index list");
  return *indices_;
}

void FeatureMask::check_bounds(std::size_t dim) const {
  if (indices_ && indices_->back() >= dim) {
    fail(ErrorCode::InvalidMask, "mask index " + std::to_string(indices_->back()) +
                                     " out of range for dim " + std::to_string(dim));
  }
}

void SimilarityConfig::validate(const EmbeddingDataset& dataset) const {
  const auto& layer = dataset.layer(layer_index);
  mask.check_bounds(layer.dim());
  if (mean_center) {
    if (!center) fail(ErrorCode::InvalidConfig, "mean_center requires a centre vector");
    if (center->size() != mask.width(layer.dim())) {
      fail(ErrorCode::InvalidConfig, "centre vector has length " + std::to_string(center->size()) +
                                         ", masked width is " + std::to_string(mask.width(layer.dim())));
    }
  }
}

SimilarityConfig centered_config(const EmbeddingDataset& dataset, int layer_index, FeatureMask mask) {
  SimilarityConfig cfg;
  cfg.layer_index = layer_index;
  cfg.mean_center = true;
  cfg.center = center_stats(dataset, layer_index, mask);
  cfg.mask = std::move(mask);
  return cfg;
}

double dot(std::span<const double> u, std::span<const double> v) {
  double s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) s += u[i] * v[i];
  return s;
}

double squared_norm(std::span<const double> u) { return dot(u, u); }

double cosine_from_parts(double dot_uv, double norm_u, double norm_v) {
  if (norm_u == 0.0 || norm_v == 0.0) fail(ErrorCode::ZeroNorm, "cosine of a zero-norm vector");
  const double c = dot_uv / std::sqrt(norm_u * norm_v);
  return std::clamp(c, -1.0, 1.0);
}

double cosine(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) {
    fail(ErrorCode::LengthMismatch, "cosine of vectors with lengths " + std::to_string(u.size()) +
                                        " and " + std::to_string(v.size()));
  }
  if (u.empty()) fail(ErrorCode::LengthMismatch, "cosine of empty vectors");
  return cosine_from_parts(dot(u, v), squared_norm(u), squared_norm(v));
}

namespace {

void gather(std::span<const float> row, const SimilarityConfig& cfg, std::span<double> out) {
  if (cfg.mask.is_all()) {
    for (std::size_t i = 0; i < row.size(); ++i) out[i] = row[i];
  } else {
    const auto& idx = cfg.mask.indices();
    for (std::size_t i = 0; i < idx.size(); ++i) out[i] = row[idx[i]];
  }
  if (cfg.mean_center) {
    const auto& c = *cfg.center;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] -= c[i];
  }
}

}  // namespace

std::vector<double> center_stats(const EmbeddingDataset& dataset, int layer_index, const FeatureMask& mask) {
  const auto& layer = dataset.layer(layer_index);
  mask.check_bounds(layer.dim());
  const std::size_t width = mask.width(layer.dim());
  std::vector<double> sums(width, 0.0);
  for (std::size_t r = 0; r < layer.rows(); ++r) {
    const auto row = layer.row(r);
    for (std::size_t i = 0; i < width; ++i) sums[i] += row[mask.is_all() ? i : mask.indices()[i]];
  }
  for (auto& s : sums) s /= static_cast<double>(layer.rows());
  return sums;
}

std::vector<double> processed_vector(const EmbeddingDataset& dataset, const SimilarityConfig& cfg,
                                     const std::string& utterance_id) {
  cfg.validate(dataset);
  const auto& layer = dataset.layer(cfg.layer_index);
  std::vector<double> out(cfg.mask.width(layer.dim()));
  gather(layer.row(dataset.utterance(utterance_id).row_index), cfg, out);
  return out;
}

double similarity(const EmbeddingDataset& dataset, const SimilarityConfig& cfg, const std::string& id_a,
                  const std::string& id_b) {
  const auto u = processed_vector(dataset, cfg, id_a);
  const auto v = processed_vector(dataset, cfg, id_b);
  if (id_a == id_b) {
    if (squared_norm(u) == 0.0) fail(ErrorCode::ZeroNorm, "utterance " + id_a + " has a zero processed vector");
    return 1.0;
  }
  try {
    return cosine(u, v);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::ZeroNorm) throw;
    fail(ErrorCode::ZeroNorm, "zero processed vector comparing " + id_a + " and " + id_b);
  }
}

VectorTable::VectorTable(const EmbeddingDataset& dataset, const SimilarityConfig& cfg) : dataset_(&dataset) {
  cfg.validate(dataset);
  const auto& layer = dataset.layer(cfg.layer_index);
  width_ = cfg.mask.width(layer.dim());
  const std::size_t n = dataset.size();
  values_.resize(n * width_);
  norms_.resize(n);
  for (std::size_t p = 0; p < n; ++p) {
    std::span<double> out(values_.data() + p * width_, width_);
    gather(layer.row(dataset.utterances()[p].row_index), cfg, out);
    norms_[p] = pragsim::squared_norm(out);
  }
}

double VectorTable::score(std::size_t a, std::size_t b) const {
  if (a == b) {
    if (norms_[a] == 0.0) {
      fail(ErrorCode::ZeroNorm, "utterance " + dataset_->utterances()[a].utterance_id + " has a zero processed vector");
    }
    return 1.0;
  }
  if (norms_[a] == 0.0 || norms_[b] == 0.0) {
    fail(ErrorCode::ZeroNorm, "zero processed vector comparing " + dataset_->utterances()[a].utterance_id +
                                  " and " + dataset_->utterances()[b].utterance_id);
  }
  return cosine_from_parts(dot(vector(a), vector(b)), norms_[a], norms_[b]);
}

SquareMatrix pairwise_matrix(const EmbeddingDataset& dataset, const SimilarityConfig& cfg,
                             const std::vector<std::string>& ids) {
  const VectorTable table(dataset, cfg);
  std::vector<std::size_t> pos(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) pos[i] = dataset.position(ids[i]);

  SquareMatrix m;
  m.size = ids.size();
  m.values.assign(m.size * m.size, 0.0);
  parallel_for(m.size, [&](std::size_t i) {
    for (std::size_t j = 0; j < m.size; ++j) m.values[i * m.size + j] = table.score(pos[i], pos[j]);
  });
  return m;
}

std::vector<double> centroid(const VectorTable& table, const std::vector<std::string>& ids) {
  if (ids.empty()) fail(ErrorCode::DegenerateInput, "centroid of an empty set");
  std::vector<double> sum(table.width(), 0.0);
  for (const auto& id : ids) {
    const auto v = table.vector(table.dataset().position(id));
    for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += v[i];
  }
  for (auto& s : sum) s /= static_cast<double>(ids.size());
  return sum;
}

}  // namespace pragsim

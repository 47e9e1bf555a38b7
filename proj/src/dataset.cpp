#include "pragsim/dataset.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <set>

#include "json.hpp"
#include "pragsim/error.hpp"

namespace pragsim {

namespace fs = std::filesystem;
using nlohmann::json;

LayerMatrix::LayerMatrix(int layer_index, std::size_t rows, std::size_t dim,
                         std::vector<float> values)
    : layer_index_(layer_index), rows_(rows), dim_(dim), values_(std::move(values)) {
  if (dim_ == 0) {
    fail(ErrorCode::LayerSizeMismatch,
         "layer " + std::to_string(layer_index) + ": dim must be positive");
  }
  if (values_.size() != rows_ * dim_) {
    fail(ErrorCode::LayerSizeMismatch,
         "layer " + std::to_string(layer_index) + ": expected " + std::to_string(rows_ * dim_) +
             " values, got " + std::to_string(values_.size()));
  }
}

EmbeddingDataset::EmbeddingDataset(std::string name, std::vector<UtteranceRecord> utterances,
                                   std::vector<LayerMatrix> layers)
    : name_(std::move(name)), utterances_(std::move(utterances)), layers_(std::move(layers)) {
  const std::size_t n = utterances_.size();
  if (n == 0) fail(ErrorCode::EmptyDataset, "dataset has no utterances");
  if (layers_.empty()) fail(ErrorCode::InvalidManifest, "dataset declares no layers");

  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const auto& layer = layers_[i];
    if (layer.layer_index() != static_cast<int>(i) + 1) {
      fail(ErrorCode::InvalidLayerIndex, "layer at position " + std::to_string(i) +
                                             " has index " + std::to_string(layer.layer_index()) +
                                             ", expected " + std::to_string(i + 1));
    }
    if (layer.rows() != n) {
      fail(ErrorCode::LayerSizeMismatch, "layer " + std::to_string(i + 1) + " has " +
                                             std::to_string(layer.rows()) + " rows, dataset has " +
                                             std::to_string(n) + " utterances");
    }
    const auto values = layer.values();
    for (std::size_t j = 0; j < values.size(); ++j) {
      if (!std::isfinite(values[j])) {
        fail(ErrorCode::NonFiniteValue, "layer " + std::to_string(i + 1) + ": non-finite value at row " +
                                            std::to_string(j / layer.dim()) + ", column " +
                                            std::to_string(j % layer.dim()));
      }
    }
  }

  std::vector<bool> seen_row(n, false);
  by_id_.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& u = utterances_[i];
    if (u.utterance_id.empty()) fail(ErrorCode::InvalidManifest, "utterance with empty id at position " + std::to_string(i));
    if (u.speaker_id.empty()) fail(ErrorCode::EmptySpeakerId, "utterance " + u.utterance_id + " has an empty speaker_id");
    if (!(u.duration_s > 0.0) || !std::isfinite(u.duration_s)) {
      fail(ErrorCode::InvalidDuration, "utterance " + u.utterance_id + " has non-positive duration");
    }
    if (u.age_years && (!(*u.age_years > 0.0) || !std::isfinite(*u.age_years))) {
      fail(ErrorCode::InvalidManifest, "utterance " + u.utterance_id + " has non-positive age");
    }
    if (!by_id_.emplace(u.utterance_id, i).second) {
      fail(ErrorCode::DuplicateUtteranceId, "duplicate utterance_id " + u.utterance_id);
    }
    if (u.row_index >= n || seen_row[u.row_index]) {
      fail(ErrorCode::RowIndexNotBijection,
           "row_index " + std::to_string(u.row_index) + " of " + u.utterance_id +
               " is out of range or repeated");
    }
    seen_row[u.row_index] = true;
    speakers_[u.speaker_id].push_back(u.utterance_id);
  }
}

const LayerMatrix& EmbeddingDataset::layer(int layer_index) const {
  if (layer_index < 1 || layer_index > layer_count()) {
    fail(ErrorCode::InvalidLayerIndex, "layer " + std::to_string(layer_index) + " outside [1, " +
                                           std::to_string(layer_count()) + "]");
  }
  return layers_[static_cast<std::size_t>(layer_index - 1)];
}

std::size_t EmbeddingDataset::position(const std::string& id) const {
  auto it = by_id_.find(id);
  if (it == by_id_.end()) fail(ErrorCode::UnknownUtterance, "unknown utterance " + id);
  return it->second;
}

const UtteranceRecord& EmbeddingDataset::utterance(const std::string& id) const {
  return utterances_[position(id)];
}

std::span<const float> EmbeddingDataset::embedding(int layer_index, const std::string& id) const {
  return layer(layer_index).row(utterance(id).row_index);
}

const std::vector<std::string>& EmbeddingDataset::speaker_utterances(const std::string& speaker_id) const {
  auto it = speakers_.find(speaker_id);
  if (it == speakers_.end()) fail(ErrorCode::UnknownSpeaker, "unknown speaker " + speaker_id);
  return it->second;
}

const std::string& EmbeddingDataset::speaker_label(const std::string& speaker_id) const {
  const auto& ids = speaker_utterances(speaker_id);
  const std::string* label = nullptr;
  for (const auto& id : ids) {
    const auto& u = utterance(id);
    if (!u.condition_label) fail(ErrorCode::MissingLabel, "utterance " + id + " has no condition_label");
    if (label && *label != *u.condition_label) {
      fail(ErrorCode::InconsistentSpeakerLabel, "speaker " + speaker_id + " has utterances labelled both " +
                                                    *label + " and " + *u.condition_label);
    }
    label = &*u.condition_label;
  }
  return *label;
}

std::string layer_file_name(int layer_index) {
  std::string digits = std::to_string(layer_index);
  if (digits.size() < 2) digits.insert(0, 2 - digits.size(), '0');
  return "layer_" + digits + ".f32";
}

namespace {

constexpr int kFormatVersion = 1;

void to_little_endian(std::vector<char>& bytes) {
  if constexpr (std::endian::native == std::endian::big) {
    for (std::size_t i = 0; i + 3 < bytes.size(); i += 4) {
      std::swap(bytes[i], bytes[i + 3]);
      std::swap(bytes[i + 1], bytes[i + 2]);
    }
  }
}

json record_to_json(const UtteranceRecord& u) {
  json j;
  j["utterance_id"] = u.utterance_id;
  j["speaker_id"] = u.speaker_id;
  j["condition_label"] = u.condition_label ? json(*u.condition_label) : json(nullptr);
  j["duration_s"] = u.duration_s;
  j["row_index"] = u.row_index;
  j["age_years"] = u.age_years ? json(*u.age_years) : json(nullptr);
  return j;
}

UtteranceRecord record_from_json(const json& j, std::size_t position) {
  auto where = [&] { return "manifest utterance #" + std::to_string(position); };
  if (!j.is_object()) fail(ErrorCode::InvalidManifest, where() + " is not an object");
  UtteranceRecord u;
  try {
    u.utterance_id = j.at("utterance_id").get<std::string>();
    u.speaker_id = j.at("speaker_id").get<std::string>();
    if (auto it = j.find("condition_label"); it != j.end() && !it->is_null()) {
      u.condition_label = it->get<std::string>();
    }
    u.duration_s = j.at("duration_s").get<double>();
    const auto& row = j.at("row_index");
    if (!row.is_number_unsigned()) fail(ErrorCode::RowIndexNotBijection, where() + ": row_index must be a nonnegative integer");
    u.row_index = row.get<std::size_t>();
    if (auto it = j.find("age_years"); it != j.end() && !it->is_null()) {
      u.age_years = it->get<double>();
    }
  } catch (const json::exception& e) {
    fail(ErrorCode::InvalidManifest, where() + ": " + e.what());
  }
  return u;
}

}  // namespace

EmbeddingDataset load_dataset(const fs::path& dir) {
  const fs::path manifest_path = dir / "manifest.json";
  std::ifstream in(manifest_path);
  if (!in) fail(ErrorCode::MissingFile, "cannot open " + manifest_path.string());

  json manifest;
  try {
    manifest = json::parse(in);
  } catch (const json::exception& e) {
    fail(ErrorCode::InvalidManifest, manifest_path.string() + ": " + e.what());
  }

  std::string name;
  int layer_count = 0;
  std::vector<std::size_t> dims;
  std::vector<UtteranceRecord> records;
  try {
    name = manifest.at("name").get<std::string>();
    layer_count = manifest.at("layer_count").get<int>();
    dims = manifest.at("layer_dims").get<std::vector<std::size_t>>();
    const auto& utts = manifest.at("utterances");
    if (!utts.is_array()) fail(ErrorCode::InvalidManifest, "manifest 'utterances' must be an array");
    records.reserve(utts.size());
    for (std::size_t i = 0; i < utts.size(); ++i) records.push_back(record_from_json(utts[i], i));
  } catch (const json::exception& e) {
    fail(ErrorCode::InvalidManifest, manifest_path.string() + ": " + e.what());
  }
  if (layer_count < 1) fail(ErrorCode::InvalidManifest, "layer_count must be positive");
  if (dims.size() != static_cast<std::size_t>(layer_count)) {
    fail(ErrorCode::InvalidManifest, "layer_dims has " + std::to_string(dims.size()) +
                                         " entries, layer_count is " + std::to_string(layer_count));
  }
  if (records.empty()) fail(ErrorCode::EmptyDataset, "manifest lists no utterances");

  const std::size_t n = records.size();
  std::vector<LayerMatrix> layers;
  layers.reserve(dims.size());
  for (int l = 1; l <= layer_count; ++l) {
    const std::size_t dim = dims[static_cast<std::size_t>(l - 1)];
    if (dim == 0) fail(ErrorCode::InvalidManifest, "layer " + std::to_string(l) + " declares dim 0");
    const fs::path file = dir / "layers" / layer_file_name(l);
    std::error_code ec;
    const auto bytes = fs::file_size(file, ec);
    if (ec) fail(ErrorCode::MissingFile, "cannot stat " + file.string());
    const std::uintmax_t expected = static_cast<std::uintmax_t>(n) * dim * 4u;
    if (bytes != expected) {
      fail(ErrorCode::LayerSizeMismatch, file.string() + " is " + std::to_string(bytes) +
                                             " bytes, expected n*dim*4 = " + std::to_string(expected));
    }
    std::vector<char> raw(static_cast<std::size_t>(bytes));
    std::ifstream lf(file, std::ios::binary);
    if (!lf || !lf.read(raw.data(), static_cast<std::streamsize>(raw.size()))) {
      fail(ErrorCode::MissingFile, "cannot read " + file.string());
    }
    to_little_endian(raw);
    std::vector<float> values(n * dim);
    std::memcpy(values.data(), raw.data(), raw.size());
    layers.emplace_back(l, n, dim, std::move(values));
  }
  return EmbeddingDataset(std::move(name), std::move(records), std::move(layers));
}

void save_dataset(const EmbeddingDataset& dataset, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir / "layers", ec);
  if (ec) fail(ErrorCode::WriteFailed, "cannot create " + (dir / "layers").string() + ": " + ec.message());

  json manifest;
  manifest["format_version"] = kFormatVersion;
  manifest["name"] = dataset.name();
  manifest["layer_count"] = dataset.layer_count();
  json dims = json::array();
  for (const auto& layer : dataset.layers()) dims.push_back(layer.dim());
  manifest["layer_dims"] = dims;
  json utts = json::array();
  for (const auto& u : dataset.utterances()) utts.push_back(record_to_json(u));
  manifest["utterances"] = std::move(utts);

  {
    const fs::path path = dir / "manifest.json";
    std::ofstream out(path);
    if (!out) fail(ErrorCode::WriteFailed, "cannot write " + path.string());
    out << manifest.dump(2) << '\n';
    if (!out) fail(ErrorCode::WriteFailed, "write failed for " + path.string());
  }

  for (const auto& layer : dataset.layers()) {
    const fs::path path = dir / "layers" / layer_file_name(layer.layer_index());
    const auto values = layer.values();
    std::vector<char> raw(values.size() * 4);
    std::memcpy(raw.data(), values.data(), raw.size());
    to_little_endian(raw);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::WriteFailed, "cannot write " + path.string());
    out.write(raw.data(), static_cast<std::streamsize>(raw.size()));
    if (!out) fail(ErrorCode::WriteFailed, "write failed for " + path.string());
  }
}

EmbeddingDataset filter_dataset(const EmbeddingDataset& dataset,
                                const std::function<bool(const UtteranceRecord&)>& keep) {
  std::vector<UtteranceRecord> kept;
  for (const auto& u : dataset.utterances()) {
    if (keep(u)) kept.push_back(u);
  }
  if (kept.empty()) fail(ErrorCode::EmptySelection, "filter matched no utterances");

  std::vector<LayerMatrix> layers;
  layers.reserve(dataset.layers().size());
  for (const auto& layer : dataset.layers()) {
    std::vector<float> values;
    values.reserve(kept.size() * layer.dim());
    for (const auto& u : kept) {
      const auto row = layer.row(u.row_index);
      values.insert(values.end(), row.begin(), row.end());
    }
    layers.emplace_back(layer.layer_index(), kept.size(), layer.dim(), std::move(values));
  }
  for (std::size_t i = 0; i < kept.size(); ++i) kept[i].row_index = i;
  return EmbeddingDataset(dataset.name(), std::move(kept), std::move(layers));
}

void export_utterances_csv(const EmbeddingDataset& dataset, const fs::path& file) {
  std::ofstream out(file);
  if (!out) fail(ErrorCode::WriteFailed, "cannot write " + file.string());
  out << "utterance_id,speaker_id,condition_label,duration_s,age_years\n";
  out.precision(17);
  for (const auto& u : dataset.utterances()) {
    out << u.utterance_id << ',' << u.speaker_id << ',' << u.condition_label.value_or("") << ','
        << u.duration_s << ',';
    if (u.age_years) out << *u.age_years;
    out << '\n';
  }
  if (!out) fail(ErrorCode::WriteFailed, "write failed for " + file.string());
}

}  // namespace pragsim

#include "pragsim/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <random>

#include "pragsim/error.hpp"

namespace pragsim {

void SynthSpec::validate() const {
  if (classes.empty()) fail(ErrorCode::InvalidArgument, "synthetic spec needs at least one class");
  for (const auto& c : classes) {
    if (c.label.empty()) fail(ErrorCode::InvalidArgument, "synthetic class label must be nonempty");
    if (c.n_speakers < 1 || c.utterances_per_speaker < 1) {
      fail(ErrorCode::InvalidArgument, "class " + c.label + ": speaker and utterance counts must be >= 1");
    }
    if (!(c.duration_mean_s > 0.0) || c.duration_speaker_sd_s < 0.0 || c.duration_utterance_sd_s < 0.0) {
      fail(ErrorCode::InvalidArgument, "class " + c.label + ": invalid duration parameters");
    }
  }
  for (std::size_t i = 0; i < classes.size(); ++i) {
    for (std::size_t j = i + 1; j < classes.size(); ++j) {
      if (classes[i].label == classes[j].label) fail(ErrorCode::InvalidArgument, "duplicate class label " + classes[i].label);
    }
  }
  if (dim < 1 || layers < 1) fail(ErrorCode::InvalidArgument, "dim and layers must be >= 1");
  if (!(separation >= 0.0)) fail(ErrorCode::InvalidArgument, "separation must be >= 0");
  if (!(speaker_sd >= 0.0 && speaker_sd < 1.0)) fail(ErrorCode::InvalidArgument, "speaker_sd must lie in [0, 1)");
  if (!(base_scale >= 0.0)) fail(ErrorCode::InvalidArgument, "base_scale must be >= 0");
  if (age_min.has_value() != age_max.has_value() || (age_min && (*age_min < 1 || *age_max < *age_min))) {
    fail(ErrorCode::InvalidArgument, "age range must give 1 <= age_min <= age_max");
  }
}

namespace {

std::string padded(const char* prefix, int value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s%03d", prefix, value);
  return buf;
}

// Orthonormal directions via Gram-Schmidt on Gaussian draws; once the
// dimension is exhausted, further directions are plain random unit vectors.
std::vector<std::vector<double>> class_directions(std::size_t count, std::size_t dim, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<std::vector<double>> dirs;
  for (std::size_t c = 0; c < count; ++c) {
    std::vector<double> v(dim);
    for (auto& x : v) x = normal(rng);
    if (c < dim) {
      for (const auto& d : dirs) {
        double proj = 0.0;
        for (std::size_t i = 0; i < dim; ++i) proj += v[i] * d[i];
        for (std::size_t i = 0; i < dim; ++i) v[i] -= proj * d[i];
      }
    }
    double norm = 0.0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    for (auto& x : v) x /= norm;
    dirs.push_back(std::move(v));
  }
  return dirs;
}

}  // namespace

EmbeddingDataset gen_synthetic(const SynthSpec& spec) {
  spec.validate();
  std::seed_seq seq{static_cast<std::uint32_t>(spec.seed), static_cast<std::uint32_t>(spec.seed >> 32)};
  std::mt19937_64 rng(seq);
  std::normal_distribution<double> normal(0.0, 1.0);

  struct SpeakerPlan {
    std::size_t class_index;
    std::size_t first_row;
    int utterances;
  };
  std::vector<SpeakerPlan> plan;
  std::vector<UtteranceRecord> records;
  for (std::size_t c = 0; c < spec.classes.size(); ++c) {
    const auto& cls = spec.classes[c];
    for (int s = 0; s < cls.n_speakers; ++s) {
      const std::string speaker = cls.label + "_" + padded("s", s + 1);
      const double speaker_mean = std::max(0.5, cls.duration_mean_s + cls.duration_speaker_sd_s * normal(rng));
      std::optional<double> age;
      if (spec.age_min) {
        std::uniform_int_distribution<int> ages(*spec.age_min, *spec.age_max);
        age = ages(rng);
      }
      plan.push_back({c, records.size(), cls.utterances_per_speaker});
      for (int u = 0; u < cls.utterances_per_speaker; ++u) {
        UtteranceRecord rec;
        rec.utterance_id = speaker + "_" + padded("u", u + 1);
        rec.speaker_id = speaker;
        rec.condition_label = cls.label;
        rec.duration_s = std::max(0.2, speaker_mean + cls.duration_utterance_sd_s * normal(rng));
        rec.row_index = records.size();
        rec.age_years = age;
        records.push_back(std::move(rec));
      }
    }
  }

  const auto dim = static_cast<std::size_t>(spec.dim);
  const std::size_t n = records.size();
  const double class_scale = spec.separation / std::sqrt(2.0);
  const double utterance_sd = std::sqrt(1.0 - spec.speaker_sd * spec.speaker_sd);

  std::vector<LayerMatrix> layers;
  for (int l = 1; l <= spec.layers; ++l) {
    std::vector<double> base(dim);
    for (auto& x : base) x = spec.base_scale * normal(rng);
    const auto dirs = class_directions(spec.classes.size(), dim, rng);

    std::vector<float> values(n * dim);
    std::vector<double> offset(dim);
    for (const auto& sp : plan) {
      for (auto& x : offset) x = spec.speaker_sd * normal(rng);
      for (int u = 0; u < sp.utterances; ++u) {
        float* row = values.data() + (sp.first_row + static_cast<std::size_t>(u)) * dim;
        for (std::size_t i = 0; i < dim; ++i) {
          const double v = base[i] + class_scale * dirs[sp.class_index][i] + offset[i] + utterance_sd * normal(rng);
          row[i] = static_cast<float>(v);
        }
      }
    }
    layers.emplace_back(l, n, dim, std::move(values));
  }
  return EmbeddingDataset(spec.name, std::move(records), std::move(layers));
}

EmbeddingDataset permute_speaker_labels(const EmbeddingDataset& dataset, std::uint64_t seed) {
  std::vector<std::string> speakers;
  std::vector<std::string> labels;
  for (const auto& [s, _] : dataset.speakers()) {
    speakers.push_back(s);
    labels.push_back(dataset.speaker_label(s));
  }
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), 0x5eedu};
  std::mt19937_64 rng(seq);
  std::shuffle(labels.begin(), labels.end(), rng);
  std::map<std::string, std::string> relabel;
  for (std::size_t i = 0; i < speakers.size(); ++i) relabel[speakers[i]] = labels[i];

  auto records = dataset.utterances();
  for (auto& r : records) r.condition_label = relabel.at(r.speaker_id);
  return EmbeddingDataset(dataset.name(), std::move(records), dataset.layers());
}

}  // namespace pragsim

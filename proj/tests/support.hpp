#pragma once

#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "pragsim/dataset.hpp"
#include "pragsim/error.hpp"

namespace testing {

namespace fs = std::filesystem;

// One utterance for a hand-built dataset. `layers[l]` is the vector on layer
// l + 1; a single vector is reused for every layer when only one is given.
struct Utt {
  std::string id;
  std::string speaker;
  std::optional<std::string> label;
  std::vector<std::vector<float>> layers;
  double duration = 3.0;
  std::optional<double> age;
};

inline pragsim::EmbeddingDataset build(const std::vector<Utt>& utts, int layer_count = 1,
                                       std::string name = "test") {
  std::vector<pragsim::UtteranceRecord> records;
  std::vector<std::vector<float>> values(layer_count);
  std::vector<std::size_t> dims(layer_count, 0);
  for (std::size_t i = 0; i < utts.size(); ++i) {
    const Utt& u = utts[i];
    records.push_back({u.id, u.speaker, u.label, u.duration, i, u.age});
    for (int l = 0; l < layer_count; ++l) {
      const auto& v = u.layers.size() == 1 ? u.layers[0] : u.layers.at(l);
      dims[l] = v.size();
      values[l].insert(values[l].end(), v.begin(), v.end());
    }
  }
  std::vector<pragsim::LayerMatrix> layers;
  for (int l = 0; l < layer_count; ++l)
    layers.emplace_back(l + 1, utts.size(), dims[l], std::move(values[l]));
  return pragsim::EmbeddingDataset(std::move(name), std::move(records), std::move(layers));
}

// Single-layer shorthand: one speaker per utterance unless given.
inline Utt U(std::string id, std::string speaker, std::vector<float> v,
             std::optional<std::string> label = std::nullopt) {
  return Utt{std::move(id), std::move(speaker), std::move(label), {std::move(v)}};
}

// Error code thrown by f(), or nullopt when it returns normally.
template <class F>
std::optional<pragsim::ErrorCode> error_of(F&& f) {
  try {
    f();
  } catch (const pragsim::Error& e) {
    return e.code();
  }
  return std::nullopt;
}

class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    auto stamp = std::chrono::steady_clock::now().time_since_epoch().count();
    path_ = fs::temp_directory_path() /
            ("pragsim_test_" + std::to_string(stamp) + "_" + std::to_string(counter++));
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

inline std::string slurp(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void spit(const fs::path& file, const std::string& content) {
  std::ofstream out(file, std::ios::binary);
  out << content;
}

}  // namespace testing

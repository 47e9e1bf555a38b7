#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "pragsim/classify.hpp"
#include "pragsim/dataset.hpp"
#include "pragsim/evalmetrics.hpp"
#include "pragsim/featsel.hpp"
#include "pragsim/retrieval.hpp"
#include "pragsim/screen.hpp"
#include "pragsim/simcore.hpp"
#include "pragsim/synth.hpp"

namespace pragsim::io {

using nlohmann::json;

// Feature mask files: a JSON array of strictly increasing nonnegative ints.
FeatureMask read_mask(const std::filesystem::path& file);
void write_mask(const FeatureMask& mask, const std::filesystem::path& file);

/// {"layer_index": 24, "mask_path": "all" | "<file>", "mean_center": false}
/// Relative mask paths resolve against the config file's directory. With
/// mean_center the centre is frozen over `dataset`.
struct ConfigFile {
  int layer_index = 24;
  std::string mask_path = "all";
  bool mean_center = false;
};
ConfigFile read_config_file(const std::filesystem::path& file);
SimilarityConfig resolve_config(const ConfigFile& file, const std::filesystem::path& base_dir,
                                const EmbeddingDataset& dataset);

/// Minimal RFC-4180-style reader (quoted fields allowed, no embedded
/// newlines). Row 0 is the header; every row must match its width.
std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& file);

/// id_a,id_b,judge_id,rating (judge_id column optional).
std::vector<RatedPair> read_rated_pairs(const std::filesystem::path& file);

/// JSON ({"sets": [...]}) or CSV (set_id,reference_id,candidate_id,judge_id,
/// rating[,top3_rank]) chosen by extension.
JudgmentSet read_judgments(const std::filesystem::path& file);
json judgments_to_json(const JudgmentSet& judgments);
JudgmentSet judgments_from_json(const json& j);

SynthSpec synth_spec_from_json(const json& j);
json synth_spec_to_json(const SynthSpec& spec);

json to_json(const RankedList& list);
json to_json(const ConfusionMatrix& m);
json to_json(const LosoResult& r);
json to_json(const ScreeningReport& r);
json to_json(const std::vector<SweepRow>& rows);
json to_json(const EvalReport& r);
json to_json(const TTestResult& t);
json dataset_summary(const EmbeddingDataset& dataset);

std::string sweep_tsv(const std::vector<SweepRow>& rows);

}  // namespace pragsim::io

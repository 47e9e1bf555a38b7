#include "pragsim/io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "pragsim/error.hpp"

namespace pragsim::io {

namespace fs = std::filesystem;

namespace {

json parse_json_file(const fs::path& file, ErrorCode on_error) {
  std::ifstream in(file);
  if (!in) fail(ErrorCode::MissingFile, "cannot open " + file.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    fail(on_error, file.string() + ": " + e.what());
  }
}

void write_text(const fs::path& file, const std::string& text) {
  std::ofstream out(file);
  if (!out) fail(ErrorCode::WriteFailed, "cannot write " + file.string());
  out << text;
  if (!out) fail(ErrorCode::WriteFailed, "write failed for " + file.string());
}

json number_or_label(double v) {
  if (std::isnan(v)) return nullptr;
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

std::size_t column(const std::vector<std::string>& header, const std::string& name, const fs::path& file,
                   bool required = true) {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  if (required) fail(ErrorCode::MalformedCsv, file.string() + ": missing column '" + name + "'");
  return header.size();
}

double parse_double(const std::string& s, const fs::path& file, std::size_t line) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    fail(ErrorCode::MalformedCsv, file.string() + ":" + std::to_string(line) + ": not a number: '" + s + "'");
  }
}

}  // namespace

FeatureMask read_mask(const fs::path& file) {
  const auto j = parse_json_file(file, ErrorCode::InvalidMask);
  if (!j.is_array()) fail(ErrorCode::InvalidMask, file.string() + ": mask must be a JSON array");
  std::vector<std::size_t> idx;
  for (const auto& v : j) {
    if (!v.is_number_unsigned()) fail(ErrorCode::InvalidMask, file.string() + ": mask entries must be nonnegative integers");
    idx.push_back(v.get<std::size_t>());
  }
  return FeatureMask::of(std::move(idx));
}

void write_mask(const FeatureMask& mask, const fs::path& file) {
  write_text(file, json(mask.indices()).dump() + "\n");
}

ConfigFile read_config_file(const fs::path& file) {
  const auto j = parse_json_file(file, ErrorCode::InvalidConfig);
  ConfigFile c;
  try {
    if (!j.is_object()) fail(ErrorCode::InvalidConfig, file.string() + ": config must be a JSON object");
    for (const auto& [key, _] : j.items()) {
      if (key != "layer_index" && key != "mask_path" && key != "mean_center") {
        fail(ErrorCode::InvalidConfig, file.string() + ": unknown key '" + key + "'");
      }
    }
    c.layer_index = j.value("layer_index", c.layer_index);
    c.mask_path = j.value("mask_path", c.mask_path);
    c.mean_center = j.value("mean_center", c.mean_center);
  } catch (const json::exception& e) {
    fail(ErrorCode::InvalidConfig, file.string() + ": " + e.what());
  }
  return c;
}

SimilarityConfig resolve_config(const ConfigFile& file, const fs::path& base_dir, const EmbeddingDataset& dataset) {
  FeatureMask mask;
  if (file.mask_path != "all") {
    fs::path p = file.mask_path;
    if (p.is_relative()) p = base_dir / p;
    mask = read_mask(p);
  }
  SimilarityConfig cfg;
  if (file.mean_center) {
    cfg = centered_config(dataset, file.layer_index, std::move(mask));
  } else {
    cfg.layer_index = file.layer_index;
    cfg.mask = std::move(mask);
  }
  cfg.validate(dataset);
  return cfg;
}

std::vector<std::vector<std::string>> read_csv(const fs::path& file) {
  std::ifstream in(file);
  if (!in) fail(ErrorCode::MissingFile, "cannot open " + file.string());
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
      const char ch = line[i];
      if (quoted) {
        if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else if (ch == '"') {
          quoted = false;
        } else {
          cur += ch;
        }
      } else if (ch == '"') {
        quoted = true;
      } else if (ch == ',') {
        fields.push_back(std::move(cur));
        cur.clear();
      } else {
        cur += ch;
      }
    }
    if (quoted) fail(ErrorCode::MalformedCsv, file.string() + ":" + std::to_string(rows.size() + 1) + ": unterminated quote");
    fields.push_back(std::move(cur));
    rows.push_back(std::move(fields));
  }
  if (rows.empty()) fail(ErrorCode::MalformedCsv, file.string() + ": empty file");
  for (std::size_t r = 1; r < rows.size(); ++r) {
    if (rows[r].size() != rows[0].size()) {
      fail(ErrorCode::MalformedCsv, file.string() + ":" + std::to_string(r + 1) + ": expected " +
                                        std::to_string(rows[0].size()) + " fields");
    }
  }
  return rows;
}

std::vector<RatedPair> read_rated_pairs(const fs::path& file) {
  const auto rows = read_csv(file);
  const auto& header = rows[0];
  const auto ia = column(header, "id_a", file);
  const auto ib = column(header, "id_b", file);
  const auto ir = column(header, "rating", file);
  const auto ij = column(header, "judge_id", file, false);
  std::vector<RatedPair> pairs;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    RatedPair p;
    p.id_a = rows[r][ia];
    p.id_b = rows[r][ib];
    p.rating = parse_double(rows[r][ir], file, r + 1);
    if (ij < header.size() && !rows[r][ij].empty()) p.judge_id = rows[r][ij];
    pairs.push_back(std::move(p));
  }
  return pairs;
}

JudgmentSet judgments_from_json(const json& j) {
  JudgmentSet out;
  try {
    for (const auto& s : j.at("sets")) {
      JudgedSet set;
      set.set_id = s.at("set_id").get<std::string>();
      set.reference_id = s.at("reference_id").get<std::string>();
      set.candidates = s.at("candidates").get<std::vector<std::string>>();
      if (s.contains("ratings")) {
        set.ratings = s.at("ratings").get<std::map<std::string, std::map<std::string, double>>>();
      }
      if (s.contains("top3")) set.top3 = s.at("top3").get<std::map<std::string, std::vector<std::string>>>();
      out.sets.push_back(std::move(set));
    }
  } catch (const json::exception& e) {
    fail(ErrorCode::MalformedJudgments, std::string("judgments: ") + e.what());
  }
  out.validate();
  return out;
}

json judgments_to_json(const JudgmentSet& judgments) {
  json sets = json::array();
  for (const auto& s : judgments.sets) {
    sets.push_back({{"set_id", s.set_id},
                    {"reference_id", s.reference_id},
                    {"candidates", s.candidates},
                    {"ratings", s.ratings},
                    {"top3", s.top3}});
  }
  return {{"sets", sets}};
}

JudgmentSet read_judgments(const fs::path& file) {
  if (file.extension() != ".csv") return judgments_from_json(parse_json_file(file, ErrorCode::MalformedJudgments));

  const auto rows = read_csv(file);
  const auto& header = rows[0];
  const auto is = column(header, "set_id", file);
  const auto iref = column(header, "reference_id", file);
  const auto ic = column(header, "candidate_id", file);
  const auto ij = column(header, "judge_id", file);
  const auto ir = column(header, "rating", file);
  const auto it3 = column(header, "top3_rank", file, false);

  JudgmentSet out;
  std::map<std::string, std::size_t> slot;
  std::map<std::pair<std::size_t, std::string>, std::map<int, std::string>> ranks;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    auto [it, inserted] = slot.emplace(row[is], out.sets.size());
    if (inserted) out.sets.push_back({row[is], row[iref], {}, {}, {}});
    auto& set = out.sets[it->second];
    if (set.reference_id != row[iref]) {
      fail(ErrorCode::MalformedJudgments, file.string() + ":" + std::to_string(r + 1) + ": set " + set.set_id +
                                              " has two reference ids");
    }
    if (std::find(set.candidates.begin(), set.candidates.end(), row[ic]) == set.candidates.end()) {
      set.candidates.push_back(row[ic]);
    }
    if (!row[ir].empty()) set.ratings[row[ij]][row[ic]] = parse_double(row[ir], file, r + 1);
    if (it3 < header.size() && !row[it3].empty()) {
      const int rank = static_cast<int>(parse_double(row[it3], file, r + 1));
      if (rank < 1 || rank > 3) fail(ErrorCode::MalformedJudgments, file.string() + ": top3_rank must be 1..3");
      if (!ranks[{it->second, row[ij]}].emplace(rank, row[ic]).second) {
        fail(ErrorCode::MalformedJudgments, file.string() + ": duplicate top3_rank for judge " + row[ij]);
      }
    }
  }
  for (const auto& [key, by_rank] : ranks) {
    std::vector<std::string> top;
    int expect = 1;
    for (const auto& [rank, cand] : by_rank) {
      if (rank != expect++) fail(ErrorCode::MalformedJudgments, file.string() + ": top3 ranks must be consecutive from 1");
      top.push_back(cand);
    }
    out.sets[key.first].top3[key.second] = std::move(top);
  }
  out.validate();
  return out;
}

SynthSpec synth_spec_from_json(const json& j) {
  SynthSpec s;
  try {
    for (const auto& c : j.at("classes")) {
      SynthClass cls;
      cls.label = c.at("label").get<std::string>();
      cls.n_speakers = c.at("n_speakers").get<int>();
      cls.utterances_per_speaker = c.at("utterances_per_speaker").get<int>();
      cls.duration_mean_s = c.value("duration_mean_s", cls.duration_mean_s);
      cls.duration_speaker_sd_s = c.value("duration_speaker_sd_s", cls.duration_speaker_sd_s);
      cls.duration_utterance_sd_s = c.value("duration_utterance_sd_s", cls.duration_utterance_sd_s);
      s.classes.push_back(std::move(cls));
    }
    s.dim = j.value("dim", s.dim);
    s.layers = j.value("layers", s.layers);
    s.separation = j.value("separation", s.separation);
    s.speaker_sd = j.value("speaker_sd", s.speaker_sd);
    s.base_scale = j.value("base_scale", s.base_scale);
    s.seed = j.value("seed", s.seed);
    s.name = j.value("name", s.name);
    if (j.contains("age_min")) s.age_min = j.at("age_min").get<int>();
    if (j.contains("age_max")) s.age_max = j.at("age_max").get<int>();
  } catch (const json::exception& e) {
    fail(ErrorCode::InvalidArgument, std::string("synthetic spec: ") + e.what());
  }
  s.validate();
  return s;
}

json synth_spec_to_json(const SynthSpec& spec) {
  json classes = json::array();
  for (const auto& c : spec.classes) {
    classes.push_back({{"label", c.label},
                       {"n_speakers", c.n_speakers},
                       {"utterances_per_speaker", c.utterances_per_speaker},
                       {"duration_mean_s", c.duration_mean_s},
                       {"duration_speaker_sd_s", c.duration_speaker_sd_s},
                       {"duration_utterance_sd_s", c.duration_utterance_sd_s}});
  }
  json j = {{"classes", classes},     {"dim", spec.dim},           {"layers", spec.layers},
            {"separation", spec.separation}, {"speaker_sd", spec.speaker_sd}, {"base_scale", spec.base_scale},
            {"seed", spec.seed},       {"name", spec.name}};
  if (spec.age_min) j["age_min"] = *spec.age_min;
  if (spec.age_max) j["age_max"] = *spec.age_max;
  return j;
}

json to_json(const RankedList& list) {
  json entries = json::array();
  for (const auto& e : list.entries) entries.push_back({{"id", e.utterance_id}, {"score", e.score}, {"rank", e.rank}});
  return {{"query", list.query}, {"entries", entries}};
}

json to_json(const ConfusionMatrix& m) {
  json counts = json::object();
  for (const auto& t : m.labels()) {
    for (const auto& p : m.labels()) counts[t][p] = m.count(t, p);
  }
  json per_class = json::object();
  for (const auto& l : m.labels()) {
    per_class[l] = {{"sensitivity", number_or_label(m.sensitivity(l))},
                    {"specificity", number_or_label(m.specificity(l))}};
  }
  return {{"labels", m.labels()}, {"counts", counts}, {"total", m.total()}, {"per_class", per_class}};
}

json to_json(const LosoResult& r) {
  json per = json::array();
  for (const auto& p : r.per_speaker) per.push_back({{"speaker", p.speaker_id}, {"true", p.true_label}, {"predicted", p.predicted}});
  return {{"per_speaker", per}, {"confusion", to_json(r.confusion)}, {"accuracy", r.confusion.accuracy()}};
}

json to_json(const ScreeningReport& r) {
  json speakers = json::array();
  for (const auto& e : r.speakers) {
    speakers.push_back({{"speaker", e.speaker_id},
                        {"score", e.score},
                        {"decision", e.decision == Decision::Atypical ? "atypical" : "typical"}});
  }
  return {{"model", r.model}, {"threshold", number_or_label(r.threshold)}, {"speakers", speakers}};
}

json to_json(const std::vector<SweepRow>& rows) {
  json out = json::array();
  for (const auto& r : rows) {
    out.push_back({{"threshold", number_or_label(r.threshold)},
                   {"atypical_flagged", r.atypical_flagged},
                   {"atypical_missed", r.atypical_missed},
                   {"typical_flagged", r.typical_flagged},
                   {"typical_passed", r.typical_passed},
                   {"accuracy", r.accuracy}});
  }
  return out;
}

json to_json(const TTestResult& t) {
  return {{"t", number_or_label(t.t)}, {"p_one_sided", number_or_label(t.p)}, {"df", t.df}};
}

namespace {
json metrics_json(const RetrievalMetrics& m) {
  return {{"ratings_correlation_per_judge", number_or_label(m.correlation_per_judge)},
          {"ratings_correlation_judge_average", number_or_label(m.correlation_judge_average)},
          {"recall_at_1", m.recall_at_1},
          {"recall_at_3", m.recall_at_3},
          {"top3_intersection", m.top3_intersection}};
}
}  // namespace

json to_json(const EvalReport& r) {
  json j = {{"sets", r.sets},
            {"system", metrics_json(r.system)},
            {"random_baseline", metrics_json(r.baseline)},
            {"top3_ttest_vs_baseline", to_json(r.top3_ttest)}};
  j["human_judges"] = r.has_human ? metrics_json(r.human) : json(nullptr);
  j["confidence_correlation"] = r.has_confidence ? json(r.confidence) : json(nullptr);
  return j;
}

json dataset_summary(const EmbeddingDataset& dataset) {
  json dims = json::array();
  for (const auto& l : dataset.layers()) dims.push_back(l.dim());
  std::map<std::string, std::size_t> labels;
  for (const auto& u : dataset.utterances()) ++labels[u.condition_label.value_or("")];
  return {{"name", dataset.name()},
          {"n", dataset.size()},
          {"L", dataset.layer_count()},
          {"dims", dims},
          {"speakers", dataset.speakers().size()},
          {"labels", labels}};
}

std::string sweep_tsv(const std::vector<SweepRow>& rows) {
  std::ostringstream out;
  out.precision(17);
  out << "threshold\tatypical_flagged\tatypical_missed\ttypical_flagged\ttypical_passed\taccuracy\n";
  for (const auto& r : rows) {
    out << r.threshold << '\t' << r.atypical_flagged << '\t' << r.atypical_missed << '\t' << r.typical_flagged << '\t'
        << r.typical_passed << '\t' << r.accuracy << '\n';
  }
  return out.str();
}

}  // namespace pragsim::io

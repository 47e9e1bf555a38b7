#include "cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "pragsim/classify.hpp"
#include "pragsim/dataset.hpp"
#include "pragsim/error.hpp"
#include "pragsim/evalmetrics.hpp"
#include "pragsim/featsel.hpp"
#include "pragsim/io.hpp"
#include "pragsim/parallel.hpp"
#include "pragsim/retrieval.hpp"
#include "pragsim/screen.hpp"
#include "pragsim/simcore.hpp"
#include "pragsim/synth.hpp"

namespace pragsim::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Common {
  std::string dir;
  std::string config;
  std::optional<int> layer;
  std::string mask;
  bool mean_center = false;
  std::string format = "json";
  std::size_t threads = 1;
  std::uint64_t seed = 1;
};

void add_common(CLI::App* cmd, Common& c, bool needs_dir = true) {
  auto* d = cmd->add_option("--dir", c.dir, "dataset directory");
  if (needs_dir) d->required();
  cmd->add_option("--format", c.format, "report format")->check(CLI::IsMember({"json", "tsv"}));
  cmd->add_option("--threads", c.threads, "worker threads (0 = all cores)");
  cmd->add_option("--seed", c.seed, "random seed");
}

void add_similarity(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "similarity config JSON");
  cmd->add_option("--layer", c.layer, "layer index (overrides config)");
  cmd->add_option("--mask", c.mask, "feature mask JSON, or 'all' (overrides config)");
  cmd->add_flag("--mean-center", c.mean_center, "centre features over the dataset (overrides config)");
}

// flag > file > default; every override is reported on stderr.
SimilarityConfig similarity_config(const Common& c, const EmbeddingDataset& ds, std::ostream& err) {
  io::ConfigFile file;
  fs::path base = fs::current_path();
  if (!c.config.empty()) {
    file = io::read_config_file(c.config);
    base = fs::path(c.config).parent_path();
  }
  if (c.layer) {
    if (!c.config.empty()) err << "pragsim: --layer " << *c.layer << " overrides config layer_index " << file.layer_index << '\n';
    file.layer_index = *c.layer;
  }
  if (!c.mask.empty()) {
    if (!c.config.empty()) err << "pragsim: --mask " << c.mask << " overrides config mask_path " << file.mask_path << '\n';
    file.mask_path = c.mask;
    base = fs::current_path();
  }
  if (c.mean_center) {
    if (!c.config.empty() && !file.mean_center) err << "pragsim: --mean-center overrides config mean_center=false\n";
    file.mean_center = true;
  }
  return io::resolve_config(file, base, ds);
}

std::string tsv_table(const std::vector<std::string>& columns, const json& rows) {
  std::ostringstream out;
  for (std::size_t i = 0; i < columns.size(); ++i) out << (i ? "\t" : "") << columns[i];
  out << '\n';
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < columns.size(); ++i) {
      const auto& v = r.at(columns[i]);
      out << (i ? "\t" : "") << (v.is_string() ? v.get<std::string>() : v.dump());
    }
    out << '\n';
  }
  return out.str();
}

std::string tsv_flat(const json& j, const std::string& prefix = "") {
  std::ostringstream out;
  for (const auto& [k, v] : j.items()) {
    const std::string key = prefix.empty() ? k : prefix + "." + k;
    if (v.is_object()) out << tsv_flat(v, key);
    else out << key << '\t' << (v.is_string() ? v.get<std::string>() : v.dump()) << '\n';
  }
  return out.str();
}

void emit(std::ostream& out, const Common& c, const json& report, const std::vector<std::string>& columns = {},
          const std::string& table_key = "") {
  if (c.format == "tsv") {
    if (!table_key.empty()) out << tsv_table(columns, table_key == "." ? report : report.at(table_key));
    else out << tsv_flat(report);
  } else {
    out << report.dump(2) << '\n';
  }
}

std::vector<std::string> label_speakers(const EmbeddingDataset& ds, const std::string& label) {
  std::vector<std::string> out;
  for (const auto& [s, _] : ds.speakers()) {
    if (ds.speaker_label(s) == label) out.push_back(s);
  }
  if (out.empty()) fail(ErrorCode::InvalidArgument, "no speakers labelled " + label);
  return out;
}

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Usage: return kExitUsage;
    case ErrorKind::Validation: return kExitValidation;
    case ErrorKind::Computation: return kExitComputation;
  }
  return kExitComputation;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"pragmatic-similarity retrieval, classification and screening", "pragsim"};
  app.require_subcommand(1);
  Common c;
  std::function<void()> action;

  // ingest
  auto* ingest = app.add_subcommand("ingest", "validate a dataset and print a summary");
  bool check = false;
  std::string export_csv;
  add_common(ingest, c);
  ingest->add_flag("--check", check, "validate only (always performed)");
  ingest->add_option("--export-csv", export_csv, "write utterances.csv here");
  ingest->callback([&] {
    action = [&] {
      const auto ds = load_dataset(c.dir);
      if (!export_csv.empty()) export_utterances_csv(ds, export_csv);
      auto report = io::dataset_summary(ds);
      report["valid"] = true;
      emit(out, c, report);
    };
  });

  // synth
  auto* synth = app.add_subcommand("synth", "write a seeded synthetic dataset");
  std::string synth_out, synth_spec_file;
  std::vector<std::string> synth_classes;
  SynthSpec spec;
  add_common(synth, c, false);
  synth->add_option("--out", synth_out, "output directory")->required();
  synth->add_option("--spec", synth_spec_file, "SynthSpec JSON file");
  synth->add_option("--class", synth_classes, "LABEL:SPEAKERS:UTTERANCES[:MEAN_DURATION_S] (repeatable)");
  synth->add_option("--dim", spec.dim);
  synth->add_option("--layers", spec.layers);
  synth->add_option("--separation", spec.separation);
  synth->add_option("--speaker-sd", spec.speaker_sd);
  synth->add_option("--base-scale", spec.base_scale);
  synth->callback([&] {
    action = [&] {
      SynthSpec s = spec;
      if (!synth_spec_file.empty()) {
        std::ifstream in(synth_spec_file);
        if (!in) fail(ErrorCode::MissingFile, "cannot open " + synth_spec_file);
        json j;
        try {
          j = json::parse(in);
        } catch (const json::exception& e) {
          fail(ErrorCode::InvalidArgument, synth_spec_file + ": " + e.what());
        }
        s = io::synth_spec_from_json(j);
      }
      for (const auto& text : synth_classes) {
        std::vector<std::string> parts;
        std::stringstream ss(text);
        for (std::string p; std::getline(ss, p, ':');) parts.push_back(p);
        if (parts.size() < 3 || parts.size() > 4) fail(ErrorCode::InvalidArgument, "bad --class '" + text + "'");
        SynthClass cls;
        cls.label = parts[0];
        try {
          cls.n_speakers = std::stoi(parts[1]);
          cls.utterances_per_speaker = std::stoi(parts[2]);
          if (parts.size() == 4) cls.duration_mean_s = std::stod(parts[3]);
        } catch (const std::exception&) {
          fail(ErrorCode::InvalidArgument, "bad --class '" + text + "'");
        }
        s.classes.push_back(cls);
      }
      if (synth->count("--seed")) s.seed = c.seed;
      const auto ds = gen_synthetic(s);
      save_dataset(ds, synth_out);
      auto report = io::dataset_summary(ds);
      report["spec"] = io::synth_spec_to_json(s);
      emit(out, c, report);
    };
  });

  // sim
  auto* sim = app.add_subcommand("sim", "similarity of two utterances");
  std::string id_a, id_b;
  add_common(sim, c);
  add_similarity(sim, c);
  sim->add_option("--a", id_a)->required();
  sim->add_option("--b", id_b)->required();
  sim->callback([&] {
    action = [&] {
      const auto ds = load_dataset(c.dir);
      const auto cfg = similarity_config(c, ds, err);
      emit(out, c, {{"a", id_a}, {"b", id_b}, {"score", similarity(ds, cfg, id_a, id_b)}});
    };
  });

  // retrieve
  auto* retrieve = app.add_subcommand("retrieve", "top-k most similar utterances");
  std::string query;
  std::size_t k = 10;
  RetrievalConstraints constraints;
  std::string label_filter;
  std::vector<std::string> exclude_ids;
  double min_dur = -1, max_dur = -1;
  add_common(retrieve, c);
  add_similarity(retrieve, c);
  retrieve->add_option("--query", query)->required();
  retrieve->add_option("--k", k);
  retrieve->add_flag("--exclude-same-speaker", constraints.exclude_same_speaker);
  retrieve->add_option("--label", label_filter, "only candidates with this condition label");
  retrieve->add_option("--exclude", exclude_ids, "utterance ids to skip");
  retrieve->add_option("--min-duration", min_dur);
  retrieve->add_option("--max-duration", max_dur);
  auto apply_constraints = [&] {
    if (!label_filter.empty()) constraints.label_filter = label_filter;
    constraints.exclude_ids.insert(exclude_ids.begin(), exclude_ids.end());
    if (min_dur >= 0) constraints.min_duration_s = min_dur;
    if (max_dur >= 0) constraints.max_duration_s = max_dur;
  };
  retrieve->callback([&] {
    action = [&] {
      const auto ds = load_dataset(c.dir);
      const auto cfg = similarity_config(c, ds, err);
      apply_constraints();
      emit(out, c, io::to_json(top_k_similar(ds, cfg, query, k, constraints)), {"id", "score", "rank"}, "entries");
    };
  });

  // stimuli
  auto* stimuli = app.add_subcommand("stimuli", "top-m plus percentile distractor candidates");
  std::vector<double> percentiles = kDefaultPercentiles;
  std::size_t top_m = 3;
  add_common(stimuli, c);
  add_similarity(stimuli, c);
  stimuli->add_option("--query", query)->required();
  stimuli->add_option("--percentiles", percentiles)->delimiter(',');
  stimuli->add_option("--top-m", top_m);
  stimuli->add_option("--min-duration", min_dur);
  stimuli->add_option("--max-duration", max_dur);
  stimuli->callback([&] {
    action = [&] {
      const auto ds = load_dataset(c.dir);
      const auto cfg = similarity_config(c, ds, err);
      apply_constraints();
      emit(out, c, io::to_json(percentile_candidates(ds, cfg, query, percentiles, top_m, constraints)),
           {"id", "score", "rank"}, "entries");
    };
  });

  // medoid
  auto* medoid = app.add_subcommand("medoid", "a speaker's most typical utterance");
  std::string speaker;
  add_common(medoid, c);
  add_similarity(medoid, c);
  medoid->add_option("--speaker", speaker)->required();
  medoid->callback([&] {
    action = [&] {
      const auto ds = load_dataset(c.dir);
      const auto cfg = similarity_config(c, ds, err);
      emit(out, c, {{"speaker", speaker}, {"medoid", medoid_utterance(ds, cfg, speaker)}});
    };
  });

  // outliers
  auto* outliers = app.add_subcommand("outliers", "a speaker's least typical utterances");
  std::string reference_label;
  std::vector<std::string> reference_speakers;
  std::size_t m = 5;
  add_common(outliers, c);
  add_similarity(outliers, c);
  outliers->add_option("--speaker", speaker)->required();
  outliers->add_option("--reference-label", reference_label, "reference = speakers with this label");
  outliers->add_option("--reference-speakers", reference_speakers, "reference speaker ids");
  outliers->add_option("--m", m);
  outliers->callback([&] {
    action = [&] {
      const auto ds = load_dataset(c.dir);
      const auto cfg = similarity_config(c, ds, err);
      std::vector<std::string> ref_speakers = reference_speakers;
      if (!reference_label.empty()) {
        const auto labelled = label_speakers(ds, reference_label);
        ref_speakers.insert(ref_speakers.end(), labelled.begin(), labelled.end());
      }
      if (ref_speakers.empty()) {
        for (const auto& [s, _] : ds.speakers()) ref_speakers.push_back(s);
      }
      std::vector<std::string> ref_ids;
      for (const auto& s : std::set<std::string>(ref_speakers.begin(), ref_speakers.end())) {
        const auto& ids = ds.speaker_utterances(s);
        ref_ids.insert(ref_ids.end(), ids.begin(), ids.end());
      }
      emit(out, c, io::to_json(atypical_utterances(ds, cfg, speaker, ref_ids, m)), {"id", "score", "rank"}, "entries");
    };
  });

  // classify
  auto* classify = app.add_subcommand("classify", "leave-one-speaker-out multi-layer kNN");
  KnnConfig knn;
  std::string knn_mask;
  add_common(classify, c);
  classify->add_option("--k", knn.k);
  classify->add_option("--layers", knn.layers, "layer indices (default: all)")->delimiter(',');
  classify->add_option("--mask", knn_mask, "feature mask JSON applied to every layer");
  classify->callback([&] {
    action = [&] {
      const auto ds = load_dataset(c.dir);
      if (!knn_mask.empty() && knn_mask != "all") knn.mask = io::read_mask(knn_mask);
      if (knn.k % 2 == 0) err << "pragsim: warning: even k=" << knn.k << " allows tied neighbour votes\n";
      emit(out, c, io::to_json(loso_evaluate(ds, knn)), {"speaker", "true", "predicted"}, "per_speaker");
    };
  });

  // baseline
  auto* baseline = app.add_subcommand("baseline", "utterance-length baseline classifier");
  std::string td_label = "TD", target_label = "SLI";
  double ratio = 0.70;
  add_common(baseline, c);
  baseline->add_option("--td-label", td_label);
  baseline->add_option("--target-label", target_label);
  baseline->add_option("--ratio", ratio);
  baseline->callback([&] {
    action = [&] {
      const auto ds = load_dataset(c.dir);
      emit(out, c, io::to_json(length_baseline(ds, td_label, target_label, ratio)), {"speaker", "true", "predicted"},
           "per_speaker");
    };
  });

  // screen + sweep share scoring options
  std::string model_name = "centroid", typical_label;
  std::vector<std::string> typical_speakers;
  double threshold = 0.97;
  std::string sweep_tsv_path;
  auto add_screen_opts = [&](CLI::App* cmd) {
    add_common(cmd, c);
    add_similarity(cmd, c);
    cmd->add_option("--model", model_name)->check(CLI::IsMember({"knn3", "centroid"}));
    cmd->add_option("--typical-label", typical_label, "typical set = speakers with this label");
    cmd->add_option("--typical-speakers", typical_speakers, "typical speaker ids");
  };
  struct Scored {
    std::map<std::string, double> scores;
    std::map<std::string, bool> atypical;
    bool has_truth = false;
  };
  auto score_all = [&](const EmbeddingDataset& ds) {
    const auto cfg = similarity_config(c, ds, err);
    std::vector<std::string> typical = typical_speakers;
    if (!typical_label.empty()) {
      const auto labelled = label_speakers(ds, typical_label);
      typical.insert(typical.end(), labelled.begin(), labelled.end());
    }
    if (typical.empty()) fail(ErrorCode::InvalidArgument, "give --typical-label or --typical-speakers");
    std::vector<std::string> all;
    for (const auto& [s, _] : ds.speakers()) all.push_back(s);
    Scored r;
    r.scores = score_speakers(ds, cfg, parse_screening_model(model_name), all, typical);
    if (!typical_label.empty()) {
      r.has_truth = true;
      for (const auto& s : all) r.atypical[s] = ds.speaker_label(s) != typical_label;
    }
    return r;
  };

  auto* screen = app.add_subcommand("screen", "typicality screening at a fixed threshold");
  add_screen_opts(screen);
  screen->add_option("--threshold", threshold);
  screen->add_option("--sweep-tsv", sweep_tsv_path, "also write the threshold sweep here");
  screen->callback([&] {
    action = [&] {
      const auto ds = load_dataset(c.dir);
      const auto scored = score_all(ds);
      const auto report = threshold_classify(scored.scores, threshold, model_name);
      if (!sweep_tsv_path.empty()) {
        if (!scored.has_truth) fail(ErrorCode::InvalidArgument, "--sweep-tsv needs --typical-label for ground truth");
        std::ofstream f(sweep_tsv_path);
        if (!f) fail(ErrorCode::WriteFailed, "cannot write " + sweep_tsv_path);
        f << io::sweep_tsv(threshold_sweep(scored.scores, scored.atypical));
      }
      emit(out, c, io::to_json(report), {"speaker", "score", "decision"}, "speakers");
    };
  });

  auto* sweep = app.add_subcommand("sweep", "evaluate every distinct typicality threshold");
  add_screen_opts(sweep);
  sweep->callback([&] {
    action = [&] {
      const auto ds = load_dataset(c.dir);
      if (typical_label.empty()) fail(ErrorCode::InvalidArgument, "sweep needs --typical-label for ground truth");
      const auto scored = score_all(ds);
      const auto rows = threshold_sweep(scored.scores, scored.atypical);
      if (c.format == "tsv") out << io::sweep_tsv(rows);
      else out << json{{"model", model_name}, {"rows", io::to_json(rows)}}.dump(2) << '\n';
    };
  });

  // featsel
  auto* featsel = app.add_subcommand("featsel", "greedy forward feature selection against rated pairs");
  std::string pairs_file, mask_out;
  int fs_layer = 24;
  std::size_t max_features = 32;
  double min_gain = 1e-3;
  add_common(featsel, c);
  featsel->add_option("--layer", fs_layer);
  featsel->add_option("--pairs", pairs_file, "CSV id_a,id_b,judge_id,rating")->required();
  featsel->add_option("--max-features", max_features);
  featsel->add_option("--min-gain", min_gain);
  featsel->add_option("--out", mask_out, "write the mask JSON here");
  featsel->callback([&] {
    action = [&] {
      const auto ds = load_dataset(c.dir);
      const auto pairs = io::read_rated_pairs(pairs_file);
      const auto result = GreedyForwardSelector(max_features, min_gain).select(ds, fs_layer, pairs);
      if (!mask_out.empty()) io::write_mask(result.mask, mask_out);
      json path = json::array();
      for (const auto& s : result.path) path.push_back({{"feature", s.feature}, {"objective", s.objective}});
      const json report = {{"layer_index", fs_layer}, {"mask", result.mask.indices()}, {"path", path}};
      emit(out, c, report, {"feature", "objective"}, c.format == "tsv" ? "path" : "");
    };
  });

  // eval
  auto* eval = app.add_subcommand("eval", "human-judgment retrieval metrics");
  std::string judgments_file;
  std::size_t trials = 0;
  add_common(eval, c);
  add_similarity(eval, c);
  eval->add_option("--judgments", judgments_file, "judgments JSON or CSV")->required();
  eval->add_option("--trials", trials, "Monte Carlo random-baseline trials (0 = analytic only)");
  eval->callback([&] {
    action = [&] {
      const auto ds = load_dataset(c.dir);
      const auto cfg = similarity_config(c, ds, err);
      const auto judgments = io::read_judgments(judgments_file);
      const auto scores = score_judgments(ds, cfg, judgments);
      auto report = io::to_json(evaluate_retrieval(judgments, scores));
      if (trials > 0) {
        const auto mc = random_baseline_monte_carlo(judgments, trials, c.seed);
        report["random_baseline_monte_carlo"] = {{"trials", mc.trials},
                                                 {"recall_at_1", mc.recall_at_1},
                                                 {"recall_at_3", mc.recall_at_3},
                                                 {"top3_intersection", mc.top3_intersection}};
      }
      emit(out, c, report);
    };
  });

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << json{{"error", "usage"}, {"message", e.what()}}.dump() << '\n';
    return kExitUsage;
  }

  try {
    set_thread_count(c.threads);
    if (action) action();
    return kExitOk;
  } catch (const Error& e) {
    err << json{{"error", std::string(to_string(e.code()))}, {"message", e.what()}}.dump() << '\n';
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    err << json{{"error", "internal"}, {"message", e.what()}}.dump() << '\n';
    return kExitComputation;
  }
}

}  // namespace pragsim::cli

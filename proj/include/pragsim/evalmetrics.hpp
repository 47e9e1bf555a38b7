#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "pragsim/dataset.hpp"
#include "pragsim/simcore.hpp"

namespace pragsim {

// ---------------------------------------------------------------------------
// Confusion matrices

/// Square count table, rows = true label, columns = predicted label.
/// Labels are kept sorted.
class ConfusionMatrix {
 public:
  ConfusionMatrix() = default;
  explicit ConfusionMatrix(std::vector<std::string> labels);
  /// Row-major counts over `labels`.
  ConfusionMatrix(std::vector<std::string> labels, std::vector<std::vector<std::int64_t>> counts);

  void add(const std::string& truth, const std::string& predicted, std::int64_t count = 1);

  const std::vector<std::string>& labels() const noexcept { return labels_; }
  std::int64_t count(const std::string& truth, const std::string& predicted) const;
  std::int64_t total() const noexcept;
  std::int64_t trace() const noexcept;

  /// trace / total. Throws DegenerateInput on an empty matrix.
  double accuracy() const;
  /// Recall of `label`: correct / row total.
  double sensitivity(const std::string& label) const;
  /// True-negative rate of `label`.
  double specificity(const std::string& label) const;

  bool operator==(const ConfusionMatrix&) const = default;

 private:
  std::size_t index_of(const std::string& label) const;
  std::size_t ensure(const std::string& label);

  std::vector<std::string> labels_;
  std::vector<std::vector<std::int64_t>> counts_;
};

struct ClassRates {
  double sensitivity = 0.0;
  double specificity = 0.0;
};

struct ConfusionSummary {
  double accuracy = 0.0;
  std::map<std::string, ClassRates> per_class;
};

ConfusionSummary confusion_metrics(const ConfusionMatrix& counts);

/// 2x2 shorthand: (tp, fn, fp, tn) with rows {positive, negative}.
ConfusionMatrix binary_confusion(std::int64_t true_pos_pred_pos, std::int64_t true_pos_pred_neg,
                                 std::int64_t true_neg_pred_pos, std::int64_t true_neg_pred_neg,
                                 const std::string& positive = "positive", const std::string& negative = "negative");

// ---------------------------------------------------------------------------
// Statistics

/// Product-moment correlation. Needs equal lengths >= 3 and both inputs
/// nonconstant (DegenerateInput otherwise).
double pearson(std::span<const double> xs, std::span<const double> ys);

enum class Alternative { Greater, Less, TwoSided };

struct TTestResult {
  double t = 0.0;
  double p = 0.0;
  std::size_t df = 0;
};

/// One-sample Student t-test against mu0; one-sided (mean > mu0) by default.
TTestResult one_sample_ttest(std::span<const double> values, double mu0,
                             Alternative alternative = Alternative::Greater);

// ---------------------------------------------------------------------------
// Human judgments

struct JudgedSet {
  std::string set_id;
  std::string reference_id;
  std::vector<std::string> candidates;
  /// judge -> candidate -> rating (1..5)
  std::map<std::string, std::map<std::string, double>> ratings;
  /// judge -> ordered top-3 candidates (optional per judge)
  std::map<std::string, std::vector<std::string>> top3;
};

struct JudgmentSet {
  std::vector<JudgedSet> sets;

  /// Throws MalformedJudgments on duplicate candidates, ratings or rankings
  /// naming non-candidates, out-of-range ratings, or malformed top-3 lists.
  void validate() const;
};

/// Per set, one system score per candidate (aligned with `candidates`).
using SystemScores = std::vector<std::vector<double>>;

/// Model similarity between each reference and its candidates.
SystemScores score_judgments(const EmbeddingDataset& dataset, const SimilarityConfig& cfg,
                             const JudgmentSet& judgments);

enum class CorrelationMode { PerJudge, JudgeAverage };

double ratings_correlation(const JudgmentSet& judgments, const SystemScores& scores, CorrelationMode mode);

/// Fraction of (set, judge) cases whose #1 candidate falls in the system's top k.
double recall_at_k(const JudgmentSet& judgments, const SystemScores& scores, std::size_t k);

/// Mean |system top-3 ∩ judge top-3| over all (set, judge) cases.
double top3_intersection(const JudgmentSet& judgments, const SystemScores& scores);

/// Judge-averaged top-3 intersection per set; the sample for the t-test.
std::vector<double> top3_intersection_per_set(const JudgmentSet& judgments, const SystemScores& scores);

/// Point-biserial correlation between |score difference| of two candidates
/// and whether the system orders them as the judge averages do.
double confidence_correlation(const JudgmentSet& judgments, const SystemScores& scores);

/// Candidate positions of a set sorted by score descending, id ascending.
std::vector<std::size_t> system_ranking(const JudgedSet& set, std::span<const double> scores);

/// A judge's ordered top-3: the recorded ranking if present, else ratings
/// descending with candidate-id tie-break.
std::vector<std::string> judge_top3(const JudgedSet& set, const std::string& judge);

/// Judges who rated or ranked anything in the set, sorted.
std::vector<std::string> judges_of(const JudgedSet& set);

struct RetrievalMetrics {
  double correlation_per_judge = 0.0;
  double correlation_judge_average = 0.0;
  double recall_at_1 = 0.0;
  double recall_at_3 = 0.0;
  double top3_intersection = 0.0;
};

/// Expected metrics for uniformly random scores, in closed form.
RetrievalMetrics analytic_random_baseline(const JudgmentSet& judgments);

struct MonteCarloBaseline {
  std::size_t trials = 0;
  double recall_at_1 = 0.0;
  double recall_at_3 = 0.0;
  double top3_intersection = 0.0;
};

/// Uniform-random system scores, one independently seeded generator per
/// trial. Means are independent of thread count.
MonteCarloBaseline random_baseline_monte_carlo(const JudgmentSet& judgments, std::size_t trials,
                                               std::uint64_t seed);

/// Judge-vs-judge agreement: each judge in turn is scored against the mean
/// rating of the remaining judges, then results are pooled. Correlation is
/// per-judge pooled (both modes report the same value).
RetrievalMetrics human_agreement(const JudgmentSet& judgments);

struct EvalReport {
  RetrievalMetrics system;
  RetrievalMetrics baseline;
  RetrievalMetrics human;
  bool has_human = false;
  double confidence = 0.0;
  bool has_confidence = false;
  TTestResult top3_ttest;
  std::size_t sets = 0;
};

/// The table-shaped summary used by the `eval` subcommand.
EvalReport evaluate_retrieval(const JudgmentSet& judgments, const SystemScores& scores);

}  // namespace pragsim

#include "pragsim/evalmetrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include <boost/math/distributions/students_t.hpp>

#include "pragsim/error.hpp"
#include "pragsim/parallel.hpp"

namespace pragsim {

// ---------------------------------------------------------------------------
// ConfusionMatrix

ConfusionMatrix::ConfusionMatrix(std::vector<std::string> labels) {
  for (auto& l : labels) ensure(l);
}

ConfusionMatrix::ConfusionMatrix(std::vector<std::string> labels, std::vector<std::vector<std::int64_t>> counts) {
  if (counts.size() != labels.size()) fail(ErrorCode::InvalidArgument, "confusion counts must be square over the labels");
  for (const auto& row : counts) {
    if (row.size() != labels.size()) fail(ErrorCode::InvalidArgument, "confusion counts must be square over the labels");
  }
  for (const auto& l : labels) ensure(l);
  if (labels_.size() != labels.size()) fail(ErrorCode::InvalidArgument, "duplicate confusion label");
  for (std::size_t i = 0; i < labels.size(); ++i) {
    for (std::size_t j = 0; j < labels.size(); ++j) add(labels[i], labels[j], counts[i][j]);
  }
}

std::size_t ConfusionMatrix::ensure(const std::string& label) {
  auto it = std::lower_bound(labels_.begin(), labels_.end(), label);
  const auto idx = static_cast<std::size_t>(it - labels_.begin());
  if (it != labels_.end() && *it == label) return idx;
  labels_.insert(it, label);
  for (auto& row : counts_) row.insert(row.begin() + static_cast<std::ptrdiff_t>(idx), 0);
  counts_.insert(counts_.begin() + static_cast<std::ptrdiff_t>(idx), std::vector<std::int64_t>(labels_.size(), 0));
  return idx;
}

std::size_t ConfusionMatrix::index_of(const std::string& label) const {
  auto it = std::lower_bound(labels_.begin(), labels_.end(), label);
  if (it == labels_.end() || *it != label) fail(ErrorCode::InvalidArgument, "label " + label + " not in confusion matrix");
  return static_cast<std::size_t>(it - labels_.begin());
}

void ConfusionMatrix::add(const std::string& truth, const std::string& predicted, std::int64_t count) {
  if (count < 0) fail(ErrorCode::InvalidArgument, "negative confusion count");
  ensure(truth);
  ensure(predicted);
  counts_[index_of(truth)][index_of(predicted)] += count;
}

std::int64_t ConfusionMatrix::count(const std::string& truth, const std::string& predicted) const {
  return counts_[index_of(truth)][index_of(predicted)];
}

std::int64_t ConfusionMatrix::total() const noexcept {
  std::int64_t t = 0;
  for (const auto& row : counts_) t = std::accumulate(row.begin(), row.end(), t);
  return t;
}

std::int64_t ConfusionMatrix::trace() const noexcept {
  std::int64_t t = 0;
  for (std::size_t i = 0; i < counts_.size(); ++i) t += counts_[i][i];
  return t;
}

double ConfusionMatrix::accuracy() const {
  const auto t = total();
  if (t == 0) fail(ErrorCode::DegenerateInput, "accuracy of an empty confusion matrix");
  return static_cast<double>(trace()) / static_cast<double>(t);
}

double ConfusionMatrix::sensitivity(const std::string& label) const {
  const auto i = index_of(label);
  const auto row = std::accumulate(counts_[i].begin(), counts_[i].end(), std::int64_t{0});
  if (row == 0) return std::nan("");
  return static_cast<double>(counts_[i][i]) / static_cast<double>(row);
}

double ConfusionMatrix::specificity(const std::string& label) const {
  const auto i = index_of(label);
  std::int64_t negatives = 0;
  std::int64_t true_negatives = 0;
  for (std::size_t r = 0; r < counts_.size(); ++r) {
    if (r == i) continue;
    for (std::size_t c = 0; c < counts_.size(); ++c) {
      negatives += counts_[r][c];
      if (c != i) true_negatives += counts_[r][c];
    }
  }
  if (negatives == 0) return std::nan("");
  return static_cast<double>(true_negatives) / static_cast<double>(negatives);
}

ConfusionSummary confusion_metrics(const ConfusionMatrix& counts) {
  ConfusionSummary s;
  s.accuracy = counts.accuracy();
  for (const auto& l : counts.labels()) s.per_class[l] = {counts.sensitivity(l), counts.specificity(l)};
  return s;
}

ConfusionMatrix binary_confusion(std::int64_t pp, std::int64_t pn, std::int64_t np, std::int64_t nn,
                                 const std::string& positive, const std::string& negative) {
  ConfusionMatrix m{std::vector<std::string>{positive, negative}};
  m.add(positive, positive, pp);
  m.add(positive, negative, pn);
  m.add(negative, positive, np);
  m.add(negative, negative, nn);
  return m;
}

// ---------------------------------------------------------------------------
// Statistics

double pearson(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) fail(ErrorCode::LengthMismatch, "pearson inputs differ in length");
  if (xs.size() < 3) fail(ErrorCode::DegenerateInput, "pearson needs at least 3 points");
  const double n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = xs[i] - mx;
    const double dy = ys[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) fail(ErrorCode::DegenerateInput, "pearson of a constant input");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

TTestResult one_sample_ttest(std::span<const double> values, double mu0, Alternative alternative) {
  if (values.size() < 2) fail(ErrorCode::DegenerateInput, "t-test needs at least 2 values");
  const double n = static_cast<double>(values.size());
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= n;
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double variance = ss / (n - 1.0);
  if (variance == 0.0) fail(ErrorCode::DegenerateInput, "t-test sample has zero variance");

  TTestResult r;
  r.df = values.size() - 1;
  r.t = (mean - mu0) / std::sqrt(variance / n);
  const boost::math::students_t dist(static_cast<double>(r.df));
  switch (alternative) {
    case Alternative::Greater: r.p = boost::math::cdf(boost::math::complement(dist, r.t)); break;
    case Alternative::Less: r.p = boost::math::cdf(dist, r.t); break;
    case Alternative::TwoSided: r.p = 2.0 * boost::math::cdf(boost::math::complement(dist, std::fabs(r.t))); break;
  }
  return r;
}

// ---------------------------------------------------------------------------
// Judgments

void JudgmentSet::validate() const {
  if (sets.empty()) fail(ErrorCode::MalformedJudgments, "judgment set is empty");
  for (const auto& s : sets) {
    const std::string where = "set " + s.set_id;
    if (s.candidates.empty()) fail(ErrorCode::MalformedJudgments, where + " has no candidates");
    std::set<std::string> cands(s.candidates.begin(), s.candidates.end());
    if (cands.size() != s.candidates.size()) fail(ErrorCode::MalformedJudgments, where + " has duplicate candidates");
    for (const auto& [judge, ratings] : s.ratings) {
      for (const auto& [cand, r] : ratings) {
        if (!cands.contains(cand)) fail(ErrorCode::MalformedJudgments, where + ": judge " + judge + " rated non-candidate " + cand);
        if (!std::isfinite(r) || r < 1.0 || r > 5.0) {
          fail(ErrorCode::MalformedJudgments, where + ": rating outside [1,5] by judge " + judge);
        }
      }
    }
    for (const auto& [judge, top] : s.top3) {
      const std::set<std::string> uniq(top.begin(), top.end());
      if (top.size() != std::min<std::size_t>(3, s.candidates.size()) || uniq.size() != top.size()) {
        fail(ErrorCode::MalformedJudgments, where + ": judge " + judge + " top-3 must list distinct candidates");
      }
      for (const auto& c : top) {
        if (!cands.contains(c)) fail(ErrorCode::MalformedJudgments, where + ": judge " + judge + " ranked non-candidate " + c);
      }
    }
  }
}

SystemScores score_judgments(const EmbeddingDataset& dataset, const SimilarityConfig& cfg,
                             const JudgmentSet& judgments) {
  const VectorTable table(dataset, cfg);
  SystemScores out;
  out.reserve(judgments.sets.size());
  for (const auto& s : judgments.sets) {
    const auto ref = dataset.position(s.reference_id);
    std::vector<double> row;
    row.reserve(s.candidates.size());
    for (const auto& c : s.candidates) row.push_back(table.score(ref, dataset.position(c)));
    out.push_back(std::move(row));
  }
  return out;
}

namespace {

void check_scores(const JudgmentSet& judgments, const SystemScores& scores) {
  if (scores.size() != judgments.sets.size()) fail(ErrorCode::MalformedJudgments, "system scores missing for some sets");
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (scores[i].size() != judgments.sets[i].candidates.size()) {
      fail(ErrorCode::MalformedJudgments, "system scores missing for candidates of set " + judgments.sets[i].set_id);
    }
    for (double v : scores[i]) {
      if (!std::isfinite(v)) fail(ErrorCode::MalformedJudgments, "non-finite system score in set " + judgments.sets[i].set_id);
    }
  }
}

// Judge-average rating per candidate position; NaN where nobody rated.
std::vector<double> average_ratings_of(const JudgedSet& set) {
  std::vector<double> avg(set.candidates.size(), 0.0);
  std::vector<int> count(set.candidates.size(), 0);
  for (const auto& [judge, ratings] : set.ratings) {
    for (std::size_t c = 0; c < set.candidates.size(); ++c) {
      auto it = ratings.find(set.candidates[c]);
      if (it == ratings.end()) continue;
      avg[c] += it->second;
      ++count[c];
    }
  }
  for (std::size_t c = 0; c < avg.size(); ++c) avg[c] = count[c] ? avg[c] / count[c] : std::nan("");
  return avg;
}

std::vector<std::string> top_k_ids(const JudgedSet& set, std::span<const double> scores, std::size_t k) {
  const auto order = system_ranking(set, scores);
  std::vector<std::string> out;
  for (std::size_t i = 0; i < std::min(k, order.size()); ++i) out.push_back(set.candidates[order[i]]);
  return out;
}

struct CaseMetrics {
  double recall1 = 0.0;
  double recall3 = 0.0;
  double top3 = 0.0;
  std::size_t cases = 0;
};

// Accumulates recall@1, recall@3 and top-3 intersection for one judge of one set.
void accumulate_case(const JudgedSet& set, const std::string& judge, std::span<const double> scores,
                     CaseMetrics& acc) {
  const auto judge_top = judge_top3(set, judge);
  if (judge_top.empty()) return;
  const auto system_top = top_k_ids(set, scores, 3);
  const auto& first = judge_top.front();
  if (!system_top.empty() && system_top.front() == first) acc.recall1 += 1.0;
  if (std::find(system_top.begin(), system_top.end(), first) != system_top.end()) acc.recall3 += 1.0;
  std::size_t inter = 0;
  for (const auto& c : judge_top) inter += std::count(system_top.begin(), system_top.end(), c);
  acc.top3 += static_cast<double>(inter);
  ++acc.cases;
}

}  // namespace

std::vector<std::size_t> system_ranking(const JudgedSet& set, std::span<const double> scores) {
  std::vector<std::size_t> order(set.candidates.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return set.candidates[a] < set.candidates[b];
  });
  return order;
}

std::vector<std::string> judge_top3(const JudgedSet& set, const std::string& judge) {
  if (auto it = set.top3.find(judge); it != set.top3.end()) return it->second;
  auto rit = set.ratings.find(judge);
  if (rit == set.ratings.end() || rit->second.empty()) return {};
  std::vector<std::pair<std::string, double>> rated(rit->second.begin(), rit->second.end());
  std::sort(rated.begin(), rated.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  std::vector<std::string> out;
  for (std::size_t i = 0; i < std::min<std::size_t>(3, rated.size()); ++i) out.push_back(rated[i].first);
  return out;
}

std::vector<std::string> judges_of(const JudgedSet& set) {
  std::set<std::string> judges;
  for (const auto& [j, _] : set.ratings) judges.insert(j);
  for (const auto& [j, _] : set.top3) judges.insert(j);
  return {judges.begin(), judges.end()};
}

double ratings_correlation(const JudgmentSet& judgments, const SystemScores& scores, CorrelationMode mode) {
  check_scores(judgments, scores);
  std::vector<double> xs, ys;
  for (std::size_t s = 0; s < judgments.sets.size(); ++s) {
    const auto& set = judgments.sets[s];
    if (mode == CorrelationMode::PerJudge) {
      for (const auto& [judge, ratings] : set.ratings) {
        for (std::size_t c = 0; c < set.candidates.size(); ++c) {
          auto it = ratings.find(set.candidates[c]);
          if (it == ratings.end()) continue;
          xs.push_back(scores[s][c]);
          ys.push_back(it->second);
        }
      }
    } else {
      const auto avg = average_ratings_of(set);
      for (std::size_t c = 0; c < avg.size(); ++c) {
        if (std::isnan(avg[c])) continue;
        xs.push_back(scores[s][c]);
        ys.push_back(avg[c]);
      }
    }
  }
  return pearson(xs, ys);
}

double recall_at_k(const JudgmentSet& judgments, const SystemScores& scores, std::size_t k) {
  check_scores(judgments, scores);
  if (k == 0) fail(ErrorCode::InvalidArgument, "recall@k needs k >= 1");
  double hits = 0.0;
  std::size_t cases = 0;
  for (std::size_t s = 0; s < judgments.sets.size(); ++s) {
    const auto& set = judgments.sets[s];
    const auto system_top = top_k_ids(set, scores[s], k);
    for (const auto& judge : judges_of(set)) {
      const auto top = judge_top3(set, judge);
      if (top.empty()) continue;
      ++cases;
      if (std::find(system_top.begin(), system_top.end(), top.front()) != system_top.end()) hits += 1.0;
    }
  }
  if (cases == 0) fail(ErrorCode::MalformedJudgments, "no judge provides a #1 candidate");
  return hits / static_cast<double>(cases);
}

std::vector<double> top3_intersection_per_set(const JudgmentSet& judgments, const SystemScores& scores) {
  check_scores(judgments, scores);
  std::vector<double> out;
  for (std::size_t s = 0; s < judgments.sets.size(); ++s) {
    const auto& set = judgments.sets[s];
    CaseMetrics acc;
    for (const auto& judge : judges_of(set)) accumulate_case(set, judge, scores[s], acc);
    if (acc.cases == 0) fail(ErrorCode::MalformedJudgments, "set " + set.set_id + " has no judge top-3");
    out.push_back(acc.top3 / static_cast<double>(acc.cases));
  }
  return out;
}

double top3_intersection(const JudgmentSet& judgments, const SystemScores& scores) {
  check_scores(judgments, scores);
  CaseMetrics acc;
  for (std::size_t s = 0; s < judgments.sets.size(); ++s) {
    for (const auto& judge : judges_of(judgments.sets[s])) accumulate_case(judgments.sets[s], judge, scores[s], acc);
  }
  if (acc.cases == 0) fail(ErrorCode::MalformedJudgments, "no judge top-3 available");
  return acc.top3 / static_cast<double>(acc.cases);
}

double confidence_correlation(const JudgmentSet& judgments, const SystemScores& scores) {
  check_scores(judgments, scores);
  std::vector<double> gaps, correct;
  for (std::size_t s = 0; s < judgments.sets.size(); ++s) {
    const auto avg = average_ratings_of(judgments.sets[s]);
    const auto& sys = scores[s];
    for (std::size_t i = 0; i < avg.size(); ++i) {
      for (std::size_t j = i + 1; j < avg.size(); ++j) {
        if (std::isnan(avg[i]) || std::isnan(avg[j]) || avg[i] == avg[j]) continue;
        gaps.push_back(std::fabs(sys[i] - sys[j]));
        correct.push_back((sys[i] - sys[j]) * (avg[i] - avg[j]) > 0.0 ? 1.0 : 0.0);
      }
    }
  }
  if (gaps.size() < 3) fail(ErrorCode::DegenerateInput, "too few comparable candidate pairs");
  return pearson(gaps, correct);
}

RetrievalMetrics analytic_random_baseline(const JudgmentSet& judgments) {
  RetrievalMetrics m;
  std::size_t cases = 0;
  for (const auto& set : judgments.sets) {
    const double c = static_cast<double>(set.candidates.size());
    for (const auto& judge : judges_of(set)) {
      const auto top = judge_top3(set, judge);
      if (top.empty()) continue;
      ++cases;
      m.recall_at_1 += 1.0 / c;
      m.recall_at_3 += std::min(3.0, c) / c;
      m.top3_intersection += static_cast<double>(top.size()) * std::min(3.0, c) / c;
    }
  }
  if (cases == 0) fail(ErrorCode::MalformedJudgments, "no judge provides a #1 candidate");
  m.recall_at_1 /= static_cast<double>(cases);
  m.recall_at_3 /= static_cast<double>(cases);
  m.top3_intersection /= static_cast<double>(cases);
  return m;
}

MonteCarloBaseline random_baseline_monte_carlo(const JudgmentSet& judgments, std::size_t trials,
                                               std::uint64_t seed) {
  if (trials == 0) fail(ErrorCode::InvalidArgument, "Monte Carlo needs at least one trial");
  std::vector<CaseMetrics> per_trial(trials);
  parallel_for(trials, [&](std::size_t t) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(t), static_cast<std::uint32_t>(static_cast<std::uint64_t>(t) >> 32)};
    std::mt19937_64 rng(seq);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    CaseMetrics acc;
    std::vector<double> scores;
    for (const auto& set : judgments.sets) {
      scores.resize(set.candidates.size());
      for (auto& v : scores) v = unif(rng);
      for (const auto& judge : judges_of(set)) accumulate_case(set, judge, scores, acc);
    }
    per_trial[t] = acc;
  });

  MonteCarloBaseline out;
  out.trials = trials;
  for (const auto& acc : per_trial) {
    if (acc.cases == 0) fail(ErrorCode::MalformedJudgments, "no judge provides a #1 candidate");
    out.recall_at_1 += acc.recall1 / static_cast<double>(acc.cases);
    out.recall_at_3 += acc.recall3 / static_cast<double>(acc.cases);
    out.top3_intersection += acc.top3 / static_cast<double>(acc.cases);
  }
  out.recall_at_1 /= static_cast<double>(trials);
  out.recall_at_3 /= static_cast<double>(trials);
  out.top3_intersection /= static_cast<double>(trials);
  return out;
}

RetrievalMetrics human_agreement(const JudgmentSet& judgments) {
  CaseMetrics acc;
  std::vector<double> xs, ys;
  for (const auto& set : judgments.sets) {
    for (const auto& judge : judges_of(set)) {
      // Mean of the remaining judges' ratings acts as the "system".
      std::vector<double> others(set.candidates.size(), 0.0);
      std::vector<int> counts(set.candidates.size(), 0);
      for (const auto& [other, ratings] : set.ratings) {
        if (other == judge) continue;
        for (std::size_t c = 0; c < set.candidates.size(); ++c) {
          if (auto it = ratings.find(set.candidates[c]); it != ratings.end()) {
            others[c] += it->second;
            ++counts[c];
          }
        }
      }
      bool complete = true;
      for (std::size_t c = 0; c < others.size(); ++c) {
        if (counts[c] == 0) complete = false;
        else others[c] /= counts[c];
      }
      if (!complete) continue;
      accumulate_case(set, judge, others, acc);
      if (auto rit = set.ratings.find(judge); rit != set.ratings.end()) {
        for (std::size_t c = 0; c < set.candidates.size(); ++c) {
          if (auto it = rit->second.find(set.candidates[c]); it != rit->second.end()) {
            xs.push_back(others[c]);
            ys.push_back(it->second);
          }
        }
      }
    }
  }
  if (acc.cases == 0) fail(ErrorCode::DegenerateInput, "human agreement needs at least two judges rating every candidate");
  RetrievalMetrics m;
  m.recall_at_1 = acc.recall1 / static_cast<double>(acc.cases);
  m.recall_at_3 = acc.recall3 / static_cast<double>(acc.cases);
  m.top3_intersection = acc.top3 / static_cast<double>(acc.cases);
  m.correlation_per_judge = pearson(xs, ys);
  m.correlation_judge_average = m.correlation_per_judge;
  return m;
}

EvalReport evaluate_retrieval(const JudgmentSet& judgments, const SystemScores& scores) {
  judgments.validate();
  check_scores(judgments, scores);
  EvalReport r;
  r.sets = judgments.sets.size();
  r.system.correlation_per_judge = ratings_correlation(judgments, scores, CorrelationMode::PerJudge);
  r.system.correlation_judge_average = ratings_correlation(judgments, scores, CorrelationMode::JudgeAverage);
  r.system.recall_at_1 = recall_at_k(judgments, scores, 1);
  r.system.recall_at_3 = recall_at_k(judgments, scores, 3);
  r.system.top3_intersection = top3_intersection(judgments, scores);
  r.baseline = analytic_random_baseline(judgments);

  try {
    r.human = human_agreement(judgments);
    r.has_human = true;
  } catch (const Error& e) {
    if (e.code() != ErrorCode::DegenerateInput) throw;
  }
  try {
    r.confidence = confidence_correlation(judgments, scores);
    r.has_confidence = true;
  } catch (const Error& e) {
    if (e.code() != ErrorCode::DegenerateInput) throw;
  }
  const auto per_set = top3_intersection_per_set(judgments, scores);
  try {
    r.top3_ttest = one_sample_ttest(per_set, r.baseline.top3_intersection, Alternative::Greater);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::DegenerateInput) throw;
    r.top3_ttest = {std::nan(""), std::nan(""), per_set.empty() ? 0 : per_set.size() - 1};
  }
  return r;
}

}  // namespace pragsim

#include <cmath>
#include <random>

#include "doctest.h"
#include "pragsim/evalmetrics.hpp"
#include "pragsim/parallel.hpp"
#include "support.hpp"

using namespace pragsim;
using testing::error_of;

namespace {

double pearson_v(std::vector<double> x, std::vector<double> y) { return pearson(x, y); }

// `sets` sets of `c` candidates c0..c9; judge j rates candidate i with
// rate(set, judge, i).
template <class Rate>
JudgmentSet make_judgments(std::size_t sets, std::size_t c, std::size_t judges, Rate rate) {
  JudgmentSet j;
  for (std::size_t s = 0; s < sets; ++s) {
    JudgedSet set;
    set.set_id = "set" + std::to_string(s);
    set.reference_id = "ref" + std::to_string(s);
    for (std::size_t i = 0; i < c; ++i) set.candidates.push_back("c" + std::to_string(i));
    for (std::size_t jj = 0; jj < judges; ++jj)
      for (std::size_t i = 0; i < c; ++i) set.ratings["j" + std::to_string(jj)][set.candidates[i]] = rate(s, jj, i);
    j.sets.push_back(std::move(set));
  }
  return j;
}

double clamp_rating(double r) { return std::min(5.0, std::max(1.0, r)); }

}  // namespace

TEST_CASE("confusion arithmetic from published counts") {
  auto t2 = binary_confusion(10, 4, 1, 13, "ASD", "NT");
  CHECK(t2.accuracy() == 23.0 / 28.0);
  CHECK(confusion_metrics(t2).accuracy == 23.0 / 28.0);
  CHECK(t2.accuracy() == doctest::Approx(0.8214).epsilon(1e-4));
  CHECK(binary_confusion(36, 31, 3, 64).accuracy() == 100.0 / 134.0);
  CHECK(binary_confusion(13, 8, 1, 6).accuracy() == 19.0 / 28.0);

  auto m = confusion_metrics(t2);
  CHECK(m.per_class.at("ASD").sensitivity == 10.0 / 14.0);
  CHECK(m.per_class.at("ASD").specificity == 13.0 / 14.0);
  CHECK(m.per_class.at("NT").sensitivity == 13.0 / 14.0);
  CHECK(m.per_class.at("NT").specificity == 10.0 / 14.0);
  CHECK(t2.count("ASD", "NT") == 4);
  CHECK(t2.total() == 28);
  CHECK(t2.trace() == 23);
}

TEST_CASE("confusion matrix edge cases") {
  ConfusionMatrix empty;
  CHECK(error_of([&] { empty.accuracy(); }) == ErrorCode::DegenerateInput);
  CHECK(error_of([&] { confusion_metrics(empty); }) == ErrorCode::DegenerateInput);
  ConfusionMatrix m({"b", "a", "c"});
  CHECK(m.labels() == std::vector<std::string>{"a", "b", "c"});
  m.add("a", "a", 2);
  m.add("a", "c");
  m.add("c", "b");
  m.add("d", "d");  // new labels are adopted
  CHECK(m.labels().size() == 4);
  CHECK(m.accuracy() == 3.0 / 5.0);
  CHECK(std::isnan(m.sensitivity("b")));  // no true b
  CHECK(error_of([&] { m.add("a", "a", -1); }) == ErrorCode::InvalidArgument);
  CHECK(error_of([] { ConfusionMatrix({"a", "a"}, {{1, 0}, {0, 1}}); }) == ErrorCode::InvalidArgument);
  CHECK(error_of([] { ConfusionMatrix({"a", "b"}, {{1, 0}}); }) == ErrorCode::InvalidArgument);
  CHECK(ConfusionMatrix({"x", "y"}, {{3, 1}, {2, 4}}).accuracy() == 7.0 / 10.0);
}

TEST_CASE("pearson") {
  CHECK(pearson_v({1, 2, 3, 4}, {3, 5, 7, 9}) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(pearson_v({1, 2, 3, 4}, {-1, -2, -3, -4}) == doctest::Approx(-1.0).epsilon(1e-15));
  CHECK(pearson_v({1, 2, 3, 4}, {1, 3, 2, 4}) == doctest::Approx(0.8).epsilon(1e-15));
  CHECK(error_of([] { pearson_v({1, 1, 1}, {1, 2, 3}); }) == ErrorCode::DegenerateInput);
  CHECK(error_of([] { pearson_v({1, 2, 3}, {2, 2, 2}); }) == ErrorCode::DegenerateInput);
  CHECK(error_of([] { pearson_v({1, 2}, {2, 1}); }) == ErrorCode::DegenerateInput);
  CHECK(error_of([] { pearson_v({1, 2, 3}, {2, 1}); }) == ErrorCode::LengthMismatch);
}

TEST_CASE("pearson is invariant under positive affine maps") {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> a(0.01, 100), b(-50, 50);
  for (int t = 0; t < 200; ++t) {
    std::vector<double> x(20), y(20);
    for (auto& v : x) v = g(rng);
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = x[i] + g(rng);
    double r = pearson(x, y);
    double sa = a(rng), sb = b(rng);
    auto x2 = x;
    for (auto& v : x2) v = sa * v + sb;
    CHECK(std::abs(pearson(x2, y) - r) <= 1e-9);
    CHECK(std::abs(pearson(y, x2) - r) <= 1e-9);
    CHECK(r >= -1.0);
    CHECK(r <= 1.0);
  }
}

TEST_CASE("one-sample t-test") {
  std::vector<double> v{1.2, 1.0, 1.1, 1.3, 0.9};
  auto r = one_sample_ttest(v, 0.9);
  // sd = sqrt(0.025), se = sqrt(0.005), t = 0.2 / sqrt(0.005) = 2*sqrt(2)
  CHECK(r.t == doctest::Approx(2.8284271247461903).epsilon(1e-12));
  CHECK(r.p == doctest::Approx(0.023710327792159785).epsilon(1e-9));
  CHECK(r.df == 4);

  std::vector<double> sym{0.8, 0.9, 1.0};
  auto s = one_sample_ttest(sym, 0.9);
  CHECK(s.t == doctest::Approx(0.0));
  CHECK(s.p == doctest::Approx(0.5));

  std::vector<double> tight{1.5, 1.5000001, 1.4999999, 1.5, 1.50000005};
  CHECK(one_sample_ttest(tight, 0.9).p < 1e-12);

  std::vector<double> flat{2, 2, 2};
  CHECK(error_of([&] { one_sample_ttest(flat, 1.0); }) == ErrorCode::DegenerateInput);
  std::vector<double> one{2};
  CHECK(error_of([&] { one_sample_ttest(one, 1.0); }) == ErrorCode::DegenerateInput);
}

TEST_CASE("t-test sides add up") {
  std::mt19937_64 rng(6);
  std::normal_distribution<double> g(1.0, 0.5);
  for (int t = 0; t < 100; ++t) {
    std::vector<double> v(3 + t % 30);
    for (auto& x : v) x = g(rng);
    auto greater = one_sample_ttest(v, 0.9, Alternative::Greater);
    auto less = one_sample_ttest(v, 0.9, Alternative::Less);
    auto two = one_sample_ttest(v, 0.9, Alternative::TwoSided);
    CHECK(std::abs(greater.p + less.p - 1.0) <= 1e-9);
    CHECK(two.p == doctest::Approx(2 * std::min(greater.p, less.p)).epsilon(1e-12));
  }
}

TEST_CASE("judgment validation") {
  auto good = make_judgments(1, 4, 1, [](auto, auto, auto i) { return 1.0 + i; });
  CHECK(error_of([&] { good.validate(); }) == std::nullopt);

  auto dup = good;
  dup.sets[0].candidates[1] = "c0";
  CHECK(error_of([&] { dup.validate(); }) == ErrorCode::MalformedJudgments);

  auto range = good;
  range.sets[0].ratings["j0"]["c0"] = 6;
  CHECK(error_of([&] { range.validate(); }) == ErrorCode::MalformedJudgments);

  auto stray = good;
  stray.sets[0].ratings["j0"]["zz"] = 3;
  CHECK(error_of([&] { stray.validate(); }) == ErrorCode::MalformedJudgments);

  auto top = good;
  top.sets[0].top3["j0"] = {"c0", "c1", "zz"};
  CHECK(error_of([&] { top.validate(); }) == ErrorCode::MalformedJudgments);
  top.sets[0].top3["j0"] = {"c0", "c0", "c1"};
  CHECK(error_of([&] { top.validate(); }) == ErrorCode::MalformedJudgments);
  top.sets[0].top3["j0"] = {"c0", "c1"};
  CHECK(error_of([&] { top.validate(); }) == ErrorCode::MalformedJudgments);
  top.sets[0].top3["j0"] = {"c3", "c1", "c2"};
  CHECK(error_of([&] { top.validate(); }) == std::nullopt);

  JudgmentSet none;
  CHECK(error_of([&] { none.validate(); }) == ErrorCode::MalformedJudgments);
}

TEST_CASE("judge top-3 and system ranking") {
  JudgedSet set;
  set.candidates = {"b", "a", "c", "d"};
  set.ratings["j1"] = {{"a", 4}, {"b", 4}, {"c", 5}, {"d", 1}};
  CHECK(judge_top3(set, "j1") == std::vector<std::string>{"c", "a", "b"});  // a before b on the tie
  set.top3["j1"] = {"d", "b", "a"};
  CHECK(judge_top3(set, "j1") == std::vector<std::string>{"d", "b", "a"});  // recorded ranking wins

  std::vector<double> scores{0.5, 0.5, 0.9, 0.1};
  CHECK(system_ranking(set, scores) == std::vector<std::size_t>{2, 1, 0, 3});
  CHECK(judges_of(set) == std::vector<std::string>{"j1"});
}

TEST_CASE("ratings_correlation") {
  SUBCASE("system equal to every judge") {
    auto j = make_judgments(3, 5, 3, [](auto s, auto, auto i) { return 1.0 + (i * 7 + s) % 5; });
    SystemScores sc;
    for (const auto& set : j.sets) {
      std::vector<double> row;
      for (const auto& c : set.candidates) row.push_back(set.ratings.at("j0").at(c));
      sc.push_back(row);
    }
    CHECK(ratings_correlation(j, sc, CorrelationMode::PerJudge) == doctest::Approx(1.0));
    CHECK(ratings_correlation(j, sc, CorrelationMode::JudgeAverage) == doctest::Approx(1.0));
  }

  SUBCASE("modes pool or average as defined") {
    auto j = make_judgments(2, 4, 2, [](auto s, auto jj, auto i) { return jj == 0 ? 1.0 + i : 1.0 + (i + s + 1) % 4; });
    SystemScores sc{{0.1, 0.4, 0.2, 0.9}, {0.3, 0.3, 0.8, 0.5}};
    std::vector<double> xs, ys, mx, my;
    for (std::size_t s = 0; s < 2; ++s)
      for (std::size_t i = 0; i < 4; ++i) {
        double a = j.sets[s].ratings["j0"]["c" + std::to_string(i)];
        double b = j.sets[s].ratings["j1"]["c" + std::to_string(i)];
        xs.insert(xs.end(), {sc[s][i], sc[s][i]});
        ys.insert(ys.end(), {a, b});
        mx.push_back(sc[s][i]);
        my.push_back((a + b) / 2);
      }
    CHECK(ratings_correlation(j, sc, CorrelationMode::PerJudge) == doctest::Approx(pearson(xs, ys)).epsilon(1e-12));
    CHECK(ratings_correlation(j, sc, CorrelationMode::JudgeAverage) == doctest::Approx(pearson(mx, my)).epsilon(1e-12));
  }

  SUBCASE("averaging judges helps when judge noise is independent") {
    std::mt19937_64 rng(10);
    std::normal_distribution<double> g;
    std::vector<std::vector<double>> truth(31, std::vector<double>(10));
    for (auto& row : truth)
      for (auto& t : row) t = g(rng);
    auto j = make_judgments(31, 10, 9, [&](auto s, auto, auto i) { return clamp_rating(3 + truth[s][i] + 1.2 * g(rng)); });
    SystemScores sc;
    for (const auto& row : truth) {
      std::vector<double> r;
      for (double t : row) r.push_back(t + 0.8 * g(rng));
      sc.push_back(r);
    }
    CHECK(ratings_correlation(j, sc, CorrelationMode::JudgeAverage) >= ratings_correlation(j, sc, CorrelationMode::PerJudge));
  }

  SUBCASE("missing scores") {
    auto j = make_judgments(2, 3, 1, [](auto, auto, auto i) { return 1.0 + i; });
    SystemScores short_rows{{1, 2, 3}};
    CHECK(error_of([&] { ratings_correlation(j, short_rows, CorrelationMode::PerJudge); }) == ErrorCode::MalformedJudgments);
    SystemScores ragged{{1, 2, 3}, {1, 2}};
    CHECK(error_of([&] { ratings_correlation(j, ragged, CorrelationMode::PerJudge); }) == ErrorCode::MalformedJudgments);
  }
}

TEST_CASE("recall_at_k and top3_intersection") {
  // judge #1 is c1 (rating 5); system ranks c0, c1, c2 on top
  auto j = make_judgments(1, 10, 1, [](auto, auto, auto i) { return i == 1 ? 5.0 : i == 5 ? 4.0 : i == 6 ? 4.0 : 1.0; });
  SystemScores sc{{0.9, 0.8, 0.7, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1}};
  CHECK(recall_at_k(j, sc, 3) == 1.0);
  CHECK(recall_at_k(j, sc, 1) == 0.0);
  CHECK(top3_intersection(j, sc) == 1.0);  // judge top-3 {c1, c5, c6}

  SystemScores miss{{0.9, 0.0, 0.7, 0.8, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1}};
  CHECK(recall_at_k(j, miss, 3) == 0.0);

  SystemScores same{{0, 0.9, 0, 0, 0, 0.8, 0.7, 0, 0, 0}};
  CHECK(top3_intersection(j, same) == 3.0);
  SystemScores disjoint{{0.9, 0, 0.8, 0.7, 0, 0, 0, 0, 0, 0}};
  CHECK(top3_intersection(j, disjoint) == 0.0);
  CHECK(error_of([&] { recall_at_k(j, sc, 0); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("recall is monotone in k and reaches 1 at the pool size") {
  std::mt19937_64 rng(12);
  std::uniform_int_distribution<int> r(1, 5);
  std::uniform_real_distribution<double> u;
  auto j = make_judgments(20, 10, 4, [&](auto, auto, auto) { return static_cast<double>(r(rng)); });
  SystemScores sc(20, std::vector<double>(10));
  for (auto& row : sc)
    for (auto& v : row) v = u(rng);
  double prev = 0;
  for (std::size_t k = 1; k <= 10; ++k) {
    double rk = recall_at_k(j, sc, k);
    CHECK(rk >= prev);
    prev = rk;
  }
  CHECK(prev == 1.0);
  double t3 = top3_intersection(j, sc);
  CHECK(t3 >= 0.0);
  CHECK(t3 <= 3.0);
}

TEST_CASE("monotone transform of judge averages gives a full top-3 match") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(1, 5);
  auto j = make_judgments(6, 10, 3, [&](auto, auto, auto) { return u(rng); });
  SystemScores sc;
  for (auto& set : j.sets) {
    std::vector<double> avg;
    for (const auto& c : set.candidates) {
      double t = 0;
      for (const auto& [_, r] : set.ratings) t += r.at(c);
      avg.push_back(t / 3);
    }
    std::vector<std::size_t> order(10);
    for (std::size_t i = 0; i < 10; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return avg[a] > avg[b]; });
    for (const auto& [judge, _] : set.ratings)
      set.top3[judge] = {set.candidates[order[0]], set.candidates[order[1]], set.candidates[order[2]]};
    std::vector<double> row;
    for (double a : avg) row.push_back(std::exp(a) - 3);
    sc.push_back(row);
  }
  CHECK(top3_intersection(j, sc) == 3.0);
  CHECK(recall_at_k(j, sc, 1) == 1.0);
}

TEST_CASE("confidence_correlation") {
  std::mt19937_64 rng(77);
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> u(1, 5);

  SUBCASE("system equal to the judge averages is degenerate") {
    auto j = make_judgments(5, 10, 2, [&](auto, auto, auto) { return u(rng); });
    SystemScores sc;
    for (const auto& set : j.sets) {
      std::vector<double> row;
      for (const auto& c : set.candidates) row.push_back((set.ratings.at("j0").at(c) + set.ratings.at("j1").at(c)) / 2);
      sc.push_back(row);
    }
    CHECK(error_of([&] { confidence_correlation(j, sc); }) == ErrorCode::DegenerateInput);
  }

  SUBCASE("noisy system is more often right on larger gaps") {
    auto j = make_judgments(1000, 10, 1, [&](auto, auto, auto) { return u(rng); });
    SystemScores sc;
    for (const auto& set : j.sets) {
      std::vector<double> row;
      for (const auto& c : set.candidates) row.push_back(set.ratings.at("j0").at(c) + g(rng));
      sc.push_back(row);
    }
    CHECK(confidence_correlation(j, sc) > 0.0);
  }

  SUBCASE("inverted system") {
    auto j = make_judgments(200, 10, 1, [&](auto, auto, auto) { return u(rng); });
    SystemScores sc;
    for (const auto& set : j.sets) {
      std::vector<double> row;
      for (const auto& c : set.candidates) row.push_back(-set.ratings.at("j0").at(c) + 0.3 * g(rng));
      sc.push_back(row);
    }
    CHECK(confidence_correlation(j, sc) <= 0.0);
  }
}

TEST_CASE("random baselines") {
  auto j = make_judgments(31, 10, 3, [](auto s, auto jj, auto i) { return 1.0 + (s + jj + i) % 5; });
  auto analytic = analytic_random_baseline(j);
  CHECK(analytic.recall_at_1 == doctest::Approx(0.1));
  CHECK(analytic.recall_at_3 == doctest::Approx(0.3));
  CHECK(analytic.top3_intersection == doctest::Approx(0.9));

  set_thread_count(1);
  auto mc = random_baseline_monte_carlo(j, 2000, 42);
  CHECK(mc.trials == 2000);
  CHECK(std::abs(mc.recall_at_1 - 0.1) <= 0.02);
  CHECK(std::abs(mc.recall_at_3 - 0.3) <= 0.03);
  CHECK(std::abs(mc.top3_intersection - 0.9) <= 0.05);
  set_thread_count(4);
  auto again = random_baseline_monte_carlo(j, 2000, 42);
  set_thread_count(1);
  CHECK(again.recall_at_1 == mc.recall_at_1);
  CHECK(again.recall_at_3 == mc.recall_at_3);
  CHECK(again.top3_intersection == mc.top3_intersection);
  auto other = random_baseline_monte_carlo(j, 2000, 43);
  CHECK(other.recall_at_3 != mc.recall_at_3);
  CHECK(error_of([&] { random_baseline_monte_carlo(j, 0, 1); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("human agreement") {
  auto same = make_judgments(4, 10, 3, [](auto s, auto, auto i) { return 1.0 + (3 * i + s) % 10 * 0.4; });
  auto h = human_agreement(same);
  CHECK(h.correlation_per_judge == doctest::Approx(1.0));
  CHECK(h.correlation_judge_average == h.correlation_per_judge);
  CHECK(h.recall_at_1 == 1.0);
  CHECK(h.top3_intersection == 3.0);
  auto single = make_judgments(2, 5, 1, [](auto, auto, auto i) { return 1.0 + i; });
  CHECK(error_of([&] { human_agreement(single); }) == ErrorCode::DegenerateInput);
}

TEST_CASE("evaluate_retrieval report") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(1, 5);
  std::normal_distribution<double> g;
  auto j = make_judgments(31, 10, 3, [&](auto, auto, auto) { return u(rng); });
  SystemScores sc;
  for (const auto& set : j.sets) {
    std::vector<double> row;
    for (const auto& c : set.candidates) row.push_back(set.ratings.at("j0").at(c) + 0.5 * g(rng));
    sc.push_back(row);
  }
  auto r = evaluate_retrieval(j, sc);
  CHECK(r.sets == 31);
  CHECK(r.top3_ttest.df == 30);
  CHECK(r.baseline.top3_intersection == doctest::Approx(0.9));
  CHECK(r.system.recall_at_3 == recall_at_k(j, sc, 3));
  CHECK(r.system.top3_intersection == top3_intersection(j, sc));
  CHECK(r.has_human);
  auto per_set = top3_intersection_per_set(j, sc);
  auto t = one_sample_ttest(per_set, r.baseline.top3_intersection);
  CHECK(r.top3_ttest.t == t.t);
  CHECK(r.top3_ttest.p == t.p);
  CHECK(r.system.top3_intersection > 0.9);
}

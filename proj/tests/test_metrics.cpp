#include <algorithm>
#include <cmath>
#include <doctest.h>
#include <numeric>
#include <random>
#include <vector>

#include <json.hpp>

#include "hiertag/errors.hpp"
#include "hiertag/metrics.hpp"
#include "hiertag/rng.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

using namespace hiertag;

namespace {

struct Instance {
  std::vector<double> scores;
  std::vector<int> labels;
};

// Random instance with deliberate score ties; labels are resampled until
// both classes appear so every metric is defined.
Instance random_instance(std::mt19937_64& rng, int max_size = 12) {
  std::uniform_int_distribution<int> size_d(2, max_size);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Instance inst;
  const int n = size_d(rng);
  inst.scores.resize(n);
  for (double& s : inst.scores) s = u(rng);
  for (int i = 1; i < n; ++i) {
    if (u(rng) < 0.3) inst.scores[i] = inst.scores[std::uniform_int_distribution<int>(0, i - 1)(rng)];
  }
  inst.labels.resize(n);
  for (;;) {
    for (int& y : inst.labels) y = u(rng) < 0.5 ? 1 : 0;
    const long pos = std::count(inst.labels.begin(), inst.labels.end(), 1);
    if (pos > 0 && pos < n) break;
  }
  return inst;
}

}  // namespace

TEST_CASE("roc auc on a small hand-checked ranking") {
  const std::vector<double> scores{0.1, 0.4, 0.35, 0.8};
  const std::vector<int> labels{0, 0, 1, 1};
  // One of the four positive/negative pairs is inverted (0.35 < 0.4).
  CHECK(roc_auc(scores, labels) == 0.75);
}

TEST_CASE("roc auc endpoints and ties") {
  CHECK(roc_auc({0.1, 0.2, 0.8, 0.9}, {0, 0, 1, 1}) == 1.0);
  CHECK(roc_auc({0.9, 0.8, 0.2, 0.1}, {0, 0, 1, 1}) == 0.0);
  CHECK(roc_auc({0.5, 0.5, 0.5, 0.5}, {0, 1, 0, 1}) == 0.5);
}

TEST_CASE("roc auc rejects single-class labels") {
  CHECK_THROWS_AS(roc_auc({0.1, 0.9}, {1, 1}), DegenerateLabels);
  CHECK_THROWS_AS(roc_auc({0.1, 0.9}, {0, 0}), DegenerateLabels);
  CHECK_THROWS_AS(roc_auc({0.1}, {1, 0}), LengthMismatch);
}

TEST_CASE("average precision on a small hand-checked ranking") {
  const std::vector<double> scores{0.8, 0.4, 0.35, 0.1};
  const std::vector<int> labels{1, 0, 1, 0};
  // Steps: recall 1/2 at precision 1, recall 1 at precision 2/3.
  CHECK(average_precision(scores, labels) == doctest::Approx(5.0 / 6.0).epsilon(1e-15));
}

TEST_CASE("average precision needs a positive") {
  CHECK_THROWS_AS(average_precision({0.1, 0.9}, {0, 0}), DegenerateLabels);
}

TEST_CASE("both rankers match brute-force oracles on random instances") {
  auto rng = make_rng(mix_seed(20260823, 1));
  for (int trial = 0; trial < 1200; ++trial) {
    const Instance inst = random_instance(rng);
    CAPTURE(trial);
    CHECK(std::abs(roc_auc(inst.scores, inst.labels) -
                   oracles::roc_auc_pairwise(inst.scores, inst.labels)) <= 1e-12);
    CHECK(std::abs(average_precision(inst.scores, inst.labels) -
                   oracles::average_precision_sweep(inst.scores, inst.labels)) <= 1e-12);
  }
}

TEST_CASE("rankers are invariant under a strictly increasing score transform") {
  auto rng = make_rng(mix_seed(20260823, 2));
  for (int trial = 0; trial < 200; ++trial) {
    const Instance inst = random_instance(rng);
    std::vector<double> squeezed(inst.scores.size());
    for (std::size_t i = 0; i < squeezed.size(); ++i) squeezed[i] = 0.5 * inst.scores[i] + 0.1;
    CHECK(roc_auc(squeezed, inst.labels) == roc_auc(inst.scores, inst.labels));
    CHECK(average_precision(squeezed, inst.labels) ==
          average_precision(inst.scores, inst.labels));
  }
}

TEST_CASE("f1 at a threshold") {
  const std::vector<double> scores{0.2, 0.6, 0.8};
  const std::vector<int> labels{0, 1, 1};
  CHECK(f1_at(scores, labels, 0.4) == 1.0);
  CHECK(f1_at(scores, labels, 0.0) == doctest::Approx(0.8));  // predicts everything
  CHECK(f1_at(scores, labels, 0.9) == 0.0);                   // predicts nothing
  CHECK(f1_at({0.3, 0.7}, {1, 1}, 0.0) == 1.0);
}

TEST_CASE("f1 is constant between consecutive distinct scores") {
  const std::vector<double> scores{0.2, 0.6, 0.8};
  const std::vector<int> labels{0, 1, 1};
  for (double t : {0.21, 0.3, 0.45, 0.59}) {
    CHECK(f1_at(scores, labels, t) == f1_at(scores, labels, 0.6));
  }
  for (double t : {0.61, 0.7, 0.79}) {
    CHECK(f1_at(scores, labels, t) == f1_at(scores, labels, 0.8));
  }
}

TEST_CASE("threshold choice on a small hand-checked instance") {
  // Both positives clear 0.4 and the lone negative does not.
  CHECK(optimize_threshold({0.2, 0.6, 0.8}, {0, 1, 1}) == doctest::Approx(0.4).epsilon(1e-12));
}

TEST_CASE("all-negative labels yield threshold 1") {
  CHECK(optimize_threshold({0.2, 0.6, 0.8}, {0, 0, 0}) == 1.0);
  CHECK_THROWS_AS(optimize_threshold({}, {}), NoObservedEntries);
}

TEST_CASE("tied best thresholds resolve to the smallest") {
  // F1 is 2/3 both when everything is predicted (t = 0) and when only the
  // top score is (t = 0.65); the scan keeps 0.
  const std::vector<double> scores{0.9, 0.1, 0.4, 0.4};
  const std::vector<int> labels{1, 1, 0, 0};
  const double t = optimize_threshold(scores, labels);
  CHECK(t == 0.0);
  CHECK(f1_at(scores, labels, t) == doctest::Approx(2.0 / 3.0));
  CHECK(f1_at(scores, labels, 0.65) == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("chosen threshold attains the exhaustive-sweep maximum") {
  auto rng = make_rng(mix_seed(20260823, 3));
  for (int trial = 0; trial < 400; ++trial) {
    const Instance inst = random_instance(rng);
    CAPTURE(trial);
    const double t = optimize_threshold(inst.scores, inst.labels);
    const double best = oracles::best_f1_exhaustive(inst.scores, inst.labels, f1_at);
    CHECK(f1_at(inst.scores, inst.labels, t) == best);
  }
}

TEST_CASE("per-column thresholds use only observed entries") {
  auto rng = make_rng(mix_seed(20260823, 4));
  const Matrix scores = testsupport::random_matrix(40, 5, rng, 0.0, 1.0);
  const StateMatrix states = testsupport::random_states(40, 5, rng);
  const std::vector<double> thresholds = optimize_thresholds(scores, states);
  REQUIRE(thresholds.size() == 5);
  for (int c = 0; c < 5; ++c) {
    std::vector<double> s;
    std::vector<int> y;
    for (int r = 0; r < 40; ++r) {
      if (states(r, c) == LabelState::Unobserved) continue;
      s.push_back(scores(r, c));
      y.push_back(states(r, c) == LabelState::Positive ? 1 : 0);
    }
    CHECK(thresholds[static_cast<std::size_t>(c)] == optimize_threshold(s, y));
  }
}

TEST_CASE("a fully unobserved column cannot be thresholded") {
  auto rng = make_rng(mix_seed(20260823, 5));
  const Matrix scores = testsupport::random_matrix(6, 2, rng, 0.0, 1.0);
  StateMatrix states(6, 2);
  for (int r = 0; r < 6; ++r) states(r, 0) = r % 2 ? LabelState::Positive : LabelState::Negative;
  CHECK_THROWS_AS(optimize_thresholds(scores, states), NoObservedEntries);
}

namespace {

const Hierarchy& small_tree() {
  static const Hierarchy h =
      Hierarchy::from_groups({{"g0", {"a", "b", "c", "d"}}, {"g1", {"e", "f"}}});
  return h;
}

struct EvalFixture {
  Matrix fine_scores{0, 0};
  StateMatrix fine_states{0, 0};
  std::vector<double> fine_thresholds;
  Matrix coarse_scores{0, 0};
  StateMatrix coarse_states{0, 0};
  std::vector<double> coarse_thresholds;
};

EvalFixture random_fixture(int n, std::mt19937_64& rng) {
  const Hierarchy& h = small_tree();
  EvalFixture f;
  f.fine_scores = testsupport::random_matrix(n, h.n_fine(), rng, 0.0, 1.0);
  f.fine_states = testsupport::random_states(n, h.n_fine(), rng);
  f.fine_thresholds.assign(static_cast<std::size_t>(h.n_fine()), 0.5);
  f.coarse_scores = testsupport::random_matrix(n, h.n_coarse(), rng, 0.0, 1.0);
  f.coarse_states = testsupport::random_states(n, h.n_coarse(), rng);
  f.coarse_thresholds.assign(static_cast<std::size_t>(h.n_coarse()), 0.5);
  return f;
}

MetricsReport run(const EvalFixture& f) {
  return evaluate(f.fine_scores, f.fine_states, f.fine_thresholds, f.coarse_scores,
                  f.coarse_states, f.coarse_thresholds, small_tree());
}

}  // namespace

TEST_CASE("evaluate scores a separable dataset perfectly") {
  const Hierarchy& h = small_tree();
  const int n = 10;
  Matrix fine(n, h.n_fine());
  StateMatrix states(n, h.n_fine());
  auto rng = make_rng(7);
  std::uniform_real_distribution<double> lo(0.05, 0.4), hi(0.6, 0.95);
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < h.n_fine(); ++c) {
      const bool positive = (r + c) % 2 == 0;
      states(r, c) = positive ? LabelState::Positive : LabelState::Negative;
      fine(r, c) = positive ? hi(rng) : lo(rng);
    }
  }
  const std::vector<double> thresholds(static_cast<std::size_t>(h.n_fine()), 0.5);
  const MetricsReport report =
      evaluate(fine, states, thresholds, Matrix(0, 0), StateMatrix(0, 0), {}, h);
  REQUIRE(report.fine.size() == 6);
  CHECK(report.coarse.empty());
  for (const TagMetrics& m : report.fine) {
    CHECK_FALSE(m.skipped);
    CHECK(m.roc_auc == 1.0);
    CHECK(m.pr_auc == 1.0);
    CHECK(m.f1 == 1.0);
    CHECK(m.observed == n);
  }
  CHECK(report.fine_summary.macro_roc_auc == 1.0);
  CHECK(report.fine_summary.evaluated == 6);
  CHECK(report.fine_summary.skipped_tags.empty());
}

TEST_CASE("evaluate matches per-column metrics and macro means") {
  auto rng = make_rng(mix_seed(20260823, 6));
  const EvalFixture f = random_fixture(60, rng);
  const MetricsReport report = run(f);

  double roc_sum = 0.0;
  int evaluated = 0;
  for (int c = 0; c < small_tree().n_fine(); ++c) {
    std::vector<double> s;
    std::vector<int> y;
    for (int r = 0; r < f.fine_scores.rows(); ++r) {
      if (f.fine_states(r, c) == LabelState::Unobserved) continue;
      s.push_back(f.fine_scores(r, c));
      y.push_back(f.fine_states(r, c) == LabelState::Positive ? 1 : 0);
    }
    const TagMetrics& m = report.fine[static_cast<std::size_t>(c)];
    CHECK(m.observed == static_cast<long>(s.size()));
    const long pos = std::count(y.begin(), y.end(), 1);
    if (pos == 0 || pos == static_cast<long>(y.size())) {
      CHECK(m.skipped);
      continue;
    }
    CHECK_FALSE(m.skipped);
    CHECK(m.roc_auc == roc_auc(s, y));
    CHECK(m.pr_auc == average_precision(s, y));
    CHECK(m.f1 == f1_at(s, y, 0.5));
    roc_sum += m.roc_auc;
    ++evaluated;
  }
  REQUIRE(evaluated == report.fine_summary.evaluated);
  if (evaluated > 0) {
    CHECK(report.fine_summary.macro_roc_auc == doctest::Approx(roc_sum / evaluated).epsilon(1e-15));
  }
}

TEST_CASE("evaluate does not depend on sample order") {
  auto rng = make_rng(mix_seed(20260823, 7));
  const EvalFixture f = random_fixture(40, rng);

  std::vector<int> perm(40);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);

  EvalFixture g = f;
  for (int r = 0; r < 40; ++r) {
    for (int c = 0; c < small_tree().n_fine(); ++c) {
      g.fine_scores(r, c) = f.fine_scores(perm[static_cast<std::size_t>(r)], c);
      g.fine_states(r, c) = f.fine_states(perm[static_cast<std::size_t>(r)], c);
    }
    for (int c = 0; c < small_tree().n_coarse(); ++c) {
      g.coarse_scores(r, c) = f.coarse_scores(perm[static_cast<std::size_t>(r)], c);
      g.coarse_states(r, c) = f.coarse_states(perm[static_cast<std::size_t>(r)], c);
    }
  }
  CHECK(report_to_json(run(f)) == report_to_json(run(g)));
}

TEST_CASE("degenerate tags are skipped, not averaged") {
  const Hierarchy& h = small_tree();
  auto rng = make_rng(mix_seed(20260823, 8));
  EvalFixture f = random_fixture(30, rng);
  // Tag "b" observed but single-class, tag "e" never observed.
  for (int r = 0; r < 30; ++r) {
    f.fine_states(r, 1) = LabelState::Negative;
    f.fine_states(r, 4) = LabelState::Unobserved;
  }
  const MetricsReport report =
      evaluate(f.fine_scores, f.fine_states, f.fine_thresholds, Matrix(0, 0), StateMatrix(0, 0),
               {}, h);
  CHECK(report.fine[1].skipped);
  CHECK(report.fine[1].observed == 30);
  CHECK(report.fine[4].skipped);
  CHECK(report.fine[4].observed == 0);
  const auto& skipped = report.fine_summary.skipped_tags;
  CHECK(std::count(skipped.begin(), skipped.end(), "b") == 1);
  CHECK(std::count(skipped.begin(), skipped.end(), "e") == 1);
  CHECK(report.fine_summary.evaluated + static_cast<int>(skipped.size()) == h.n_fine());
}

TEST_CASE("evaluate validates shapes") {
  auto rng = make_rng(mix_seed(20260823, 9));
  EvalFixture f = random_fixture(10, rng);
  CHECK_THROWS_AS(evaluate(Matrix(10, 3), f.fine_states, f.fine_thresholds, f.coarse_scores,
                           f.coarse_states, f.coarse_thresholds, small_tree()),
                  ShapeMismatch);
  CHECK_THROWS_AS(evaluate(f.fine_scores, f.fine_states, {0.5}, f.coarse_scores, f.coarse_states,
                           f.coarse_thresholds, small_tree()),
                  LengthMismatch);
  CHECK_THROWS_AS(evaluate(f.fine_scores, f.fine_states, f.fine_thresholds, Matrix(9, 2),
                           StateMatrix(9, 2), f.coarse_thresholds, small_tree()),
                  ShapeMismatch);
}

TEST_CASE("report serializations carry every tag") {
  auto rng = make_rng(mix_seed(20260823, 10));
  EvalFixture f = random_fixture(30, rng);
  for (int r = 0; r < 30; ++r) f.fine_states(r, 2) = LabelState::Positive;  // force one skip
  const MetricsReport report = run(f);

  const nlohmann::json j = nlohmann::json::parse(report_to_json(report));
  REQUIRE(j.at("fine").at("tags").size() == 6);
  REQUIRE(j.at("coarse").at("tags").size() == 2);
  CHECK(j.at("fine").at("tags").at(2).at("roc_auc").is_null());
  CHECK(j.at("fine").at("tags").at(2).at("skipped").get<bool>());
  CHECK(j.at("fine").at("tags").at(0).at("tag").get<std::string>() == "a");
  CHECK(j.at("fine").at("macro").at("evaluated").get<int>() == report.fine_summary.evaluated);

  const std::string csv = report_to_csv(report);
  const auto lines = static_cast<std::size_t>(std::count(csv.begin(), csv.end(), '\n'));
  // header + 6 fine + macro + 2 coarse + macro
  CHECK(lines == 11);
  CHECK(csv.rfind("level,tag,roc_auc,pr_auc,f1,threshold,observed,skipped", 0) == 0);
  CHECK(csv.find("fine,c,,,") != std::string::npos);  // skipped tag: empty metric cells
  CHECK(csv.find("coarse,(macro),") != std::string::npos);
}

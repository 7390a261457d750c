#include <cmath>
#include <doctest.h>
#include <random>

#include "hiertag/errors.hpp"
#include "hiertag/gradcheck.hpp"
#include "hiertag/rng.hpp"
#include "hiertag/tape.hpp"
#include "test_support.hpp"

using namespace hiertag;
using testsupport::random_matrix;
using testsupport::random_states;

namespace {

const Hierarchy& two_groups() {
  static const Hierarchy h = Hierarchy::from_groups({{"g0", {"a", "b", "c"}}, {"g1", {"d"}}});
  return h;
}

}  // namespace

TEST_CASE("affine: identity and zero-weight cases") {
  Tape t;
  const auto w = t.input(Matrix::from_rows({{1, 0}, {0, 1}}));
  const auto x = t.input(Matrix::column({1, 2}));
  const auto b = t.input(Matrix::column({0, 0}));
  const auto y = t.affine(w, x, b);
  CHECK(t.value(y)(0, 0) == 1.0);
  CHECK(t.value(y)(1, 0) == 2.0);

  Tape t2;
  const auto w2 = t2.input(Matrix(2, 3));
  const auto x2 = t2.input(Matrix::column({5, -1, 2}));
  const auto b2 = t2.input(Matrix::column({0.3, -0.7}));
  const auto y2 = t2.affine(w2, x2, b2);
  CHECK(t2.value(y2)(0, 0) == 0.3);
  CHECK(t2.value(y2)(1, 0) == -0.7);

  CHECK_THROWS_AS(t2.affine(w2, t2.input(Matrix::column({1, 2})), b2), ShapeMismatch);
}

TEST_CASE("sigmoid: midpoint and symmetry") {
  Tape t;
  const auto x = t.input(Matrix::column({0.0}));
  CHECK(t.value(t.sigmoid(x))(0, 0) == 0.5);

  std::mt19937_64 rng = make_rng(21);
  Tape t2;
  const auto v = t2.input(random_matrix(7, 1, rng, -20.0, 20.0));
  const auto s = t2.sigmoid(v);
  Matrix neg = t2.value(v);
  for (std::size_t e = 0; e < neg.size(); ++e) neg.data()[e] = -neg.data()[e];
  Tape t3;
  const auto sneg = t3.sigmoid(t3.input(neg));
  for (int i = 0; i < 7; ++i) {
    CHECK(t2.value(s)(i, 0) == doctest::Approx(1.0 - t3.value(sneg)(i, 0)).epsilon(1e-12));
  }
}

TEST_CASE("softmax: uniform on zeros, columns sum to one") {
  Tape t;
  const auto x = t.input(Matrix(3, 1));
  const auto y = t.softmax_cols(x);
  for (int i = 0; i < 3; ++i) CHECK(t.value(y)(i, 0) == doctest::Approx(1.0 / 3).epsilon(1e-12));
}

TEST_CASE("grouped max and average on the four-tag example") {
  Tape t;
  const auto p = t.input(Matrix::column({0.9, 0.1, 0.2, 0.4}));
  const auto mx = t.grouped_max(p, two_groups());
  CHECK(t.value(mx)(0, 0) == 0.9);
  CHECK(t.value(mx)(1, 0) == 0.4);

  const auto av = t.grouped_avg(p, two_groups());
  CHECK(t.value(av)(0, 0) == doctest::Approx(0.4).epsilon(1e-12));
  CHECK(t.value(av)(1, 0) == 0.4);

  Tape t2;
  CHECK_THROWS_AS(t2.grouped_max(t2.input(Matrix::column({1, 2})), two_groups()),
                  LengthMismatch);
}

TEST_CASE("grouped max tie routes the whole gradient to the lowest index") {
  const Hierarchy h = Hierarchy::from_groups({{"g", {"a", "b"}}});
  Tape t;
  const auto p = t.input(Matrix::column({0.5, 0.5}));
  const auto mx = t.grouped_max(p, h);
  CHECK(t.value(mx)(0, 0) == 0.5);
  const auto root = t.sum_entries(mx);
  t.backward(root);
  CHECK(t.grad(p)(0, 0) == 1.0);
  CHECK(t.grad(p)(1, 0) == 0.0);
}

TEST_CASE("matvec_t: selection and the uniform column") {
  Tape t;
  const auto w = t.input(Matrix::from_rows({{0}, {1}, {0}}));  // one-hot on row 1
  const auto p = t.input(Matrix::column({0.9, 0.1, 0.2}));
  CHECK(t.value(t.matvec_t(w, p))(0, 0) == 0.1);

  Tape t2;
  const auto wu = t2.input(Matrix::from_rows({{1.0 / 3}, {1.0 / 3}, {1.0 / 3}}));
  const auto p2 = t2.input(Matrix::column({0.9, 0.1, 0.2}));
  CHECK(t2.value(t2.matvec_t(wu, p2))(0, 0) == doctest::Approx(0.4).epsilon(1e-12));
}

TEST_CASE("masked bce values and the empty mask") {
  Tape t;
  const auto p = t.input(Matrix::column({0.5}));
  StateMatrix st(1, 1);
  st(0, 0) = LabelState::Positive;
  const auto l = t.masked_bce(p, st);
  CHECK(t.value(l)(0, 0) == doctest::Approx(std::log(2.0)).epsilon(1e-12));

  Tape t2;
  const auto p2 = t2.input(Matrix::column({0.3, 0.8}));
  StateMatrix none(2, 1);  // all unobserved
  const auto l2 = t2.masked_bce(p2, none);
  CHECK(t2.value(l2)(0, 0) == 0.0);
  t2.backward(l2);
  CHECK(t2.grad(p2)(0, 0) == 0.0);
  CHECK(t2.grad(p2)(1, 0) == 0.0);

  Tape t3;
  CHECK_THROWS_AS(t3.masked_bce(t3.input(Matrix::column({0.5})), StateMatrix(2, 1)),
                  LengthMismatch);
}

TEST_CASE("flipping masked-out labels changes nothing, bitwise") {
  // Labels live alongside a mask; a masked-out label never reaches the loss.
  // Build states from (labels, mask), flip every masked-out label, and the
  // resulting loss and gradients must be identical to the last bit.
  std::mt19937_64 rng = make_rng(22);
  std::bernoulli_distribution coin(0.5), masked(0.4);
  const Matrix probs = random_matrix(6, 4, rng, 0.05, 0.95);

  std::vector<std::vector<bool>> labels(6, std::vector<bool>(4));
  std::vector<std::vector<bool>> observed(6, std::vector<bool>(4));
  for (int i = 0; i < 6; ++i) {
    for (int j = 0; j < 4; ++j) {
      labels[i][j] = coin(rng);
      observed[i][j] = !masked(rng);
    }
  }
  const auto to_states = [&](bool flip_hidden) {
    StateMatrix st(6, 4);
    for (int i = 0; i < 6; ++i) {
      for (int j = 0; j < 4; ++j) {
        const bool y = observed[i][j] ? labels[i][j] : (labels[i][j] ^ flip_hidden);
        if (observed[i][j]) st(i, j) = y ? LabelState::Positive : LabelState::Negative;
      }
    }
    return st;
  };

  Tape ta, tb;
  const auto pa = ta.input(probs);
  const auto pb = tb.input(probs);
  const auto la = ta.masked_bce(pa, to_states(false));
  const auto lb = tb.masked_bce(pb, to_states(true));
  CHECK(ta.value(la)(0, 0) == tb.value(lb)(0, 0));
  ta.backward(la);
  tb.backward(lb);
  CHECK(ta.grad(pa) == tb.grad(pb));
}

TEST_CASE("sum of inputs has unit gradients and near-zero fd error") {
  const auto report = check_gradients(
      [](Tape& t, std::mt19937_64& rng) {
        const auto x = t.input(testsupport::random_matrix(4, 3, rng));
        BuiltGraph g;
        g.root = t.sum_entries(x);
        g.checked_inputs = {x};
        return g;
      },
      5, 31);
  CHECK(report.trials_run == 5);
  CHECK(report.max_rel_error < 1e-9);
}

TEST_CASE("per-op gradients match finite differences") {
  SUBCASE("affine") {
    const auto report = check_gradients(
        [](Tape& t, std::mt19937_64& rng) {
          const auto w = t.input(random_matrix(4, 3, rng));
          const auto x = t.input(random_matrix(3, 1, rng));
          const auto b = t.input(random_matrix(4, 1, rng));
          BuiltGraph g;
          g.root = t.sum_entries(t.sigmoid(t.affine(w, x, b)));
          g.checked_inputs = {w, x, b};
          return g;
        },
        10, 32);
    CHECK(report.trials_run == 10);
    CHECK(report.max_rel_error < 1e-6);
  }
  SUBCASE("softmax_cols") {
    const auto report = check_gradients(
        [](Tape& t, std::mt19937_64& rng) {
          const auto x = t.input(random_matrix(5, 2, rng, -2.0, 2.0));
          const auto y = t.softmax_cols(x);
          const auto w = t.input(random_matrix(5, 2, rng));
          BuiltGraph g;
          g.root = t.sum_entries(t.mul(y, w));  // weighted sum probes off-diagonal terms
          g.checked_inputs = {x, w};
          return g;
        },
        10, 33);
    CHECK(report.max_rel_error < 1e-6);
  }
  SUBCASE("grouped_max") {
    const auto report = check_gradients(
        [](Tape& t, std::mt19937_64& rng) {
          const auto p = t.input(random_matrix(4, 1, rng, 0.0, 1.0));
          BuiltGraph g;
          g.root = t.sum_entries(t.grouped_max(p, two_groups()));
          g.checked_inputs = {p};
          return g;
        },
        20, 34);
    CHECK(report.trials_run + report.trials_skipped == 20);
    CHECK(report.trials_run > 0);
    CHECK(report.max_rel_error < 1e-6);
  }
  SUBCASE("grouped_avg") {
    const auto report = check_gradients(
        [](Tape& t, std::mt19937_64& rng) {
          const auto p = t.input(random_matrix(4, 1, rng, 0.0, 1.0));
          BuiltGraph g;
          g.root = t.sum_entries(t.grouped_avg(p, two_groups()));
          g.checked_inputs = {p};
          return g;
        },
        10, 35);
    CHECK(report.max_rel_error < 1e-6);
  }
  SUBCASE("matvec_t") {
    const auto report = check_gradients(
        [](Tape& t, std::mt19937_64& rng) {
          const auto w = t.input(random_matrix(4, 2, rng));
          const auto p = t.input(random_matrix(4, 3, rng));
          BuiltGraph g;
          g.root = t.sum_entries(t.tanh(t.matvec_t(w, p)));
          g.checked_inputs = {w, p};
          return g;
        },
        10, 36);
    CHECK(report.max_rel_error < 1e-6);
  }
  SUBCASE("gather_parent, mul, scale, reshape, concat") {
    const auto report = check_gradients(
        [](Tape& t, std::mt19937_64& rng) {
          const auto c = t.input(random_matrix(2, 1, rng));
          const auto up = t.gather_parent(c, two_groups());
          const auto p = t.input(random_matrix(4, 1, rng));
          const auto prod = t.mul(up, p);
          const auto wide = t.concat_cols({prod, t.scale(prod, -0.5)});
          const auto flat = t.reshape(wide, 8, 1);
          BuiltGraph g;
          g.root = t.sum_entries(t.sigmoid(flat));
          g.checked_inputs = {c, p};
          return g;
        },
        10, 37);
    CHECK(report.max_rel_error < 1e-6);
  }
}

TEST_CASE("composite loss graph matches finite differences") {
  const auto report = check_gradients(
      [](Tape& t, std::mt19937_64& rng) {
        const auto w = t.input(random_matrix(5, 3, rng));
        const auto x = t.input(random_matrix(3, 1, rng));
        const auto b = t.input(random_matrix(5, 1, rng));
        const auto p = t.sigmoid(t.affine(w, x, b));
        BuiltGraph g;
        g.root = t.masked_bce(p, random_states(5, 1, rng, 0.3));
        g.checked_inputs = {w, x, b};
        return g;
      },
      20, 38);
  CHECK(report.trials_run == 20);
  CHECK(report.max_rel_error < 1e-4);
}

TEST_CASE("exact ties are excluded from gradient checking") {
  const auto report = check_gradients(
      [](Tape& t, std::mt19937_64&) {
        const Hierarchy& h = two_groups();
        const auto p = t.input(Matrix::column({0.5, 0.5, 0.1, 0.4}));
        BuiltGraph g;
        g.root = t.sum_entries(t.grouped_max(p, h));
        g.checked_inputs = {p};
        return g;
      },
      3, 39);
  CHECK(report.trials_run == 0);
  CHECK(report.trials_skipped == 3);
}

TEST_CASE("backward requires a scalar root") {
  Tape t;
  const auto x = t.input(Matrix::column({1, 2}));
  CHECK_THROWS_AS(t.backward(x), NonScalarRoot);
}

TEST_CASE("repeated backward doubles gradients exactly") {
  std::mt19937_64 rng = make_rng(23);
  Tape t;
  const auto w = t.input(random_matrix(3, 2, rng));
  const auto x = t.input(random_matrix(2, 1, rng));
  const auto b = t.input(random_matrix(3, 1, rng));
  const auto root = t.masked_bce(t.sigmoid(t.affine(w, x, b)), random_states(3, 1, rng, 0.2));

  t.zero_grads();
  t.backward(root);
  const Matrix once = t.grad(w);
  t.backward(root);
  const Matrix twice = t.grad(w);
  for (std::size_t e = 0; e < once.size(); ++e) {
    CHECK(twice.data()[e] == 2.0 * once.data()[e]);
  }

  t.zero_grads();
  for (std::size_t e = 0; e < once.size(); ++e) CHECK(t.grad(w).data()[e] == 0.0);
  t.backward(root);
  CHECK(t.grad(w) == once);
}

#include <doctest.h>

#include <chrono>
#include <random>

#include "missa/error.hpp"
#include "missa/experiment.hpp"
#include "missa/markov.hpp"
#include "oracles.hpp"

using namespace missa;

namespace {

Matrix swap2() {
  Matrix p(2, 2);
  p << 0, 1, 1, 0;
  return p;
}

// 0-based copy of a 1-based label list.
StateSet states(std::initializer_list<int> one_based) {
  StateSet s;
  for (int v : one_based) s.push_back(v - 1);
  return s;
}

double max_abs(const Matrix& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace

TEST_CASE("validate_stochastic accepts identity and permutations") {
  CHECK_NOTHROW(validate_stochastic(Matrix::Identity(2, 2)));
  CHECK_NOTHROW(validate_stochastic(swap2()));
}

TEST_CASE("validate_stochastic reports row and deviation") {
  Matrix p(2, 2);
  p << 0.5, 0.6, 0, 1;
  try {
    validate_stochastic(p);
    FAIL("expected RowSumError");
  } catch (const RowSumError& e) {
    CHECK(e.code() == ErrorCode::RowSumViolation);
    CHECK(e.row() == 1);
    CHECK(e.deviation() == doctest::Approx(0.1).epsilon(1e-12));
  }
}

TEST_CASE("validate_stochastic rejects negative, non-square and non-finite input") {
  Matrix neg(2, 2);
  neg << 1.2, -0.2, 0, 1;
  try {
    validate_stochastic(neg);
    FAIL("expected NegativeEntry");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NegativeEntry);
  }
  CHECK_THROWS_AS(validate_stochastic(Matrix::Zero(2, 3)), Error);
  CHECK_THROWS_AS(validate_stochastic(Matrix(0, 0)), Error);
  Matrix nan = Matrix::Identity(2, 2);
  nan(0, 1) = std::nan("");
  CHECK_THROWS_AS(validate_stochastic(nan), Error);
}

TEST_CASE("validated entries are unchanged") {
  const Matrix raw = study::transition_matrix().matrix();
  CHECK(validate_stochastic(raw).matrix() == raw);
}

TEST_CASE("decompose: nine-state illustration") {
  const auto d = decompose(study::illustration_matrix());
  REQUIRE(d.classes.size() == 2);
  CHECK(d.classes[0] == states({1, 2, 3, 4}));
  CHECK(d.classes[1] == states({5, 6, 7}));
  CHECK(d.class_periods == std::vector<int>{2, 3});
  CHECK(d.transient == states({8, 9}));
  CHECK(d.global_period == 6);
}

TEST_CASE("decompose: seven-state study matrix") {
  const auto d = decompose(study::transition_matrix());
  REQUIRE(d.classes.size() == 2);
  CHECK(d.classes[0] == states({1, 2, 3, 4}));
  CHECK(d.classes[1] == states({5, 6, 7}));
  CHECK(d.class_periods == std::vector<int>{2, 1});
  CHECK(d.transient.empty());
  CHECK(d.global_period == 2);
}

TEST_CASE("decompose: identity has singleton aperiodic classes") {
  const auto d = decompose(validate_stochastic(Matrix::Identity(3, 3)));
  CHECK(d.classes == std::vector<StateSet>{{0}, {1}, {2}});
  CHECK(d.class_periods == std::vector<int>{1, 1, 1});
  CHECK(d.global_period == 1);
  CHECK(d.transient.empty());
  CHECK(d.class_of(2) == 2);
}

TEST_CASE("cesaro_limit closed forms") {
  const auto p = validate_stochastic(swap2());
  CHECK(max_abs(cesaro_limit(classify(p), p) - Matrix::Constant(2, 2, 0.5)) < 1e-15);
  const auto id = validate_stochastic(Matrix::Identity(4, 4));
  CHECK(cesaro_limit(classify(id), id) == Matrix::Identity(4, 4));
}

TEST_CASE("cesaro_limit of the illustration matches exact rationals") {
  // Frozen from an exact rational solve: stationary vectors (19/58, 5/29,
  // 25/116, 33/116) and (1/3, 1/3, 1/3); state 8 is absorbed into R_1 with
  // probability 1/3, state 9 with probability 1/10.
  const auto d = decompose(study::illustration_matrix());
  const double pi1[] = {19.0 / 58, 5.0 / 29, 25.0 / 116, 33.0 / 116};
  for (int i : {0, 1, 2, 3}) {
    for (int j = 0; j < 4; ++j) CHECK(d.cesaro(i, j) == doctest::Approx(pi1[j]).epsilon(1e-13));
  }
  for (int j = 0; j < 4; ++j) {
    CHECK(d.cesaro(7, j) == doctest::Approx(pi1[j] / 3).epsilon(1e-13));
    CHECK(d.cesaro(8, j) == doctest::Approx(pi1[j] / 10).epsilon(1e-13));
  }
  for (int j = 4; j < 7; ++j) {
    CHECK(d.cesaro(4, j) == doctest::Approx(1.0 / 3).epsilon(1e-13));
    CHECK(d.cesaro(7, j) == doctest::Approx(2.0 / 9).epsilon(1e-13));
    CHECK(d.cesaro(8, j) == doctest::Approx(0.3).epsilon(1e-13));
  }
  CHECK(d.cesaro.col(7).cwiseAbs().maxCoeff() == 0.0);
  CHECK(d.cesaro.col(8).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("cesaro_limit_oracle") {
  const auto id = validate_stochastic(Matrix::Identity(3, 3));
  CHECK(cesaro_limit_oracle(id, 17) == Matrix::Identity(3, 3));
  const auto p = validate_stochastic(swap2());
  CHECK(max_abs(cesaro_limit_oracle(p, 1000) - Matrix::Constant(2, 2, 0.5)) < 1e-3);
  CHECK(cesaro_limit_oracle(p, 1) == Matrix::Identity(2, 2));
}

TEST_CASE("cesaro_limit agrees with the power-averaging oracle on the illustration") {
  const auto p = study::illustration_matrix();
  const auto d = decompose(p);
  CHECK(max_abs(cesaro_limit_oracle(p, 100000) - d.cesaro) < 1e-3);
}

TEST_CASE("power_limit") {
  const auto id = validate_stochastic(Matrix::Identity(3, 3));
  CHECK(power_limit(classify(id), id) == Matrix::Identity(3, 3));
  const auto swap = validate_stochastic(swap2());
  CHECK(power_limit(classify(swap), swap) == Matrix::Identity(2, 2));

  const auto p = study::transition_matrix();
  const auto d = decompose(p);
  const Matrix p2 = p.matrix() * p.matrix();
  CHECK((d.power_limit * p2 - d.power_limit).lpNorm<Eigen::Infinity>() <= 1e-10);
}

TEST_CASE("power_limit reports NoConvergence when the cap is too small") {
  Matrix slow(2, 2);
  slow << 0.999, 0.001, 0.001, 0.999;
  const auto p = validate_stochastic(slow);
  try {
    power_limit(classify(p), p, {1e-12, 2});
    FAIL("expected NoConvergence");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NoConvergence);
  }
}

TEST_CASE("limiting_distribution") {
  const auto d = decompose(study::transition_matrix());
  // Stationary of the aperiodic class: (23/54, 11/27, 1/6), exact solve.
  const Vector pi = limiting_distribution(Vector::Unit(7, 4), d);
  CHECK(pi.head(4).cwiseAbs().maxCoeff() == 0.0);
  CHECK(pi(4) == doctest::Approx(23.0 / 54).epsilon(1e-13));
  CHECK(pi(5) == doctest::Approx(11.0 / 27).epsilon(1e-13));
  CHECK(pi(6) == doctest::Approx(1.0 / 6).epsilon(1e-13));

  const auto id = decompose(validate_stochastic(Matrix::Identity(3, 3)));
  CHECK(limiting_distribution(Vector::Unit(3, 1), id) == Vector::Unit(3, 1));

  const auto nine = decompose(study::illustration_matrix());
  const Vector pi9 = limiting_distribution(Vector::Unit(9, 0), nine);
  CHECK(pi9.head(4).sum() == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(pi9.tail(5).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("limiting_distribution rejects invalid input") {
  const auto d = decompose(study::transition_matrix());
  auto code_of = [&](const Vector& v) {
    try {
      limiting_distribution(v, d);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::ParseError;
  };
  CHECK(code_of(Vector::Unit(6, 0)) == ErrorCode::InvalidDistribution);
  CHECK(code_of(Vector::Constant(7, 0.2)) == ErrorCode::InvalidDistribution);
  Vector neg = Vector::Unit(7, 0) * 1.5;
  neg(1) = -0.5;
  CHECK(code_of(neg) == ErrorCode::InvalidDistribution);
}

TEST_CASE("step follows point masses and absorbing states") {
  const auto cyc = validate_stochastic([] {
    Matrix c = Matrix::Zero(4, 4);
    for (int i = 0; i < 4; ++i) c(i, (i + 1) % 4) = 1.0;
    return c;
  }());
  ChainState chain(2, 99, 0);
  for (int t = 0; t < 20; ++t) {
    const int before = chain.current();
    CHECK(step(chain, cyc) == (before + 1) % 4);
  }
  Matrix absorbing = Matrix::Identity(2, 2);
  absorbing.row(0) << 0.5, 0.5;
  const auto ab = validate_stochastic(absorbing);
  ChainState stuck(1, 5, 3);
  for (int t = 0; t < 50; ++t) CHECK(step(stuck, ab) == 1);
}

TEST_CASE("step visit frequencies converge to the limiting distribution") {
  const auto p = study::transition_matrix();
  const auto d = decompose(p);
  ChainState chain(0, 2024, 0);
  Vector visits = Vector::Zero(7);
  const long horizon = 1000000;
  for (long t = 0; t < horizon; ++t) visits(step(chain, p)) += 1.0;
  visits /= static_cast<double>(horizon);
  CHECK((visits - limiting_distribution(Vector::Unit(7, 0), d)).lpNorm<Eigen::Infinity>() < 5e-3);
}

TEST_CASE("identical seeds give identical trajectories; streams are per chain") {
  const auto p = study::transition_matrix();
  ChainState a(0, 11, 0), b(0, 11, 0), other(0, 11, 1);
  bool differs = false;
  for (int t = 0; t < 1000; ++t) {
    const int sa = step(a, p);
    CHECK(sa == step(b, p));
    differs |= sa != step(other, p);
  }
  CHECK(differs);
}

TEST_CASE("from_distribution samples only the support") {
  Vector pi = Vector::Zero(5);
  pi(1) = 0.25;
  pi(3) = 0.75;
  int hits[5] = {};
  for (std::uint64_t s = 0; s < 2000; ++s) hits[ChainState::from_distribution(pi, s, 0).current()]++;
  CHECK(hits[0] + hits[2] + hits[4] == 0);
  CHECK(hits[3] > hits[1]);
}

TEST_CASE("unreachable classes are detected") {
  const auto p = study::illustration_matrix();
  const auto d = decompose(p);
  Vector only_r1 = Vector::Zero(9);
  only_r1(0) = only_r1(1) = 0.5;
  const std::vector<Vector> bad{only_r1};
  CHECK(unreachable_classes(p, d, bad) == std::vector<int>{1});
  const std::vector<Vector> good{only_r1, Vector::Unit(9, 8)};
  CHECK(unreachable_classes(p, d, good).empty());
}

TEST_CASE("properties on random stochastic matrices") {
  std::mt19937_64 rng(42);
  for (int trial = 0; trial < 40; ++trial) {
    const int m = std::uniform_int_distribution<int>(1, 8)(rng);
    const auto p = validate_stochastic(oracle::random_stochastic(m, rng));
    const auto d = decompose(p);
    CAPTURE(trial);
    CAPTURE(p.matrix());

    // Partition of the state space.
    std::vector<int> seen(m, 0);
    for (const auto& c : d.classes) {
      for (int s : c) seen[s]++;
    }
    for (int s : d.transient) seen[s]++;
    CHECK(std::all_of(seen.begin(), seen.end(), [](int c) { return c == 1; }));

    long delta = 1;
    for (std::size_t v = 0; v < d.classes.size(); ++v) {
      const auto& cls = d.classes[v];
      // Closed.
      for (int i : cls) {
        double inside = 0.0;
        for (int j : cls) inside += p(i, j);
        CHECK(inside == doctest::Approx(1.0).epsilon(1e-12));
      }
      // Period equals the gcd of closed-walk lengths, and divides each one.
      CHECK(d.class_periods[v] == oracle::walk_period(p.matrix(), cls));
      for (int len : oracle::cycle_lengths(p.matrix(), cls.front(), 8)) {
        CHECK(len % d.class_periods[v] == 0);
      }
      delta = std::lcm(delta, static_cast<long>(d.class_periods[v]));
      // Identical rows within a class.
      for (int i : cls) CHECK(max_abs(d.cesaro.row(i) - d.cesaro.row(cls.front())) < 1e-12);
    }
    CHECK(d.global_period == delta);
    for (int t : d.transient) CHECK(d.cesaro.col(t).cwiseAbs().maxCoeff() == 0.0);
    CHECK(max_abs(d.cesaro.rowwise().sum() - Vector::Ones(m)) < 1e-12);

    // Invariance of the limits.
    CHECK(max_abs(d.cesaro * p.matrix() - d.cesaro) <= 1e-10);
    CHECK(max_abs(p.matrix() * d.cesaro - d.cesaro) <= 1e-10);
    const Matrix block = matrix_power(p.matrix(), d.global_period);
    CHECK(max_abs(d.power_limit * block - d.power_limit) <= 1e-10);
  }
}

TEST_CASE("decompose commutes with relabeling") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 25; ++trial) {
    const int m = std::uniform_int_distribution<int>(2, 8)(rng);
    const Matrix raw = oracle::random_stochastic(m, rng);
    std::vector<int> perm(m);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    Matrix relabeled(m, m);
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < m; ++j) relabeled(perm[i], perm[j]) = raw(i, j);
    }
    const auto a = decompose(validate_stochastic(raw));
    const auto b = decompose(validate_stochastic(relabeled));

    auto mapped = [&](const StateSet& s) {
      StateSet out;
      for (int i : s) out.push_back(perm[i]);
      std::sort(out.begin(), out.end());
      return out;
    };
    REQUIRE(a.classes.size() == b.classes.size());
    std::vector<std::pair<StateSet, int>> expected, actual;
    for (std::size_t v = 0; v < a.classes.size(); ++v) {
      expected.emplace_back(mapped(a.classes[v]), a.class_periods[v]);
      actual.emplace_back(b.classes[v], b.class_periods[v]);
    }
    std::sort(expected.begin(), expected.end());
    std::sort(actual.begin(), actual.end());
    CHECK(expected == actual);
    CHECK(mapped(a.transient) == b.transient);
    CHECK(a.global_period == b.global_period);
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < m; ++j) {
        CHECK(std::abs(a.cesaro(i, j) - b.cesaro(perm[i], perm[j])) < 1e-12);
      }
    }
  }
}

TEST_CASE("decomposing the illustration takes well under a millisecond") {
  const auto p = study::illustration_matrix();
  const auto start = std::chrono::steady_clock::now();
  const auto d = decompose(p);
  const auto elapsed = std::chrono::steady_clock::now() - start;
  CHECK(d.global_period == 6);
  CHECK(elapsed < std::chrono::milliseconds(1));
}

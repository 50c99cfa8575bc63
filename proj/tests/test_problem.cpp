#include <doctest.h>

#include <random>

#include "missa/error.hpp"
#include "missa/experiment.hpp"
#include "missa/problem.hpp"
#include "oracles.hpp"

using namespace missa;

namespace {

Vector random_in(const Box& box, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Vector x(box.dim());
  for (int j = 0; j < box.dim(); ++j) {
    x(j) = box.lower()(j) + u(rng) * (box.upper()(j) - box.lower()(j));
  }
  return x;
}

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

}  // namespace

TEST_CASE("l1_value and l1_subgradient basics") {
  const L1Component c(vec({1, 0}), 0.0);
  CHECK(l1_value(c, vec({3, 5})) == 3.0);
  CHECK(l1_subgradient(c, vec({3, 5})) == vec({1, 0}));
  CHECK(l1_subgradient(c, vec({-3, 5})) == vec({-1, 0}));
  // Exactly at the kink the rule returns the zero vector.
  CHECK(l1_value(c, vec({0, 7})) == 0.0);
  CHECK(l1_subgradient(c, vec({0, 7})) == vec({0, 0}));
}

TEST_CASE("l1_value on a study row matches a direct dot product") {
  const Matrix a = study::system_matrix();
  const Box box = study::feasible_box();
  const Vector b = a * box.midpoint();
  const L1Component row3(a.row(2).transpose(), b(2));
  const Vector x = box.upper();
  double dot = 0.0, offset = 0.0;
  for (int j = 0; j < 20; ++j) {
    dot += a(2, j) * x(j);
    offset += a(2, j) * 0.5 * (box.lower()(j) + box.upper()(j));
  }
  CHECK(l1_value(row3, x) == doctest::Approx(std::abs(dot - offset)).epsilon(1e-14));
  CHECK(l1_value(row3, box.midpoint()) == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("subgradient inequality holds on random samples") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n01;
  for (int trial = 0; trial < 200; ++trial) {
    Vector a(5), x(5);
    for (int j = 0; j < 5; ++j) {
      a(j) = n01(rng);
      x(j) = n01(rng);
    }
    const double b = n01(rng);
    const L1Component c(a, b);
    const Vector g = l1_subgradient(c, x);
    if (c.residual(x) < 0.0) CHECK(g == -a);
    CHECK(g.norm() <= a.norm() + 1e-15);
    for (int s = 0; s < 100; ++s) {
      Vector y(5);
      for (int j = 0; j < 5; ++j) y(j) = 3.0 * n01(rng);
      CHECK(l1_value(c, y) >= l1_value(c, x) + g.dot(y - x) - 1e-12);
    }
  }
}

TEST_CASE("objective") {
  const Matrix a = study::system_matrix();
  Box box = study::feasible_box();
  const Vector y = box.midpoint();
  ConvexSumProblem problem = make_l1_problem(a, a * y, box);

  SUBCASE("all weight on one component") {
    problem.set_weights(Vector::Unit(7, 4));
    const Vector x = box.upper();
    CHECK(objective(problem, x) == doctest::Approx(problem.component(4).value(x)));
  }
  SUBCASE("zero at the generator of b") {
    CHECK(objective(problem, y) == doctest::Approx(0.0).epsilon(1e-15));
  }
  SUBCASE("matches a flat re-implementation") {
    std::mt19937_64 rng(8);
    Vector w(7);
    w << 0.1, 0.2, 0.05, 0.15, 0.3, 0.1, 0.1;
    problem.set_weights(w);
    const auto rows = oracle::rows_of(a);
    const auto b = oracle::to_std(a * y);
    for (int t = 0; t < 100; ++t) {
      const Vector x = random_in(box, rng);
      CHECK(objective(problem, x) ==
            doctest::Approx(oracle::flat_objective(rows, b, oracle::to_std(w), oracle::to_std(x)))
                .epsilon(1e-13));
    }
  }
}

TEST_CASE("set_weights rejects non-probability vectors") {
  ConvexSumProblem problem = make_l1_problem(Matrix::Identity(2, 2), Vector::Zero(2),
                                             Box(Vector::Zero(2), Vector::Ones(2)));
  CHECK_THROWS_AS(problem.set_weights(vec({0.5, 0.6})), Error);
  CHECK_THROWS_AS(problem.set_weights(vec({1.5, -0.5})), Error);
  CHECK_THROWS_AS(problem.set_weights(vec({1.0})), Error);
}

TEST_CASE("Box validation") {
  CHECK_THROWS_AS(Box(vec({0, 1}), vec({1, 0})), Error);
  CHECK_THROWS_AS(Box(vec({0}), vec({1, 2})), Error);
  CHECK_NOTHROW(Box(vec({1, 1}), vec({1, 1})));
}

TEST_CASE("project") {
  const Box box = study::feasible_box();
  SUBCASE("inside points are unchanged") {
    const Vector x = box.midpoint();
    CHECK(project(box, x) == x);
  }
  SUBCASE("origin clamps coordinates with positive lower bounds") {
    const Vector p = project(box, Vector::Zero(20));
    CHECK(p(5) == 0.1);
    CHECK(p(6) == 0.3);
    CHECK(p(12) == 0.3);
    CHECK(p(0) == 0.0);
    CHECK(box.contains(p));
  }
  SUBCASE("idempotent and nonexpansive") {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> n01;
    for (int t = 0; t < 500; ++t) {
      Vector x(20), z(20);
      for (int j = 0; j < 20; ++j) {
        x(j) = 3 * n01(rng);
        z(j) = 3 * n01(rng);
      }
      const Vector px = project(box, x);
      CHECK(box.contains(px));
      CHECK(project(box, px) == px);
      CHECK((px - project(box, z)).norm() <= (x - z).norm() + 1e-15);
    }
  }
}

TEST_CASE("weights_from_chains on the study chains") {
  // Exact rationals from the class stationary vectors, halved for two chains.
  const double expected[] = {97.0 / 804, 26.0 / 201, 35.0 / 804, 83.0 / 402,
                             23.0 / 108, 11.0 / 54,  1.0 / 12};
  const auto d = decompose(study::transition_matrix());
  const std::vector<Vector> init{Vector::Unit(7, 0), Vector::Unit(7, 4)};
  const Vector w = weights_from_chains(init, d);
  for (int i = 0; i < 7; ++i) CHECK(w(i) == doctest::Approx(expected[i]).epsilon(1e-13));
  CHECK(w.sum() == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("weights_from_chains on the illustration zeroes transient agents") {
  // Exact: averaging the four valid initial distributions.
  const double expected[] = {817.0 / 6960, 43.0 / 696, 215.0 / 2784, 473.0 / 4640,
                             77.0 / 360,  77.0 / 360, 77.0 / 360,   0.0, 0.0};
  const auto d = decompose(study::illustration_matrix());
  Vector half = Vector::Zero(9);
  half(0) = half(1) = 0.5;
  const std::vector<Vector> init{half, Vector::Unit(9, 4), Vector::Unit(9, 7), Vector::Unit(9, 8)};
  const Vector w = weights_from_chains(init, d);
  for (int i = 0; i < 9; ++i) CHECK(w(i) == doctest::Approx(expected[i]).epsilon(1e-13));
  CHECK(w(7) == 0.0);
  CHECK(w(8) == 0.0);
}

TEST_CASE("weights_from_chains edge cases") {
  const auto id = decompose(validate_stochastic(Matrix::Identity(4, 4)));
  const std::vector<Vector> single{Vector::Unit(4, 2)};
  CHECK(weights_from_chains(single, id) == Vector::Unit(4, 2));
  CHECK_THROWS_AS(weights_from_chains(std::vector<Vector>{}, id), Error);
  const std::vector<Vector> bad{Vector::Constant(4, 0.3)};
  CHECK_THROWS_AS(weights_from_chains(bad, id), Error);
}

TEST_CASE("weights are probability vectors with no transient mass on random chains") {
  std::mt19937_64 rng(77);
  for (int t = 0; t < 40; ++t) {
    const int m = std::uniform_int_distribution<int>(1, 8)(rng);
    const auto p = validate_stochastic(oracle::random_stochastic(m, rng));
    const auto d = decompose(p);
    std::vector<Vector> init;
    const int chains = std::uniform_int_distribution<int>(1, 3)(rng);
    for (int c = 0; c < chains; ++c) {
      Vector pi = Vector::Zero(m);
      for (int i = 0; i < m; ++i) pi(i) = std::uniform_int_distribution<int>(0, 3)(rng);
      if (pi.sum() == 0.0) pi(0) = 1.0;
      init.push_back(pi / pi.sum());
    }
    const Vector w = weights_from_chains(init, d);
    CHECK((w.array() >= 0.0).all());
    CHECK(w.sum() == doctest::Approx(1.0).epsilon(1e-12));
    for (int s : d.transient) CHECK(w(s) == 0.0);
  }
}

TEST_CASE("single-chain visit frequencies match each chain's Cesaro distribution") {
  // A trajectory's time average equals pi_l^inf only when the start cannot
  // split between classes, which holds for every chain used here.
  struct Case {
    TransitionMatrix p;
    Vector pi0;
  };
  Vector r1 = Vector::Zero(9);
  r1(0) = r1(1) = 0.5;
  const std::vector<Case> cases{{study::transition_matrix(), Vector::Unit(7, 0)},
                                {study::transition_matrix(), Vector::Unit(7, 4)},
                                {study::illustration_matrix(), r1},
                                {study::illustration_matrix(), Vector::Unit(9, 4)}};
  std::uint64_t seed = 100;
  for (const auto& c : cases) {
    const auto d = decompose(c.p);
    auto chain = ChainState::from_distribution(c.pi0, seed++, 0);
    const long horizon = 1000000;
    Vector visits = Vector::Zero(c.p.size());
    for (long t = 0; t < horizon; ++t) visits(step(chain, c.p)) += 1.0;
    visits /= static_cast<double>(horizon);
    CHECK((visits - limiting_distribution(c.pi0, d)).lpNorm<Eigen::Infinity>() < 5e-3);
  }
}

TEST_CASE("sample_noise") {
  RandomStream stream(1, 0, StreamPurpose::Noise);
  SUBCASE("zero") {
    CHECK(sample_noise(NoiseModel::zero(), 5, 20, stream) == Vector::Zero(20));
  }
  SUBCASE("uniform decaying stays inside [0, 1/k]") {
    for (int t = 0; t < 1000; ++t) {
      const Vector e = sample_noise(NoiseModel::uniform_decaying(), 10, 20, stream);
      CHECK(e.minCoeff() >= 0.0);
      CHECK(e.maxCoeff() <= 0.1);
    }
  }
  SUBCASE("uniform scaled mean") {
    const int draws = 100000;
    Vector sum = Vector::Zero(4);
    for (int t = 0; t < draws; ++t) sum += sample_noise(NoiseModel::uniform_scaled(0.1), 1, 4, stream);
    sum /= draws;
    for (int j = 0; j < 4; ++j) CHECK(std::abs(sum(j) - 0.05) <= 0.005);
  }
}

TEST_CASE("noise second moments are within n nu_k^2 plus three standard errors") {
  const int n = 20, draws = 100000;
  const long k = 4;
  for (const auto model : {NoiseModel::zero(), NoiseModel::uniform_decaying(),
                           NoiseModel::uniform_scaled(0.1), NoiseModel::uniform_scaled(0.01),
                           NoiseModel::normal_scaled(0.1), NoiseModel::normal_scaled(0.01)}) {
    RandomStream stream(9, 1, StreamPurpose::Noise);
    double sum = 0.0, sum_sq = 0.0;
    for (int t = 0; t < draws; ++t) {
      const double e2 = sample_noise(model, k, n, stream).squaredNorm();
      sum += e2;
      sum_sq += e2 * e2;
    }
    const double mean = sum / draws;
    const double se = std::sqrt(std::max(0.0, sum_sq / draws - mean * mean) / draws);
    const double nu = model.bound(k);
    CAPTURE(to_string(model.kind));
    CHECK(mean <= n * nu * nu + 3 * se);
    CHECK(std::isfinite(nu));
  }
  CHECK(NoiseModel::zero().summable());
  CHECK(NoiseModel::uniform_decaying().summable());
  CHECK_FALSE(NoiseModel::normal_scaled(0.1).summable());
  CHECK(NoiseModel::uniform_decaying().bound(10) == 0.1);
}

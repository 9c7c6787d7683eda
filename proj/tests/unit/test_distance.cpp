#include "oracles.hpp"

#include "lrhmm/distance.hpp"
#include "lrhmm/training.hpp"

#include <doctest.h>

using namespace lrhmm;

TEST_SUITE("distance") {

TEST_CASE("identical set and model give exactly zero") {
  std::mt19937_64 rng(71);
  for (int k = 0; k < 50; ++k) {
    const auto m = oracle::random_model(rng, 4, 1 + k % 2);
    std::vector<ObservationSequence> set;
    for (int i = 0; i < 5; ++i) set.push_back(oracle::sample_sequence(rng, m, 4));
    const auto r = cross_fitness_distance(set, set, m, m);
    CHECK(r.distance == 0.0);
    CHECK(r.ll_11 == r.ll_12);
  }
}

TEST_CASE("joint swap is bit-exact and terms are sums of log-likelihoods") {
  std::mt19937_64 rng(73);
  for (int k = 0; k < 100; ++k) {
    const auto m1 = oracle::random_model(rng, 4, 1);
    const auto m2 = oracle::random_model(rng, 4, 1);
    std::vector<ObservationSequence> s1, s2;
    for (int i = 0; i < 3; ++i) {
      s1.push_back(oracle::sample_sequence(rng, m1, 4));
      s2.push_back(oracle::sample_sequence(rng, m2, 3));
    }
    const auto a = cross_fitness_distance(s1, s2, m1, m2);
    const auto b = cross_fitness_distance(s2, s1, m2, m1);
    CHECK(a.distance == b.distance);
    double ll_12 = 0;
    for (const auto& s : s1) ll_12 += log_likelihood(s, m2);
    CHECK(a.ll_12 == ll_12);
    CHECK(a.ll_21 == b.ll_12);
  }
}

TEST_CASE("models trained on their own sets separate them") {
  const auto set1 = oracle::harmonic_set(81, 10, 25, 3.3, 0.1, 1);
  const auto set2 = oracle::harmonic_set(82, 10, 25, 4.65, 0.1, 2);
  TrainingConfig cfg;
  cfg.max_iterations = 20;
  const auto m1 = baum_welch(set1, cfg).model;
  const auto m2 = baum_welch(set2, cfg).model;
  const auto r = cross_fitness_distance(set1, set2, m1, m2);
  CHECK(r.distance > 0);
  CHECK(r.ll_11 > r.ll_12);
  CHECK(r.ll_22 > r.ll_21);
}

TEST_CASE("distance grows with the class difference") {
  TrainingConfig cfg;
  cfg.max_iterations = 10;
  const auto base = oracle::harmonic_set(91, 10, 25, 3.3, 0.2, 1);
  const auto m1 = baum_welch(base, cfg).model;
  double previous = -1;
  for (double omega : {3.3, 3.8, 4.6}) {
    const auto other = oracle::harmonic_set(92, 10, 25, omega, 0.2, 2);
    const auto m2 = baum_welch(other, cfg).model;
    const double d = cross_fitness_distance(base, other, m1, m2).distance;
    CHECK(d > previous);
    previous = d;
  }
}

TEST_CASE("errors name the set and trial") {
  std::mt19937_64 rng(97);
  const auto m = oracle::random_model(rng, 3, 1);
  std::vector<ObservationSequence> good{oracle::random_sequence(rng, 3, 1)};
  std::vector<ObservationSequence> bad{ObservationSequence(RowMatrix<double>::Zero(3, 2), 0.1, 2, "x", 42)};
  try {
    cross_fitness_distance(good, bad, m, m);
    FAIL("expected a usage error");
  } catch (const UsageError& e) {
    const std::string what = e.what();
    CHECK(what.find("set 2") != std::string::npos);
    CHECK(what.find("trial 42") != std::string::npos);
  }
  CHECK_THROWS_AS(cross_fitness_distance(std::vector<ObservationSequence>{}, good, m, m), UsageError);
}

}  // TEST_SUITE

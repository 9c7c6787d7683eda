#include "oracles.hpp"

#include "lrhmm/dataio.hpp"
#include "lrhmm/training.hpp"

#include <algorithm>

#include <doctest.h>

using namespace lrhmm;

namespace {

/// Scaled rigid-channel sequences from the synthetic generator.
std::vector<ObservationSequence> rigid_set(std::uint64_t seed, Index count, double duration_s) {
  SyntheticConfig s;
  s.omega = 1.05 * EIGEN_PI;
  s.amplitude = 100.0;
  s.noise_std = 12.0;
  s.dt = 0.025;
  s.duration_s = duration_s;
  s.n_sequences = count;
  s.rng_seed = seed;
  s.random_start_phase = false;
  return preprocess(generate_synthetic(s, {})[0].sequences, 100.0, {0}, false);
}

}  // namespace

TEST_SUITE("training") {

TEST_CASE("initialization shape") {
  const auto seqs = oracle::harmonic_set(1, 3, 5, 3.0, 0.1);
  const auto m = initialize_model(seqs, TrainingConfig{});
  CHECK(m.n_states == 5);
  CHECK(m.log_pi(0) == 0.0);
  for (Index j = 1; j < 5; ++j) CHECK(m.log_pi(j) == neg_inf<double>());
  for (Index i = 0; i < 4; ++i) {
    CHECK(std::exp(m.log_A(i, i)) == doctest::Approx(0.5));
    CHECK(std::exp(m.log_A(i, i + 1)) == doctest::Approx(0.5));
  }
  CHECK(m.log_A(4, 4) == 0.0);
  CHECK(validate_model(m).empty());
}

TEST_CASE("initialization moments and determinism") {
  const auto seqs = oracle::harmonic_set(2, 6, 10, 3.0, 0.3);
  TrainingConfig cfg;
  cfg.rng_seed = 99;
  const auto a = initialize_model(seqs, cfg);
  const auto b = initialize_model(seqs, cfg);
  cfg.rng_seed = 100;
  const auto c = initialize_model(seqs, cfg);
  bool any_diff = false;
  for (Index j = 0; j < 10; ++j) {
    CHECK(a.emission(j).mean()(0) == b.emission(j).mean()(0));
    any_diff |= a.emission(j).mean()(0) != c.emission(j).mean()(0);
    double mean = 0, var = 0;
    for (const auto& s : seqs) mean += s.values()(j, 0) / 6.0;
    for (const auto& s : seqs) var += (s.values()(j, 0) - mean) * (s.values()(j, 0) - mean) / 6.0;
    CHECK(std::abs(a.emission(j).mean()(0) - mean) <= 0.05 * std::sqrt(var));
    CHECK(a.emission(j).covariance()(0, 0) == doctest::Approx(var).epsilon(1e-5));
  }
  CHECK(any_diff);
}

TEST_CASE("inconsistent inputs are rejected") {
  auto seqs = oracle::harmonic_set(3, 3, 5, 3.0, 0.1);
  seqs.push_back(oracle::harmonic_set(4, 1, 6, 3.0, 0.1).front());
  CHECK_THROWS_AS(initialize_model(seqs, TrainingConfig{}), UsageError);
  CHECK_THROWS_AS(baum_welch(seqs, TrainingConfig{}), UsageError);
  CHECK_THROWS_AS(baum_welch(std::vector<ObservationSequence>{}, TrainingConfig{}), UsageError);
  TrainingConfig bad;
  bad.max_iterations = 0;
  CHECK_THROWS_AS(bad.validate(), UsageError);
  bad = TrainingConfig{};
  bad.loglik_rel_tolerance = 0;
  CHECK_THROWS_AS(bad.validate(), UsageError);
}

TEST_CASE("single state recovers the sample mean and biased covariance") {
  RowMatrix<double> a(1, 2), b(1, 2), c(1, 2);
  a << 1.0, 2.0;
  b << 3.0, -1.0;
  c << -0.5, 0.5;
  const std::vector<ObservationSequence> seqs{{a, 0.1, 1, "x", 0}, {b, 0.1, 1, "x", 1}, {c, 0.1, 1, "x", 2}};
  TrainingConfig cfg;
  cfg.max_iterations = 1;
  const auto r = baum_welch(seqs, cfg);
  Vector<double> mean = (a.row(0) + b.row(0) + c.row(0)).transpose() / 3.0;
  Matrix<double> cov = Matrix<double>::Zero(2, 2);
  for (const auto* x : {&a, &b, &c}) {
    const Vector<double> d = x->row(0).transpose() - mean;
    cov += d * d.transpose() / 3.0;
  }
  cov.diagonal().array() += std::max(1e-6 * cov.trace() / 2.0, 1e-9);
  CHECK((r.model.emission(0).mean() - mean).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((r.model.emission(0).covariance() - cov).cwiseAbs().maxCoeff() < 1e-12);

  // One update reaches the fixed point; the next changes nothing.
  cfg.max_iterations = 100;
  const auto full = baum_welch(seqs, cfg);
  CHECK(full.trace.converged);
  CHECK(full.trace.iterations_run <= 3);
  CHECK(full.model.emission(0).mean() == r.model.emission(0).mean());
}

TEST_CASE("EM trace is non-decreasing and structure is preserved") {
  const auto seqs = rigid_set(5, 30, 1.0);
  TrainingConfig cfg;
  cfg.max_iterations = 25;
  cfg.rng_seed = 8;
  const auto start = initialize_model(seqs, cfg);
  const auto r = baum_welch(seqs, cfg);
  const auto& ll = r.trace.log_likelihoods;
  REQUIRE(ll.size() >= 2);
  for (std::size_t i = 1; i < ll.size(); ++i) CHECK(ll[i] >= ll[i - 1] - 1e-8);
  CHECK(ll.back() >= ll.front());
  CHECK(validate_model(r.model).empty());
  for (Index i = 0; i < r.model.n_states; ++i) {
    for (Index j = 0; j < r.model.n_states; ++j) {
      CHECK((start.log_A(i, j) == neg_inf<double>()) == (r.model.log_A(i, j) == neg_inf<double>()));
    }
  }
  CHECK(r.model.log_pi(0) == 0.0);
}

TEST_CASE("structural zeros inside the band stay zero") {
  const auto seqs = oracle::harmonic_set(6, 10, 12, 4.0, 0.2);
  TrainingConfig cfg;
  cfg.band_width = 2;
  cfg.max_iterations = 5;
  auto start = initialize_model(seqs, cfg);
  for (Index i = 0; i + 2 < start.n_states; i += 3) {
    start.log_A(i, i + 2) = neg_inf<double>();
    start.log_A(i, i) = start.log_A(i, i + 1) = std::log(0.5);
  }
  const auto r = baum_welch(std::span<const ObservationSequence>(seqs), start, cfg);
  for (Index i = 0; i + 2 < start.n_states; i += 3) CHECK(r.model.log_A(i, i + 2) == neg_inf<double>());
}

TEST_CASE("restarting from a converged model is a fixed point") {
  const auto seqs = rigid_set(7, 20, 0.5);
  TrainingConfig cfg;
  cfg.max_iterations = 1000;
  const auto first = baum_welch(seqs, cfg);
  REQUIRE(first.trace.converged);
  TrainingConfig again = cfg;
  again.max_iterations = 2;
  const auto second = baum_welch(std::span<const ObservationSequence>(seqs), first.model, again);
  REQUIRE(second.trace.log_likelihoods.size() == 2);
  const double a = second.trace.log_likelihoods[0], b = second.trace.log_likelihoods[1];
  CHECK(std::abs(b - a) < 1e-6 * std::abs(a));
}

TEST_CASE("permuting the training set is bit-identical") {
  auto seqs = oracle::harmonic_set(9, 12, 15, 4.0, 0.2);
  TrainingConfig cfg;
  cfg.max_iterations = 6;
  const auto a = baum_welch(seqs, cfg);
  std::mt19937_64 rng(1);
  std::shuffle(seqs.begin(), seqs.end(), rng);
  const auto b = baum_welch(seqs, cfg);
  CHECK(a.trace.log_likelihoods == b.trace.log_likelihoods);
  CHECK(a.model.log_A == b.model.log_A);
  for (Index j = 0; j < a.model.n_states; ++j) {
    CHECK(a.model.emission(j).mean() == b.model.emission(j).mean());
    CHECK(a.model.emission(j).covariance() == b.model.emission(j).covariance());
  }
}

TEST_CASE("a state without posterior mass aborts training") {
  // Band 1, N = T = 3 and a forced stay: states 1 and 2 are never visited.
  const auto seqs = oracle::harmonic_set(10, 4, 3, 4.0, 0.2);
  TrainingConfig cfg;
  auto start = initialize_model(seqs, cfg);
  start.log_A(0, 0) = 0.0;
  start.log_A(0, 1) = neg_inf<double>();
  try {
    baum_welch(std::span<const ObservationSequence>(seqs), start, cfg);
    FAIL("expected a degenerate-state error");
  } catch (const DegenerateStateError& e) {
    CHECK(e.state() == 1);
  }
}

TEST_CASE("N must equal T for training") {
  const auto seqs = oracle::harmonic_set(11, 4, 6, 4.0, 0.2);
  TrainingConfig cfg;
  const auto other = initialize_model(oracle::harmonic_set(12, 4, 5, 4.0, 0.2), cfg);
  CHECK_THROWS_AS(baum_welch(std::span<const ObservationSequence>(seqs), other, cfg), UsageError);
}

}  // TEST_SUITE

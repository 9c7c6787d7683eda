#include "oracles.hpp"

#include "lrhmm/forward_backward.hpp"
#include "lrhmm/inference.hpp"

#include <doctest.h>

using namespace lrhmm;

TEST_SUITE("forward_backward") {

TEST_CASE("single state: likelihood is the sum of emission densities, gamma is one") {
  LrHmmModel<double> m;
  m.n_states = 1;
  m.n_dims = 1;
  m.log_pi = canonical_log_pi<double>(1);
  m.log_A = uniform_band_log_transitions<double>(1, 1);
  m.emissions.emplace_back(Vector<double>::Constant(1, 0.5), Matrix<double>::Constant(1, 1, 2.0));
  RowMatrix<double> v(3, 1);
  v << 0.1, -0.4, 1.3;
  const ObservationSequence seq(v, 0.1);
  const auto fb = forward_backward(seq, m);
  double expected = 0;
  for (Index t = 0; t < 3; ++t) expected += gaussian_log_density(seq.step(t), m.emission(0));
  CHECK(fb.log_likelihood == doctest::Approx(expected).epsilon(1e-14));
  CHECK((fb.gamma.array() == 1.0).all());
}

TEST_CASE("matches path enumeration on random models") {
  std::mt19937_64 rng(11);
  for (int k = 0; k < 200; ++k) {
    const Index n = 1 + k % 4;
    const Index dims = 1 + (k / 4) % 2;
    const auto m = oracle::random_model(rng, n, dims);
    const Index steps = 1 + static_cast<Index>(rng() % static_cast<std::uint64_t>(n + 2));
    const auto seq = oracle::random_sequence(rng, steps, dims);
    const double expected = oracle::brute_force_log_likelihood(m, seq);
    if (!std::isfinite(expected)) {
      CHECK_THROWS_AS(forward_backward(seq, m), ModelInvalidError);
      continue;
    }
    const auto fb = forward_backward(seq, m);
    CHECK(std::abs(fb.log_likelihood - expected) < 1e-9);
  }
}

TEST_CASE("two states, two steps against the four paths") {
  std::mt19937_64 rng(5);
  auto m = oracle::random_model(rng, 2, 1);
  m.log_pi << 0.0, oracle::kNegInf;
  const auto seq = oracle::random_sequence(rng, 2, 1);
  double sum = 0;
  for (Index a = 0; a < 2; ++a) {
    for (Index b = 0; b < 2; ++b) {
      sum += std::exp(m.log_pi(a) + m.log_A(a, b) + oracle::emission(m, a, seq, 0) + oracle::emission(m, b, seq, 1));
    }
  }
  CHECK(forward_backward(seq, m).log_likelihood == doctest::Approx(std::log(sum)).epsilon(1e-12));
}

TEST_CASE("gamma rows are normalized and exactly zero outside the reachable band") {
  std::mt19937_64 rng(19);
  for (int k = 0; k < 100; ++k) {
    const Index n = 2 + k % 6;
    const auto m = oracle::random_model(rng, n, 1);
    const auto seq = oracle::random_sequence(rng, n, 1);
    const auto fb = forward_backward(seq, m);
    const auto reach = ReachableBand::of(m);
    for (Index t = 0; t < n; ++t) {
      CHECK(std::abs(fb.gamma.row(t).sum() - 1.0) < 1e-9);
      for (Index j = 0; j < n; ++j) {
        if (j < reach.first || j > reach.last(t)) CHECK(fb.gamma(t, j) == 0.0);
      }
    }
  }
}

TEST_CASE("gamma and xi agree with path enumeration") {
  std::mt19937_64 rng(23);
  for (int k = 0; k < 30; ++k) {
    const Index n = 2 + k % 3;
    const auto m = oracle::random_model(rng, n, 1);
    const auto seq = oracle::random_sequence(rng, n, 1);
    const double total = oracle::brute_force_log_likelihood(m, seq);
    Matrix<double> gamma = Matrix<double>::Zero(n, n);
    Matrix<double> xi = Matrix<double>::Zero(n, n);
    oracle::for_each_path(m, seq, [&](const std::vector<Index>& path, double lp) {
      const double w = std::exp(lp - total);
      for (Index t = 0; t < n; ++t) gamma(t, path[static_cast<std::size_t>(t)]) += w;
      for (Index t = 0; t + 1 < n; ++t) xi(path[static_cast<std::size_t>(t)], path[static_cast<std::size_t>(t + 1)]) += w;
    });
    const auto fb = forward_backward(seq, m);
    CHECK((fb.gamma - gamma).cwiseAbs().maxCoeff() < 1e-9);
    CHECK((fb.log_xi_sums.array().exp().matrix() - xi).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("long sequences do not underflow") {
  const Index n = 400;
  LrHmmModel<double> m;
  m.n_states = n;
  m.n_dims = 1;
  m.log_pi = canonical_log_pi<double>(n);
  m.log_A = uniform_band_log_transitions<double>(n, 1);
  for (Index j = 0; j < n; ++j) m.emissions.emplace_back(Vector<double>::Constant(1, 0.0), Matrix<double>::Constant(1, 1, 1e-4));
  RowMatrix<double> v = RowMatrix<double>::Constant(n, 1, 0.05);
  const auto fb = forward_backward(ObservationSequence(v, 0.01), m);
  CHECK(std::isfinite(fb.log_likelihood));
  // Every path sees the same emission, so the path probabilities sum to one.
  const double step = gaussian_log_density(Vector<double>::Constant(1, 0.05), m.emission(0));
  CHECK(fb.log_likelihood == doctest::Approx(double(n) * step).epsilon(1e-12));
  CHECK(fb.log_likelihood < -3000);
  CHECK(std::abs(fb.gamma.row(n - 1).sum() - 1.0) < 1e-9);
}

TEST_CASE("errors") {
  std::mt19937_64 rng(2);
  const auto m = oracle::random_model(rng, 3, 2);
  CHECK_THROWS_AS(forward_backward(oracle::random_sequence(rng, 3, 1), m), UsageError);
  auto broken = m;
  broken.emissions.pop_back();
  CHECK_THROWS_AS(forward_backward(oracle::random_sequence(rng, 3, 2), broken), ModelInvalidError);
}

}  // TEST_SUITE

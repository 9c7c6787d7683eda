#pragma once

// Independent reference implementations used by the tests. Nothing here calls
// the library's lattice or factorization code.

#include "lrhmm/model.hpp"
#include "lrhmm/observation.hpp"

#include <Eigen/Cholesky>
#include <Eigen/LU>
#include <Eigen/QR>

#include <cmath>
#include <limits>
#include <random>
#include <vector>

namespace oracle {

using lrhmm::Index;
using lrhmm::LrHmmModel;
using lrhmm::ObservationSequence;

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kPi = 3.14159265358979323846;

/// Gaussian log-density as a literal quadratic form with an LU inverse and
/// determinant.
inline double gaussian_log_density(const Eigen::VectorXd& x, const Eigen::VectorXd& mu, const Eigen::MatrixXd& s) {
  const Eigen::FullPivLU<Eigen::MatrixXd> lu(s);
  const Eigen::VectorXd d = x - mu;
  const double quad = d.dot(lu.inverse() * d);
  return -0.5 * double(x.size()) * std::log(2 * kPi) - 0.5 * std::log(lu.determinant()) - 0.5 * quad;
}

inline double emission(const LrHmmModel<double>& m, Index state, const ObservationSequence& seq, Index t) {
  const auto& g = m.emission(state);
  return gaussian_log_density(seq.values().row(t).transpose(), g.mean(), g.covariance());
}

/// Calls f(path, log_joint) for every state path with non-zero probability.
template <typename F>
void for_each_path(const LrHmmModel<double>& m, const ObservationSequence& seq, F&& f) {
  const Index n = m.n_states;
  const Index steps = seq.length();
  std::vector<Index> path(static_cast<std::size_t>(steps), 0);
  Index total = 1;
  for (Index t = 0; t < steps; ++t) total *= n;
  // Enumerate in lexicographic order so the first maximum found is the
  // lexicographically smallest path.
  for (Index code = 0; code < total; ++code) {
    Index rest = code;
    for (Index t = steps - 1; t >= 0; --t) {
      path[static_cast<std::size_t>(t)] = rest % n;
      rest /= n;
    }
    double lp = m.log_pi(path[0]);
    for (Index t = 1; t < steps && lp != kNegInf; ++t) lp += m.log_A(path[t - 1], path[t]);
    if (lp == kNegInf) continue;
    for (Index t = 0; t < steps; ++t) lp += emission(m, path[static_cast<std::size_t>(t)], seq, t);
    f(path, lp);
  }
}

inline double brute_force_log_likelihood(const LrHmmModel<double>& m, const ObservationSequence& seq) {
  std::vector<double> terms;
  for_each_path(m, seq, [&](const std::vector<Index>&, double lp) { terms.push_back(lp); });
  double peak = kNegInf;
  for (double v : terms) peak = std::max(peak, v);
  if (peak == kNegInf) return peak;
  double acc = 0;
  for (double v : terms) acc += std::exp(v - peak);
  return peak + std::log(acc);
}

struct BestPath {
  std::vector<Index> path;
  double log_prob = kNegInf;
};

inline BestPath brute_force_viterbi(const LrHmmModel<double>& m, const ObservationSequence& seq) {
  BestPath best;
  for_each_path(m, seq, [&](const std::vector<Index>& path, double lp) {
    if (best.path.empty() || lp > best.log_prob) {
      best.path = path;
      best.log_prob = lp;
    }
  });
  return best;
}

/// Random SPD matrix with eigenvalues in [0.2, 2.2].
inline Eigen::MatrixXd random_spd(std::mt19937_64& rng, Index dims) {
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> uni(0.2, 2.2);
  Eigen::MatrixXd q = Eigen::MatrixXd::NullaryExpr(dims, dims, [&] { return normal(rng); });
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(q);
  const Eigen::MatrixXd basis = qr.householderQ();
  Eigen::VectorXd eig(dims);
  for (Index i = 0; i < dims; ++i) eig(i) = uni(rng);
  Eigen::MatrixXd s = basis * eig.asDiagonal() * basis.transpose();
  return 0.5 * (s + s.transpose());
}

/// Random valid left-right model: random band, random initial states among the
/// first few, random in-band rows (some entries may be structural zeros).
inline LrHmmModel<double> random_model(std::mt19937_64& rng, Index n, Index dims) {
  std::uniform_real_distribution<double> uni(0.05, 1.0);
  std::normal_distribution<double> normal;
  std::uniform_int_distribution<Index> band_pick(1, std::max<Index>(1, n - 1));
  LrHmmModel<double> m;
  m.n_states = n;
  m.n_dims = dims;
  m.band_width = band_pick(rng);

  Eigen::VectorXd pi = Eigen::VectorXd::Zero(n);
  const Index n_init = std::uniform_int_distribution<Index>(1, std::min<Index>(2, n))(rng);
  for (Index i = 0; i < n_init; ++i) pi(i) = uni(rng);
  pi /= pi.sum();
  m.log_pi = pi.array().log();

  m.log_A = Eigen::MatrixXd::Constant(n, n, kNegInf);
  for (Index i = 0; i < n; ++i) {
    const Index last = std::min(i + m.band_width, n - 1);
    Eigen::VectorXd row = Eigen::VectorXd::Zero(n);
    for (Index j = i; j <= last; ++j) row(j) = uni(rng);
    if (last > i && std::bernoulli_distribution(0.2)(rng)) row(last) = 0;  // structural zero inside band
    row /= row.sum();
    for (Index j = i; j <= last; ++j) m.log_A(i, j) = row(j) > 0 ? std::log(row(j)) : kNegInf;
  }
  for (Index j = 0; j < n; ++j) {
    Eigen::VectorXd mu(dims);
    for (Index c = 0; c < dims; ++c) mu(c) = 2.0 * normal(rng);
    m.emissions.emplace_back(mu, random_spd(rng, dims));
  }
  return m;
}

inline ObservationSequence random_sequence(std::mt19937_64& rng, Index steps, Index dims) {
  std::normal_distribution<double> normal(0.0, 2.0);
  lrhmm::RowMatrix<double> v(steps, dims);
  for (Index i = 0; i < v.size(); ++i) v.data()[i] = normal(rng);
  return ObservationSequence(v, 0.025);
}

/// Sequence sampled from the model itself.
inline ObservationSequence sample_sequence(std::mt19937_64& rng, const LrHmmModel<double>& m, Index steps,
                                           int label = 1, std::int64_t trial = 0) {
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  std::normal_distribution<double> normal;
  const auto draw = [&](const Eigen::VectorXd& log_p) {
    double u = uni(rng);
    for (Index i = 0; i < log_p.size(); ++i) {
      u -= std::exp(log_p(i));
      if (u <= 0) return i;
    }
    Index last = 0;
    for (Index i = 0; i < log_p.size(); ++i) {
      if (log_p(i) != kNegInf) last = i;
    }
    return last;
  };
  lrhmm::RowMatrix<double> v(steps, m.n_dims);
  Index s = draw(m.log_pi);
  for (Index t = 0; t < steps; ++t) {
    if (t > 0) s = draw(m.log_A.row(s).transpose());
    const auto& g = m.emission(s);
    Eigen::VectorXd z(m.n_dims);
    for (Index c = 0; c < m.n_dims; ++c) z(c) = normal(rng);
    v.row(t) = (g.mean() + Eigen::LLT<Eigen::MatrixXd>(g.covariance()).matrixL() * z).transpose();
  }
  return ObservationSequence(v, 0.025, label, "s", trial);
}

/// Noisy harmonic sequences of a fixed frequency, one channel.
inline std::vector<ObservationSequence> harmonic_set(std::uint64_t seed, Index count, Index steps, double omega,
                                                     double noise, int label = 1) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, noise);
  std::vector<ObservationSequence> out;
  for (Index k = 0; k < count; ++k) {
    lrhmm::RowMatrix<double> v(steps, 1);
    for (Index t = 0; t < steps; ++t) v(t, 0) = std::cos(omega * 0.025 * double(t)) + normal(rng);
    out.emplace_back(v, 0.025, label, "x", k);
  }
  return out;
}

}  // namespace oracle

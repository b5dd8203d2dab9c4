#pragma once

#include <cmath>
#include <string>
#include <string_view>

#include <Eigen/Dense>

#include "muxsim/error.hpp"
#include "muxsim/random.hpp"

namespace muxsim {

/// Per-pulse pair-number statistics. PointMass puts all weight on n = mu
/// (integer mu) and exists for deterministic test scenarios.
enum class PairStatistics { Poissonian, Thermal, PointMass };

std::string_view to_string(PairStatistics kind) noexcept;
PairStatistics pair_statistics_from_string(std::string_view name);

/// Probabilities indexed by photon number n = 0..size()-1.
template <typename Scalar>
using Pmf = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using PmfD = Pmf<double>;

struct PairNumberDistribution {
  static constexpr int kDefaultNMax = 16;
  static constexpr double kMaxTailMass = 1e-10;

  PairStatistics kind = PairStatistics::Poissonian;
  double mu = 0.0;
  int n_max = kDefaultNMax;

  static PairNumberDistribution poissonian(double mu, int n_max = kDefaultNMax) {
    return {PairStatistics::Poissonian, mu, n_max};
  }
  static PairNumberDistribution thermal(double mu, int n_max = kDefaultNMax) {
    return {PairStatistics::Thermal, mu, n_max};
  }
  static PairNumberDistribution point_mass(int n, int n_max = kDefaultNMax) {
    return {PairStatistics::PointMass, static_cast<double>(n), n_max};
  }
  /// Same law with the smallest n_max >= kDefaultNMax meeting the tail bound.
  static PairNumberDistribution auto_truncated(PairStatistics kind, double mu);

  friend bool operator==(const PairNumberDistribution&, const PairNumberDistribution&) = default;
};

/// Throws InvalidParameterError when mu is negative or non-finite, n_max < 1,
/// a point mass is non-integer, or the tail beyond n_max carries
/// kMaxTailMass or more.
void validate(const PairNumberDistribution& dist);

/// Smallest n_max >= kDefaultNMax whose truncated tail is below kMaxTailMass.
int minimal_n_max(PairStatistics kind, double mu);

/// Closed-form P(n). Defined for every n >= 0, including n > n_max.
template <typename Scalar = double>
Scalar pmf_eval(const PairNumberDistribution& dist, int n) {
  using std::exp;
  using std::lgamma;
  using std::log;
  using std::log1p;
  if (!(dist.mu >= 0.0) || !std::isfinite(dist.mu)) {
    throw InvalidParameterError("mu must be finite and >= 0");
  }
  if (n < 0) {
    throw InvalidParameterError("photon number must be >= 0");
  }
  const Scalar mu = static_cast<Scalar>(dist.mu);
  const Scalar k = static_cast<Scalar>(n);
  switch (dist.kind) {
    case PairStatistics::Poissonian:
      if (dist.mu == 0.0) return n == 0 ? Scalar(1) : Scalar(0);
      return exp(k * log(mu) - mu - lgamma(k + Scalar(1)));
    case PairStatistics::Thermal:
      if (dist.mu == 0.0) return n == 0 ? Scalar(1) : Scalar(0);
      // mu^n / (1 + mu)^(n + 1)
      return exp(k * (log(mu) - log1p(mu)) - log1p(mu));
    case PairStatistics::PointMass:
      return static_cast<double>(n) == dist.mu ? Scalar(1) : Scalar(0);
  }
  return Scalar(0);
}

/// Mass beyond n_max of the untruncated law.
template <typename Scalar = double>
Scalar tail_mass(const PairNumberDistribution& dist) {
  using std::exp;
  using std::log;
  using std::log1p;
  const int first = dist.n_max + 1;
  switch (dist.kind) {
    case PairStatistics::Thermal: {
      if (dist.mu == 0.0) return Scalar(0);
      const Scalar mu = static_cast<Scalar>(dist.mu);
      return exp(static_cast<Scalar>(first) * (log(mu) - log1p(mu)));
    }
    case PairStatistics::PointMass:
      return dist.mu > dist.n_max ? Scalar(1) : Scalar(0);
    case PairStatistics::Poissonian: {
      if (dist.mu == 0.0) return Scalar(0);
      if (dist.mu >= first) {
        Scalar head(0);
        for (int n = 0; n < first; ++n) head += pmf_eval<Scalar>(dist, n);
        return Scalar(1) - head;
      }
      // Terms decrease monotonically past the mode; stop once they are negligible.
      Scalar term = pmf_eval<Scalar>(dist, first);
      Scalar sum(0);
      const Scalar mu = static_cast<Scalar>(dist.mu);
      for (int n = first; term > sum * Scalar(1e-20) && n < first + 10000; ++n) {
        sum += term;
        term *= mu / static_cast<Scalar>(n + 1);
      }
      return sum;
    }
  }
  return Scalar(0);
}

/// P(0..n_max) as an Eigen vector. Sums to 1 - tail_mass(dist).
template <typename Scalar = double>
Pmf<Scalar> truncated_pmf(const PairNumberDistribution& dist) {
  validate(dist);
  Pmf<Scalar> pmf(dist.n_max + 1);
  for (int n = 0; n <= dist.n_max; ++n) pmf[n] = pmf_eval<Scalar>(dist, n);
  return pmf;
}

/// Binomial loss kernel B with B(m, n) = C(n, m) eta^m (1 - eta)^(n - m).
/// Upper triangular; built column by column with Pascal's recurrence so no
/// factorials are formed.
template <typename Scalar = double>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> thinning_matrix(Eigen::Index size, Scalar eta) {
  if (!(eta >= Scalar(0) && eta <= Scalar(1))) {
    throw InvalidParameterError("eta must lie in [0, 1]");
  }
  const Scalar loss = Scalar(1) - eta;
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> kernel =
      Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>::Zero(size, size);
  if (size == 0) return kernel;
  kernel(0, 0) = Scalar(1);
  for (Eigen::Index n = 1; n < size; ++n) {
    kernel(0, n) = loss * kernel(0, n - 1);
    for (Eigen::Index m = 1; m <= n; ++m) {
      kernel(m, n) = loss * kernel(m, n - 1) + eta * kernel(m - 1, n - 1);
    }
  }
  return kernel;
}

/// Exact law of the survivors when each photon is kept independently with
/// probability eta. The result has the input's length.
template <typename Derived>
Pmf<typename Derived::Scalar> thin_distribution(const Eigen::MatrixBase<Derived>& pmf,
                                                typename Derived::Scalar eta) {
  using Scalar = typename Derived::Scalar;
  if ((pmf.array() < Scalar(0)).any()) {
    throw InvalidParameterError("pmf entries must be non-negative");
  }
  return thinning_matrix<Scalar>(pmf.size(), eta).template triangularView<Eigen::Upper>() * pmf;
}

/// Probability generating function sum_n P(n) z^n (Horner form).
template <typename Derived>
typename Derived::Scalar pgf(const Eigen::MatrixBase<Derived>& pmf, typename Derived::Scalar z) {
  using Scalar = typename Derived::Scalar;
  Scalar acc(0);
  for (Eigen::Index n = pmf.size() - 1; n >= 0; --n) acc = acc * z + pmf[n];
  return acc;
}

template <typename Derived>
typename Derived::Scalar pmf_mean(const Eigen::MatrixBase<Derived>& pmf) {
  using Scalar = typename Derived::Scalar;
  return pmf.dot(Pmf<Scalar>::LinSpaced(pmf.size(), Scalar(0), static_cast<Scalar>(pmf.size() - 1)));
}

/// Inversion sampler for the untruncated law. Precomputes the constants a
/// tight per-pulse loop needs.
class PairCountSampler {
public:
  explicit PairCountSampler(const PairNumberDistribution& dist);

  int operator()(RandomStream& rng) const;

private:
  PairStatistics kind_;
  double mu_;
  double p_zero_ = 1.0;     // Poissonian e^{-mu}
  double log_ratio_ = 0.0;  // Thermal log(mu / (1 + mu))
};

int sample_pair_count(const PairNumberDistribution& dist, RandomStream& rng);

/// Binomial(n, eta) survivor count.
int thin_count(int n, double eta, RandomStream& rng);

}  // namespace muxsim

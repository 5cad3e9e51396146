#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "cclb/rational.hpp"

namespace cclb {

// Probability weights over a finite universe {0, ..., size-1}.
template <Scalar T>
class FiniteDistribution {
 public:
  FiniteDistribution() = default;

  // Takes weights that already sum to one (exactly in rational mode,
  // within 1e-12 in float mode).
  explicit FiniteDistribution(std::vector<T> weights);

  // Divides by the total; the total must be positive.
  static FiniteDistribution normalized(std::vector<T> weights);

  // Point mass at `u`.
  static FiniteDistribution point(std::size_t size, std::size_t u);

  std::size_t size() const noexcept { return weights_.size(); }
  const T& operator[](std::size_t u) const { return weights_[u]; }
  std::span<const T> weights() const noexcept { return weights_; }

  // Total mass of the members flagged in `mask`.
  T mass(const std::vector<bool>& mask) const;

  friend bool operator==(const FiniteDistribution&, const FiniteDistribution&) = default;

 private:
  std::vector<T> weights_;
};

// max over subsets S of a(S) - b(S), i.e. half the L1 distance.
template <Scalar T>
T stat_distance(const FiniteDistribution<T>& a, const FiniteDistribution<T>& b);

inline constexpr double kInfiniteDivergence = std::numeric_limits<double>::infinity();

// Relative entropy in bits. Returns kInfiniteDivergence when tau puts mass
// where nu has none.
template <Scalar T>
double kl_divergence(const FiniteDistribution<T>& tau, const FiniteDistribution<T>& nu);

// Shannon entropy in bits of a non-negative weight vector (0 log 0 = 0).
double entropy_bits(std::span<const double> weights);

template <Scalar T>
struct BadSet {
  std::vector<bool> members;
  T mass_under_tau{};

  std::size_t count() const;
  bool empty() const { return count() == 0; }
};

// Elements u with 2^delta_exp * nu(u) < tau(u). Rational mode requires an
// integral exponent so the comparison stays exact.
template <Scalar T>
BadSet<T> bad_set(const FiniteDistribution<T>& tau, const FiniteDistribution<T>& nu, double delta_exp);

// tau-mass of the union of two bad sets.
template <Scalar T>
T union_mass(const FiniteDistribution<T>& tau, const BadSet<T>& a, const BadSet<T>& b);

}  // namespace cclb

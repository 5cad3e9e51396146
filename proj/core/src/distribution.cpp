#include "cclb/distribution.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cclb/error.hpp"

namespace cclb {

namespace {

template <Scalar T>
void check_weights(const std::vector<T>& weights) {
  require(!weights.empty(), ErrorKind::Dimension, "distribution over an empty universe");
  for (const T& w : weights) {
    if constexpr (!is_exact_v<T>) {
      require(std::isfinite(w), ErrorKind::Parameter, "non-finite probability weight");
    }
    require(!(w < 0), ErrorKind::Parameter, "negative probability weight");
  }
}

template <Scalar T>
T total(const std::vector<T>& weights) {
  T sum(0);
  for (const T& w : weights) sum += w;
  return sum;
}

template <Scalar T>
void check_same_universe(const FiniteDistribution<T>& a, const FiniteDistribution<T>& b) {
  require(a.size() == b.size(), ErrorKind::Dimension,
          "universe size mismatch: " + std::to_string(a.size()) + " vs " + std::to_string(b.size()));
}

}  // namespace

template <Scalar T>
FiniteDistribution<T>::FiniteDistribution(std::vector<T> weights) : weights_(std::move(weights)) {
  check_weights(weights_);
  const T sum = total(weights_);
  if constexpr (is_exact_v<T>) {
    require(sum == 1, ErrorKind::Parameter, "rational distribution does not sum to one: " + to_string(sum));
  } else {
    require(std::fabs(sum - 1.0) <= 1e-12, ErrorKind::Parameter, "distribution does not sum to one");
  }
}

template <Scalar T>
FiniteDistribution<T> FiniteDistribution<T>::normalized(std::vector<T> weights) {
  check_weights(weights);
  const T sum = total(weights);
  require(sum > 0, ErrorKind::Parameter, "cannot normalise a zero weight vector");
  FiniteDistribution out;
  for (T& w : weights) w /= sum;
  out.weights_ = std::move(weights);
  return out;
}

template <Scalar T>
FiniteDistribution<T> FiniteDistribution<T>::point(std::size_t size, std::size_t u) {
  require(u < size, ErrorKind::Dimension, "point mass outside the universe");
  std::vector<T> w(size, T(0));
  w[u] = T(1);
  return FiniteDistribution(std::move(w));
}

template <Scalar T>
T FiniteDistribution<T>::mass(const std::vector<bool>& mask) const {
  require(mask.size() == weights_.size(), ErrorKind::Dimension, "mask size mismatch");
  T sum(0);
  for (std::size_t u = 0; u < weights_.size(); ++u) {
    if (mask[u]) sum += weights_[u];
  }
  return sum;
}

template <Scalar T>
T stat_distance(const FiniteDistribution<T>& a, const FiniteDistribution<T>& b) {
  check_same_universe(a, b);
  // The maximising subset is {u : a(u) > b(u)}.
  T excess(0);
  for (std::size_t u = 0; u < a.size(); ++u) {
    if (a[u] > b[u]) excess += a[u] - b[u];
  }
  return excess;
}

template <Scalar T>
double kl_divergence(const FiniteDistribution<T>& tau, const FiniteDistribution<T>& nu) {
  check_same_universe(tau, nu);
  double sum = 0.0;
  for (std::size_t u = 0; u < tau.size(); ++u) {
    const double t = as_double(tau[u]);
    if (!(tau[u] > 0)) continue;
    if (!(nu[u] > 0)) return kInfiniteDivergence;
    if constexpr (is_exact_v<T>) {
      const Rational ratio = tau[u] / nu[u];
      sum += t * std::log2(ratio.get_d());
    } else {
      sum += t * (std::log2(t) - std::log2(nu[u]));
    }
  }
  // Rounding can leave a tiny negative value for tau == nu.
  return std::max(sum, 0.0);
}

double entropy_bits(std::span<const double> weights) {
  double h = 0.0;
  for (double w : weights) {
    if (w > 0) h -= w * std::log2(w);
  }
  return h;
}

template <Scalar T>
std::size_t BadSet<T>::count() const {
  return static_cast<std::size_t>(std::count(members.begin(), members.end(), true));
}

template <Scalar T>
BadSet<T> bad_set(const FiniteDistribution<T>& tau, const FiniteDistribution<T>& nu, double delta_exp) {
  check_same_universe(tau, nu);
  require(delta_exp > 0 && std::isfinite(delta_exp), ErrorKind::Parameter, "bad set needs a positive exponent");
  T scale;
  if constexpr (is_exact_v<T>) {
    require(delta_exp == std::floor(delta_exp) && delta_exp <= 4096, ErrorKind::Parameter,
            "rational bad set needs an integral exponent");
    scale = pow2<Rational>(static_cast<long>(delta_exp));
  } else {
    scale = std::exp2(delta_exp);
  }
  BadSet<T> out;
  out.members.assign(tau.size(), false);
  out.mass_under_tau = T(0);
  for (std::size_t u = 0; u < tau.size(); ++u) {
    if (scale * nu[u] < tau[u]) {
      out.members[u] = true;
      out.mass_under_tau += tau[u];
    }
  }
  return out;
}

template <Scalar T>
T union_mass(const FiniteDistribution<T>& tau, const BadSet<T>& a, const BadSet<T>& b) {
  require(a.members.size() == tau.size() && b.members.size() == tau.size(), ErrorKind::Dimension,
          "bad set size mismatch");
  T sum(0);
  for (std::size_t u = 0; u < tau.size(); ++u) {
    if (a.members[u] || b.members[u]) sum += tau[u];
  }
  return sum;
}

#define CCLB_INSTANTIATE(T)                                                                        \
  template class FiniteDistribution<T>;                                                            \
  template T stat_distance(const FiniteDistribution<T>&, const FiniteDistribution<T>&);            \
  template double kl_divergence(const FiniteDistribution<T>&, const FiniteDistribution<T>&);       \
  template struct BadSet<T>;                                                                       \
  template BadSet<T> bad_set(const FiniteDistribution<T>&, const FiniteDistribution<T>&, double);  \
  template T union_mass(const FiniteDistribution<T>&, const BadSet<T>&, const BadSet<T>&);

CCLB_INSTANTIATE(double)
CCLB_INSTANTIATE(Rational)

#undef CCLB_INSTANTIATE

}  // namespace cclb

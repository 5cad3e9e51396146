#include "cclb/compression.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <thread>
#include <tuple>

#include "cclb/caps.hpp"
#include "cclb/error.hpp"

namespace cclb {

namespace {

template <Scalar T>
T experiment_scale(double delta_exp) {
  require(delta_exp > 0.0 && std::isfinite(delta_exp), ErrorKind::Parameter,
          fmt::format("Delta must be positive, got {}", delta_exp));
  if constexpr (is_exact_v<T>) {
    require(delta_exp == std::floor(delta_exp) && delta_exp <= 4096.0, ErrorKind::Parameter,
            "rational mode needs an integral Delta of at most 4096");
    return pow2<Rational>(static_cast<long>(delta_exp));
  } else {
    return std::exp2(delta_exp);
  }
}

template <Scalar T>
bool sums_to_one(const T& total) {
  if constexpr (is_exact_v<T>) return total == 1;
  else return std::fabs(total - 1.0) <= 1e-9;
}

// Integer ceiling that ignores rounding noise just above an integer.
double ceil_tolerant(double v) {
  const double r = std::nearbyint(v);
  if (std::fabs(v - r) <= 1e-9 * std::max(1.0, std::fabs(v))) return r;
  return std::ceil(v);
}

}  // namespace

template <Scalar T>
void ExperimentInputs<T>::validate() const {
  const std::size_t n = p_a.size();
  require(n > 0, ErrorKind::Input, "experiment universe is empty");
  require(q_a.size() == n && p_b.size() == n && q_b.size() == n, ErrorKind::Input,
          "experiment tables differ in length");
  (void)experiment_scale<T>(delta_exp);
  T tau(0), nu_a(0), nu_b(0);
  for (std::size_t u = 0; u < n; ++u) {
    for (const T* v : {&p_a[u], &q_a[u], &p_b[u], &q_b[u]}) {
      require(!is_negative(*v, 1e-12) && !is_positive(T(*v - T(1)), 1e-12), ErrorKind::Input,
              fmt::format("experiment table entry {} outside [0, 1]", as_double(*v)));
    }
    tau += p_a[u] * p_b[u];
    nu_a += p_a[u] * q_a[u];
    nu_b += p_b[u] * q_b[u];
  }
  require(sums_to_one(tau), ErrorKind::Input, fmt::format("p_a p_b sums to {}, not 1", as_double(tau)));
  require(sums_to_one(nu_a), ErrorKind::Input, fmt::format("p_a q_a sums to {}, not 1", as_double(nu_a)));
  require(sums_to_one(nu_b), ErrorKind::Input, fmt::format("p_b q_b sums to {}, not 1", as_double(nu_b)));
}

template <Scalar T>
ExperimentInputs<T> experiment_inputs(const Factorization<T>& fac, double delta_exp) {
  ExperimentInputs<T> inp{fac.p_a, fac.q_a, fac.p_b, fac.q_b, delta_exp};
  inp.validate();
  return inp;
}

template <Scalar T>
T ExperimentTable<T>::alice_accept() const {
  T total(0);
  for (std::size_t u = 0; u < both.size(); ++u) total += both[u] + alice_only[u];
  return total;
}

template <Scalar T>
T ExperimentTable<T>::bob_accept() const {
  T total(0);
  for (std::size_t u = 0; u < both.size(); ++u) total += both[u] + bob_only[u];
  return total;
}

template <Scalar T>
T ExperimentTable<T>::accept() const {
  T total(0);
  for (const auto& b : both) total += b;
  return total;
}

template <Scalar T>
ExperimentTable<T> experiment_probabilities(const ExperimentInputs<T>& inp) {
  inp.validate();
  const std::size_t n = inp.universe_size();
  const T scale = experiment_scale<T>(inp.delta_exp);
  const T scale_sq = scale * scale;
  const T inv_u = T(1) / T(static_cast<long>(n));
  ExperimentTable<T> out;
  out.both.resize(n);
  out.alice_only.resize(n);
  out.bob_only.resize(n);
  T total(0);
  for (std::size_t u = 0; u < n; ++u) {
    // alpha <= p_a and beta <= 2^D q_a for Alice; alpha <= 2^D q_b and
    // beta <= p_b for Bob. Since p <= 1 <= 2^D each interval fits in
    // [0, 2^D], and a joint acceptance needs the smaller bound on each coin.
    const T aq = scale * inp.q_a[u];
    const T bq = scale * inp.q_b[u];
    const T both = inv_u * min_of(inp.p_a[u], bq) * min_of(inp.p_b[u], aq) / scale_sq;
    const T alice = inv_u * inp.p_a[u] * aq / scale_sq;
    const T bob = inv_u * bq * inp.p_b[u] / scale_sq;
    out.both[u] = both;
    out.alice_only[u] = max_of(T(0), T(alice - both));
    out.bob_only[u] = max_of(T(0), T(bob - both));
    total += out.both[u] + out.alice_only[u] + out.bob_only[u];
  }
  out.neither = T(1) - total;
  return out;
}

ExperimentDraw draw_experiment(CounterStream& stream, std::size_t universe_size, double scale) {
  ExperimentDraw d;
  d.alpha = stream.uniform01() * scale;
  d.beta = stream.uniform01() * scale;
  d.u = static_cast<std::size_t>(stream.uniform_index(universe_size));
  return d;
}

ExperimentOutcome run_experiment(const ExperimentInputs<double>& inp, CounterStream& stream) {
  const double scale = experiment_scale<double>(inp.delta_exp);
  const auto d = draw_experiment(stream, inp.universe_size(), scale);
  const bool alice = d.alpha <= inp.p_a[d.u] && d.beta <= scale * inp.q_a[d.u];
  const bool bob = d.alpha <= scale * inp.q_b[d.u] && d.beta <= inp.p_b[d.u];
  using Kind = ExperimentOutcome::Kind;
  if (alice && bob) return {Kind::Both, d.u};
  if (alice) return {Kind::AliceOnly, d.u};
  if (bob) return {Kind::BobOnly, d.u};
  return {Kind::Neither, 0};
}

// ---------------------------------------------------------------------------

std::uint64_t CompressionParameters::trial_count() const {
  require(trials <= 9007199254740992.0, ErrorKind::Capacity,
          fmt::format("T = {:.6g} trials cannot be executed", trials));
  return static_cast<std::uint64_t>(trials);
}

CompressionParameters compression_parameters(double delta, double info_cost, std::size_t universe_size,
                                             const std::optional<ParameterOverride>& overrides) {
  require(delta > 0.0 && delta < 1.0, ErrorKind::Parameter, fmt::format("delta must lie in (0, 1), got {}", delta));
  require(info_cost >= 0.0 && std::isfinite(info_cost), ErrorKind::Parameter,
          fmt::format("information cost must be a non-negative number, got {}", info_cost));
  require(universe_size >= 1, ErrorKind::Parameter, "transcript universe is empty");
  CompressionParameters p;
  p.delta = delta;
  p.info_cost = info_cost;
  p.universe_size = universe_size;
  if (overrides) {
    require(overrides->delta_exp >= 1, ErrorKind::Parameter, "override Delta must be at least 1");
    require(overrides->trials >= 1 && overrides->trials == std::floor(overrides->trials), ErrorKind::Parameter,
            "override T must be a positive integer");
    require(overrides->hash_bits >= 0, ErrorKind::Parameter, "override k must be non-negative");
    p.delta_exp = overrides->delta_exp;
    p.trials = overrides->trials;
    p.hash_bits = overrides->hash_bits;
    p.mode = ParameterMode::Override;
    return p;
  }
  const double delta_raw = (4.0 / delta) * (8.0 * info_cost / delta + 1.0);
  require(delta_raw <= 1000.0, ErrorKind::Capacity,
          fmt::format("Delta = {:.6g} is beyond any representable parameter set", delta_raw));
  p.delta_exp = static_cast<long>(ceil_tolerant(delta_raw));
  const double ln_term = std::log(8.0 / delta);
  p.trials = ceil_tolerant(static_cast<double>(universe_size) * std::exp2(static_cast<double>(p.delta_exp)) * ln_term);
  p.hash_bits = static_cast<long>(
      ceil_tolerant(static_cast<double>(p.delta_exp) + std::log2((64.0 / delta) * ln_term * ln_term)));
  p.mode = ParameterMode::PaperExact;
  return p;
}

// ---------------------------------------------------------------------------

ZeroCommProtocol::ZeroCommProtocol(const ProtocolTree& pi, const InputDistribution& mu,
                                   const CompressionParameters& params)
    : params_(params) {
  pi.check_inputs(mu.x_size(), mu.y_size());
  require(params.universe_size == pi.num_leaves(), ErrorKind::Parameter,
          fmt::format("parameters assume |U| = {} but the protocol has {} transcripts", params.universe_size,
                      pi.num_leaves()));
  trials_ = params.trial_count();
  require(trials_ < (std::uint64_t{1} << 32) - 1, ErrorKind::Capacity, "T must be below 2^32 - 1 for simulation");
  require(params.hash_bits <= 64, ErrorKind::Parameter, "k above 64 bits is not supported in simulation");
  mask_ = params.hash_bits >= 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << params.hash_bits) - 1;
  scale_ = std::ldexp(1.0, static_cast<int>(params.delta_exp));
  for (const auto& leaf : pi.leaves()) labels_.push_back(leaf.output);

  std::size_t x0 = 0, y0 = 0;
  while (x0 < mu.x_size() && !(mu.x_marginal<Rational>(x0) > 0)) ++x0;
  while (y0 < mu.y_size() && !(mu.y_marginal<Rational>(y0) > 0)) ++y0;
  alice_.resize(mu.x_size());
  bob_.resize(mu.y_size());
  for (std::size_t x = 0; x < mu.x_size(); ++x) {
    if (!(mu.x_marginal<Rational>(x) > 0)) continue;
    auto fac = factorization<double>(pi, mu, x, y0);
    alice_[x] = PartyTables{std::move(fac.p_a), std::move(fac.q_a)};
  }
  for (std::size_t y = 0; y < mu.y_size(); ++y) {
    if (!(mu.y_marginal<Rational>(y) > 0)) continue;
    auto fac = factorization<double>(pi, mu, x0, y);
    bob_[y] = PartyTables{std::move(fac.p_b), std::move(fac.q_b)};
  }
}

const PartyTables& ZeroCommProtocol::alice_tables(std::size_t x) const {
  require(x < alice_.size(), ErrorKind::Dimension, fmt::format("x = {} outside [0, {})", x, alice_.size()));
  require(alice_[x].has_value(), ErrorKind::Conditioning, fmt::format("x = {} has zero marginal mass", x));
  return *alice_[x];
}

const PartyTables& ZeroCommProtocol::bob_tables(std::size_t y) const {
  require(y < bob_.size(), ErrorKind::Dimension, fmt::format("y = {} outside [0, {})", y, bob_.size()));
  require(bob_[y].has_value(), ErrorKind::Conditioning, fmt::format("y = {} has zero marginal mass", y));
  return *bob_[y];
}

std::uint64_t ZeroCommProtocol::hash_value(const CounterStream& shared, std::uint64_t index) const {
  if (mask_ == 0) return 0;
  return shared.block_u64(static_cast<std::uint32_t>(index)) & mask_;
}

std::optional<int> ZeroCommProtocol::alice_output(std::size_t x, std::uint64_t seed, std::uint64_t run) const {
  const auto& t = alice_tables(x);
  const CounterStream shared(seed, run, 0);
  for (std::uint64_t i = 0; i < trials_; ++i) {
    CounterStream s(seed, run, static_cast<std::uint32_t>(i + 1));
    const auto d = draw_experiment(s, labels_.size(), scale_);
    if (d.alpha <= t.p[d.u] && d.beta <= scale_ * t.q[d.u]) {
      if (hash_value(shared, i + 1) == hash_value(shared, 0)) return labels_[d.u];
      return std::nullopt;
    }
  }
  return std::nullopt;
}

std::optional<int> ZeroCommProtocol::bob_output(std::size_t y, std::uint64_t seed, std::uint64_t run) const {
  const auto& t = bob_tables(y);
  const CounterStream shared(seed, run, 0);
  std::optional<std::uint64_t> r;
  for (std::uint64_t j = 0; j < trials_; ++j) {
    CounterStream s(seed, run, static_cast<std::uint32_t>(j + 1));
    const auto d = draw_experiment(s, labels_.size(), scale_);
    if (d.alpha <= scale_ * t.q[d.u] && d.beta <= t.p[d.u]) {
      if (!r) r = hash_value(shared, 0);
      if (hash_value(shared, j + 1) == *r) return labels_[d.u];
    }
  }
  return std::nullopt;
}

std::optional<int> ZeroCommProtocol::run(std::size_t x, std::size_t y, std::uint64_t seed, std::uint64_t run) const {
  const auto& ta = alice_tables(x);
  const auto& tb = bob_tables(y);
  const CounterStream shared(seed, run, 0);
  std::optional<std::uint64_t> r;
  auto hit = [&](std::uint64_t i) {
    if (!r) r = hash_value(shared, 0);
    return hash_value(shared, i + 1) == *r;
  };
  bool alice_done = false;
  std::optional<int> alice;
  for (std::uint64_t i = 0; i < trials_; ++i) {
    CounterStream s(seed, run, static_cast<std::uint32_t>(i + 1));
    const auto d = draw_experiment(s, labels_.size(), scale_);
    const bool a_acc = !alice_done && d.alpha <= ta.p[d.u] && d.beta <= scale_ * ta.q[d.u];
    const bool b_acc = d.alpha <= scale_ * tb.q[d.u] && d.beta <= tb.p[d.u];
    if (!a_acc && !b_acc) continue;
    const bool h = hit(i);
    if (a_acc) {
      alice_done = true;
      if (!h) return std::nullopt;
      alice = labels_[d.u];
    }
    if (b_acc && h) {
      // Bob's choice is final; Alice has either decided already or decides
      // at a later index, in which case her output is still needed.
      const int bob = labels_[d.u];
      if (alice_done) return *alice == bob ? std::optional<int>(bob) : std::nullopt;
      for (std::uint64_t k = i + 1; k < trials_; ++k) {
        CounterStream s2(seed, run, static_cast<std::uint32_t>(k + 1));
        const auto d2 = draw_experiment(s2, labels_.size(), scale_);
        if (d2.alpha <= ta.p[d2.u] && d2.beta <= scale_ * ta.q[d2.u]) {
          if (!hit(k) || labels_[d2.u] != bob) return std::nullopt;
          return bob;
        }
      }
      return std::nullopt;
    }
  }
  return std::nullopt;
}

std::optional<int> run_zero_comm(const ProtocolTree& pi, const InputDistribution& mu, std::size_t x, std::size_t y,
                                 const CompressionParameters& params, std::uint64_t seed, std::uint64_t run) {
  return ZeroCommProtocol(pi, mu, params).run(x, y, seed, run);
}

// ---------------------------------------------------------------------------

template <Scalar T>
T OutputLaw<T>::not_abort() const {
  T total(0);
  for (std::size_t z = 0; z + 1 < output.size(); ++z) total += output[z];
  return total;
}

namespace {

// Pr[Binomial(n, q) >= 2].
template <Scalar T>
T at_least_two(std::uint64_t n, const T& q) {
  if (n < 2 || !is_positive(q, 0.0)) return T(0);
  if constexpr (is_exact_v<T>) {
    const T miss = T(1) - q;
    T pow_prev(1);  // (1 - q)^(n - 1)
    for (std::uint64_t i = 0; i + 1 < n; ++i) pow_prev *= miss;
    const T none = pow_prev * miss;
    const T one = T(static_cast<long>(n)) * q * pow_prev;
    return T(1) - none - one;
  } else {
    const double nd = static_cast<double>(n);
    if (nd * q > 0.5) {
      const double none = std::exp(nd * std::log1p(-q));
      const double one = nd * q * std::exp((nd - 1.0) * std::log1p(-q));
      return std::max(0.0, 1.0 - none - one);
    }
    // Series from j = 2 avoids the cancellation in 1 - P0 - P1.
    double term = 0.5 * nd * (nd - 1.0) * q * q * std::exp((nd - 2.0) * std::log1p(-q));
    double sum = 0.0;
    const double ratio = q / (1.0 - q);
    for (std::uint64_t j = 2; j <= n && term > 0.0; ++j) {
      sum += term;
      if (term < 1e-18 * sum) break;
      term *= (nd - static_cast<double>(j)) / static_cast<double>(j + 1) * ratio;
    }
    return sum;
  }
}

}  // namespace

template <Scalar T>
OutputLaw<T> compressed_output_law(const ExperimentTable<T>& table, const std::vector<int>& labels,
                                   std::size_t label_count, std::uint64_t trials, long hash_bits) {
  const std::size_t n = table.both.size();
  require(labels.size() == n, ErrorKind::Dimension, "label map and experiment table differ in length");
  require(trials >= 1, ErrorKind::Parameter, "T must be at least 1");
  require(hash_bits >= 0, ErrorKind::Parameter, "k must be non-negative");
  const std::size_t L = label_count;
  const std::size_t abort = L;
  const T rho = pow2<T>(-hash_bits);

  // Per-index categories, aggregated by label:
  //   ab[z]:  both accept with h(i) = r (both decide z)
  //   ah[z]:  only Alice accepts, h(i) = r (Alice decides z)
  //   a0:     Alice accepts, h(i) != r (Alice decides abort)
  //   b[z]:   only Bob accepts, h(i) = r (Bob decides z, Alice still open)
  //   bb[z]:  Bob accepts with h(i) = r, Alice ignored (Bob's law after Alice decided)
  std::vector<T> ab(L, T(0)), ah(L, T(0)), b(L, T(0)), bb(L, T(0));
  T alice_acc(0), bob_acc(0), both_tot(0);
  for (std::size_t u = 0; u < n; ++u) {
    require(labels[u] >= 0 && static_cast<std::size_t>(labels[u]) < L, ErrorKind::Dimension,
            fmt::format("transcript label {} outside [0, {})", labels[u], L));
    const auto z = static_cast<std::size_t>(labels[u]);
    ab[z] += rho * table.both[u];
    ah[z] += rho * table.alice_only[u];
    b[z] += rho * table.bob_only[u];
    bb[z] += rho * (table.both[u] + table.bob_only[u]);
    alice_acc += table.both[u] + table.alice_only[u];
    bob_acc += table.both[u] + table.bob_only[u];
    both_tot += table.both[u];
  }
  const T a0 = alice_acc * (T(1) - rho);
  std::vector<T> alice_dec(L + 1, T(0));
  for (std::size_t z = 0; z < L; ++z) alice_dec[z] = ab[z] + ah[z];
  alice_dec[abort] = a0;
  T b_sum(0), bb_sum(0);
  for (std::size_t z = 0; z < L; ++z) {
    b_sum += b[z];
    bb_sum += bb[z];
  }
  const T none = T(1) - alice_acc - b_sum;  // neither party decides at this index
  const T bob_miss = T(1) - bb_sum;
  const T alice_miss = T(1) - alice_acc;

  const std::size_t tn = static_cast<std::size_t>(trials);
  std::vector<T> pow_none(tn + 1), pow_bob(tn + 1), geom_bob(tn + 1);
  pow_none[0] = T(1);
  pow_bob[0] = T(1);
  geom_bob[0] = T(0);
  T geom_alice(0), pow_alice(1);
  for (std::size_t t = 1; t <= tn; ++t) {
    pow_none[t] = pow_none[t - 1] * none;
    pow_bob[t] = pow_bob[t - 1] * bob_miss;
    geom_bob[t] = geom_bob[t - 1] + pow_bob[t - 1];
    geom_alice += pow_alice;
    pow_alice *= alice_miss;
  }

  OutputLaw<T> law;
  law.joint.assign(L + 1, std::vector<T>(L + 1, T(0)));
  auto& J = law.joint;
  // decided[z]: Bob already decided z before index t while Alice has not
  // accepted yet.
  std::vector<T> decided(L, T(0));
  std::vector<T> tail(L + 1);
  for (std::size_t t = 1; t <= tn; ++t) {
    const std::size_t rest = tn - t;
    const T& open = pow_none[t - 1];
    for (std::size_t z = 0; z < L; ++z) tail[z] = bb[z] * geom_bob[rest];
    tail[abort] = pow_bob[rest];
    for (std::size_t za = 0; za < L; ++za) {
      J[za][za] += open * ab[za];
      if (is_zero(ah[za], 0.0)) continue;
      const T w = open * ah[za];
      for (std::size_t zb = 0; zb <= L; ++zb) J[za][zb] += w * tail[zb];
    }
    const T w0 = open * a0;
    for (std::size_t zb = 0; zb <= L; ++zb) J[abort][zb] += w0 * tail[zb];
    for (std::size_t zb = 0; zb < L; ++zb) {
      if (is_zero(decided[zb], 0.0)) continue;
      for (std::size_t za = 0; za <= L; ++za) J[za][zb] += decided[zb] * alice_dec[za];
    }
    for (std::size_t zb = 0; zb < L; ++zb) decided[zb] = decided[zb] * alice_miss + open * b[zb];
  }
  // Alice never accepts.
  for (std::size_t zb = 0; zb < L; ++zb) J[abort][zb] += decided[zb];
  J[abort][abort] += pow_none[tn];

  T total(0);
  law.output.assign(L + 1, T(0));
  for (std::size_t a = 0; a <= L; ++a) {
    for (std::size_t c = 0; c <= L; ++c) total += J[a][c];
  }
  T agree(0);
  for (std::size_t z = 0; z < L; ++z) {
    law.output[z] = J[z][z];
    agree += J[z][z];
  }
  law.output[abort] = T(1) - agree;
  if constexpr (is_exact_v<T>) {
    require(total == 1, ErrorKind::Solver, "output law does not sum to one");
  } else {
    require(std::fabs(total - 1.0) <= 1e-9, ErrorKind::Solver,
            fmt::format("output law sums to {:.17g}", total));
  }
  law.prob_good = rho * both_tot * geom_alice;
  law.prob_collision = at_least_two<T>(trials, T(rho * (alice_acc + bob_acc - both_tot)));
  return law;
}

template <Scalar T>
OutputLaw<T> exact_output_distribution(const ProtocolTree& pi, const InputDistribution& mu, std::size_t x,
                                       std::size_t y, std::size_t z_size, const CompressionParameters& params) {
  const auto& cap = caps();
  require(params.trials <= static_cast<double>(cap.dp_trials), ErrorKind::Capacity,
          fmt::format("T = {:.6g} exceeds the exact-engine cap of {} trials; use the Monte Carlo engine or raise "
                      "CCLB_CAPS dp_trials",
                      params.trials, cap.dp_trials));
  require(pi.num_leaves() <= cap.dp_universe, ErrorKind::Capacity,
          fmt::format("|U| = {} exceeds the exact-engine cap of {} transcripts; use the Monte Carlo engine or raise "
                      "CCLB_CAPS dp_universe",
                      pi.num_leaves(), cap.dp_universe));
  require(static_cast<std::size_t>(pi.max_output()) < z_size, ErrorKind::Dimension,
          fmt::format("protocol outputs {} but the output space has size {}", pi.max_output(), z_size));
  const auto fac = factorization<T>(pi, mu, x, y);
  const auto table = experiment_probabilities(experiment_inputs(fac, static_cast<double>(params.delta_exp)));
  std::vector<int> labels;
  for (const auto& leaf : pi.leaves()) labels.push_back(leaf.output);
  return compressed_output_law(table, labels, z_size, params.trial_count(), params.hash_bits);
}

// ---------------------------------------------------------------------------

std::vector<std::uint64_t> monte_carlo_counts(const ZeroCommProtocol& proto, std::size_t x, std::size_t y,
                                              std::size_t z_size, std::uint64_t seed, std::uint64_t samples,
                                              unsigned threads) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::uint64_t>(threads, std::max<std::uint64_t>(1, samples)));
  std::vector<std::vector<std::uint64_t>> partial(threads, std::vector<std::uint64_t>(z_size + 1, 0));
  std::vector<std::exception_ptr> errors(threads);
  auto work = [&](unsigned w) {
    try {
      const std::uint64_t begin = samples * w / threads;
      const std::uint64_t end = samples * (w + 1) / threads;
      auto& counts = partial[w];
      for (std::uint64_t s = begin; s < end; ++s) {
        const auto out = proto.run(x, y, seed, s);
        if (out && static_cast<std::size_t>(*out) < z_size) ++counts[static_cast<std::size_t>(*out)];
        else ++counts[z_size];
      }
    } catch (...) {
      errors[w] = std::current_exception();
    }
  };
  std::vector<std::thread> pool;
  for (unsigned w = 1; w < threads; ++w) pool.emplace_back(work, w);
  work(0);
  for (auto& t : pool) t.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  std::vector<std::uint64_t> total(z_size + 1, 0);
  for (const auto& counts : partial) {
    for (std::size_t i = 0; i <= z_size; ++i) total[i] += counts[i];
  }
  return total;
}

namespace {

double total_variation(const std::vector<double>& a, const std::vector<double>& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d += std::fabs(a[i] - b[i]);
  return 0.5 * d;
}

}  // namespace

CompressionReport verify_compression(const ProtocolTree& pi, const PartialFunction& f, const InputDistribution& mu,
                                     const CompressionParameters& params, const VerifyOptions& options) {
  check_compatible(f, mu);
  pi.check_inputs(f.x_size(), f.y_size());
  const std::size_t nz = f.z_size();
  require(static_cast<std::size_t>(pi.max_output()) < nz, ErrorKind::Dimension,
          fmt::format("protocol outputs {} but the function has {} outputs", pi.max_output(), nz));
  require(params.universe_size == pi.num_leaves(), ErrorKind::Parameter,
          fmt::format("parameters assume |U| = {} but the protocol has {} transcripts", params.universe_size,
                      pi.num_leaves()));
  const bool paper = params.mode == ParameterMode::PaperExact;
  if (paper) {
    const auto expected = compression_parameters(params.delta, params.info_cost, params.universe_size);
    require(expected.delta_exp == params.delta_exp && expected.trials == params.trials &&
                expected.hash_bits == params.hash_bits,
            ErrorKind::Parameter, "paper-exact parameters do not match the parameter formulas");
  }
  if (options.engine == Engine::MC) require(options.samples > 0, ErrorKind::Parameter, "sample count must be positive");

  CompressionReport rep;
  rep.params = params;
  rep.engine = options.engine;
  rep.samples = options.engine == Engine::MC ? options.samples : 0;
  rep.seed = options.seed;
  rep.z_size = nz;
  rep.lambda = params.lambda_double();
  const double lambda = rep.lambda;
  const double delta = params.delta;
  const double tol = options.tolerance;
  const double div_threshold = 8.0 * params.info_cost / delta;

  std::optional<ZeroCommProtocol> proto;
  if (options.engine == Engine::MC) proto.emplace(pi, mu, params);

  std::vector<int> identity(pi.num_leaves());
  std::iota(identity.begin(), identity.end(), 0);

  double q_total = 0.0;
  double agg_var = 0.0;
  std::vector<double> p_joint, q_joint;   // over (x, y, z) for the output distance
  std::vector<double> q_var;
  for (std::size_t x = 0; x < f.x_size(); ++x) {
    for (std::size_t y = 0; y < f.y_size(); ++y) {
      InputCompressionReport in;
      in.x = x;
      in.y = y;
      in.mass = mu.mass<double>(x, y);
      const auto truth = output_distribution<double>(pi, x, y, nz);
      in.evaluated = mu.x_marginal<Rational>(x) > 0 && mu.y_marginal<Rational>(y) > 0;
      in.output_law.assign(nz + 1, 0.0);
      if (in.evaluated) {
        const auto pxy = transcript_distribution<double>(pi, x, y).dist;
        in.div_x = kl_divergence(pxy, marginal_x<double>(pi, mu, x).dist);
        in.div_y = kl_divergence(pxy, marginal_y<double>(pi, mu, y).dist);
        in.large_divergence = in.div_x > div_threshold || in.div_y > div_threshold;
        if (options.engine == Engine::DP) {
          const auto law = exact_output_distribution<double>(pi, mu, x, y, nz, params);
          in.output_law = law.output;
          in.prob_not_abort = law.not_abort();
          in.prob_collision = law.prob_collision;
          in.prob_good = law.prob_good;
          const auto fac = factorization<double>(pi, mu, x, y);
          const auto table = experiment_probabilities(experiment_inputs(fac, static_cast<double>(params.delta_exp)));
          const auto by_leaf =
              compressed_output_law(table, identity, pi.num_leaves(), params.trial_count(), params.hash_bits);
          const double h = by_leaf.not_abort();
          if (h > 0.0) {
            std::vector<double> cond(pi.num_leaves());
            for (std::size_t u = 0; u < cond.size(); ++u) cond[u] = by_leaf.output[u] / h;
            std::vector<double> ref(pxy.weights().begin(), pxy.weights().end());
            in.transcript_distance = total_variation(ref, cond);
          } else {
            in.transcript_distance = 1.0;
          }
          in.eq5_pass = in.prob_not_abort <= (1.0 + delta) * lambda * (1.0 + tol);
        } else {
          const auto counts = monte_carlo_counts(*proto, x, y, nz, options.seed, options.samples, options.threads);
          const double n = static_cast<double>(options.samples);
          for (std::size_t z = 0; z <= nz; ++z) in.output_law[z] = static_cast<double>(counts[z]) / n;
          in.prob_not_abort = 1.0 - in.output_law[nz];
          in.std_error = std::sqrt(in.prob_not_abort * (1.0 - in.prob_not_abort) / n);
          in.eq5_pass = in.prob_not_abort - 3.0 * in.std_error <= (1.0 + delta) * lambda;
        }
      }
      q_total += in.mass * in.prob_not_abort;
      agg_var += in.mass * in.mass * in.std_error * in.std_error;
      for (std::size_t z = 0; z < nz; ++z) {
        p_joint.push_back(in.mass * truth[z]);
        q_joint.push_back(in.mass * in.output_law[z]);
        if (options.engine == Engine::MC) {
          const double p = in.output_law[z];
          q_var.push_back(in.mass * in.mass * p * (1.0 - p) / static_cast<double>(options.samples));
        }
      }
      rep.inputs.push_back(std::move(in));
    }
  }
  rep.aggregate_not_abort = q_total;
  rep.aggregate_std_error = std::sqrt(agg_var);
  if (q_total > 0.0) {
    double se_sum = 0.0;
    for (std::size_t i = 0; i < q_joint.size(); ++i) {
      q_joint[i] /= q_total;
      if (!q_var.empty()) se_sum += std::sqrt(q_var[i]) / q_total;
    }
    rep.eq4_distance = total_variation(p_joint, q_joint);
    // First-order: the distance moves by at most half the summed cell errors.
    rep.eq4_std_error = 0.5 * se_sum;
  } else {
    rep.eq4_distance = 1.0;
  }

  rep.eq5_pass = std::all_of(rep.inputs.begin(), rep.inputs.end(), [](const auto& in) { return in.eq5_pass; });
  if (options.engine == Engine::DP) {
    rep.eq6_pass = q_total >= (1.0 - delta) * lambda * (1.0 - tol);
    rep.eq4_pass = rep.eq4_distance <= delta + tol;
  } else {
    rep.eq6_pass = q_total + 3.0 * rep.aggregate_std_error >= (1.0 - delta) * lambda;
    rep.eq4_pass = rep.eq4_distance - 3.0 * rep.eq4_std_error <= delta;
  }

  for (const auto& in : rep.inputs) {
    if (in.large_divergence) rep.bad_divergence_mass += in.mass;
  }
  rep.lambda_floor = std::exp2(-kLambdaConstant * (params.info_cost / (delta * delta) + 1.0 / delta));

  if (paper) {
    auto check = [&](bool ok, std::string what) {
      rep.diagnostics.push_back(fmt::format("{} {}", ok ? "ok" : "FAIL", what));
      if (!ok) rep.defects.push_back(std::move(what));
    };
    check(rep.eq4_pass, fmt::format("eq4 distance {:.6g} <= delta {:.6g}", rep.eq4_distance, delta));
    check(rep.eq5_pass, "eq5 Pr[not abort] <= (1 + delta) lambda on every input");
    check(rep.eq6_pass, fmt::format("eq6 aggregate {:.6g} >= (1 - delta) lambda {:.6g}", q_total,
                                    (1.0 - delta) * lambda));
    check(lambda >= rep.lambda_floor * (1.0 - tol),
          fmt::format("lambda {:.6g} >= 2^-C(I/delta^2 + 1/delta) = {:.6g}", lambda, rep.lambda_floor));
    check(rep.bad_divergence_mass <= delta / 4.0 + tol,
          fmt::format("Pr[B_D] = {:.6g} <= delta/4", rep.bad_divergence_mass));
    if (options.engine == Engine::DP) {
      for (const auto& in : rep.inputs) {
        if (!in.evaluated) continue;
        const std::string at = fmt::format("at ({},{})", in.x, in.y);
        check(in.prob_collision <= delta / 16.0 * lambda * (1.0 + tol),
              fmt::format("Pr[B_C] = {:.6g} <= (delta/16) lambda {}", in.prob_collision, at));
        check(in.prob_not_abort <= (1.0 + delta / 16.0) * lambda * (1.0 + tol),
              fmt::format("Pr[H] = {:.6g} <= (1 + delta/16) lambda {}", in.prob_not_abort, at));
        if (in.large_divergence) continue;
        check(in.prob_not_abort >= (1.0 - 11.0 * delta / 16.0) * lambda * (1.0 - tol),
              fmt::format("Pr[H] = {:.6g} >= (1 - 11 delta/16) lambda {}", in.prob_not_abort, at));
        check(in.transcript_distance <= 0.75 * delta + tol,
              fmt::format("transcript distance {:.6g} <= 3 delta/4 {}", in.transcript_distance, at));
      }
    }
  }
  return rep;
}

std::string format_compression_csv(const CompressionReport& r) {
  const auto& p = r.params;
  std::string out = fmt::format(
      "# engine={} mode={} delta={:.17g} info_cost={:.17g} universe={} Delta={} T={:.17g} k={} lambda=2^-{}",
      r.engine == Engine::DP ? "dp" : "mc", p.mode == ParameterMode::PaperExact ? "paper-exact" : "override", p.delta,
      p.info_cost, p.universe_size, p.delta_exp, p.trials, p.hash_bits, p.hash_bits + p.delta_exp);
  if (r.engine == Engine::MC) out += fmt::format(" seed={} samples={}", r.seed, r.samples);
  out += "\n";
  for (const auto& d : r.diagnostics) out += "# " + d + "\n";
  out += "x,y,prob_not_abort,lambda,eq5_pass,eq6_pass,eq4_distance,eq4_pass,std_error\n";
  auto flag = [](bool b) { return b ? "true" : "false"; };
  for (const auto& in : r.inputs) {
    if (!in.evaluated) {
      out += fmt::format("{},{},,{:.17g},,,,,\n", in.x, in.y, r.lambda);
      continue;
    }
    out += fmt::format("{},{},{:.17g},{:.17g},{},,,,{}\n", in.x, in.y, in.prob_not_abort, r.lambda, flag(in.eq5_pass),
                       r.engine == Engine::MC ? fmt::format("{:.17g}", in.std_error) : std::string());
  }
  out += fmt::format("*,*,{:.17g},{:.17g},{},{},{:.17g},{},{}\n", r.aggregate_not_abort, r.lambda, flag(r.eq5_pass),
                     flag(r.eq6_pass), r.eq4_distance, flag(r.eq4_pass),
                     r.engine == Engine::MC ? fmt::format("{:.17g}", r.aggregate_std_error) : std::string());
  return out;
}

// ---------------------------------------------------------------------------

Rational StrategyEstimate::total_weight() const {
  Rational total(0);
  for (const auto& e : entries) total += e.weight;
  return total;
}

LabeledRectangleStrategy StrategyEstimate::strategy() const {
  LabeledRectangleStrategy s;
  for (const auto& e : entries) s.entries.push_back({e.rect, e.label, e.weight.get_d()});
  s.efficiency = eta;
  return s;
}

StrategyEstimate extract_strategy(const ProtocolTree& pi, const PartialFunction& f, const InputDistribution& mu,
                                  const CompressionParameters& params, std::uint64_t seed_count,
                                  std::uint64_t master_seed) {
  require(seed_count >= 1, ErrorKind::Parameter, "seed count must be at least 1");
  check_compatible(f, mu);
  require(f.cells() <= caps().grid_cells, ErrorKind::Capacity,
          fmt::format("{}x{} grid exceeds the cap of {} cells", f.x_size(), f.y_size(), caps().grid_cells));
  require(f.x_size() <= 32 && f.y_size() <= 32, ErrorKind::Capacity, "rectangle masks hold at most 32 rows");
  const ZeroCommProtocol proto(pi, mu, params);
  const std::size_t nz = f.z_size();
  const std::size_t nx = f.x_size(), ny = f.y_size();

  StrategyEstimate est;
  est.seeds = seed_count;
  est.z_size = nz;
  est.eta = (1.0 + params.delta) * params.lambda_double() / static_cast<double>(nz);
  est.eps = protocol_error<double>(pi, f, mu);
  est.eps_prime = est.eps + 3.0 * params.delta;

  std::map<std::pair<Rectangle, int>, std::uint64_t> counts;
  std::vector<std::uint64_t> covered(nx * ny, 0);
  double sum_v = 0.0, sum_v2 = 0.0;
  std::vector<std::optional<int>> a(nx), b(ny);
  for (std::uint64_t s = 0; s < seed_count; ++s) {
    for (std::size_t x = 0; x < nx; ++x) {
      a[x] = mu.x_marginal<Rational>(x) > 0 ? proto.alice_output(x, master_seed, s) : std::nullopt;
    }
    for (std::size_t y = 0; y < ny; ++y) {
      b[y] = mu.y_marginal<Rational>(y) > 0 ? proto.bob_output(y, master_seed, s) : std::nullopt;
    }
    for (std::size_t z = 0; z < nz; ++z) {
      Rectangle::Mask rows = 0, cols = 0;
      for (std::size_t x = 0; x < nx; ++x) {
        if (a[x] == static_cast<int>(z)) rows |= Rectangle::Mask{1} << x;
      }
      for (std::size_t y = 0; y < ny; ++y) {
        if (b[y] == static_cast<int>(z)) cols |= Rectangle::Mask{1} << y;
      }
      ++counts[{Rectangle(rows, cols), static_cast<int>(z)}];
    }
    double v = 0.0;
    for (std::size_t x = 0; x < nx; ++x) {
      if (!a[x]) continue;
      for (std::size_t y = 0; y < ny; ++y) {
        if (a[x] != b[y]) continue;
        ++covered[x * ny + y];
        if (!f.defined(x, y) || f.value(x, y) == *a[x]) v += mu.mass<double>(x, y);
      }
    }
    sum_v += v;
    sum_v2 += v * v;
  }

  const Rational denom(static_cast<long>(seed_count) * static_cast<long>(nz));
  for (const auto& [key, count] : counts) {
    est.entries.push_back({key.first, key.second, count, Rational(Rational(static_cast<long>(count)) / denom)});
  }

  const double n = static_cast<double>(seed_count);
  const double zs = static_cast<double>(nz);
  // Per-seed rates are |Z| times the strategy quantities.
  const double ref_rate = std::min(1.0, est.eta * zs);
  const double ref_se = std::sqrt(ref_rate * (1.0 - ref_rate) / n) / zs;

  const double mean_v = sum_v / n;
  const double var_v = std::max(0.0, sum_v2 / n - mean_v * mean_v);
  est.correctness = mean_v / zs;
  est.correctness_se = std::max(std::sqrt(var_v / n) / zs, ref_se);
  est.correctness_threshold = (1.0 - est.eps_prime) * est.eta;
  est.correctness_pass = est.correctness + 3.0 * est.correctness_se >= est.correctness_threshold;

  std::size_t worst = 0;
  for (std::size_t c = 0; c < covered.size(); ++c) {
    if (covered[c] > covered[worst]) worst = c;
  }
  const double p_hat = static_cast<double>(covered[worst]) / n;
  est.max_coverage = p_hat / zs;
  est.coverage_se = std::max(std::sqrt(p_hat * (1.0 - p_hat) / n) / zs, ref_se);
  est.coverage_pass = est.max_coverage - 3.0 * est.coverage_se <= est.eta;
  return est;
}

// ---------------------------------------------------------------------------

ConditionalDistanceResult conditional_distance_check(const FiniteDistribution<Rational>& pi, const FiniteSpace& space,
                                                     const std::vector<bool>& event_f,
                                                     const std::vector<bool>& event_h, const Rational& c) {
  const std::size_t n = space.prob.size();
  require(space.value.size() == n && event_f.size() == n && event_h.size() == n, ErrorKind::Dimension,
          "space, value map and events differ in size");
  require(pi.size() == space.universe, ErrorKind::Dimension, "reference distribution has the wrong universe");
  Rational pr_h(0), pr_f(0), pr_e(0);
  std::vector<Rational> on_h(space.universe, Rational(0)), on_e(space.universe, Rational(0));
  for (std::size_t w = 0; w < n; ++w) {
    require(space.value[w] < space.universe, ErrorKind::Dimension, "outcome value outside the universe");
    if (event_f[w]) pr_f += space.prob[w];
    if (!event_h[w]) continue;
    pr_h += space.prob[w];
    on_h[space.value[w]] += space.prob[w];
    if (!event_f[w]) {
      pr_e += space.prob[w];
      on_e[space.value[w]] += space.prob[w];
    }
  }
  require(sgn(pr_h) > 0, ErrorKind::Conditioning, "Pr[H] = 0: cannot condition");
  auto distance_to_pi = [&](std::vector<Rational> mass, const Rational& total) {
    for (auto& m : mass) m /= total;
    return stat_distance(FiniteDistribution<Rational>(std::move(mass)), pi);
  };
  ConditionalDistanceResult r;
  r.distance = distance_to_pi(on_h, pr_h);
  r.precondition = sgn(pr_e) > 0 ? distance_to_pi(on_e, pr_e) : Rational(0);
  r.bound = c + pr_f / pr_h;
  r.holds = r.distance <= r.bound;
  return r;
}

#define CCLB_INSTANTIATE_COMPRESSION(T)                                                                         \
  template struct ExperimentInputs<T>;                                                                          \
  template struct ExperimentTable<T>;                                                                           \
  template struct OutputLaw<T>;                                                                                 \
  template ExperimentInputs<T> experiment_inputs<T>(const Factorization<T>&, double);                          \
  template ExperimentTable<T> experiment_probabilities<T>(const ExperimentInputs<T>&);                         \
  template OutputLaw<T> compressed_output_law<T>(const ExperimentTable<T>&, const std::vector<int>&,           \
                                                 std::size_t, std::uint64_t, long);                             \
  template OutputLaw<T> exact_output_distribution<T>(const ProtocolTree&, const InputDistribution&,            \
                                                     std::size_t, std::size_t, std::size_t,                     \
                                                     const CompressionParameters&);

CCLB_INSTANTIATE_COMPRESSION(double)
CCLB_INSTANTIATE_COMPRESSION(Rational)

#undef CCLB_INSTANTIATE_COMPRESSION

}  // namespace cclb

#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <random>

#include "cclb/compression.hpp"
#include "cclb/corpus.hpp"
#include "cclb/error.hpp"

using cclb::ExperimentInputs;
using cclb::ExperimentTable;
using cclb::InputDistribution;
using cclb::OutputLaw;
using cclb::ParameterOverride;
using cclb::ProtocolTree;
using cclb::Rational;

namespace {

// ---------------------------------------------------------------------------
// Brute-force law of the compressed protocol: enumerate the category of
// every experiment, every hash value h(i) and the target r.

enum class Cat { Both, AliceOnly, BobOnly, Neither };

struct Event {
  Cat cat;
  std::size_t u;
  Rational p;
};

OutputLaw<Rational> brute_law(const ExperimentTable<Rational>& t, const std::vector<int>& labels,
                              std::size_t label_count, std::size_t trials, long k) {
  std::vector<Event> events;
  for (std::size_t u = 0; u < t.both.size(); ++u) {
    events.push_back({Cat::Both, u, t.both[u]});
    events.push_back({Cat::AliceOnly, u, t.alice_only[u]});
    events.push_back({Cat::BobOnly, u, t.bob_only[u]});
  }
  events.push_back({Cat::Neither, 0, t.neither});
  const std::size_t abort = label_count;
  const std::size_t hashes = std::size_t{1} << k;
  const Rational hash_p = cclb::pow2<Rational>(-k * static_cast<long>(trials + 1));

  OutputLaw<Rational> law;
  law.output.assign(label_count + 1, Rational(0));
  law.joint.assign(label_count + 1, std::vector<Rational>(label_count + 1, Rational(0)));
  law.prob_collision = law.prob_good = 0;

  std::vector<std::size_t> pick(trials, 0);
  std::vector<std::size_t> h(trials + 1, 0);  // h[trials] is r
  std::function<void(std::size_t, Rational)> choose = [&](std::size_t i, Rational p) {
    if (i == trials) {
      std::fill(h.begin(), h.end(), 0);
      while (true) {
        const std::size_t r = h[trials];
        std::optional<std::size_t> a_first;
        for (std::size_t j = 0; j < trials && !a_first; ++j) {
          const Cat c = events[pick[j]].cat;
          if (c == Cat::Both || c == Cat::AliceOnly) a_first = j;
        }
        std::size_t a = abort, b = abort;
        if (a_first && h[*a_first] == r) a = static_cast<std::size_t>(labels[events[pick[*a_first]].u]);
        for (std::size_t j = 0; j < trials; ++j) {
          const Cat c = events[pick[j]].cat;
          if ((c == Cat::Both || c == Cat::BobOnly) && h[j] == r) {
            b = static_cast<std::size_t>(labels[events[pick[j]].u]);
            break;
          }
        }
        const Rational q = p * hash_p;
        law.joint[a][b] += q;
        law.output[a == b ? a : abort] += q;
        std::size_t hits = 0;
        for (std::size_t j = 0; j < trials; ++j) hits += events[pick[j]].cat != Cat::Neither && h[j] == r;
        if (hits >= 2) law.prob_collision += q;
        if (a_first && h[*a_first] == r && events[pick[*a_first]].cat == Cat::Both) law.prob_good += q;
        std::size_t d = 0;
        while (d <= trials && ++h[d] == hashes) h[d++] = 0;
        if (d > trials) break;
      }
      return;
    }
    for (std::size_t e = 0; e < events.size(); ++e) {
      if (sgn(events[e].p) == 0) continue;
      pick[i] = e;
      choose(i + 1, p * events[e].p);
    }
  };
  choose(0, Rational(1));
  return law;
}

ExperimentTable<Rational> random_table(std::mt19937_64& rng, std::size_t universe) {
  std::uniform_int_distribution<long> draw(0, 6);
  std::vector<long> raw(3 * universe + 1);
  long total = 0;
  for (auto& v : raw) total += (v = draw(rng));
  raw.back() += 1;
  total += 1;
  ExperimentTable<Rational> t;
  for (std::size_t u = 0; u < universe; ++u) {
    t.both.push_back(cclb::ratio(raw[3 * u], total));
    t.alice_only.push_back(cclb::ratio(raw[3 * u + 1], total));
    t.bob_only.push_back(cclb::ratio(raw[3 * u + 2], total));
  }
  t.neither = cclb::ratio(raw.back(), total);
  return t;
}

ProtocolTree random_tree(std::mt19937_64& rng, std::size_t nx, std::size_t ny, int depth) {
  std::uniform_int_distribution<int> coin(0, 3), num(0, 8);
  if (depth == 0 || coin(rng) == 0) return ProtocolTree::leaf(coin(rng) % 2);
  const auto owner = coin(rng) % 2 ? cclb::Owner::Alice : cclb::Owner::Bob;
  std::vector<Rational> p1(owner == cclb::Owner::Alice ? nx : ny);
  for (auto& p : p1) p = cclb::ratio(num(rng), 8);
  auto zero = random_tree(rng, nx, ny, depth - 1);
  auto one = random_tree(rng, nx, ny, depth - 1);
  return ProtocolTree::node(owner, std::move(p1), std::move(zero), std::move(one));
}

ExperimentInputs<Rational> ones(std::size_t n, double delta_exp) {
  ExperimentInputs<Rational> inp;
  inp.p_a.assign(n, Rational(1));
  inp.q_a.assign(n, Rational(1));
  inp.p_b.assign(n, Rational(1));
  inp.q_b.assign(n, Rational(1));
  inp.delta_exp = delta_exp;
  return inp;
}

cclb::CompressionParameters override(long d, double t, long k, double delta = 0.5, std::size_t universe = 2) {
  return cclb::compression_parameters(delta, 0.0, universe, ParameterOverride{d, t, k});
}

Rational sum(const std::vector<Rational>& v) {
  Rational s = 0;
  for (const auto& x : v) s += x;
  return s;
}

}  // namespace

TEST(Experiment, ClosedFormSingleton) {
  const auto t = cclb::experiment_probabilities(ones(1, 1));
  EXPECT_EQ(t.both[0], cclb::ratio(1, 4));
  EXPECT_EQ(t.alice_accept(), cclb::ratio(1, 2));
  EXPECT_EQ(t.bob_accept(), cclb::ratio(1, 2));
  EXPECT_EQ(t.neither, cclb::ratio(1, 4));
}

TEST(Experiment, AcceptanceRateIsUniform) {
  std::mt19937_64 rng(1);
  int checked = 0;
  for (int i = 0; i < 100 && checked < 40; ++i) {
    const auto pi = random_tree(rng, 2, 2, 3);
    const auto mu = InputDistribution::uniform(2, 2);
    for (double d : {1.0, 2.0, 3.0}) {
      const auto inp = cclb::experiment_inputs(cclb::factorization<Rational>(pi, mu, 1, 0), d);
      const auto t = cclb::experiment_probabilities(inp);
      const Rational expect = 1 / (Rational(static_cast<long>(inp.universe_size())) * cclb::pow2<Rational>(static_cast<long>(d)));
      EXPECT_EQ(t.alice_accept(), expect);
      EXPECT_EQ(t.bob_accept(), expect);
      EXPECT_EQ(sum(t.both) + sum(t.alice_only) + sum(t.bob_only) + t.neither, 1);
      for (std::size_t u = 0; u < inp.universe_size(); ++u) {
        const Rational s = cclb::pow2<Rational>(static_cast<long>(d));
        const Rational both = std::min<Rational>(inp.p_a[u], s * inp.q_b[u]) *
                              std::min<Rational>(inp.p_b[u], s * inp.q_a[u]) /
                              (Rational(static_cast<long>(inp.universe_size())) * s * s);
        EXPECT_EQ(t.both[u], both);
      }
      ++checked;
    }
  }
}

TEST(Experiment, SamplingMatchesTable) {
  std::mt19937_64 rng(2);
  const auto pi = random_tree(rng, 2, 2, 3);
  const auto fac = cclb::factorization<double>(pi, InputDistribution::uniform(2, 2), 0, 1);
  const auto inp = cclb::experiment_inputs(fac, 1.0);
  const auto t = cclb::experiment_probabilities(inp);
  const std::size_t n_u = inp.universe_size();
  std::vector<double> counts(3 * n_u + 1, 0.0);
  cclb::CounterStream stream(5, 0, 0);
  const int n = 1'000'000;
  for (int i = 0; i < n; ++i) {
    const auto o = cclb::run_experiment(inp, stream);
    switch (o.kind) {
      case cclb::ExperimentOutcome::Kind::Both: ++counts[3 * o.u]; break;
      case cclb::ExperimentOutcome::Kind::AliceOnly: ++counts[3 * o.u + 1]; break;
      case cclb::ExperimentOutcome::Kind::BobOnly: ++counts[3 * o.u + 2]; break;
      case cclb::ExperimentOutcome::Kind::Neither: ++counts.back(); break;
    }
  }
  auto near = [&](double c, double p) {
    const double se = std::sqrt(std::max(p * (1 - p), 1e-12) / n);
    EXPECT_LE(std::fabs(c / n - p), 4 * se + 1e-12) << c / n << " vs " << p;
  };
  for (std::size_t u = 0; u < n_u; ++u) {
    near(counts[3 * u], t.both[u]);
    near(counts[3 * u + 1], t.alice_only[u]);
    near(counts[3 * u + 2], t.bob_only[u]);
  }
  near(counts.back(), t.neither);
}

TEST(Experiment, DegenerateSides) {
  ExperimentInputs<double> inp;
  inp.p_a = {0.0, 1.0};
  inp.q_a = {0.0, 1.0};
  inp.p_b = {1.0, 1.0};
  inp.q_b = {0.5, 0.5};
  inp.delta_exp = 1.0;
  cclb::CounterStream s(1, 0, 0);
  for (int i = 0; i < 2000; ++i) {
    const auto o = cclb::run_experiment(inp, s);
    const bool alice = o.kind == cclb::ExperimentOutcome::Kind::Both || o.kind == cclb::ExperimentOutcome::Kind::AliceOnly;
    if (alice) EXPECT_EQ(o.u, 1u);
  }
  ExperimentInputs<double> bad = inp;
  bad.p_a = {0.5, 0.5};
  EXPECT_THROW(bad.validate(), cclb::Error);
  bad = inp;
  bad.q_b = {1.5, 0.5};
  EXPECT_THROW(bad.validate(), cclb::Error);
}

TEST(Parameters, DerivedFormulas) {
  EXPECT_EQ(cclb::compression_parameters(0.5, 1.0, 4).delta_exp, 136);
  const auto p = cclb::compression_parameters(0.9, 0.01, 2);
  EXPECT_EQ(p.delta_exp, static_cast<long>(std::ceil(4 / 0.9 * (8 * 0.01 / 0.9 + 1))));
  EXPECT_EQ(p.delta_exp, 5);
  EXPECT_EQ(p.trials, 140);
  EXPECT_EQ(p.trials, std::ceil(2 * 32 * std::log(8 / 0.9)));
  EXPECT_EQ(p.hash_bits, 14);
  EXPECT_EQ(p.hash_bits, static_cast<long>(std::ceil(5 + std::log2(64 / 0.9 * std::pow(std::log(8 / 0.9), 2)))));
  EXPECT_EQ(p.lambda(), cclb::pow2<Rational>(-19));
  EXPECT_EQ(p.mode, cclb::ParameterMode::PaperExact);
}

TEST(Parameters, Override) {
  const auto p = override(3, 50, 4);
  EXPECT_EQ(p.delta_exp, 3);
  EXPECT_EQ(p.trial_count(), 50u);
  EXPECT_EQ(p.hash_bits, 4);
  EXPECT_EQ(p.lambda(), cclb::ratio(1, 128));
  EXPECT_EQ(p.mode, cclb::ParameterMode::Override);
  EXPECT_THROW(override(0, 50, 4), cclb::Error);
  EXPECT_THROW(override(3, 0, 4), cclb::Error);
  EXPECT_THROW(override(3, 2.5, 4), cclb::Error);
  EXPECT_THROW(override(3, 5, -1), cclb::Error);
  EXPECT_THROW(cclb::compression_parameters(1.0, 0.0, 2), cclb::Error);
  EXPECT_THROW(cclb::compression_parameters(0.0, 0.0, 2), cclb::Error);
  EXPECT_THROW(cclb::compression_parameters(0.5, -1.0, 2), cclb::Error);
}

TEST(OutputLaw, MatchesBruteForceExactly) {
  std::mt19937_64 rng(12);
  struct Size {
    std::size_t trials;
    long k;
  };
  for (const Size s : {Size{1, 0}, Size{1, 2}, Size{2, 0}, Size{2, 1}, Size{2, 2}, Size{3, 1}, Size{3, 2}, Size{4, 1}}) {
    for (int rep = 0; rep < 3; ++rep) {
      const auto t = random_table(rng, 2);
      const std::vector<int> labels = rep == 0 ? std::vector<int>{0, 1} : std::vector<int>{1, 1};
      const auto got = cclb::compressed_output_law(t, labels, 2, s.trials, s.k);
      const auto want = brute_law(t, labels, 2, s.trials, s.k);
      SCOPED_TRACE("T=" + std::to_string(s.trials) + " k=" + std::to_string(s.k));
      EXPECT_EQ(got.output, want.output);
      EXPECT_EQ(got.joint, want.joint);
      EXPECT_EQ(got.prob_collision, want.prob_collision);
      EXPECT_EQ(got.prob_good, want.prob_good);
      EXPECT_EQ(sum(got.output), 1);
    }
  }
}

TEST(OutputLaw, FloatAgreesWithRational) {
  std::mt19937_64 rng(13);
  for (int rep = 0; rep < 10; ++rep) {
    const auto t = random_table(rng, 3);
    ExperimentTable<double> f;
    for (std::size_t u = 0; u < 3; ++u) {
      f.both.push_back(t.both[u].get_d());
      f.alice_only.push_back(t.alice_only[u].get_d());
      f.bob_only.push_back(t.bob_only[u].get_d());
    }
    f.neither = t.neither.get_d();
    for (std::uint64_t trials : {1u, 5u, 40u}) {
      for (long k : {0L, 3L, 10L}) {
        const auto exact = cclb::compressed_output_law(t, {0, 1, 0}, 2, trials, k);
        const auto approx = cclb::compressed_output_law(f, {0, 1, 0}, 2, trials, k);
        for (std::size_t z = 0; z < 3; ++z) EXPECT_NEAR(approx.output[z], exact.output[z].get_d(), 1e-12);
        EXPECT_NEAR(approx.prob_collision, exact.prob_collision.get_d(), 1e-12);
        EXPECT_NEAR(approx.prob_good, exact.prob_good.get_d(), 1e-12);
      }
    }
  }
}

TEST(OutputLaw, SingleTrialHandFormulas) {
  std::mt19937_64 rng(14);
  const auto t = random_table(rng, 2);
  const auto law = cclb::compressed_output_law(t, {0, 1}, 2, 1, 0);
  EXPECT_EQ(law.output[0], t.both[0]);
  EXPECT_EQ(law.output[1], t.both[1]);
  EXPECT_EQ(law.output[2], 1 - t.both[0] - t.both[1]);
  EXPECT_EQ(law.joint[0][2], t.alice_only[0]);
  EXPECT_EQ(law.joint[2][1], t.bob_only[1]);
  for (long k : {4L, 20L, 60L}) {
    const auto big = cclb::compressed_output_law(t, {0, 1}, 2, 1, k);
    EXPECT_EQ(big.output[2], 1 - cclb::pow2<Rational>(-k) * (t.both[0] + t.both[1]));
    EXPECT_EQ(big.prob_collision, 0);
  }
}

TEST(ZeroComm, DeterministicAndConsistent) {
  const auto pi = cclb::noisy_bit(cclb::ratio(1, 4));
  const auto mu = InputDistribution::uniform(2, 2);
  const auto params = override(2, 12, 1);
  const cclb::ZeroCommProtocol proto(pi, mu, params);
  int agreements = 0;
  for (std::uint64_t run = 0; run < 3000; ++run) {
    for (std::size_t x = 0; x < 2; ++x) {
      for (std::size_t y = 0; y < 2; ++y) {
        const auto a = proto.alice_output(x, 7, run);
        const auto b = proto.bob_output(y, 7, run);
        const auto joint = proto.run(x, y, 7, run);
        EXPECT_EQ(joint, a && a == b ? a : std::nullopt);
        EXPECT_EQ(joint, cclb::run_zero_comm(pi, mu, x, y, params, 7, run));
        agreements += joint.has_value();
      }
    }
  }
  EXPECT_GT(agreements, 0);
}

TEST(ZeroComm, TrivialSingleTrial) {
  // T = 1, k = 0: non-abort exactly when experiment 1 is accepted by both.
  const auto pi = cclb::trivial_const(1);
  const auto mu = InputDistribution::uniform(1, 1);
  const auto params = cclb::compression_parameters(0.5, 0.0, 1, ParameterOverride{1, 1, 0});
  const auto law = cclb::exact_output_distribution<Rational>(pi, mu, 0, 0, 2, params);
  EXPECT_EQ(law.output[1], cclb::ratio(1, 4));
  EXPECT_EQ(law.output[2], cclb::ratio(3, 4));
}

TEST(ZeroComm, MonteCarloMatchesExactLaw) {
  const auto pi = cclb::noisy_bit(cclb::ratio(1, 4));
  const auto mu = InputDistribution::uniform(2, 2);
  const auto params = override(3, 30, 2);
  const cclb::ZeroCommProtocol proto(pi, mu, params);
  const std::uint64_t n = 200'000;
  for (std::size_t x = 0; x < 2; ++x) {
    const auto counts = cclb::monte_carlo_counts(proto, x, 1, 2, 3, n);
    const auto law = cclb::exact_output_distribution<double>(pi, mu, x, 1, 2, params);
    for (std::size_t z = 0; z < 3; ++z) {
      const double p = law.output[z];
      const double se = std::sqrt(p * (1 - p) / static_cast<double>(n));
      EXPECT_LE(std::fabs(static_cast<double>(counts[z]) / static_cast<double>(n) - p), 4.5 * se) << x << z;
    }
    EXPECT_EQ(counts, cclb::monte_carlo_counts(proto, x, 1, 2, 3, n, 1));
  }
}

TEST(ZeroComm, CapacityErrors) {
  const auto mu = InputDistribution::uniform(2, 2);
  auto kind = [](const std::function<void()>& fn) {
    try {
      fn();
    } catch (const cclb::Error& e) {
      return e.kind();
    }
    return cclb::ErrorKind::Input;
  };
  EXPECT_EQ(kind([&] {
              cclb::exact_output_distribution<double>(cclb::noisy_bit(cclb::ratio(1, 4)), mu, 0, 0, 2,
                                                      override(3, 2e6, 2));
            }),
            cclb::ErrorKind::Capacity);
  const auto eq = cclb::equality(3);
  const auto big = cclb::exchange_all(eq);
  EXPECT_EQ(kind([&] {
              cclb::exact_output_distribution<double>(big, InputDistribution::uniform(8, 8), 0, 0, 2,
                                                      override(3, 4, 2, 0.5, big.num_leaves()));
            }),
            cclb::ErrorKind::Capacity);
  EXPECT_EQ(kind([] { cclb::compression_parameters(0.001, 100.0, 2); }), cclb::ErrorKind::Capacity);
}

TEST(Verify, TrivialProtocolPaperExact) {
  const auto f = cclb::constant(1);
  const auto mu = InputDistribution::uniform(2, 2);
  const auto pi = cclb::trivial_const(1);
  const auto params = cclb::compression_parameters(0.9, 0.0, 1);
  const auto rep = cclb::verify_compression(pi, f, mu, params);
  EXPECT_TRUE(rep.eq4_pass);
  EXPECT_TRUE(rep.eq5_pass);
  EXPECT_TRUE(rep.eq6_pass);
  EXPECT_TRUE(rep.defects.empty());
  EXPECT_EQ(rep.bad_divergence_mass, 0.0);
  EXPECT_EQ(rep.inputs.size(), 4u);
  EXPECT_NEAR(rep.eq4_distance, 0.0, 1e-12);
}

TEST(Verify, NoisyBitPaperExact) {
  const auto f = cclb::PartialFunction(2, 2, 2, {0, 0, 1, 1});
  const auto mu = InputDistribution::uniform(2, 2);
  const auto pi = cclb::noisy_bit(cclb::ratio(1, 4));
  const double ic = cclb::information_cost<Rational>(pi, mu);
  const auto params = cclb::compression_parameters(0.9, ic, 2);
  const auto rep = cclb::verify_compression(pi, f, mu, params);
  EXPECT_TRUE(rep.pass());
  EXPECT_TRUE(rep.defects.empty());
  // A mismatched parameter set is rejected in paper-exact mode.
  auto wrong = params;
  wrong.hash_bits += 1;
  EXPECT_THROW(cclb::verify_compression(pi, f, mu, wrong), cclb::Error);
}

TEST(Verify, OverrideFailuresAreNotDefects) {
  const auto f = cclb::PartialFunction(2, 2, 2, {0, 0, 1, 1});
  const auto mu = InputDistribution::uniform(2, 2);
  const auto pi = cclb::noisy_bit(cclb::ratio(1, 4));
  const auto rep = cclb::verify_compression(pi, f, mu, override(1, 1, 0, 0.1));
  EXPECT_FALSE(rep.pass());
  EXPECT_TRUE(rep.defects.empty());
}

TEST(Verify, MonteCarloCsvIsDeterministic) {
  const auto f = cclb::constant(1);
  const auto mu = InputDistribution::uniform(2, 2);
  cclb::VerifyOptions opt;
  opt.engine = cclb::Engine::MC;
  opt.samples = 20'000;
  opt.seed = 11;
  const auto params = override(2, 8, 1, 0.5, 1);
  const auto a = cclb::format_compression_csv(cclb::verify_compression(cclb::trivial_const(1), f, mu, params, opt));
  const auto b = cclb::format_compression_csv(cclb::verify_compression(cclb::trivial_const(1), f, mu, params, opt));
  EXPECT_EQ(a, b);
  EXPECT_NE(a.find("x,y,prob_not_abort,lambda,eq5_pass,eq6_pass,eq4_distance,eq4_pass,std_error"), std::string::npos);
  opt.seed = 12;
  EXPECT_NE(a, cclb::format_compression_csv(cclb::verify_compression(cclb::trivial_const(1), f, mu, params, opt)));
}

TEST(Strategy, RectanglesComeFromPartyMaps) {
  const auto f = cclb::PartialFunction(2, 2, 2, {0, 0, 1, 1});
  const auto mu = InputDistribution::uniform(2, 2);
  const auto pi = cclb::noisy_bit(cclb::ratio(1, 4));
  const auto params = override(1, 3, 0);
  const std::uint64_t seeds = 500;
  const auto est = cclb::extract_strategy(pi, f, mu, params, seeds, 4);
  EXPECT_EQ(est.total_weight(), 1);

  const cclb::ZeroCommProtocol proto(pi, mu, params);
  std::map<std::pair<cclb::Rectangle, int>, std::uint64_t> want;
  for (std::uint64_t s = 0; s < seeds; ++s) {
    for (int z = 0; z < 2; ++z) {
      unsigned rows = 0, cols = 0;
      for (unsigned v = 0; v < 2; ++v) {
        if (proto.alice_output(v, 4, s) == z) rows |= 1u << v;
        if (proto.bob_output(v, 4, s) == z) cols |= 1u << v;
      }
      ++want[{cclb::Rectangle(rows, cols), z}];
    }
  }
  std::map<std::pair<cclb::Rectangle, int>, std::uint64_t> got;
  for (const auto& e : est.entries) {
    got[{e.rect, e.label}] = e.count;
    EXPECT_EQ(e.weight, Rational(static_cast<long>(e.count)) / static_cast<long>(2 * seeds));
  }
  EXPECT_EQ(got, want);
  EXPECT_NEAR(est.eta, 1.5 * params.lambda_double() / 2, 1e-15);
  EXPECT_NEAR(est.eps, 0.25, 1e-12);
  EXPECT_NEAR(est.strategy().total_weight(), 1.0, 1e-12);
}

TEST(Strategy, ConstantProtocolMeetsThreshold) {
  const auto f = cclb::constant(1);
  const auto mu = InputDistribution::uniform(2, 2);
  const auto params = override(1, 4, 1, 0.9, 1);
  const auto est = cclb::extract_strategy(cclb::trivial_const(1), f, mu, params, 20'000, 1);
  EXPECT_TRUE(est.correctness_pass);
  EXPECT_TRUE(est.coverage_pass);
  EXPECT_LE(est.correctness_threshold, 0.0);  // eps + 3 delta > 1
  EXPECT_EQ(est.total_weight(), 1);
  EXPECT_THROW(cclb::extract_strategy(cclb::trivial_const(1), f, mu, params, 0), cclb::Error);
}

TEST(ConditionalDistance, Examples) {
  const cclb::FiniteDistribution<Rational> pi({cclb::ratio(1, 2), cclb::ratio(1, 2)});
  // Four outcomes: values 0, 1, 0, 1 with masses 1/4 each.
  cclb::FiniteSpace space{{cclb::ratio(1, 4), cclb::ratio(1, 4), cclb::ratio(1, 4), cclb::ratio(1, 4)}, {0, 1, 0, 1}, 2};
  const std::vector<bool> none(4, false), all(4, true);
  const auto empty_f = cclb::conditional_distance_check(pi, space, none, all, Rational(0));
  EXPECT_TRUE(empty_f.holds);
  EXPECT_EQ(empty_f.bound, 0);
  EXPECT_EQ(empty_f.precondition, 0);
  const std::vector<bool> tiny{true, false, false, false};
  const auto r = cclb::conditional_distance_check(pi, space, tiny, all, cclb::ratio(1, 6));
  EXPECT_EQ(r.precondition, cclb::ratio(1, 6));  // E has values (1, 0, 1) -> (1/3, 2/3)
  EXPECT_EQ(r.bound, cclb::ratio(1, 6) + cclb::ratio(1, 4));
  EXPECT_EQ(r.distance, 0);
  EXPECT_TRUE(r.holds);
  try {
    cclb::conditional_distance_check(pi, space, none, none, Rational(0));
    FAIL();
  } catch (const cclb::Error& e) {
    EXPECT_EQ(e.kind(), cclb::ErrorKind::Conditioning);
  }
}

TEST(ConditionalDistance, RandomSpaces) {
  std::mt19937_64 rng(19);
  std::uniform_int_distribution<long> w(0, 5);
  std::bernoulli_distribution coin(0.4);
  int tested = 0;
  while (tested < 300) {
    const std::size_t n = 6, universe = 3;
    cclb::FiniteSpace space;
    space.universe = universe;
    long total = 0;
    std::vector<long> raw(n);
    for (auto& v : raw) total += (v = w(rng));
    if (total == 0) continue;
    for (std::size_t i = 0; i < n; ++i) {
      space.prob.push_back(cclb::ratio(raw[i], total));
      space.value.push_back(i % universe);
    }
    std::vector<bool> fset(n), hset(n);
    for (std::size_t i = 0; i < n; ++i) {
      hset[i] = !coin(rng);
      fset[i] = coin(rng);
    }
    Rational ph = 0;
    for (std::size_t i = 0; i < n; ++i) ph += hset[i] ? space.prob[i] : Rational(0);
    if (ph == 0) continue;
    std::vector<long> pr(universe);
    long pt = 0;
    for (auto& v : pr) pt += (v = 1 + w(rng));
    std::vector<Rational> pim;
    for (long v : pr) pim.push_back(cclb::ratio(v, pt));
    const cclb::FiniteDistribution<Rational> pi(pim);
    const auto first = cclb::conditional_distance_check(pi, space, fset, hset, Rational(0));
    // With c equal to the precondition the inequality always holds.
    const auto r = cclb::conditional_distance_check(pi, space, fset, hset, first.precondition);
    EXPECT_TRUE(r.holds);
    ++tested;
  }
}

#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <random>

#include "cclb/corpus.hpp"
#include "cclb/error.hpp"
#include "cclb/protocol.hpp"

using cclb::InputDistribution;
using cclb::Owner;
using cclb::ProtocolTree;
using cclb::Rational;

namespace {

// Leaf law by walking the node array directly.
std::vector<Rational> walk(const ProtocolTree& pi, std::size_t x, std::size_t y) {
  std::vector<Rational> out(pi.num_leaves(), Rational(0));
  std::function<void(std::size_t, Rational)> go = [&](std::size_t n, Rational p) {
    const auto& node = pi.nodes()[n];
    if (node.is_leaf) {
      out[node.leaf_index] += p;
      return;
    }
    const Rational p1 = node.p1[node.owner == Owner::Bob ? y : (node.owner == Owner::Alice ? x : 0)];
    go(node.zero, p * (1 - p1));
    go(node.one, p * p1);
  };
  go(0, Rational(1));
  return out;
}

ProtocolTree random_tree(std::mt19937_64& rng, std::size_t nx, std::size_t ny, int depth) {
  std::uniform_int_distribution<int> coin(0, 3), num(0, 8);
  if (depth == 0 || coin(rng) == 0) return ProtocolTree::leaf(coin(rng) % 2);
  const Owner owner = coin(rng) % 2 ? Owner::Alice : Owner::Bob;
  std::vector<Rational> p1(owner == Owner::Alice ? nx : ny);
  for (auto& p : p1) p = cclb::ratio(num(rng), 8);
  auto zero = random_tree(rng, nx, ny, depth - 1);
  auto one = random_tree(rng, nx, ny, depth - 1);
  return ProtocolTree::node(owner, std::move(p1), std::move(zero), std::move(one));
}

InputDistribution random_mu(std::mt19937_64& rng, std::size_t nx, std::size_t ny) {
  std::uniform_int_distribution<long> draw(1, 9);
  std::vector<long> raw(nx * ny);
  long total = 0;
  for (auto& v : raw) total += (v = draw(rng));
  std::vector<Rational> mass;
  for (long v : raw) mass.push_back(cclb::ratio(v, total));
  return InputDistribution::from_exact(nx, ny, std::move(mass));
}

double h(double p) { return p <= 0 || p >= 1 ? 0.0 : -p * std::log2(p) - (1 - p) * std::log2(1 - p); }

// I(X;U|Y) + I(Y;U|X) from the joint law by entropy sums.
double ic_oracle(const ProtocolTree& pi, const InputDistribution& mu) {
  const std::size_t nx = mu.x_size(), ny = mu.y_size(), nu = pi.num_leaves();
  std::vector<double> joint(nx * ny * nu);
  for (std::size_t x = 0; x < nx; ++x) {
    for (std::size_t y = 0; y < ny; ++y) {
      const auto law = walk(pi, x, y);
      for (std::size_t u = 0; u < nu; ++u) joint[(x * ny + y) * nu + u] = Rational(mu.mass<Rational>(x, y) * law[u]).get_d();
    }
  }
  auto term = [&](bool cond_on_y) {
    // I(A;U|C) = sum p(a,c,u) log p(a,c,u) p(c) / (p(a,c) p(c,u)).
    const std::size_t na = cond_on_y ? nx : ny, nc = cond_on_y ? ny : nx;
    double total = 0;
    for (std::size_t c = 0; c < nc; ++c) {
      double pc = 0;
      std::vector<double> pcu(nu, 0.0), pac(na, 0.0);
      auto at = [&](std::size_t a, std::size_t u) {
        return cond_on_y ? joint[(a * ny + c) * nu + u] : joint[(c * ny + a) * nu + u];
      };
      for (std::size_t a = 0; a < na; ++a) {
        for (std::size_t u = 0; u < nu; ++u) {
          pc += at(a, u);
          pcu[u] += at(a, u);
          pac[a] += at(a, u);
        }
      }
      for (std::size_t a = 0; a < na; ++a) {
        for (std::size_t u = 0; u < nu; ++u) {
          const double p = at(a, u);
          if (p > 0) total += p * std::log2(p * pc / (pac[a] * pcu[u]));
        }
      }
    }
    return total;
  };
  return term(true) + term(false);
}

std::vector<Rational> dist(const cclb::TranscriptDistribution<Rational>& d) {
  return {d.dist.weights().begin(), d.dist.weights().end()};
}

}  // namespace

TEST(Protocol, TranscriptExamples) {
  EXPECT_EQ(dist(cclb::transcript_distribution<Rational>(ProtocolTree::leaf(1), 0, 0)), std::vector<Rational>{1});
  const auto send = cclb::send_x(1);
  EXPECT_EQ(dist(cclb::transcript_distribution<Rational>(send, 1, 0)), (std::vector<Rational>{0, 1}));
  const auto noisy = cclb::noisy_bit(cclb::ratio(1, 4));
  EXPECT_EQ(dist(cclb::transcript_distribution<Rational>(noisy, 0, 0)),
            (std::vector<Rational>{cclb::ratio(3, 4), cclb::ratio(1, 4)}));
  const auto fd = cclb::transcript_distribution<double>(noisy, 0, 0);
  EXPECT_DOUBLE_EQ(fd.dist[0], 0.75);
}

TEST(Protocol, LeafLawMatchesDirectWalk) {
  std::mt19937_64 rng(21);
  for (int i = 0; i < 100; ++i) {
    const auto pi = random_tree(rng, 3, 2, 4);
    for (std::size_t x = 0; x < 3; ++x) {
      for (std::size_t y = 0; y < 2; ++y) {
        const auto law = walk(pi, x, y);
        EXPECT_EQ(cclb::leaf_probabilities<Rational>(pi, x, y), law);
        Rational s = 0;
        for (const auto& v : law) s += v;
        EXPECT_EQ(s, 1);
      }
    }
  }
}

TEST(Protocol, Marginals) {
  const auto mu = InputDistribution::uniform(2, 2);
  const auto sy = cclb::send_y(1);
  EXPECT_EQ(dist(cclb::marginal_x<Rational>(sy, mu, 0)), (std::vector<Rational>{cclb::ratio(1, 2), cclb::ratio(1, 2)}));
  const auto noisy = cclb::noisy_bit(cclb::ratio(1, 4));
  EXPECT_EQ(dist(cclb::marginal_x<Rational>(noisy, mu, 1)), dist(cclb::transcript_distribution<Rational>(noisy, 1, 0)));

  std::mt19937_64 rng(4);
  for (int i = 0; i < 20; ++i) {
    const auto m = random_mu(rng, 2, 3);
    const auto pi = random_tree(rng, 2, 3, 3);
    for (std::size_t x = 0; x < 2; ++x) {
      std::vector<Rational> expect(pi.num_leaves(), Rational(0));
      for (std::size_t y = 0; y < 3; ++y) {
        const auto law = walk(pi, x, y);
        for (std::size_t u = 0; u < law.size(); ++u) expect[u] += m.mass<Rational>(x, y) / m.x_marginal<Rational>(x) * law[u];
      }
      EXPECT_EQ(dist(cclb::marginal_x<Rational>(pi, m, x)), expect);
    }
    for (std::size_t y = 0; y < 3; ++y) {
      std::vector<Rational> expect(pi.num_leaves(), Rational(0));
      for (std::size_t x = 0; x < 2; ++x) {
        const auto law = walk(pi, x, y);
        for (std::size_t u = 0; u < law.size(); ++u) expect[u] += m.mass<Rational>(x, y) / m.y_marginal<Rational>(y) * law[u];
      }
      EXPECT_EQ(dist(cclb::marginal_y<Rational>(pi, m, y)), expect);
    }
  }
}

TEST(Protocol, ZeroMarginalIsConditioningError) {
  const auto mu = InputDistribution::from_exact(2, 2, {cclb::ratio(1, 2), cclb::ratio(1, 2), 0, 0});
  try {
    cclb::marginal_x<Rational>(cclb::send_x(1), mu, 1);
    FAIL();
  } catch (const cclb::Error& e) {
    EXPECT_EQ(e.kind(), cclb::ErrorKind::Conditioning);
  }
}

TEST(Protocol, FactorizationExamples) {
  const auto fz = cclb::factorization<Rational>(cclb::send_x(1), InputDistribution::uniform(2, 2), 0, 0);
  EXPECT_EQ(fz.p_a, (std::vector<Rational>{1, 0}));
  EXPECT_EQ(fz.p_b, (std::vector<Rational>{1, 1}));
  EXPECT_EQ(fz.q_a, (std::vector<Rational>{1, 0}));
  EXPECT_EQ(fz.q_b, (std::vector<Rational>{cclb::ratio(1, 2), cclb::ratio(1, 2)}));
  const auto leaf = cclb::factorization<Rational>(ProtocolTree::leaf(0), InputDistribution::uniform(1, 1), 0, 0);
  EXPECT_EQ(leaf.p_a, std::vector<Rational>{1});
  EXPECT_EQ(leaf.q_b, std::vector<Rational>{1});
}

TEST(Protocol, FactorizationIdentities) {
  std::mt19937_64 rng(8);
  for (int i = 0; i < 50; ++i) {
    const auto pi = random_tree(rng, 2, 2, 4);
    const auto mu = random_mu(rng, 2, 2);
    for (std::size_t x = 0; x < 2; ++x) {
      for (std::size_t y = 0; y < 2; ++y) {
        const auto fz = cclb::factorization<Rational>(pi, mu, x, y);
        const auto joint = walk(pi, x, y);
        const auto px = dist(cclb::marginal_x<Rational>(pi, mu, x));
        const auto py = dist(cclb::marginal_y<Rational>(pi, mu, y));
        for (std::size_t u = 0; u < joint.size(); ++u) {
          EXPECT_EQ(fz.p_a[u] * fz.p_b[u], joint[u]);
          EXPECT_EQ(fz.p_a[u] * fz.q_a[u], px[u]);
          EXPECT_EQ(fz.p_b[u] * fz.q_b[u], py[u]);
          for (const auto* v : {&fz.p_a[u], &fz.q_a[u], &fz.p_b[u], &fz.q_b[u]}) {
            EXPECT_GE(*v, 0);
            EXPECT_LE(*v, 1);
          }
        }
      }
    }
  }
}

TEST(Protocol, InformationCostExamples) {
  const auto mu = InputDistribution::uniform(2, 2);
  EXPECT_NEAR(cclb::information_cost<Rational>(ProtocolTree::leaf(0), mu), 0.0, 1e-12);
  EXPECT_NEAR(cclb::information_cost<Rational>(cclb::send_x(1), mu), 1.0, 1e-12);
  EXPECT_NEAR(cclb::information_cost<double>(cclb::noisy_bit(cclb::ratio(1, 4)), mu), 1.0 - h(0.25), 1e-9);
  EXPECT_NEAR(1.0 - h(0.25), 0.188722, 1e-6);
}

TEST(Protocol, InformationCostMatchesEntropyOracle) {
  std::mt19937_64 rng(31);
  for (int i = 0; i < 50; ++i) {
    const auto pi = random_tree(rng, 2, 3, 4);
    const auto mu = random_mu(rng, 2, 3);
    const auto rep = cclb::information_cost_report<Rational>(pi, mu);
    const double oracle = ic_oracle(pi, mu);
    EXPECT_NEAR(rep.from_entropies, oracle, 1e-9);
    EXPECT_NEAR(rep.from_divergences, oracle, 1e-9);
    EXPECT_NEAR(rep.alice_term + rep.bob_term, oracle, 1e-9);
    EXPECT_GE(rep.alice_term, -1e-12);
    EXPECT_GE(rep.bob_term, -1e-12);
    EXPECT_NEAR(cclb::information_cost<double>(pi, mu), oracle, 1e-9);
  }
}

TEST(Protocol, ErrorExamples) {
  const auto mu = InputDistribution::uniform(2, 2);
  EXPECT_EQ(cclb::protocol_error<Rational>(cclb::trivial_const(1), cclb::constant(1), mu), 0);
  EXPECT_EQ(cclb::protocol_error<Rational>(cclb::trivial_const(1), cclb::equality(1), mu), cclb::ratio(1, 2));
  const cclb::PartialFunction ones(2, 2, 2, {1, cclb::PartialFunction::kUndefined, cclb::PartialFunction::kUndefined, 1});
  EXPECT_EQ(cclb::protocol_error<Rational>(cclb::trivial_const(1), ones, mu), 0);
  const auto noisy = cclb::noisy_bit(cclb::ratio(1, 4));
  const cclb::PartialFunction first_bit(2, 2, 2, {0, 0, 1, 1});
  EXPECT_EQ(cclb::protocol_error<Rational>(noisy, first_bit, mu), cclb::ratio(1, 4));
}

TEST(Protocol, OutputDistribution) {
  const auto noisy = cclb::noisy_bit(cclb::ratio(1, 4));
  EXPECT_EQ(cclb::output_distribution<Rational>(noisy, 1, 0, 3),
            (std::vector<Rational>{cclb::ratio(1, 4), cclb::ratio(3, 4), 0}));
}

TEST(Protocol, TextRoundTrip) {
  std::mt19937_64 rng(2);
  for (int i = 0; i < 20; ++i) {
    const auto pi = random_tree(rng, 2, 3, 4);
    const auto back = cclb::parse_protocol(cclb::format_protocol(pi));
    EXPECT_EQ(cclb::format_protocol(back), cclb::format_protocol(pi));
    for (std::size_t x = 0; x < 2; ++x) {
      for (std::size_t y = 0; y < 3; ++y) EXPECT_EQ(walk(back, x, y), walk(pi, x, y));
    }
  }
  const auto parsed = cclb::parse_protocol("COMMPROT 1\n(node owner=A p1=(0 1) zero=(leaf z=0) one=(leaf z=1))\n");
  EXPECT_EQ(parsed.num_leaves(), 2u);
  EXPECT_EQ(parsed.x_size(), 2u);
  EXPECT_FALSE(parsed.y_size().has_value());
}

TEST(Protocol, ParseErrors) {
  for (const char* bad : {"", "COMMPROT 2\n(leaf z=0)", "COMMPROT 1\n(leaf)", "COMMPROT 1\n(node owner=Q p1=(1) zero=(leaf z=0) one=(leaf z=1))",
                          "COMMPROT 1\n(node owner=A p1=(2) zero=(leaf z=0) one=(leaf z=1))",
                          "COMMPROT 1\n(leaf z=0) trailing", "COMMPROT 1\n(node owner=A p1=(1) zero=(leaf z=0))"}) {
    EXPECT_THROW(cclb::parse_protocol(bad), cclb::Error) << bad;
  }
  EXPECT_THROW(cclb::load_protocol("/nonexistent/p.prot"), cclb::Error);
}

TEST(Protocol, InputSizeChecks) {
  auto kind = [](const std::function<void()>& fn) {
    try {
      fn();
    } catch (const cclb::Error& e) {
      return e.kind();
    }
    return cclb::ErrorKind::Solver;
  };
  EXPECT_EQ(kind([] {
              ProtocolTree::node(Owner::Alice, {0, 1}, ProtocolTree::leaf(0),
                                 ProtocolTree::node(Owner::Alice, {0, 1, 1}, ProtocolTree::leaf(0), ProtocolTree::leaf(1)));
            }),
            cclb::ErrorKind::Input);
  EXPECT_EQ(kind([] { cclb::send_x(1).check_inputs(3, 2); }), cclb::ErrorKind::Dimension);
  EXPECT_EQ(kind([] { cclb::transcript_distribution<double>(cclb::send_x(1), 2, 0); }), cclb::ErrorKind::Dimension);
  EXPECT_EQ(kind([] { cclb::output_distribution<double>(cclb::trivial_const(1), 0, 0, 1); }),
            cclb::ErrorKind::Dimension);
}

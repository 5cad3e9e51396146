#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cclb/distribution.hpp"
#include "cclb/function.hpp"
#include "cclb/rational.hpp"

namespace cclb {

enum class Owner { Alice, Bob, Public };

const char* to_string(Owner owner) noexcept;

// A finite binary protocol tree. Internal nodes hold, for each input of
// their owner, the probability of sending bit 1; leaves hold the output.
// Leaves are numbered in depth-first order taking the 0-branch first, so
// transcripts are listed lexicographically.
class ProtocolTree {
 public:
  struct Node {
    bool is_leaf = true;
    int output = 0;
    Owner owner = Owner::Public;
    std::vector<Rational> p1;
    std::vector<double> p1_approx;
    std::size_t zero = 0;
    std::size_t one = 0;
    std::size_t leaf_index = 0;  // leaves only
  };

  struct Leaf {
    std::size_t node = 0;
    std::string path;  // bits from the root, e.g. "010"
    int output = 0;
  };

  static ProtocolTree leaf(int output);
  static ProtocolTree node(Owner owner, std::vector<Rational> p1, ProtocolTree zero, ProtocolTree one);

  const std::vector<Node>& nodes() const noexcept { return nodes_; }
  const Node& root() const { return nodes_.front(); }
  const std::vector<Leaf>& leaves() const noexcept { return leaves_; }
  std::size_t num_leaves() const noexcept { return leaves_.size(); }
  std::size_t depth() const noexcept { return depth_; }

  // Input sizes implied by the Alice and Bob tables; empty when the tree
  // has no node of that owner.
  std::optional<std::size_t> x_size() const noexcept { return x_size_; }
  std::optional<std::size_t> y_size() const noexcept { return y_size_; }
  int max_output() const noexcept { return max_output_; }

  // Dimension error unless the tables fit an X x Y input space.
  void check_inputs(std::size_t x_size, std::size_t y_size) const;

 private:
  ProtocolTree() = default;
  void finalize();

  std::vector<Node> nodes_;
  std::vector<Leaf> leaves_;
  std::size_t depth_ = 0;
  std::optional<std::size_t> x_size_;
  std::optional<std::size_t> y_size_;
  int max_output_ = 0;
};

enum class TranscriptSource { Joint, MarginalX, MarginalY };

template <Scalar T>
struct TranscriptDistribution {
  FiniteDistribution<T> dist;
  TranscriptSource source = TranscriptSource::Joint;
  std::size_t x = 0;  // conditioning inputs that apply to `source`
  std::size_t y = 0;
};

// Pi_{x,y}(u) = p_a(u) p_b(u), Pi_x(u) = p_a(u) q_a(u), Pi_y(u) = p_b(u) q_b(u).
template <Scalar T>
struct Factorization {
  std::vector<T> p_a;
  std::vector<T> q_a;
  std::vector<T> p_b;
  std::vector<T> q_b;
};

// Leaf probabilities without validation; the building block for the rest.
template <Scalar T>
std::vector<T> leaf_probabilities(const ProtocolTree& pi, std::size_t x, std::size_t y);

// Product of Alice-owned and public factors along each leaf path.
template <Scalar T>
std::vector<T> alice_factor(const ProtocolTree& pi, std::size_t x);

// Product of Bob-owned factors along each leaf path.
template <Scalar T>
std::vector<T> bob_factor(const ProtocolTree& pi, std::size_t y);

template <Scalar T>
TranscriptDistribution<T> transcript_distribution(const ProtocolTree& pi, std::size_t x, std::size_t y);

template <Scalar T>
TranscriptDistribution<T> marginal_x(const ProtocolTree& pi, const InputDistribution& mu, std::size_t x);

template <Scalar T>
TranscriptDistribution<T> marginal_y(const ProtocolTree& pi, const InputDistribution& mu, std::size_t y);

// q is defined as 0 wherever p is 0.
template <Scalar T>
Factorization<T> factorization(const ProtocolTree& pi, const InputDistribution& mu, std::size_t x, std::size_t y);

struct InformationCostReport {
  double from_entropies = 0.0;    // I(X;Pi|Y) + I(Y;Pi|X) from the joint law
  double from_divergences = 0.0;  // E[D(Pi_xy || Pi_x) + D(Pi_xy || Pi_y)]
  double alice_term = 0.0;        // I(X;Pi|Y)
  double bob_term = 0.0;          // I(Y;Pi|X)
};

// Computes both forms and raises a solver error if they differ by more
// than 1e-9 bits.
template <Scalar T>
InformationCostReport information_cost_report(const ProtocolTree& pi, const InputDistribution& mu);

template <Scalar T>
double information_cost(const ProtocolTree& pi, const InputDistribution& mu) {
  return information_cost_report<T>(pi, mu).from_entropies;
}

// Probability that the input is in the promise and the output is wrong.
template <Scalar T>
T protocol_error(const ProtocolTree& pi, const PartialFunction& f, const InputDistribution& mu);

// Law of the output on input (x, y), indexed by z < z_size.
template <Scalar T>
std::vector<T> output_distribution(const ProtocolTree& pi, std::size_t x, std::size_t y, std::size_t z_size);

// "COMMPROT 1" followed by one s-expression:
//   (node owner=A|B|P p1=(d ... d) zero=<tree> one=<tree>) | (leaf z=<int>)
ProtocolTree parse_protocol(std::string_view text);
std::string format_protocol(const ProtocolTree& pi);
ProtocolTree load_protocol(const std::string& path);

}  // namespace cclb

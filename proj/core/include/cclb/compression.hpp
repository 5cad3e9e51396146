#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cclb/bounds.hpp"
#include "cclb/distribution.hpp"
#include "cclb/function.hpp"
#include "cclb/protocol.hpp"
#include "cclb/rational.hpp"
#include "cclb/random.hpp"

namespace cclb {

// ---------------------------------------------------------------------------
// Single sampling experiment

// Inputs of one experiment over a universe of |U| transcripts with
// tau = p_a p_b, nu_a = p_a q_a and nu_b = p_b q_b all distributions.
template <Scalar T>
struct ExperimentInputs {
  std::vector<T> p_a;
  std::vector<T> q_a;
  std::vector<T> p_b;
  std::vector<T> q_b;
  double delta_exp = 1.0;  // must be integral in rational mode

  std::size_t universe_size() const noexcept { return p_a.size(); }
  // Input error unless the three products are distributions.
  void validate() const;
};

template <Scalar T>
ExperimentInputs<T> experiment_inputs(const Factorization<T>& fac, double delta_exp);

template <Scalar T>
struct ExperimentTable {
  std::vector<T> both;
  std::vector<T> alice_only;
  std::vector<T> bob_only;
  T neither{};

  T alice_accept() const;
  T bob_accept() const;
  T accept() const;
};

// Closed-form per-transcript outcome probabilities.
template <Scalar T>
ExperimentTable<T> experiment_probabilities(const ExperimentInputs<T>& inp);

struct ExperimentOutcome {
  enum class Kind { Both, AliceOnly, BobOnly, Neither };
  Kind kind = Kind::Neither;
  std::size_t u = 0;  // meaningless for Neither
};

// The public coins of one experiment.
struct ExperimentDraw {
  std::size_t u = 0;
  double alpha = 0.0;
  double beta = 0.0;
};

ExperimentDraw draw_experiment(CounterStream& stream, std::size_t universe_size, double scale);

ExperimentOutcome run_experiment(const ExperimentInputs<double>& inp, CounterStream& stream);

// ---------------------------------------------------------------------------
// Parameters

enum class ParameterMode { PaperExact, Override };

struct ParameterOverride {
  long delta_exp = 1;
  double trials = 1;
  long hash_bits = 0;
};

struct CompressionParameters {
  double delta = 0.5;
  double info_cost = 0.0;
  std::size_t universe_size = 1;
  long delta_exp = 1;      // Delta
  double trials = 1;       // T, an integer that may exceed 2^64 in paper-exact mode
  long hash_bits = 0;      // k
  ParameterMode mode = ParameterMode::Override;

  // lambda = 2^-(k + Delta).
  Rational lambda() const { return pow2<Rational>(-(hash_bits + delta_exp)); }
  double lambda_double() const { return std::ldexp(1.0, static_cast<int>(-(hash_bits + delta_exp))); }
  // T as an integer; capacity error above 2^53.
  std::uint64_t trial_count() const;
};

inline constexpr double kLambdaConstant = 64.0;  // C in lambda >= 2^{-C (I / delta^2 + 1 / delta)}

CompressionParameters compression_parameters(double delta, double info_cost, std::size_t universe_size,
                                             const std::optional<ParameterOverride>& overrides = std::nullopt);

// ---------------------------------------------------------------------------
// Zero-communication protocol

// One party's view: its two functions over U.
struct PartyTables {
  std::vector<double> p;
  std::vector<double> q;
};

// Per-party evaluation of the compressed protocol. Alice's output depends
// only on x and the shared randomness (seed, run); Bob's only on y.
// Experiment i reads stream i + 1; stream 0 holds r (block 0) and h(i)
// (block i + 1).
class ZeroCommProtocol {
 public:
  ZeroCommProtocol(const ProtocolTree& pi, const InputDistribution& mu, const CompressionParameters& params);

  const CompressionParameters& params() const noexcept { return params_; }
  std::size_t x_size() const noexcept { return alice_.size(); }
  std::size_t y_size() const noexcept { return bob_.size(); }

  // nullopt is the abort symbol.
  std::optional<int> alice_output(std::size_t x, std::uint64_t seed, std::uint64_t run) const;
  std::optional<int> bob_output(std::size_t y, std::uint64_t seed, std::uint64_t run) const;
  // Common output, or nullopt unless both parties output the same value.
  // Equivalent to comparing alice_output and bob_output, sharing draws.
  std::optional<int> run(std::size_t x, std::size_t y, std::uint64_t seed, std::uint64_t run) const;

 private:
  const PartyTables& alice_tables(std::size_t x) const;
  const PartyTables& bob_tables(std::size_t y) const;
  std::uint64_t hash_value(const CounterStream& shared, std::uint64_t index) const;

  CompressionParameters params_;
  std::uint64_t trials_;
  std::uint64_t mask_;
  double scale_;
  std::vector<int> labels_;
  std::vector<std::optional<PartyTables>> alice_;
  std::vector<std::optional<PartyTables>> bob_;
};

std::optional<int> run_zero_comm(const ProtocolTree& pi, const InputDistribution& mu, std::size_t x, std::size_t y,
                                 const CompressionParameters& params, std::uint64_t seed, std::uint64_t run = 0);

// ---------------------------------------------------------------------------
// Exact output law

template <Scalar T>
struct OutputLaw {
  std::vector<T> output;  // index z for z < labels, abort last
  // joint[a][b]: Alice's and Bob's individual outputs, abort last.
  std::vector<std::vector<T>> joint;
  T prob_collision{};  // B_C: two distinct accepted indices hit r
  T prob_good{};       // G: Alice's first index hits r and Bob accepts it

  T not_abort() const;
};

// Exact law of the compressed protocol for one experiment table, with
// transcript u mapped to label labels[u] < label_count.
template <Scalar T>
OutputLaw<T> compressed_output_law(const ExperimentTable<T>& table, const std::vector<int>& labels,
                                   std::size_t label_count, std::uint64_t trials, long hash_bits);

// Law over Z and abort on input (x, y). Capacity error beyond the DP caps.
template <Scalar T>
OutputLaw<T> exact_output_distribution(const ProtocolTree& pi, const InputDistribution& mu, std::size_t x,
                                       std::size_t y, std::size_t z_size, const CompressionParameters& params);

// ---------------------------------------------------------------------------
// Verification

enum class Engine { DP, MC };

struct InputCompressionReport {
  std::size_t x = 0;
  std::size_t y = 0;
  double mass = 0.0;
  bool evaluated = false;            // false when a marginal of mu vanishes
  double prob_not_abort = 0.0;
  double std_error = 0.0;            // MC only
  std::vector<double> output_law;    // z < z_size, abort last
  bool eq5_pass = true;
  // Diagnostics of the compression analysis.
  double div_x = 0.0;                // D(Pi_xy || Pi_x)
  double div_y = 0.0;                // D(Pi_xy || Pi_y)
  bool large_divergence = false;     // member of B_D
  double prob_collision = 0.0;       // DP only
  double prob_good = 0.0;            // DP only
  double transcript_distance = 0.0;  // |Pi_xy - Pi'_xy given no abort|, DP only
};

struct CompressionReport {
  CompressionParameters params;
  Engine engine = Engine::DP;
  std::uint64_t samples = 0;
  std::uint64_t seed = 0;
  std::size_t z_size = 0;
  double lambda = 0.0;
  std::vector<InputCompressionReport> inputs;

  double aggregate_not_abort = 0.0;
  double aggregate_std_error = 0.0;
  double eq4_distance = 0.0;
  double eq4_std_error = 0.0;
  bool eq4_pass = false;
  bool eq5_pass = false;
  bool eq6_pass = false;

  // Paper-exact diagnostics; empty `defects` means every guarantee held.
  double bad_divergence_mass = 0.0;
  double lambda_floor = 0.0;  // 2^{-C (I / delta^2 + 1 / delta)}
  std::vector<std::string> diagnostics;
  std::vector<std::string> defects;

  bool pass() const noexcept { return eq4_pass && eq5_pass && eq6_pass; }
};

struct VerifyOptions {
  Engine engine = Engine::DP;
  std::uint64_t samples = 1'000'000;  // MC only
  std::uint64_t seed = 1;
  unsigned threads = 0;               // 0: hardware concurrency
  double tolerance = 1e-9;            // DP slack: relative to lambda for the non-abort rates, absolute for the distance
};

CompressionReport verify_compression(const ProtocolTree& pi, const PartialFunction& f, const InputDistribution& mu,
                                     const CompressionParameters& params, const VerifyOptions& options = {});

// x,y,prob_not_abort,lambda,eq5_pass,eq6_pass,eq4_distance,eq4_pass,std_error
std::string format_compression_csv(const CompressionReport& report);

// Empirical counts of the compressed protocol on (x, y) over runs
// [0, samples), threaded and deterministic. counts[z], abort last.
std::vector<std::uint64_t> monte_carlo_counts(const ZeroCommProtocol& proto, std::size_t x, std::size_t y,
                                              std::size_t z_size, std::uint64_t seed, std::uint64_t samples,
                                              unsigned threads = 0);

// ---------------------------------------------------------------------------
// Strategy extraction

struct StrategyEstimate {
  // Weights are count / (seeds * |Z|): exact, summing to one.
  struct Entry {
    Rectangle rect;
    int label = 0;
    std::uint64_t count = 0;
    Rational weight;
  };
  std::vector<Entry> entries;
  std::uint64_t seeds = 0;
  std::size_t z_size = 0;
  double eta = 0.0;      // (1 + delta) lambda / |Z|
  double eps = 0.0;      // error of pi against f
  double eps_prime = 0.0;  // eps + 3 delta

  // Weighted correctness and its threshold (1 - eps') eta.
  double correctness = 0.0;
  double correctness_se = 0.0;
  double correctness_threshold = 0.0;
  bool correctness_pass = false;
  // Largest per-input coverage, against eta.
  double max_coverage = 0.0;
  double coverage_se = 0.0;
  bool coverage_pass = false;

  Rational total_weight() const;
  LabeledRectangleStrategy strategy() const;
};

// Builds R(z, seed) = a^{-1}(z) x b^{-1}(z) from the per-party output maps
// for seeds [0, seed_count); a check passes when it holds within three
// standard errors computed at the reference rate eta.
StrategyEstimate extract_strategy(const ProtocolTree& pi, const PartialFunction& f, const InputDistribution& mu,
                                  const CompressionParameters& params, std::uint64_t seed_count,
                                  std::uint64_t master_seed = 0);

// ---------------------------------------------------------------------------
// Conditioning on a sub-event

// A finite probability space whose outcomes carry a value in a common
// universe of size `universe`.
struct FiniteSpace {
  std::vector<Rational> prob;
  std::vector<std::size_t> value;
  std::size_t universe = 0;
};

struct ConditionalDistanceResult {
  bool holds = false;
  Rational distance;     // |Pi'_H - Pi|
  Rational bound;        // c + Pr[F] / Pr[H]
  Rational precondition; // |Pi'_E - Pi| with E = H \ F (0 if Pr[E] = 0)
};

// Conditioning error when Pr[H] = 0.
ConditionalDistanceResult conditional_distance_check(const FiniteDistribution<Rational>& pi, const FiniteSpace& space,
                                                     const std::vector<bool>& event_f,
                                                     const std::vector<bool>& event_h, const Rational& c);

}  // namespace cclb

#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cclb/function.hpp"
#include "cclb/lp.hpp"
#include "cclb/rational.hpp"
#include "cclb/rectangle.hpp"

namespace cclb {

// A distribution over labelled rectangles: a zero-communication protocol in
// normal form. Both parties sample (R, z) and output z when their input lies
// in R. `efficiency` is the non-abort probability the strategy targets.
struct LabeledRectangleStrategy {
  struct Entry {
    Rectangle rect;
    int label = 0;
    double weight = 0.0;
  };
  std::vector<Entry> entries;
  double efficiency = 0.0;

  double total_weight() const;
  // Total weight on rectangles containing (x, y), over all labels.
  double coverage(std::size_t x, std::size_t y) const;
};

template <Scalar T>
struct WeightedRectangle {
  Rectangle rect;
  int label = 0;  // z0 for the single-label programs (srec, rect)
  T weight{};
};

// Result of one bound computation.
//
//   bprt, bprt_mu, prt: `weights` is the w_{R,z} primal witness; `alpha`
//     and `beta` are the per-cell dual multipliers. For bprt_mu the single
//     correctness multiplier is spread as alpha_{x,y} = alpha * mu_{x,y}.
//   srec: `weights` holds w'_R; `alpha` the >= multipliers, `beta` the
//     (negated) <= multipliers.
//   rect: `alpha` is the optimising assignment; `weights` the rectangle
//     multipliers of the covering dual.
//
// Cell maps are indexed x * y_size + y.
template <Scalar T>
struct BoundResult {
  std::string bound_name;
  T value{};
  T epsilon{};
  LpStatus status = LpStatus::Optimal;
  T primal_objective{};
  T dual_objective{};
  std::optional<int> label;
  std::vector<WeightedRectangle<T>> weights;
  std::vector<T> alpha;
  std::vector<T> beta;

  // p_{R,z} = w_{R,z} / sum w and efficiency 1 / sum w.
  LabeledRectangleStrategy strategy() const;
  T duality_gap() const { return abs_of(T(primal_objective - dual_objective)); }
};

// Distributional relaxed partition bound, solved in its w-form primal.
template <Scalar T>
BoundResult<T> bprt_mu(const PartialFunction& f, const InputDistribution& mu, const T& eps);

// max over mu of bprt_mu, solved as the single dual LP over alpha_{x,y},
// beta_{x,y} with one constraint per (rectangle, label).
template <Scalar T>
BoundResult<T> bprt(const PartialFunction& f, const T& eps);

template <Scalar T>
BoundResult<T> prt(const PartialFunction& f, const T& eps);

template <Scalar T>
BoundResult<T> srec(const PartialFunction& f, const T& eps, int z0);

// Rectangle bound in its maximisation form. With a distribution the
// assignment is restricted to alpha = t * mu.
template <Scalar T>
BoundResult<T> rect_dual(const PartialFunction& f, const T& eps, int z);
template <Scalar T>
BoundResult<T> rect_dual(const PartialFunction& f, const T& eps, int z, const InputDistribution& mu);

template <Scalar T>
struct CorruptionWitness {
  std::vector<T> alpha;
  bool feasible = false;
  T objective{};
  T worst_constraint{};  // largest rectangle left-hand side
  Rectangle worst_rectangle;
};

// alpha = mu / beta on f^{-1}(z), mu / (delta_c * beta) on the other
// defined side, 0 on undefined cells; checked against every rectangle
// constraint of rect_dual.
template <Scalar T>
CorruptionWitness<T> corruption_witness(const PartialFunction& f, const InputDistribution& mu, const T& beta,
                                        const T& delta_c, int z, const T& eps = T(0));

// max over rectangles of |mu(R & f^{-1}(0)) - mu(R & f^{-1}(1))|.
template <Scalar T>
T discrepancy(const PartialFunction& f, const InputDistribution& mu);

template <Scalar T>
struct ChainReport {
  T epsilon{};
  T bprt_value{};
  T prt_value{};
  std::vector<std::pair<int, T>> srec_values;  // z with nonempty preimage
  std::vector<std::string> violations;
  bool pass() const { return violations.empty(); }
};

// srec^z <= bprt <= prt for every z with a nonempty preimage; absolute
// tolerance 1e-6 in float mode, exact in rational mode.
template <Scalar T>
ChainReport<T> verify_bound_chain(const PartialFunction& f, const T& eps);

inline constexpr double kBoundTolerance = 1e-6;

// bound_name,function,x_size,y_size,z_size,eps,value,log2_value,solver_status
std::string bound_csv_header();
template <Scalar T>
std::string bound_csv_row(const BoundResult<T>& result, const PartialFunction& f);

}  // namespace cclb

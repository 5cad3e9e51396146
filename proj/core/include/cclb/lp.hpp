#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "cclb/rational.hpp"

namespace cclb {

enum class Sense { Minimize, Maximize };
enum class Relation { LessEqual, GreaterEqual, Equal };
enum class LpStatus { Optimal, Infeasible, Unbounded };

const char* to_string(LpStatus status) noexcept;

// Dense LP over non-negative variables:
//   optimise  c^T x  subject to  a_i^T x (<=|>=|=) b_i,  x >= 0.
template <Scalar T>
struct LpProblem {
  Sense sense = Sense::Minimize;
  std::vector<T> objective;
  std::vector<std::vector<T>> rows;
  std::vector<Relation> relations;
  std::vector<T> rhs;

  LpProblem() = default;
  LpProblem(std::size_t num_vars, Sense s) : sense(s), objective(num_vars, T(0)) {}

  std::size_t num_vars() const noexcept { return objective.size(); }
  std::size_t num_rows() const noexcept { return rows.size(); }

  void add_row(std::vector<T> coeffs, Relation rel, T b);
  void validate() const;
};

// Dual multipliers follow the sign convention that makes b^T y equal the
// optimal objective:
//   Minimize: y_i >= 0 on >= rows, y_i <= 0 on <= rows, c - A^T y >= 0.
//   Maximize: y_i >= 0 on <= rows, y_i <= 0 on >= rows, c - A^T y <= 0.
// Equality rows carry free multipliers.
template <Scalar T>
struct LpSolution {
  LpStatus status = LpStatus::Infeasible;
  T objective{};
  T dual_objective{};
  std::vector<T> primal;
  std::vector<T> dual;
  std::size_t iterations = 0;

  bool optimal() const noexcept { return status == LpStatus::Optimal; }
};

struct LpOptions {
  std::size_t max_iterations = 0;   // 0: automatic
  double tolerance = 1e-9;          // float mode only
  std::size_t degenerate_run = 8;   // consecutive degenerate pivots before least-index pivoting
  bool always_least_index = false;
};

// Two-phase primal simplex on a compact tableau. Float mode raises a
// solver error when it stalls; rational mode is exact.
template <Scalar T>
LpSolution<T> lp_solve(const LpProblem<T>& problem, const LpOptions& options = {});

// Constraint checkers independent of the solver internals.
template <Scalar T>
T max_primal_violation(const LpProblem<T>& problem, std::span<const T> x);

template <Scalar T>
T max_dual_violation(const LpProblem<T>& problem, std::span<const T> y);

// Largest |y_i (a_i x - b_i)| and |x_j (c_j - a_j^T y)|.
template <Scalar T>
T max_complementarity_gap(const LpProblem<T>& problem, std::span<const T> x, std::span<const T> y);

template <Scalar T>
T objective_value(const LpProblem<T>& problem, std::span<const T> x);

template <Scalar T>
T dual_objective_value(const LpProblem<T>& problem, std::span<const T> y);

}  // namespace cclb

#include "cclb/lp.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "cclb/caps.hpp"
#include "cclb/error.hpp"

namespace cclb {

const char* to_string(LpStatus status) noexcept {
  switch (status) {
    case LpStatus::Optimal: return "optimal";
    case LpStatus::Infeasible: return "infeasible";
    case LpStatus::Unbounded: return "unbounded";
  }
  return "unknown";
}

template <Scalar T>
void LpProblem<T>::add_row(std::vector<T> coeffs, Relation rel, T b) {
  require(coeffs.size() == num_vars(), ErrorKind::Dimension,
          fmt::format("constraint row has {} coefficients, expected {}", coeffs.size(), num_vars()));
  rows.push_back(std::move(coeffs));
  relations.push_back(rel);
  rhs.push_back(std::move(b));
}

template <Scalar T>
void LpProblem<T>::validate() const {
  require(rows.size() == relations.size() && rows.size() == rhs.size(), ErrorKind::Dimension,
          "row, relation and right-hand-side counts differ");
  for (const auto& row : rows) {
    require(row.size() == num_vars(), ErrorKind::Dimension, "row length differs from the variable count");
  }
  if constexpr (!is_exact_v<T>) {
    auto finite = [](double v) { return std::isfinite(v); };
    require(std::all_of(objective.begin(), objective.end(), finite), ErrorKind::Parameter, "non-finite objective");
    require(std::all_of(rhs.begin(), rhs.end(), finite), ErrorKind::Parameter, "non-finite right-hand side");
    for (const auto& row : rows) {
      require(std::all_of(row.begin(), row.end(), finite), ErrorKind::Parameter, "non-finite coefficient");
    }
  }
}

namespace {

enum class VarKind { Original, Slack, Artificial, Surplus };

// Compact (condensed) tableau: only nonbasic columns are stored. Row i reads
//   x_basis[i] = b[i] - sum_j tab[i][j] * x_nonbasic[j]
// and the objective (always minimised internally) reads
//   z = z0 + sum_j d[j] * x_nonbasic[j].
template <Scalar T>
class Simplex {
 public:
  Simplex(const LpProblem<T>& p, const LpOptions& opt) : problem_(p), opt_(opt) {
    m_ = p.num_rows();
    n_ = p.num_vars();
    flipped_.assign(m_, false);
    std::vector<Relation> rel(p.relations);
    for (std::size_t i = 0; i < m_; ++i) {
      if (p.rhs[i] < 0) {
        flipped_[i] = true;
        if (rel[i] == Relation::LessEqual) rel[i] = Relation::GreaterEqual;
        else if (rel[i] == Relation::GreaterEqual) rel[i] = Relation::LessEqual;
      }
    }
    kinds_.assign(n_, VarKind::Original);
    for (std::size_t i = 0; i < m_; ++i) {
      kinds_.push_back(rel[i] == Relation::LessEqual ? VarKind::Slack : VarKind::Artificial);
    }
    std::vector<std::size_t> surplus_row;
    for (std::size_t i = 0; i < m_; ++i) {
      if (rel[i] == Relation::GreaterEqual) {
        kinds_.push_back(VarKind::Surplus);
        surplus_row.push_back(i);
      }
    }
    cols_ = n_ + surplus_row.size();
    tab_.assign(m_ * cols_, T(0));
    b_.resize(m_);
    basis_.resize(m_);
    nonbasic_.resize(cols_);
    for (std::size_t i = 0; i < m_; ++i) {
      basis_[i] = n_ + i;
      const bool flip = flipped_[i];
      b_[i] = flip ? T(-p.rhs[i]) : p.rhs[i];
      for (std::size_t j = 0; j < n_; ++j) {
        const T& a = p.rows[i][j];
        if (!is_zero_exact(a)) at(i, j) = flip ? T(-a) : a;
      }
    }
    for (std::size_t j = 0; j < n_; ++j) nonbasic_[j] = j;
    for (std::size_t k = 0; k < surplus_row.size(); ++k) {
      nonbasic_[n_ + k] = n_ + m_ + k;
      at(surplus_row[k], n_ + k) = T(-1);
    }
    blocked_.assign(kinds_.size(), false);
    d_.assign(cols_, T(0));

    const std::size_t dims = m_ + cols_;
    max_iterations_ = opt_.max_iterations ? opt_.max_iterations
                                          : (is_exact_v<T> ? std::numeric_limits<std::size_t>::max()
                                                           : 50 * dims + 1000);
  }

  LpSolution<T> run() {
    LpSolution<T> out;
    const bool needs_phase_one =
        std::any_of(kinds_.begin(), kinds_.end(), [](VarKind k) { return k == VarKind::Artificial; });
    if (needs_phase_one) {
      std::vector<T> cost(kinds_.size(), T(0));
      for (std::size_t v = 0; v < kinds_.size(); ++v) {
        if (kinds_[v] == VarKind::Artificial) cost[v] = T(1);
      }
      load_costs(cost);
      iterate();  // phase one is bounded below by zero
      if (is_positive(z_, opt_.tolerance * (1.0 + static_cast<double>(m_)))) {
        out.status = LpStatus::Infeasible;
        out.iterations = iterations_;
        return out;
      }
      drive_out_artificials();
      for (std::size_t v = 0; v < kinds_.size(); ++v) {
        if (kinds_[v] == VarKind::Artificial) blocked_[v] = true;
      }
    }
    std::vector<T> cost(kinds_.size(), T(0));
    for (std::size_t j = 0; j < n_; ++j) {
      cost[j] = problem_.sense == Sense::Maximize ? T(-problem_.objective[j]) : problem_.objective[j];
    }
    load_costs(cost);
    if (!iterate()) {
      out.status = LpStatus::Unbounded;
      out.iterations = iterations_;
      return out;
    }

    out.status = LpStatus::Optimal;
    out.iterations = iterations_;
    out.primal.assign(n_, T(0));
    for (std::size_t i = 0; i < m_; ++i) {
      if (basis_[i] < n_) out.primal[basis_[i]] = b_[i];
    }
    // y_i = c_B B^{-1} e_i is minus the reduced cost of the identity column
    // of row i (zero when that column is basic).
    out.dual.assign(m_, T(0));
    for (std::size_t j = 0; j < cols_; ++j) {
      const std::size_t v = nonbasic_[j];
      if (v >= n_ && v < n_ + m_) {
        const std::size_t row = v - n_;
        T y = -d_[j];
        if (flipped_[row]) y = -y;
        if (problem_.sense == Sense::Maximize) y = -y;
        out.dual[row] = y;
      }
    }
    out.objective = objective_value<T>(problem_, out.primal);
    out.dual_objective = dual_objective_value<T>(problem_, out.dual);
    return out;
  }

 private:
  static bool is_zero_exact(const T& v) {
    if constexpr (is_exact_v<T>) return sgn(v) == 0;
    else return v == 0.0;
  }

  T& at(std::size_t i, std::size_t j) { return tab_[i * cols_ + j]; }

  void load_costs(const std::vector<T>& cost) {
    z_ = T(0);
    for (std::size_t i = 0; i < m_; ++i) {
      const T& cb = cost[basis_[i]];
      if (!is_zero_exact(cb)) z_ += cb * b_[i];
    }
    for (std::size_t j = 0; j < cols_; ++j) {
      T dj = cost[nonbasic_[j]];
      for (std::size_t i = 0; i < m_; ++i) {
        const T& cb = cost[basis_[i]];
        if (is_zero_exact(cb)) continue;
        const T& a = at(i, j);
        if (!is_zero_exact(a)) dj -= cb * a;
      }
      d_[j] = std::move(dj);
    }
  }

  // Returns false when the objective is unbounded below.
  bool iterate() {
    std::size_t degenerate_streak = 0;
    const double tol = opt_.tolerance;
    while (true) {
      const bool least_index = opt_.always_least_index || degenerate_streak >= opt_.degenerate_run;
      std::size_t enter = cols_;
      for (std::size_t j = 0; j < cols_; ++j) {
        if (blocked_[nonbasic_[j]] || !is_negative(d_[j], tol)) continue;
        if (enter == cols_) {
          enter = j;
        } else if (least_index) {
          if (nonbasic_[j] < nonbasic_[enter]) enter = j;
        } else if (d_[j] < d_[enter] || (d_[j] == d_[enter] && nonbasic_[j] < nonbasic_[enter])) {
          enter = j;
        }
      }
      if (enter == cols_) return true;

      std::size_t leave = m_;
      T best_ratio{};
      for (std::size_t i = 0; i < m_; ++i) {
        const T& a = at(i, enter);
        if (!is_positive(a, tol)) continue;
        T ratio = b_[i] / a;
        if (leave == m_) {
          leave = i;
          best_ratio = std::move(ratio);
          continue;
        }
        int cmp;
        if constexpr (is_exact_v<T>) {
          cmp = ratio < best_ratio ? -1 : (ratio == best_ratio ? 0 : 1);
        } else {
          const double slack = 1e-12 * (1.0 + std::fabs(best_ratio));
          cmp = ratio < best_ratio - slack ? -1 : (ratio <= best_ratio + slack ? 0 : 1);
        }
        bool take = cmp < 0;
        if (cmp == 0) {
          if (least_index || is_exact_v<T>) {
            take = basis_[i] < basis_[leave];
          } else {
            const T& cur = at(leave, enter);
            take = a > cur || (a == cur && basis_[i] < basis_[leave]);
          }
        }
        if (take) {
          leave = i;
          best_ratio = std::move(ratio);
        }
      }
      if (leave == m_) return false;

      if (++iterations_ > max_iterations_) {
        fail(ErrorKind::Solver,
             fmt::format("simplex stalled after {} pivots in float mode ({} rows, {} columns); rerun in rational mode",
                         iterations_ - 1, m_, n_));
      }
      const bool degenerate = is_zero(b_[leave], tol);
      pivot(leave, enter);
      degenerate_streak = degenerate ? degenerate_streak + 1 : 0;
    }
  }

  void pivot(std::size_t r, std::size_t s) {
    const T p = at(r, s);
    const T inv = T(1) / p;
    std::vector<std::size_t> nz;
    nz.reserve(cols_);
    for (std::size_t j = 0; j < cols_; ++j) {
      if (j == s) continue;
      T& v = at(r, j);
      if (is_zero_exact(v)) continue;
      v *= inv;
      nz.push_back(j);
    }
    at(r, s) = inv;
    b_[r] *= inv;
    if constexpr (!is_exact_v<T>) {
      if (b_[r] < 0 && b_[r] > -opt_.tolerance) b_[r] = 0.0;
    }

    for (std::size_t i = 0; i < m_; ++i) {
      if (i == r) continue;
      const T f = at(i, s);
      if (is_zero_exact(f)) continue;
      T* row = &tab_[i * cols_];
      const T* piv = &tab_[r * cols_];
      for (std::size_t j : nz) {
        row[j] -= f * piv[j];
        if constexpr (!is_exact_v<T>) {
          if (std::fabs(row[j]) < 1e-13) row[j] = 0.0;
        }
      }
      row[s] = -f * inv;
      if (!is_zero_exact(b_[r])) b_[i] -= f * b_[r];
      if constexpr (!is_exact_v<T>) {
        if (b_[i] < 0 && b_[i] > -opt_.tolerance) b_[i] = 0.0;
      }
    }

    const T f = d_[s];
    if (!is_zero_exact(f)) {
      const T* piv = &tab_[r * cols_];
      for (std::size_t j : nz) d_[j] -= f * piv[j];
      d_[s] = -f * inv;
      z_ += f * b_[r];
    }
    std::swap(basis_[r], nonbasic_[s]);
  }

  // After phase one, pivot zero-level artificials out of the basis where a
  // non-artificial column allows it; rows where none does are redundant and
  // keep their artificial at zero.
  void drive_out_artificials() {
    const double tol = opt_.tolerance;
    for (std::size_t i = 0; i < m_; ++i) {
      if (kinds_[basis_[i]] != VarKind::Artificial) continue;
      std::size_t best = cols_;
      for (std::size_t j = 0; j < cols_; ++j) {
        if (kinds_[nonbasic_[j]] == VarKind::Artificial) continue;
        const T& a = at(i, j);
        if (is_zero(a, tol)) continue;
        if (best == cols_ || abs_of(a) > abs_of(at(i, best))) best = j;
      }
      if (best != cols_) pivot(i, best);
    }
  }

  const LpProblem<T>& problem_;
  LpOptions opt_;
  std::size_t m_ = 0;
  std::size_t n_ = 0;
  std::size_t cols_ = 0;
  std::vector<bool> flipped_;
  std::vector<VarKind> kinds_;
  std::vector<bool> blocked_;
  std::vector<T> tab_;
  std::vector<T> b_;
  std::vector<T> d_;
  T z_{};
  std::vector<std::size_t> basis_;
  std::vector<std::size_t> nonbasic_;
  std::size_t iterations_ = 0;
  std::size_t max_iterations_ = 0;
};

}  // namespace

template <Scalar T>
LpSolution<T> lp_solve(const LpProblem<T>& problem, const LpOptions& options) {
  problem.validate();
  const Caps& c = caps();
  const std::size_t var_cap = is_exact_v<T> ? c.lp_rational_vars : c.lp_float_vars;
  const std::size_t row_cap = is_exact_v<T> ? c.lp_rational_rows : c.lp_float_rows;
  require(problem.num_vars() <= var_cap && problem.num_rows() <= row_cap, ErrorKind::Capacity,
          fmt::format("LP with {} variables and {} constraints exceeds the {} cap of {} x {}", problem.num_vars(),
                      problem.num_rows(), is_exact_v<T> ? "rational" : "float", var_cap, row_cap));
  Simplex<T> simplex(problem, options);
  return simplex.run();
}

template <Scalar T>
T objective_value(const LpProblem<T>& problem, std::span<const T> x) {
  require(x.size() == problem.num_vars(), ErrorKind::Dimension, "primal vector has the wrong length");
  T sum(0);
  for (std::size_t j = 0; j < x.size(); ++j) sum += problem.objective[j] * x[j];
  return sum;
}

template <Scalar T>
T dual_objective_value(const LpProblem<T>& problem, std::span<const T> y) {
  require(y.size() == problem.num_rows(), ErrorKind::Dimension, "dual vector has the wrong length");
  T sum(0);
  for (std::size_t i = 0; i < y.size(); ++i) sum += problem.rhs[i] * y[i];
  return sum;
}

template <Scalar T>
T max_primal_violation(const LpProblem<T>& problem, std::span<const T> x) {
  require(x.size() == problem.num_vars(), ErrorKind::Dimension, "primal vector has the wrong length");
  T worst(0);
  for (const T& v : x) worst = max_of(worst, T(-v));
  for (std::size_t i = 0; i < problem.num_rows(); ++i) {
    T lhs(0);
    for (std::size_t j = 0; j < x.size(); ++j) lhs += problem.rows[i][j] * x[j];
    const T diff = lhs - problem.rhs[i];
    switch (problem.relations[i]) {
      case Relation::LessEqual: worst = max_of(worst, diff); break;
      case Relation::GreaterEqual: worst = max_of(worst, T(-diff)); break;
      case Relation::Equal: worst = max_of(worst, abs_of(diff)); break;
    }
  }
  return worst;
}

template <Scalar T>
T max_dual_violation(const LpProblem<T>& problem, std::span<const T> y) {
  require(y.size() == problem.num_rows(), ErrorKind::Dimension, "dual vector has the wrong length");
  const bool minimize = problem.sense == Sense::Minimize;
  T worst(0);
  for (std::size_t i = 0; i < y.size(); ++i) {
    const Relation rel = problem.relations[i];
    if (rel == Relation::Equal) continue;
    // Sign the multiplier must have: >= 0 for (min, >=) and (max, <=).
    const bool nonneg = (rel == Relation::GreaterEqual) == minimize;
    worst = max_of(worst, nonneg ? T(-y[i]) : y[i]);
  }
  for (std::size_t j = 0; j < problem.num_vars(); ++j) {
    T reduced = problem.objective[j];
    for (std::size_t i = 0; i < y.size(); ++i) reduced -= problem.rows[i][j] * y[i];
    worst = max_of(worst, minimize ? T(-reduced) : reduced);
  }
  return worst;
}

template <Scalar T>
T max_complementarity_gap(const LpProblem<T>& problem, std::span<const T> x, std::span<const T> y) {
  require(x.size() == problem.num_vars() && y.size() == problem.num_rows(), ErrorKind::Dimension,
          "primal or dual vector has the wrong length");
  T worst(0);
  for (std::size_t i = 0; i < y.size(); ++i) {
    T lhs(0);
    for (std::size_t j = 0; j < x.size(); ++j) lhs += problem.rows[i][j] * x[j];
    worst = max_of(worst, abs_of(T(y[i] * (lhs - problem.rhs[i]))));
  }
  for (std::size_t j = 0; j < x.size(); ++j) {
    T reduced = problem.objective[j];
    for (std::size_t i = 0; i < y.size(); ++i) reduced -= problem.rows[i][j] * y[i];
    worst = max_of(worst, abs_of(T(x[j] * reduced)));
  }
  return worst;
}

#define CCLB_INSTANTIATE(T)                                                                     \
  template struct LpProblem<T>;                                                                 \
  template LpSolution<T> lp_solve(const LpProblem<T>&, const LpOptions&);                       \
  template T objective_value(const LpProblem<T>&, std::span<const T>);                          \
  template T dual_objective_value(const LpProblem<T>&, std::span<const T>);                     \
  template T max_primal_violation(const LpProblem<T>&, std::span<const T>);                     \
  template T max_dual_violation(const LpProblem<T>&, std::span<const T>);                       \
  template T max_complementarity_gap(const LpProblem<T>&, std::span<const T>, std::span<const T>);

CCLB_INSTANTIATE(double)
CCLB_INSTANTIATE(Rational)

#undef CCLB_INSTANTIATE

}  // namespace cclb

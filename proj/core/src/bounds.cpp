#include "cclb/bounds.hpp"

#include <fmt/format.h>

#include <cmath>

#include "cclb/error.hpp"

namespace cclb {

double LabeledRectangleStrategy::total_weight() const {
  double total = 0.0;
  for (const auto& e : entries) total += e.weight;
  return total;
}

double LabeledRectangleStrategy::coverage(std::size_t x, std::size_t y) const {
  double total = 0.0;
  for (const auto& e : entries) {
    if (e.rect.contains(x, y)) total += e.weight;
  }
  return total;
}

template <Scalar T>
LabeledRectangleStrategy BoundResult<T>::strategy() const {
  LabeledRectangleStrategy out;
  T total(0);
  for (const auto& w : weights) total += w.weight;
  if (!is_positive(total, 0.0)) return out;
  for (const auto& w : weights) {
    out.entries.push_back({w.rect, w.label, as_double(T(w.weight / total))});
  }
  out.efficiency = as_double(T(T(1) / total));
  return out;
}

namespace {

template <Scalar T>
void check_eps(const T& eps) {
  require(!(eps < T(0)) && eps < T(1), ErrorKind::Parameter,
          fmt::format("eps must lie in [0, 1), got {}", as_double(eps)));
}

void check_label(const PartialFunction& f, int z) {
  require(z >= 0 && static_cast<std::size_t>(z) < f.z_size(), ErrorKind::Parameter,
          fmt::format("output index {} outside [0, {})", z, f.z_size()));
}

std::vector<Rectangle> nonempty_rectangles(const PartialFunction& f) {
  check_enumeration_cap(f.x_size(), f.y_size());
  auto all = enumerate_rectangles(f.x_size(), f.y_size());
  all.erase(all.begin());  // the empty rectangle comes first
  return all;
}

template <Scalar T>
bool is_nonzero_weight(const T& w) {
  if constexpr (is_exact_v<T>) return sgn(w) != 0;
  else return std::fabs(w) > 1e-12;
}

template <Scalar T>
T sum_over(const Rectangle& r, const PartialFunction& f, const std::vector<T>& cell_values) {
  T total(0);
  for (std::size_t x = 0; x < f.x_size(); ++x) {
    if (!((r.rows() >> x) & 1u)) continue;
    for (std::size_t y = 0; y < f.y_size(); ++y) {
      if ((r.cols() >> y) & 1u) total += cell_values[x * f.y_size() + y];
    }
  }
  return total;
}

template <Scalar T>
LpSolution<T> solve_or_fail(const LpProblem<T>& lp, const std::string& name) {
  auto sol = lp_solve(lp);
  require(sol.optimal(), ErrorKind::Solver, fmt::format("{} program ended {}", name, to_string(sol.status)));
  return sol;
}

template <Scalar T>
void fill_objectives(BoundResult<T>& out, const LpSolution<T>& sol) {
  out.status = sol.status;
  out.value = sol.objective;
  out.primal_objective = sol.objective;
  out.dual_objective = sol.dual_objective;
}

}  // namespace

template <Scalar T>
BoundResult<T> bprt_mu(const PartialFunction& f, const InputDistribution& mu, const T& eps) {
  check_eps(eps);
  check_compatible(f, mu);
  const auto rects = nonempty_rectangles(f);
  const std::size_t nz = f.z_size();
  const std::size_t cells = f.cells();

  LpProblem<T> lp(rects.size() * nz, Sense::Minimize);
  std::fill(lp.objective.begin(), lp.objective.end(), T(1));

  std::vector<T> correct(lp.num_vars(), T(0));
  for (std::size_t r = 0; r < rects.size(); ++r) {
    for (std::size_t x = 0; x < f.x_size(); ++x) {
      for (std::size_t y = 0; y < f.y_size(); ++y) {
        if (!rects[r].contains(x, y)) continue;
        const T& m = mu.mass<T>(x, y);
        if (f.defined(x, y)) {
          correct[r * nz + static_cast<std::size_t>(f.value(x, y))] += m;
        } else {
          for (std::size_t z = 0; z < nz; ++z) correct[r * nz + z] += m;
        }
      }
    }
  }
  lp.add_row(std::move(correct), Relation::GreaterEqual, T(1) - eps);

  for (std::size_t c = 0; c < cells; ++c) {
    std::vector<T> row(lp.num_vars(), T(0));
    const std::size_t x = c / f.y_size(), y = c % f.y_size();
    for (std::size_t r = 0; r < rects.size(); ++r) {
      if (!rects[r].contains(x, y)) continue;
      for (std::size_t z = 0; z < nz; ++z) row[r * nz + z] = T(1);
    }
    lp.add_row(std::move(row), Relation::LessEqual, T(1));
  }

  const auto sol = solve_or_fail(lp, "bprt_mu");
  BoundResult<T> out;
  out.bound_name = "bprt_mu";
  out.epsilon = eps;
  fill_objectives(out, sol);
  for (std::size_t r = 0; r < rects.size(); ++r) {
    for (std::size_t z = 0; z < nz; ++z) {
      const T& w = sol.primal[r * nz + z];
      if (is_nonzero_weight(w)) out.weights.push_back({rects[r], static_cast<int>(z), w});
    }
  }
  const T alpha = sol.dual[0];
  out.alpha.resize(cells);
  out.beta.resize(cells);
  for (std::size_t c = 0; c < cells; ++c) {
    out.alpha[c] = alpha * mu.mass<T>(c / f.y_size(), c % f.y_size());
    out.beta[c] = -sol.dual[c + 1];
  }
  return out;
}

template <Scalar T>
BoundResult<T> bprt(const PartialFunction& f, const T& eps) {
  check_eps(eps);
  const auto rects = nonempty_rectangles(f);
  const std::size_t nz = f.z_size();
  const std::size_t cells = f.cells();

  // Variables: alpha_c for c < cells, then beta_c.
  LpProblem<T> lp(2 * cells, Sense::Maximize);
  for (std::size_t c = 0; c < cells; ++c) {
    lp.objective[c] = T(1) - eps;
    lp.objective[cells + c] = T(-1);
  }
  for (const auto& r : rects) {
    for (std::size_t z = 0; z < nz; ++z) {
      std::vector<T> row(lp.num_vars(), T(0));
      for (std::size_t c = 0; c < cells; ++c) {
        const std::size_t x = c / f.y_size(), y = c % f.y_size();
        if (!r.contains(x, y)) continue;
        if (!f.defined(x, y) || f.value(x, y) == static_cast<int>(z)) row[c] = T(1);
        row[cells + c] = T(-1);
      }
      lp.add_row(std::move(row), Relation::LessEqual, T(1));
    }
  }

  const auto sol = solve_or_fail(lp, "bprt");
  BoundResult<T> out;
  out.bound_name = "bprt";
  out.epsilon = eps;
  fill_objectives(out, sol);
  out.alpha.assign(sol.primal.begin(), sol.primal.begin() + static_cast<std::ptrdiff_t>(cells));
  out.beta.assign(sol.primal.begin() + static_cast<std::ptrdiff_t>(cells), sol.primal.end());
  for (std::size_t r = 0; r < rects.size(); ++r) {
    for (std::size_t z = 0; z < nz; ++z) {
      const T& w = sol.dual[r * nz + z];
      if (is_nonzero_weight(w)) out.weights.push_back({rects[r], static_cast<int>(z), w});
    }
  }
  return out;
}

template <Scalar T>
BoundResult<T> prt(const PartialFunction& f, const T& eps) {
  check_eps(eps);
  const auto rects = nonempty_rectangles(f);
  const std::size_t nz = f.z_size();
  const std::size_t cells = f.cells();

  LpProblem<T> lp(rects.size() * nz, Sense::Minimize);
  std::fill(lp.objective.begin(), lp.objective.end(), T(1));

  std::vector<std::size_t> correct_cell;
  for (std::size_t c = 0; c < cells; ++c) {
    const std::size_t x = c / f.y_size(), y = c % f.y_size();
    if (!f.defined(x, y)) continue;
    const auto z = static_cast<std::size_t>(f.value(x, y));
    std::vector<T> row(lp.num_vars(), T(0));
    for (std::size_t r = 0; r < rects.size(); ++r) {
      if (rects[r].contains(x, y)) row[r * nz + z] = T(1);
    }
    lp.add_row(std::move(row), Relation::GreaterEqual, T(1) - eps);
    correct_cell.push_back(c);
  }
  for (std::size_t c = 0; c < cells; ++c) {
    const std::size_t x = c / f.y_size(), y = c % f.y_size();
    std::vector<T> row(lp.num_vars(), T(0));
    for (std::size_t r = 0; r < rects.size(); ++r) {
      if (!rects[r].contains(x, y)) continue;
      for (std::size_t z = 0; z < nz; ++z) row[r * nz + z] = T(1);
    }
    lp.add_row(std::move(row), Relation::Equal, T(1));
  }

  const auto sol = solve_or_fail(lp, "prt");
  BoundResult<T> out;
  out.bound_name = "prt";
  out.epsilon = eps;
  fill_objectives(out, sol);
  for (std::size_t r = 0; r < rects.size(); ++r) {
    for (std::size_t z = 0; z < nz; ++z) {
      const T& w = sol.primal[r * nz + z];
      if (is_nonzero_weight(w)) out.weights.push_back({rects[r], static_cast<int>(z), w});
    }
  }
  out.alpha.assign(cells, T(0));
  out.beta.assign(cells, T(0));
  for (std::size_t i = 0; i < correct_cell.size(); ++i) out.alpha[correct_cell[i]] = sol.dual[i];
  for (std::size_t c = 0; c < cells; ++c) out.beta[c] = sol.dual[correct_cell.size() + c];
  return out;
}

template <Scalar T>
BoundResult<T> srec(const PartialFunction& f, const T& eps, int z0) {
  check_eps(eps);
  check_label(f, z0);
  require(f.preimage_size(z0) > 0, ErrorKind::Degenerate,
          fmt::format("srec: output {} has an empty preimage", z0));
  const auto rects = nonempty_rectangles(f);
  const std::size_t cells = f.cells();

  LpProblem<T> lp(rects.size(), Sense::Minimize);
  std::fill(lp.objective.begin(), lp.objective.end(), T(1));

  auto coverage_row = [&](std::size_t x, std::size_t y) {
    std::vector<T> row(rects.size(), T(0));
    for (std::size_t r = 0; r < rects.size(); ++r) {
      if (rects[r].contains(x, y)) row[r] = T(1);
    }
    return row;
  };

  // Row layout: for every z0 cell a (>= 1 - eps) row then a (<= 1) row;
  // for every other defined cell a (<= eps) row.
  struct RowRef {
    std::size_t cell;
    bool lower;
  };
  std::vector<RowRef> refs;
  for (std::size_t c = 0; c < cells; ++c) {
    const std::size_t x = c / f.y_size(), y = c % f.y_size();
    if (!f.defined(x, y)) continue;
    if (f.value(x, y) == z0) {
      lp.add_row(coverage_row(x, y), Relation::GreaterEqual, T(1) - eps);
      refs.push_back({c, true});
      lp.add_row(coverage_row(x, y), Relation::LessEqual, T(1));
      refs.push_back({c, false});
    } else {
      lp.add_row(coverage_row(x, y), Relation::LessEqual, eps);
      refs.push_back({c, false});
    }
  }

  const auto sol = solve_or_fail(lp, "srec");
  BoundResult<T> out;
  out.bound_name = "srec";
  out.epsilon = eps;
  out.label = z0;
  fill_objectives(out, sol);
  for (std::size_t r = 0; r < rects.size(); ++r) {
    if (is_nonzero_weight(sol.primal[r])) out.weights.push_back({rects[r], z0, sol.primal[r]});
  }
  out.alpha.assign(cells, T(0));
  out.beta.assign(cells, T(0));
  for (std::size_t i = 0; i < refs.size(); ++i) {
    if (refs[i].lower) out.alpha[refs[i].cell] = sol.dual[i];
    else out.beta[refs[i].cell] = -sol.dual[i];
  }
  return out;
}

namespace {

// Solves a rect program and returns the result together with the primal
// vector; alpha is filled by the caller.
template <Scalar T>
std::pair<BoundResult<T>, std::vector<T>> rect_from_lp(const LpProblem<T>& lp, const std::vector<Rectangle>& row_rects,
                                                       const T& eps, int z) {
  BoundResult<T> out;
  out.bound_name = "rect";
  out.epsilon = eps;
  out.label = z;
  if (lp.num_rows() == 0) {
    // No rectangle can bind, so every objective coefficient is
    // non-positive and the zero assignment is optimal.
    for (const auto& c : lp.objective) {
      require(!is_positive(c, 0.0), ErrorKind::Solver, "rect program is unbounded");
    }
    out.value = out.primal_objective = out.dual_objective = T(0);
    return {out, std::vector<T>(lp.num_vars(), T(0))};
  }
  auto sol = solve_or_fail(lp, "rect");
  fill_objectives(out, sol);
  for (std::size_t i = 0; i < row_rects.size(); ++i) {
    if (is_nonzero_weight(sol.dual[i])) out.weights.push_back({row_rects[i], z, sol.dual[i]});
  }
  return {out, std::move(sol.primal)};
}

// +1 on f^{-1}(z), -1 on the other defined cells, 0 on undefined cells.
std::vector<int> rect_signs(const PartialFunction& f, int z) {
  std::vector<int> sign(f.cells(), 0);
  for (std::size_t c = 0; c < f.cells(); ++c) {
    const std::size_t x = c / f.y_size(), y = c % f.y_size();
    if (f.defined(x, y)) sign[c] = f.value(x, y) == z ? 1 : -1;
  }
  return sign;
}

template <Scalar T>
T rect_objective(const std::vector<int>& sign, const std::vector<T>& alpha, const T& eps) {
  T total(0);
  for (std::size_t c = 0; c < sign.size(); ++c) {
    if (sign[c] > 0) total += (T(1) - eps) * alpha[c];
    else if (sign[c] < 0) total -= eps * alpha[c];
  }
  return total;
}

template <Scalar T>
T rect_lhs(const Rectangle& r, const PartialFunction& f, const std::vector<int>& sign, const std::vector<T>& alpha) {
  T total(0);
  for (std::size_t c = 0; c < sign.size(); ++c) {
    if (sign[c] == 0 || !r.contains(c / f.y_size(), c % f.y_size())) continue;
    if (sign[c] > 0) total += alpha[c];
    else total -= alpha[c];
  }
  return total;
}

}  // namespace

template <Scalar T>
BoundResult<T> rect_dual(const PartialFunction& f, const T& eps, int z) {
  check_eps(eps);
  check_label(f, z);
  const auto rects = nonempty_rectangles(f);
  const auto sign = rect_signs(f, z);

  std::vector<std::size_t> var_cell;
  for (std::size_t c = 0; c < f.cells(); ++c) {
    if (sign[c] != 0) var_cell.push_back(c);
  }
  LpProblem<T> lp(var_cell.size(), Sense::Maximize);
  for (std::size_t j = 0; j < var_cell.size(); ++j) {
    lp.objective[j] = sign[var_cell[j]] > 0 ? T(T(1) - eps) : T(-eps);
  }
  std::vector<Rectangle> row_rects;
  for (const auto& r : rects) {
    std::vector<T> row(var_cell.size(), T(0));
    bool has_positive = false;
    for (std::size_t j = 0; j < var_cell.size(); ++j) {
      const std::size_t c = var_cell[j];
      if (!r.contains(c / f.y_size(), c % f.y_size())) continue;
      row[j] = T(sign[c]);
      has_positive = has_positive || sign[c] > 0;
    }
    // Rows without a positive coefficient can never bind.
    if (!has_positive) continue;
    lp.add_row(std::move(row), Relation::LessEqual, T(1));
    row_rects.push_back(r);
  }

  auto [out, primal] = rect_from_lp(lp, row_rects, eps, z);
  out.alpha.assign(f.cells(), T(0));
  for (std::size_t j = 0; j < var_cell.size(); ++j) out.alpha[var_cell[j]] = primal[j];
  return out;
}

template <Scalar T>
BoundResult<T> rect_dual(const PartialFunction& f, const T& eps, int z, const InputDistribution& mu) {
  check_eps(eps);
  check_label(f, z);
  check_compatible(f, mu);
  const auto rects = nonempty_rectangles(f);
  const auto sign = rect_signs(f, z);

  std::vector<T> m(f.cells(), T(0));
  for (std::size_t c = 0; c < f.cells(); ++c) {
    if (sign[c] != 0) m[c] = mu.mass<T>(c / f.y_size(), c % f.y_size());
  }
  // Single variable t with alpha = t * mu.
  LpProblem<T> lp(1, Sense::Maximize);
  lp.objective[0] = rect_objective(sign, m, eps);
  std::vector<Rectangle> row_rects;
  for (const auto& r : rects) {
    T coeff = rect_lhs(r, f, sign, m);
    if (!is_positive(coeff, 0.0)) continue;
    lp.add_row({std::move(coeff)}, Relation::LessEqual, T(1));
    row_rects.push_back(r);
  }

  auto [out, primal] = rect_from_lp(lp, row_rects, eps, z);
  out.alpha = m;
  for (auto& a : out.alpha) a *= primal[0];
  return out;
}

template <Scalar T>
CorruptionWitness<T> corruption_witness(const PartialFunction& f, const InputDistribution& mu, const T& beta,
                                        const T& delta_c, int z, const T& eps) {
  require(f.z_size() == 2, ErrorKind::Dimension, "corruption witness needs a two-output function");
  require(is_positive(beta, 0.0), ErrorKind::Parameter, "beta must be positive");
  require(is_positive(delta_c, 0.0), ErrorKind::Parameter, "delta_c must be positive");
  check_eps(eps);
  check_label(f, z);
  check_compatible(f, mu);
  check_enumeration_cap(f.x_size(), f.y_size());
  const auto sign = rect_signs(f, z);

  CorruptionWitness<T> out;
  out.alpha.assign(f.cells(), T(0));
  for (std::size_t c = 0; c < f.cells(); ++c) {
    const T& m = mu.mass<T>(c / f.y_size(), c % f.y_size());
    if (sign[c] > 0) out.alpha[c] = m / beta;
    else if (sign[c] < 0) out.alpha[c] = m / (delta_c * beta);
  }
  out.objective = rect_objective(sign, out.alpha, eps);

  bool first = true;
  for_each_rectangle(f.x_size(), f.y_size(), [&](const Rectangle& r) {
    if (r.empty()) return;
    T lhs = rect_lhs(r, f, sign, out.alpha);
    if (first || out.worst_constraint < lhs) {
      out.worst_constraint = lhs;
      out.worst_rectangle = r;
      first = false;
    }
  });
  if constexpr (is_exact_v<T>) out.feasible = !(T(1) < out.worst_constraint);
  else out.feasible = out.worst_constraint <= 1.0 + 1e-12;
  return out;
}

template <Scalar T>
T discrepancy(const PartialFunction& f, const InputDistribution& mu) {
  require(f.z_size() == 2, ErrorKind::Dimension,
          fmt::format("discrepancy needs a two-output function, got {} outputs", f.z_size()));
  check_compatible(f, mu);
  check_enumeration_cap(f.x_size(), f.y_size());
  std::vector<T> signed_mass(f.cells(), T(0));
  for (std::size_t c = 0; c < f.cells(); ++c) {
    const std::size_t x = c / f.y_size(), y = c % f.y_size();
    if (!f.defined(x, y)) continue;
    signed_mass[c] = f.value(x, y) == 0 ? mu.mass<T>(x, y) : T(-mu.mass<T>(x, y));
  }
  T best(0);
  for_each_rectangle(f.x_size(), f.y_size(), [&](const Rectangle& r) {
    best = max_of(best, abs_of(sum_over(r, f, signed_mass)));
  });
  return best;
}

template <Scalar T>
ChainReport<T> verify_bound_chain(const PartialFunction& f, const T& eps) {
  ChainReport<T> report;
  report.epsilon = eps;
  report.bprt_value = bprt(f, eps).value;
  report.prt_value = prt(f, eps).value;
  const double tol = is_exact_v<T> ? 0.0 : kBoundTolerance;
  auto exceeds = [&](const T& lhs, const T& rhs) {
    if constexpr (is_exact_v<T>) return rhs < lhs;
    else return lhs > rhs + tol;
  };
  if (exceeds(report.bprt_value, report.prt_value)) {
    report.violations.push_back(fmt::format("bprt {} exceeds prt {}", as_double(report.bprt_value),
                                            as_double(report.prt_value)));
  }
  for (std::size_t z = 0; z < f.z_size(); ++z) {
    if (f.preimage_size(static_cast<int>(z)) == 0) continue;
    T value = srec(f, eps, static_cast<int>(z)).value;
    if (exceeds(value, report.bprt_value)) {
      report.violations.push_back(
          fmt::format("srec^{} {} exceeds bprt {}", z, as_double(value), as_double(report.bprt_value)));
    }
    report.srec_values.emplace_back(static_cast<int>(z), std::move(value));
  }
  return report;
}

std::string bound_csv_header() {
  return "bound_name,function,x_size,y_size,z_size,eps,value,log2_value,solver_status";
}

template <Scalar T>
std::string bound_csv_row(const BoundResult<T>& result, const PartialFunction& f) {
  const double v = as_double(result.value);
  const std::string log2v = v > 0.0 ? fmt::format("{:.17g}", std::log2(v)) : std::string("-inf");
  std::string value;
  std::string eps;
  if constexpr (is_exact_v<T>) {
    value = to_string(result.value);
    eps = to_string(result.epsilon);
  } else {
    value = fmt::format("{:.17g}", result.value);
    eps = fmt::format("{:.17g}", result.epsilon);
  }
  std::string name = result.bound_name;
  if (result.label) name += fmt::format("^{}", *result.label);
  return fmt::format("{},{},{},{},{},{},{},{},{}", name, f.name(), f.x_size(), f.y_size(), f.z_size(), eps, value,
                     log2v, to_string(result.status));
}

#define CCLB_INSTANTIATE_BOUNDS(T)                                                                          \
  template struct BoundResult<T>;                                                                           \
  template BoundResult<T> bprt_mu<T>(const PartialFunction&, const InputDistribution&, const T&);          \
  template BoundResult<T> bprt<T>(const PartialFunction&, const T&);                                       \
  template BoundResult<T> prt<T>(const PartialFunction&, const T&);                                        \
  template BoundResult<T> srec<T>(const PartialFunction&, const T&, int);                                  \
  template BoundResult<T> rect_dual<T>(const PartialFunction&, const T&, int);                             \
  template BoundResult<T> rect_dual<T>(const PartialFunction&, const T&, int, const InputDistribution&);   \
  template CorruptionWitness<T> corruption_witness<T>(const PartialFunction&, const InputDistribution&,    \
                                                      const T&, const T&, int, const T&);                  \
  template T discrepancy<T>(const PartialFunction&, const InputDistribution&);                             \
  template ChainReport<T> verify_bound_chain<T>(const PartialFunction&, const T&);                         \
  template std::string bound_csv_row<T>(const BoundResult<T>&, const PartialFunction&);

CCLB_INSTANTIATE_BOUNDS(double)
CCLB_INSTANTIATE_BOUNDS(Rational)

#undef CCLB_INSTANTIATE_BOUNDS

}  // namespace cclb

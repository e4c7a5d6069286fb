#pragma once

// Reference implementations the solver code is checked against. None of them
// share code with the library beyond its data types.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <vector>

#include "evsched/feeder.hpp"
#include "evsched/lp.hpp"
#include "evsched/milp.hpp"

namespace evsched::testing {

// ---------------------------------------------------------------------------
// Vertex enumeration for bounded LPs.
//
// Every variable listed as `free` must have finite bounds, so the feasible set
// is a polytope and an optimum (if any) sits at a vertex. A vertex is fixed by
// choosing r rows to hold with equality, r free variables to solve for, and
// the remaining free variables at one of their bounds; the feasibility check
// takes care of equality rows left out of the active set. The r x r systems do
// not depend on the right-hand side, so their inverses are computed once and
// reused for every assignment of the other (fixed) variables.
class VertexOracle {
 public:
  struct Result {
    bool feasible = false;
    double objective = std::numeric_limits<double>::infinity();
    std::vector<double> x;
  };

  VertexOracle(const lp::LpProblem& problem, std::vector<int> free_vars, double tol = 1e-9)
      : p_(problem), free_(std::move(free_vars)), tol_(tol) {
    const int m = p_.num_rows();
    const int nf = static_cast<int>(free_.size());
    std::vector<int> col_of(p_.num_vars(), -1);
    for (int i = 0; i < nf; ++i) col_of[free_[i]] = i;
    a_.assign(m, std::vector<double>(nf, 0.0));
    for (int i = 0; i < m; ++i) {
      for (const lp::Term& t : p_.rows[i].terms) {
        if (col_of[t.var] >= 0) a_[i][col_of[t.var]] += t.coef;
      }
    }
    std::vector<int> rows, cols;
    choose_rows(0, rows, cols);
  }

  // `x` supplies values for variables that are not free; free entries are
  // ignored.
  Result solve(const std::vector<double>& x) const {
    const int m = p_.num_rows();
    const int nf = static_cast<int>(free_.size());
    std::vector<double> rhs(m);
    for (int i = 0; i < m; ++i) {
      double fixed = 0.0;
      for (const lp::Term& t : p_.rows[i].terms) {
        if (!is_free(t.var)) fixed += t.coef * x[t.var];
      }
      rhs[i] = p_.rows[i].rhs - fixed;
    }
    Result best;
    std::vector<double> y(nf);
    for (const System& s : systems_) {
      const int r = static_cast<int>(s.rows.size());
      const int rest = nf - r;
      for (std::uint32_t mask = 0; mask < (1u << rest); ++mask) {
        for (int i = 0; i < rest; ++i) {
          const int v = s.at_bound[i];
          y[v] = (mask >> i) & 1u ? p_.upper[free_[v]] : p_.lower[free_[v]];
        }
        for (int i = 0; i < r; ++i) {
          double b = rhs[s.rows[i]];
          for (int k = 0; k < rest; ++k) b -= a_[s.rows[i]][s.at_bound[k]] * y[s.at_bound[k]];
          s.reduced[i] = b;
        }
        for (int i = 0; i < r; ++i) {
          double v = 0.0;
          for (int k = 0; k < r; ++k) v += s.inverse[i * r + k] * s.reduced[k];
          y[s.cols[i]] = v;
        }
        if (!feasible(y, rhs)) continue;
        double obj = 0.0;
        for (int j = 0; j < p_.num_vars(); ++j) {
          obj += p_.objective[j] * (is_free(j) ? y[index_of(j)] : x[j]);
        }
        if (!best.feasible || obj < best.objective) {
          best.feasible = true;
          best.objective = obj;
          best.x = x;
          for (int i = 0; i < nf; ++i) best.x[free_[i]] = y[i];
        }
      }
    }
    return best;
  }

 private:
  struct System {
    std::vector<int> rows, cols, at_bound;
    std::vector<double> inverse;
    mutable std::vector<double> reduced;
  };

  bool is_free(int j) const { return std::find(free_.begin(), free_.end(), j) != free_.end(); }
  int index_of(int j) const {
    return static_cast<int>(std::find(free_.begin(), free_.end(), j) - free_.begin());
  }

  bool feasible(const std::vector<double>& y, const std::vector<double>& rhs) const {
    for (std::size_t i = 0; i < free_.size(); ++i) {
      if (y[i] < p_.lower[free_[i]] - tol_ || y[i] > p_.upper[free_[i]] + tol_) return false;
    }
    for (int i = 0; i < p_.num_rows(); ++i) {
      double act = 0.0;
      for (std::size_t k = 0; k < free_.size(); ++k) act += a_[i][k] * y[k];
      const double scale = tol_ * std::max(1.0, std::fabs(rhs[i]));
      switch (p_.rows[i].sense) {
        case lp::Sense::kLessEqual:
          if (act > rhs[i] + scale) return false;
          break;
        case lp::Sense::kGreaterEqual:
          if (act < rhs[i] - scale) return false;
          break;
        case lp::Sense::kEqual:
          if (std::fabs(act - rhs[i]) > scale) return false;
          break;
      }
    }
    return true;
  }

  void choose_rows(int next, std::vector<int>& rows, std::vector<int>& cols) {
    const int m = p_.num_rows();
    const int nf = static_cast<int>(free_.size());
    choose_cols(0, rows, cols);
    if (static_cast<int>(rows.size()) == nf) return;
    for (int i = next; i < m; ++i) {
      rows.push_back(i);
      choose_rows(i + 1, rows, cols);
      rows.pop_back();
    }
  }

  void choose_cols(int next, const std::vector<int>& rows, std::vector<int>& cols) {
    const int nf = static_cast<int>(free_.size());
    if (cols.size() == rows.size()) {
      add_system(rows, cols);
      return;
    }
    for (int j = next; j < nf; ++j) {
      cols.push_back(j);
      choose_cols(j + 1, rows, cols);
      cols.pop_back();
    }
  }

  void add_system(const std::vector<int>& rows, const std::vector<int>& cols) {
    const int r = static_cast<int>(rows.size());
    // Gauss-Jordan with partial pivoting on [A | I].
    std::vector<double> a(r * r), inv(r * r, 0.0);
    for (int i = 0; i < r; ++i) {
      for (int k = 0; k < r; ++k) a[i * r + k] = a_[rows[i]][cols[k]];
      inv[i * r + i] = 1.0;
    }
    for (int c = 0; c < r; ++c) {
      int piv = c;
      for (int i = c + 1; i < r; ++i) {
        if (std::fabs(a[i * r + c]) > std::fabs(a[piv * r + c])) piv = i;
      }
      if (std::fabs(a[piv * r + c]) < 1e-10) return;
      for (int k = 0; k < r; ++k) {
        std::swap(a[c * r + k], a[piv * r + k]);
        std::swap(inv[c * r + k], inv[piv * r + k]);
      }
      const double d = a[c * r + c];
      for (int k = 0; k < r; ++k) {
        a[c * r + k] /= d;
        inv[c * r + k] /= d;
      }
      for (int i = 0; i < r; ++i) {
        if (i == c) continue;
        const double f = a[i * r + c];
        if (f == 0.0) continue;
        for (int k = 0; k < r; ++k) {
          a[i * r + k] -= f * a[c * r + k];
          inv[i * r + k] -= f * inv[c * r + k];
        }
      }
    }
    System s;
    s.rows = rows;
    s.cols = cols;
    for (int j = 0; j < static_cast<int>(free_.size()); ++j) {
      if (std::find(cols.begin(), cols.end(), j) == cols.end()) s.at_bound.push_back(j);
    }
    s.inverse = std::move(inv);
    s.reduced.resize(r);
    systems_.push_back(std::move(s));
  }

  const lp::LpProblem& p_;
  std::vector<int> free_;
  double tol_;
  std::vector<std::vector<double>> a_;
  std::vector<System> systems_;
};

// Minimum over every 0/1 assignment of the binaries (consistent with
// `fixings`) of the LP over the remaining variables.
struct EnumerationResult {
  bool feasible = false;
  double objective = std::numeric_limits<double>::infinity();
  std::vector<double> x;
};

inline EnumerationResult enumerate_milp(const milp::MilpProblem& problem,
                                        const std::vector<std::pair<int, int>>& fixings = {}) {
  std::vector<int> continuous;
  for (int j = 0; j < problem.lp.num_vars(); ++j) {
    if (std::find(problem.binaries.begin(), problem.binaries.end(), j) == problem.binaries.end()) {
      continuous.push_back(j);
    }
  }
  const VertexOracle oracle(problem.lp, continuous);
  const int b = static_cast<int>(problem.binaries.size());
  EnumerationResult best;
  std::vector<double> x(problem.lp.num_vars(), 0.0);
  for (std::uint32_t mask = 0; mask < (1u << b); ++mask) {
    bool ok = true;
    for (int i = 0; i < b && ok; ++i) {
      const int var = problem.binaries[i];
      const double v = (mask >> i) & 1u ? 1.0 : 0.0;
      if (v < problem.lp.lower[var] || v > problem.lp.upper[var]) ok = false;
      for (const auto& [fv, fval] : fixings) {
        if (fv == var && fval != static_cast<int>(v)) ok = false;
      }
      x[var] = v;
    }
    if (!ok) continue;
    const VertexOracle::Result r = oracle.solve(x);
    if (r.feasible && r.objective < best.objective) {
      best.feasible = true;
      best.objective = r.objective;
      best.x = r.x;
    }
  }
  return best;
}

// Random MILP with rows built around a random point so most instances are
// feasible; integer data keeps the oracle well conditioned.
inline milp::MilpProblem random_milp(std::mt19937_64& rng, int binaries, int continuous,
                                     int rows) {
  std::uniform_int_distribution<int> coef(-6, 6);
  std::uniform_int_distribution<int> cost(-10, 10);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  milp::MilpProblem p;
  std::vector<double> anchor;
  for (int i = 0; i < binaries; ++i) {
    p.binaries.push_back(p.lp.add_variable(0.0, 1.0, cost(rng)));
    anchor.push_back(unit(rng) < 0.5 ? 0.0 : 1.0);
  }
  for (int i = 0; i < continuous; ++i) {
    const double lo = std::floor(-4.0 * unit(rng));
    const double hi = lo + 1.0 + std::floor(6.0 * unit(rng));
    p.lp.add_variable(lo, hi, cost(rng));
    anchor.push_back(lo + (hi - lo) * unit(rng));
  }
  for (int r = 0; r < rows; ++r) {
    std::vector<lp::Term> terms;
    double act = 0.0;
    for (int j = 0; j < p.lp.num_vars(); ++j) {
      if (unit(rng) < 0.4) continue;
      const int c = coef(rng);
      if (c == 0) continue;
      terms.push_back({j, static_cast<double>(c)});
      act += c * anchor[j];
    }
    if (terms.empty()) continue;
    const double kind = unit(rng);
    const double slack = std::floor(4.0 * unit(rng)) - (unit(rng) < 0.15 ? 6.0 : 0.0);
    if (kind < 0.45) {
      p.lp.add_row(std::move(terms), lp::Sense::kLessEqual, std::floor(act) + slack);
    } else if (kind < 0.9) {
      p.lp.add_row(std::move(terms), lp::Sense::kGreaterEqual, std::ceil(act) - slack);
    } else {
      p.lp.add_row(std::move(terms), lp::Sense::kEqual, act);
    }
  }
  return p;
}

// ---------------------------------------------------------------------------
// LinDistFlow by recursion over the tree: accumulate subtree injections on
// the way up, drop voltage line by line on the way down.
inline std::vector<double> ldf_sweep(const FeederModel& f, double v0, const std::vector<double>& p,
                                     const std::vector<double>& q) {
  const int n = f.node_count;
  std::vector<std::vector<int>> children(n);
  for (int j = 1; j < n; ++j) children[f.parent[j]].push_back(j);
  std::vector<double> sub_p(n, 0.0), sub_q(n, 0.0), v(n, 0.0);
  std::function<void(int)> up = [&](int j) {
    if (j > 0) {
      sub_p[j] = p[j - 1];
      sub_q[j] = q[j - 1];
    }
    for (int c : children[j]) {
      up(c);
      sub_p[j] += sub_p[c];
      sub_q[j] += sub_q[c];
    }
  };
  // Flow on the line into j is -(subtree injection); v_j = v_parent - 2 (r P + x Q).
  std::function<void(int)> down = [&](int j) {
    for (int c : children[j]) {
      v[c] = v[j] - 2.0 * (f.line_r[c] * -sub_p[c] + f.line_x[c] * -sub_q[c]);
      down(c);
    }
  };
  up(0);
  v[0] = v0;
  down(0);
  return std::vector<double>(v.begin() + 1, v.end());
}

inline FeederModel make_feeder(const std::vector<int>& parent, const std::vector<double>& r,
                               const std::vector<double>& x) {
  FeederModel f;
  f.node_count = static_cast<int>(parent.size());
  f.parent = parent;
  f.line_r = r;
  f.line_x = x;
  f.s_bar.assign(parent.size(), std::nullopt);
  f.spot_p_kw.assign(parent.size(), 0.0);
  for (std::size_t i = 0; i < parent.size(); ++i) f.labels.push_back(std::to_string(i));
  return f;
}

// Random radial tree on n nodes with labels shuffled so parents are not
// always lower-numbered than children.
inline FeederModel random_tree(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> imp(1e-4, 2e-2);
  std::vector<int> build_parent(n, -1);
  for (int i = 1; i < n; ++i) {
    build_parent[i] = std::uniform_int_distribution<int>(0, i - 1)(rng);
  }
  std::vector<int> perm(n);
  for (int i = 0; i < n; ++i) perm[i] = i;
  std::shuffle(perm.begin() + 1, perm.end(), rng);
  std::vector<int> parent(n, -1);
  std::vector<double> r(n, 0.0), x(n, 0.0);
  for (int i = 1; i < n; ++i) {
    parent[perm[i]] = perm[build_parent[i]];
    r[perm[i]] = imp(rng);
    x[perm[i]] = imp(rng);
  }
  return make_feeder(parent, r, x);
}

}  // namespace evsched::testing

#include "evsched/lp.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "evsched/error.hpp"
#include "evsched/simd/kernels.hpp"

namespace evsched::lp {

const char* to_string(LpStatus status) {
  switch (status) {
    case LpStatus::kOptimal: return "optimal";
    case LpStatus::kInfeasible: return "infeasible";
    case LpStatus::kUnbounded: return "unbounded";
  }
  return "unknown";
}

int LpProblem::add_variable(double lb, double ub, double cost, std::string name) {
  objective.push_back(cost);
  lower.push_back(lb);
  upper.push_back(ub);
  col_names.push_back(std::move(name));
  return num_vars() - 1;
}

int LpProblem::add_row(std::vector<Term> terms, Sense sense, double rhs, std::string name) {
  rows.push_back(Row{std::move(terms), sense, rhs, std::move(name)});
  return num_rows() - 1;
}

void LpProblem::validate() const {
  const auto n = objective.size();
  if (lower.size() != n || upper.size() != n) {
    throw Error(ErrorKind::kDimension, "LP bounds must have one entry per variable");
  }
  if (!col_names.empty() && col_names.size() != n) {
    throw Error(ErrorKind::kDimension, "LP column names must be empty or one per variable");
  }
  for (std::size_t j = 0; j < n; ++j) {
    if (!std::isfinite(objective[j])) {
      throw Error(ErrorKind::kConfig, fmt::format("objective coefficient {} is not finite", j));
    }
    if (std::isnan(lower[j]) || std::isnan(upper[j]) || lower[j] > upper[j] ||
        lower[j] == kInf || upper[j] == -kInf) {
      throw Error(ErrorKind::kConfig, fmt::format("variable {} has invalid bounds [{}, {}]", j,
                                                  lower[j], upper[j]));
    }
  }
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (!std::isfinite(rows[i].rhs)) {
      throw Error(ErrorKind::kConfig, fmt::format("row {} has non-finite rhs", i));
    }
    for (const Term& t : rows[i].terms) {
      if (t.var < 0 || static_cast<std::size_t>(t.var) >= n) {
        throw Error(ErrorKind::kDimension,
                    fmt::format("row {} references variable {} of {}", i, t.var, n));
      }
      if (!std::isfinite(t.coef)) {
        throw Error(ErrorKind::kConfig, fmt::format("row {} has a non-finite coefficient", i));
      }
    }
  }
}

double LpProblem::activity(int row, std::span<const double> x) const {
  double s = 0.0;
  for (const Term& t : rows[row].terms) s += t.coef * x[t.var];
  return s;
}

double LpProblem::objective_value(std::span<const double> x) const {
  double s = 0.0;
  for (int j = 0; j < num_vars(); ++j) s += objective[j] * x[j];
  return s;
}

Residuals compute_residuals(const LpProblem& problem, std::span<const double> x) {
  Residuals res;
  for (int i = 0; i < problem.num_rows(); ++i) {
    const Row& row = problem.rows[i];
    const double act = problem.activity(i, x);
    double viol = 0.0;
    switch (row.sense) {
      case Sense::kLessEqual: viol = act - row.rhs; break;
      case Sense::kGreaterEqual: viol = row.rhs - act; break;
      case Sense::kEqual: viol = std::fabs(act - row.rhs); break;
    }
    // Scale by the row's magnitude so kW-sized rows and pu-sized rows compare.
    double scale = std::max(1.0, std::fabs(row.rhs));
    for (const Term& t : row.terms) scale = std::max(scale, std::fabs(t.coef * x[t.var]));
    viol /= scale;
    if (viol > res.max_row) {
      res.max_row = viol;
      res.worst_row = i;
    }
  }
  for (int j = 0; j < problem.num_vars(); ++j) {
    const double viol = std::max(problem.lower[j] - x[j], x[j] - problem.upper[j]);
    const double scale = std::max(1.0, std::fabs(x[j]));
    if (viol / scale > res.max_bound) {
      res.max_bound = viol / scale;
      res.worst_var = j;
    }
  }
  return res;
}

// ---------------------------------------------------------------------------
// Solver

namespace {

constexpr double kStallStep = 1e-12;

}  // namespace

Solver::Solver(const LpProblem& problem, LpOptions options) : problem_(&problem), opt_(options) {
  problem.validate();
  n_ = problem.num_vars();
  implied_lb_.assign(n_, -kInf);
  implied_ub_.assign(n_, kInf);

  // Single-variable rows become bounds; empty rows are checked and dropped.
  for (int i = 0; i < problem.num_rows(); ++i) {
    const Row& row = problem.rows[i];
    int var = -1;
    double coef = 0.0;
    int distinct = 0;
    for (const Term& t : row.terms) {
      if (t.coef == 0.0) continue;
      if (var == t.var) {
        coef += t.coef;
      } else {
        ++distinct;
        var = t.var;
        coef = t.coef;
      }
    }
    if (distinct == 0) {
      const bool ok = (row.sense == Sense::kLessEqual && row.rhs >= -opt_.tol_feas) ||
                      (row.sense == Sense::kGreaterEqual && row.rhs <= opt_.tol_feas) ||
                      (row.sense == Sense::kEqual && std::fabs(row.rhs) <= opt_.tol_feas);
      if (!ok) bounds_infeasible_ = true;
      continue;
    }
    if (distinct == 1 && coef != 0.0) {
      const double v = row.rhs / coef;
      Sense s = row.sense;
      if (coef < 0.0 && s != Sense::kEqual) {
        s = s == Sense::kLessEqual ? Sense::kGreaterEqual : Sense::kLessEqual;
      }
      if (s != Sense::kGreaterEqual) implied_ub_[var] = std::min(implied_ub_[var], v);
      if (s != Sense::kLessEqual) implied_lb_[var] = std::max(implied_lb_[var], v);
      continue;
    }
    kept_row_.push_back(i);
  }
  m_ = static_cast<int>(kept_row_.size());
  cols_ = n_ + m_;

  base_lb_ = problem.lower;
  base_ub_ = problem.upper;
  lb_.assign(cols_, 0.0);
  ub_.assign(cols_, 0.0);
  for (int j = 0; j < n_; ++j) set_bounds(j, base_lb_[j], base_ub_[j]);
  b_.resize(m_);
  for (int i = 0; i < m_; ++i) {
    const Row& row = problem.rows[kept_row_[i]];
    b_[i] = row.rhs;
    switch (row.sense) {
      case Sense::kLessEqual: lb_[n_ + i] = 0.0; ub_[n_ + i] = kInf; break;
      case Sense::kGreaterEqual: lb_[n_ + i] = -kInf; ub_[n_ + i] = 0.0; break;
      case Sense::kEqual: lb_[n_ + i] = 0.0; ub_[n_ + i] = 0.0; break;
    }
  }
  cost_.assign(cols_, 0.0);
  std::copy(problem.objective.begin(), problem.objective.end(), cost_.begin());

  x_.assign(cols_, 0.0);
  status_.assign(cols_, VarStatus::kAtLower);
  head_.assign(m_, -1);
  build_tableau();
  init_slack_basis(true);
}

void Solver::set_bounds(int j, double lb, double ub) {
  base_lb_[j] = lb;
  base_ub_[j] = ub;
  lb_[j] = std::max(lb, implied_lb_[j]);
  ub_[j] = std::min(ub, implied_ub_[j]);
  // Collapse tiny crossings caused by rhs/coef round-off onto one value.
  if (lb_[j] > ub_[j] && lb_[j] - ub_[j] <= opt_.tol_feas * std::max(1.0, std::fabs(ub_[j]))) {
    lb_[j] = ub_[j];
  }
}

void Solver::build_tableau() {
  tab_.assign(static_cast<std::size_t>(m_) * cols_, 0.0);
  for (int i = 0; i < m_; ++i) {
    double* row = tab_.data() + static_cast<std::size_t>(i) * cols_;
    for (const Term& t : problem_->rows[kept_row_[i]].terms) row[t.var] += t.coef;
    row[n_ + i] = 1.0;
  }
}

void Solver::init_slack_basis(bool cold) {
  for (int i = 0; i < m_; ++i) {
    head_[i] = n_ + i;
    status_[n_ + i] = VarStatus::kBasic;
  }
  if (cold) {
    for (int j = 0; j < n_; ++j) status_[j] = VarStatus::kAtLower;
  }
  d_ = cost_;
  place_nonbasic_at_bounds();
  recompute_basic_values();
}

void Solver::place_nonbasic_at_bounds() {
  for (int j = 0; j < cols_; ++j) {
    VarStatus& s = status_[j];
    if (s == VarStatus::kBasic) continue;
    const bool has_lo = lb_[j] > -kInf;
    const bool has_hi = ub_[j] < kInf;
    if (s == VarStatus::kAtLower && !has_lo) s = has_hi ? VarStatus::kAtUpper : VarStatus::kFreeZero;
    if (s == VarStatus::kAtUpper && !has_hi) s = has_lo ? VarStatus::kAtLower : VarStatus::kFreeZero;
    if (s == VarStatus::kFreeZero && (has_lo || has_hi)) {
      s = has_lo ? VarStatus::kAtLower : VarStatus::kAtUpper;
    }
    x_[j] = s == VarStatus::kAtLower ? lb_[j] : s == VarStatus::kAtUpper ? ub_[j] : 0.0;
  }
}

bool Solver::make_dual_feasible() {
  bool ok = true;
  for (int j = 0; j < cols_; ++j) {
    VarStatus& s = status_[j];
    if (s == VarStatus::kBasic || lb_[j] == ub_[j]) continue;
    const double dj = d_[j];
    const bool has_lo = lb_[j] > -kInf;
    const bool has_hi = ub_[j] < kInf;
    if (dj < -opt_.tol_dual && s != VarStatus::kAtUpper) {
      if (has_hi) {
        s = VarStatus::kAtUpper;
        x_[j] = ub_[j];
      } else {
        ok = false;
      }
    } else if (dj > opt_.tol_dual && s != VarStatus::kAtLower) {
      if (has_lo) {
        s = VarStatus::kAtLower;
        x_[j] = lb_[j];
      } else {
        ok = false;
      }
    }
  }
  return ok;
}

bool Solver::dual_feasible() const {
  const double tol = std::max(opt_.tol_dual, 1e-7);
  for (int j = 0; j < cols_; ++j) {
    const VarStatus s = status_[j];
    if (s == VarStatus::kBasic || lb_[j] == ub_[j]) continue;
    if (s == VarStatus::kAtLower && d_[j] < -tol) return false;
    if (s == VarStatus::kAtUpper && d_[j] > tol) return false;
    if (s == VarStatus::kFreeZero && std::fabs(d_[j]) > tol) return false;
  }
  return true;
}

bool Solver::primal_feasible() const {
  for (int k = 0; k < m_; ++k) {
    const int v = head_[k];
    if (x_[v] < lb_[v] - opt_.tol_primal || x_[v] > ub_[v] + opt_.tol_primal) return false;
  }
  return true;
}

void Solver::recompute_basic_values() {
  // r = b - N x_N, then x_B = B^{-1} r where B^{-1} sits in the slack columns.
  std::vector<double> r(b_);
  for (int i = 0; i < m_; ++i) {
    for (const Term& t : problem_->rows[kept_row_[i]].terms) {
      if (status_[t.var] != VarStatus::kBasic) r[i] -= t.coef * x_[t.var];
    }
    if (status_[n_ + i] != VarStatus::kBasic) r[i] -= x_[n_ + i];
  }
  for (int k = 0; k < m_; ++k) {
    const double* row = tab_.data() + static_cast<std::size_t>(k) * cols_ + n_;
    x_[head_[k]] = simd::active().dot(m_, row, r.data());
  }
}

void Solver::recompute_reduced_costs(std::span<const double> cost) {
  d_.assign(cost.begin(), cost.end());
  const auto& kern = simd::active();
  for (int k = 0; k < m_; ++k) {
    const double c = cost[head_[k]];
    if (c != 0.0) kern.axpy(cols_, -c, tab_.data() + static_cast<std::size_t>(k) * cols_, d_.data());
  }
  for (int k = 0; k < m_; ++k) d_[head_[k]] = 0.0;
}

void Solver::pivot(int r, int q) {
  const auto& kern = simd::active();
  double* prow = tab_.data() + static_cast<std::size_t>(r) * cols_;
  const double inv = 1.0 / prow[q];
  kern.scale(cols_, inv, prow);
  prow[q] = 1.0;
  for (int i = 0; i < m_; ++i) {
    if (i == r) continue;
    double* row = tab_.data() + static_cast<std::size_t>(i) * cols_;
    const double f = row[q];
    if (f == 0.0) continue;
    kern.axpy(cols_, -f, prow, row);
    row[q] = 0.0;
  }
  if (d_[q] != 0.0) {
    kern.axpy(cols_, -d_[q], prow, d_.data());
    d_[q] = 0.0;
  }
  head_[r] = q;
  status_[q] = VarStatus::kBasic;
  ++since_refactor_;
}

void Solver::refactor() {
  std::vector<int> wanted(head_);
  build_tableau();
  std::vector<char> assigned(m_, 0);
  std::vector<int> new_head(m_, -1);
  for (int j = 0; j < cols_; ++j) {
    if (status_[j] == VarStatus::kBasic) status_[j] = VarStatus::kAtLower;
  }
  std::sort(wanted.begin(), wanted.end());
  auto pivot_in = [&](int q) {
    int best = -1;
    double best_abs = opt_.tol_pivot;
    for (int i = 0; i < m_; ++i) {
      if (assigned[i]) continue;
      const double a = std::fabs(tab_[static_cast<std::size_t>(i) * cols_ + q]);
      if (a > best_abs) {
        best_abs = a;
        best = i;
      }
    }
    if (best < 0) return false;
    pivot(best, q);
    assigned[best] = 1;
    new_head[best] = q;
    return true;
  };
  for (int q : wanted) pivot_in(q);
  // Rows left without a basic column take the best available slack.
  for (int i = 0; i < m_; ++i) {
    if (assigned[i]) continue;
    int best = -1;
    double best_abs = opt_.tol_pivot;
    for (int j = n_; j < cols_; ++j) {
      if (status_[j] == VarStatus::kBasic) continue;
      const double a = std::fabs(tab_[static_cast<std::size_t>(i) * cols_ + j]);
      if (a > best_abs) {
        best_abs = a;
        best = j;
      }
    }
    if (best < 0) {
      throw Error(ErrorKind::kInternalConsistency, "LP refactorization found a singular basis");
    }
    pivot(i, best);
    assigned[i] = 1;
    new_head[i] = best;
  }
  head_ = new_head;
  since_refactor_ = 0;
  recompute_reduced_costs(cost_);
  place_nonbasic_at_bounds();
  recompute_basic_values();
}

void Solver::tick(double step) {
  ++iterations_;
  ++total_iterations_;
  if (iterations_ > max_iterations_) {
    throw Error(ErrorKind::kIterationLimit,
                fmt::format("LP iteration budget of {} exhausted ({} rows, {} columns)",
                            max_iterations_, m_, n_));
  }
  if (std::fabs(step) <= kStallStep) {
    if (++stall_ > opt_.degenerate_switch) bland_ = true;
  } else {
    stall_ = 0;
  }
  const int interval = opt_.refactor_interval > 0 ? opt_.refactor_interval : std::max(200, 2 * m_);
  if (since_refactor_ >= interval) refactor();
}

Solver::Outcome Solver::primal(bool phase_one) {
  std::vector<double> d1;
  std::vector<double> w;
  std::vector<double> rate(m_);
  for (;;) {
    std::span<const double> dj = d_;
    if (phase_one) {
      w.assign(m_, 0.0);
      bool any = false;
      for (int k = 0; k < m_; ++k) {
        const int v = head_[k];
        if (x_[v] < lb_[v] - opt_.tol_primal) {
          w[k] = -1.0;
          any = true;
        } else if (x_[v] > ub_[v] + opt_.tol_primal) {
          w[k] = 1.0;
          any = true;
        }
      }
      if (!any) return Outcome::kOptimal;
      d1.assign(cols_, 0.0);
      for (int k = 0; k < m_; ++k) {
        if (w[k] != 0.0) {
          simd::active().axpy(cols_, -w[k], tab_.data() + static_cast<std::size_t>(k) * cols_,
                              d1.data());
        }
      }
      for (int k = 0; k < m_; ++k) d1[head_[k]] = 0.0;
      dj = d1;
    }

    // Entering column.
    int q = -1;
    int dir = 0;
    double best = 0.0;
    for (int j = 0; j < cols_ && !(bland_ && q >= 0); ++j) {
      const VarStatus s = status_[j];
      if (s == VarStatus::kBasic || lb_[j] == ub_[j]) continue;
      const bool can_inc = s != VarStatus::kAtUpper;
      const bool can_dec = s != VarStatus::kAtLower;
      if (can_inc && dj[j] < -opt_.tol_dual && -dj[j] > best) {
        best = -dj[j];
        q = j;
        dir = 1;
      } else if (can_dec && dj[j] > opt_.tol_dual && dj[j] > best) {
        best = dj[j];
        q = j;
        dir = -1;
      }
    }
    if (q < 0) return phase_one ? Outcome::kInfeasible : Outcome::kOptimal;

    // Ratio test (Harris two-pass, or plain min-ratio under Bland's rule).
    const double flip = ub_[q] - lb_[q];
    double relaxed = kInf;
    for (int k = 0; k < m_; ++k) {
      const double a = tab_[static_cast<std::size_t>(k) * cols_ + q];
      rate[k] = std::fabs(a) > opt_.tol_pivot ? -dir * a : 0.0;
      if (rate[k] == 0.0) continue;
      const int v = head_[k];
      const double xv = x_[v];
      double lim = kInf;
      if (phase_one && xv < lb_[v] - opt_.tol_primal) {
        if (rate[k] > 0) lim = (lb_[v] - xv) / rate[k];
      } else if (phase_one && xv > ub_[v] + opt_.tol_primal) {
        if (rate[k] < 0) lim = (xv - ub_[v]) / -rate[k];
      } else if (rate[k] > 0 && ub_[v] < kInf) {
        lim = (ub_[v] + opt_.tol_primal - xv) / rate[k];
      } else if (rate[k] < 0 && lb_[v] > -kInf) {
        lim = (xv - lb_[v] + opt_.tol_primal) / -rate[k];
      }
      relaxed = std::min(relaxed, lim);
    }
    int r = -1;
    double theta = kInf;
    double target = 0.0;
    double best_abs = 0.0;
    for (int k = 0; k < m_; ++k) {
      if (rate[k] == 0.0) continue;
      const int v = head_[k];
      const double xv = x_[v];
      double lim = kInf;
      double tgt = 0.0;
      if (phase_one && xv < lb_[v] - opt_.tol_primal) {
        if (rate[k] > 0) { lim = (lb_[v] - xv) / rate[k]; tgt = lb_[v]; }
      } else if (phase_one && xv > ub_[v] + opt_.tol_primal) {
        if (rate[k] < 0) { lim = (xv - ub_[v]) / -rate[k]; tgt = ub_[v]; }
      } else if (rate[k] > 0 && ub_[v] < kInf) {
        lim = (ub_[v] - xv) / rate[k];
        tgt = ub_[v];
      } else if (rate[k] < 0 && lb_[v] > -kInf) {
        lim = (xv - lb_[v]) / -rate[k];
        tgt = lb_[v];
      }
      if (lim == kInf) continue;
      lim = std::max(lim, 0.0);
      if (bland_) {
        if (lim < theta - kStallStep || (lim <= theta + kStallStep && r >= 0 && v < head_[r])) {
          theta = lim;
          r = k;
          target = tgt;
        }
      } else if (lim <= relaxed && std::fabs(rate[k]) > best_abs) {
        best_abs = std::fabs(rate[k]);
        theta = lim;
        r = k;
        target = tgt;
      }
    }

    if (flip <= theta) {
      if (flip == kInf) {
        if (phase_one) {
          throw Error(ErrorKind::kInternalConsistency, "phase-one ray without breakpoint");
        }
        return Outcome::kUnbounded;
      }
      for (int k = 0; k < m_; ++k) {
        if (rate[k] != 0.0) x_[head_[k]] += rate[k] * flip;
      }
      status_[q] = dir > 0 ? VarStatus::kAtUpper : VarStatus::kAtLower;
      x_[q] = dir > 0 ? ub_[q] : lb_[q];
      tick(flip);
      continue;
    }

    for (int k = 0; k < m_; ++k) {
      if (rate[k] != 0.0) x_[head_[k]] += rate[k] * theta;
    }
    x_[q] += dir * theta;
    const int leaving = head_[r];
    x_[leaving] = target;
    status_[leaving] = target == lb_[leaving] ? VarStatus::kAtLower : VarStatus::kAtUpper;
    pivot(r, q);
    tick(theta);
  }
}

Solver::Outcome Solver::dual() {
  for (;;) {
    // Leaving row: the largest bound violation.
    int r = -1;
    double worst = 0.0;
    for (int k = 0; k < m_; ++k) {
      const int v = head_[k];
      double viol = 0.0;
      if (x_[v] < lb_[v] - opt_.tol_primal) viol = lb_[v] - x_[v];
      else if (x_[v] > ub_[v] + opt_.tol_primal) viol = x_[v] - ub_[v];
      if (viol <= 0.0) continue;
      if (bland_) {
        if (r < 0 || v < head_[r]) r = k;
      } else if (viol > worst) {
        worst = viol;
        r = k;
      }
    }
    if (r < 0) return Outcome::kOptimal;

    const int leaving = head_[r];
    const bool increase = x_[leaving] < lb_[leaving];
    const double target = increase ? lb_[leaving] : ub_[leaving];
    const double* row = tab_.data() + static_cast<std::size_t>(r) * cols_;

    auto eligible = [&](int j, double a) {
      const VarStatus s = status_[j];
      if (s == VarStatus::kBasic || lb_[j] == ub_[j] || std::fabs(a) <= opt_.tol_pivot) return false;
      if (s == VarStatus::kFreeZero) return true;
      const bool up = s == VarStatus::kAtLower;  // x_j may only move away from its bound
      return increase ? (up ? a < 0 : a > 0) : (up ? a > 0 : a < 0);
    };
    auto dual_slack = [&](int j) {
      const VarStatus s = status_[j];
      if (s == VarStatus::kAtLower) return std::max(d_[j], 0.0);
      if (s == VarStatus::kAtUpper) return std::max(-d_[j], 0.0);
      return std::fabs(d_[j]);
    };

    double relaxed = kInf;
    for (int j = 0; j < cols_; ++j) {
      if (!eligible(j, row[j])) continue;
      relaxed = std::min(relaxed, (dual_slack(j) + opt_.tol_dual) / std::fabs(row[j]));
    }
    if (relaxed == kInf) return Outcome::kInfeasible;
    int q = -1;
    double best_ratio = kInf;
    double best_abs = 0.0;
    for (int j = 0; j < cols_; ++j) {
      if (!eligible(j, row[j])) continue;
      const double ratio = dual_slack(j) / std::fabs(row[j]);
      if (bland_) {
        if (ratio < best_ratio - kStallStep) {
          best_ratio = ratio;
          q = j;
        }
      } else if (ratio <= relaxed && std::fabs(row[j]) > best_abs) {
        best_abs = std::fabs(row[j]);
        q = j;
      }
    }

    const double delta = (x_[leaving] - target) / row[q];
    x_[q] += delta;
    for (int k = 0; k < m_; ++k) {
      const double a = tab_[static_cast<std::size_t>(k) * cols_ + q];
      if (k != r && a != 0.0) x_[head_[k]] -= delta * a;
    }
    x_[leaving] = target;
    status_[leaving] = increase ? VarStatus::kAtLower : VarStatus::kAtUpper;
    const double step = d_[q] * delta;
    pivot(r, q);
    tick(step);
  }
}

double Solver::structural_objective() const {
  double s = 0.0;
  for (int j = 0; j < n_; ++j) s += cost_[j] * x_[j];
  return s;
}

LpSolution Solver::finish(Outcome outcome) {
  LpSolution sol;
  sol.iterations = iterations_;
  switch (outcome) {
    case Outcome::kInfeasible: sol.status = LpStatus::kInfeasible; return sol;
    case Outcome::kUnbounded: sol.status = LpStatus::kUnbounded; return sol;
    case Outcome::kOptimal: break;
  }
  sol.status = LpStatus::kOptimal;
  sol.x.assign(x_.begin(), x_.begin() + n_);
  sol.objective = structural_objective();
  return sol;
}

LpSolution Solver::solve() {
  iterations_ = 0;
  stall_ = 0;
  bland_ = false;
  max_iterations_ = opt_.max_iterations > 0 ? opt_.max_iterations : 50L * (m_ + n_) + 1000;
  if (bounds_infeasible_) return finish(Outcome::kInfeasible);
  for (int j = 0; j < n_; ++j) {
    if (lb_[j] > ub_[j]) return finish(Outcome::kInfeasible);
  }

  for (int attempt = 0;; ++attempt) {
    place_nonbasic_at_bounds();
    const bool df = make_dual_feasible();
    recompute_basic_values();

    Outcome out = Outcome::kOptimal;
    if (primal_feasible()) {
      if (!df || !dual_feasible()) out = primal(false);
    } else if (df) {
      out = dual();
      if (out == Outcome::kOptimal && !dual_feasible()) out = primal(false);
    } else {
      out = primal(true);
      if (out == Outcome::kOptimal) out = primal(false);
    }
    if (out != Outcome::kOptimal) {
      // Re-check infeasibility claims from a fresh factorization once.
      if (attempt == 0 && iterations_ > 0 && out == Outcome::kInfeasible) {
        refactor();
        continue;
      }
      return finish(out);
    }

    recompute_basic_values();
    std::vector<double> xs(x_.begin(), x_.begin() + n_);
    const Residuals res = compute_residuals(*problem_, xs);
    if (res.max() <= opt_.tol_feas) {
      // Clamp harmless round-off back inside the bounds.
      for (int j = 0; j < n_; ++j) x_[j] = std::clamp(x_[j], lb_[j], ub_[j]);
      return finish(out);
    }
    if (attempt >= 2) {
      throw Error(ErrorKind::kInternalConsistency,
                  fmt::format("LP solution violates constraints by {:.3g} after refactorization",
                              res.max()));
    }
    refactor();
  }
}

Basis Solver::basis() const { return Basis{status_, head_}; }

void Solver::load_basis(const Basis& basis) {
  if (basis.status.size() != static_cast<std::size_t>(cols_) ||
      basis.head.size() != static_cast<std::size_t>(m_)) {
    throw Error(ErrorKind::kDimension, "basis does not belong to this LP");
  }
  status_ = basis.status;
  head_ = basis.head;
  refactor();
}

LpSolution solve_lp(const LpProblem& problem, const LpOptions& options) {
  Solver solver(problem, options);
  return solver.solve();
}

}  // namespace evsched::lp

#include "evsched/milp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "evsched/error.hpp"

namespace evsched::milp {

const char* to_string(MilpStatus status) {
  switch (status) {
    case MilpStatus::kOptimal: return "optimal";
    case MilpStatus::kInfeasible: return "infeasible";
    case MilpStatus::kUnbounded: return "unbounded";
    case MilpStatus::kIterationLimit: return "iteration-limit";
  }
  return "unknown";
}

void MilpProblem::validate() const {
  lp.validate();
  for (int b : binaries) {
    if (b < 0 || b >= lp.num_vars()) {
      throw Error(ErrorKind::kDimension, fmt::format("binary index {} out of range", b));
    }
    if (lp.lower[b] < 0.0 || lp.upper[b] > 1.0) {
      throw Error(ErrorKind::kConfig,
                  fmt::format("binary variable {} has bounds [{}, {}] outside [0, 1]", b,
                              lp.lower[b], lp.upper[b]));
    }
  }
}

ResidualReport check_point(const MilpProblem& problem, const std::vector<double>& x) {
  if (static_cast<int>(x.size()) != problem.lp.num_vars()) {
    throw Error(ErrorKind::kDimension, "point size does not match the problem");
  }
  const lp::Residuals res = lp::compute_residuals(problem.lp, x);
  ResidualReport report;
  report.max_row = res.max_row;
  report.max_bound = res.max_bound;
  report.worst_row = res.worst_row;
  report.worst_var = res.worst_var;
  for (int b : problem.binaries) {
    report.max_integrality = std::max(report.max_integrality, std::fabs(x[b] - std::round(x[b])));
  }
  return report;
}

namespace {

struct Node {
  double bound;
  long seq;
  std::vector<std::pair<int, int>> fixings;
};

struct NodeOrder {
  double quantum;
  double key(const Node& n) const {
    return n.bound == -lp::kInf ? -lp::kInf : std::floor(n.bound / quantum);
  }
  // True when a should be explored after b.
  bool operator()(const Node& a, const Node& b) const {
    const double ka = key(a);
    const double kb = key(b);
    if (ka != kb) return ka > kb;
    return a.seq < b.seq;
  }
};

std::vector<double> snap(const MilpProblem& problem, std::vector<double> x) {
  for (int b : problem.binaries) x[b] = std::round(x[b]);
  return x;
}

}  // namespace

MilpSolution solve_milp(const MilpProblem& problem, const MilpOptions& options) {
  problem.validate();
  if (!options.branch_priority.empty() &&
      static_cast<int>(options.branch_priority.size()) != problem.lp.num_vars()) {
    throw Error(ErrorKind::kDimension, "branch_priority needs one entry per variable");
  }
  MilpSolution out;
  double incumbent = lp::kInf;

  if (options.incumbent_hint) {
    const ResidualReport rep = check_point(problem, *options.incumbent_hint);
    if (rep.max_integrality <= options.tol_int) {
      std::vector<double> x = snap(problem, *options.incumbent_hint);
      if (check_point(problem, x).ok(options.tol_feas)) {
        incumbent = problem.lp.objective_value(x);
        out.x = std::move(x);
        out.has_incumbent = true;
        out.hint_used = true;
      }
    }
  }

  lp::Solver solver(problem.lp, options.lp);
  const int n = problem.lp.num_vars();
  std::vector<int> applied(n, -1);  // current fixing per variable, -1 = root bounds

  auto notify = [&](NodeEvent::Kind kind, const Node& node, double bound) {
    if (options.observer) options.observer(NodeEvent{kind, node.fixings, bound, incumbent});
  };

  std::priority_queue<Node, std::vector<Node>, NodeOrder> open(NodeOrder{options.tol_obj});
  long seq = 0;
  open.push(Node{-lp::kInf, seq++, {}});
  bool limit_hit = false;
  std::vector<int> want(n, -1);

  while (!open.empty()) {
    if (open.top().bound >= incumbent - options.tol_obj) {
      notify(NodeEvent::Kind::kPrunedByBound, open.top(), open.top().bound);
      open.pop();
      continue;
    }
    if (out.node_count >= options.node_limit) {
      limit_hit = true;
      break;
    }
    Node node = open.top();
    open.pop();

    for (const auto& [var, val] : node.fixings) want[var] = val;
    for (int b : problem.binaries) {
      if (want[b] == applied[b]) continue;
      if (want[b] < 0) {
        solver.set_bounds(b, problem.lp.lower[b], problem.lp.upper[b]);
      } else {
        const double v = static_cast<double>(want[b]);
        solver.set_bounds(b, std::max(v, problem.lp.lower[b]), std::min(v, problem.lp.upper[b]));
      }
      applied[b] = want[b];
    }
    for (const auto& [var, val] : node.fixings) want[var] = -1;

    const lp::LpSolution rel = solver.solve();
    ++out.node_count;
    if (out.node_count % 1000 == 0) {
      spdlog::trace("b&b: {} nodes, {} open, incumbent {:.9g}, node bound {:.9g}, depth {}",
                    out.node_count, open.size(), incumbent, rel.objective, node.fixings.size());
    }
    out.lp_iterations += rel.iterations;

    if (rel.status == lp::LpStatus::kInfeasible) {
      notify(NodeEvent::Kind::kInfeasible, node, node.bound);
      continue;
    }
    if (rel.status == lp::LpStatus::kUnbounded) {
      out.status = MilpStatus::kUnbounded;
      return out;
    }
    if (rel.objective >= incumbent - options.tol_obj) {
      notify(NodeEvent::Kind::kPrunedByBound, node, rel.objective);
      continue;
    }

    int branch = -1;
    double best_frac = options.tol_int;
    int best_class = std::numeric_limits<int>::min();
    for (int b : problem.binaries) {
      const double f = rel.x[b] - std::floor(rel.x[b]);
      const double score = std::min(f, 1.0 - f);
      if (score <= options.tol_int) continue;
      const int cls = options.branch_priority.empty() ? 0 : options.branch_priority[b];
      if (cls > best_class || (cls == best_class && score > best_frac)) {
        best_class = cls;
        best_frac = score;
        branch = b;
      }
    }

    if (branch >= 0 && options.rounding) {
      if (auto cand = options.rounding(rel.x)) {
        const ResidualReport rep = check_point(problem, *cand);
        if (rep.max_integrality <= options.tol_int && rep.ok(options.tol_feas)) {
          std::vector<double> x = snap(problem, std::move(*cand));
          const double obj = problem.lp.objective_value(x);
          if (obj < incumbent) {
            incumbent = obj;
            out.x = std::move(x);
            out.has_incumbent = true;
            out.hint_used = false;
          }
        }
      }
      if (rel.objective >= incumbent - options.tol_obj) {
        notify(NodeEvent::Kind::kPrunedByBound, node, rel.objective);
        continue;
      }
    }

    if (branch < 0) {
      std::vector<double> x = snap(problem, rel.x);
      const double obj = problem.lp.objective_value(x);
      if (obj < incumbent) {
        incumbent = obj;
        out.x = std::move(x);
        out.has_incumbent = true;
        out.hint_used = false;
      }
      notify(NodeEvent::Kind::kIntegral, node, rel.objective);
      continue;
    }

    notify(NodeEvent::Kind::kBranched, node, rel.objective);
    Node down{rel.objective, seq++, node.fixings};
    down.fixings.emplace_back(branch, 0);
    Node up{rel.objective, seq++, std::move(node.fixings)};
    up.fixings.emplace_back(branch, 1);
    open.push(std::move(down));
    open.push(std::move(up));
  }

  out.objective = out.has_incumbent ? incumbent : 0.0;
  if (limit_hit) {
    out.status = MilpStatus::kIterationLimit;
    double bound = incumbent;
    while (!open.empty()) {
      bound = std::min(bound, open.top().bound);
      open.pop();
    }
    out.best_bound = bound;
  } else {
    out.status = out.has_incumbent ? MilpStatus::kOptimal : MilpStatus::kInfeasible;
    out.best_bound = incumbent;
  }
  return out;
}

VerifiedSolution round_and_verify(const MilpSolution& solution, const MilpProblem& problem,
                                  double tol_int, double tol_feas) {
  if (!solution.has_incumbent) {
    throw Error(ErrorKind::kInternalConsistency,
                fmt::format("cannot verify a {} MILP result without an incumbent",
                            to_string(solution.status)));
  }
  VerifiedSolution v{solution, {}};
  const ResidualReport before = check_point(problem, solution.x);
  if (before.max_integrality > tol_int) {
    throw Error(ErrorKind::kInternalConsistency,
                fmt::format("binary variable off integrality by {:.3g}", before.max_integrality));
  }
  v.solution.x = snap(problem, solution.x);
  v.residuals = check_point(problem, v.solution.x);
  v.residuals.max_integrality = before.max_integrality;
  if (!v.residuals.ok(tol_feas)) {
    throw Error(ErrorKind::kInternalConsistency,
                fmt::format("MILP solution residual {:.3g} (row {}) / bound {:.3g} (var {}) exceeds {}",
                            v.residuals.max_row, v.residuals.worst_row, v.residuals.max_bound,
                            v.residuals.worst_var, tol_feas));
  }
  v.solution.objective = problem.lp.objective_value(v.solution.x);
  return v;
}

std::shared_ptr<const MilpBackend> default_backend() {
  static const auto backend = std::make_shared<const BranchAndBound>();
  return backend;
}

}  // namespace evsched::milp

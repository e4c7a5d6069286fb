#pragma once

// Branch-and-bound over binary variables on top of the dense LP solver.

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "evsched/lp.hpp"

namespace evsched::milp {

struct MilpProblem {
  lp::LpProblem lp;
  std::vector<int> binaries;

  void validate() const;
};

enum class MilpStatus { kOptimal, kInfeasible, kUnbounded, kIterationLimit };
const char* to_string(MilpStatus status);

struct MilpSolution {
  MilpStatus status = MilpStatus::kInfeasible;
  bool has_incumbent = false;
  std::vector<double> x;
  double objective = 0.0;
  double best_bound = -lp::kInf;
  long node_count = 0;      // LP relaxations solved
  long lp_iterations = 0;
  bool hint_used = false;   // incumbent hint passed verification
};

// Search-tree event, reported to MilpOptions::observer.
struct NodeEvent {
  enum class Kind { kPrunedByBound, kInfeasible, kIntegral, kBranched };
  Kind kind;
  std::vector<std::pair<int, int>> fixings;  // (variable, 0|1) from root
  double bound;      // lower bound known for the subtree when the event fired
  double incumbent;  // incumbent objective at that moment (+inf if none)
};

struct MilpOptions {
  long node_limit = 100000;
  double tol_int = 1e-6;
  double tol_obj = 1e-6;
  double tol_feas = 1e-7;
  // Integer-feasible starting point; accepted only if it passes the residual
  // check at tol_feas / tol_int.
  std::optional<std::vector<double>> incumbent_hint;
  std::function<void(const NodeEvent&)> observer;
  // Per-variable branching class; fractional binaries of the highest class
  // are branched on first. Empty means one class.
  std::vector<int> branch_priority;
  // Maps a node's relaxation to a candidate integer point, or nullopt.
  // Candidates are verified before they replace the incumbent.
  std::function<std::optional<std::vector<double>>(const std::vector<double>&)> rounding;
  lp::LpOptions lp;
};

// Most-fractional branching within the highest priority class (ties: lowest
// index), best-bound node selection (ties: most recently created first).
MilpSolution solve_milp(const MilpProblem& problem, const MilpOptions& options = {});

struct ResidualReport {
  double max_row = 0.0;
  double max_bound = 0.0;
  double max_integrality = 0.0;  // before snapping
  int worst_row = -1;
  int worst_var = -1;
  bool ok(double tol_feas) const { return max_row <= tol_feas && max_bound <= tol_feas; }
};

ResidualReport check_point(const MilpProblem& problem, const std::vector<double>& x);

struct VerifiedSolution {
  MilpSolution solution;  // binaries snapped to exact 0/1
  ResidualReport residuals;
};

// Snaps binaries within tol_int of 0/1 and re-checks every constraint.
// Throws Error(kInternalConsistency) on integrality or residual failure.
VerifiedSolution round_and_verify(const MilpSolution& solution, const MilpProblem& problem,
                                  double tol_int = 1e-6, double tol_feas = 1e-7);

// Contract the scheduler talks to; lets another MILP engine stand in for the
// built-in branch-and-bound.
class MilpBackend {
 public:
  virtual ~MilpBackend() = default;
  virtual std::string name() const = 0;
  virtual MilpSolution solve(const MilpProblem& problem, const MilpOptions& options) const = 0;
};

class BranchAndBound final : public MilpBackend {
 public:
  std::string name() const override { return "branch-and-bound"; }
  MilpSolution solve(const MilpProblem& problem, const MilpOptions& options) const override {
    return solve_milp(problem, options);
  }
};

std::shared_ptr<const MilpBackend> default_backend();

}  // namespace evsched::milp

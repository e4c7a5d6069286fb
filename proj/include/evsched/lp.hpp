#pragma once

// Dense linear programming: minimize c'x subject to row constraints and
// variable bounds, solved with a bounded-variable tableau simplex.

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace evsched::lp {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class Sense : std::uint8_t { kLessEqual, kEqual, kGreaterEqual };

struct Term {
  int var;
  double coef;
};

struct Row {
  std::vector<Term> terms;
  Sense sense = Sense::kLessEqual;
  double rhs = 0.0;
  std::string name;
};

struct LpProblem {
  std::vector<double> objective;
  std::vector<double> lower;
  std::vector<double> upper;
  std::vector<std::string> col_names;
  std::vector<Row> rows;

  int num_vars() const { return static_cast<int>(objective.size()); }
  int num_rows() const { return static_cast<int>(rows.size()); }

  int add_variable(double lb, double ub, double cost, std::string name = {});
  int add_row(std::vector<Term> terms, Sense sense, double rhs, std::string name = {});

  // Dimensions, finite coefficients, lower <= upper, term indices in range.
  void validate() const;

  // Row activity a_i'x.
  double activity(int row, std::span<const double> x) const;
  double objective_value(std::span<const double> x) const;
};

enum class LpStatus : std::uint8_t { kOptimal, kInfeasible, kUnbounded };
const char* to_string(LpStatus status);

struct LpSolution {
  LpStatus status = LpStatus::kInfeasible;
  std::vector<double> x;
  double objective = 0.0;
  long iterations = 0;
};

struct LpOptions {
  double tol_feas = 1e-7;         // final primal residual acceptance
  double tol_obj = 1e-6;          // objective agreement
  double tol_primal = 1e-9;       // bound violation tolerated inside iterations
  double tol_dual = 1e-9;         // reduced-cost sign tolerance
  double tol_pivot = 1e-9;        // smallest usable tableau entry
  long max_iterations = 0;        // 0: 50 * (rows + cols) + 1000
  int degenerate_switch = 50;     // consecutive stalls before Bland's rule
  int refactor_interval = 0;      // 0: max(200, 2 * rows)
};

// Largest constraint / bound violation of x, used for acceptance checks.
struct Residuals {
  double max_row = 0.0;
  double max_bound = 0.0;
  int worst_row = -1;
  int worst_var = -1;
  double max() const { return max_row > max_bound ? max_row : max_bound; }
};
Residuals compute_residuals(const LpProblem& problem, std::span<const double> x);

enum class VarStatus : std::uint8_t { kBasic, kAtLower, kAtUpper, kFreeZero };

// Basis snapshot over internal columns (structurals, then one slack per kept
// row). Only meaningful for the Solver that produced it.
struct Basis {
  std::vector<VarStatus> status;
  std::vector<int> head;
};

// Stateful solver. The tableau survives bound changes, so repeated solves
// after set_bounds() warm-start from the previous optimal basis with the dual
// simplex. Not thread-safe; use one instance per thread.
class Solver {
 public:
  explicit Solver(const LpProblem& problem, LpOptions options = {});

  // Replace the bounds of structural variable j (intersected with any bound
  // implied by single-variable rows).
  void set_bounds(int j, double lb, double ub);
  double lower(int j) const { return lb_[j]; }
  double upper(int j) const { return ub_[j]; }

  LpSolution solve();

  Basis basis() const;
  // Rebuilds the tableau around `basis`; falls back to slacks for columns
  // that turn out singular.
  void load_basis(const Basis& basis);

  long total_iterations() const { return total_iterations_; }
  int kept_rows() const { return m_; }

 private:
  enum class Outcome { kOptimal, kInfeasible, kUnbounded };

  void build_tableau();
  void init_slack_basis(bool cold);
  void refactor();
  void pivot(int r, int q);
  void recompute_basic_values();
  void recompute_reduced_costs(std::span<const double> cost);
  void place_nonbasic_at_bounds();
  bool primal_feasible() const;
  bool make_dual_feasible();
  bool dual_feasible() const;
  Outcome primal(bool phase_one);
  Outcome dual();
  void tick(double obj_before);
  double structural_objective() const;
  LpSolution finish(Outcome outcome);

  const LpProblem* problem_;
  LpOptions opt_;
  int n_ = 0;       // structural columns
  int m_ = 0;       // kept (non-singleton) rows
  int cols_ = 0;    // n_ + m_
  bool bounds_infeasible_ = false;
  std::vector<int> kept_row_;           // internal row -> problem row
  std::vector<double> implied_lb_, implied_ub_;
  std::vector<double> base_lb_, base_ub_;  // bounds requested via set_bounds
  std::vector<double> lb_, ub_;            // effective, size cols_
  std::vector<double> cost_;               // size cols_
  std::vector<double> b_;                  // size m_
  std::vector<double> tab_;                // m_ x cols_, row-major
  std::vector<double> d_;                  // reduced costs
  std::vector<double> x_;
  std::vector<VarStatus> status_;
  std::vector<int> head_;
  long iterations_ = 0;
  long total_iterations_ = 0;
  long max_iterations_ = 0;
  int since_refactor_ = 0;
  int stall_ = 0;
  bool bland_ = false;
};

// One-shot convenience wrapper.
LpSolution solve_lp(const LpProblem& problem, const LpOptions& options = {});

// Line-oriented text dump; `binaries` lists variables to tag as binary.
void write_lp_text(std::ostream& out, const LpProblem& problem,
                   std::span<const int> binaries = {});
std::string to_lp_text(const LpProblem& problem, std::span<const int> binaries = {});

}  // namespace evsched::lp

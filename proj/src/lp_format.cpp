#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

#include <fmt/format.h>

#include "evsched/lp.hpp"

namespace evsched::lp {
namespace {

std::string col_name(const LpProblem& p, int j) {
  if (j < static_cast<int>(p.col_names.size()) && !p.col_names[j].empty()) return p.col_names[j];
  return fmt::format("x{}", j);
}

std::string row_name(const LpProblem& p, int i) {
  if (!p.rows[i].name.empty()) return p.rows[i].name;
  return fmt::format("r{}", i);
}

std::string num(double v) {
  if (v == kInf) return "inf";
  if (v == -kInf) return "-inf";
  return fmt::format("{}", v);
}

std::string signed_term(double coef, const std::string& name) {
  return fmt::format("{}{} {}", coef < 0 ? "- " : "+ ", num(std::fabs(coef)), name);
}

}  // namespace

// Format, one item per line:
//   \ evsched-lp 1
//   minimize
//    obj: + c0 x0 - c1 x1 ...
//   subject to
//    name: + a x0 ... <= rhs
//   bounds
//    lb <= name <= ub
//   binaries
//    name
//   end
void write_lp_text(std::ostream& out, const LpProblem& problem, std::span<const int> binaries) {
  out << "\\ evsched-lp 1\n";
  out << fmt::format("\\ {} variables, {} rows\n", problem.num_vars(), problem.num_rows());
  out << "minimize\n obj:";
  bool any = false;
  for (int j = 0; j < problem.num_vars(); ++j) {
    if (problem.objective[j] == 0.0) continue;
    out << ' ' << signed_term(problem.objective[j], col_name(problem, j));
    any = true;
  }
  if (!any) out << " 0";
  out << "\nsubject to\n";
  for (int i = 0; i < problem.num_rows(); ++i) {
    const Row& row = problem.rows[i];
    out << ' ' << row_name(problem, i) << ':';
    if (row.terms.empty()) out << " 0";
    for (const Term& t : row.terms) out << ' ' << signed_term(t.coef, col_name(problem, t.var));
    const char* op = row.sense == Sense::kLessEqual ? "<=" : row.sense == Sense::kEqual ? "=" : ">=";
    out << ' ' << op << ' ' << num(row.rhs) << '\n';
  }
  out << "bounds\n";
  for (int j = 0; j < problem.num_vars(); ++j) {
    out << ' ' << num(problem.lower[j]) << " <= " << col_name(problem, j) << " <= "
        << num(problem.upper[j]) << '\n';
  }
  if (!binaries.empty()) {
    std::vector<int> sorted(binaries.begin(), binaries.end());
    std::sort(sorted.begin(), sorted.end());
    out << "binaries\n";
    for (int j : sorted) out << ' ' << col_name(problem, j) << '\n';
  }
  out << "end\n";
}

std::string to_lp_text(const LpProblem& problem, std::span<const int> binaries) {
  std::ostringstream os;
  write_lp_text(os, problem, binaries);
  return os.str();
}

}  // namespace evsched::lp

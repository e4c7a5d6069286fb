#pragma once

#include <stdexcept>
#include <string>

namespace evsched {

enum class ErrorKind {
  kConfig,               // malformed input, bad parameters, I/O
  kTopology,             // feeder parent pointers do not form a tree
  kDimension,            // vector/matrix sizes disagree
  kInfeasibleConfig,     // data violates a precondition (e.g. |q| > s_bar)
  kBaseLoadInfeasible,   // network limits violated with zero EV load
  kIterationLimit,       // LP pivot budget exhausted
  kInternalConsistency,  // solver output failed re-verification
  kInvariantViolation,   // a guarantee of the moving horizon was broken
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace evsched

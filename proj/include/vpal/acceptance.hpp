#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace vpal {

struct Criterion {
  std::string id;     // "A1" ... "A11"
  std::string title;
  double budget = 0;  // wall-clock limit in seconds, 0 = none
};

struct CriterionResult {
  std::string id;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

const std::vector<Criterion>& acceptance_criteria();

// Throws std::invalid_argument for an unknown id. A criterion whose checks
// throw is reported as failed with the exception text.
CriterionResult run_criterion(const std::string& id);

// Runs the selected criteria (all when `only` is empty) in order and prints
// one line per criterion. Returns true when every one passed.
bool run_acceptance(const std::vector<std::string>& only, std::ostream& os);

}  // namespace vpal

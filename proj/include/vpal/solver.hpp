#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "vpal/precond.hpp"
#include "vpal/problem.hpp"
#include "vpal/stepsize.hpp"

namespace vpal {

enum class StepRule { Linearized, Optimal, PhasePoly, Fixed };

struct StepStrategy {
  StepRule rule = StepRule::Linearized;
  double fixed_alpha = 1.0;

  // "lin", "opt", "poly" or "fixed:<alpha>"
  static StepStrategy parse(const std::string& text);
  std::string to_string() const;
};

struct SolverConfig {
  double lambda = 1.0;
  StepStrategy step;
  int outer_max = 100;
  int inner_max = 1;
  // Stop when both the relative objective change and the relative primal
  // residual ||Dx - y|| fall below tol. 0 runs the full budget.
  double tol = 0.0;
  PrecondPolicy precond;
  // Minimum cosine between -g and s accepted under preconditioning.
  double descent_beta = 1e-8;

  void validate() const;
};

class SolverAbort : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct IterationRecord {
  int iter = 0;      // 1-based count of inner steps
  int outer = 0;     // 0-based outer index
  double f = 0.0;    // f_proj after the step (z of this outer iteration)
  double f_start = 0.0;
  double objective = 0.0;  // generalized Lasso objective after the step
  double misfit = 0.0;     // 1/(2 sigma^2) ||A(x) - b||^2 after the step
  std::optional<double> rre;
  double alpha = 0.0;
  double seconds = 0.0;  // cumulative wall time
  int cg_iters = 0;
  bool step_fallback = false;
};

struct RunReport {
  std::vector<IterationRecord> records;
  GridSignal x, y, z;
  int outer_iterations = 0;
  bool converged = false;

  // iter,f,rre,alpha,seconds,cg_iters,objective. rre is empty without truth.
  void write_csv(std::ostream& os, bool with_timing = true) const;

  // First iteration whose rre is <= target, if any.
  std::optional<int> first_reaching(double target_rre) const;
  double final_rre() const;
};

struct RunOptions {
  std::optional<GridSignal> truth;
  std::optional<GridSignal> x0;
  // Called after every inner step with the new iterate.
  std::function<void(const IterationRecord&, const GridSignal& x)> observer;
};

RunReport run(const ProblemSpec& spec, const SolverConfig& config, const RunOptions& options = {});

}  // namespace vpal

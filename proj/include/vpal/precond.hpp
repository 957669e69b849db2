#pragma once

#include <memory>

#include "vpal/problem.hpp"

namespace vpal {

struct PrecondPolicy {
  bool enabled = false;
  double epsilon = 0.99;
  double cg_tol = 1e-6;
  int cg_max = 50;
  // Apply only during the first `window` outer iterations; 0 means always.
  int window = 0;

  void validate() const;
  bool active(int outer_iteration) const;
};

// H(x, z) v = (1/sigma^2) J^T J v + lambda^2 D^T ((1 - j) .* Dv),
// j = smoothed_jacobian_diag(Dx + z). J is A for linear A and the Jacobian
// at x otherwise (Gauss-Newton).
class ApproxHessian final : public LinearOperator {
 public:
  ApproxHessian(const GridSignal& x, const GridSignal& z, const ProblemSpec& spec, double lambda,
                double epsilon);
  GridSignal apply(const GridSignal& v) const override;
  GridSignal adjoint(const GridSignal& v) const override { return apply(v); }
  const GridSignal& weights() const { return weights_; }

 private:
  const ProblemSpec* spec_;
  std::unique_ptr<LinearOperator> jac_;
  GridSignal weights_;  // lambda^2 (1 - j)
  double inv_s2_;
};

GridSignal htilde_apply(const GridSignal& v, const GridSignal& x, const GridSignal& z,
                        const ProblemSpec& spec, double lambda, double epsilon);

struct PrecondResult {
  GridSignal s;
  int cg_iters = 0;
  bool fell_back = false;  // CG broke down or produced a non-descent direction; s = -g
};

// s ~ -H^{-1} g by conjugate gradients started from zero.
PrecondResult precond_solve(const GridSignal& g, const GridSignal& x, const GridSignal& z,
                            const ProblemSpec& spec, double lambda, const PrecondPolicy& policy);

// Plain CG on an SPD operator; stops at ||r|| <= tol ||rhs|| or max_iters.
// Returns false on breakdown (p^T H p <= 0 or non-finite values).
bool conjugate_gradient(const LinearOperator& H, const GridSignal& rhs, GridSignal& x, double tol,
                        int max_iters, int& iterations);

}  // namespace vpal

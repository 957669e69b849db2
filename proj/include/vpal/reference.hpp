#pragma once

#include <stdexcept>

#include "vpal/problem.hpp"

namespace vpal {

class SingularSystem : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Dense solve of (A^T A + sigma^2 lambda^2 D^T D) x = A^T b. Linear A, n <= 2048.
GridSignal tikhonov_solve(const ProblemSpec& spec, double lambda);

struct AdmmResult {
  GridSignal x, y, u;  // u is the scaled dual
  double rho = 1.0;

  // Multiplier estimate rho u / mu, an element of the l1 subdifferential at Dx.
  GridSignal multiplier(double mu) const;
};

// Scaled-dual ADMM on x, y with Dx = y: exact dense x-solve (Cholesky of
// A^T A / sigma^2 + rho D^T D), soft-threshold y-solve, dual ascent. n <= 512.
AdmmResult admm_reference(const ProblemSpec& spec, double rho, int iters);

// Largest violation of the generalized Lasso optimality conditions for the
// candidate pair (x, w): stationarity ||A^T(Ax - b)/sigma^2 + mu D^T w||_inf
// and, per entry, w_i = sign((Dx)_i) where |(Dx)_i| > active_tol, |w_i| <= 1
// elsewhere.
double kkt_residual(const ProblemSpec& spec, const GridSignal& x, const GridSignal& w,
                    double active_tol = 1e-8);

}  // namespace vpal

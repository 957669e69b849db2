#pragma once

#include "vpal/operators.hpp"

namespace vpal {

// zeta = mu / lambda^2 is the shrinkage threshold; epsilon is the width of the
// smoothing band used by the preconditioner and must lie in (0, 1).
struct ShrinkageParams {
  double zeta = 0.0;
  double epsilon = 0.99;

  static ShrinkageParams from(double mu, double lambda, double epsilon = 0.99);
  void validate() const;
};

// sign(v) * max(|v| - tau, 0)
inline double soft_threshold(double v, double tau) {
  if (v > tau) return v - tau;
  if (v < -tau) return v + tau;
  return 0.0;
}

GridSignal soft_threshold(const GridSignal& v, double tau);

// y_z(x) = soft_threshold(Dx + z, zeta): the exact minimiser of the joint
// objective over y for fixed x and z.
GridSignal y_of_x(const GridSignal& x, const GridSignal& z, const LinearOperator& D,
                  const ShrinkageParams& params);

// Element-wise smoothed shrinkage and its derivative. Points exactly on a
// branch seam take the inner branch.
double smoothed_value(double v, double zeta, double epsilon);
double smoothed_derivative(double v, double zeta, double epsilon);

GridSignal smoothed_value(const GridSignal& v, const ShrinkageParams& params);
GridSignal smoothed_jacobian_diag(const GridSignal& v, const ShrinkageParams& params);

}  // namespace vpal

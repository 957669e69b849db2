#pragma once

#include "vpal/operators.hpp"
#include "vpal/shrinkage.hpp"

namespace vpal {

// One generalized Lasso instance
//   min_x 1/(2 sigma^2) ||A(x) - b||^2 + mu ||Dx||_1.
struct ProblemSpec {
  OperatorPtr A;
  LinearOperatorPtr D;
  GridSignal b;
  double sigma = 1.0;
  double mu = 0.0;

  void validate() const;
  // Non-null when A is linear.
  const LinearOperator* linear_A() const;
  ShrinkageParams shrinkage(double lambda, double epsilon = 0.99) const;
};

// Value of the reduced objective assembled from its pieces:
// residual = A(x) - b, shifted = Dx + z.
double projected_value(const GridSignal& residual, const GridSignal& shifted, double sigma,
                       double lambda, double mu);

double f_joint(const GridSignal& x, const GridSignal& y, const GridSignal& z,
               const ProblemSpec& spec, double lambda);
double f_proj(const GridSignal& x, const GridSignal& z, const ProblemSpec& spec, double lambda);

// The generalized Lasso objective itself.
double lasso_objective(const GridSignal& x, const ProblemSpec& spec);

// g = (1/sigma^2) J_A(x)^T (A(x) - b) + lambda^2 D^T (Dx + z - y).
// When y = y_of_x(x, z) this is the gradient of f_proj.
GridSignal gradient(const GridSignal& x, const GridSignal& y, const GridSignal& z,
                    const ProblemSpec& spec, double lambda);

// z + Dx - y
GridSignal dual_update(const GridSignal& z, const GridSignal& Dx, const GridSignal& y);

}  // namespace vpal

#include "vpal/problem.hpp"

#include <cmath>
#include <stdexcept>

namespace vpal {

void ProblemSpec::validate() const {
  if (!A || !D) throw std::invalid_argument("problem: A and D are required");
  if (A->in_size() != D->in_size())
    throw ShapeError("problem: A and D act on different spaces " + to_string(A->in_shape()) +
                     " vs " + to_string(D->in_shape()));
  if (b.size() != A->out_size())
    throw ShapeError("problem: b has shape " + to_string(b.shape) + ", A maps to " +
                     to_string(A->out_shape()));
  if (!(sigma > 0.0)) throw std::invalid_argument("problem: sigma must be positive");
  if (!(mu >= 0.0)) throw std::invalid_argument("problem: mu must be non-negative");
}

const LinearOperator* ProblemSpec::linear_A() const {
  return A->is_linear() ? static_cast<const LinearOperator*>(A.get()) : nullptr;
}

ShrinkageParams ProblemSpec::shrinkage(double lambda, double epsilon) const {
  return ShrinkageParams::from(mu, lambda, epsilon);
}

double projected_value(const GridSignal& residual, const GridSignal& shifted, double sigma,
                       double lambda, double mu) {
  const double zeta = mu / (lambda * lambda);
  double pen = 0.0, l1 = 0.0;
  for (double v : shifted.data) {
    const double y = soft_threshold(v, zeta);
    const double d = v - y;
    pen += d * d;
    l1 += std::abs(y);
  }
  const double r2 = dot(residual, residual);
  return 0.5 * r2 / (sigma * sigma) + 0.5 * lambda * lambda * pen + mu * l1;
}

double f_joint(const GridSignal& x, const GridSignal& y, const GridSignal& z,
               const ProblemSpec& spec, double lambda) {
  const GridSignal r = spec.A->apply(x) - spec.b;
  GridSignal c = spec.D->apply(x);
  require_same_size(c, y, "f_joint");
  require_same_size(c, z, "f_joint");
  // same association as projected_value so that f_joint(x, y_of_x(x, z))
  // reproduces f_proj(x) bit for bit
  for (std::size_t i = 0; i < c.size(); ++i) c[i] = (c[i] + z[i]) - y[i];
  const double s2 = spec.sigma * spec.sigma;
  return 0.5 * dot(r, r) / s2 + 0.5 * lambda * lambda * dot(c, c) + spec.mu * norm1(y);
}

double f_proj(const GridSignal& x, const GridSignal& z, const ProblemSpec& spec, double lambda) {
  const GridSignal r = spec.A->apply(x) - spec.b;
  GridSignal v = spec.D->apply(x);
  axpy(1.0, z, v);
  return projected_value(r, v, spec.sigma, lambda, spec.mu);
}

double lasso_objective(const GridSignal& x, const ProblemSpec& spec) {
  const GridSignal r = spec.A->apply(x) - spec.b;
  return 0.5 * dot(r, r) / (spec.sigma * spec.sigma) + spec.mu * norm1(spec.D->apply(x));
}

GridSignal gradient(const GridSignal& x, const GridSignal& y, const GridSignal& z,
                    const ProblemSpec& spec, double lambda) {
  GridSignal r = spec.A->apply(x) - spec.b;
  GridSignal g = spec.A->vjp(x, r);
  scale(g, 1.0 / (spec.sigma * spec.sigma));
  GridSignal c = spec.D->apply(x);
  for (std::size_t i = 0; i < c.size(); ++i) c[i] += z[i] - y[i];
  axpy(lambda * lambda, spec.D->adjoint(c), g);
  return g;
}

GridSignal dual_update(const GridSignal& z, const GridSignal& Dx, const GridSignal& y) {
  require_same_size(z, Dx, "dual_update");
  require_same_size(z, y, "dual_update");
  GridSignal out = z;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += Dx[i] - y[i];
  return out;
}

}  // namespace vpal

#include "vpal/shrinkage.hpp"

#include <cmath>
#include <stdexcept>

namespace vpal {

ShrinkageParams ShrinkageParams::from(double mu, double lambda, double epsilon) {
  if (!(lambda > 0.0)) throw std::invalid_argument("shrinkage: lambda must be positive");
  ShrinkageParams p{mu / (lambda * lambda), epsilon};
  p.validate();
  return p;
}

void ShrinkageParams::validate() const {
  if (!(zeta >= 0.0)) throw std::invalid_argument("shrinkage: zeta must be non-negative");
  if (!(epsilon > 0.0 && epsilon < 1.0))
    throw std::invalid_argument("shrinkage: epsilon must lie in (0, 1)");
}

GridSignal soft_threshold(const GridSignal& v, double tau) {
  if (!(tau >= 0.0)) throw std::invalid_argument("soft_threshold: tau must be non-negative");
  GridSignal out(v.shape);
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = soft_threshold(v[i], tau);
  return out;
}

GridSignal y_of_x(const GridSignal& x, const GridSignal& z, const LinearOperator& D,
                  const ShrinkageParams& params) {
  GridSignal v = D.apply(x);
  axpy(1.0, z, v);
  for (double& e : v.data) e = soft_threshold(e, params.zeta);
  return v;
}

double smoothed_value(double v, double zeta, double eps) {
  if (v > zeta + eps) return eps * (v - zeta - 0.5 * eps);
  if (v > zeta) return 0.5 * (v - zeta) * (v - zeta);
  if (v >= -zeta) return 0.0;
  if (v >= -zeta - eps) return -0.5 * (v + zeta) * (v + zeta);
  return -eps * (-v - zeta - 0.5 * eps);
}

// d/dv of smoothed_value. On the negative transition band this is
// -(v + zeta) = |v| - zeta, which keeps every entry in [0, eps].
double smoothed_derivative(double v, double zeta, double eps) {
  if (v > zeta + eps) return eps;
  if (v > zeta) return v - zeta;
  if (v >= -zeta) return 0.0;
  if (v >= -zeta - eps) return -(v + zeta);
  return eps;
}

GridSignal smoothed_value(const GridSignal& v, const ShrinkageParams& params) {
  params.validate();
  GridSignal out(v.shape);
  for (std::size_t i = 0; i < v.size(); ++i)
    out[i] = smoothed_value(v[i], params.zeta, params.epsilon);
  return out;
}

GridSignal smoothed_jacobian_diag(const GridSignal& v, const ShrinkageParams& params) {
  params.validate();
  GridSignal out(v.shape);
  for (std::size_t i = 0; i < v.size(); ++i)
    out[i] = smoothed_derivative(v[i], params.zeta, params.epsilon);
  return out;
}

}  // namespace vpal

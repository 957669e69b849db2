#include "vpal/precond.hpp"

#include <cmath>
#include <stdexcept>

namespace vpal {

void PrecondPolicy::validate() const {
  if (!(epsilon > 0.0 && epsilon < 1.0))
    throw std::invalid_argument("precondition.epsilon must lie in (0, 1)");
  if (!(cg_tol > 0.0 && cg_tol < 1.0))
    throw std::invalid_argument("precondition.cg_tol must lie in (0, 1)");
  if (cg_max < 1) throw std::invalid_argument("precondition.cg_max must be at least 1");
  if (window < 0) throw std::invalid_argument("precondition.window must be non-negative");
}

bool PrecondPolicy::active(int outer_iteration) const {
  return enabled && (window == 0 || outer_iteration < window);
}

ApproxHessian::ApproxHessian(const GridSignal& x, const GridSignal& z, const ProblemSpec& spec,
                             double lambda, double epsilon)
    : LinearOperator(spec.A->in_shape(), spec.A->in_shape()),
      spec_(&spec),
      inv_s2_(1.0 / (spec.sigma * spec.sigma)) {
  if (!spec.A->is_linear()) jac_ = spec.A->linearize(x);
  GridSignal v = spec.D->apply(x);
  axpy(1.0, z, v);
  weights_ = smoothed_jacobian_diag(v, spec.shrinkage(lambda, epsilon));
  const double l2 = lambda * lambda;
  for (double& w : weights_.data) w = l2 * (1.0 - w);
}

GridSignal ApproxHessian::apply(const GridSignal& v) const {
  check_input(v);
  const LinearOperator& J = jac_ ? *jac_ : *spec_->linear_A();
  GridSignal out = J.adjoint(J.apply(v));
  scale(out, inv_s2_);
  GridSignal Dv = spec_->D->apply(v);
  for (std::size_t i = 0; i < Dv.size(); ++i) Dv[i] *= weights_[i];
  axpy(1.0, spec_->D->adjoint(Dv), out);
  return out;
}

GridSignal htilde_apply(const GridSignal& v, const GridSignal& x, const GridSignal& z,
                        const ProblemSpec& spec, double lambda, double epsilon) {
  return ApproxHessian(x, z, spec, lambda, epsilon).apply(v);
}

bool conjugate_gradient(const LinearOperator& H, const GridSignal& rhs, GridSignal& x, double tol,
                        int max_iters, int& iterations) {
  iterations = 0;
  GridSignal r = rhs - H.apply(x);
  GridSignal p = r;
  double rr = dot(r, r);
  const double stop = tol * norm2(rhs);
  while (std::sqrt(rr) > stop && iterations < max_iters) {
    const GridSignal Hp = H.apply(p);
    const double pHp = dot(p, Hp);
    if (!(pHp > 0.0) || !std::isfinite(pHp)) return false;
    const double a = rr / pHp;
    axpy(a, p, x);
    axpy(-a, Hp, r);
    const double rr_new = dot(r, r);
    if (!std::isfinite(rr_new)) return false;
    const double beta = rr_new / rr;
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = r[i] + beta * p[i];
    rr = rr_new;
    ++iterations;
  }
  return x.all_finite();
}

PrecondResult precond_solve(const GridSignal& g, const GridSignal& x, const GridSignal& z,
                            const ProblemSpec& spec, double lambda, const PrecondPolicy& policy) {
  policy.validate();
  PrecondResult out;
  out.s = zeros_like(g);
  if (norm2(g) == 0.0) return out;

  const ApproxHessian H(x, z, spec, lambda, policy.epsilon);
  const GridSignal rhs = -g;
  const bool ok = conjugate_gradient(H, rhs, out.s, policy.cg_tol, policy.cg_max, out.cg_iters);
  if (!ok || !(dot(g, out.s) < 0.0)) {
    out.s = rhs;
    out.fell_back = true;
  }
  return out;
}

}  // namespace vpal

#include "vpal/reference.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>

namespace vpal {

namespace {

const LinearOperator& require_linear(const ProblemSpec& spec, const char* who) {
  const LinearOperator* A = spec.linear_A();
  if (!A) throw std::invalid_argument(std::string(who) + ": A must be linear");
  return *A;
}

GridSignal from_eigen(const Eigen::VectorXd& v, const Shape& shape) {
  return GridSignal(shape, std::vector<double>(v.data(), v.data() + v.size()));
}

}  // namespace

GridSignal tikhonov_solve(const ProblemSpec& spec, double lambda) {
  spec.validate();
  const LinearOperator& A = require_linear(spec, "tikhonov_solve");
  if (A.in_size() > 2048) throw std::invalid_argument("tikhonov_solve: n exceeds 2048");
  const Eigen::MatrixXd Am = to_dense(A);
  const Eigen::MatrixXd Dm = to_dense(*spec.D);
  const double w = spec.sigma * spec.sigma * lambda * lambda;
  const Eigen::MatrixXd M = Am.transpose() * Am + w * Dm.transpose() * Dm;
  const Eigen::VectorXd rhs = Am.transpose() * as_eigen(spec.b);
  Eigen::LDLT<Eigen::MatrixXd> ldlt(M);
  const double scale = std::max(M.diagonal().cwiseAbs().maxCoeff(), 1e-300);
  if (ldlt.info() != Eigen::Success || ldlt.vectorD().cwiseAbs().minCoeff() <= 1e-13 * scale)
    throw SingularSystem("tikhonov_solve: normal matrix is singular");
  return from_eigen(ldlt.solve(rhs), A.in_shape());
}

GridSignal AdmmResult::multiplier(double mu) const {
  GridSignal w = u;
  scale(w, rho / mu);
  return w;
}

AdmmResult admm_reference(const ProblemSpec& spec, double rho, int iters) {
  spec.validate();
  const LinearOperator& A = require_linear(spec, "admm_reference");
  if (A.in_size() > 512) throw std::invalid_argument("admm_reference: n exceeds 512");
  if (!(rho > 0.0)) throw std::invalid_argument("admm_reference: rho must be positive");
  const Eigen::MatrixXd Am = to_dense(A);
  const Eigen::MatrixXd Dm = to_dense(*spec.D);
  const double is2 = 1.0 / (spec.sigma * spec.sigma);
  const Eigen::MatrixXd M = is2 * Am.transpose() * Am + rho * Dm.transpose() * Dm;
  Eigen::LLT<Eigen::MatrixXd> llt(M);
  if (llt.info() != Eigen::Success) throw SingularSystem("admm_reference: factorization failed");
  const Eigen::VectorXd Atb = is2 * Am.transpose() * as_eigen(spec.b);

  const double tau = spec.mu / rho;
  Eigen::VectorXd x = Eigen::VectorXd::Zero(Am.cols());
  Eigen::VectorXd y = Eigen::VectorXd::Zero(Dm.rows());
  Eigen::VectorXd u = Eigen::VectorXd::Zero(Dm.rows());
  for (int it = 0; it < iters; ++it) {
    x = llt.solve(Atb + rho * Dm.transpose() * (y - u));
    const Eigen::VectorXd Dx = Dm * x;
    for (Eigen::Index i = 0; i < y.size(); ++i) y(i) = soft_threshold(Dx(i) + u(i), tau);
    u += Dx - y;
  }
  AdmmResult out;
  out.x = from_eigen(x, A.in_shape());
  out.y = from_eigen(y, spec.D->out_shape());
  out.u = from_eigen(u, spec.D->out_shape());
  out.rho = rho;
  return out;
}

double kkt_residual(const ProblemSpec& spec, const GridSignal& x, const GridSignal& w,
                    double active_tol) {
  spec.validate();
  const LinearOperator& A = require_linear(spec, "kkt_residual");
  GridSignal st = A.adjoint(A.apply(x) - spec.b);
  scale(st, 1.0 / (spec.sigma * spec.sigma));
  axpy(spec.mu, spec.D->adjoint(w), st);
  double worst = 0.0;
  for (double v : st.data) worst = std::max(worst, std::abs(v));
  const GridSignal Dx = spec.D->apply(x);
  require_same_size(Dx, w, "kkt_residual");
  for (std::size_t i = 0; i < Dx.size(); ++i) {
    if (std::abs(Dx[i]) > active_tol) {
      worst = std::max(worst, spec.mu * std::abs(w[i] - (Dx[i] > 0.0 ? 1.0 : -1.0)));
    } else {
      worst = std::max(worst, spec.mu * std::max(std::abs(w[i]) - 1.0, 0.0));
    }
  }
  return worst;
}

}  // namespace vpal

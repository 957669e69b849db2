#include <doctest.h>

#include <Eigen/Eigenvalues>

#include "helpers.hpp"
#include "vpal/imaging_ops.hpp"
#include "vpal/precond.hpp"
#include "vpal/reference.hpp"
#include "vpal/solver.hpp"
#include "vpal/stft_phase.hpp"

using namespace vpal;
using testing::vec;

namespace {

ProblemSpec scalar_problem(double mu) {
  ProblemSpec s;
  s.A = std::make_shared<DenseOperator>(Eigen::MatrixXd::Ones(1, 1));
  s.D = std::make_shared<DenseOperator>(Eigen::MatrixXd::Ones(1, 1));
  s.b = vec({1});
  s.mu = mu;
  return s;
}

ProblemSpec dense_problem(int m, int n, double mu, std::mt19937_64& rng) {
  ProblemSpec s;
  s.A = std::make_shared<DenseOperator>(testing::random_matrix(m, n, rng) / std::sqrt(double(m)));
  s.D = make_finite_difference({std::size_t(n)});
  s.b = testing::random_signal({std::size_t(m)}, rng);
  s.mu = mu;
  return s;
}

}  // namespace

TEST_CASE("scalar approximate Hessian") {
  const ProblemSpec s = scalar_problem(1.0);
  // zeta = 1: Dx + z = 0.5 sits in the dead zone, 10 in the outer band
  CHECK(htilde_apply(vec({1}), vec({0.5}), vec({0}), s, 1.0, 0.5)[0] == 2.0);
  CHECK(htilde_apply(vec({1}), vec({10}), vec({0}), s, 1.0, 0.5)[0] == 1.5);
  CHECK(htilde_apply(vec({1}), vec({0}), vec({1.2}), s, 1.0, 0.5)[0] == doctest::Approx(1.8));
}

TEST_CASE("dense approximate Hessian is symmetric positive definite") {
  std::mt19937_64 rng(41);
  // 8 x 16 A has a kernel, but not one containing the constants
  const ProblemSpec s = dense_problem(8, 16, 0.3, rng);
  for (double eps : {0.1, 0.5, 0.99}) {
    const GridSignal x = testing::random_signal({16}, rng, 0.5);
    const GridSignal z = testing::random_signal({16}, rng, 0.2);
    const Eigen::MatrixXd H = to_dense(ApproxHessian(x, z, s, 0.9, eps));
    CHECK((H - H.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * H.cwiseAbs().maxCoeff());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H);
    CHECK(es.eigenvalues().minCoeff() > 0.0);

    // explicit formula assembled from dense pieces
    const Eigen::MatrixXd A = to_dense(*s.linear_A()), D = to_dense(*s.D);
    const GridSignal j = smoothed_jacobian_diag(s.D->apply(x) + z, s.shrinkage(0.9, eps));
    const Eigen::VectorXd w = 0.81 * (Eigen::VectorXd::Ones(16) - as_eigen(j));
    const Eigen::MatrixXd want = A.transpose() * A + D.transpose() * w.asDiagonal() * D;
    CHECK((H - want).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("preconditioned direction") {
  std::mt19937_64 rng(42);
  PrecondPolicy policy;
  policy.enabled = true;

  const ProblemSpec s = dense_problem(20, 16, 0.2, rng);
  const GridSignal x = testing::random_signal({16}, rng), z = testing::random_signal({16}, rng);
  const PrecondResult zero = precond_solve(GridSignal({16}), x, z, s, 1.0, policy);
  CHECK(norm2(zero.s) == 0.0);
  CHECK(zero.cg_iters == 0);

  ProblemSpec ident;
  ident.A = std::make_shared<IdentityOperator>(Shape{16});
  ident.D = std::make_shared<ZeroOperator>(Shape{16}, Shape{16});
  ident.b = GridSignal({16});
  const GridSignal g = testing::random_signal({16}, rng);
  const PrecondResult id = precond_solve(g, x, z, ident, 3.0, policy);
  CHECK(norm2(id.s + g) < 1e-12);

  policy.cg_tol = 1e-13;
  policy.cg_max = 100;
  const PrecondResult r = precond_solve(g, x, z, s, 1.0, policy);
  const Eigen::MatrixXd H = to_dense(ApproxHessian(x, z, s, 1.0, policy.epsilon));
  const Eigen::VectorXd direct = H.ldlt().solve(-as_eigen(g));
  CHECK((as_eigen(r.s) - direct).norm() < 1e-8 * direct.norm());
  CHECK_FALSE(r.fell_back);

  for (int k = 0; k < 20; ++k) {
    const GridSignal gk = testing::random_signal({16}, rng);
    CHECK(dot(gk, precond_solve(gk, x, z, s, 1.0, PrecondPolicy{}).s) < 0.0);
  }
}

TEST_CASE("conjugate gradients on a dense SPD system") {
  std::mt19937_64 rng(43);
  const Eigen::MatrixXd B = testing::random_matrix(30, 30, rng);
  const DenseOperator H(B.transpose() * B + Eigen::MatrixXd::Identity(30, 30));
  const GridSignal rhs = testing::random_signal({30}, rng);
  GridSignal x({30});
  int iters = 0;
  CHECK(conjugate_gradient(H, rhs, x, 1e-12, 200, iters));
  CHECK(iters > 0);
  CHECK(norm2(H.apply(x) - rhs) <= 1e-12 * norm2(rhs) * 1.0001);

  const DenseOperator negative(-Eigen::MatrixXd::Identity(3, 3));
  GridSignal y({3});
  CHECK_FALSE(conjugate_gradient(negative, vec({1, 2, 3}), y, 1e-10, 10, iters));
}

TEST_CASE("policy") {
  PrecondPolicy p;
  CHECK_FALSE(p.active(0));
  p.enabled = true;
  CHECK(p.active(1000));
  p.window = 20;
  CHECK(p.active(19));
  CHECK_FALSE(p.active(20));
  p.cg_tol = 1.0;
  CHECK_THROWS(p.validate());
}

TEST_CASE("one preconditioned unit step solves the quadratic problem") {
  std::mt19937_64 rng(44);
  const ProblemSpec s = dense_problem(40, 32, 0.0, rng);
  SolverConfig c;
  c.lambda = 0.6;
  c.step = StepStrategy::parse("fixed:1");
  c.outer_max = 1;
  c.precond.enabled = true;
  c.precond.cg_tol = 1e-14;
  c.precond.cg_max = 200;
  const GridSignal x1 = run(s, c).x;
  CHECK(norm2(x1 - tikhonov_solve(s, 0.6)) <= 1e-6);

  // with the linearized rule the accepted step is exactly 1
  c.step = StepStrategy::parse("lin");
  CHECK(run(s, c).records.front().alpha == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("Gauss-Newton Hessian of the STFT model") {
  std::mt19937_64 rng(45);
  ProblemSpec s;
  s.A = std::make_shared<StftMagnitudeOperator>(make_window(WindowKind::Exponential, 12), 2);
  s.D = amp_phase_difference(12);
  GridSignal x = testing::random_signal({24}, rng);
  s.b = s.A->apply(testing::random_signal({24}, rng));
  s.mu = 0.05;
  const Eigen::MatrixXd H = to_dense(ApproxHessian(x, GridSignal({24}), s, 0.5, 0.99));
  CHECK((H - H.transpose()).cwiseAbs().maxCoeff() <= 1e-10 * H.cwiseAbs().maxCoeff());
  const Eigen::MatrixXd J = jacobian_to_dense(*s.A, x);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H);
  CHECK(es.eigenvalues().minCoeff() > -1e-9 * es.eigenvalues().maxCoeff());
  CHECK(J.rows() == Eigen::Index(s.A->out_size()));
}

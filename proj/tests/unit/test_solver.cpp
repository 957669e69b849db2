#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "vpal/imaging_ops.hpp"
#include "vpal/problem.hpp"
#include "vpal/reference.hpp"
#include "vpal/solver.hpp"

using namespace vpal;
using testing::vec;

namespace {

ProblemSpec scalar_problem(double b, double mu) {
  ProblemSpec s;
  s.A = std::make_shared<DenseOperator>(Eigen::MatrixXd::Ones(1, 1));
  s.D = std::make_shared<DenseOperator>(Eigen::MatrixXd::Ones(1, 1));
  s.b = vec({b});
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

SolverConfig config(double lambda, const std::string& step, int outer) {
  SolverConfig c;
  c.lambda = lambda;
  c.step = StepStrategy::parse(step);
  c.outer_max = outer;
  return c;
}

}  // namespace

TEST_CASE("f_joint examples") {
  ProblemSpec s = scalar_problem(0.0, 1.0);
  CHECK(f_joint(vec({0}), vec({0}), vec({0}), s, 1.0) == 0.0);
  s.b = vec({2});
  CHECK(f_joint(vec({0}), vec({1}), vec({0}), s, 1.0) == 3.5);
  CHECK_THROWS_AS(f_joint(vec({0}), vec({1, 2}), vec({0}), s, 1.0), ShapeError);
}

TEST_CASE("f_proj examples") {
  const ProblemSpec s = scalar_problem(2.0, 2.0);
  CHECK(f_proj(vec({1}), vec({0}), s, 1.0) == 1.0);
  CHECK(f_joint(vec({1}), vec({0}), vec({0}), s, 1.0) == 1.0);

  std::mt19937_64 rng(21);
  ProblemSpec q = dense_problem(12, 8, 0.0, rng);
  q.sigma = 0.7;
  const GridSignal x = testing::random_signal({8}, rng), z = testing::random_signal({8}, rng);
  const GridSignal r = q.A->apply(x) - q.b;
  CHECK(f_proj(x, z, q, 1.7) == doctest::Approx(0.5 * dot(r, r) / 0.49).epsilon(1e-14));
  CHECK(lasso_objective(x, q) == doctest::Approx(0.5 * dot(r, r) / 0.49).epsilon(1e-14));
}

TEST_CASE("projection identity and minimality on random instances") {
  std::mt19937_64 rng(22);
  for (int k = 0; k < 50; ++k) {
    ProblemSpec s = dense_problem(9, 7, 0.05 * k, rng);
    const double lambda = 0.3 + 0.05 * k;
    const GridSignal x = testing::random_signal({7}, rng), z = testing::random_signal({7}, rng);
    const GridSignal ystar = y_of_x(x, z, *s.D, s.shrinkage(lambda));
    const double fp = f_proj(x, z, s, lambda);
    CHECK(fp == f_joint(x, ystar, z, s, lambda));
    for (int t = 0; t < 100; ++t) {
      const GridSignal y = ystar + testing::random_signal({7}, rng, std::pow(10.0, -(t % 8)));
      CHECK(fp <= f_joint(x, y, z, s, lambda) + 1e-12);
    }
  }
}

TEST_CASE("gradient examples") {
  const ProblemSpec s = scalar_problem(2.0, 0.0);
  CHECK(gradient(vec({1}), vec({1}), vec({0}), s, 1.0).data == std::vector<double>{-1.0});
  const ProblemSpec big = scalar_problem(2.0, 100.0);
  const GridSignal y = y_of_x(vec({1}), vec({0}), *big.D, big.shrinkage(1.0));
  CHECK(y[0] == 0.0);
  CHECK(gradient(vec({1}), y, vec({0}), big, 1.0)[0] == 0.0);
}

TEST_CASE("gradient matches central differences of f_proj") {
  std::mt19937_64 rng(23);
  ProblemSpec s;
  s.A = std::make_shared<ConvolutionOperator>(testing::random_signal({2, 3}, rng), 7, 8);
  s.D = make_finite_difference({7, 8});
  s.b = testing::random_signal(s.A->out_shape(), rng);
  s.mu = 0.3;
  s.sigma = 1.4;
  const double lambda = 0.8;
  const double zeta = s.mu / (lambda * lambda);
  int points = 0;
  while (points < 10) {
    const GridSignal x = testing::random_signal({7, 8}, rng);
    const GridSignal z = testing::random_signal(s.D->out_shape(), rng, 0.3);
    const GridSignal v = s.D->apply(x) + z;
    if (std::any_of(v.data.begin(), v.data.end(),
                    [&](double e) { return std::abs(std::abs(e) - zeta) < 1e-3; }))
      continue;
    ++points;
    const GridSignal g = gradient(x, y_of_x(x, z, *s.D, s.shrinkage(lambda)), z, s, lambda);
    GridSignal fd = zeros_like(x);
    for (std::size_t i = 0; i < x.size(); ++i) {
      GridSignal xp = x, xm = x;
      xp[i] += 1e-6;
      xm[i] -= 1e-6;
      fd[i] = (f_proj(xp, z, s, lambda) - f_proj(xm, z, s, lambda)) / 2e-6;
    }
    CHECK(norm2(g - fd) / norm2(fd) < 1e-5);
  }
}

TEST_CASE("dual update") {
  CHECK(norm2(dual_update(vec({0, 0}), vec({1, 2}), vec({1, 2}))) == 0.0);
  CHECK(dual_update(vec({0, 0}), vec({1, -1}), vec({0.5, -0.5})).data ==
        std::vector<double>{0.5, -0.5});
  GridSignal z = vec({0, 0, 0});
  const GridSignal Dx = vec({1, 2, 3}), y = vec({0.5, 0.25, 4});
  for (int k = 1; k <= 10; ++k) {
    z = dual_update(z, Dx, y);
    CHECK(z.data == (double(k) * (Dx - y)).data);
  }
}

TEST_CASE("step strategy parsing") {
  CHECK(StepStrategy::parse("lin").rule == StepRule::Linearized);
  CHECK(StepStrategy::parse("opt").rule == StepRule::Optimal);
  CHECK(StepStrategy::parse("poly").rule == StepRule::PhasePoly);
  const StepStrategy f = StepStrategy::parse("fixed:0.25");
  CHECK(f.rule == StepRule::Fixed);
  CHECK(f.fixed_alpha == 0.25);
  CHECK(StepStrategy::parse(f.to_string()).fixed_alpha == 0.25);
  for (const char* bad : {"fixed:", "fixed:-1", "fixed:abc", "fixed:1x", "newton", ""})
    CHECK_THROWS_AS(StepStrategy::parse(bad), std::invalid_argument);
}

TEST_CASE("solver config validation") {
  SolverConfig c;
  CHECK_NOTHROW(c.validate());
  c.lambda = 0.0;
  CHECK_THROWS(c.validate());
  c = SolverConfig{};
  c.outer_max = 0;
  CHECK_THROWS(c.validate());
  c = SolverConfig{};
  c.precond.enabled = true;
  c.precond.epsilon = 1.0;
  CHECK_THROWS(c.validate());
}

TEST_CASE("mu = 0 converges to the least-squares solution") {
  // the shrinkage is the identity, so the augmented term vanishes
  std::mt19937_64 rng(24);
  const ProblemSpec s = dense_problem(20, 16, 0.0, rng);
  const RunReport r = run(s, config(0.9, "lin", 3000));
  const Eigen::MatrixXd& M = dynamic_cast<const DenseOperator&>(*s.A).matrix();
  const Eigen::VectorXd ls =
      M.colPivHouseholderQr().solve(Eigen::Map<const Eigen::VectorXd>(s.b.data.data(), 20));
  double err = 0.0;
  for (Eigen::Index i = 0; i < 16; ++i) err += (r.x[std::size_t(i)] - ls[i]) * (r.x[std::size_t(i)] - ls[i]);
  CHECK(std::sqrt(err) < 1e-6);
}

TEST_CASE("noiseless data with tiny mu recovers the truth") {
  std::mt19937_64 rng(25);
  ProblemSpec s = dense_problem(48, 32, 1e-8, rng);
  GridSignal truth({32});
  for (std::size_t i = 0; i < 32; ++i) truth[i] = i < 10 ? 1.0 : (i < 22 ? -0.5 : 2.0);
  s.b = s.A->apply(truth);
  RunOptions opt;
  opt.truth = truth;
  const RunReport r = run(s, config(1.0, "lin", 2000), opt);
  CHECK(r.final_rre() < 1e-3);
}

TEST_CASE("scalar problem drives the gradient to zero") {
  const ProblemSpec s = scalar_problem(2.0, 0.0);
  const RunReport r = run(s, config(1.0, "lin", 100));
  const GridSignal y = y_of_x(r.x, r.z, *s.D, s.shrinkage(1.0));
  CHECK(std::abs(gradient(r.x, y, r.z, s, 1.0)[0]) < 1e-8);
  CHECK(r.x[0] == doctest::Approx(2.0));
}

TEST_CASE("run report bookkeeping") {
  std::mt19937_64 rng(26);
  const ProblemSpec s = dense_problem(20, 16, 0.05, rng);
  SolverConfig c = config(1.0, "lin", 7);
  c.inner_max = 3;
  RunOptions opt;
  opt.truth = testing::random_signal({16}, rng);
  int observed = 0;
  opt.observer = [&](const IterationRecord& rec, const GridSignal& x) {
    ++observed;
    CHECK(rec.iter == observed);
    CHECK(x.size() == 16);
  };
  const RunReport r = run(s, c, opt);
  CHECK(r.records.size() == 21);
  CHECK(observed == 21);
  CHECK(r.outer_iterations == 7);
  for (std::size_t i = 1; i < r.records.size(); ++i) {
    CHECK(r.records[i].seconds >= r.records[i - 1].seconds);
    CHECK(r.records[i].outer == int(i / 3));
    CHECK(r.records[i].rre.has_value());
    CHECK(r.records[i].cg_iters == 0);
  }
  std::ostringstream csv;
  r.write_csv(csv);
  CHECK(csv.str().rfind("iter,f,rre,alpha,seconds,cg_iters,objective\n", 0) == 0);
  std::ostringstream no_time;
  r.write_csv(no_time, false);
  std::string second_line = no_time.str().substr(no_time.str().find('\n') + 1);
  second_line = second_line.substr(0, second_line.find('\n'));
  CHECK(second_line.find(",,") != std::string::npos);

  CHECK(r.first_reaching(1e9) == 1);
  CHECK_FALSE(r.first_reaching(-1.0).has_value());
}

TEST_CASE("tolerance stops early") {
  std::mt19937_64 rng(27);
  const ProblemSpec s = dense_problem(20, 16, 0.05, rng);
  SolverConfig c = config(1.0, "lin", 5000);
  c.tol = 1e-10;
  const RunReport r = run(s, c);
  CHECK(r.converged);
  CHECK(r.outer_iterations < 5000);
  CHECK(norm2(s.D->apply(r.x) - r.y) <= 1e-10 * (1.0 + norm2(s.D->apply(r.x))));
}

TEST_CASE("divergence aborts the run") {
  std::mt19937_64 rng(28);
  const ProblemSpec s = dense_problem(20, 16, 0.05, rng);
  CHECK_THROWS_AS(run(s, config(1.0, "fixed:1e200", 10)), SolverAbort);
}

TEST_CASE("optimal step never increases f_proj") {
  std::mt19937_64 rng(29);
  const ProblemSpec s = dense_problem(30, 24, 0.2, rng);
  for (bool pre : {false, true}) {
    SolverConfig c = config(0.7, "opt", 300);
    c.inner_max = 2;
    c.precond.enabled = pre;
    for (const IterationRecord& rec : run(s, c).records)
      CHECK(rec.f <= rec.f_start + 1e-10 * std::max(1.0, std::abs(rec.f_start)));
  }
}

TEST_CASE("preconditioning window") {
  std::mt19937_64 rng(30);
  const ProblemSpec s = dense_problem(30, 24, 0.2, rng);
  SolverConfig c = config(0.7, "lin", 12);
  c.precond.enabled = true;
  c.precond.window = 4;
  const RunReport r = run(s, c);
  for (const IterationRecord& rec : r.records) {
    if (rec.outer < 4)
      CHECK(rec.cg_iters > 0);
    else
      CHECK(rec.cg_iters == 0);
  }
}

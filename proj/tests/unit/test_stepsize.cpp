#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "vpal/imaging_ops.hpp"
#include "vpal/problem.hpp"
#include "vpal/stepsize.hpp"

using namespace vpal;
using testing::vec;

namespace {

ProblemSpec dense_problem(int m, int n, double mu, std::mt19937_64& rng) {
  ProblemSpec s;
  s.A = std::make_shared<DenseOperator>(testing::random_matrix(m, n, rng) / std::sqrt(double(m)));
  s.D = make_finite_difference({std::size_t(n)});
  s.b = testing::random_signal({std::size_t(m)}, rng);
  s.mu = mu;
  return s;
}

std::vector<StepSample> samples(std::initializer_list<double> alphas, auto f) {
  std::vector<StepSample> out;
  for (double a : alphas) out.push_back({a, f(a)});
  return out;
}

bool convex_on_grid(const Poly4& p, double a_max) {
  for (int i = 0; i <= 1000; ++i)
    if (!(p.d2(a_max * i / 1000.0) > 0.0)) return false;
  return true;
}

}  // namespace

TEST_CASE("linearized step on the scalar quadratic") {
  ProblemSpec s;
  s.A = std::make_shared<DenseOperator>(Eigen::MatrixXd::Ones(1, 1));
  s.D = std::make_shared<DenseOperator>(Eigen::MatrixXd::Ones(1, 1));
  s.b = vec({2});
  const double a = alpha_linearized(vec({2}), vec({0}), vec({0}), vec({0}), s, 1.0);
  CHECK(a == doctest::Approx(0.5));
  CHECK(0.0 + a * 2.0 == doctest::Approx(1.0));
}

TEST_CASE("linearized step rejects directions in ker(A) and ker(D)") {
  ProblemSpec s;
  Eigen::MatrixXd A(1, 2);
  A << 1, -1;
  s.A = std::make_shared<DenseOperator>(A);
  s.D = make_finite_difference({2});
  s.b = vec({1});
  CHECK_THROWS_AS(alpha_linearized(vec({1, 1}), vec({0, 0}), vec({0, 0}), vec({0, 0}), s, 1.0),
                  DegenerateDirection);
}

TEST_CASE("linearized step minimises the frozen-y objective") {
  std::mt19937_64 rng(31);
  for (double mu : {0.0, 0.3}) {
    const ProblemSpec s = dense_problem(20, 12, mu, rng);
    const double lambda = 0.8;
    const GridSignal x = testing::random_signal({12}, rng), z = testing::random_signal({12}, rng);
    const GridSignal y = y_of_x(x, z, *s.D, s.shrinkage(lambda));
    const GridSignal sdir = -gradient(x, y, z, s, lambda);
    const double a = alpha_linearized(sdir, x, y, z, s, lambda);
    REQUIRE(a > 0.0);
    auto phi = [&](double t) {
      GridSignal xt = x;
      axpy(t, sdir, xt);
      return f_joint(xt, y, z, s, lambda);
    };
    for (int i = 0; i <= 400; ++i) CHECK(phi(a) <= phi(4.0 * a * i / 400.0) + 1e-12);
    // zero directional derivative at the step
    GridSignal xa = x;
    axpy(a, sdir, xa);
    CHECK(std::abs(dot(gradient(xa, y, z, s, lambda), sdir)) <= 1e-10 * dot(sdir, sdir));
  }
}

TEST_CASE("optimal step") {
  std::mt19937_64 rng(32);
  SUBCASE("exact line minimum when mu = 0") {
    const ProblemSpec s = dense_problem(20, 12, 0.0, rng);
    const GridSignal x = testing::random_signal({12}, rng), z = testing::random_signal({12}, rng);
    const GridSignal y = y_of_x(x, z, *s.D, s.shrinkage(1.0));
    const GridSignal d = -gradient(x, y, z, s, 1.0);
    const LineSearchResult r = alpha_optimal(d, x, z, s, 1.0);
    // y tracks Dx + z exactly, so only the data term varies along the line,
    // while the linearized step also pays lambda^2 ||Dd||^2
    const GridSignal Ad = s.A->apply(d), res = s.A->apply(x) - s.b, Dd = s.D->apply(d);
    CHECK(r.alpha == doctest::Approx(-dot(Ad, res) / dot(Ad, Ad)).epsilon(1e-6));
    CHECK(alpha_linearized(d, x, y, z, s, 1.0) ==
          doctest::Approx(-dot(Ad, res) / (dot(Ad, Ad) + dot(Dd, Dd))).epsilon(1e-12));
    CHECK_FALSE(r.fallback);
  }
  SUBCASE("beats a fine grid across shrinkage kinks") {
    const ProblemSpec s = dense_problem(20, 12, 1.5, rng);
    const GridSignal x = testing::random_signal({12}, rng), z = testing::random_signal({12}, rng);
    const GridSignal y = y_of_x(x, z, *s.D, s.shrinkage(0.5));
    const GridSignal d = -gradient(x, y, z, s, 0.5);
    const LineSearchResult r = alpha_optimal(d, x, z, s, 0.5);
    const ProjectedLine line(x, d, z, s, 0.5);
    CHECK(line(r.alpha) <= line(0.0));
    double best = line(0.0);
    const double top = 4.0 * r.alpha;
    for (int i = 1; i <= 10000; ++i) best = std::min(best, line(top * i / 10000.0));
    const double slope = std::abs(line(r.alpha * 1.001) - line(r.alpha)) / (r.alpha * 0.001);
    CHECK(line(r.alpha) <= best + slope * top / 10000.0 + 1e-12);
  }
}

TEST_CASE("scalar minimisation") {
  const LineSearchResult r = minimize_along([](double a) { return (a - 3) * (a - 3); }, 9.0, 1.0);
  CHECK(r.alpha == doctest::Approx(3.0).epsilon(1e-7));
  const LineSearchResult up = minimize_along([](double a) { return a; }, 0.0, 1.0);
  CHECK(up.fallback);
  CHECK(up.alpha == kDefaultFallbackStep);
  const LineSearchResult capped = minimize_along([](double a) { return -a; }, 0.0, 1.0);
  CHECK(capped.alpha == 1024.0);
  CHECK_FALSE(capped.fallback);
}

TEST_CASE("quartic fits") {
  const Poly4 q = fit_poly4(samples({0, 0.5, 1, 1.5, 2}, [](double a) { return (a - 1) * (a - 1); }));
  CHECK(q.a[0] == doctest::Approx(1));
  CHECK(q.a[1] == doctest::Approx(-2));
  CHECK(q.a[2] == doctest::Approx(1));
  CHECK(std::abs(q.a[3]) < 1e-10);
  CHECK(std::abs(q.a[4]) < 1e-10);

  const Poly4 c = fit_poly4(samples({0, 1, 2, 3, 4, 5}, [](double) { return -4.0; }));
  CHECK(c.a[0] == doctest::Approx(-4.0));
  for (int k = 1; k < 5; ++k) CHECK(std::abs(c.a[std::size_t(k)]) < 1e-10);

  const Poly4 known{{0.5, -3.0, 1.25, 0.75, -0.2}};
  const Poly4 back = fit_poly4(samples({0, 0.001, 0.005, 0.01, 0.1}, [&](double a) { return known(a); }));
  // the sample grid spans two decades: the column-scaled Vandermonde matrix
  // has condition number ~1.4e5, and the quartic term contributes ~1e-5 of
  // the sample values, so only ~1e-6 relative accuracy is attainable there
  for (std::size_t k = 0; k < 5; ++k) CHECK(back.a[k] == doctest::Approx(known.a[k]).epsilon(1e-6));
  for (double a : {0.0, 0.001, 0.005, 0.01, 0.1}) CHECK(std::abs(back(a) - known(a)) < 1e-13);

  CHECK_THROWS_AS(fit_poly4(samples({0, 1, 1, 2, 3}, [](double a) { return a; })), FitError);
  CHECK_THROWS_AS(fit_poly4(samples({0, 1, 2, 3}, [](double a) { return a; })), FitError);
}

TEST_CASE("first positive minimum") {
  CHECK(*first_positive_min(Poly4{{1, -2, 1, 0, 0}}) == doctest::Approx(1.0));
  // (a^2 - 4a + 3)^2
  CHECK(*first_positive_min(Poly4{{9, -24, 22, -8, 1}}) == doctest::Approx(1.0));
  CHECK_FALSE(first_positive_min(Poly4{{0, 0, -1, 0, 0}}).has_value());
  // critical points at -1 (min) and 2 (max) only
  CHECK_FALSE(first_positive_min(Poly4{{0, 2, 0.5, -1.0 / 3.0, 0}}).has_value());
  // p' = (a - 0.2)(a - 0.7)(a - 1.5): minima at 0.2 and 1.5
  const double r1 = 0.2, r2 = 0.7, r3 = 1.5;
  const Poly4 w{{0, -r1 * r2 * r3, (r1 * r2 + r1 * r3 + r2 * r3) / 2, -(r1 + r2 + r3) / 3, 0.25}};
  CHECK(*first_positive_min(w) == doctest::Approx(0.2));
}

TEST_CASE("convex constrained fit") {
  const auto quartic = samples({0, 0.25, 0.5, 0.75, 1}, [](double a) { return a * a * a * a + a * a; });
  const Poly4 p = fit_poly4_convex(quartic);
  CHECK(p.strictly_convex());
  for (const auto& s : quartic) CHECK(std::abs(p(s.alpha) - s.value) < 1e-8);
  CHECK(convex_on_grid(p, 1.0));

  const auto concave = samples({0, 0.001, 0.005, 0.01, 0.1, 1}, [](double a) { return -a * a; });
  CHECK_FALSE(fit_poly4(concave).strictly_convex());
  const Poly4 c = fit_poly4_convex(concave);
  CHECK(c.strictly_convex());
  CHECK(convex_on_grid(c, 1.0));

  const auto wiggle = samples({0, 0.2, 0.4, 0.6, 0.8, 1.0}, [](double a) { return std::sin(9 * a); });
  CHECK(convex_on_grid(fit_poly4_convex(wiggle), 1.0));
}

TEST_CASE("polynomial step search") {
  auto step = [](auto f) {
    PhaseStepState st;
    return phase_step([&](double a, double) { return f(a); }, 0.1, 1.0, st);
  };
  const PhaseStepResult quad = step([](double a) { return (a - 0.01) * (a - 0.01); });
  CHECK(quad.stage == PhaseStage::Small);
  CHECK(quad.alpha == doctest::Approx(0.01));
  CHECK(quad.sampler_calls == 5);

  const PhaseStepResult up = step([](double a) { return 2.0 * a - 0.5 * a * a; });
  CHECK(up.stage == PhaseStage::Fallback);
  CHECK(up.alpha == 0.001);
  CHECK(up.sampler_calls == 6);

  const PhaseStepResult far = step([](double a) {
    const double u = (a - 0.8) / 0.32;
    return -std::exp(-0.5 * u * u);
  });
  CHECK(far.stage == PhaseStage::Large);
  CHECK(std::abs(far.alpha - 0.8) < 0.05);

  const PhaseStepResult bad = step([](double a) { return a > 0.05 ? NAN : a; });
  CHECK(bad.stage == PhaseStage::Fallback);
  CHECK(bad.sampler_calls <= 6);

  CHECK_THROWS(step([](double) -> double { throw std::runtime_error("sampler"); }));
}

TEST_CASE("regulariser switch") {
  PhaseStepState st;
  std::vector<double> seen;
  for (double misfit : {3.0, 2.0, 2.5, 1.0, 4.0}) {
    phase_step(
        [&](double a, double mu_tilde) {
          if (a == 0.0) seen.push_back(mu_tilde);
          return (a - 0.01) * (a - 0.01);
        },
        0.7, misfit, st);
  }
  CHECK(seen == std::vector<double>{0, 0, 0.7, 0.7, 0.7});
}

#include "vpal/acceptance.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <iomanip>
#include <limits>
#include <numbers>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>

#include "vpal/experiments.hpp"
#include "vpal/imaging_ops.hpp"
#include "vpal/precond.hpp"
#include "vpal/problem.hpp"
#include "vpal/reference.hpp"
#include "vpal/solver.hpp"
#include "vpal/stepsize.hpp"
#include "vpal/stft_phase.hpp"

namespace vpal {

namespace {

// Collects pass/fail of the individual checks of one criterion plus the
// numbers reported on its line.
class Checks {
 public:
  Checks() { os_ << std::setprecision(4); }
  std::ostream& note() {
    if (!first_) os_ << "; ";
    first_ = false;
    return os_;
  }
  void expect(bool ok, const std::string& what) {
    if (!ok) {
      passed_ = false;
      note() << "FAILED " << what;
    }
  }
  bool passed() const { return passed_; }
  std::string detail() const { return os_.str(); }

 private:
  std::ostringstream os_;
  bool first_ = true;
  bool passed_ = true;
};

std::vector<double> normal_vector(std::size_t n, std::mt19937_64& rng, double stddev = 1.0) {
  std::normal_distribution<double> normal(0.0, stddev);
  std::vector<double> v(n);
  for (double& x : v) x = normal(rng);
  return v;
}

Eigen::MatrixXd normal_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = normal(rng) / std::sqrt(double(rows));
  return m;
}

ProblemSpec dense_problem(std::size_t m, std::size_t n, double mu, std::mt19937_64& rng) {
  ProblemSpec spec;
  spec.A = std::make_shared<DenseOperator>(normal_matrix(Eigen::Index(m), Eigen::Index(n), rng));
  spec.D = make_finite_difference({n});
  spec.b = GridSignal::vector(normal_vector(m, rng));
  spec.mu = mu;
  return spec;
}

// ||g - g_fd|| / ||g_fd|| with central differences of f_proj.
double gradient_error(const ProblemSpec& spec, double lambda, const GridSignal& x,
                      const GridSignal& z) {
  const GridSignal y = y_of_x(x, z, *spec.D, spec.shrinkage(lambda));
  const GridSignal g = gradient(x, y, z, spec, lambda);
  GridSignal fd = zeros_like(x);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double h = 1e-6 * std::max(1.0, std::abs(x[i]));
    GridSignal xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    fd[i] = (f_proj(xp, z, spec, lambda) - f_proj(xm, z, spec, lambda)) / (2.0 * h);
  }
  return norm2(g - fd) / norm2(fd);
}

CriterionResult a1() {
  Checks c;
  std::mt19937_64 rng(101);
  double dense_err = 0.0, stft_err = 0.0;

  ProblemSpec dense = dense_problem(40, 30, 0.5, rng);
  dense.sigma = 0.8;
  for (int k = 0; k < 10; ++k) {
    const GridSignal x = GridSignal::vector(normal_vector(30, rng));
    const GridSignal z = GridSignal::vector(normal_vector(dense.D->out_size(), rng, 0.5));
    dense_err = std::max(dense_err, gradient_error(dense, 1.3, x, z));
  }

  constexpr std::size_t N = 16, K = 4;
  ComplexSignal wv(N, Complex(0.0, 0.0));
  for (std::size_t k = 0; k < K; ++k) wv[k] = std::exp(-0.5 * double(k));
  const auto A = std::make_shared<StftMagnitudeOperator>(custom_window(wv, K), 1);
  std::uniform_real_distribution<double> angle(-std::numbers::pi, std::numbers::pi);
  auto random_point = [&] {
    std::vector<double> v(2 * N);
    for (std::size_t n = 0; n < N; ++n) {
      v[n] = 0.5 + std::abs(normal_vector(1, rng)[0]);
      v[N + n] = angle(rng);
    }
    return GridSignal::vector(std::move(v));
  };
  ProblemSpec stft;
  stft.A = A;
  stft.D = amp_phase_difference(N);
  stft.b = A->apply(random_point());
  stft.mu = 0.05;
  for (int k = 0; k < 10; ++k) {
    const GridSignal x = random_point();
    const GridSignal z = GridSignal::vector(normal_vector(stft.D->out_size(), rng, 0.5));
    stft_err = std::max(stft_err, gradient_error(stft, 0.5, x, z));
  }

  c.note() << "max relative error dense " << dense_err << ", stft " << stft_err;
  c.expect(dense_err < 1e-5, "dense error < 1e-5");
  c.expect(stft_err < 1e-5, "stft error < 1e-5");
  return {"A1", c.passed(), c.detail()};
}

CriterionResult a2() {
  Checks c;
  std::mt19937_64 rng(202);
  std::uniform_int_distribution<std::size_t> dim(2, 14);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  int mismatches = 0, violations = 0;
  double worst_gap = std::numeric_limits<double>::infinity();

  for (int inst = 0; inst < 50; ++inst) {
    const std::size_t n = dim(rng), m = dim(rng), l = dim(rng);
    ProblemSpec spec;
    spec.A = std::make_shared<DenseOperator>(normal_matrix(Eigen::Index(m), Eigen::Index(n), rng));
    spec.D = std::make_shared<DenseOperator>(normal_matrix(Eigen::Index(l), Eigen::Index(n), rng));
    spec.b = GridSignal::vector(normal_vector(m, rng));
    spec.sigma = 0.5 + 1.5 * unit(rng);
    spec.mu = 2.0 * unit(rng);
    const double lambda = 0.2 + 2.8 * unit(rng);
    const GridSignal x = GridSignal::vector(normal_vector(n, rng));
    const GridSignal z = GridSignal::vector(normal_vector(l, rng));

    const GridSignal ystar = y_of_x(x, z, *spec.D, spec.shrinkage(lambda));
    const double fp = f_proj(x, z, spec, lambda);
    if (fp != f_joint(x, ystar, z, spec, lambda)) ++mismatches;

    for (int k = 0; k < 100; ++k) {
      GridSignal y;
      if (k % 4 == 0) {
        y = GridSignal::vector(normal_vector(l, rng, 2.0));
      } else {
        y = ystar;
        axpy(std::pow(10.0, -8.0 * unit(rng)), GridSignal::vector(normal_vector(l, rng)), y);
      }
      const double gap = f_joint(x, y, z, spec, lambda) - fp;
      worst_gap = std::min(worst_gap, gap);
      if (fp > f_joint(x, y, z, spec, lambda) + 1e-12) ++violations;
    }
  }
  c.note() << "f_proj != f_joint(y*) in " << mismatches << "/50 instances, inequality violated "
           << violations << "/5000 times, smallest gap " << worst_gap;
  c.expect(mismatches == 0, "projection identity");
  c.expect(violations == 0, "projection inequality");
  return {"A2", c.passed(), c.detail()};
}

CriterionResult a3() {
  Checks c;
  const ExperimentSpec e = ExperimentSpec::defaults(ExperimentKind::Custom);
  const ImagingProblem p = make_custom_problem(e);
  const RunReport r = run(p.spec, e.solver_config(false));
  const AdmmResult admm = admm_reference(p.spec, e.lambda * e.lambda, 20000);
  const double kkt = kkt_residual(p.spec, admm.x, admm.multiplier(p.spec.mu));
  const double dx = norm2(r.x - admm.x) / norm2(admm.x);
  const double f_vpal = lasso_objective(r.x, p.spec), f_admm = lasso_objective(admm.x, p.spec);
  const double df = std::abs(f_vpal - f_admm) / std::abs(f_admm);
  c.note() << "relative distance " << dx << ", objective gap " << df << " (vpal " << std::setprecision(10)
           << f_vpal << ", admm " << f_admm << std::setprecision(4) << "), admm kkt residual " << kkt;
  c.expect(dx < 1e-3, "distance < 1e-3");
  c.expect(df < 1e-6, "objective gap < 1e-6");
  return {"A3", c.passed(), c.detail()};
}

// Reference run and its preconditioned counterpart for one imaging setup.
struct Comparison {
  double target = 0.0;
  std::optional<int> reached;
};

Comparison compare(const ImagingOutcome& out) {
  const MethodRun* plain = nullptr;
  const MethodRun* pre = nullptr;
  for (const MethodRun& m : out.runs) (m.preconditioned ? pre : plain) = &m;
  if (!plain || !pre) throw std::logic_error("comparison needs both methods");
  Comparison cmp;
  cmp.target = plain->merged.final_rre();
  cmp.reached = pre->merged.first_reaching(cmp.target);
  return cmp;
}

std::string reached_text(const std::optional<int>& it, int budget) {
  return it ? "pvpal reaches it at iteration " + std::to_string(*it)
            : "pvpal does not reach it in " + std::to_string(budget) + " iterations";
}

ImagingOutcome imaging(ExperimentKind kind, int pvpal_iters, const std::string& step = "lin") {
  ExperimentSpec e = ExperimentSpec::defaults(kind);
  e.method = MethodChoice::Both;
  e.iters_pvpal = pvpal_iters;
  e.step = step;
  e.validate();
  return run_imaging(e);
}

const ImagingOutcome& deblur_outcome() {
  static const ImagingOutcome outcome = imaging(ExperimentKind::Deblur, 10);
  return outcome;
}

CriterionResult a4() {
  Checks c;
  const Comparison cmp = compare(imaging(ExperimentKind::Ct, 30));
  c.note() << "vpal RRE " << cmp.target << " after 400 iterations, " << reached_text(cmp.reached, 30);
  c.expect(cmp.target <= 0.25, "vpal RRE <= 0.25");
  c.expect(cmp.reached && *cmp.reached <= 30, "pvpal within 30 iterations");
  return {"A4", c.passed(), c.detail()};
}

CriterionResult a5() {
  Checks c;
  const Comparison cmp = compare(deblur_outcome());
  c.note() << "vpal RRE " << std::setprecision(6) << cmp.target << std::setprecision(4)
           << " after 200 iterations, " << reached_text(cmp.reached, 10);
  c.expect(cmp.reached.has_value(), "pvpal within 10 iterations");
  return {"A5", c.passed(), c.detail()};
}

CriterionResult a6() {
  Checks c;
  double worst = 0.0;
  int worst_iter = 0, steps = 0;
  for (const MethodRun& m : deblur_outcome().runs) {
    if (!m.preconditioned) continue;
    for (const IterationRecord& r : m.merged.records) {
      if (r.iter < 2) continue;
      ++steps;
      if (std::abs(r.alpha - 1.0) > worst) worst = std::abs(r.alpha - 1.0), worst_iter = r.iter;
    }
  }
  c.note() << "largest |alpha - 1| over " << steps << " pvpal steps is " << worst
           << " (iteration " << worst_iter << ")";
  c.expect(steps > 0 && worst < 1e-3, "|alpha - 1| < 1e-3");
  return {"A6", c.passed(), c.detail()};
}

CriterionResult a7() {
  Checks c;
  const Comparison cmp = compare(imaging(ExperimentKind::Inpaint, 10));
  c.note() << "vpal mean RRE " << cmp.target << " after 400 iterations, "
           << reached_text(cmp.reached, 10);
  c.expect(cmp.reached.has_value(), "pvpal within 10 iterations");
  return {"A7", c.passed(), c.detail()};
}

CriterionResult a8() {
  Checks c;
  ExperimentSpec e = ExperimentSpec::defaults(ExperimentKind::Phase);
  e.method = MethodChoice::Both;
  e.iters = 500;
  e.iters_pvpal = 2000;
  e.trials = 50;
  e.validate();
  const PhaseOutcome out = run_phase(e);
  int converged = 0, trials = 0, aborted = 0;
  std::vector<double> pre50, plain500;
  for (const PhaseTrial& t : out.trials) {
    if (t.preconditioned) {
      ++trials;
      converged += t.converged;
      pre50.push_back(t.objective_at(50));
    } else {
      aborted += t.aborted;
      plain500.push_back(t.objective_at(500));
    }
  }
  const double rate = trials ? double(converged) / trials : 0.0;
  const double m_pre = median(pre50), m_plain = median(plain500);
  c.note() << "pvpal converged in " << converged << "/" << trials << " trials; median objective "
           << "pvpal@50 " << m_pre << ", vpal@500 " << m_plain << " (" << aborted
           << " vpal trials diverged)";
  c.expect(rate >= 0.9, "convergence rate >= 90%");
  c.expect(m_pre <= m_plain, "pvpal@50 <= vpal@500");
  return {"A8", c.passed(), c.detail()};
}

CriterionResult a9() {
  Checks c;
  std::mt19937_64 rng(909);
  constexpr std::size_t n = 40;
  // wide A: ker(A) is non-trivial but misses the constants spanning ker(D)
  const ProblemSpec spec = dense_problem(20, n, 0.3, rng);
  const double lambda = 1.0;
  double asym = 0.0, min_eig = std::numeric_limits<double>::infinity();
  for (double eps : {0.5, 0.9, 0.99}) {
    for (int k = 0; k < 3; ++k) {
      const GridSignal x = GridSignal::vector(normal_vector(n, rng, 0.4));
      const GridSignal z = GridSignal::vector(normal_vector(spec.D->out_size(), rng, 0.2));
      const Eigen::MatrixXd H = to_dense(ApproxHessian(x, z, spec, lambda, eps));
      asym = std::max(asym, (H - H.transpose()).cwiseAbs().maxCoeff() / H.cwiseAbs().maxCoeff());
      const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H, Eigen::EigenvaluesOnly);
      min_eig = std::min(min_eig, es.eigenvalues().minCoeff());
    }
  }

  ProblemSpec ls = dense_problem(60, n, 0.0, rng);
  SolverConfig cfg;
  cfg.lambda = 0.7;
  cfg.step = StepStrategy::parse("fixed:1");
  cfg.outer_max = 1;
  cfg.precond.enabled = true;
  cfg.precond.cg_tol = 1e-14;
  cfg.precond.cg_max = 200;
  const GridSignal x1 = run(ls, cfg).x;
  const GridSignal xt = tikhonov_solve(ls, cfg.lambda);
  const double newton = norm2(x1 - xt) / std::max(1.0, norm2(xt));

  c.note() << "relative asymmetry " << asym << ", smallest eigenvalue " << min_eig
           << ", one-step distance to the Tikhonov solution " << newton;
  c.expect(asym <= 1e-12, "symmetry");
  c.expect(min_eig > 0.0, "positive definiteness");
  c.expect(newton < 1e-6, "Newton identity");
  return {"A9", c.passed(), c.detail()};
}

bool convex_on(const Poly4& p, double a_max) {
  for (int i = 0; i <= 1000; ++i)
    if (!(p.d2(a_max * i / 1000.0) > 0.0)) return false;
  return true;
}

std::vector<StepSample> sample_at(std::initializer_list<double> alphas,
                                  const std::function<double(double)>& f) {
  std::vector<StepSample> s;
  for (double a : alphas) s.push_back({a, f(a)});
  return s;
}

CriterionResult a10() {
  Checks c;
  int max_calls = 0;
  auto near = [](double a, double b, double tol) { return std::abs(a - b) <= tol; };

  {
    const Poly4 p = fit_poly4(sample_at({0, 0.5, 1, 1.5, 2}, [](double a) { return (a - 1) * (a - 1); }));
    const std::array<double, 5> want{1, -2, 1, 0, 0};
    bool ok = true;
    for (int i = 0; i < 5; ++i) ok = ok && near(p.a[i], want[i], 1e-10);
    c.expect(ok, "quadratic interpolation");
    const Poly4 q = fit_poly4(sample_at({0, 0.1, 0.2, 0.3, 0.4}, [](double) { return 2.5; }));
    c.expect(near(q.a[0], 2.5, 1e-12) && q.a[1] == q.a[1] &&
                 std::abs(q.a[1]) + std::abs(q.a[2]) + std::abs(q.a[3]) + std::abs(q.a[4]) < 1e-9,
             "constant fit");
    const std::array<double, 5> k{0.3, -1.2, 0.7, 2.0, -0.4};
    const Poly4 r = fit_poly4(sample_at({0, 0.001, 0.005, 0.01, 0.1, 1.0}, [&](double a) {
      return k[0] + a * (k[1] + a * (k[2] + a * (k[3] + a * k[4])));
    }));
    ok = true;
    for (int i = 0; i < 5; ++i) ok = ok && near(r.a[i], k[i], 1e-10 * std::max(1.0, std::abs(k[i])));
    c.expect(ok, "quartic round trip");
  }
  {
    const auto m1 = first_positive_min(Poly4{{1, -2, 1, 0, 0}});
    c.expect(m1 && near(*m1, 1.0, 1e-9), "min of (a-1)^2");
    // (a^2 - 4a + 3)^2 = a^4 - 8a^3 + 22a^2 - 24a + 9
    const auto m2 = first_positive_min(Poly4{{9, -24, 22, -8, 1}});
    c.expect(m2 && near(*m2, 1.0, 1e-9), "first min of (a^2-4a+3)^2");
    c.expect(!first_positive_min(Poly4{{0, 0, -1, 0, 0}}), "no min of -a^2");
  }
  {
    const auto grid = {0.0, 0.25, 0.5, 0.75, 1.0};
    const auto convex = sample_at(grid, [](double a) { return a * a * a * a + a * a; });
    const Poly4 p = fit_poly4_convex(convex);
    bool reproduces = true;
    for (const StepSample& s : convex) reproduces = reproduces && near(p(s.alpha), s.value, 1e-8);
    c.expect(p.a[4] > 0 && 3 * p.a[3] * p.a[3] - 8 * p.a[4] * p.a[2] < 0 && reproduces,
             "convex quartic round trip");
    c.expect(convex_on(p, 1.0), "convex fit p'' > 0 on grid");
    const auto concave = sample_at(grid, [](double a) { return -a * a; });
    c.expect(!(fit_poly4(concave).a[4] > 0), "concave data violates a4 > 0 unconstrained");
    c.expect(convex_on(fit_poly4_convex(concave), 1.0), "constrained fit of concave data");
  }
  auto step = [&](const std::function<double(double)>& f) {
    PhaseStepState st;
    const PhaseStepResult r = phase_step([&](double a, double) { return f(a); }, 0.1, 1.0, st);
    max_calls = std::max(max_calls, r.sampler_calls);
    return r;
  };
  {
    const PhaseStepResult r1 = step([](double a) { return (a - 0.01) * (a - 0.01); });
    c.expect(r1.stage == PhaseStage::Small && near(r1.alpha, 0.01, 1e-9), "stage 1 quadratic");
    const PhaseStepResult r2 = step([](double a) { return 2.0 * a - 0.5 * a * a; });
    c.expect(r2.stage == PhaseStage::Fallback && r2.alpha == 0.001, "fallback");
    const PhaseStepResult r3 = step([](double a) {
      const double u = (a - 0.8) / 0.32;
      return -std::exp(-0.5 * u * u);
    });
    c.expect(r3.stage == PhaseStage::Large && near(r3.alpha, 0.8, 0.05), "stage 2 minimum near 0.8");
    c.note() << "stage 2 step " << r3.alpha;
  }
  {
    PhaseStepState st;
    const std::vector<double> misfits{5, 4, 3, 3.5, 2, 4};
    std::vector<double> used;
    for (double m : misfits) {
      double mu_seen = -1.0;
      const PhaseStepResult r = phase_step(
          [&](double a, double mu_tilde) {
            mu_seen = mu_tilde;
            return (a - 0.01) * (a - 0.01);
          },
          0.25, m, st);
      max_calls = std::max(max_calls, r.sampler_calls);
      used.push_back(mu_seen);
    }
    c.expect(used == std::vector<double>{0, 0, 0, 0.25, 0.25, 0.25}, "mu_tilde switching");
  }
  c.note() << "at most " << max_calls << " sampler calls per step";
  c.expect(max_calls <= 6, "sampler budget");
  return {"A10", c.passed(), c.detail()};
}

CriterionResult a11() {
  Checks c;
  double worst = -std::numeric_limits<double>::infinity();
  int steps = 0, violations = 0;
  auto scan = [&](const RunReport& r) {
    for (const IterationRecord& rec : r.records) {
      ++steps;
      const double excess = (rec.f - rec.f_start) / std::max(1.0, std::abs(rec.f_start));
      worst = std::max(worst, excess);
      if (excess > 1e-10) ++violations;
    }
  };

  ExperimentSpec e = ExperimentSpec::defaults(ExperimentKind::Custom);
  e.step = "opt";
  const ImagingProblem p = make_custom_problem(e);
  scan(run(p.spec, e.solver_config(false)));
  scan(run(p.spec, e.solver_config(true)));
  for (ExperimentKind kind : {ExperimentKind::Ct, ExperimentKind::Deblur}) {
    const int pre_iters = kind == ExperimentKind::Ct ? 30 : 10;
    for (const MethodRun& m : imaging(kind, pre_iters, "opt").runs)
      for (const RunReport& r : m.channels) scan(r);
  }
  c.note() << steps << " steps, largest relative increase " << worst;
  c.expect(violations == 0, std::to_string(violations) + " steps increased f_proj");
  return {"A11", c.passed(), c.detail()};
}

using Runner = CriterionResult (*)();

struct Entry {
  Criterion criterion;
  Runner runner;
};

const std::vector<Entry>& entries() {
  static const std::vector<Entry> list{
      {{"A1", "gradient matches finite differences", 5}, a1},
      {{"A2", "projection identity and inequality", 5}, a2},
      {{"A3", "agreement with the ADMM reference", 10}, a3},
      {{"A4", "CT reconstruction", 120}, a4},
      {{"A5", "deblurring speedup", 120}, a5},
      {{"A6", "unit step under preconditioning", 0}, a6},
      {{"A7", "inpainting speedup", 60}, a7},
      {{"A8", "phase retrieval convergence", 600}, a8},
      {{"A9", "preconditioner SPD and Newton identity", 5}, a9},
      {{"A10", "polynomial step search", 1}, a10},
      {{"A11", "monotone descent with the optimal step", 0}, a11},
  };
  return list;
}

}  // namespace

const std::vector<Criterion>& acceptance_criteria() {
  static const std::vector<Criterion> list = [] {
    std::vector<Criterion> v;
    for (const Entry& e : entries()) v.push_back(e.criterion);
    return v;
  }();
  return list;
}

CriterionResult run_criterion(const std::string& id) {
  const auto& list = entries();
  const auto it = std::find_if(list.begin(), list.end(),
                               [&](const Entry& e) { return e.criterion.id == id; });
  if (it == list.end()) throw std::invalid_argument("unknown criterion '" + id + "'");

  const auto t0 = std::chrono::steady_clock::now();
  CriterionResult r;
  try {
    r = it->runner();
  } catch (const std::exception& ex) {
    r = {id, false, std::string("error: ") + ex.what()};
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (it->criterion.budget > 0 && r.seconds > it->criterion.budget) {
    r.passed = false;
    std::ostringstream os;
    os << "; FAILED runtime budget " << it->criterion.budget << " s";
    r.detail += os.str();
  }
  return r;
}

bool run_acceptance(const std::vector<std::string>& only, std::ostream& os) {
  std::vector<std::string> ids = only;
  if (ids.empty())
    for (const Criterion& c : acceptance_criteria()) ids.push_back(c.id);
  const auto& list = acceptance_criteria();
  for (const std::string& id : ids)
    if (std::none_of(list.begin(), list.end(), [&](const Criterion& c) { return c.id == id; }))
      throw std::invalid_argument("unknown criterion '" + id + "'");

  bool all = true;
  for (const std::string& id : ids) {
    const CriterionResult r = run_criterion(id);
    const auto& title = std::find_if(list.begin(), list.end(),
                                     [&](const Criterion& c) { return c.id == id; })->title;
    os << std::left << std::setw(4) << r.id << (r.passed ? "PASS " : "FAIL ") << std::right
       << std::fixed << std::setprecision(2) << std::setw(8) << r.seconds << " s  " << title
       << ": " << r.detail << std::defaultfloat << std::endl;
    all = all && r.passed;
  }
  return all;
}

}  // namespace vpal

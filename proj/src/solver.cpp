#include "vpal/solver.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>

namespace vpal {

StepStrategy StepStrategy::parse(const std::string& text) {
  if (text == "lin") return {StepRule::Linearized, 1.0};
  if (text == "opt") return {StepRule::Optimal, 1.0};
  if (text == "poly") return {StepRule::PhasePoly, 1.0};
  if (text.rfind("fixed:", 0) == 0) {
    std::size_t used = 0;
    double a = 0.0;
    try {
      a = std::stod(text.substr(6), &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != text.size() - 6 || !(a > 0.0) || !std::isfinite(a))
      throw std::invalid_argument("step: bad fixed step '" + text + "'");
    return {StepRule::Fixed, a};
  }
  throw std::invalid_argument("step: expected lin, opt, poly or fixed:<alpha>, got '" + text + "'");
}

std::string StepStrategy::to_string() const {
  switch (rule) {
    case StepRule::Linearized: return "lin";
    case StepRule::Optimal: return "opt";
    case StepRule::PhasePoly: return "poly";
    case StepRule::Fixed: {
      std::ostringstream os;
      os.precision(17);
      os << "fixed:" << fixed_alpha;
      return os.str();
    }
  }
  return "lin";
}

void SolverConfig::validate() const {
  if (!(lambda > 0.0)) throw std::invalid_argument("lambda must be positive");
  if (outer_max < 1) throw std::invalid_argument("outer_max must be at least 1");
  if (inner_max < 1) throw std::invalid_argument("inner_max must be at least 1");
  if (!(tol >= 0.0)) throw std::invalid_argument("tol must be non-negative");
  if (step.rule == StepRule::Fixed && !(step.fixed_alpha > 0.0))
    throw std::invalid_argument("fixed step must be positive");
  if (precond.enabled) precond.validate();
}

void RunReport::write_csv(std::ostream& os, bool with_timing) const {
  os << "iter,f,rre,alpha,seconds,cg_iters,objective\n";
  const auto old = os.precision(17);
  for (const auto& r : records) {
    os << r.iter << ',' << r.f << ',';
    if (r.rre) os << *r.rre;
    os << ',' << r.alpha << ',';
    if (with_timing) os << r.seconds;
    os << ',' << r.cg_iters << ',' << r.objective << '\n';
  }
  os.precision(old);
}

std::optional<int> RunReport::first_reaching(double target_rre) const {
  for (const auto& r : records)
    if (r.rre && *r.rre <= target_rre) return r.iter;
  return std::nullopt;
}

double RunReport::final_rre() const {
  if (records.empty() || !records.back().rre) throw std::logic_error("run report has no rre");
  return *records.back().rre;
}

namespace {

using Clock = std::chrono::steady_clock;

// Per-run cache of A(x) - b and Dx.
struct Iterate {
  GridSignal x, r, Dx;

  void refresh(const ProblemSpec& spec) {
    r = spec.A->apply(x) - spec.b;
    Dx = spec.D->apply(x);
  }
};

}  // namespace

RunReport run(const ProblemSpec& spec, const SolverConfig& config, const RunOptions& options) {
  spec.validate();
  config.validate();
  const double lambda = config.lambda;
  const double l2 = lambda * lambda;
  const double s2 = spec.sigma * spec.sigma;
  const ShrinkageParams shrink = spec.shrinkage(lambda);
  const LinearOperator* A_lin = spec.linear_A();

  Iterate it;
  it.x = options.x0 ? *options.x0 : GridSignal(spec.A->in_shape());
  require_same_size(it.x, GridSignal(spec.A->in_shape()), "run: x0");
  it.x.shape = spec.A->in_shape();
  it.refresh(spec);

  std::optional<double> truth_norm;
  if (options.truth) {
    require_same_size(*options.truth, it.x, "run: truth");
    truth_norm = norm2(*options.truth);
    if (!(*truth_norm > 0.0)) throw std::invalid_argument("run: truth must be non-zero");
  }

  RunReport report;
  GridSignal z(spec.D->out_shape());
  GridSignal y(spec.D->out_shape());
  PhaseStepState phase_state;
  double f_prev_outer = std::numeric_limits<double>::quiet_NaN();
  int step_count = 0;
  const auto t0 = Clock::now();

  for (int k = 0; k < config.outer_max; ++k) {
    const bool precondition = config.precond.active(k);
    for (int j = 0; j < config.inner_max; ++j) {
      GridSignal v = it.Dx;
      axpy(1.0, z, v);
      y = soft_threshold(v, shrink.zeta);
      const double f_start = projected_value(it.r, v, spec.sigma, lambda, spec.mu);
      if (!std::isfinite(f_start)) throw SolverAbort("objective is not finite at iteration " +
                                                     std::to_string(step_count + 1));

      GridSignal g = spec.A->vjp(it.x, it.r);
      scale(g, 1.0 / s2);
      GridSignal c = v - y;
      axpy(l2, spec.D->adjoint(c), g);

      IterationRecord rec;
      rec.outer = k;
      rec.f_start = f_start;

      GridSignal s;
      if (precondition) {
        PrecondResult pr = precond_solve(g, it.x, z, spec, lambda, config.precond);
        rec.cg_iters = pr.cg_iters;
        s = std::move(pr.s);
        const double gn = norm2(g), sn = norm2(s);
        if (gn > 0.0 && -dot(g, s) < config.descent_beta * gn * sn)
          throw SolverAbort("preconditioned direction violates the descent angle condition");
      } else {
        s = -g;
      }

      if (norm2(s) == 0.0) {
        rec.alpha = 0.0;
        rec.f = f_start;
      } else {
        const GridSignal Ds = spec.D->apply(s);
        GridSignal As;
        if (A_lin) As = A_lin->apply(s);

        double alpha = kDefaultFallbackStep;
        switch (config.step.rule) {
          case StepRule::Fixed:
            alpha = config.step.fixed_alpha;
            break;
          case StepRule::Linearized: {
            const GridSignal Js = A_lin ? As : spec.A->jvp(it.x, s);
            try {
              alpha = alpha_linearized(g, s, Js, Ds, spec.sigma, lambda);
            } catch (const DegenerateDirection&) {
              alpha = kDefaultFallbackStep;
              rec.step_fallback = true;
            }
            break;
          }
          case StepRule::Optimal: {
            double initial = 0.0;
            try {
              const GridSignal Js = A_lin ? As : spec.A->jvp(it.x, s);
              const double a_lin = alpha_linearized(g, s, Js, Ds, spec.sigma, lambda);
              if (a_lin > 0.0 && std::isfinite(a_lin)) initial = 2.0 * a_lin;
            } catch (const DegenerateDirection&) {
            }
            LineSearchResult ls;
            if (A_lin) {
              const ProjectedLine line(it.r, As, v, Ds, spec, lambda);
              ls = minimize_along(line, f_start, initial);
            } else {
              const ProjectedLine line(it.x, s, z, spec, lambda);
              ls = minimize_along(line, f_start, initial);
            }
            alpha = ls.alpha;
            rec.step_fallback = ls.fallback;
            break;
          }
          case StepRule::PhasePoly: {
            const PhaseSampler sampler = [&](double a, double mu_tilde) {
              GridSignal r, Dxa;
              if (A_lin) {
                r = it.r;
                axpy(a, As, r);
              } else {
                GridSignal xa = it.x;
                axpy(a, s, xa);
                r = spec.A->apply(xa) - spec.b;
              }
              Dxa = it.Dx;
              axpy(a, Ds, Dxa);
              return 0.5 * dot(r, r) / s2 + mu_tilde * norm1(Dxa);
            };
            const double misfit = 0.5 * dot(it.r, it.r) / s2;
            const PhaseStepResult pr = phase_step(sampler, spec.mu, misfit, phase_state);
            alpha = pr.alpha;
            rec.step_fallback = pr.stage == PhaseStage::Fallback;
            break;
          }
        }
        if (!(alpha > 0.0) || !std::isfinite(alpha)) {
          alpha = kDefaultFallbackStep;
          rec.step_fallback = true;
        }

        axpy(alpha, s, it.x);
        if (A_lin) {
          axpy(alpha, As, it.r);
        } else {
          it.r = spec.A->apply(it.x) - spec.b;
        }
        axpy(alpha, Ds, it.Dx);
        rec.alpha = alpha;
        GridSignal v_new = it.Dx;
        axpy(1.0, z, v_new);
        rec.f = projected_value(it.r, v_new, spec.sigma, lambda, spec.mu);
      }

      rec.misfit = 0.5 * dot(it.r, it.r) / s2;
      rec.objective = rec.misfit + spec.mu * norm1(it.Dx);
      if (!std::isfinite(rec.f) || !std::isfinite(rec.objective))
        throw SolverAbort("objective is not finite at iteration " + std::to_string(step_count + 1));
      rec.iter = ++step_count;
      if (options.truth) rec.rre = norm2(it.x - *options.truth) / *truth_norm;
      rec.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
      report.records.push_back(rec);
      if (options.observer) options.observer(report.records.back(), it.x);
    }

    GridSignal v = it.Dx;
    axpy(1.0, z, v);
    y = soft_threshold(v, shrink.zeta);
    z = dual_update(z, it.Dx, y);
    report.outer_iterations = k + 1;

    if (config.tol > 0.0) {
      const double f = report.records.back().f;
      const double primal = norm2(it.Dx - y);
      const bool small_change =
          std::isfinite(f_prev_outer) && std::abs(f - f_prev_outer) <= config.tol * (1.0 + f);
      if (small_change && primal <= config.tol * (1.0 + norm2(it.Dx))) {
        report.converged = true;
        f_prev_outer = f;
        break;
      }
      f_prev_outer = f;
    }
  }

  report.x = std::move(it.x);
  report.y = std::move(y);
  report.z = std::move(z);
  return report;
}

}  // namespace vpal

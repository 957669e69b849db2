#include "vpal/stepsize.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <stdexcept>
#include <utility>

namespace vpal {

double alpha_linearized(const GridSignal& g, const GridSignal& s, const GridSignal& Js,
                        const GridSignal& Ds, double sigma, double lambda) {
  const double num = -dot(s, g);
  const double den = dot(Js, Js) / (sigma * sigma) + lambda * lambda * dot(Ds, Ds);
  if (!(den > 1e-300)) throw DegenerateDirection("alpha_linearized: s^T H s vanishes");
  return num / den;
}

double alpha_linearized(const GridSignal& s, const GridSignal& x, const GridSignal& y,
                        const GridSignal& z, const ProblemSpec& spec, double lambda) {
  const GridSignal g = gradient(x, y, z, spec, lambda);
  return alpha_linearized(g, s, spec.A->jvp(x, s), spec.D->apply(s), spec.sigma, lambda);
}

ProjectedLine::ProjectedLine(const GridSignal& x, const GridSignal& s, const GridSignal& z,
                             const ProblemSpec& spec, double lambda)
    : spec_(&spec), lambda_(lambda), x_(x), s_(s) {
  v0_ = spec.D->apply(x);
  axpy(1.0, z, v0_);
  Ds_ = spec.D->apply(s);
  if (const LinearOperator* A = spec.linear_A()) {
    r0_ = A->apply(x) - spec.b;
    As_ = A->apply(s);
  }
}

ProjectedLine::ProjectedLine(GridSignal r0, GridSignal As, GridSignal v0, GridSignal Ds,
                             const ProblemSpec& spec, double lambda)
    : spec_(&spec),
      lambda_(lambda),
      r0_(std::move(r0)),
      As_(std::move(As)),
      v0_(std::move(v0)),
      Ds_(std::move(Ds)) {
  if (!spec.linear_A()) throw std::invalid_argument("ProjectedLine: A must be linear");
}

double ProjectedLine::operator()(double alpha) const {
  GridSignal v = v0_;
  axpy(alpha, Ds_, v);
  if (spec_->linear_A()) {
    GridSignal r = r0_;
    axpy(alpha, As_, r);
    return projected_value(r, v, spec_->sigma, lambda_, spec_->mu);
  }
  GridSignal xa = x_;
  axpy(alpha, s_, xa);
  return projected_value(spec_->A->apply(xa) - spec_->b, v, spec_->sigma, lambda_, spec_->mu);
}

LineSearchResult minimize_along(const std::function<double(double)>& phi, double phi0,
                                double initial, double tol, int max_evaluations) {
  LineSearchResult best{0.0, phi0, 0, false};
  auto eval = [&](double a) {
    const double f = phi(a);
    ++best.evaluations;
    if (std::isfinite(f) && f < best.value) {
      best.alpha = a;
      best.value = f;
    }
    return std::isfinite(f) ? f : std::numeric_limits<double>::infinity();
  };

  double lo = 0.0;
  double hi = initial > 0.0 && std::isfinite(initial) ? initial : 1.0;
  double fhi = eval(hi);
  if (fhi < phi0) {
    // expand while the function keeps decreasing
    double prev = hi, fprev = fhi;
    bool bracketed = false;
    for (int k = 0; k < 10 && best.evaluations < max_evaluations; ++k) {
      const double next = 2.0 * prev;
      const double fnext = eval(next);
      if (fnext >= fprev) {
        hi = next;
        bracketed = true;
        break;
      }
      lo = prev;
      prev = next;
      fprev = fnext;
    }
    if (!bracketed) {
      best.fallback = false;
      return best;
    }
  }

  constexpr double invphi = 0.6180339887498949;
  double a = lo, b = hi;
  double c = b - invphi * (b - a), d = a + invphi * (b - a);
  double fc = eval(c), fd = eval(d);
  while (b - a > tol && best.evaluations < max_evaluations) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - invphi * (b - a);
      fc = eval(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + invphi * (b - a);
      fd = eval(d);
    }
  }

  if (!(best.alpha > 0.0)) {
    best.alpha = kDefaultFallbackStep;
    best.value = phi(best.alpha);
    ++best.evaluations;
    best.fallback = true;
  }
  return best;
}

LineSearchResult alpha_optimal(const GridSignal& s, const GridSignal& x, const GridSignal& z,
                               const ProblemSpec& spec, double lambda, double initial) {
  const ProjectedLine line(x, s, z, spec, lambda);
  return minimize_along(line, line(0.0), initial);
}

// ---------------------------------------------------------------------------

double Poly4::operator()(double t) const {
  return a[0] + t * (a[1] + t * (a[2] + t * (a[3] + t * a[4])));
}

double Poly4::d1(double t) const {
  return a[1] + t * (2.0 * a[2] + t * (3.0 * a[3] + t * 4.0 * a[4]));
}

double Poly4::d2(double t) const { return 2.0 * a[2] + t * (6.0 * a[3] + t * 12.0 * a[4]); }

bool Poly4::strictly_convex() const {
  return a[4] > 0.0 && 3.0 * a[3] * a[3] - 8.0 * a[4] * a[2] < 0.0;
}

namespace {

// Vandermonde system in t = alpha / scale; columns are powers 0..4.
struct ScaledSystem {
  Eigen::MatrixXd V;
  Eigen::VectorXd f;
  double scale = 1.0;
};

ScaledSystem scaled_system(std::span<const StepSample> samples) {
  if (samples.size() < 5) throw FitError("fit_poly4: need at least 5 samples");
  ScaledSystem sys;
  for (const auto& s : samples) sys.scale = std::max(sys.scale, std::abs(s.alpha));
  if (!(sys.scale > 0.0)) sys.scale = 1.0;
  const auto n = static_cast<Eigen::Index>(samples.size());
  sys.V.resize(n, 5);
  sys.f.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double t = samples[static_cast<std::size_t>(i)].alpha / sys.scale;
    double pw = 1.0;
    for (int k = 0; k < 5; ++k, pw *= t) sys.V(i, k) = pw;
    sys.f(i) = samples[static_cast<std::size_t>(i)].value;
  }
  return sys;
}

Poly4 unscale(const Eigen::VectorXd& c, double scale) {
  Poly4 p;
  double pw = 1.0;
  for (int k = 0; k < 5; ++k, pw *= scale) p.a[static_cast<std::size_t>(k)] = c(k) / pw;
  return p;
}

Eigen::VectorXd least_squares(const ScaledSystem& sys) {
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(sys.V);
  qr.setThreshold(1e-13);
  if (qr.rank() < 5) throw FitError("fit_poly4: sample abscissae are not distinct enough");
  return qr.solve(sys.f);
}

}  // namespace

Poly4 fit_poly4(std::span<const StepSample> samples) {
  const ScaledSystem sys = scaled_system(samples);
  return unscale(least_squares(sys), sys.scale);
}

std::optional<double> first_positive_min(const Poly4& p) {
  // p'(t) = c0 + c1 t + c2 t^2 + c3 t^3
  std::array<double, 4> c{p.a[1], 2.0 * p.a[2], 3.0 * p.a[3], 4.0 * p.a[4]};
  int deg = 3;
  while (deg > 0 && c[static_cast<std::size_t>(deg)] == 0.0) --deg;
  if (deg == 0) return std::nullopt;

  std::vector<double> roots;
  if (deg == 1) {
    roots.push_back(-c[0] / c[1]);
  } else {
    Eigen::MatrixXd comp = Eigen::MatrixXd::Zero(deg, deg);
    for (int i = 1; i < deg; ++i) comp(i, i - 1) = 1.0;
    for (int i = 0; i < deg; ++i)
      comp(i, deg - 1) = -c[static_cast<std::size_t>(i)] / c[static_cast<std::size_t>(deg)];
    Eigen::EigenSolver<Eigen::MatrixXd> es(comp, false);
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
      const std::complex<double> r = es.eigenvalues()(i);
      if (std::abs(r.imag()) < 1e-9 * std::max(1.0, std::abs(r.real()))) roots.push_back(r.real());
    }
  }
  // Newton polish on p'
  for (double& r : roots) {
    for (int it = 0; it < 3; ++it) {
      const double d2 = p.d2(r);
      if (d2 == 0.0) break;
      const double step = p.d1(r) / d2;
      if (!std::isfinite(step)) break;
      r -= step;
    }
    if (r < 0.0 && r > -1e-12) r = 0.0;
  }
  std::sort(roots.begin(), roots.end());
  for (double r : roots) {
    if (r < 0.0 || !std::isfinite(r)) continue;
    if (p.d2(r) > 0.0) return r;
    return std::nullopt;
  }
  return std::nullopt;
}

Poly4 fit_poly4_convex(std::span<const StepSample> samples) {
  ScaledSystem sys = scaled_system(samples);
  Eigen::VectorXd c = least_squares(sys);
  {
    const Poly4 p = unscale(c, sys.scale);
    if (p.strictly_convex()) return p;
  }

  // Normalise the data so the barrier weight has a fixed meaning.
  double fs = sys.f.cwiseAbs().maxCoeff();
  if (!(fs > 0.0)) fs = 1.0;
  const Eigen::VectorXd F = sys.f / fs;
  c /= fs;

  auto q_of = [](const Eigen::VectorXd& v) { return 8.0 * v(4) * v(2) - 3.0 * v(3) * v(3); };
  auto feasible = [&](const Eigen::VectorXd& v) { return v(4) > 0.0 && q_of(v) > 0.0; };

  // Push the unconstrained fit into the interior.
  constexpr double margin = 1e-3;
  c(4) = std::max(c(4), margin);
  c(2) = std::max(c(2), 3.0 * c(3) * c(3) / (8.0 * c(4)) + margin);

  const Eigen::MatrixXd VtV = sys.V.transpose() * sys.V;
  const Eigen::VectorXd VtF = sys.V.transpose() * F;
  double t = 1e-2 * std::max(F.squaredNorm(), 1e-12);

  auto merit = [&](const Eigen::VectorXd& v, double weight) {
    if (!feasible(v)) return std::numeric_limits<double>::infinity();
    return (sys.V * v - F).squaredNorm() - weight * (std::log(v(4)) + std::log(q_of(v)));
  };

  for (int step = 0; step < 50; ++step) {
    const double q = q_of(c);
    Eigen::VectorXd dq = Eigen::VectorXd::Zero(5);
    dq(2) = 8.0 * c(4);
    dq(3) = -6.0 * c(3);
    dq(4) = 8.0 * c(2);
    Eigen::MatrixXd d2q = Eigen::MatrixXd::Zero(5, 5);
    d2q(2, 4) = d2q(4, 2) = 8.0;
    d2q(3, 3) = -6.0;

    Eigen::VectorXd grad = 2.0 * (VtV * c - VtF) - t * dq / q;
    grad(4) -= t / c(4);
    Eigen::MatrixXd H = 2.0 * VtV + t * (dq * dq.transpose() / (q * q) - d2q / q);
    H(4, 4) += t / (c(4) * c(4));

    Eigen::VectorXd dir;
    double shift = 0.0;
    for (int attempt = 0; attempt < 30; ++attempt) {
      Eigen::LLT<Eigen::MatrixXd> llt(H + shift * Eigen::MatrixXd::Identity(5, 5));
      if (llt.info() == Eigen::Success) {
        dir = llt.solve(-grad);
        break;
      }
      shift = shift == 0.0 ? 1e-10 * H.diagonal().cwiseAbs().maxCoeff() + 1e-14 : 10.0 * shift;
    }
    if (dir.size() != 5 || !dir.allFinite()) break;

    const double m0 = merit(c, t);
    double beta = 1.0;
    bool moved = false;
    for (int ls = 0; ls < 60; ++ls, beta *= 0.5) {
      const Eigen::VectorXd trial = c + beta * dir;
      if (merit(trial, t) <= m0 + 1e-4 * beta * grad.dot(dir)) {
        c = trial;
        moved = true;
        break;
      }
    }
    if (!moved && t < 1e-14) break;
    t *= 0.5;
  }

  if (!c.allFinite() || !feasible(c)) throw FitError("fit_poly4_convex: no feasible fit");
  Poly4 p = unscale(c * fs, sys.scale);
  if (!p.strictly_convex()) throw FitError("fit_poly4_convex: fit lost convexity on rescaling");
  return p;
}

PhaseStepResult phase_step(const PhaseSampler& sampler, double mu, double misfit,
                           PhaseStepState& state) {
  if (state.first_call) {
    state.first_call = false;
    state.mu_tilde = 0.0;
  } else if (state.mu_tilde == 0.0 && misfit > state.last_error) {
    state.mu_tilde = mu;
  }
  state.last_error = misfit;

  PhaseStepResult result;
  std::vector<StepSample> samples;
  samples.reserve(6);
  auto sample = [&](double a) {
    const double v = sampler(a, state.mu_tilde);
    ++result.sampler_calls;
    samples.push_back({a, v});
  };
  auto try_fit = [&](auto&& fit) -> std::optional<double> {
    try {
      const Poly4 p = fit(std::span<const StepSample>(samples));
      if (auto r = first_positive_min(p); r && *r > 0.0 && std::isfinite(*r)) return r;
    } catch (const FitError&) {
    }
    return std::nullopt;
  };
  auto finite_samples = [&] {
    return std::all_of(samples.begin(), samples.end(),
                       [](const StepSample& s) { return std::isfinite(s.value); });
  };

  for (double a : kPhaseSmallSteps) sample(a);
  if (finite_samples()) {
    if (auto r = try_fit(fit_poly4)) {
      result.alpha = *r;
      result.stage = PhaseStage::Small;
      return result;
    }
  }

  sample(kPhaseLargeStep);
  if (finite_samples()) {
    if (auto r = try_fit(fit_poly4)) {
      result.alpha = *r;
      result.stage = PhaseStage::Large;
      return result;
    }
    if (auto r = try_fit(fit_poly4_convex)) {
      result.alpha = *r;
      result.stage = PhaseStage::Convex;
      return result;
    }
  }

  result.alpha = kDefaultFallbackStep;
  result.stage = PhaseStage::Fallback;
  return result;
}

}  // namespace vpal

#pragma once

#include <array>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "vpal/problem.hpp"

namespace vpal {

class DegenerateDirection : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Closed-form step for the quadratic model with y frozen.

// alpha = -s^T g / (||J s||^2 / sigma^2 + lambda^2 ||D s||^2), where g is the
// gradient at x with the given y and z. For linear A this is the exact
// minimiser of alpha -> f_joint(x + alpha s, y, z); for nonlinear A it uses
// the Gauss-Newton model of the data term.
double alpha_linearized(const GridSignal& s, const GridSignal& x, const GridSignal& y,
                        const GridSignal& z, const ProblemSpec& spec, double lambda);

// Same formula from precomputed pieces: g, s, Js = J_A s, Ds = D s.
double alpha_linearized(const GridSignal& g, const GridSignal& s, const GridSignal& Js,
                        const GridSignal& Ds, double sigma, double lambda);

// ---------------------------------------------------------------------------
// One-dimensional minimisation of f_proj along a ray.

struct LineSearchResult {
  double alpha = 0.0;
  double value = 0.0;
  int evaluations = 0;
  bool fallback = false;  // no decrease was found; alpha is the default step
};

inline constexpr double kDefaultFallbackStep = 1e-3;

// Minimises phi over alpha > 0. The bracket starts at [0, initial] and is
// doubled up to 2^10 times while phi keeps decreasing; golden-section search
// then shrinks it to width tol. phi0 = phi(0) is supplied by the caller.
LineSearchResult minimize_along(const std::function<double(double)>& phi, double phi0,
                                double initial, double tol = 1e-8, int max_evaluations = 100);

// alpha -> f_proj(x + alpha s). For linear A the residual, D-image and
// their directional parts are precomputed so each evaluation is O(m + l)
// with no operator applications.
class ProjectedLine {
 public:
  ProjectedLine(const GridSignal& x, const GridSignal& s, const GridSignal& z,
                const ProblemSpec& spec, double lambda);
  // Linear A only: r0 = Ax - b, As, v0 = Dx + z, Ds already at hand.
  ProjectedLine(GridSignal r0, GridSignal As, GridSignal v0, GridSignal Ds,
                const ProblemSpec& spec, double lambda);
  double operator()(double alpha) const;

 private:
  const ProblemSpec* spec_;
  double lambda_;
  GridSignal x_, s_;
  GridSignal r0_, As_, v0_, Ds_;
};

// alpha_hat ~ argmin_{alpha > 0} f_proj(x + alpha s). initial <= 0 selects the
// default bracket [0, 1].
LineSearchResult alpha_optimal(const GridSignal& s, const GridSignal& x, const GridSignal& z,
                               const ProblemSpec& spec, double lambda, double initial = 0.0);

// ---------------------------------------------------------------------------
// Polynomial step search used for phase retrieval.

struct Poly4 {
  std::array<double, 5> a{};  // a[0] + a[1] t + ... + a[4] t^4

  double operator()(double t) const;
  double d1(double t) const;
  double d2(double t) const;
  // a4 > 0 and 3 a3^2 - 8 a4 a2 < 0, i.e. p'' > 0 everywhere.
  bool strictly_convex() const;
};

struct StepSample {
  double alpha;
  double value;
};

class FitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Least-squares quartic through the samples (interpolating for exactly 5).
Poly4 fit_poly4(std::span<const StepSample> samples);

// First non-negative critical point of p if it is a minimum (p'' > 0).
std::optional<double> first_positive_min(const Poly4& p);

// Least-squares quartic subject to a4 > 0 and 3 a3^2 - 8 a4 a2 < 0.
Poly4 fit_poly4_convex(std::span<const StepSample> samples);

// Regularisation switch carried between calls: mu_tilde stays 0 until the
// data misfit first increases, then equals mu for the rest of the run.
struct PhaseStepState {
  bool first_call = true;
  double mu_tilde = 0.0;
  double last_error = 0.0;
};

enum class PhaseStage { Small = 1, Large = 2, Convex = 3, Fallback = 4 };

struct PhaseStepResult {
  double alpha = kDefaultFallbackStep;
  PhaseStage stage = PhaseStage::Fallback;
  int sampler_calls = 0;
};

// sampler(alpha, mu_tilde) evaluates
//   1/(2 sigma^2) ||A(x + alpha s) - b||^2 + mu_tilde ||D(x + alpha s)||_1.
using PhaseSampler = std::function<double(double alpha, double mu_tilde)>;

inline constexpr std::array<double, 5> kPhaseSmallSteps{0.0, 0.001, 0.005, 0.01, 0.1};
inline constexpr double kPhaseLargeStep = 1.0;

PhaseStepResult phase_step(const PhaseSampler& sampler, double mu, double misfit,
                           PhaseStepState& state);

}  // namespace vpal

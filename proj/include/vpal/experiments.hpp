#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "vpal/metrics.hpp"
#include "vpal/solver.hpp"
#include "vpal/stft_phase.hpp"

namespace vpal {

enum class ExperimentKind { Deblur, Inpaint, Ct, Phase, Custom };
enum class MethodChoice { Vpal, Pvpal, Both };

// Thrown for invalid configuration; field() names the offending entry.
class ConfigError : public std::invalid_argument {
 public:
  ConfigError(std::string field, const std::string& what)
      : std::invalid_argument(field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

struct ExperimentSpec {
  ExperimentKind kind = ExperimentKind::Ct;
  MethodChoice method = MethodChoice::Both;
  std::string step = "lin";

  double mu = 10.0;
  double lambda = 5.0;
  std::optional<double> lambda_pvpal;  // defaults to lambda
  int iters = 400;
  std::optional<int> iters_pvpal;      // defaults to iters
  double tol = 0.0;
  double precond_eps = 0.99;
  double cg_tol = 1e-6;
  int cg_max = 50;
  int precond_window = 0;              // 0 = every iteration
  double noise = 0.05;
  std::uint64_t seed = 1;
  bool oracle = false;

  std::size_t size = 128;       // image side, signal length N, or unknowns
  // deblur, inpaint: "synthetic" (procedural, side `size`), "bundled"
  // (the built-in photograph) or an image file path
  std::string image;
  std::size_t psf_len = 10;
  double psf_angle = 45.0;
  double mask_fraction = 0.85;
  std::size_t angles = 60;
  std::size_t rays = 121;
  std::size_t shift = 1;
  std::string window = "exp";   // exp | gauss
  std::size_t jumps = 10;
  int trials = 1;
  int workers = 0;              // 0 = hardware concurrency
  double converge_mse = 1e-4;
  std::size_t rows = 48;        // custom: measurements

  static ExperimentSpec defaults(ExperimentKind kind);
  // Starts from defaults(kind) for the "experiment" entry (required) and
  // overrides every field present. Unknown keys are rejected.
  static ExperimentSpec from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
  void validate() const;

  double lambda_for(bool preconditioned) const;
  int iters_for(bool preconditioned) const;
  SolverConfig solver_config(bool preconditioned) const;
  std::vector<bool> methods() const;  // false = vpal, true = pvpal
};

std::string to_string(ExperimentKind kind);
ExperimentKind parse_kind(const std::string& s);
std::string method_name(bool preconditioned);

// A single-channel imaging instance.
struct ImagingProblem {
  ProblemSpec spec;
  GridSignal truth;
};

ImagingProblem make_ct_problem(const ExperimentSpec& e);
ImagingProblem make_deblur_problem(const ExperimentSpec& e);
// One problem per channel sharing one mask.
std::vector<ImagingProblem> make_inpaint_problems(const ExperimentSpec& e);
ImagingProblem make_custom_problem(const ExperimentSpec& e);

struct PhaseProblem {
  ProblemSpec spec;
  AmpPhase truth;
  GridSignal x0;
};

PhaseProblem make_phase_problem(const ExperimentSpec& e, std::uint64_t trial_seed);

// Result of one method on an imaging experiment. For multi-channel inputs
// the channel traces are merged: f and objective are summed, rre, alpha and
// cg_iters averaged, seconds accumulated.
struct MethodRun {
  bool preconditioned = false;
  std::vector<RunReport> channels;
  RunReport merged;
  GridSignal recon;  // [h, w] or [c, h, w]
  double seconds = 0.0;
  double rre = 0.0;
  double psnr = 0.0;
  std::optional<double> oracle_rre;  // custom: distance to the ADMM solution
};

struct ImagingOutcome {
  GridSignal truth;
  std::vector<MethodRun> runs;
};

ImagingOutcome run_imaging(const ExperimentSpec& e);

struct PhaseTrial {
  int index = 0;
  std::uint64_t seed = 0;
  bool preconditioned = false;
  bool converged = false;
  bool aborted = false;   // solver stopped on a non-finite objective
  std::string abort_reason;
  int converged_at = -1;  // first iteration with residual MSE below threshold
  double residual_mse = 0.0;
  double amp_mse = 0.0;
  double phase_mse = 0.0;
  double seconds = 0.0;
  std::vector<double> objective;  // per iteration
  std::vector<double> alpha;
  RunReport report;

  // Objective after `iter` steps (1-based); +inf past the abort point, the
  // final value past an early stop.
  double objective_at(std::size_t iter) const;
};

struct PhaseOutcome {
  std::vector<PhaseTrial> trials;  // ordered by (trial index, method)
};

PhaseOutcome run_phase(const ExperimentSpec& e);

double median(std::vector<double> v);

// Writes summary.csv, trace_<method>.csv, reconstructions and spec.json
// into out_dir (created if needed).
void write_imaging_outputs(const ExperimentSpec& e, const ImagingOutcome& outcome,
                           const std::filesystem::path& out_dir);
void write_phase_outputs(const ExperimentSpec& e, const PhaseOutcome& outcome,
                         const std::filesystem::path& out_dir);

}  // namespace vpal

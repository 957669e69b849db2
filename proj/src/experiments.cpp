#include "vpal/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <mutex>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include "vpal/imaging_ops.hpp"
#include "vpal/io.hpp"
#include "vpal/reference.hpp"
#include "vpal/testbed.hpp"

namespace vpal {

using nlohmann::json;

std::string to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::Deblur: return "deblur";
    case ExperimentKind::Inpaint: return "inpaint";
    case ExperimentKind::Ct: return "ct";
    case ExperimentKind::Phase: return "phase";
    case ExperimentKind::Custom: return "custom";
  }
  return "ct";
}

ExperimentKind parse_kind(const std::string& s) {
  if (s == "deblur") return ExperimentKind::Deblur;
  if (s == "inpaint") return ExperimentKind::Inpaint;
  if (s == "ct") return ExperimentKind::Ct;
  if (s == "phase") return ExperimentKind::Phase;
  if (s == "custom") return ExperimentKind::Custom;
  throw ConfigError("experiment", "expected deblur, inpaint, ct, phase or custom, got '" + s + "'");
}

std::string method_name(bool preconditioned) { return preconditioned ? "pvpal" : "vpal"; }

namespace {

std::string to_string(MethodChoice m) {
  switch (m) {
    case MethodChoice::Vpal: return "vpal";
    case MethodChoice::Pvpal: return "pvpal";
    case MethodChoice::Both: return "both";
  }
  return "both";
}

MethodChoice parse_method(const std::string& s) {
  if (s == "vpal") return MethodChoice::Vpal;
  if (s == "pvpal") return MethodChoice::Pvpal;
  if (s == "both") return MethodChoice::Both;
  throw ConfigError("method", "expected vpal, pvpal or both, got '" + s + "'");
}

bool procedural_image(const std::string& image) { return image.empty() || image == "synthetic"; }

template <class T>
T field(const json& j, const char* key) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& ex) {
    throw ConfigError(key, std::string("bad value (") + ex.what() + ")");
  }
}

}  // namespace

ExperimentSpec ExperimentSpec::defaults(ExperimentKind kind) {
  ExperimentSpec e;
  e.kind = kind;
  switch (kind) {
    case ExperimentKind::Ct:
      e.size = 128, e.angles = 60, e.rays = 121, e.noise = 0.05;
      e.mu = 10.0, e.lambda = 5.0, e.iters = 400;
      break;
    case ExperimentKind::Deblur:
      e.image = "bundled", e.size = 256, e.psf_len = 10, e.psf_angle = 45.0, e.noise = 0.01;
      e.mu = 1e-2, e.lambda = 0.5, e.iters = 200;
      break;
    case ExperimentKind::Inpaint:
      e.size = 128, e.mask_fraction = 0.85, e.noise = 0.0;
      e.mu = 1e-2, e.lambda = 0.1, e.lambda_pvpal = 0.5, e.iters = 400;
      break;
    case ExperimentKind::Phase:
      e.size = 100, e.window = "exp", e.shift = 1, e.jumps = 10, e.noise = 0.0;
      e.mu = 0.05, e.lambda = 0.5, e.iters = 2000, e.precond_window = 20;
      e.step = "poly", e.trials = 50;
      break;
    case ExperimentKind::Custom:
      e.size = 32, e.rows = 48, e.noise = 0.01;
      e.mu = 0.1, e.lambda = 1.0, e.iters = 2000, e.oracle = true;
      break;
  }
  return e;
}

ExperimentSpec ExperimentSpec::from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("config", "top level must be a JSON object");
  if (!j.contains("experiment")) throw ConfigError("experiment", "missing");
  ExperimentSpec e = defaults(parse_kind(field<std::string>(j, "experiment")));
  static const std::set<std::string> known{
      "experiment", "method", "step", "mu", "lambda", "lambda_pvpal", "iters", "iters_pvpal",
      "tol", "precond_eps", "cg_tol", "cg_max", "precond_window", "noise", "seed", "oracle",
      "size", "image", "psf_len", "psf_angle", "mask_fraction", "angles", "rays", "shift",
      "window", "jumps", "trials", "workers", "converge_mse", "rows"};
  for (const auto& [key, value] : j.items())
    if (!known.count(key)) throw ConfigError(key, "unknown field");

  auto get = [&](const char* key, auto& target) {
    if (j.contains(key) && !j.at(key).is_null())
      target = field<std::remove_reference_t<decltype(target)>>(j, key);
  };
  auto get_opt = [&](const char* key, auto& target) {
    if (j.contains(key)) {
      if (j.at(key).is_null())
        target.reset();
      else
        target = field<typename std::remove_reference_t<decltype(target)>::value_type>(j, key);
    }
  };
  if (j.contains("method")) e.method = parse_method(field<std::string>(j, "method"));
  get("step", e.step);
  get("mu", e.mu);
  get("lambda", e.lambda);
  get_opt("lambda_pvpal", e.lambda_pvpal);
  get("iters", e.iters);
  get_opt("iters_pvpal", e.iters_pvpal);
  get("tol", e.tol);
  get("precond_eps", e.precond_eps);
  get("cg_tol", e.cg_tol);
  get("cg_max", e.cg_max);
  get("precond_window", e.precond_window);
  get("noise", e.noise);
  get("seed", e.seed);
  get("oracle", e.oracle);
  get("size", e.size);
  get("image", e.image);
  get("psf_len", e.psf_len);
  get("psf_angle", e.psf_angle);
  get("mask_fraction", e.mask_fraction);
  get("angles", e.angles);
  get("rays", e.rays);
  get("shift", e.shift);
  get("window", e.window);
  get("jumps", e.jumps);
  get("trials", e.trials);
  get("workers", e.workers);
  get("converge_mse", e.converge_mse);
  get("rows", e.rows);
  e.validate();
  return e;
}

json ExperimentSpec::to_json() const {
  json j;
  j["experiment"] = vpal::to_string(kind);
  j["method"] = to_string(method);
  j["step"] = step;
  j["mu"] = mu;
  j["lambda"] = lambda;
  j["lambda_pvpal"] = lambda_pvpal ? json(*lambda_pvpal) : json(nullptr);
  j["iters"] = iters;
  j["iters_pvpal"] = iters_pvpal ? json(*iters_pvpal) : json(nullptr);
  j["tol"] = tol;
  j["precond_eps"] = precond_eps;
  j["cg_tol"] = cg_tol;
  j["cg_max"] = cg_max;
  j["precond_window"] = precond_window;
  j["noise"] = noise;
  j["seed"] = seed;
  j["oracle"] = oracle;
  j["size"] = size;
  j["image"] = image;
  j["psf_len"] = psf_len;
  j["psf_angle"] = psf_angle;
  j["mask_fraction"] = mask_fraction;
  j["angles"] = angles;
  j["rays"] = rays;
  j["shift"] = shift;
  j["window"] = window;
  j["jumps"] = jumps;
  j["trials"] = trials;
  j["workers"] = workers;
  j["converge_mse"] = converge_mse;
  j["rows"] = rows;
  return j;
}

void ExperimentSpec::validate() const {
  try {
    StepStrategy::parse(step);
  } catch (const std::invalid_argument& ex) {
    throw ConfigError("step", ex.what());
  }
  if (!(mu >= 0.0) || !std::isfinite(mu)) throw ConfigError("mu", "must be non-negative");
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw ConfigError("lambda", "must be positive");
  if (lambda_pvpal && !(*lambda_pvpal > 0.0)) throw ConfigError("lambda_pvpal", "must be positive");
  if (iters < 1) throw ConfigError("iters", "must be at least 1");
  if (iters_pvpal && *iters_pvpal < 1) throw ConfigError("iters_pvpal", "must be at least 1");
  if (!(tol >= 0.0)) throw ConfigError("tol", "must be non-negative");
  if (!(precond_eps > 0.0 && precond_eps < 1.0)) throw ConfigError("precond_eps", "must lie in (0, 1)");
  if (!(cg_tol > 0.0 && cg_tol < 1.0)) throw ConfigError("cg_tol", "must lie in (0, 1)");
  if (cg_max < 1) throw ConfigError("cg_max", "must be at least 1");
  if (precond_window < 0) throw ConfigError("precond_window", "must be non-negative");
  if (!(noise >= 0.0)) throw ConfigError("noise", "must be non-negative");
  if (trials < 1) throw ConfigError("trials", "must be at least 1");
  if (workers < 0) throw ConfigError("workers", "must be non-negative");
  if (!(converge_mse > 0.0)) throw ConfigError("converge_mse", "must be positive");
  switch (kind) {
    case ExperimentKind::Ct:
      if (size < 16) throw ConfigError("size", "phantom side must be at least 16");
      if (angles < 1) throw ConfigError("angles", "must be at least 1");
      if (rays < 1) throw ConfigError("rays", "must be at least 1");
      break;
    case ExperimentKind::Deblur:
      if (size < 16 && procedural_image(image)) throw ConfigError("size", "must be at least 16");
      if (psf_len < 1) throw ConfigError("psf_len", "must be at least 1");
      break;
    case ExperimentKind::Inpaint:
      if (size < 16 && procedural_image(image)) throw ConfigError("size", "must be at least 16");
      if (!(mask_fraction >= 0.0 && mask_fraction < 1.0))
        throw ConfigError("mask_fraction", "must lie in [0, 1)");
      break;
    case ExperimentKind::Phase:
      if (size < 10) throw ConfigError("size", "signal length must be at least 10");
      if (window != "exp" && window != "gauss") throw ConfigError("window", "expected exp or gauss");
      if (shift < 1 || shift >= 10) throw ConfigError("shift", "must satisfy 1 <= s < 10");
      if (jumps < 1 || jumps >= size) throw ConfigError("jumps", "must satisfy 1 <= jumps < size");
      break;
    case ExperimentKind::Custom:
      if (size < 2 || size > 512) throw ConfigError("size", "must lie in [2, 512]");
      if (rows < 1) throw ConfigError("rows", "must be at least 1");
      break;
  }
  if (oracle && kind != ExperimentKind::Custom)
    throw ConfigError("oracle", "the dense oracle is available for the custom experiment only");
}

double ExperimentSpec::lambda_for(bool preconditioned) const {
  return preconditioned && lambda_pvpal ? *lambda_pvpal : lambda;
}

int ExperimentSpec::iters_for(bool preconditioned) const {
  return preconditioned && iters_pvpal ? *iters_pvpal : iters;
}

SolverConfig ExperimentSpec::solver_config(bool preconditioned) const {
  SolverConfig c;
  c.lambda = lambda_for(preconditioned);
  c.step = StepStrategy::parse(step);
  c.outer_max = iters_for(preconditioned);
  c.tol = tol;
  c.precond.enabled = preconditioned;
  c.precond.epsilon = precond_eps;
  c.precond.cg_tol = cg_tol;
  c.precond.cg_max = cg_max;
  c.precond.window = precond_window;
  return c;
}

std::vector<bool> ExperimentSpec::methods() const {
  switch (method) {
    case MethodChoice::Vpal: return {false};
    case MethodChoice::Pvpal: return {true};
    case MethodChoice::Both: return {false, true};
  }
  return {false, true};
}

// ---------------------------------------------------------------------------

namespace {

GridSignal load_gray(const ExperimentSpec& e) {
  if (procedural_image(e.image)) return synthetic_gray_image(e.size);
  if (e.image == "bundled") return bundled_gray_image();
  GridSignal img = read_image(e.image);
  if (img.rank() == 3) {
    // luminance of an RGB input
    const std::size_t hw = img.shape[1] * img.shape[2];
    GridSignal g({img.shape[1], img.shape[2]});
    for (std::size_t i = 0; i < hw; ++i)
      g[i] = 0.299 * img[i] + 0.587 * img[hw + i] + 0.114 * img[2 * hw + i];
    return g;
  }
  return img;
}

GridSignal load_color(const ExperimentSpec& e) {
  if (procedural_image(e.image)) return synthetic_rgb_image(e.size);
  if (e.image == "bundled") return bundled_gray_image();
  return read_image(e.image);
}

GridSignal channel(const GridSignal& img, std::size_t c) {
  if (img.rank() == 2) return img;
  const std::size_t hw = img.shape[1] * img.shape[2];
  const auto first = img.data.begin() + static_cast<std::ptrdiff_t>(c * hw);
  return GridSignal({img.shape[1], img.shape[2]},
                    std::vector<double>(first, first + static_cast<std::ptrdiff_t>(hw)));
}

std::size_t channels_of(const GridSignal& img) { return img.rank() == 3 ? img.shape[0] : 1; }

}  // namespace

ImagingProblem make_ct_problem(const ExperimentSpec& e) {
  ImagingProblem p;
  p.truth = shepp_logan(e.size);
  auto A = radon_operator(e.size, uniform_angles(e.angles), e.rays);
  p.spec.A = A;
  p.spec.D = make_finite_difference(p.truth.shape);
  p.spec.b = add_noise(A->apply(p.truth), e.noise, derive_seed(e.seed, 0));
  p.spec.mu = e.mu;
  return p;
}

ImagingProblem make_deblur_problem(const ExperimentSpec& e) {
  ImagingProblem p;
  p.truth = load_gray(e);
  if (p.truth.rank() != 2) throw ConfigError("image", "deblurring needs a single-channel image");
  auto A = convolution_operator(motion_psf(e.psf_len, e.psf_angle), p.truth.shape);
  p.spec.A = A;
  p.spec.D = make_finite_difference(p.truth.shape);
  p.spec.b = add_noise(A->apply(p.truth), e.noise, derive_seed(e.seed, 0));
  p.spec.mu = e.mu;
  return p;
}

std::vector<ImagingProblem> make_inpaint_problems(const ExperimentSpec& e) {
  const GridSignal img = load_color(e);
  const std::size_t C = channels_of(img);
  const Shape hw = img.rank() == 3 ? Shape{img.shape[1], img.shape[2]} : img.shape;
  const std::size_t n = numel(hw);
  auto A = std::make_shared<MaskOperator>(random_mask(n, e.mask_fraction, derive_seed(e.seed, 0)), hw);
  auto D = make_finite_difference(hw);
  std::vector<ImagingProblem> out;
  for (std::size_t c = 0; c < C; ++c) {
    ImagingProblem p;
    p.truth = channel(img, c);
    p.spec.A = A;
    p.spec.D = D;
    p.spec.b = add_noise(A->apply(p.truth), e.noise, derive_seed(e.seed, 1 + c));
    p.spec.mu = e.mu;
    out.push_back(std::move(p));
  }
  return out;
}

ImagingProblem make_custom_problem(const ExperimentSpec& e) {
  std::mt19937_64 rng(derive_seed(e.seed, 0));
  std::normal_distribution<double> normal;
  Eigen::MatrixXd A(static_cast<Eigen::Index>(e.rows), static_cast<Eigen::Index>(e.size));
  for (Eigen::Index i = 0; i < A.size(); ++i) A.data()[i] = normal(rng) / std::sqrt(double(e.rows));
  // piecewise-constant truth with a few steps
  GridSignal truth({e.size});
  double level = 0.0;
  for (std::size_t i = 0; i < e.size; ++i) {
    if (i % std::max<std::size_t>(e.size / 4, 1) == 0) level = normal(rng);
    truth[i] = level;
  }
  ImagingProblem p;
  auto Aop = std::make_shared<DenseOperator>(A);
  p.truth = truth;
  p.spec.A = Aop;
  p.spec.D = make_finite_difference(truth.shape);
  p.spec.b = add_noise(Aop->apply(truth), e.noise, derive_seed(e.seed, 1));
  p.spec.mu = e.mu;
  return p;
}

PhaseProblem make_phase_problem(const ExperimentSpec& e, std::uint64_t trial_seed) {
  const std::size_t N = e.size;
  const WindowSpec w =
      make_window(e.window == "gauss" ? WindowKind::Gaussian : WindowKind::Exponential, N);
  auto A = std::make_shared<StftMagnitudeOperator>(w, e.shift);
  PhaseProblem p;
  const ComplexSignal x = random_piecewise_signal(N, e.jumps, derive_seed(trial_seed, 0));
  p.truth = AmpPhase::from_complex(x);
  p.spec.A = A;
  p.spec.D = amp_phase_difference(N);
  p.spec.b = add_noise(A->apply(p.truth.pack()), e.noise, derive_seed(trial_seed, 1));
  p.spec.mu = e.mu;

  // Random amplitudes with the energy the data implies and zero phase: summed
  // over all shifts the measurements carry N ||x||^2 ||w||^2, a stride keeps
  // about 1/s of it.
  double wn2 = 0.0;
  for (const Complex& c : w.w) wn2 += std::norm(c);
  double bsum = 0.0;
  for (double v : p.spec.b.data) bsum += v;
  const double energy = std::max(bsum, 0.0) * static_cast<double>(e.shift) /
                        (static_cast<double>(N) * wn2);
  std::mt19937_64 rng(derive_seed(trial_seed, 2));
  std::normal_distribution<double> normal;
  AmpPhase start;
  start.amp.resize(N);
  start.phase.assign(N, 0.0);
  double e0 = 0.0;
  for (double& a : start.amp) {
    a = std::abs(Complex(normal(rng), normal(rng)));
    e0 += a * a;
  }
  const double scale = e0 > 0.0 ? std::sqrt(energy / e0) : 0.0;
  for (double& a : start.amp) a *= scale;
  p.x0 = start.pack();
  return p;
}

double PhaseTrial::objective_at(std::size_t iter) const {
  if (iter >= 1 && iter <= objective.size()) return objective[iter - 1];
  if (aborted && iter >= 1) return std::numeric_limits<double>::infinity();
  if (iter >= 1 && !objective.empty()) return objective.back();
  throw std::out_of_range("trial " + std::to_string(index) + " has no iteration " +
                          std::to_string(iter));
}

double median(std::vector<double> v) {
  if (v.empty()) throw std::invalid_argument("median of an empty set");
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

// ---------------------------------------------------------------------------

namespace {

RunReport merge_channels(const std::vector<RunReport>& ch) {
  if (ch.size() == 1) return ch.front();
  RunReport m;
  std::size_t steps = ch.front().records.size();
  for (const auto& r : ch) steps = std::min(steps, r.records.size());
  double offset = 0.0;
  std::vector<double> offsets;
  for (const auto& r : ch) {
    offsets.push_back(offset);
    offset += r.records.empty() ? 0.0 : r.records.back().seconds;
  }
  const double C = static_cast<double>(ch.size());
  for (std::size_t i = 0; i < steps; ++i) {
    IterationRecord rec = ch.front().records[i];
    rec.f = rec.objective = rec.alpha = rec.seconds = 0.0;
    rec.f_start = 0.0;
    double rre = 0.0, cg = 0.0;
    bool have_rre = true;
    for (const auto& r : ch) {
      const auto& x = r.records[i];
      rec.f += x.f;
      rec.f_start += x.f_start;
      rec.objective += x.objective;
      rec.alpha += x.alpha / C;
      rec.seconds += x.seconds;
      cg += x.cg_iters;
      if (x.rre) rre += *x.rre / C; else have_rre = false;
    }
    rec.cg_iters = static_cast<int>(std::lround(cg / C));
    rec.rre = have_rre ? std::optional<double>(rre) : std::nullopt;
    m.records.push_back(rec);
  }
  m.outer_iterations = ch.front().outer_iterations;
  return m;
}

}  // namespace

ImagingOutcome run_imaging(const ExperimentSpec& e) {
  e.validate();
  std::vector<ImagingProblem> problems;
  switch (e.kind) {
    case ExperimentKind::Ct: problems.push_back(make_ct_problem(e)); break;
    case ExperimentKind::Deblur: problems.push_back(make_deblur_problem(e)); break;
    case ExperimentKind::Inpaint: problems = make_inpaint_problems(e); break;
    case ExperimentKind::Custom: problems.push_back(make_custom_problem(e)); break;
    case ExperimentKind::Phase: throw ConfigError("experiment", "use run_phase for phase retrieval");
  }

  ImagingOutcome out;
  if (problems.size() == 1) {
    out.truth = problems.front().truth;
  } else {
    const Shape& hw = problems.front().truth.shape;
    std::vector<double> all;
    for (const auto& p : problems) all.insert(all.end(), p.truth.data.begin(), p.truth.data.end());
    out.truth = GridSignal({problems.size(), hw[0], hw[1]}, std::move(all));
  }

  std::optional<GridSignal> oracle_x;
  if (e.oracle)
    oracle_x = admm_reference(problems.front().spec, e.lambda * e.lambda, 20000).x;

  for (bool pre : e.methods()) {
    MethodRun mr;
    mr.preconditioned = pre;
    const SolverConfig cfg = e.solver_config(pre);
    std::vector<double> recon;
    for (const auto& p : problems) {
      RunOptions opt;
      opt.truth = p.truth;
      mr.channels.push_back(run(p.spec, cfg, opt));
      const auto& x = mr.channels.back().x;
      recon.insert(recon.end(), x.data.begin(), x.data.end());
    }
    mr.merged = merge_channels(mr.channels);
    mr.recon = GridSignal(out.truth.shape, std::move(recon));
    mr.seconds = mr.merged.records.empty() ? 0.0 : mr.merged.records.back().seconds;
    double r = 0.0;
    for (std::size_t c = 0; c < problems.size(); ++c)
      r += rre(mr.channels[c].x, problems[c].truth) / static_cast<double>(problems.size());
    mr.rre = r;
    mr.psnr = psnr(mr.recon, out.truth);
    if (oracle_x) mr.oracle_rre = vpal::rre(mr.channels.front().x, *oracle_x);
    out.runs.push_back(std::move(mr));
  }
  return out;
}

PhaseOutcome run_phase(const ExperimentSpec& e) {
  e.validate();
  if (e.kind != ExperimentKind::Phase) throw ConfigError("experiment", "not a phase experiment");
  const std::vector<bool> methods = e.methods();
  const std::size_t jobs = static_cast<std::size_t>(e.trials) * methods.size();
  PhaseOutcome out;
  out.trials.resize(jobs);

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t job = next++;
      if (job >= jobs) return;
      try {
        const int t = static_cast<int>(job / methods.size());
        const bool pre = methods[job % methods.size()];
        const std::uint64_t seed = derive_seed(e.seed, static_cast<std::uint64_t>(t));
        const PhaseProblem p = make_phase_problem(e, seed);
        PhaseTrial tr;
        tr.index = t;
        tr.seed = seed;
        tr.preconditioned = pre;
        const double m = static_cast<double>(p.spec.b.size());
        RunOptions opt;
        opt.x0 = p.x0;
        opt.observer = [&](const IterationRecord& rec, const GridSignal&) {
          tr.objective.push_back(rec.objective);
          tr.alpha.push_back(rec.alpha);
          const double mse = 2.0 * rec.misfit * p.spec.sigma * p.spec.sigma / m;
          if (tr.converged_at < 0 && mse < e.converge_mse) tr.converged_at = rec.iter;
        };
        const auto t0 = std::chrono::steady_clock::now();
        try {
          tr.report = run(p.spec, e.solver_config(pre), opt);
        } catch (const SolverAbort& ex) {
          tr.aborted = true;
          tr.abort_reason = ex.what();
        }
        tr.converged = tr.converged_at > 0;
        if (tr.aborted) {
          constexpr double inf = std::numeric_limits<double>::infinity();
          tr.residual_mse = tr.amp_mse = tr.phase_mse = inf;
          tr.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        } else {
          const GridSignal model = p.spec.A->apply(tr.report.x);
          tr.residual_mse = residual_mse(model, p.spec.b);
          const AmpPhase est = canonical(AmpPhase::unpack(tr.report.x));
          tr.amp_mse = amp_mse(est, p.truth);
          tr.phase_mse = phase_mse(est.phase, p.truth.phase);
          tr.seconds = tr.report.records.empty() ? 0.0 : tr.report.records.back().seconds;
        }
        out.trials[job] = std::move(tr);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = jobs;
      }
    }
  };
  unsigned n_workers = e.workers > 0 ? static_cast<unsigned>(e.workers)
                                     : std::max(1u, std::thread::hardware_concurrency());
  n_workers = static_cast<unsigned>(std::min<std::size_t>(n_workers, jobs));
  std::vector<std::jthread> pool;
  for (unsigned i = 0; i < n_workers; ++i) pool.emplace_back(worker);
  pool.clear();
  if (failure) std::rethrow_exception(failure);
  return out;
}


// ---------------------------------------------------------------------------

namespace {

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(10);
  os << v;
  return os.str();
}

void write_resolved_spec(const ExperimentSpec& e, const std::filesystem::path& dir) {
  write_text(dir / "spec.json", e.to_json().dump(2) + "\n");
}

}  // namespace

void write_imaging_outputs(const ExperimentSpec& e, const ImagingOutcome& outcome,
                           const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  write_resolved_spec(e, out_dir);
  std::ostringstream summary;
  summary << "method,iters,seconds,rre,psnr" << (e.oracle ? ",oracle_rre" : "") << "\n";
  for (const auto& r : outcome.runs) {
    const std::string name = method_name(r.preconditioned);
    summary << name << ',' << r.merged.records.size() << ',' << fmt(r.seconds) << ','
            << fmt(r.rre) << ',' << fmt(r.psnr);
    if (e.oracle) summary << ',' << (r.oracle_rre ? fmt(*r.oracle_rre) : "");
    summary << "\n";
    std::ofstream trace(out_dir / ("trace_" + name + ".csv"));
    if (!trace) throw IoError("cannot open trace file in " + out_dir.string());
    r.merged.write_csv(trace);
    if (e.kind == ExperimentKind::Custom) {
      write_csv(out_dir / ("recon_" + name + ".csv"), r.recon, "x");
    } else {
      write_png(out_dir / ("recon_" + name + ".png"), r.recon);
      if (r.recon.rank() == 2) write_pgm(out_dir / ("recon_" + name + ".pgm"), r.recon);
    }
  }
  write_text(out_dir / "summary.csv", summary.str());
}

void write_phase_outputs(const ExperimentSpec& e, const PhaseOutcome& outcome,
                         const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  write_resolved_spec(e, out_dir);

  std::ostringstream trials;
  trials << "trial,method,seed,converged,converged_at,aborted,residual_mse,amp_mse,phase_mse,"
            "seconds\n";
  for (const auto& t : outcome.trials)
    trials << t.index << ',' << method_name(t.preconditioned) << ',' << t.seed << ','
           << (t.converged ? 1 : 0) << ',' << t.converged_at << ',' << (t.aborted ? 1 : 0) << ','
           << fmt(t.residual_mse) << ','
           << fmt(t.amp_mse) << ',' << fmt(t.phase_mse) << ',' << fmt(t.seconds) << "\n";
  write_text(out_dir / "trials.csv", trials.str());

  std::ostringstream summary;
  summary << "method,trials,converged,median_residual_mse,median_amp_mse,median_phase_mse,"
             "median_seconds\n";
  for (bool pre : e.methods()) {
    std::vector<double> res, amp, ph, sec;
    std::vector<const PhaseTrial*> mine;
    int ok = 0;
    for (const auto& t : outcome.trials)
      if (t.preconditioned == pre) {
        mine.push_back(&t);
        ok += t.converged ? 1 : 0;
        res.push_back(t.residual_mse);
        amp.push_back(t.amp_mse);
        ph.push_back(t.phase_mse);
        sec.push_back(t.seconds);
      }
    if (mine.empty()) continue;
    const std::string name = method_name(pre);
    summary << name << ',' << mine.size() << ',' << ok << ',' << fmt(median(res)) << ','
            << fmt(median(amp)) << ',' << fmt(median(ph)) << ',' << fmt(median(sec)) << "\n";

    // median objective and step size per iteration across trials; aborted
    // trials count as +inf objective and drop out of the step median
    const std::size_t steps = static_cast<std::size_t>(e.iters_for(pre));
    std::ostringstream trace;
    trace << "iter,median_objective,median_alpha\n";
    for (std::size_t i = 0; i < steps; ++i) {
      std::vector<double> obj, al;
      for (const auto* t : mine) {
        obj.push_back(t->objective_at(i + 1));
        if (i < t->alpha.size()) al.push_back(t->alpha[i]);
      }
      trace << i + 1 << ',' << fmt(median(obj)) << ',';
      if (!al.empty()) trace << fmt(median(al));
      trace << "\n";
    }
    write_text(out_dir / ("trace_" + name + ".csv"), trace.str());

    const auto shown = std::find_if(mine.begin(), mine.end(), [](const PhaseTrial* t) { return !t->aborted; });
    if (shown == mine.end()) continue;
    const PhaseTrial& first = **shown;
    const AmpPhase est = canonical(AmpPhase::unpack(first.report.x));
    const PhaseProblem p = make_phase_problem(e, first.seed);
    std::ostringstream rec;
    rec.precision(17);
    rec << "n,amp,phase,true_amp,true_phase\n";
    for (std::size_t n = 0; n < est.size(); ++n)
      rec << n << ',' << est.amp[n] << ',' << est.phase[n] << ',' << p.truth.amp[n] << ','
          << p.truth.phase[n] << "\n";
    write_text(out_dir / ("recon_" + name + ".csv"), rec.str());
  }
  write_text(out_dir / "summary.csv", summary.str());
}

}  // namespace vpal

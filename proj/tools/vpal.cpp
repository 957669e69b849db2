#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "vpal/acceptance.hpp"
#include "vpal/experiments.hpp"

namespace {

using nlohmann::json;
using vpal::ConfigError;

enum class Kind { Text, Real, Integer, Unsigned };

struct Field {
  const char* key;
  Kind kind;
  const char* help;
};

// One command-line flag per config field; the flag name is the key with
// '_' replaced by '-'.
const Field kFields[] = {
    {"experiment", Kind::Text, "deblur | inpaint | ct | phase | custom"},
    {"method", Kind::Text, "vpal | pvpal | both"},
    {"step", Kind::Text, "lin | opt | poly | fixed:<alpha>"},
    {"mu", Kind::Real, "l1 weight"},
    {"lambda", Kind::Real, "augmentation parameter"},
    {"lambda_pvpal", Kind::Real, "augmentation parameter for pvpal (default: lambda)"},
    {"iters", Kind::Integer, "outer iterations"},
    {"iters_pvpal", Kind::Integer, "outer iterations for pvpal (default: iters)"},
    {"tol", Kind::Real, "early-stop tolerance, 0 runs the full budget"},
    {"precond_eps", Kind::Real, "smoothing width of the preconditioner, in (0, 1)"},
    {"cg_tol", Kind::Real, "relative CG tolerance"},
    {"cg_max", Kind::Integer, "CG iteration cap"},
    {"precond_window", Kind::Integer, "precondition the first k outer iterations, 0 = all"},
    {"noise", Kind::Real, "relative noise level"},
    {"seed", Kind::Unsigned, "base random seed"},
    {"size", Kind::Unsigned, "image side, signal length or unknowns"},
    {"image", Kind::Text, "synthetic | bundled | image path"},
    {"psf_len", Kind::Unsigned, "motion blur length"},
    {"psf_angle", Kind::Real, "motion blur angle in degrees"},
    {"mask_fraction", Kind::Real, "fraction of missing pixels"},
    {"angles", Kind::Unsigned, "projection angles"},
    {"rays", Kind::Unsigned, "rays per angle"},
    {"shift", Kind::Unsigned, "STFT shift"},
    {"window", Kind::Text, "exp | gauss"},
    {"jumps", Kind::Unsigned, "phase signal segments"},
    {"trials", Kind::Integer, "phase retrieval trials"},
    {"workers", Kind::Integer, "worker threads, 0 = hardware concurrency"},
    {"converge_mse", Kind::Real, "residual MSE counted as converged"},
    {"rows", Kind::Unsigned, "custom: measurements"},
};

json convert(const Field& f, const std::string& text) {
  try {
    std::size_t used = 0;
    json v;
    switch (f.kind) {
      case Kind::Text: return text;
      case Kind::Real: v = std::stod(text, &used); break;
      case Kind::Integer: v = std::stoll(text, &used); break;
      case Kind::Unsigned:
        if (!text.empty() && text[0] == '-') throw std::invalid_argument("negative");
        v = std::stoull(text, &used);
        break;
    }
    if (used != text.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw ConfigError(f.key, "cannot parse '" + text + "'");
  }
}

json read_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& ex) {
    throw ConfigError("config", path.string() + ": " + ex.what());
  }
}

void print_file(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::cout << in.rdbuf();
}

int cmd_run(const std::string& config, const std::map<std::string, std::string>& flags,
            bool oracle, const std::filesystem::path& out) {
  vpal::ExperimentSpec e;
  try {
    json j = config.empty() ? json::object() : read_config(config);
    if (!j.is_object()) throw ConfigError("config", "top level must be a JSON object");
    for (const Field& f : kFields)
      if (auto it = flags.find(f.key); it != flags.end()) j[f.key] = convert(f, it->second);
    if (oracle) j["oracle"] = true;
    e = vpal::ExperimentSpec::from_json(j);
    if (!e.image.empty() && e.image != "synthetic" && e.image != "bundled" &&
        !std::filesystem::is_regular_file(e.image))
      throw ConfigError("image", "no such file: " + e.image);
  } catch (const ConfigError& ex) {
    std::cerr << "config error: " << ex.what() << '\n';
    return 2;
  }

  try {
    if (e.kind == vpal::ExperimentKind::Phase) {
      const vpal::PhaseOutcome outcome = vpal::run_phase(e);
      vpal::write_phase_outputs(e, outcome, out);
    } else {
      const vpal::ImagingOutcome outcome = vpal::run_imaging(e);
      vpal::write_imaging_outputs(e, outcome, out);
    }
  } catch (const vpal::SolverAbort& ex) {
    std::cerr << "solver aborted: " << ex.what() << '\n';
    return 3;
  }
  print_file(out / "summary.csv");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Variable projection augmented Lagrangian solvers"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "Run one experiment and write its outputs");
  std::string config;
  std::filesystem::path out = "out";
  bool oracle = false;
  std::map<std::string, std::string> values;
  std::vector<std::pair<const Field*, CLI::Option*>> options;
  run->add_option("--config", config, "JSON config; flags override its fields");
  run->add_option("--out", out, "Output directory")->capture_default_str();
  run->add_flag("--oracle", oracle, "Compare with the dense ADMM reference (custom only)");
  for (const Field& f : kFields) {
    std::string name = std::string("--") + f.key;
    std::replace(name.begin(), name.end(), '_', '-');
    options.emplace_back(&f, run->add_option(name, values[f.key], f.help));
  }

  auto* verify = app.add_subcommand("verify", "Run the acceptance criteria");
  std::vector<std::string> only;
  verify->add_option("--only", only, "Criterion ids, e.g. A4 (default: all)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& ex) {
    return app.exit(ex);
  } catch (const CLI::ParseError& ex) {
    app.exit(ex);
    return 2;
  }

  try {
    if (*run) {
      std::map<std::string, std::string> given;
      for (const auto& [f, opt] : options)
        if (opt->count() > 0) given[f->key] = values[f->key];
      return cmd_run(config, given, oracle, out);
    }
    try {
      return vpal::run_acceptance(only, std::cout) ? 0 : 1;
    } catch (const std::invalid_argument& ex) {
      std::cerr << "error: " << ex.what() << '\n';
      return 2;
    }
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << '\n';
    return 1;
  }
}

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "vpal/experiments.hpp"
#include "vpal/testbed.hpp"

using namespace vpal;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("vpal_exp_" + std::to_string(std::random_device{}()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  for (std::string c; std::getline(ss, c, ',');) cells.push_back(c);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  for (std::string l; std::getline(ss, l);) out.push_back(l);
  return out;
}

// CSV text with every timing column blanked.
std::string without_timing(const std::string& csv) {
  const auto rows = lines(csv);
  if (rows.empty()) return csv;
  const auto header = split(rows[0]);
  std::string out;
  for (const auto& row : rows) {
    auto cells = split(row);
    for (std::size_t i = 0; i < header.size() && i < cells.size(); ++i)
      if (header[i].find("seconds") != std::string::npos && &row != &rows[0]) cells[i].clear();
    for (std::size_t i = 0; i < cells.size(); ++i) out += (i ? "," : "") + cells[i];
    out += "\n";
  }
  return out;
}

std::string field_of(const json& j) {
  try {
    ExperimentSpec::from_json(j).validate();
  } catch (const ConfigError& ex) {
    return ex.field();
  }
  return "";
}

}  // namespace

TEST_CASE("config parsing") {
  const ExperimentSpec ct = ExperimentSpec::from_json({{"experiment", "ct"}});
  CHECK(ct.to_json() == ExperimentSpec::defaults(ExperimentKind::Ct).to_json());

  json j = {{"experiment", "phase"}, {"size", 40}, {"step", "fixed:0.5"}, {"lambda_pvpal", 0.7},
            {"iters_pvpal", 12}, {"seed", 99}, {"window", "gauss"}};
  const ExperimentSpec e = ExperimentSpec::from_json(j);
  CHECK(e.size == 40);
  CHECK(e.lambda_for(true) == 0.7);
  CHECK(e.lambda_for(false) == e.lambda);
  CHECK(e.iters_for(true) == 12);
  CHECK(e.iters_for(false) == e.iters);
  CHECK(e.solver_config(true).outer_max == 12);
  CHECK(ExperimentSpec::from_json(e.to_json()).to_json() == e.to_json());
  CHECK(ExperimentSpec::from_json(json::parse(e.to_json().dump())).to_json() == e.to_json());

  CHECK(field_of({{"experiment", "ct"}, {"colour", 1}}) == "colour");
  CHECK(field_of({{"size", 10}}) == "experiment");
  CHECK(field_of({{"experiment", "mri"}}) == "experiment");
  CHECK(field_of({{"experiment", "ct"}, {"iters", "many"}}) == "iters");
  CHECK(field_of({{"experiment", "ct"}, {"mu", -1.0}}) == "mu");
  CHECK(field_of({{"experiment", "ct"}, {"lambda", 0.0}}) == "lambda");
  CHECK(field_of({{"experiment", "ct"}, {"step", "newton"}}) == "step");
  CHECK(field_of({{"experiment", "ct"}, {"method", "admm"}}) == "method");
  CHECK(field_of({{"experiment", "ct"}, {"precond_eps", 1.0}}) == "precond_eps");
  CHECK(field_of({{"experiment", "ct"}, {"oracle", true}}) == "oracle");
  CHECK(field_of({{"experiment", "phase"}, {"shift", 10}}) == "shift");
  CHECK(field_of({{"experiment", "phase"}, {"jumps", 100}}) == "jumps");
  CHECK(field_of({{"experiment", "phase"}, {"window", "hann"}}) == "window");
  CHECK(field_of({{"experiment", "inpaint"}, {"mask_fraction", 1.0}}) == "mask_fraction");
  CHECK(field_of({{"experiment", "custom"}, {"size", 600}}) == "size");
  CHECK(field_of(json::array()) == "config");
}

TEST_CASE("median") {
  CHECK(median({3, 1, 2}) == 2);
  CHECK(median({4, 1, 3, 2}) == 2.5);
  CHECK(std::isinf(median({1, INFINITY, INFINITY})));
  CHECK_THROWS(median({}));
}

TEST_CASE("small CT run and its outputs") {
  ExperimentSpec e = ExperimentSpec::from_json(
      {{"experiment", "ct"}, {"size", 32}, {"angles", 12}, {"rays", 45}, {"iters", 15}, {"mu", 1.0},
       {"lambda", 2.0}});
  const ImagingOutcome o = run_imaging(e);
  REQUIRE(o.runs.size() == 2);
  CHECK_FALSE(o.runs[0].preconditioned);
  CHECK(o.runs[1].preconditioned);
  for (const auto& r : o.runs) {
    CHECK(r.recon.shape == Shape{32, 32});
    CHECK(r.merged.records.size() == 15);
    CHECK(r.rre == doctest::Approx(rre(r.recon, o.truth)));
    CHECK(r.rre < 1.0);
    CHECK(r.psnr == doctest::Approx(psnr(r.recon, o.truth)));
  }

  TempDir a, b;
  write_imaging_outputs(e, o, a.path);
  for (const char* f : {"summary.csv", "spec.json", "trace_vpal.csv", "trace_pvpal.csv", "recon_vpal.png",
                        "recon_vpal.pgm", "recon_pvpal.png", "recon_pvpal.pgm"})
    CHECK(fs::exists(a.path / f));
  const auto summary = lines(slurp(a.path / "summary.csv"));
  REQUIRE(summary.size() == 3);
  CHECK(summary[0] == "method,iters,seconds,rre,psnr");
  CHECK(split(summary[1])[0] == "vpal");
  CHECK(lines(slurp(a.path / "trace_vpal.csv")).size() == 16);
  CHECK(ExperimentSpec::from_json(json::parse(slurp(a.path / "spec.json"))).to_json() == e.to_json());

  // a second run reproduces every output apart from the timings
  write_imaging_outputs(e, run_imaging(e), b.path);
  for (const auto& entry : fs::directory_iterator(a.path)) {
    const std::string name = entry.path().filename().string();
    const std::string x = slurp(entry.path()), y = slurp(b.path / name);
    if (entry.path().extension() == ".csv")
      CHECK_MESSAGE(without_timing(x) == without_timing(y), name);
    else
      CHECK_MESSAGE(x == y, name);
  }
}

TEST_CASE("inpainting and custom runs") {
  const ExperimentSpec in = ExperimentSpec::from_json(
      {{"experiment", "inpaint"}, {"size", 24}, {"iters", 5}, {"method", "pvpal"}});
  const auto problems = make_inpaint_problems(in);
  const ImagingOutcome o = run_imaging(in);
  REQUIRE(o.runs.size() == 1);
  CHECK(o.runs[0].preconditioned);
  CHECK(o.runs[0].channels.size() == problems.size());
  CHECK(o.runs[0].recon.shape == o.truth.shape);
  CHECK(o.runs[0].merged.records.size() == 5);

  const ExperimentSpec c = ExperimentSpec::from_json(
      {{"experiment", "custom"}, {"size", 12}, {"rows", 20}, {"iters", 300}, {"method", "vpal"}});
  const ImagingOutcome co = run_imaging(c);
  REQUIRE(co.runs.size() == 1);
  REQUIRE(co.runs[0].oracle_rre.has_value());
  CHECK(*co.runs[0].oracle_rre < 1e-3);
  TempDir d;
  write_imaging_outputs(c, co, d.path);
  CHECK(lines(slurp(d.path / "summary.csv"))[0] == "method,iters,seconds,rre,psnr,oracle_rre");
  CHECK(lines(slurp(d.path / "recon_vpal.csv")).size() == 13);
}

TEST_CASE("phase retrieval trials") {
  ExperimentSpec e = ExperimentSpec::from_json({{"experiment", "phase"}, {"size", 30}, {"jumps", 3},
                                                {"trials", 3}, {"iters", 40}, {"workers", 2}});
  const PhaseOutcome o = run_phase(e);
  REQUIRE(o.trials.size() == 6);
  for (std::size_t k = 0; k < o.trials.size(); ++k) {
    const PhaseTrial& t = o.trials[k];
    CHECK(t.index == int(k / 2));
    CHECK(t.preconditioned == (k % 2 == 1));
    CHECK(t.seed == derive_seed(e.seed, std::uint64_t(t.index)));
    if (!t.aborted) {
      CHECK(t.objective.size() == 40);
      CHECK(t.objective_at(40) == t.objective.back());
    }
    CHECK(t.converged == (t.converged_at > 0));
  }
  const PhaseOutcome again = run_phase(e);
  for (std::size_t k = 0; k < o.trials.size(); ++k) CHECK(again.trials[k].objective == o.trials[k].objective);

  TempDir d;
  write_phase_outputs(e, o, d.path);
  CHECK(lines(slurp(d.path / "trials.csv")).size() == 7);
  CHECK(lines(slurp(d.path / "summary.csv")).size() == 3);
  CHECK(lines(slurp(d.path / "trace_pvpal.csv")).size() == 41);

  // a diverging step size is recorded per trial instead of failing the run
  e.step = "fixed:1e200";
  e.trials = 2;
  const PhaseOutcome bad = run_phase(e);
  for (const auto& t : bad.trials) {
    CHECK(t.aborted);
    CHECK_FALSE(t.abort_reason.empty());
    CHECK(std::isinf(t.objective_at(40)));
    CHECK(std::isinf(t.residual_mse));
  }
  TempDir d2;
  write_phase_outputs(e, bad, d2.path);
  CHECK(fs::exists(d2.path / "trials.csv"));
  CHECK_FALSE(fs::exists(d2.path / "recon_vpal.csv"));
}

TEST_CASE("published schema matches the config fields") {
  const json schema = json::parse(slurp(VPAL_SCHEMA_PATH));
  const json& props = schema.at("properties");
  for (ExperimentKind kind : {ExperimentKind::Deblur, ExperimentKind::Inpaint, ExperimentKind::Ct,
                              ExperimentKind::Phase, ExperimentKind::Custom}) {
    const json spec = ExperimentSpec::defaults(kind).to_json();
    CHECK(spec.size() == props.size());
    for (const auto& [key, value] : spec.items()) {
      REQUIRE_MESSAGE(props.contains(key), key);
      const json& type = props[key].at("type");
      auto allows = [&](const std::string& t) {
        return type.is_array() ? std::find(type.begin(), type.end(), t) != type.end() : type == t;
      };
      if (value.is_null()) CHECK_MESSAGE(allows("null"), key);
      else if (value.is_boolean()) CHECK_MESSAGE(allows("boolean"), key);
      else if (value.is_string()) CHECK_MESSAGE(allows("string"), key);
      else if (value.is_number_integer()) CHECK_MESSAGE((allows("integer") || allows("number")), key);
      else CHECK_MESSAGE(allows("number"), key);
    }
  }
}

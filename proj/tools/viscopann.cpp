// Command-line front end: data generation, training, prediction and diagnostics.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>
#include <omp.h>

#include "viscopann/calibrate.hpp"
#include "viscopann/datagen.hpp"
#include "viscopann/groundtruth.hpp"
#include "viscopann/material.hpp"
#include "viscopann/verify.hpp"

namespace fs = std::filesystem;
using namespace viscopann;
using nlohmann::json;

namespace {

struct Common
{
  std::uint64_t seed = 0;
  bool seed_set = false;
  int threads = 0;
  std::string integrator = "implicit";
  std::optional<double> tol;
  std::optional<int> max_iter;
};

json read_json(fs::path const& file)
{
  std::ifstream in(file);
  if (!in) throw std::runtime_error(fmt::format("cannot open {}", file.string()));
  try {
    return json::parse(in);
  } catch (json::exception const& e) {
    throw std::runtime_error(fmt::format("{}: {}", file.string(), e.what()));
  }
}

void write_json(json const& j, fs::path const& file)
{
  if (file.has_parent_path()) fs::create_directories(file.parent_path());
  std::ofstream out(file);
  if (!out) throw std::runtime_error(fmt::format("cannot write {}", file.string()));
  out << j.dump(2) << '\n';
}

IntegratorConfig integrator_config(Common const& c, IntegratorConfig cfg = {})
{
  if (c.tol) cfg.tol = *c.tol;
  if (c.max_iter) cfg.n_iter = *c.max_iter;
  if (!(cfg.tol > 0.0) || cfg.n_iter < 1) throw std::runtime_error("invalid integrator tolerance or iteration limit");
  return cfg;
}

SimulationOptions simulation_options(Common const& c)
{
  SimulationOptions o;
  if (c.integrator == "explicit")
    o.scheme = Scheme::explicit_exp;
  else if (c.integrator == "implicit")
    o.scheme = Scheme::implicit_exp;
  else
    throw std::runtime_error(fmt::format("unknown integrator '{}'", c.integrator));
  o.integrator = integrator_config(c);
  return o;
}

int cmd_gen(Common const& c, std::string const& config, std::string const& out)
{
  json const spec = read_json(config);

  GroundTruthParams const gt_params =
      spec.contains("ground_truth") ? spec.at("ground_truth").get<GroundTruthParams>() : GroundTruthParams::reference();
  GroundTruthModel const gt(gt_params);
  SimulationOptions opts = simulation_options(c);
  if (spec.contains("integrator")) {
    auto const& i = spec.at("integrator");
    opts.integrator.tol = i.value("tol", opts.integrator.tol);
    opts.integrator.n_iter = i.value("n_iter", opts.integrator.n_iter);
    opts.integrator = integrator_config(c, opts.integrator);
  }

  Dataset const data = generate_dataset(spec, gt, opts, c.seed);
  json meta{{"config", spec}, {"seed_offset", c.seed}, {"ground_truth", gt_params}};
  write_dataset(data, out, meta);
  fmt::print("wrote {} calibration and {} test paths to {}\n", data.calibration.size(), data.test.size(), out);
  return 0;
}

int cmd_train(Common const& c, std::string const& config, std::string dataset, std::string const& out,
              std::string report_file, std::optional<int> pre, std::optional<int> post)
{
  TrainConfig cfg;
  if (!config.empty()) {
    json const j = read_json(config);
    cfg = j.get<TrainConfig>();
    if (dataset.empty() && j.contains("dataset")) {
      fs::path const d = j.at("dataset").get<std::string>();
      dataset = (d.is_relative() ? fs::path(config).parent_path() / d : d).string();
    }
  }
  if (dataset.empty()) throw std::runtime_error("train: no dataset given (--dataset or \"dataset\" in the config)");
  if (c.seed_set) cfg.seed = c.seed;
  cfg.integrator = integrator_config(c, cfg.integrator);
  if (pre) cfg.pre_iterations = *pre;
  if (post) cfg.post_iterations = *post;
  cfg.validate();

  Dataset const data = load_dataset(dataset);
  TrainReport report;
  PannModel const model = train(data, cfg, report, [](std::string const& s) {
    fmt::print("{}\n", s);
    std::fflush(stdout);
  });

  fs::path const model_path = out;
  if (model_path.has_parent_path()) fs::create_directories(model_path.parent_path());
  save_model(model, model_path);
  if (report_file.empty()) report_file = (model_path.parent_path() / (model_path.stem().string() + ".report.json")).string();
  json rep = to_json(report);
  rep["config"] = cfg;
  rep["dataset"] = dataset;
  write_json(rep, report_file);

  fmt::print("calibration MSE {:.4e}", report.calibration_mse);
  if (report.test_mse >= 0.0) fmt::print(", test MSE {:.4e}", report.test_mse);
  fmt::print(", active gates {}, {:.1f} s\n", report.active_gates, report.seconds);
  for (auto const& w : report.warnings) fmt::print(stderr, "warning: {}\n", w);
  return 0;
}

/// Plot series: time, in-plane stretches, stress components and dissipation rate.
void write_series(LoadPath const& path, PathResult const& r, fs::path const& file)
{
  std::ofstream out(file);
  if (!out) throw std::runtime_error(fmt::format("cannot write {}", file.string()));
  out << "step,t,F11,F22,F12,F33,P11,P22,P12,P33,dissipation\n";
  double t = 0.0;
  for (std::size_t n = 0; n < path.size(); ++n) {
    t += path.dt[n];
    auto const& F = path.F[n];
    auto const& P = r.steps[n].P;
    out << fmt::format("{},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g}\n", n + 1, t,
                       F(0, 0), F(1, 1), F(0, 1), F(2, 2), P(0, 0), P(1, 1), P(0, 1), P(2, 2),
                       r.steps[n].dissipation);
  }
}

int cmd_predict(Common const& c, std::string const& model_file, std::string const& input, std::string const& out,
                bool series)
{
  auto const model = load_model(model_file);
  SimulationOptions const opts = simulation_options(c);
  auto predict_one = [&](LoadPath path, fs::path const& file) {
    PathResult const r = simulate_path(path, *model, opts);
    path.P.clear();
    for (auto const& s : r.steps) path.P.push_back(s.P);
    if (file.has_parent_path()) fs::create_directories(file.parent_path());
    write_path_csv(path, file);
    if (series) write_series(path, r, file.parent_path() / (file.stem().string() + ".series.csv"));
  };

  fs::path const in = input;
  if (fs::is_directory(in) || in.extension() == ".json") {
    Dataset const data = load_dataset(in);
    fs::create_directories(out);
    int n = 0;
    for (auto const* split : {&data.calibration, &data.test})
      for (auto const& p : *split) {
        predict_one(p, fs::path(out) / (p.name + ".csv"));
        ++n;
      }
    fmt::print("predicted {} paths into {}\n", n, out);
  } else {
    LoadPath p = read_path_csv(in);
    p.name = in.stem().string();
    predict_one(p, out);
    fmt::print("predicted {} steps into {}\n", p.size(), out);
  }
  return 0;
}

int cmd_lincheck(std::string const& model_file, std::string const& out)
{
  auto const model = load_model(model_file);
  LinearParams const lp = extract_linear_params(*model);
  fmt::print("equilibrium   mu = {:.10g} MPa\n", lp.mu);
  json j{{"mu", lp.mu}, {"elements", json::array()}};
  for (std::size_t e = 0; e < lp.elements.size(); ++e) {
    auto const& el = lp.elements[e];
    bool const on = model->is_active(static_cast<int>(e));
    if (on && el.mu > 0.0)
      fmt::print("element {}     mu = {:.10g} MPa  eta = {:.10g} MPa s  tau = {:.10g} s\n", e, el.mu, el.eta, el.tau());
    else
      fmt::print("element {}     mu = {:.10g} MPa  (inactive)\n", e, el.mu);
    json je{{"active", on}, {"mu", el.mu}};
    je["eta"] = std::isfinite(el.eta) ? json(el.eta) : json(nullptr);
    je["tau"] = std::isfinite(el.tau()) ? json(el.tau()) : json(nullptr);
    j["elements"].push_back(je);
  }
  if (!out.empty()) write_json(j, out);
  return 0;
}

int cmd_verify(Common const& c, std::vector<std::string> suites)
{
  if (suites.empty() || (suites.size() == 1 && suites[0] == "all")) suites = verify::suite_names();
  bool ok = true;
  for (auto const& s : suites) {
    verify::SuiteResult const r = verify::run(s, c.seed);
    ok = ok && r.passed;
    fmt::print("{:<16} {}  worst {:.3e}  tol {:.1e}  {:.2f} s  {}\n", r.name, r.passed ? "PASS" : "FAIL", r.worst,
               r.tolerance, r.seconds, r.detail);
  }
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv)
{
  CLI::App app{"Physics-augmented neural network viscoelasticity: data, training and checks"};
  app.require_subcommand(1);
  Common c;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--seed", c.seed, "random seed (offset for generated walks)")->each([&](std::string const&) {
      c.seed_set = true;
    });
    sub->add_option("--threads", c.threads, "OpenMP threads (0 keeps the default)")->check(CLI::NonNegativeNumber);
    sub->add_option("--integrator", c.integrator, "time integration scheme")
        ->check(CLI::IsMember({"explicit", "implicit"}));
    sub->add_option("--tol", c.tol, "Newton residual tolerance");
    sub->add_option("--max-iter", c.max_iter, "Newton iteration limit");
  };

  std::string config, dataset, model, out, report;
  std::optional<int> pre, post;
  bool series = false;
  std::vector<std::string> suites;

  auto* gen = app.add_subcommand("gen", "generate a labeled dataset from a path specification");
  add_common(gen);
  gen->add_option("--config", config, "path specification (JSON)")->required();
  gen->add_option("--out", out, "output directory")->required();

  auto* tr = app.add_subcommand("train", "calibrate a network model");
  add_common(tr);
  tr->add_option("--config", config, "training configuration (JSON)");
  tr->add_option("--dataset", dataset, "dataset manifest or directory");
  tr->add_option("--out", out, "model file to write")->required();
  tr->add_option("--report", report, "report file (default: <model>.report.json)");
  tr->add_option("--pre-iterations", pre, "override the pre-training budget");
  tr->add_option("--post-iterations", post, "override the post-training budget");

  auto* pr = app.add_subcommand("predict", "simulate stresses with a model");
  add_common(pr);
  pr->add_option("--model", model, "model file")->required();
  pr->add_option("--dataset", dataset, "path CSV, manifest or dataset directory")->required();
  pr->add_option("--out", out, "output CSV, or directory for a dataset")->required();
  pr->add_flag("--series", series, "also write plot series next to each output");

  auto* lc = app.add_subcommand("lincheck", "report small-strain moduli and relaxation times");
  lc->add_option("--model", model, "model file")->required();
  lc->add_option("--out", out, "optional JSON output");

  auto* ve = app.add_subcommand("verify", "run the randomized property suites");
  add_common(ve);
  ve->add_option("suites", suites, "suite names or 'all'");

  CLI11_PARSE(app, argc, argv);
  try {
    if (c.threads > 0) omp_set_num_threads(c.threads);
    if (*gen) return cmd_gen(c, config, out);
    if (*tr) return cmd_train(c, config, dataset, out, report, pre, post);
    if (*pr) return cmd_predict(c, model, dataset, out, series);
    if (*lc) return cmd_lincheck(model, out);
    if (*ve) return cmd_verify(c, suites);
  } catch (std::exception const& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 1;
  }
  return 1;
}

#include "viscopann/datagen.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

using std::isnan;  // boost 1.74 pchip.hpp calls isnan unqualified

#include <boost/math/interpolators/pchip.hpp>
#include <fmt/format.h>
#include <gsl/gsl_errno.h>
#include <gsl/gsl_spline.h>

namespace viscopann {

namespace {

constexpr int max_resample = 10000;

constexpr char const* tensor_names[9] = {"11", "12", "13", "21", "22", "23", "31", "32", "33"};

}  // namespace

LoadMode parse_load_mode(std::string_view s)
{
  if (s == "uniaxial") return LoadMode::uniaxial;
  if (s == "equibiaxial") return LoadMode::equibiaxial;
  if (s == "multiaxial") return LoadMode::multiaxial;
  throw std::runtime_error(fmt::format("unknown load mode '{}'", s));
}

std::string_view to_string(LoadMode m)
{
  switch (m) {
    case LoadMode::uniaxial: return "uniaxial";
    case LoadMode::equibiaxial: return "equibiaxial";
    case LoadMode::multiaxial: return "multiaxial";
  }
  return "?";
}

void RandomWalkSpec::validate() const
{
  if (n_knots < 1) throw std::runtime_error("random walk: n_knots must be positive");
  if (!(dlambda_av >= 0.0) || !(dphi_av >= 0.0)) throw std::runtime_error("random walk: negative step width");
  if (!(lambda_min > 0.0) || !(lambda_max >= lambda_min)) throw std::runtime_error("random walk: bad stretch bounds");
  if (!(dt_min > 0.0) || !(dt_max >= dt_min)) throw std::runtime_error("random walk: bad knot time bounds");
  if (n_inc < n_knots) throw std::runtime_error("random walk: n_inc must be at least n_knots");
}

void to_json(nlohmann::json& j, RandomWalkSpec const& s)
{
  j = nlohmann::json{{"n_knots", s.n_knots},       {"dlambda_av", s.dlambda_av}, {"lambda_min", s.lambda_min},
                     {"lambda_max", s.lambda_max}, {"dt_min", s.dt_min},         {"dt_max", s.dt_max},
                     {"n_inc", s.n_inc},           {"mode", to_string(s.mode)},  {"dphi_av", s.dphi_av},
                     {"seed", s.seed}};
}

void from_json(nlohmann::json const& j, RandomWalkSpec& s)
{
  RandomWalkSpec d;
  s.n_knots = j.value("n_knots", d.n_knots);
  s.dlambda_av = j.value("dlambda_av", d.dlambda_av);
  s.lambda_min = j.value("lambda_min", d.lambda_min);
  s.lambda_max = j.value("lambda_max", d.lambda_max);
  s.dt_min = j.value("dt_min", d.dt_min);
  s.dt_max = j.value("dt_max", d.dt_max);
  s.n_inc = j.value("n_inc", d.n_inc);
  s.mode = parse_load_mode(j.value("mode", std::string(to_string(d.mode))));
  s.dphi_av = j.value("dphi_av", d.dphi_av);
  s.seed = j.value("seed", d.seed);
  s.validate();
}

std::vector<double> sample_knot_times(Rng& rng, int n_knots, double dt_min, double dt_max)
{
  std::vector<double> t{0.0};
  for (int k = 0; k < n_knots; ++k) t.push_back(t.back() + rng.uniform(dt_min, dt_max));
  return t;
}

std::vector<double> sample_knot_values(Rng& rng, int n_knots, double start, double step_av, double lo, double hi)
{
  double const sigma = step_av / std::sqrt(2.0 / std::numbers::pi);
  std::vector<double> v{start};
  for (int k = 0; k < n_knots; ++k) {
    int tries = 0;
    double next;
    do {
      if (++tries > max_resample)
        throw std::runtime_error(fmt::format("random walk: knot {} not placeable in [{}, {}] after {} draws", k + 1, lo,
                                             hi, max_resample));
      next = v.back() + sigma * rng.normal();
    } while (next < lo || next > hi);
    v.push_back(next);
  }
  return v;
}

std::vector<double> spline_sample(std::span<double const> x, std::span<double const> y, std::span<double const> x_out)
{
  if (x.size() != y.size() || x.size() < 2) throw std::runtime_error("spline: need at least two matching points");
  std::vector<double> out;
  out.reserve(x_out.size());
  if (x.size() == 2) {
    for (double xx : x_out) out.push_back(y[0] + (y[1] - y[0]) * (xx - x[0]) / (x[1] - x[0]));
    return out;
  }
  gsl_interp* interp = gsl_interp_alloc(gsl_interp_cspline, x.size());
  gsl_interp_accel* acc = gsl_interp_accel_alloc();
  gsl_error_handler_t* old = gsl_set_error_handler_off();
  int const status = gsl_interp_init(interp, x.data(), y.data(), x.size());
  if (status == GSL_SUCCESS) {
    for (double xx : x_out) {
      double const xc = std::clamp(xx, x.front(), x.back());
      out.push_back(gsl_interp_eval(interp, x.data(), y.data(), xc, acc));
    }
  }
  gsl_set_error_handler(old);
  gsl_interp_accel_free(acc);
  gsl_interp_free(interp);
  if (status != GSL_SUCCESS) throw std::runtime_error(fmt::format("spline: {}", gsl_strerror(status)));
  return out;
}

std::vector<double> pchip_resample(std::span<double const> x, std::span<double const> y, std::span<double const> x_out)
{
  if (x.size() != y.size() || x.size() < 4) throw std::runtime_error("pchip: need at least four matching points");
  boost::math::interpolators::pchip<std::vector<double>> f(std::vector<double>(x.begin(), x.end()),
                                                           std::vector<double>(y.begin(), y.end()));
  std::vector<double> out;
  out.reserve(x_out.size());
  for (double xx : x_out) out.push_back(f(std::clamp(xx, x.front(), x.back())));
  return out;
}

RandomWalk random_walk(RandomWalkSpec const& spec)
{
  spec.validate();
  Rng rng(spec.seed);
  RandomWalk w;
  w.knot_t = sample_knot_times(rng, spec.n_knots, spec.dt_min, spec.dt_max);
  w.knot_lambda = sample_knot_values(rng, spec.n_knots, 1.0, spec.dlambda_av, spec.lambda_min, spec.lambda_max);
  if (spec.mode == LoadMode::multiaxial) {
    w.knot_lambda2 = sample_knot_values(rng, spec.n_knots, 1.0, spec.dlambda_av, spec.lambda_min, spec.lambda_max);
    w.knot_phi = sample_knot_values(rng, spec.n_knots, 0.0, spec.dphi_av, -std::numbers::pi, std::numbers::pi);
  }
  double const T = w.knot_t.back();
  for (int k = 1; k <= spec.n_inc; ++k) w.t.push_back(T * k / spec.n_inc);
  w.lambda = spline_sample(w.knot_t, w.knot_lambda, w.t);
  if (spec.mode == LoadMode::multiaxial) {
    w.lambda2 = spline_sample(w.knot_t, w.knot_lambda2, w.t);
    w.phi = spline_sample(w.knot_t, w.knot_phi, w.t);
  }
  return w;
}

std::vector<Tensor2> make_deformation(LoadMode mode, std::span<double const> lambda, std::span<double const> lambda2,
                                      std::span<double const> phi)
{
  std::vector<Tensor2> F;
  F.reserve(lambda.size());
  for (std::size_t n = 0; n < lambda.size(); ++n) {
    double const l = lambda[n];
    if (!(l > 0.0)) throw std::runtime_error(fmt::format("deformation: non-positive stretch at sample {}", n));
    switch (mode) {
      case LoadMode::uniaxial: {
        double const t = 1.0 / std::sqrt(l);
        F.push_back(Tensor2::diag(l, t, t));
        break;
      }
      case LoadMode::equibiaxial: F.push_back(Tensor2::diag(l, l, 1.0 / (l * l))); break;
      case LoadMode::multiaxial: {
        if (lambda2.size() != lambda.size() || phi.size() != lambda.size())
          throw std::runtime_error("deformation: multiaxial mode needs two stretch series and an angle series");
        double const l2 = lambda2[n];
        if (!(l2 > 0.0)) throw std::runtime_error(fmt::format("deformation: non-positive stretch at sample {}", n));
        double const c = std::cos(phi[n]), s = std::sin(phi[n]);
        Tensor2 Q = Tensor2::identity();
        Q(0, 0) = c;
        Q(0, 1) = -s;
        Q(1, 0) = s;
        Q(1, 1) = c;
        F.push_back(Q * Tensor2::diag(l, l2, 1.0 / (l * l2)) * transpose(Q));
        break;
      }
    }
  }
  return F;
}

LoadPath make_path(std::span<double const> t, std::vector<Tensor2> F, std::string name)
{
  if (t.size() != F.size()) throw std::runtime_error("path: time and deformation series differ in length");
  LoadPath p;
  p.name = std::move(name);
  double prev = 0.0;
  for (double tt : t) {
    if (!(tt > prev)) throw std::runtime_error("path: sample times must increase");
    p.dt.push_back(tt - prev);
    prev = tt;
  }
  p.F = std::move(F);
  return p;
}

LoadPath random_walk_path(RandomWalkSpec const& spec, std::string name)
{
  RandomWalk const w = random_walk(spec);
  return make_path(w.t, make_deformation(spec.mode, w.lambda, w.lambda2, w.phi), std::move(name));
}

LoadPath relaxation_path(double lambda_max, double rate, double t_hold, int n_inc)
{
  if (!(lambda_max > 1.0) || !(rate > 0.0) || !(t_hold >= 0.0) || n_inc < 1)
    throw std::runtime_error("relaxation path: invalid parameters");
  double const t_ramp = (lambda_max - 1.0) / rate;
  double const T = t_ramp + t_hold;
  std::vector<double> t, l;
  for (int k = 1; k <= n_inc; ++k) {
    t.push_back(T * k / n_inc);
    l.push_back(t.back() >= t_ramp ? lambda_max : 1.0 + rate * t.back());
  }
  return make_path(t, make_deformation(LoadMode::uniaxial, l),
                   fmt::format("relaxation_{:g}_{:g}", lambda_max, rate));
}

LoadPath ramp_cycle_path(double lambda_max, double rate, int n_inc)
{
  if (!(lambda_max > 1.0) || !(rate > 0.0) || n_inc < 2) throw std::runtime_error("ramp cycle: invalid parameters");
  double const half = (lambda_max - 1.0) / rate;
  std::vector<double> t, l;
  for (int k = 1; k <= n_inc; ++k) {
    double const tt = 2.0 * half * k / n_inc;
    t.push_back(tt);
    l.push_back(k == n_inc ? 1.0 : 1.0 + rate * (tt <= half ? tt : 2.0 * half - tt));
  }
  return make_path(t, make_deformation(LoadMode::uniaxial, l), fmt::format("cycle_{:g}_{:g}", lambda_max, rate));
}

void label_with_model(LoadPath& path, ConstitutiveModel const& model, SimulationOptions const& opts)
{
  PathResult const r = simulate_path(path, model, opts);
  path.P.clear();
  for (auto const& s : r.steps) path.P.push_back(s.P);
}

double initial_shear_modulus(std::span<LoadPath const> paths)
{
  double sum = 0.0;
  int count = 0;
  for (auto const& p : paths) {
    if (!p.labeled() || p.size() == 0) continue;
    double const e11 = p.F[0](0, 0) - 1.0, e22 = p.F[0](1, 1) - 1.0;
    double const d = 2.0 * (2.0 * e11 + e22);
    if (std::abs(d) < 1e-14) continue;
    sum += p.P[0](0, 0) / d;
    ++count;
  }
  if (count == 0) throw std::runtime_error("initial shear modulus: no labeled path with a non-zero first strain");
  return sum / count;
}

void write_path_csv(LoadPath const& path, std::filesystem::path const& file)
{
  std::ofstream out(file);
  if (!out) throw std::runtime_error(fmt::format("cannot write {}", file.string()));
  out << "step,dt";
  for (auto n : tensor_names) out << ",F" << n;
  if (path.labeled())
    for (auto n : tensor_names) out << ",P" << n;
  out << '\n';
  for (std::size_t k = 0; k < path.size(); ++k) {
    out << k + 1 << ',' << fmt::format("{:.17g}", path.dt[k]);
    for (double x : path.F[k].a) out << ',' << fmt::format("{:.17g}", x);
    if (path.labeled())
      for (double x : path.P[k].a) out << ',' << fmt::format("{:.17g}", x);
    out << '\n';
  }
}

LoadPath read_path_csv(std::filesystem::path const& file)
{
  std::ifstream in(file);
  if (!in) throw std::runtime_error(fmt::format("cannot open {}", file.string()));
  auto fail = [&](int line, std::string const& what) {
    return std::runtime_error(fmt::format("{}:{}: {}", file.string(), line, what));
  };

  std::string line;
  if (!std::getline(in, line)) throw fail(1, "missing header");
  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    for (std::string col; std::getline(ss, col, ',');) header.push_back(col);
  }
  bool const labeled = header.size() == 20;
  if (header.size() != 11 && !labeled) throw fail(1, fmt::format("expected 11 or 20 columns, found {}", header.size()));
  if (header[0] != "step" || header[1] != "dt") throw fail(1, "header must start with step,dt");
  for (int k = 0; k < 9; ++k) {
    if (header[2 + k] != fmt::format("F{}", tensor_names[k])) throw fail(1, fmt::format("unexpected column {}", header[2 + k]));
    if (labeled && header[11 + k] != fmt::format("P{}", tensor_names[k]))
      throw fail(1, fmt::format("unexpected column {}", header[11 + k]));
  }

  LoadPath p;
  p.name = file.stem().string();
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<double> v;
    char const* b = line.data();
    char const* e = b + line.size();
    while (b <= e) {
      char const* comma = std::find(b, e, ',');
      double x;
      auto [ptr, ec] = std::from_chars(b, comma, x);
      if (ec != std::errc() || ptr != comma)
        throw fail(lineno, fmt::format("cannot parse field {} '{}'", v.size() + 1, std::string(b, comma)));
      v.push_back(x);
      b = comma + 1;
    }
    if (v.size() != header.size())
      throw fail(lineno, fmt::format("expected {} fields, found {}", header.size(), v.size()));
    if (!(v[1] > 0.0)) throw fail(lineno, "time step must be positive");
    p.dt.push_back(v[1]);
    Tensor2 F, P;
    for (int k = 0; k < 9; ++k) F.a[k] = v[2 + k];
    p.F.push_back(F);
    if (labeled) {
      for (int k = 0; k < 9; ++k) P.a[k] = v[11 + k];
      p.P.push_back(P);
    }
  }
  if (p.size() == 0) throw fail(lineno, "no data rows");
  return p;
}

void write_dataset(Dataset const& data, std::filesystem::path const& dir, nlohmann::json const& meta)
{
  std::filesystem::create_directories(dir);
  nlohmann::json manifest{{"schema_version", 1}, {"paths", nlohmann::json::array()}};
  if (!meta.is_null()) manifest["meta"] = meta;
  auto emit = [&](std::vector<LoadPath> const& paths, char const* split) {
    for (std::size_t k = 0; k < paths.size(); ++k) {
      std::string const name = paths[k].name.empty() ? fmt::format("{}_{}", split, k) : paths[k].name;
      std::string const file = name + ".csv";
      write_path_csv(paths[k], dir / file);
      manifest["paths"].push_back({{"name", name}, {"file", file}, {"split", split}});
    }
  };
  emit(data.calibration, "calibration");
  emit(data.test, "test");
  std::ofstream out(dir / "manifest.json");
  if (!out) throw std::runtime_error(fmt::format("cannot write manifest in {}", dir.string()));
  out << manifest.dump(2) << '\n';
}

Dataset load_dataset(std::filesystem::path const& manifest)
{
  std::filesystem::path const file =
      std::filesystem::is_directory(manifest) ? manifest / "manifest.json" : manifest;
  std::ifstream in(file);
  if (!in) throw std::runtime_error(fmt::format("cannot open manifest {}", file.string()));
  nlohmann::json j;
  try {
    in >> j;
  } catch (nlohmann::json::exception const& e) {
    throw std::runtime_error(fmt::format("manifest {}: {}", file.string(), e.what()));
  }
  Dataset d;
  for (auto const& entry : j.at("paths")) {
    LoadPath p = read_path_csv(file.parent_path() / entry.at("file").get<std::string>());
    p.name = entry.value("name", p.name);
    std::string const split = entry.value("split", "calibration");
    if (split == "calibration")
      d.calibration.push_back(std::move(p));
    else if (split == "test")
      d.test.push_back(std::move(p));
    else
      throw std::runtime_error(fmt::format("manifest {}: unknown split '{}'", file.string(), split));
  }
  return d;
}

namespace {

LoadPath generate_path(nlohmann::json const& entry, std::uint64_t seed_offset)
{
  std::string const name = entry.at("name").get<std::string>();
  if (entry.contains("walk")) {
    RandomWalkSpec s = entry.at("walk").get<RandomWalkSpec>();
    s.seed += seed_offset;
    return random_walk_path(s, name);
  }
  LoadPath p;
  if (entry.contains("relaxation")) {
    auto const& r = entry.at("relaxation");
    p = relaxation_path(r.at("lambda_max"), r.at("rate"), r.at("t_hold"), r.at("n_inc"));
  } else if (entry.contains("cycle")) {
    auto const& r = entry.at("cycle");
    p = ramp_cycle_path(r.at("lambda_max"), r.at("rate"), r.at("n_inc"));
  } else {
    throw std::runtime_error(fmt::format("path '{}': expected one of walk, relaxation, cycle", name));
  }
  p.name = name;
  return p;
}

}  // namespace

Dataset generate_dataset(nlohmann::json const& spec, ConstitutiveModel const& model, SimulationOptions const& opts,
                         std::uint64_t seed_offset)
{
  if (!spec.contains("paths") || !spec.at("paths").is_array() || spec.at("paths").empty())
    throw std::runtime_error("generation spec: no paths to generate");
  Dataset data;
  try {
    for (auto const& entry : spec.at("paths")) {
      LoadPath p = generate_path(entry, seed_offset);
      label_with_model(p, model, opts);
      std::string const split = entry.value("split", "calibration");
      if (split == "calibration")
        data.calibration.push_back(std::move(p));
      else if (split == "test")
        data.test.push_back(std::move(p));
      else
        throw std::runtime_error(fmt::format("path '{}': unknown split '{}'", p.name, split));
    }
  } catch (nlohmann::json::exception const& e) {
    throw std::runtime_error(fmt::format("generation spec: {}", e.what()));
  }
  return data;
}

}  // namespace viscopann

// qlm: command-line front end for the quasi-local mass library.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "qlm/io.hpp"
#include "qlm/validation.hpp"

namespace {

using namespace qlm;

enum ExitCode { ok = 0, validation_failed = 1, input_error = 2, solver_failure = 3 };

struct RunConfig {
  int resolution = 48;
  double tol = 1e-6;       // optimizer EL residual tolerance
  double weyl_tol = 1e-11;
  std::string output_dir = ".";
  unsigned seed = 42;
  int threads = 1;

  void load(const std::string& path) {
    const Json j = read_json_file(path);
    if (!j.is_object()) throw InputError("config '" + path + "' must be a JSON object");
    for (const auto& [key, v] : j.items()) {
      if (key == "resolution") resolution = v.get<int>();
      else if (key == "tol") tol = v.get<double>();
      else if (key == "weyl_tol") weyl_tol = v.get<double>();
      else if (key == "output_dir") output_dir = v.get<std::string>();
      else if (key == "seed") seed = v.get<unsigned>();
      else throw InputError("config: unknown key '" + key + "'");
    }
  }
  void validate() const {
    if (resolution < 8) throw InputError("resolution must be >= 8");
    if (!(tol > 0.0) || !(weyl_tol > 0.0)) throw InputError("tolerances must be positive");
  }
  WeylOptions weyl() const {
    WeylOptions w;
    w.tol = weyl_tol;
    return w;
  }
  GridPtr grid() const { return SphereGrid::make(resolution, 2 * resolution); }
  std::string path(const std::string& name) const {
    const std::filesystem::path p(name);
    return p.is_absolute() ? name : (std::filesystem::path(output_dir) / p).string();
  }
};

/// Deterministic text for a double in CSV output.
std::string num(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

void emit(const std::string& text, const std::string& output, const RunConfig& cfg) {
  if (output.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(cfg.path(output), std::ios::binary);
  if (!out) throw InputError("cannot open '" + cfg.path(output) + "' for writing");
  out << text;
}

Json grid_json(const SphereGrid& g) { return {{"n_theta", g.n_theta()}, {"n_phi", g.n_phi()}}; }

Json breakdown_json(const EnergyBreakdown& b) {
  return {{"reference_term", b.reference_term},
          {"physical_term", b.physical_term},
          {"energy", b.energy},
          {"isometry_residual", b.isometry_residual}};
}

/// "l,m,amp" -> amp * Y_lm (Schmidt normalization).
ScalarField parse_mode(const GridPtr& g, const std::string& spec) {
  std::istringstream is(spec);
  int l = 0, m = 0;
  double amp = 0.0;
  char c1 = 0, c2 = 0;
  if (!(is >> l >> c1 >> m >> c2 >> amp) || c1 != ',' || c2 != ',' || l < 0 || std::abs(m) > l)
    throw InputError("mode '" + spec + "' must be l,m,amplitude with |m| <= l");
  return harmonic_field(g, l, m, amp);
}

// ---------------------------------------------------------------- compute

struct ComputeArgs {
  std::string input, which, output;
  bool tau_zero = false;
};

int cmd_compute(const ComputeArgs& a, const RunConfig& cfg) {
  const SurfaceDataFile f = read_surface_file(a.input);
  const SurfaceData& d = f.data;
  Json r;
  r["which"] = a.which;
  r["grid"] = grid_json(*d.grid());
  if (a.which == "hawking") {
    r["value"] = hawking_mass(d);
    r["area"] = area(d.sigma);
  } else if (a.which == "byly") {
    const EmbeddingR3 x = solve_weyl(d.sigma, cfg.weyl());
    const EmbeddedGeometry geo = extract_geometry(x);
    const double ref = detail::inv_8pi * integrate(d.sigma, geo.H_hat);
    const double phys = detail::inv_8pi * integrate(d.sigma, d.H_norm);
    r["value"] = ref - phys;
    r["breakdown"] = {{"reference_term", ref}, {"physical_term", phys}};
    r["diagnostics"] = {{"isometry_residual", x.residual}};
  } else {
    if (!f.tau && !a.tau_zero)
      throw InputError("wangyau needs a time function: the file has no 'tau' and --tau-zero is not set");
    const TimeFunction t = f.tau ? *f.tau : TimeFunction::zero(d.grid());
    EnergyEvaluator ev(d.grid(), cfg.weyl());
    const auto e = ev.evaluate(d, t, true);
    r["value"] = e.breakdown.energy;
    r["tau_source"] = f.tau ? "file" : "zero";
    r["breakdown"] = breakdown_json(e.breakdown);
    r["diagnostics"] = {{"isometry_residual", e.breakdown.isometry_residual},
                        {"el_residual_norm", el_residual_norm(d.sigma, e.el)}};
  }
  emit(dump_json(r), a.output, cfg);
  return ok;
}

// ---------------------------------------------------------------- catalog

struct CatalogArgs {
  std::string kind, output;
  double m = 1.0, r = 4.0;
  double bump = 0.1;
  int l = 1, order = 0;
  double a = 1.0, b = 1.1, c = 1.2;
};

int cmd_catalog(const CatalogArgs& a, const RunConfig& cfg) {
  const GridPtr g = cfg.grid();
  SurfaceDataFile f;
  Json ref;
  std::string out = a.output;
  if (a.kind == "schwarzschild") {
    const SphericalSphereData s = schwarzschild_sphere_data({a.m, a.r}, g);
    if (!s.data) throw DomainError("catalog: r = 2m is the horizon, where |H| = 0; no surface data exported");
    f.data = *s.data;
    f.metadata = {{"kind", "schwarzschild"}, {"m", a.m}, {"r", a.r}};
    ref = {{"m_hawking", s.m_hawking}, {"M_byly", s.M_byly}, {"grad_r", s.grad_r}};
    if (out.empty()) out = "schwarzschild.json";
  } else {
    MinkowskiSurfaceSpec spec;
    if (a.kind == "lightcone") spec = MinkowskiSurfaceSpec::lightcone_bump(a.bump, a.l, a.order);
    else spec = MinkowskiSurfaceSpec::flat_r3(a.a, a.b, a.c);
    const MinkowskiSurface s = minkowski_surface_data(spec, g);
    f.data = s.data;
    f.tau = s.tau_bar;
    if (a.kind == "lightcone") {
      f.metadata = {{"kind", "lightcone"}, {"bump", a.bump}, {"l", a.l}, {"m", a.order}};
      const double defect =
          (gauss_curvature(s.data.sigma).values - 0.25 * s.data.H_norm.values.square()).abs().maxCoeff();
      ref = {{"hawking", 0.0},
             {"wang_yau_at_tau", 0.0},
             {"curvature_identity_defect", defect},
             {"curvature_identity_pass", defect <= 1e-7}};
    } else {
      f.metadata = {{"kind", "flat"}, {"a", a.a}, {"b", a.b}, {"c", a.c}};
      ref = {{"wang_yau_at_tau", 0.0}};
    }
    if (out.empty()) out = a.kind + ".json";
  }
  const std::string path = cfg.path(out);
  write_surface_file(path, f);
  const std::filesystem::path p(path);
  const std::string sidecar = (p.parent_path() / (p.stem().string() + ".reference.json")).string();
  write_json_file(sidecar, {{"surface", p.filename().string()}, {"reference", ref}});
  std::cout << dump_json({{"surface", path}, {"reference", sidecar}});
  return ok;
}

// ---------------------------------------------------------------- optimal

struct OptimalArgs {
  std::string input, output;
  std::vector<std::string> modes;
  bool from_file = false, hessian = false;
  int max_iterations = 200;
  int hessian_modes = 15;
};

TimeFunction initial_tau(const SurfaceDataFile& f, bool from_file, const std::vector<std::string>& modes) {
  const GridPtr& g = f.data.grid();
  ScalarField tau = ScalarField::zero(g);
  if (from_file) {
    if (!f.tau) throw InputError("--tau0-from-file given but the file has no 'tau'");
    tau = f.tau->tau;
  }
  for (const auto& m : modes) tau = tau + parse_mode(g, m);
  return TimeFunction{tau}.mean_removed();
}

int cmd_optimal(const OptimalArgs& a, const RunConfig& cfg) {
  const SurfaceDataFile f = read_surface_file(a.input);
  const SurfaceData& d = f.data;
  OptimalOptions o;
  o.tol = cfg.tol;
  o.max_iterations = a.max_iterations;
  o.weyl = cfg.weyl();
  const OptimalSolveResult res = solve_optimal(d, initial_tau(f, a.from_file, a.modes), o);
  Json r;
  r["grid"] = grid_json(*d.grid());
  r["converged"] = res.converged;
  r["iterations"] = res.iterations;
  r["energy"] = res.energy;
  r["el_residual_norm"] = res.el_residual_norm;
  r["el_residual_raw_norm"] = res.el_residual_raw_norm;
  r["tau_star_linf"] = res.tau_star.tau.max_abs();
  r["breakdown"] = breakdown_json(res.breakdown);
  r["energy_history"] = res.energy_history;
  r["tau_star"] = detail::array_to_json(res.tau_star.tau.values);
  if (!res.converged) {
    std::cerr << "optimal: iteration cap " << a.max_iterations << " reached with EL residual " << res.el_residual_norm
              << " (tolerance " << o.tol << ")\n";
    emit(dump_json(r), a.output, cfg);
    return solver_failure;
  }
  if (a.hessian) {
    const HessianReport h = hessian_check(d, res.tau_star, a.hessian_modes, 1e-3, cfg.weyl(), cfg.threads);
    r["hessian"] = {{"eigenvalues", std::vector<double>(h.eigenvalues.begin(), h.eigenvalues.end())},
                    {"min_eigenvalue", h.min_eigenvalue},
                    {"symmetry_error", h.symmetry_error},
                    {"degrees", h.degrees}};
  }
  emit(dump_json(r), a.output, cfg);
  return ok;
}

// ---------------------------------------------------------------- validate

struct ValidateArgs {
  std::string only, output;
};

int cmd_validate(const ValidateArgs& a, const RunConfig& cfg) {
  ValidationConfig v;
  v.n_theta = cfg.resolution;
  v.only = a.only;
  v.seed = cfg.seed;
  v.threads = cfg.threads;
  if (!v.only.empty()) {
    const auto gs = ValidationSuite::groups();
    if (std::find(gs.begin(), gs.end(), v.only) == gs.end())
      throw InputError("--only: unknown check group '" + v.only + "'");
  }
  const auto rows = run_validation(v);
  emit(ValidationSuite::csv(rows), a.output, cfg);
  const bool all = std::all_of(rows.begin(), rows.end(), [](const CheckRow& r) { return r.pass; });
  return all && !rows.empty() ? ok : validation_failed;
}

// ---------------------------------------------------------------- plotdata

struct PlotArgs {
  std::string kind, output, input, range = "2.5:20";
  double m = 1.0, r0 = 4.0, E = 1.0, s_max = 0.05;
  int steps = 40;
  std::string mode = "2,0,1";
};

std::pair<double, double> parse_range(const std::string& s) {
  const auto colon = s.find(':');
  try {
    if (colon == std::string::npos) throw std::invalid_argument("no colon");
    return {std::stod(s.substr(0, colon)), std::stod(s.substr(colon + 1))};
  } catch (const std::exception&) {
    throw InputError("range '" + s + "' must be lo:hi");
  }
}

int cmd_plotdata(const PlotArgs& a, const RunConfig& cfg) {
  std::ostringstream os;
  if (a.steps < 2) throw InputError("--steps must be >= 2");
  if (a.kind == "mass-curves") {
    const auto [lo, hi] = parse_range(a.range);
    if (!(lo > 2.0 * a.m) || !(hi > lo)) throw DomainError("mass-curves: need 2m < lo < hi");
    const GridPtr g = cfg.grid();
    os << "r,hawking,byly\n";
    for (int k = 0; k <= a.steps; ++k) {
      const double r = lo + (hi - lo) * k / a.steps;
      const SurfaceData d = *schwarzschild_sphere_data({a.m, r}, g).data;
      os << num(r) << ',' << num(hawking_mass(d)) << ',' << num(byly_mass(d, cfg.weyl())) << '\n';
    }
  } else if (a.kind == "shi-tam") {
    const double u0 = 1.0 / std::sqrt(1.0 - 2.0 * a.E / a.r0);
    if (!std::isfinite(u0)) throw DomainError("shi-tam: need E < r0/2");
    const QuasiSphericalState s = shi_tam_flow(a.r0, u0);
    const EOfRTable t = e_of_r(s, a.steps + 1);
    os << "r,e,closed_form\n";
    for (std::size_t k = 0; k < t.r.size(); ++k)
      os << num(t.r[k]) << ',' << num(t.e[k]) << ',' << num(t.r[k] * (1.0 - std::sqrt(1.0 - 2.0 * a.E / t.r[k])))
         << '\n';
  } else {
    if (a.input.empty()) throw InputError("stability needs --input");
    const SurfaceDataFile f = read_surface_file(a.input);
    const SurfaceData& d = f.data;
    OptimalOptions o;
    o.tol = cfg.tol;
    o.weyl = cfg.weyl();
    const OptimalSolveResult res =
        solve_optimal(d, f.tau ? f.tau->mean_removed() : TimeFunction::zero(d.grid()), o);
    if (!res.converged) throw ConvergenceError("stability: optimal solve did not converge");
    const ScalarField dir = parse_mode(d.grid(), a.mode);
    EnergyEvaluator ev(d.grid(), cfg.weyl());
    os << "s,energy\n";
    for (int k = 0; k <= a.steps; ++k) {
      const double s = -a.s_max + 2.0 * a.s_max * k / a.steps;
      os << num(s) << ',' << num(ev.energy(d, {res.tau_star.tau + s * dir}).energy) << '\n';
    }
  }
  emit(os.str(), a.output, cfg);
  return ok;
}

int threads_from_env() {
  const char* v = std::getenv("QLM_THREADS");
  if (!v || !*v) return 1;
  char* end = nullptr;
  const long n = std::strtol(v, &end, 10);
  if (*end != '\0' || n < 1 || n > 1024)
    throw InputError(std::string("QLM_THREADS='") + v + "' is not a thread count");
  return static_cast<int>(n);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quasi-local mass and energy of closed spacelike 2-surfaces"};
  app.require_subcommand(1);
  app.fallthrough();
  RunConfig cfg;
  std::string config_path, output_dir;
  int resolution = 0;
  std::optional<unsigned> seed;
  app.add_option("--config", config_path, "JSON run configuration")->check(CLI::ExistingFile);
  app.add_option("--resolution", resolution, "n_theta (n_phi = 2 n_theta)");
  app.add_option("--output-dir", output_dir, "Directory for relative output paths");

  ComputeArgs ca;
  auto* compute = app.add_subcommand("compute", "Evaluate a mass or energy for a surface data file");
  compute->add_option("--input", ca.input)->required()->check(CLI::ExistingFile);
  compute->add_option("--which", ca.which)->required()->check(CLI::IsMember({"hawking", "byly", "wangyau"}));
  compute->add_flag("--tau-zero", ca.tau_zero, "Use tau = 0 when the file carries none");
  compute->add_option("--output", ca.output);

  CatalogArgs cat;
  auto* catalog = app.add_subcommand("catalog", "Write catalog surface data and closed-form references");
  catalog->add_option("kind", cat.kind)->required()->check(CLI::IsMember({"schwarzschild", "lightcone", "flat"}));
  catalog->add_option("--m", cat.m, "Schwarzschild mass parameter");
  catalog->add_option("--r", cat.r, "Areal radius");
  catalog->add_option("--bump", cat.bump, "Light-cone cut log-amplitude");
  catalog->add_option("--l", cat.l, "Bump degree");
  catalog->add_option("--order", cat.order, "Bump order m");
  catalog->add_option("--a", cat.a);
  catalog->add_option("--b", cat.b);
  catalog->add_option("--c", cat.c);
  catalog->add_option("--output", cat.output);

  OptimalArgs oa;
  auto* optimal = app.add_subcommand("optimal", "Solve for the optimal time function");
  optimal->add_option("--input", oa.input)->required()->check(CLI::ExistingFile);
  optimal->add_option("--tau0-mode", oa.modes, "Add amp * Y_lm to tau0, as l,m,amp (repeatable)");
  optimal->add_flag("--tau0-from-file", oa.from_file, "Start from the file's tau");
  optimal->add_option("--max-iterations", oa.max_iterations)->check(CLI::PositiveNumber);
  optimal->add_flag("--hessian", oa.hessian, "Append the reduced Hessian spectrum");
  optimal->add_option("--hessian-modes", oa.hessian_modes)->check(CLI::PositiveNumber);
  optimal->add_option("--output", oa.output);

  ValidateArgs va;
  auto* validate = app.add_subcommand("validate", "Run the acceptance suite; CSV summary");
  validate->add_option("--only", va.only, "Restrict to one check group");
  validate->add_option("--output", va.output);
  validate->add_option("--seed", seed);

  PlotArgs pa;
  auto* plot = app.add_subcommand("plotdata", "Emit CSV data for plots");
  plot->add_option("kind", pa.kind)->required()->check(CLI::IsMember({"mass-curves", "shi-tam", "stability"}));
  plot->add_option("--m", pa.m);
  plot->add_option("--r", pa.range, "Radius range lo:hi");
  plot->add_option("--r0", pa.r0);
  plot->add_option("--E", pa.E);
  plot->add_option("--input", pa.input)->check(CLI::ExistingFile);
  plot->add_option("--mode", pa.mode, "Perturbation direction l,m,amp");
  plot->add_option("--s-max", pa.s_max);
  plot->add_option("--steps", pa.steps);
  plot->add_option("--output", pa.output);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? ok : input_error;
  }

  try {
    if (!config_path.empty()) cfg.load(config_path);
    if (resolution > 0) cfg.resolution = resolution;
    if (!output_dir.empty()) cfg.output_dir = output_dir;
    if (seed) cfg.seed = *seed;
    cfg.threads = threads_from_env();
    cfg.validate();
    if (*compute) return cmd_compute(ca, cfg);
    if (*catalog) return cmd_catalog(cat, cfg);
    if (*optimal) return cmd_optimal(oa, cfg);
    if (*validate) return cmd_validate(va, cfg);
    return cmd_plotdata(pa, cfg);
  } catch (const ConvergenceError& e) {
    std::cerr << "solver failure: " << e.what() << "\n";
    return solver_failure;
  } catch (const GeometryError& e) {
    std::cerr << "solver failure: " << e.what() << "\n";
    return solver_failure;
  } catch (const qlm::Error& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return input_error;
  } catch (const Json::exception& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return input_error;
  }
}

#include "abreu/cli_io.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "abreu/duality.hpp"
#include "abreu/monge_ampere.hpp"

namespace abreu::io {

namespace fs = std::filesystem;

namespace {

// ---- function specs -------------------------------------------------------

struct Spec {
  std::string name;
  std::vector<std::string> positional;
  std::map<std::string, std::string> named;
};

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t");
  if (a == std::string::npos) return "";
  return s.substr(a, s.find_last_not_of(" \t") - a + 1);
}

Spec parse_spec(const std::string& text) {
  Spec s;
  const auto colon = text.find(':');
  s.name = trim(text.substr(0, colon));
  if (s.name.empty()) throw ConfigError("empty function spec");
  if (colon == std::string::npos) return s;
  std::stringstream ss(text.substr(colon + 1));
  for (std::string item; std::getline(ss, item, ',');) {
    item = trim(item);
    const auto eq = item.find('=');
    if (eq == std::string::npos) {
      if (!s.named.empty()) throw ConfigError("positional argument after key=value in '" + text + "'");
      s.positional.push_back(item);
    } else {
      s.named[trim(item.substr(0, eq))] = trim(item.substr(eq + 1));
    }
  }
  return s;
}

double parse_number(const std::string& t, const std::string& what) {
  double v = 0.0;
  const auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || p != t.data() + t.size() || t.empty()) throw ConfigError("bad number '" + t + "' in " + what);
  return v;
}

// Binds the spec's arguments to named parameters with defaults. Parameters
// without a default (NaN) are required.
std::vector<double> bind(const Spec& s, const std::vector<std::pair<std::string, double>>& params) {
  if (s.positional.size() > params.size()) throw ConfigError("too many arguments for '" + s.name + "'");
  std::vector<double> v;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& [key, def] = params[i];
    const auto it = s.named.find(key);
    if (i < s.positional.size()) {
      if (it != s.named.end()) throw ConfigError("argument '" + key + "' given twice for '" + s.name + "'");
      v.push_back(parse_number(s.positional[i], s.name));
    } else if (it != s.named.end()) {
      v.push_back(parse_number(it->second, s.name));
    } else if (std::isnan(def)) {
      throw ConfigError("'" + s.name + "' needs argument '" + key + "'");
    } else {
      v.push_back(def);
    }
  }
  for (const auto& [key, val] : s.named) {
    bool known = false;
    for (const auto& pr : params) known = known || pr.first == key;
    if (!known) throw ConfigError("unknown argument '" + key + "' for '" + s.name + "'");
  }
  return v;
}

constexpr double kRequired = std::numeric_limits<double>::quiet_NaN();

// ---- config ---------------------------------------------------------------

Json common_defaults() {
  return {{"n", 33}, {"out", "out"}, {"tol", 1e-7}, {"jobs", 1}, {"seed", 0}};
}

Json rc_defaults() {
  Json j = common_defaults();
  j.update({{"domain", "disk:r=2,cx=1.5,cy=1.5"},
            {"inner", "box:1,2,1,2"},
            {"q", 2.0},
            {"gamma", "const:1"},
            {"phi", "zero"},
            {"psi", "const:1"},
            {"f0", "linear"},
            {"coupling", "newton"},
            {"max_outer", 200}});
  return j;
}

bool same_kind(const Json& def, const Json& v) {
  if (def.is_number_integer()) return v.is_number_integer();
  if (def.is_number()) return v.is_number();
  return def.type() == v.type();
}

Json parse_flag(const Json& def, const std::string& key, const std::string& text) {
  if (def.is_string()) return text;
  if (def.is_boolean()) {
    if (text == "true" || text == "1" || text.empty()) return true;
    if (text == "false" || text == "0") return false;
    throw ConfigError("--" + key + " expects true or false");
  }
  if (def.is_number_integer()) {
    long long v = 0;
    const auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || p != text.data() + text.size() || text.empty())
      throw ConfigError("--" + key + " expects an integer, got '" + text + "'");
    return v;
  }
  return parse_number(text, "--" + key);
}

Coupling coupling_of(const Json& cfg) {
  const std::string c = cfg.at("coupling");
  if (c == "picard") return Coupling::kPicard;
  if (c == "newton") return Coupling::kNewton;
  throw ConfigError("coupling must be picard or newton");
}

AbreuOptions solver_options(const Json& cfg) {
  AbreuOptions o;
  o.coupling = coupling_of(cfg);
  o.tol = cfg.at("tol");
  o.max_outer = cfg.at("max_outer");
  if (!(o.tol > 0.0) || o.max_outer < 1) throw ConfigError("tol must be positive and max_outer at least 1");
  return o;
}

int grid_n(const Json& cfg) {
  const int n = cfg.at("n");
  if (n < 5) throw ConfigError("n must be at least 5");
  return n;
}

fs::path out_dir(const Json& cfg) {
  const fs::path p = cfg.at("out").get<std::string>();
  fs::create_directories(p);
  return p;
}

Json apriori_json(const AprioriChecks& a) {
  return {{"sup_abs_u", a.sup_abs_u},       {"sup_grad_u", a.sup_grad_u},         {"min_det", a.min_det},
          {"max_det", a.max_det},           {"min_w_interior", a.min_w_interior}, {"min_w_boundary", a.min_w_boundary},
          {"grad_bound_ok", a.grad_bound_ok}, {"argmax_grad", a.argmax_grad}};
}

double sup_error(const ScalarField& f, const PlaneFn& exact) {
  const Grid2D& g = *f.grid();
  double m = 0.0;
  for (int k : g.inside_nodes()) m = std::max(m, std::abs(f[k] - exact(g.x(g.ix(k)), g.y(g.jy(k)))));
  return m;
}

void write_timing(const fs::path& dir, double seconds) { write_json(dir / "timing.json", {{"wallclock", seconds}}); }

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Writes u.fld, w.fld and report.json of a Rochet-Chone run into dir.
void write_rc_run(const fs::path& dir, const RCApproxRun& run, const Json& cfg, const PlaneFn& phi) {
  fs::create_directories(dir);
  if (run.u.grid()) {
    write_field(dir / "u.fld", run.u, cfg.at("domain"), cfg.at("inner"));
    write_field(dir / "w.fld", run.w, cfg.at("domain"), cfg.at("inner"));
  }
  Json rep = report_json(run.report);
  rep["eps"] = run.eps;
  rep["penalty_l2"] = run.penalty_l2;
  rep["energy"] = {{"total", run.energy.total},     {"flux", run.energy.flux},
                   {"lower", run.energy.lower},     {"logdet", run.energy.logdet},
                   {"penalty", run.energy.penalty}, {"floor_active", run.energy.floor_active}};
  if (run.u.grid()) rep["convex"] = assert_convex(run.u, phi).ok;
  write_json(dir / "report.json", rep);
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> v;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');) v.push_back(parse_number(trim(item), "eps_list"));
  if (v.empty()) throw ConfigError("eps_list is empty");
  return v;
}

std::string shortest(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, r.ptr);
}

// ---- commands -------------------------------------------------------------

int cmd_solve_abreu(const Json& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  const AbreuProblem p = abreu_problem(cfg);
  const AbreuSolution s = solve_abreu(cfg);
  const GridPtr& grid = s.u.grid();
  const fs::path dir = out_dir(cfg);
  write_field(dir / "u.fld", s.u, cfg.at("domain"));
  write_field(dir / "w.fld", s.w, cfg.at("domain"));
  Json rep = report_json(s.report);
  rep["h"] = grid->h();
  if (cfg.at("manufactured").get<bool>()) {
    const Manufactured m = manufactured_exponential(p.domain, p.q, p.delta);
    rep["err_u"] = sup_error(s.u, m.u_exact);
    rep["err_w"] = sup_error(s.w, m.w_exact);
  }
  write_json(dir / "report.json", rep);
  write_json(dir / "config.json", cfg);
  write_timing(dir, seconds_since(t0));
  return s.report.converged ? kOk : kSolverFailure;
}

int cmd_solve_rc(const Json& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  const RCProblem p = rc_problem(cfg);
  const RCApproxRun run = solve_rc(cfg);
  const fs::path dir = out_dir(cfg);
  write_rc_run(dir, run, cfg, p.phi);
  write_json(dir / "config.json", cfg);
  write_timing(dir, seconds_since(t0));
  return run.report.converged ? kOk : kSolverFailure;
}

OracleOptions oracle_options(const Json& cfg, const char* iters, const char* sweeps) {
  OracleOptions o;
  o.iters = cfg.at(iters);
  o.sweeps = cfg.at(sweeps);
  if (o.iters < 0 || o.sweeps < 1) throw ConfigError("oracle iterations must be >= 0 and sweeps >= 1");
  return o;
}

int cmd_sweep(const Json& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  const RCProblem p = rc_problem(cfg);
  const std::vector<double> eps_list = parse_list(cfg.at("eps_list"));
  for (std::size_t i = 0; i < eps_list.size(); ++i) {
    if (!(eps_list[i] > 0.0 && eps_list[i] < 1.0)) throw ConfigError("every eps must lie in (0, 1)");
    if (i > 0 && !(eps_list[i] < eps_list[i - 1])) throw ConfigError("eps_list must strictly decrease");
  }
  const int n = grid_n(cfg);
  if (n > 33) throw ConfigError("sweep runs the oracle on its grid: n must be <= 33");
  const int jobs = cfg.at("jobs");
  if (jobs < 1) throw ConfigError("jobs must be positive");
  try {
    validate(p, *Grid2D::build(p.domain, n));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  const ConvergenceTable t =
      epsilon_sweep(p, eps_list, n, solver_options(cfg), oracle_options(cfg, "oracle_iters", "oracle_sweeps"), jobs);
  const fs::path dir = out_dir(cfg);
  std::ofstream csv(dir / "sweep.csv");
  csv << "eps,dist_oracle,penalty_l2,energy,outer_iters,converged\n";
  bool all = true;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const SweepRow& r = t.rows[i];
    csv << shortest(r.eps) << ',' << shortest(r.dist_oracle) << ',' << shortest(r.penalty_l2) << ','
        << shortest(r.energy) << ',' << r.outer_iters << ',' << (r.converged ? 1 : 0) << '\n';
    all = all && r.converged;
    write_rc_run(dir / ("eps_" + shortest(r.eps)), t.runs[i], cfg, p.phi);
  }
  write_field(dir / "oracle_u.fld", t.oracle.u, cfg.at("domain"), cfg.at("inner"));
  write_json(dir / "oracle.json", {{"objective", t.oracle.objective},
                                   {"iterations", t.oracle.iterations},
                                   {"max_violation", t.oracle.max_violation}});
  write_json(dir / "config.json", cfg);
  write_timing(dir, seconds_since(t0));
  return all ? kOk : kSolverFailure;
}

int cmd_oracle_min(const Json& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  const RCProblem p = rc_problem(cfg);
  const int n = grid_n(cfg);
  if (n > 33) throw ConfigError("oracle-min: n must be <= 33");
  const GridPtr grid = Grid2D::build(p.domain, n);
  OracleResult r;
  try {
    validate(p, *grid);
    r = oracle_minimize(p, grid, oracle_options(cfg, "iters", "sweeps"));
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  const fs::path dir = out_dir(cfg);
  write_field(dir / "u.fld", r.u, cfg.at("domain"), cfg.at("inner"));
  write_json(dir / "report.json", {{"objective", r.objective},
                                   {"iterations", r.iterations},
                                   {"max_violation", r.max_violation},
                                   {"history", r.history}});
  write_json(dir / "config.json", cfg);
  write_timing(dir, seconds_since(t0));
  return r.max_violation <= 1e-8 ? kOk : kSolverFailure;
}

int cmd_check_duality(const Json& cfg) {
  const fs::path run = cfg.at("run").get<std::string>();
  if (run.empty()) throw ConfigError("check-duality needs --run <dir>");
  if (!fs::exists(run / "config.json") || !fs::exists(run / "u.fld"))
    throw ConfigError("run directory lacks config.json or u.fld: " + run.string());
  const Json rc = read_json(run / "config.json");
  const AbreuProblem p = abreu_problem(rc);
  const ScalarField u = read_field(run / "u.fld").field;
  const double h = u.grid()->h();
  const int m = cfg.at("m").get<int>() > 0 ? cfg.at("m").get<int>() : u.grid()->nx();
  const double lim_inv = cfg.at("involution_factor").get<double>() * h;
  const double lim_det = cfg.at("detrec_factor").get<double>() * h;
  const double lim_lt = cfg.at("max_lt"), lim_plt = cfg.at("max_plt");

  Json rep;
  bool pass = true;
  const auto check = [&](const std::string& name, double limit, auto&& compute) {
    Json c{{"limit", limit}};
    try {
      const double v = compute();
      c["value"] = v;
      c["pass"] = v <= limit;
    } catch (const std::exception& e) {
      c["value"] = nullptr;
      c["pass"] = false;
      c["error"] = e.what();
    }
    pass = pass && c["pass"].get<bool>();
    rep[name] = c;
  };
  check("involution", lim_inv, [&] { return involution_error(legendre_transform(u, m, ConjugateMethod::kDiscreteMax, p.phi)); });
  check("det_reciprocal", lim_det, [&] {
    return det_reciprocal_error(legendre_transform(u, m, ConjugateMethod::kSmoothMap, p.phi), p.phi);
  });
  check("lt_residual", lim_lt, [&] { return lt_dual_residual(u, p.q, p.delta, p.F0z, m, p.phi).sup(); });
  check("plt_residual", lim_plt, [&] { return plt_dual_residual(u, p.q, p.delta, p.F0z, p.phi).sup(); });
  rep["pass"] = pass;
  const fs::path out = cfg.at("out").get<std::string>().empty() ? run : fs::path(cfg.at("out").get<std::string>());
  fs::create_directories(out);
  write_json(out / "duality_report.json", rep);
  return pass ? kOk : kSolverFailure;
}

}  // namespace

// ---- registry ---------------------------------------------------------------

ConvexDomain make_domain(const std::string& text) {
  const Spec s = parse_spec(text);
  if (s.name == "disk") {
    const auto v = bind(s, {{"r", 1.0}, {"cx", 0.0}, {"cy", 0.0}});
    if (!(v[0] > 0.0)) throw ConfigError("disk radius must be positive");
    return ConvexDomain::disk(v[0], v[1], v[2]);
  }
  if (s.name == "square") {
    const auto v = bind(s, {{"a", 1.0}, {"cx", 0.0}, {"cy", 0.0}});
    if (!(v[0] > 0.0)) throw ConfigError("square half-side must be positive");
    return ConvexDomain::square(v[0], v[1], v[2]);
  }
  if (s.name == "superellipse") {
    const auto v = bind(s, {{"p", 4.0}});
    if (!(v[0] >= 2.0)) throw ConfigError("superellipse needs p >= 2");
    return ConvexDomain::superellipse(v[0]);
  }
  throw ConfigError("unknown domain '" + s.name + "' (disk, square, superellipse)");
}

ConvexDomain with_inner(const ConvexDomain& d, const std::string& text) {
  const Spec s = parse_spec(text);
  if (s.name == "none") return d;
  if (s.name == "box") {
    const auto v = bind(s, {{"x0", kRequired}, {"x1", kRequired}, {"y0", kRequired}, {"y1", kRequired}});
    if (!(v[0] < v[1] && v[2] < v[3])) throw ConfigError("inner box needs x0 < x1 and y0 < y1");
    return d.with_inner_box(v[0], v[1], v[2], v[3]);
  }
  if (s.name == "disk") {
    const auto v = bind(s, {{"r", kRequired}, {"cx", 0.0}, {"cy", 0.0}});
    const double r = v[0], cx = v[1], cy = v[2];
    return d.with_inner([=](double x, double y) { return (x - cx) * (x - cx) + (y - cy) * (y - cy) - r * r; }, "disk");
  }
  throw ConfigError("unknown inner region '" + s.name + "' (none, box, disk)");
}

PlaneFn make_plane_fn(const std::string& text) {
  const Spec s = parse_spec(text);
  if (s.name == "zero") {
    bind(s, {});
    return [](double, double) { return 0.0; };
  }
  if (s.name == "const") {
    const double c = bind(s, {{"c", 1.0}})[0];
    return [c](double, double) { return c; };
  }
  if (s.name == "linear") {
    const auto v = bind(s, {{"a", 0.0}, {"b", 0.0}, {"c", 0.0}});
    return [a = v[0], b = v[1], c = v[2]](double x, double y) { return a + b * x + c * y; };
  }
  if (s.name == "quad") {
    const auto v = bind(s, {{"a", 1.0}, {"cx", 0.0}, {"cy", 0.0}});
    return [a = v[0], cx = v[1], cy = v[2]](double x, double y) {
      return 0.5 * a * ((x - cx) * (x - cx) + (y - cy) * (y - cy));
    };
  }
  if (s.name == "exp") {
    const double k = bind(s, {{"s", 1.0}})[0];
    return [k](double x, double y) { return std::exp(0.5 * k * (x * x + y * y)); };
  }
  throw ConfigError("unknown function '" + s.name + "' (zero, const, linear, quad, exp)");
}

F0zFn make_f0z(const std::string& text) {
  const Spec s = parse_spec(text);
  if (s.name == "zero") {
    bind(s, {});
    return f0z::zero();
  }
  if (s.name == "const") return f0z::affine(0.0, bind(s, {{"c", 0.0}})[0]);
  if (s.name == "affine") {
    const auto v = bind(s, {{"c", 0.0}, {"d", 0.0}});
    return f0z::affine(v[0], v[1]);
  }
  throw ConfigError("unknown F0_z '" + s.name + "' (zero, const, affine)");
}

F0Term make_f0(const std::string& text, const PlaneFn& gamma, const PlaneFn& phi) {
  const Spec s = parse_spec(text);
  if (s.name == "linear") {
    bind(s, {});
    return f0::linear(gamma);
  }
  if (s.name == "none") {
    bind(s, {});
    return f0::none();
  }
  if (s.name == "quadratic") return f0::quadratic(bind(s, {{"c", 1.0}})[0]);
  if (s.name == "z") {
    bind(s, {});
    return f0::linear([](double, double) { return 1.0; });
  }
  if (s.name == "tracking") {
    bind(s, {});
    return f0::tracking(phi);
  }
  throw ConfigError("unknown F0 '" + s.name + "' (linear, z, none, quadratic, tracking)");
}

// ---- config -----------------------------------------------------------------

const std::vector<std::string>& commands() {
  static const std::vector<std::string> c = {"solve-abreu", "solve-rc", "sweep", "check-duality", "oracle-min"};
  return c;
}

Json default_config(const std::string& command) {
  if (command == "solve-abreu") {
    Json j = common_defaults();
    j.update({{"domain", "disk"},
              {"q", 2.0},
              {"delta", 0.0},
              {"eps", 1.0},
              {"phi", "quad"},
              {"psi", "const:1"},
              {"f0z", "zero"},
              {"coupling", "picard"},
              {"max_outer", 200},
              {"manufactured", false}});
    return j;
  }
  if (command == "solve-rc") {
    Json j = rc_defaults();
    j["eps"] = 0.1;
    return j;
  }
  if (command == "sweep") {
    Json j = rc_defaults();
    j.update({{"eps_list", "0.3,0.1,0.03,0.01"}, {"oracle_iters", 400}, {"oracle_sweeps", 50}});
    return j;
  }
  if (command == "oracle-min") {
    Json j = rc_defaults();
    for (const char* k : {"psi", "coupling", "max_outer", "tol"}) j.erase(k);
    j.update({{"iters", 400}, {"sweeps", 50}});
    return j;
  }
  if (command == "check-duality") {
    Json j = common_defaults();
    for (const char* k : {"n", "tol"}) j.erase(k);
    j.update({{"run", ""},
              {"out", ""},
              {"m", 0},
              {"involution_factor", 6.0},
              {"detrec_factor", 10.0},
              {"max_lt", 1.0},
              {"max_plt", 1.0}});
    return j;
  }
  throw ConfigError("unknown command '" + command + "'");
}

Json resolve_config(const std::string& command, const Json& file, const std::map<std::string, std::string>& flags) {
  Json cfg = default_config(command);
  if (!file.is_null()) {
    if (!file.is_object()) throw ConfigError("config file must hold a JSON object");
    for (const auto& [key, v] : file.items()) {
      if (key == "command" && v == command) continue;
      if (!cfg.contains(key)) throw ConfigError("unknown config key '" + key + "' for " + command);
      if (!same_kind(cfg[key], v)) throw ConfigError("config key '" + key + "' has the wrong type");
      cfg[key] = v;
    }
  }
  for (const auto& [key, text] : flags) {
    if (!cfg.contains(key)) throw ConfigError("unknown option --" + key + " for " + command);
    cfg[key] = parse_flag(cfg[key], key, text);
  }
  cfg["command"] = command;
  return cfg;
}

AbreuProblem abreu_problem(const Json& cfg) {
  AbreuProblem p;
  p.domain = make_domain(cfg.at("domain"));
  p.q = cfg.at("q");
  p.delta = cfg.at("delta");
  p.scale_eps = cfg.at("eps");
  if (cfg.at("manufactured").get<bool>()) {
    const Manufactured m = manufactured_exponential(p.domain, p.q, p.delta);
    p.phi = m.problem.phi;
    p.psi = m.problem.psi;
    p.F0z = m.problem.F0z;
    return p;
  }
  p.phi = make_plane_fn(cfg.at("phi"));
  p.psi = make_plane_fn(cfg.at("psi"));
  p.F0z = make_f0z(cfg.at("f0z"));
  return p;
}

RCProblem rc_problem(const Json& cfg) {
  RCProblem p;
  p.domain = with_inner(make_domain(cfg.at("domain")), cfg.at("inner"));
  if (!p.domain.has_inner()) throw ConfigError("Rochet-Chone runs need an inner region");
  p.q = cfg.at("q");
  p.gamma = make_plane_fn(cfg.at("gamma"));
  p.phi = make_plane_fn(cfg.at("phi"));
  p.psi = cfg.contains("psi") ? make_plane_fn(cfg.at("psi")) : make_plane_fn("const:1");
  p.F0 = make_f0(cfg.at("f0"), p.gamma, p.phi);
  return p;
}

// ---- files ------------------------------------------------------------------

void write_field(const fs::path& path, const ScalarField& f, const std::string& domain_spec,
                 const std::string& inner_spec) {
  const Grid2D& g = *f.grid();
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "# abreu field v1\n";
  if (!domain_spec.empty()) {
    out << "domain " << domain_spec << "\ninner " << inner_spec << "\nn " << g.nx() << '\n';
  } else {
    out << "dualgrid " << g.nx() << ' ' << g.ny() << ' ' << shortest(g.xmin()) << ' ' << shortest(g.ymin()) << ' '
        << shortest(g.h()) << '\n';
  }
  out << "values\n";
  for (int k = 0; k < g.size(); ++k) out << (g.inside(k) ? shortest(f[k]) : "nan") << '\n';
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

FieldFile read_field(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != "# abreu field v1") throw ConfigError(path.string() + ": not an abreu field");
  FieldFile ff;
  int n = 0, nx = 0, ny = 0;
  double xmin = 0.0, ymin = 0.0, h = 0.0;
  bool dual = false;
  while (std::getline(in, line) && line != "values") {
    const auto sp = line.find(' ');
    const std::string key = line.substr(0, sp), rest = sp == std::string::npos ? "" : line.substr(sp + 1);
    if (key == "domain") {
      ff.domain = rest;
    } else if (key == "inner") {
      ff.inner = rest;
    } else if (key == "n") {
      n = static_cast<int>(parse_number(rest, "n"));
    } else if (key == "dualgrid") {
      std::stringstream ss(rest);
      std::string a, b, c, d, e;
      ss >> a >> b >> c >> d >> e;
      nx = static_cast<int>(parse_number(a, "nx"));
      ny = static_cast<int>(parse_number(b, "ny"));
      xmin = parse_number(c, "xmin");
      ymin = parse_number(d, "ymin");
      h = parse_number(e, "h");
      dual = true;
    } else {
      throw ConfigError(path.string() + ": unknown header line '" + line + "'");
    }
  }
  std::vector<double> values;
  while (std::getline(in, line))
    if (!line.empty()) values.push_back(parse_number(line, path.string()));
  GridPtr grid;
  if (dual) {
    if (nx < 1 || ny < 1 || static_cast<std::size_t>(nx) * ny != values.size())
      throw ConfigError(path.string() + ": value count does not match the grid");
    std::vector<bool> inside(values.size());
    for (std::size_t k = 0; k < values.size(); ++k) inside[k] = !std::isnan(values[k]);
    grid = Grid2D::from_mask(nx, ny, xmin, ymin, h, std::move(inside));
  } else {
    if (ff.domain.empty() || n < 2) throw ConfigError(path.string() + ": missing domain or n");
    grid = Grid2D::build(with_inner(make_domain(ff.domain), ff.inner.empty() ? "none" : ff.inner), n);
    if (static_cast<std::size_t>(grid->size()) != values.size())
      throw ConfigError(path.string() + ": value count does not match the grid");
  }
  ff.field = ScalarField(grid, std::numeric_limits<double>::quiet_NaN());
  for (int k : grid->inside_nodes()) ff.field[k] = values[k];
  return ff;
}

Json report_json(const SolveReport& r) {
  Json hist = Json::array();
  for (const auto& e : r.residual_history) hist.push_back({e[0], e[1]});
  return {{"converged", r.converged},     {"outer_iters", r.outer_iters}, {"residual_history", hist},
          {"damping_used", r.damping_used}, {"apriori", apriori_json(r.apriori)}, {"floor_active", r.floor_active},
          {"message", r.message}};
}

void write_json(const fs::path& path, const Json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

Json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

AbreuSolution solve_abreu(const Json& cfg) {
  const AbreuProblem p = abreu_problem(cfg);
  const GridPtr grid = Grid2D::build(p.domain, grid_n(cfg));
  try {
    validate(p, *grid);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return solve_sbvp(p, grid, solver_options(cfg));
}

RCApproxRun solve_rc(const Json& cfg) {
  const RCProblem p = rc_problem(cfg);
  const double eps = cfg.at("eps");
  if (!(eps > 0.0 && eps < 1.0)) throw ConfigError("eps must lie in (0, 1)");
  const GridPtr grid = Grid2D::build(p.domain, grid_n(cfg));
  try {
    validate(p, *grid);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return solve_rc_approx(p, eps, grid, solver_options(cfg));
}

int run_command(const std::string& command, const Json& cfg) {
  if (command == "solve-abreu") return cmd_solve_abreu(cfg);
  if (command == "solve-rc") return cmd_solve_rc(cfg);
  if (command == "sweep") return cmd_sweep(cfg);
  if (command == "oracle-min") return cmd_oracle_min(cfg);
  if (command == "check-duality") return cmd_check_duality(cfg);
  throw ConfigError("unknown command '" + command + "'");
}

}  // namespace abreu::io

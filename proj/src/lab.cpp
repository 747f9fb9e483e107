#include "mfg/lab.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <random>
#include <set>
#include <sstream>
#include <utility>

#include "CLI11.hpp"
#include "json.hpp"
#include "mfg/errors.hpp"
#include "mfg/mather.hpp"

namespace mfg {

using nlohmann::json;

namespace {

std::string join_path(const std::string& prefix, const std::string& key) {
  return prefix.empty() ? key : prefix + "." + key;
}

double as_number(const json& j, const std::string& path) {
  if (!j.is_number()) throw ConfigError(path + ": expected a number");
  return j.get<double>();
}

int as_integer(const json& j, const std::string& path) {
  if (!j.is_number_integer()) throw ConfigError(path + ": expected an integer");
  return j.get<int>();
}

bool as_boolean(const json& j, const std::string& path) {
  if (!j.is_boolean()) throw ConfigError(path + ": expected true or false");
  return j.get<bool>();
}

std::string as_string(const json& j, const std::string& path) {
  if (!j.is_string()) throw ConfigError(path + ": expected a string");
  return j.get<std::string>();
}

Vec2 as_point(const json& j, const std::string& path, int dim) {
  if (dim == 1) {
    if (j.is_number()) return {j.get<double>(), 0.0};
    if (j.is_array() && j.size() == 1 && j[0].is_number()) {
      return {j[0].get<double>(), 0.0};
    }
    throw ConfigError(path + ": expected a number");
  }
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
    throw ConfigError(path + ": expected [x, y]");
  }
  return {j[0].get<double>(), j[1].get<double>()};
}

/// Strict view of one JSON object. Every access marks its key; done()
/// rejects whatever was never asked for, with the full field path.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) {
      throw ConfigError((path_.empty() ? std::string("config") : path_) +
                        ": expected an object");
    }
  }

  const json* find(const char* key) {
    used_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  const json& need(const char* key) {
    const json* p = find(key);
    if (!p) {
      throw ConfigError(join_path(path_, key) + ": required field is missing");
    }
    return *p;
  }

  double need_number(const char* key) {
    return as_number(need(key), join_path(path_, key));
  }
  double number(const char* key, double fallback) {
    const json* p = find(key);
    return p ? as_number(*p, join_path(path_, key)) : fallback;
  }
  int integer(const char* key, int fallback) {
    const json* p = find(key);
    return p ? as_integer(*p, join_path(path_, key)) : fallback;
  }
  bool boolean(const char* key, bool fallback) {
    const json* p = find(key);
    return p ? as_boolean(*p, join_path(path_, key)) : fallback;
  }
  std::string need_string(const char* key) {
    return as_string(need(key), join_path(path_, key));
  }
  std::string str(const char* key, std::string fallback) {
    const json* p = find(key);
    return p ? as_string(*p, join_path(path_, key)) : std::move(fallback);
  }

  std::string path_of(const char* key) const { return join_path(path_, key); }

  void done() {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!used_.count(it.key())) {
        throw ConfigError(join_path(path_, it.key()) + ": unknown field");
      }
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> used_;
};

double positive(ObjectReader& o, const char* key, double fallback) {
  const double v = o.number(key, fallback);
  if (v <= 0) throw ConfigError(o.path_of(key) + ": must be positive");
  return v;
}

int at_least_one(ObjectReader& o, const char* key, int fallback) {
  const int v = o.integer(key, fallback);
  if (v < 1) throw ConfigError(o.path_of(key) + ": must be at least 1");
  return v;
}

PotentialTerm parse_term(const json& j, const std::string& path, int dim) {
  ObjectReader t(j, path);
  PotentialTerm term;
  const std::string kind = t.need_string("kind");
  if (kind == "quadratic") {
    term.kind = PotentialTerm::Kind::quadratic;
  } else if (kind == "gaussian") {
    term.kind = PotentialTerm::Kind::gaussian;
  } else if (kind == "constant") {
    term.kind = PotentialTerm::Kind::constant;
  } else if (kind == "radial_well") {
    term.kind = PotentialTerm::Kind::radial_well;
  } else if (kind == "flat_well") {
    term.kind = PotentialTerm::Kind::flat_well;
  } else {
    throw ConfigError(path + ".kind: unknown kind '" + kind + "'");
  }
  if (const json* c = t.find("center")) {
    term.center = as_point(*c, path + ".center", dim);
  }
  term.coeff = t.number("coeff", 0.5);
  term.width = t.number("width", 1.0);
  if (term.width <= 0 && kind != "quadratic" && kind != "constant") {
    throw ConfigError(path + ".width: must be positive");
  }
  t.done();
  return term;
}

}  // namespace

ExperimentConfig parse_config(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }

  ExperimentConfig cfg;
  ObjectReader root(doc, "");

  {
    ObjectReader dom(root.need("domain"), "domain");
    const std::string kind = dom.need_string("kind");
    if (kind == "interval") {
      const double lo = dom.need_number("lo"), hi = dom.need_number("hi");
      if (lo >= hi) throw ConfigError("domain: lo must be below hi");
      cfg.domain = Domain::interval(lo, hi);
    } else if (kind == "box") {
      const Vec2 lo = as_point(dom.need("lo"), "domain.lo", 2);
      const Vec2 hi = as_point(dom.need("hi"), "domain.hi", 2);
      if (lo.x >= hi.x || lo.y >= hi.y) {
        throw ConfigError("domain: lo must be componentwise below hi");
      }
      cfg.domain = Domain::box(lo, hi);
    } else if (kind == "disc") {
      const Vec2 center = as_point(dom.need("center"), "domain.center", 2);
      const double radius = dom.need_number("radius");
      if (radius <= 0) throw ConfigError("domain.radius: must be positive");
      cfg.domain = Domain::disc(center, radius);
    } else {
      throw ConfigError("domain.kind: unknown kind '" + kind + "'");
    }
    dom.done();
  }
  const int dim = cfg.domain.dim();
  cfg.initial_measure.at = cfg.domain.centroid();

  {
    ObjectReader g(root.need("grid"), "grid");
    cfg.nodes_per_axis = g.integer("nodes_per_axis", cfg.nodes_per_axis);
    if (cfg.nodes_per_axis < 2) {
      throw ConfigError("grid.nodes_per_axis: must be at least 2");
    }
    g.done();
  }

  {
    ObjectReader m(root.need("model"), "model");
    cfg.quartic = m.number("quartic", 0.0);
    if (cfg.quartic < 0) throw ConfigError("model.quartic: must be nonnegative");
    if (const json* pj = m.find("potential")) {
      if (!pj->is_array() || pj->empty()) {
        throw ConfigError("model.potential: expected a non-empty array");
      }
      for (size_t i = 0; i < pj->size(); ++i) {
        cfg.potential.push_back(parse_term(
            (*pj)[i], "model.potential[" + std::to_string(i) + "]", dim));
      }
    } else {
      cfg.potential.push_back(
          {PotentialTerm::Kind::quadratic, cfg.domain.centroid(), 0.5, 1.0});
    }
    m.done();
  }

  if (const json* cj = root.find("coupling")) {
    ObjectReader c(*cj, "coupling");
    const std::string kind = c.need_string("kind");
    if (kind == "none") {
      cfg.coupling = Coupling::none();
    } else if (kind == "gaussian") {
      const double sigma = positive(c, "sigma", 0.5);
      const double weight = c.number("weight", 1.0);
      const bool a3 = c.boolean("a3_normalize", false);
      cfg.coupling = Coupling::gaussian(sigma, weight, a3);
    } else {
      throw ConfigError("coupling.kind: unknown kind '" + kind + "'");
    }
    c.done();
  }

  if (const json* sj = root.find("solver")) {
    ObjectReader s(*sj, "solver");
    SolverConfig& sv = cfg.solver;
    sv.dt = s.number("dt", sv.dt);
    sv.speed_cap = positive(s, "speed_cap", sv.speed_cap);
    sv.ergodic_tol = positive(s, "ergodic_tol", sv.ergodic_tol);
    sv.ergodic_max_iter = at_least_one(s, "ergodic_max_iter", sv.ergodic_max_iter);
    sv.damping = s.number("damping", sv.damping);
    if (sv.damping <= 0 || sv.damping > 1) {
      throw ConfigError("solver.damping: must lie in (0, 1]");
    }
    sv.mfg_tol = positive(s, "mfg_tol", sv.mfg_tol);
    sv.mfg_max_iter = at_least_one(s, "mfg_max_iter", sv.mfg_max_iter);
    sv.tail_window = at_least_one(s, "tail_window", sv.tail_window);
    sv.support_cut = s.number("support_cut", sv.support_cut);
    if (sv.support_cut < 0) {
      throw ConfigError("solver.support_cut: must be nonnegative");
    }
    sv.mfg_value_dt = s.number("mfg_value_dt", sv.mfg_value_dt);
    sv.exploitability_tol = positive(s, "exploitability_tol", sv.exploitability_tol);
    sv.fp_max_outer = at_least_one(s, "fp_max_outer", sv.fp_max_outer);
    s.done();
  }

  if (const json* ej = root.find("experiment")) {
    ObjectReader e(*ej, "experiment");
    if (const json* hj = e.find("horizons")) {
      if (!hj->is_array() || hj->empty()) {
        throw ConfigError("experiment.horizons: expected a non-empty array");
      }
      double prev = 0;
      for (size_t i = 0; i < hj->size(); ++i) {
        const double T = as_number(
            (*hj)[i], "experiment.horizons[" + std::to_string(i) + "]");
        if (T <= prev) {
          throw ConfigError(
              "experiment.horizons: must be positive and strictly increasing");
        }
        cfg.horizons.push_back(T);
        prev = T;
      }
    }
    if (const json* mj = e.find("initial_measure")) {
      ObjectReader m(*mj, "experiment.initial_measure");
      const std::string kind = m.need_string("kind");
      if (kind == "dirac") {
        cfg.initial_measure.kind = MeasureSpec::Kind::dirac;
        if (const json* at = m.find("at")) {
          cfg.initial_measure.at =
              as_point(*at, "experiment.initial_measure.at", dim);
        }
      } else if (kind == "uniform") {
        cfg.initial_measure.kind = MeasureSpec::Kind::uniform;
      } else if (kind == "stationary") {
        cfg.initial_measure.kind = MeasureSpec::Kind::stationary;
      } else {
        throw ConfigError("experiment.initial_measure.kind: unknown kind '" +
                          kind + "'");
      }
      m.done();
    }
    if (const json* tj = e.find("terminal")) {
      ObjectReader t(*tj, "experiment.terminal");
      const std::string kind = t.need_string("kind");
      if (kind == "zero") {
        cfg.terminal.kind = TerminalSpec::Kind::zero;
      } else if (kind == "stationary_value") {
        cfg.terminal.kind = TerminalSpec::Kind::stationary_value;
      } else {
        throw ConfigError("experiment.terminal.kind: unknown kind '" + kind +
                          "'");
      }
      t.done();
    }
    cfg.write_paths = e.boolean("write_paths", false);
    e.done();
  }

  if (const json* oj = root.find("output")) {
    ObjectReader o(*oj, "output");
    cfg.output_dir = o.str("directory", cfg.output_dir);
    o.done();
  }

  if (const json* sj = root.find("seed")) {
    if (!sj->is_number_integer() ||
        (sj->is_number_integer() && !sj->is_number_unsigned() &&
         sj->get<long long>() < 0)) {
      throw ConfigError("seed: expected a nonnegative integer");
    }
    cfg.seed = sj->get<std::uint64_t>();
  }

  root.done();
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot read config file: " + path);
  std::ostringstream buf;
  buf << f.rdbuf();
  return parse_config(buf.str());
}

Grid build_grid(const ExperimentConfig& config) {
  return Grid::make(config.domain, config.nodes_per_axis);
}

TonelliModel build_model(const ExperimentConfig& config) {
  return make_kinetic_model(config.domain, config.potential, config.quartic);
}

GridMeasure build_initial_measure(const ExperimentConfig& config,
                                  const Grid& grid,
                                  const GridMeasure* stationary) {
  switch (config.initial_measure.kind) {
    case MeasureSpec::Kind::dirac:
      return GridMeasure::dirac_at(grid, config.initial_measure.at);
    case MeasureSpec::Kind::uniform:
      return GridMeasure::uniform(grid);
    case MeasureSpec::Kind::stationary:
      if (!stationary) {
        throw ConfigError(
            "experiment.initial_measure.kind: 'stationary' is not available "
            "in this pipeline");
      }
      return *stationary;
  }
  throw ConfigError("experiment.initial_measure.kind: unknown kind");
}

namespace {

std::string fmt12(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

std::string fmtg(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

double fit_slope(const std::vector<std::pair<double, double>>& pts) {
  if (pts.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  double mx = 0, my = 0;
  for (const auto& [x, y] : pts) {
    mx += x;
    my += y;
  }
  mx /= static_cast<double>(pts.size());
  my /= static_cast<double>(pts.size());
  double sxx = 0, sxy = 0;
  for (const auto& [x, y] : pts) {
    sxx += (x - mx) * (x - mx);
    sxy += (x - mx) * (y - my);
  }
  if (sxx <= 0) return std::numeric_limits<double>::quiet_NaN();
  return sxy / sxx;
}

ErgodicMfgOptions mfg_options(const SolverConfig& s, int threads) {
  ErgodicMfgOptions o;
  o.damping = s.damping;
  o.tol = s.mfg_tol;
  o.max_iter = s.mfg_max_iter;
  o.tail_window = s.tail_window;
  o.dt = s.mfg_value_dt;
  o.ergodic_tol = s.ergodic_tol;
  o.ergodic_max_iter = s.ergodic_max_iter;
  o.speed_cap = s.speed_cap;
  o.threads = threads;
  o.support_cut = s.support_cut;
  o.throw_on_failure = false;
  return o;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error("cannot open output file for writing: " + path);
  f << text;
  if (!f) throw Error("write failed: " + path);
}

}  // namespace

ConvergenceReport run_longtime_experiment(const ExperimentConfig& config,
                                          int threads) {
  const Grid grid = build_grid(config);
  const TonelliModel model = build_model(config);
  const double h = grid.spacing();
  const double dt = config.solver.dt > 0 ? config.solver.dt : h;
  const double nan = std::numeric_limits<double>::quiet_NaN();

  std::filesystem::create_directories(config.output_dir);

  ConvergenceReport rep;
  rep.theoretical_exponent = -1.0 / (grid.domain().dim() + 2);

  rep.stationary =
      solve_ergodic_mfg(model, config.coupling, GridMeasure::uniform(grid),
                        mfg_options(config.solver, threads));
  const ErgodicMfgSolution& st = *rep.stationary;
  rep.lambda_bar = st.lambda_bar;

  ValueField u_f{&grid, std::vector<double>(static_cast<size_t>(grid.size()), 0.0)};
  if (config.terminal.kind == TerminalSpec::Kind::stationary_value) {
    u_f.values = st.u_bar.values;
  }
  const GridMeasure m0 = build_initial_measure(config, grid, &st.m_bar);

  std::optional<CouplingKernel> kernel;
  std::vector<double> fbar;
  if (config.coupling.active()) {
    kernel.emplace(config.coupling, grid);
    kernel->eval_nodes(st.m_bar, fbar);
  }

  FictitiousPlayOptions fo;
  fo.max_outer = config.solver.fp_max_outer;
  fo.speed_cap = config.solver.speed_cap;
  fo.threads = threads;
  fo.throw_on_failure = false;

  for (double T : config.horizons) {
    HorizonRow row;
    row.T = T;
    row.lambda_bar = rep.lambda_bar;
    row.value_error = row.coupling_error = nan;
    row.exploitability = row.energy_integral = nan;
    try {
      // The exploitability gap aggregates cost over the whole horizon, so
      // the sweep tolerance is per unit of horizon; otherwise the round
      // count of the averaging scheme grows quadratically with T.
      fo.tol_expl = config.solver.exploitability_tol * T;
      MildSolutionPath path =
          equilibrium_fixed_point(model, config.coupling, m0, u_f, T, dt, fo);
      row.solved = true;
      row.converged = path.converged;
      if (!path.converged) row.error = "exploitability above tolerance";

      const int K = static_cast<int>(path.marginals.size()) - 1;
      double eu = 0;
      for (int k = 0; k <= K; ++k) {
        const double drift = rep.lambda_bar * (1.0 - (k * dt) / T);
        for (int id = 0; id < grid.size(); ++id) {
          eu = std::max(eu, std::abs(path.slices[static_cast<size_t>(k)][id] / T + drift));
        }
      }
      row.value_error = eu;

      double ef = 0;
      if (kernel) {
        std::vector<double> fk;
        for (int k = 0; k < K; ++k) {
          kernel->eval_nodes(path.marginals[static_cast<size_t>(k)], fk);
          double gap = 0;
          for (int id = 0; id < grid.size(); ++id) {
            gap = std::max(gap, std::abs(fk[static_cast<size_t>(id)] -
                                         fbar[static_cast<size_t>(id)]));
          }
          ef += dt * gap;
        }
        ef /= T;
      }
      row.coupling_error = ef;
      row.exploitability = path.exploitability;
      row.energy_integral = energy_estimate_eval(path, config.coupling, st.m_bar);

      if (config.write_paths) {
        write_path_table(config.output_dir + "/path_" + fmtg(T), path, grid);
      }
    } catch (const Error& e) {
      row.solved = false;
      row.error = e.what();
    }
    rep.rows.push_back(std::move(row));
  }

  std::vector<std::pair<double, double>> pu, pf;
  for (const HorizonRow& r : rep.rows) {
    if (!r.solved) continue;
    if (std::isfinite(r.value_error) && r.value_error > 0) {
      pu.emplace_back(std::log(r.T), std::log(r.value_error));
    }
    if (std::isfinite(r.coupling_error) && r.coupling_error > 0) {
      pf.emplace_back(std::log(r.T), std::log(r.coupling_error));
    }
  }
  rep.slope_value = fit_slope(pu);
  rep.slope_coupling = fit_slope(pf);

  rep.all_ok = st.converged;
  for (const HorizonRow& r : rep.rows) {
    rep.all_ok = rep.all_ok && r.solved && r.converged;
  }

  write_text(config.output_dir + "/convergence.csv", convergence_csv(rep));
  write_text(config.output_dir + "/report.json", report_json(rep, config));
  return rep;
}

std::string convergence_csv(const ConvergenceReport& report) {
  std::string out = "T,E_u,E_F,lambda_bar,exploitability,energy_integral\n";
  for (const HorizonRow& r : report.rows) {
    out += fmt12(r.T);
    out += ',';
    out += fmt12(r.value_error);
    out += ',';
    out += fmt12(r.coupling_error);
    out += ',';
    out += fmt12(r.lambda_bar);
    out += ',';
    out += fmt12(r.exploitability);
    out += ',';
    out += fmt12(r.energy_integral);
    out += '\n';
  }
  return out;
}

std::string report_json(const ConvergenceReport& report,
                        const ExperimentConfig& config) {
  json j;
  j["version"] = "0.1.0";
  j["seed"] = config.seed;
  j["grid"] = {{"dim", config.domain.dim()},
               {"nodes_per_axis", config.nodes_per_axis}};
  j["lambda_bar"] = report.lambda_bar;
  j["theoretical_exponent"] = report.theoretical_exponent;
  j["slopes"] = {{"value", report.slope_value},
                 {"coupling", report.slope_coupling}};
  if (report.stationary) {
    const ErgodicMfgSolution& st = *report.stationary;
    json cert = {{"hj_residual", st.certificate.hj_residual},
                 {"hj_ok", st.certificate.hj_ok},
                 {"support_speed", st.certificate.support_speed},
                 {"speed_ok", st.certificate.speed_ok},
                 {"fixed_point_gap", st.certificate.fixed_point_gap},
                 {"fixed_point_ok", st.certificate.fixed_point_ok},
                 {"continuity_residual", st.certificate.continuity_residual},
                 {"continuity_ok", st.certificate.continuity_ok}};
    j["stationary"] = {
        {"lambda_bar", st.lambda_bar},
        {"converged", st.converged},
        {"iterations", st.iterations},
        {"fixed_point_residual", st.fixed_point_residual},
        {"stationarity_residual", st.stationarity_residual},
        {"certificate", cert},
        {"support", st.m_bar.support(config.solver.support_cut)}};
  }
  json rows = json::array();
  for (const HorizonRow& r : report.rows) {
    rows.push_back({{"T", r.T},
                    {"E_u", r.value_error},
                    {"E_F", r.coupling_error},
                    {"lambda_bar", r.lambda_bar},
                    {"exploitability", r.exploitability},
                    {"energy_integral", r.energy_integral},
                    {"solved", r.solved},
                    {"converged", r.converged},
                    {"error", r.error}});
  }
  j["rows"] = rows;
  j["all_ok"] = report.all_ok;
  return j.dump(2) + "\n";
}

InterpolationCheckResult interpolation_inequality_check(
    const std::vector<ValueField>& samples, double sup_bound,
    double lipschitz_bound) {
  if (samples.empty() || samples.front().grid == nullptr) {
    throw Error("interpolation check needs at least one sampled field");
  }
  const Grid& grid = *samples.front().grid;
  const Domain& dom = grid.domain();
  const int d = dom.dim();

  // Inner cone property of the shipped shapes: a cone of volume fraction
  // phi of the full ball, valid up to radius r_max.
  double phi = 0.5, r_max = dom.diameter();
  if (dom.kind() == DomainKind::box) {
    phi = 0.25;
    r_max = std::min(dom.bounds_hi().x - dom.bounds_lo().x,
                     dom.bounds_hi().y - dom.bounds_lo().y);
  } else if (dom.kind() == DomainKind::disc) {
    phi = 0.25;
    r_max = dom.disc_radius();
  }
  const double ball = d == 1 ? 2.0 : 3.14159265358979323846;
  const double cone = phi * ball;

  // A field with peak s and Lipschitz constant M keeps at least s/2 on a
  // cone of radius min(s / (2M), r_max), which lower-bounds the L2 norm.
  // The two radius regimes give the two branches of the constant.
  const double c_peak =
      std::pow(std::pow(2.0, d + 2) * std::pow(lipschitz_bound, d) / cone,
               1.0 / (d + 2));
  const double c_wide = 2.0 / std::sqrt(cone * std::pow(r_max, d));

  InterpolationCheckResult res;
  res.constant = std::max(c_peak, c_wide);

  for (size_t i = 0; i < samples.size(); ++i) {
    const ValueField& f = samples[i];
    const double sup = f.max_abs();
    if (sup > sup_bound * (1 + 1e-9)) {
      throw RegimeViolation("sample " + std::to_string(i) + " has sup norm " +
                            std::to_string(sup) + " above the stated bound " +
                            std::to_string(sup_bound));
    }
    const double lip = max_adjacent_slope(grid, f);
    if (lip > lipschitz_bound * (1 + 1e-9)) {
      throw RegimeViolation("sample " + std::to_string(i) +
                            " has Lipschitz constant " + std::to_string(lip) +
                            " above the stated bound " +
                            std::to_string(lipschitz_bound));
    }
    double l2sq = 0;
    for (int id = 0; id < grid.size(); ++id) {
      l2sq += grid.quad_weight(id) * f[id] * f[id];
    }
    const double l2 = std::sqrt(l2sq);
    const double ratio =
        sup == 0 ? 0.0 : sup / std::max(l2, std::pow(l2, 2.0 / (2 + d)));
    res.ratios.push_back(ratio);
    res.worst_ratio = std::max(res.worst_ratio, ratio);
  }
  if (res.worst_ratio > res.constant * (1 + 1e-12)) {
    throw Error("interpolation ratio " + std::to_string(res.worst_ratio) +
                " exceeds the cone-bound constant " +
                std::to_string(res.constant));
  }
  return res;
}

void write_path_table(const std::string& stem, const MildSolutionPath& path,
                      const Grid& grid) {
  std::ofstream bin(stem + ".bin", std::ios::binary | std::ios::trunc);
  if (!bin) throw Error("cannot open path table for writing: " + stem + ".bin");
  for (const GridMeasure& m : path.marginals) {
    const auto& w = m.weights();
    bin.write(reinterpret_cast<const char*>(w.data()),
              static_cast<std::streamsize>(w.size() * 8));
  }
  if (!bin) throw Error("path table write failed: " + stem + ".bin");

  json man;
  man["T"] = path.T;
  man["dt"] = path.dt;
  man["nx"] = grid.nx();
  man["ny"] = grid.ny();
  man["node_count"] = grid.size();
  man["rows"] = path.marginals.size();
  man["exploitability"] = path.exploitability;
  man["converged"] = path.converged;
  man["exploitability_trace"] = path.exploitability_trace;
  write_text(stem + ".json", man.dump(2) + "\n");
}

namespace {

// Uniform double in [0, 1) from the top 53 bits; the engine sequence is
// pinned by the standard, so seeded outputs are portable.
double unit_double(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

GridMeasure random_measure(const Grid& grid, std::mt19937_64& rng,
                           int max_atoms = 6) {
  const int k = 1 + static_cast<int>(rng() % static_cast<std::uint64_t>(max_atoms));
  std::vector<double> w(static_cast<size_t>(grid.size()), 0.0);
  double total = 0;
  for (int i = 0; i < k; ++i) {
    const size_t id = static_cast<size_t>(rng() % static_cast<std::uint64_t>(grid.size()));
    const double a = unit_double(rng) + 1e-3;
    w[id] += a;
    total += a;
  }
  for (double& x : w) x /= total;
  return GridMeasure(&grid, std::move(w));
}

int run_ergodic_cmd(const ExperimentConfig& cfg, const std::string& resume,
                    int threads) {
  const Grid grid = build_grid(cfg);
  const TonelliModel model = build_model(cfg);
  const double dt = cfg.solver.dt > 0 ? cfg.solver.dt : grid.spacing();

  ErgodicOptions eo;
  eo.tol = cfg.solver.ergodic_tol;
  eo.max_iter = cfg.solver.ergodic_max_iter;
  eo.speed_cap = cfg.solver.speed_cap;
  eo.threads = threads;
  eo.throw_on_failure = false;
  if (!resume.empty()) {
    Checkpoint ck = load_checkpoint(resume);
    if (ck.nx != grid.nx() || ck.ny != grid.ny() ||
        ck.node_count != grid.size()) {
      throw ConfigError("resume checkpoint does not match the configured grid");
    }
    eo.warm_start = ValueField{&grid, std::move(ck.values)};
    eo.warm_iteration = ck.iteration;
  }

  const ErgodicSolution sol = ergodic_solve(model, grid, dt, eo);

  std::filesystem::create_directories(cfg.output_dir);
  save_checkpoint(cfg.output_dir + "/ergodic_state.bin", grid, sol.u,
                  sol.iterations, sol.c, sol.dt);
  json j = {{"critical_value", sol.c},
            {"residual", sol.residual},
            {"iterations", sol.iterations},
            {"converged", sol.converged},
            {"dt", sol.dt},
            {"max_slope", max_adjacent_slope(grid, sol.u)},
            {"grid",
             {{"nx", grid.nx()},
              {"ny", grid.ny()},
              {"node_count", grid.size()},
              {"spacing", grid.spacing()}}},
            {"state", "ergodic_state.bin"},
            {"seed", cfg.seed}};
  write_text(cfg.output_dir + "/ergodic.json", j.dump(2) + "\n");
  return sol.converged ? 0 : 2;
}

int run_hj_cmd(const ExperimentConfig& cfg, int threads) {
  const Grid grid = build_grid(cfg);
  const TonelliModel model = build_model(cfg);
  if (cfg.horizons.empty()) {
    throw ConfigError("experiment.horizons: required for the hj pipeline");
  }
  const double T = cfg.horizons.front();
  const double dt = cfg.solver.dt > 0 ? cfg.solver.dt : grid.spacing();
  const int K = static_cast<int>(std::lround(T / dt));

  const GridMeasure m0 = build_initial_measure(cfg, grid, nullptr);
  ValueField u_f{&grid, std::vector<double>(static_cast<size_t>(grid.size()), 0.0)};
  if (cfg.terminal.kind == TerminalSpec::Kind::stationary_value) {
    // Stationary profile of the model coupled to the frozen crowd.
    ErgodicOptions eo;
    eo.tol = cfg.solver.ergodic_tol;
    eo.max_iter = cfg.solver.ergodic_max_iter;
    eo.speed_cap = cfg.solver.speed_cap;
    eo.threads = threads;
    eo.throw_on_failure = true;
    const TonelliModel coupled = mean_field_lagrangian(model, cfg.coupling, m0);
    u_f.values = ergodic_solve(coupled, grid, dt, eo).u.values;
  }

  std::vector<GridMeasure> m_path;
  if (cfg.coupling.active()) {
    m_path.assign(static_cast<size_t>(K) + 1, m0);
  }
  const FiniteHorizonResult res = finite_horizon_solve(
      model, cfg.coupling, m_path, u_f, T, dt, cfg.solver.speed_cap,
      /*record_ties=*/false, threads);

  std::filesystem::create_directories(cfg.output_dir);
  std::ofstream bin(cfg.output_dir + "/value_path.bin",
                    std::ios::binary | std::ios::trunc);
  if (!bin) throw Error("cannot open value table for writing");
  for (const ValueField& slice : res.slices) {
    bin.write(reinterpret_cast<const char*>(slice.values.data()),
              static_cast<std::streamsize>(slice.values.size() * 8));
  }
  if (!bin) throw Error("value table write failed");

  json j = {{"T", T},
            {"dt", dt},
            {"rows", res.slices.size()},
            {"nx", grid.nx()},
            {"ny", grid.ny()},
            {"node_count", grid.size()},
            {"initial_oscillation", res.slices.front().oscillation()},
            {"table", "value_path.bin"},
            {"seed", cfg.seed}};
  write_text(cfg.output_dir + "/hj.json", j.dump(2) + "\n");
  return 0;
}

int run_mfg_ergodic_cmd(const ExperimentConfig& cfg, int threads) {
  const Grid grid = build_grid(cfg);
  const TonelliModel model = build_model(cfg);
  const GridMeasure m_init = build_initial_measure(cfg, grid, nullptr);

  const ErgodicMfgSolution sol = solve_ergodic_mfg(
      model, cfg.coupling, m_init, mfg_options(cfg.solver, threads));

  std::filesystem::create_directories(cfg.output_dir);
  save_checkpoint(cfg.output_dir + "/mfg_value.bin", grid,
                  sol.value_solution.u, sol.value_solution.iterations,
                  sol.value_solution.c, sol.value_solution.dt);

  json support = json::array();
  for (int id : sol.m_bar.support(cfg.solver.support_cut)) {
    support.push_back({{"node", id},
                       {"x", grid.node(id).x},
                       {"y", grid.node(id).y},
                       {"mass", sol.m_bar.weight(id)}});
  }
  json j = {{"lambda_bar", sol.lambda_bar},
            {"converged", sol.converged},
            {"iterations", sol.iterations},
            {"fixed_point_residual", sol.fixed_point_residual},
            {"stationarity_residual", sol.stationarity_residual},
            {"d1_trace", sol.d1_trace},
            {"certificate",
             {{"hj_residual", sol.certificate.hj_residual},
              {"hj_ok", sol.certificate.hj_ok},
              {"support_speed", sol.certificate.support_speed},
              {"speed_ok", sol.certificate.speed_ok},
              {"fixed_point_gap", sol.certificate.fixed_point_gap},
              {"fixed_point_ok", sol.certificate.fixed_point_ok},
              {"continuity_residual", sol.certificate.continuity_residual},
              {"continuity_ok", sol.certificate.continuity_ok}}},
            {"support", support},
            {"value_state", "mfg_value.bin"},
            {"seed", cfg.seed}};
  write_text(cfg.output_dir + "/mfg_ergodic.json", j.dump(2) + "\n");
  return sol.converged ? 0 : 2;
}

int run_mfg_horizon_cmd(const ExperimentConfig& cfg, int threads) {
  const Grid grid = build_grid(cfg);
  const TonelliModel model = build_model(cfg);
  if (cfg.horizons.empty()) {
    throw ConfigError("experiment.horizons: required for the mfg-horizon pipeline");
  }
  const double T = cfg.horizons.front();
  const double dt = cfg.solver.dt > 0 ? cfg.solver.dt : grid.spacing();

  std::optional<ErgodicMfgSolution> st;
  const bool needs_stationary =
      cfg.initial_measure.kind == MeasureSpec::Kind::stationary ||
      cfg.terminal.kind == TerminalSpec::Kind::stationary_value;
  if (needs_stationary) {
    st = solve_ergodic_mfg(model, cfg.coupling, GridMeasure::uniform(grid),
                           mfg_options(cfg.solver, threads));
  }

  const GridMeasure m0 =
      build_initial_measure(cfg, grid, st ? &st->m_bar : nullptr);
  ValueField u_f{&grid, std::vector<double>(static_cast<size_t>(grid.size()), 0.0)};
  if (cfg.terminal.kind == TerminalSpec::Kind::stationary_value) {
    u_f.values = st->u_bar.values;
  }

  FictitiousPlayOptions fo;
  fo.tol_expl = cfg.solver.exploitability_tol * T;
  fo.max_outer = cfg.solver.fp_max_outer;
  fo.speed_cap = cfg.solver.speed_cap;
  fo.threads = threads;
  fo.throw_on_failure = false;

  const MildSolutionPath path =
      equilibrium_fixed_point(model, cfg.coupling, m0, u_f, T, dt, fo);

  std::filesystem::create_directories(cfg.output_dir);
  const std::string stem = cfg.output_dir + "/path_" + fmtg(T);
  write_path_table(stem, path, grid);
  json j = {{"T", T},
            {"dt", dt},
            {"exploitability", path.exploitability},
            {"converged", path.converged},
            {"rounds", path.exploitability_trace.size()},
            {"table", "path_" + fmtg(T) + ".bin"},
            {"seed", cfg.seed}};
  write_text(cfg.output_dir + "/mfg_horizon.json", j.dump(2) + "\n");

  const bool ok = path.converged && (!st || st->converged);
  return ok ? 0 : 2;
}

struct CheckRow {
  std::string name;
  bool pass = false;
  double value = 0;
  double bound = 0;
  std::string note;
};

int run_checks_cmd(const ExperimentConfig& cfg, int threads) {
  const Grid grid = build_grid(cfg);
  const TonelliModel model = build_model(cfg);
  const Domain& dom = grid.domain();
  const double h = grid.spacing();
  std::mt19937_64 rng(cfg.seed);
  std::vector<CheckRow> rows;

  {
    CheckRow r;
    r.name = "wasserstein_duality";
    r.bound = 1e-9;
    try {
      double worst = 0;
      for (int trial = 0; trial < 50; ++trial) {
        const GridMeasure a = random_measure(grid, rng);
        const GridMeasure b = random_measure(grid, rng);
        const TransportResult lp = wasserstein1_lp(a, b);
        double gap = std::max(std::abs(lp.gap), lp.max_lipschitz_excess);
        if (dom.dim() == 1) {
          gap = std::max(gap, std::abs(wasserstein1_cdf(a, b) - lp.primal));
        }
        worst = std::max(worst, gap);
      }
      r.value = worst;
      r.pass = worst <= r.bound;
    } catch (const std::exception& e) {
      r.note = e.what();
    }
    rows.push_back(std::move(r));
  }

  {
    CheckRow r;
    r.name = "feasible_paths";
    r.bound = 10;  // defect over step ratio
    try {
      double worst = 0;
      for (int trial = 0; trial < 20; ++trial) {
        const Vec2 a = grid.node(static_cast<int>(
            rng() % static_cast<std::uint64_t>(grid.size())));
        const Vec2 b = grid.node(static_cast<int>(
            rng() % static_cast<std::uint64_t>(grid.size())));
        const FeasiblePath path = feasible_path(dom, a, b, 65);
        if (path.duration <= 0) continue;
        const double step =
            path.duration / static_cast<double>(path.samples.size() - 1);
        const double defect =
            distance_derivative_defect(dom, path.samples, step);
        worst = std::max(worst, defect / step);
      }
      r.value = worst;
      r.pass = worst <= r.bound;
    } catch (const std::exception& e) {
      r.note = e.what();
    }
    rows.push_back(std::move(r));
  }

  {
    CheckRow r;
    r.name = "static_minimizers";
    r.bound = 10 * h;
    try {
      const MatherData data = mather_set(model, grid);
      const double dtm = cfg.solver.mfg_value_dt > 0 ? cfg.solver.mfg_value_dt
                                                     : 4.0 * std::sqrt(h);
      ErgodicOptions eo;
      eo.tol = cfg.solver.ergodic_tol;
      eo.max_iter = cfg.solver.ergodic_max_iter;
      eo.speed_cap = cfg.solver.speed_cap;
      eo.threads = threads;
      eo.throw_on_failure = false;
      const ErgodicSolution sol = ergodic_solve(model, grid, dtm, eo);
      const MatherReport mrep = mather_measure_check(data, sol, model);
      r.value = mrep.max_support_speed;
      r.pass = sol.converged && mrep.speed_ok && mrep.lift_injective &&
               mrep.lipschitz_ok && mrep.action_ok;
      if (!r.pass) {
        r.note = std::string(sol.converged ? "" : "value solve unconverged; ") +
                 (mrep.speed_ok ? "" : "support speed too large; ") +
                 (mrep.lift_injective ? "" : "velocity lift not injective; ") +
                 (mrep.lipschitz_ok ? "" : "gradient pair slope too large; ") +
                 (mrep.action_ok ? "" : "rest action above tolerance; ");
      }
    } catch (const std::exception& e) {
      r.note = e.what();
    }
    rows.push_back(std::move(r));
  }

  if (cfg.coupling.active()) {
    {
      CheckRow r;
      r.name = "coupling_monotonicity";
      r.bound = 0;
      try {
        double lowest = std::numeric_limits<double>::infinity();
        for (int trial = 0; trial < 20; ++trial) {
          const GridMeasure a = random_measure(grid, rng);
          const GridMeasure b = random_measure(grid, rng);
          lowest = std::min(
              lowest, check_coupling_monotonicity(cfg.coupling, a, b).pairing);
        }
        r.value = lowest;
        r.pass = lowest >= -1e-12;
      } catch (const std::exception& e) {
        r.note = e.what();
      }
      rows.push_back(std::move(r));
    }
    if (cfg.coupling.kind() == Coupling::Kind::gaussian) {
      CheckRow r;
      r.name = "interpolation_inequality";
      try {
        const CouplingKernel kernel(cfg.coupling, grid);
        std::vector<ValueField> fields;
        std::vector<double> fa, fb;
        for (int trial = 0; trial < 10; ++trial) {
          kernel.eval_nodes(random_measure(grid, rng), fa);
          kernel.eval_nodes(random_measure(grid, rng), fb);
          ValueField f{&grid, fa};
          for (size_t i = 0; i < fb.size(); ++i) f.values[i] -= fb[i];
          fields.push_back(std::move(f));
        }
        const double w = std::abs(cfg.coupling.weight());
        const double sup_bound = 2.0 * w;
        const double lip_bound = 2.0 * w * std::sqrt(2.0) *
                                 std::exp(-0.5) / cfg.coupling.sigma();
        const InterpolationCheckResult res =
            interpolation_inequality_check(fields, sup_bound, lip_bound);
        r.value = res.worst_ratio;
        r.bound = res.constant;
        r.pass = res.worst_ratio <= res.constant;
      } catch (const std::exception& e) {
        r.note = e.what();
      }
      rows.push_back(std::move(r));
    }
  }

  std::filesystem::create_directories(cfg.output_dir);
  bool all_pass = true;
  json out_rows = json::array();
  for (const CheckRow& r : rows) {
    all_pass = all_pass && r.pass;
    out_rows.push_back({{"name", r.name},
                        {"pass", r.pass},
                        {"value", r.value},
                        {"bound", r.bound},
                        {"note", r.note}});
  }
  json j = {{"seed", cfg.seed}, {"checks", out_rows}, {"all_pass", all_pass}};
  write_text(cfg.output_dir + "/checks.json", j.dump(2) + "\n");
  return all_pass ? 0 : 2;
}

}  // namespace

int cli_main(int argc, const char* const* argv) {
  CLI::App app{
      "Grid laboratory for state-constrained ergodic control and mean field "
      "games"};
  app.require_subcommand(1);

  std::string config_path, out_dir, resume;
  std::uint64_t seed = 0;
  int threads = 1;

  auto add_common = [&](CLI::App* sub, bool with_resume) {
    sub->add_option("--config", config_path, "experiment configuration (JSON)")
        ->required();
    sub->add_option("--out", out_dir, "output directory, overriding the config");
    sub->add_option("--seed", seed,
                    "seed recorded in reports and driving the sampled checks");
    sub->add_option("--threads", threads, "worker threads for node sweeps")
        ->check(CLI::PositiveNumber);
    if (with_resume) {
      sub->add_option("--resume", resume, "checkpoint file to continue from");
    }
  };

  CLI::App* ergodic =
      app.add_subcommand("ergodic", "stationary value solve with checkpointing");
  CLI::App* hj =
      app.add_subcommand("hj", "backward value solve over one horizon");
  CLI::App* mfg_ergodic = app.add_subcommand(
      "mfg-ergodic", "stationary equilibrium of the coupled system");
  CLI::App* mfg_horizon =
      app.add_subcommand("mfg-horizon", "fictitious play over one horizon");
  CLI::App* longtime =
      app.add_subcommand("longtime", "horizon sweep with convergence table");
  CLI::App* checks = app.add_subcommand(
      "checks", "validation battery for the configured setup");
  add_common(ergodic, true);
  add_common(hj, false);
  add_common(mfg_ergodic, false);
  add_common(mfg_horizon, false);
  add_common(longtime, false);
  add_common(checks, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    ExperimentConfig cfg = load_config(config_path);
    if (!out_dir.empty()) cfg.output_dir = out_dir;
    const CLI::App* sub = app.get_subcommands().front();
    if (sub->count("--seed") > 0) cfg.seed = seed;

    if (app.got_subcommand(ergodic)) return run_ergodic_cmd(cfg, resume, threads);
    if (app.got_subcommand(hj)) return run_hj_cmd(cfg, threads);
    if (app.got_subcommand(mfg_ergodic)) return run_mfg_ergodic_cmd(cfg, threads);
    if (app.got_subcommand(mfg_horizon)) return run_mfg_horizon_cmd(cfg, threads);
    if (app.got_subcommand(longtime)) {
      const ConvergenceReport rep = run_longtime_experiment(cfg, threads);
      return rep.all_ok ? 0 : 2;
    }
    return run_checks_cmd(cfg, threads);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}

}  // namespace mfg

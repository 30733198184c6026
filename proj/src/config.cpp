#include "mldp/config.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include "mldp/errors.hpp"
#include "mldp/path_io.hpp"

namespace mldp {

namespace {

using nlohmann::json;

// Reads one JSON object, records every value (defaults included) into
// `norm`, and rejects keys nobody asked for.
class Reader {
 public:
  Reader(json j, std::string where) : j_(std::move(j)), where_(std::move(where)) {
    if (!j_.is_object()) fail("", "must be an object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  double num(const std::string& key, std::optional<double> def = std::nullopt) {
    const json* v = take(key, def.has_value());
    double x;
    if (!v) {
      x = *def;
    } else if (v->is_number()) {
      x = v->get<double>();
    } else if (v->is_string() && (*v == "inf" || *v == "-inf")) {
      x = *v == "inf" ? INFINITY : -INFINITY;
    } else {
      fail(key, "must be a number");
    }
    if (std::isfinite(x)) norm[key] = x;
    else norm[key] = x > 0 ? "inf" : "-inf";
    return x;
  }

  std::int64_t integer(const std::string& key, std::optional<std::int64_t> def = std::nullopt) {
    const json* v = take(key, def.has_value());
    std::int64_t x;
    if (!v) {
      x = *def;
    } else if (v->is_number_integer()) {
      x = v->get<std::int64_t>();
    } else if (v->is_number_float() && std::floor(v->get<double>()) == v->get<double>() &&
               std::abs(v->get<double>()) < 9e15) {
      x = static_cast<std::int64_t>(v->get<double>());
    } else {
      fail(key, "must be an integer");
    }
    norm[key] = x;
    return x;
  }

  std::uint64_t seed(const std::string& key, std::uint64_t def) {
    const json* v = take(key, true);
    std::uint64_t x = def;
    if (v) {
      if (!v->is_number_integer() || (v->is_number_integer() && !v->is_number_unsigned() && v->get<std::int64_t>() < 0)) {
        fail(key, "must be a non-negative integer");
      }
      x = v->get<std::uint64_t>();
    }
    norm[key] = x;
    return x;
  }

  bool boolean(const std::string& key, bool def) {
    const json* v = take(key, true);
    bool x = def;
    if (v) {
      if (!v->is_boolean()) fail(key, "must be true or false");
      x = v->get<bool>();
    }
    norm[key] = x;
    return x;
  }

  std::string str(const std::string& key, std::optional<std::string> def = std::nullopt) {
    const json* v = take(key, def.has_value());
    std::string x;
    if (!v) x = *def;
    else if (v->is_string()) x = v->get<std::string>();
    else fail(key, "must be a string");
    norm[key] = x;
    return x;
  }

  const json* raw(const std::string& key, bool optional) { return take(key, optional); }

  std::string path(const std::string& key) const { return where_.empty() ? key : where_ + "." + key; }

  [[noreturn]] void fail(const std::string& key, const std::string& what) const {
    throw ConfigError("config: " + (key.empty() ? where_ : path(key)) + " " + what);
  }

  void finish() const {
    for (const auto& [k, v] : j_.items()) {
      if (!used_.count(k)) throw ConfigError("config: unknown key " + path(k));
    }
  }

  json norm = json::object();

 private:
  const json* take(const std::string& key, bool optional) {
    used_.insert(key);
    if (!j_.contains(key) || j_.at(key).is_null()) {
      if (!optional) fail(key, "is required");
      return nullptr;
    }
    return &j_.at(key);
  }

  json j_;
  std::string where_;
  std::set<std::string> used_;
};

// Interior nodal values from a shape description.
std::vector<double> parse_shape(const json& j, const DiscreteTriple& t, const std::string& where, json& norm) {
  const std::size_t n = t.dim();
  if (j.is_array()) {
    std::vector<double> v;
    for (const auto& x : j) {
      if (!x.is_number()) throw ConfigError("config: " + where + " values must be numbers");
      v.push_back(x.get<double>());
    }
    if (v.size() != n) {
      throw ShapeError("config: " + where + " has " + std::to_string(v.size()) + " values, grid has " +
                       std::to_string(n) + " interior nodes");
    }
    norm = v;
    return v;
  }
  if (j.is_number()) {
    norm = json{{"kind", "constant"}, {"value", j.get<double>()}};
    return std::vector<double>(n, j.get<double>());
  }
  Reader r(j, where);
  const std::string kind = r.str("kind");
  std::vector<double> v(n, 0.0);
  if (kind == "zeros") {
  } else if (kind == "constant") {
    const double c = r.num("value");
    std::fill(v.begin(), v.end(), c);
  } else if (kind == "sine") {
    const auto mode = r.integer("mode", 1);
    const double amp = r.num("amplitude", 1.0);
    if (mode < 1 || static_cast<std::size_t>(mode) > n) {
      r.fail("mode", "must lie in [1, " + std::to_string(n) + "]");
    }
    const auto e = t.sine_mode(static_cast<std::size_t>(mode));
    for (std::size_t i = 0; i < n; ++i) v[i] = amp * e[i];
  } else if (kind == "values") {
    const json* vals = r.raw("values", false);
    json sub;
    v = parse_shape(*vals, t, r.path("values"), sub);
    r.norm["values"] = sub;
  } else if (kind == "smooth_bump") {
    const double center = r.num("center", 0.5 * (t.domain_left + t.domain_right));
    const double width = r.num("width", 0.25 * t.length());
    const double amp = r.num("amplitude", 1.0);
    if (!(width > 0.0)) r.fail("width", "must be > 0");
    for (std::size_t i = 0; i < n; ++i) {
      const double s = (t.node_positions[i + 1] - center) / width;
      v[i] = std::abs(s) < 1.0 ? amp * std::exp(1.0 - 1.0 / (1.0 - s * s)) : 0.0;
    }
  } else {
    r.fail("kind", "must be one of zeros, constant, sine, values, smooth_bump (got '" + kind + "')");
  }
  r.finish();
  for (double x : v) {
    if (!std::isfinite(x)) throw ConfigError("config: " + where + " produced non-finite values");
  }
  norm = r.norm;
  return v;
}

TimeProfile parse_profile(const json& j, double horizon, const std::string& where, json& norm) {
  if (j.is_number()) {
    norm = j.get<double>();
    return TimeProfile(j.get<double>());
  }
  if (j.is_array()) {
    std::vector<double> v;
    for (const auto& x : j) {
      if (!x.is_number()) throw ConfigError("config: " + where + " samples must be numbers");
      v.push_back(x.get<double>());
    }
    if (v.empty()) throw ConfigError("config: " + where + " needs at least one sample");
    norm = v;
    if (v.size() == 1) return TimeProfile(v[0]);
    return TimeProfile(std::move(v), horizon);
  }
  throw ConfigError("config: " + where + " must be a number or a list of samples");
}

StateFunctional parse_functional(const json& j, const DiscreteTriple& t, const std::string& where, json& norm) {
  StateFunctional f;
  if (j.is_number()) {
    f.c0 = j.get<double>();
    norm = json{{"kind", "constant"}, {"c0", f.c0}};
    return f;
  }
  Reader r(j, where);
  const std::string kind = r.str("kind", "constant");
  if (kind == "constant") f.kind = StateFunctional::Kind::constant;
  else if (kind == "affine") f.kind = StateFunctional::Kind::affine;
  else if (kind == "saturating") f.kind = StateFunctional::Kind::saturating;
  else r.fail("kind", "must be constant, affine or saturating");
  f.c0 = r.num("c0", 1.0);
  if (f.kind != StateFunctional::Kind::constant) {
    f.c1 = r.num("c1", 0.0);
    json gn;
    f.g = parse_shape(*r.raw("g", false), t, r.path("g"), gn);
    r.norm["g"] = gn;
  }
  r.finish();
  norm = r.norm;
  return f;
}

}  // namespace

ExperimentConfig parse_config(const json& doc, const std::string& base_dir) {
  ExperimentConfig cfg;
  cfg.base_dir = base_dir;
  Reader top(doc, "");

  {
    Reader r(*top.raw("triple", false), "triple");
    const double left = r.num("left", 0.0);
    const double right = r.num("right", 1.0);
    const auto n_cells = r.integer("n_cells");
    const double alpha = r.num("alpha", 2.0);
    if (!(alpha > 1.0)) r.fail("alpha", "must be > 1 (got " + format_double(alpha) + ")");
    if (n_cells < 2) r.fail("n_cells", "must be >= 2");
    if (!(right > left)) r.fail("right", "must exceed triple.left");
    r.finish();
    cfg.triple = build_triple(left, right, static_cast<int>(n_cells), alpha);
    cfg.triple_json = r.norm;
  }
  const DiscreteTriple& t = *cfg.triple;

  {
    const json* s = top.raw("solver", true);
    Reader r(s ? *s : json::object(), "solver");
    cfg.solver.T = r.num("T", 1.0);
    cfg.solver.n_steps = static_cast<int>(r.integer("n_steps", 100));
    cfg.solver.picard_tol = r.num("picard_tol", 1e-10);
    cfg.solver.picard_max_iters = static_cast<int>(r.integer("picard_max_iters", 200));
    cfg.solver.damping = r.num("damping", 0.5);
    cfg.solver.newton_fallback = r.boolean("newton_fallback", true);
    r.finish();
    cfg.solver.validate();
    top.norm["solver"] = r.norm;
  }

  {
    Reader r(*top.raw("drift", false), "drift");
    DriftSpec& d = cfg.drift;
    d.family = drift_family_from_string(r.str("family"));
    d.p = r.num("p", 2.0);
    d.p_tilde = r.num("p_tilde", 2.0);
    d.r = r.num("r", 2.0);
    json eta_norm = 0.0;
    if (const json* eta = r.raw("eta", true)) d.eta = parse_profile(*eta, cfg.solver.T, r.path("eta"), eta_norm);
    r.norm["eta"] = eta_norm;
    d.kappa = r.num("kappa", 1e-8);
    d.lambda = r.num("lambda", 1.0);
    d.order = static_cast<int>(r.integer("order", 1));
    d.declared_alpha = r.num("alpha", t.alpha);
    d.declared_delta = r.num("delta", 1.0);
    d.declared_K = r.num("K", 0.0);
    r.finish();
    validate(d);
    cfg.drift_json = r.norm;
  }
  if (cfg.solver.dt() * cfg.drift.declared_K >= 1.0) {
    throw ConfigError("config: solver dt·drift.K = " + format_double(cfg.solver.dt() * cfg.drift.declared_K) +
                      " must be < 1");
  }

  {
    Reader r(*top.raw("noise", false), "noise");
    NoiseSpec& ns = cfg.noise;
    const std::string form = r.str("form", "finite_rank");
    if (form == "finite_rank") {
      ns.form = NoiseForm::finite_rank;
      const json* terms = r.raw("terms", false);
      if (!terms->is_array() || terms->empty()) r.fail("terms", "must be a non-empty list");
      json terms_norm = json::array();
      for (std::size_t i = 0; i < terms->size(); ++i) {
        const std::string where = "noise.terms[" + std::to_string(i) + "]";
        Reader tr(terms->at(i), where);
        NoiseTerm term;
        json b_norm, s_norm, p_norm = 1.0;
        const json* b = tr.raw("b", true);
        term.coeff = b ? parse_functional(*b, t, tr.path("b"), b_norm) : StateFunctional{};
        if (!b) b_norm = json{{"kind", "constant"}, {"c0", 1.0}};
        term.shape = parse_shape(*tr.raw("shape", false), t, tr.path("shape"), s_norm);
        if (const json* p = tr.raw("time_profile", true)) term.profile = parse_profile(*p, cfg.solver.T, tr.path("time_profile"), p_norm);
        tr.finish();
        tr.norm["b"] = b_norm;
        tr.norm["shape"] = s_norm;
        tr.norm["time_profile"] = p_norm;
        terms_norm.push_back(tr.norm);
        ns.terms.push_back(std::move(term));
      }
      r.norm["terms"] = terms_norm;
    } else if (form == "diagonal_decay") {
      ns.form = NoiseForm::diagonal_decay;
      ns.decay_modes = static_cast<int>(r.integer("modes"));
      ns.decay_rate = r.num("decay_rate", 1.0);
      ns.amplitude = r.num("amplitude", 1.0);
      if (ns.decay_modes < 1 || static_cast<std::size_t>(ns.decay_modes) > t.dim()) {
        r.fail("modes", "must lie in [1, " + std::to_string(t.dim()) + "]");
      }
    } else {
      r.fail("form", "must be finite_rank or diagonal_decay");
    }
    r.finish();
    validate(ns, t);
    cfg.noise_json = r.norm;
  }

  {
    json norm = json{{"kind", "zeros"}};
    std::vector<double> v(t.dim(), 0.0);
    if (const json* x0 = top.raw("initial_state", true)) v = parse_shape(*x0, t, "initial_state", norm);
    cfg.x0 = StateVector(cfg.triple, std::move(v));
    cfg.initial_json = norm;
  }

  if (const json* c = top.raw("constraint", true)) {
    Reader r(*c, "constraint");
    ConstraintSpec spec;
    spec.kind = constraint_kind_from_string(r.str("kind"));
    switch (spec.kind) {
      case ConstraintKind::terminal_functional: {
        json wn;
        spec.weights = parse_shape(*r.raw("weights", false), t, r.path("weights"), wn);
        r.norm["weights"] = wn;
        spec.threshold = r.num("threshold");
        break;
      }
      case ConstraintKind::terminal_state: {
        json sn;
        spec.target_state = parse_shape(*r.raw("target", false), t, r.path("target"), sn);
        r.norm["target"] = sn;
        spec.tolerance = r.num("tolerance");
        break;
      }
      case ConstraintKind::path_target: {
        const std::string file = r.str("target_path_csv");
        const auto full = std::filesystem::path(file).is_absolute() ? std::filesystem::path(file)
                                                                    : std::filesystem::path(base_dir) / file;
        spec.target_path = read_path_csv(full.string(), cfg.triple);
        spec.tolerance = r.num("tolerance");
        break;
      }
    }
    r.finish();
    validate(spec, t, cfg.solver, true);
    cfg.constraint = std::move(spec);
    cfg.constraint_json = r.norm;
  }

  cfg.seed = top.seed("seed", 0);

  {
    const json* o = top.raw("optimizer", true);
    Reader r(o ? *o : json::object(), "optimizer");
    OptimizerSettings& opt = cfg.optimizer;
    opt.n_starts = static_cast<int>(r.integer("n_starts", 4));
    opt.start_scale = r.num("start_scale", 1.0);
    opt.seed = r.seed("seed", cfg.seed);
    opt.memory = static_cast<int>(r.integer("memory", 10));
    opt.max_iterations = static_cast<int>(r.integer("max_iterations", 500));
    opt.gradient_tol = r.num("gradient_tol", 1e-8);
    if (const json* b = r.raw("betas", true)) {
      if (!b->is_array()) r.fail("betas", "must be a list");
      opt.betas.clear();
      for (const auto& x : *b) {
        if (!x.is_number()) r.fail("betas", "must hold numbers");
        opt.betas.push_back(x.get<double>());
      }
    }
    r.norm["betas"] = opt.betas;
    opt.feasibility_tol = r.num("feasibility_tol", 1e-6);
    opt.restoration_iterations = static_cast<int>(r.integer("restoration_iterations", 50));
    opt.fd_mismatch = r.num("fd_mismatch", 1e-2);
    r.finish();
    opt.validate();
    top.norm["optimizer"] = r.norm;
  }

  {
    const json* s = top.raw("sweep", true);
    Reader r(s ? *s : json::object(), "sweep");
    if (const json* e = r.raw("eps_list", true)) {
      if (!e->is_array()) r.fail("eps_list", "must be a list");
      for (const auto& x : *e) {
        if (!x.is_number()) r.fail("eps_list", "must hold numbers");
        cfg.eps_list.push_back(x.get<double>());
      }
    }
    if (const json* b = r.raw("budgets", true)) {
      if (!b->is_array()) r.fail("budgets", "must be a list");
      for (const auto& x : *b) {
        if (!x.is_number() || x.get<double>() < 1 || std::floor(x.get<double>()) != x.get<double>()) {
          r.fail("budgets", "must hold positive integers");
        }
        cfg.budgets.push_back(static_cast<std::int64_t>(x.get<double>()));
      }
    }
    for (std::size_t i = 0; i < cfg.eps_list.size(); ++i) {
      if (!(cfg.eps_list[i] > 0.0)) r.fail("eps_list", "values must be > 0");
      if (i > 0 && !(cfg.eps_list[i] < cfg.eps_list[i - 1])) r.fail("eps_list", "must be strictly decreasing");
    }
    if (cfg.budgets.size() != cfg.eps_list.size()) r.fail("budgets", "must have one entry per eps");
    r.norm["eps_list"] = cfg.eps_list;
    r.norm["budgets"] = cfg.budgets;
    r.finish();
    top.norm["sweep"] = r.norm;
  }

  {
    const json* s = top.raw("simulate", true);
    Reader r(s ? *s : json::object(), "simulate");
    cfg.simulate_eps = r.num("eps", 0.1);
    cfg.simulate_samples = r.integer("samples", 1);
    if (!(cfg.simulate_eps >= 0.0) || !std::isfinite(cfg.simulate_eps)) r.fail("eps", "must be finite and >= 0");
    if (cfg.simulate_samples < 1) r.fail("samples", "must be >= 1");
    r.finish();
    top.norm["simulate"] = r.norm;
  }

  {
    const json* s = top.raw("conditions", true);
    Reader r(s ? *s : json::object(), "conditions");
    cfg.condition_samples = static_cast<int>(r.integer("samples", 1000));
    cfg.condition_options.horizon = r.num("horizon", cfg.solver.T);
    cfg.condition_options.hemicontinuity_points = static_cast<int>(r.integer("hemicontinuity_points", 41));
    cfg.condition_options.jump_factor = r.num("jump_factor", 1e3);
    cfg.condition_options.a4_tolerance = r.num("a4_tolerance", 1e-8);
    if (cfg.condition_samples < 1) r.fail("samples", "must be >= 1");
    if (cfg.condition_options.hemicontinuity_points < 3) r.fail("hemicontinuity_points", "must be >= 3");
    r.finish();
    top.norm["conditions"] = r.norm;
  }

  cfg.output_dir = top.str("output_dir", "out");
  top.finish();
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("config: cannot open " + path);
  json doc;
  try {
    doc = json::parse(is);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: malformed JSON: ") + e.what());
  }
  const auto parent = std::filesystem::path(path).parent_path();
  return parse_config(doc, parent.empty() ? "." : parent.string());
}

json to_json(const ExperimentConfig& cfg) {
  json j;
  j["triple"] = cfg.triple_json;
  j["drift"] = cfg.drift_json;
  j["noise"] = cfg.noise_json;
  j["initial_state"] = cfg.initial_json;
  if (cfg.constraint) j["constraint"] = cfg.constraint_json;
  j["solver"] = {{"T", cfg.solver.T},
                 {"n_steps", cfg.solver.n_steps},
                 {"picard_tol", cfg.solver.picard_tol},
                 {"picard_max_iters", cfg.solver.picard_max_iters},
                 {"damping", cfg.solver.damping},
                 {"newton_fallback", cfg.solver.newton_fallback}};
  const auto& o = cfg.optimizer;
  j["optimizer"] = {{"n_starts", o.n_starts},          {"start_scale", o.start_scale},
                    {"seed", o.seed},                  {"memory", o.memory},
                    {"max_iterations", o.max_iterations}, {"gradient_tol", o.gradient_tol},
                    {"betas", o.betas},                {"feasibility_tol", o.feasibility_tol},
                    {"restoration_iterations", o.restoration_iterations}, {"fd_mismatch", o.fd_mismatch}};
  j["sweep"] = {{"eps_list", cfg.eps_list}, {"budgets", cfg.budgets}};
  j["simulate"] = {{"eps", cfg.simulate_eps}, {"samples", cfg.simulate_samples}};
  const auto& c = cfg.condition_options;
  j["conditions"] = {{"samples", cfg.condition_samples},
                     {"horizon", c.horizon},
                     {"hemicontinuity_points", c.hemicontinuity_points},
                     {"jump_factor", c.jump_factor},
                     {"a4_tolerance", c.a4_tolerance}};
  j["seed"] = cfg.seed;
  j["output_dir"] = cfg.output_dir;
  return j;
}

std::string config_hash(const ExperimentConfig& cfg) {
  json j = to_json(cfg);
  j.erase("output_dir");
  const std::string text = j.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace mldp

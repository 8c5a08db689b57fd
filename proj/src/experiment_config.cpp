#include "qtransfer/experiment_config.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include "json.hpp"
#include "qtransfer/errors.hpp"

namespace qtransfer {

using nlohmann::json;

IntegratorOptions IntegratorSettings::options() const {
  IntegratorOptions o;
  o.dt = dt;
  o.dt_scale = dt_scale;
  o.step_halving_check = step_halving;
  o.reduce_to_reachable = reduce;
  return o;
}

namespace {

std::string join(const std::string& base, const std::string& key) { return base.empty() ? key : base + "." + key; }

void check_keys(const json& j, const std::string& path, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ConfigError(path, "expected an object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!ok.count(it.key())) throw ConfigError(join(path, it.key()), "unknown key");
}

double number(const json& j, const std::string& path) {
  if (!j.is_number()) throw ConfigError(path, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw ConfigError(path, "expected a finite number");
  return v;
}

int integer(const json& j, const std::string& path) {
  if (!j.is_number_integer()) throw ConfigError(path, "expected an integer");
  return j.get<int>();
}

bool boolean(const json& j, const std::string& path) {
  if (!j.is_boolean()) throw ConfigError(path, "expected true or false");
  return j.get<bool>();
}

std::string string(const json& j, const std::string& path) {
  if (!j.is_string()) throw ConfigError(path, "expected a string");
  return j.get<std::string>();
}

// Angular frequency, in rad/us, of one unit.
double unit_scale(const std::string& unit, const std::string& path) {
  const double two_pi = 2.0 * std::numbers::pi;
  if (unit == "rad/us") return 1.0;
  if (unit == "2pi*Hz") return two_pi * 1e-6;
  if (unit == "2pi*kHz") return two_pi * 1e-3;
  if (unit == "2pi*MHz") return two_pi;
  if (unit == "2pi*GHz") return two_pi * 1e3;
  throw ConfigError(path, "unknown unit '" + unit + "' (use g, rad/us, 2pi*Hz, 2pi*kHz, 2pi*MHz or 2pi*GHz)");
}

// Rates: a number in the chain unit, or a string "<x>g" in units of g.
struct RateReader {
  double per_unit = 1.0;  // g-units per chain unit

  double operator()(const json& j, const std::string& path) const {
    if (j.is_string()) {
      const auto s = j.get<std::string>();
      if (s.size() < 2 || s.back() != 'g') throw ConfigError(path, "rate strings must look like \"0.5g\"");
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(s.substr(0, s.size() - 1), &used);
      } catch (const std::exception&) {
        throw ConfigError(path, "cannot parse rate '" + s + "'");
      }
      if (used != s.size() - 1 || !std::isfinite(v)) throw ConfigError(path, "cannot parse rate '" + s + "'");
      return v;
    }
    return number(j, path) * per_unit;
  }

  cplx complex(const json& j, const std::string& path) const {
    if (j.is_array()) {
      if (j.size() != 2) throw ConfigError(path, "complex values are [re, im]");
      return {(*this)(j[0], path + "[0]"), (*this)(j[1], path + "[1]")};
    }
    return {(*this)(j, path), 0.0};
  }
};

cplx plain_complex(const json& j, const std::string& path) {
  if (j.is_array()) {
    if (j.size() != 2) throw ConfigError(path, "complex values are [re, im]");
    return {number(j[0], path + "[0]"), number(j[1], path + "[1]")};
  }
  return {number(j, path), 0.0};
}

json complex_json(cplx z) {
  if (z.imag() == 0.0) return z.real();
  return json::array({z.real(), z.imag()});
}

ExperimentKind parse_kind(const std::string& s, const std::string& path) {
  if (s == "transfer") return ExperimentKind::transfer;
  if (s == "compare") return ExperimentKind::compare;
  if (s == "fidelity-scan") return ExperimentKind::fidelity_scan;
  if (s == "stirap") return ExperimentKind::stirap;
  throw ConfigError(path, "unknown experiment '" + s + "' (transfer, compare, fidelity-scan, stirap)");
}

struct Preset {
  ChainParams chain;
  std::optional<double> g_rad_per_us;
  std::optional<PresetClaims> claims;
};

std::optional<Preset> find_preset(const std::string& name) {
  if (name == "raman-demo" || name == "raman-demo-weak") {
    Preset p;
    const double om = name == "raman-demo" ? 0.02 : 0.01;
    p.chain = ChainParams::end_driven(3, 10.0, 0.5, om, om);
    return p;
  }
  if (name == "stripline-hardware") {
    // g = 2pi x 200 MHz; every rate below is relative to it.
    Preset p;
    p.chain = ChainParams::end_driven(3, 10.0, 0.5, 0.01, 0.01);
    p.chain.gamma = 1e-4;
    p.chain.kappa = 2.5e-4;
    p.g_rad_per_us = 2.0 * std::numbers::pi * 200.0;
    p.claims = PresetClaims{100, 0.88, 0.01};
    return p;
  }
  return std::nullopt;
}

void apply_omega_ends(ChainParams& c, cplx first, cplx last) {
  c.omega.assign(static_cast<std::size_t>(c.nodes), cplx{0.0});
  c.omega.front() = first;
  c.omega.back() = last;
}

void parse_chain(const json& j, ExperimentConfig& cfg, const std::string& path) {
  check_keys(j, path,
             {"unit", "g", "nodes", "delta", "j_c", "omega", "omega_first", "omega_last", "gamma", "kappa", "n_max",
              "boundary", "storage_branching", "storage_detuning", "g_rad_per_us"});
  ChainParams& c = cfg.chain;
  RateReader rate;
  if (j.contains("unit")) {
    const auto unit = string(j["unit"], join(path, "unit"));
    if (unit != "g") {
      if (!j.contains("g")) throw ConfigError(join(path, "g"), "required when a physical unit is used");
      const double g_phys = number(j["g"], join(path, "g"));
      if (!(g_phys > 0.0)) throw ConfigError(join(path, "g"), "must be positive");
      rate.per_unit = 1.0 / g_phys;
      cfg.g_rad_per_us = g_phys * unit_scale(unit, join(path, "unit"));
    } else if (j.contains("g") && number(j["g"], join(path, "g")) != 1.0) {
      throw ConfigError(join(path, "g"), "must be 1 when the unit is g");
    }
  } else if (j.contains("g") && number(j["g"], join(path, "g")) != 1.0) {
    throw ConfigError(join(path, "g"), "must be 1 when the unit is g");
  }
  if (j.contains("g_rad_per_us")) {
    const double v = number(j["g_rad_per_us"], join(path, "g_rad_per_us"));
    if (!(v > 0.0)) throw ConfigError(join(path, "g_rad_per_us"), "must be positive");
    cfg.g_rad_per_us = v;
  }

  const int old_nodes = c.nodes;
  if (j.contains("nodes")) c.nodes = integer(j["nodes"], join(path, "nodes"));
  if (j.contains("delta")) c.delta = rate(j["delta"], join(path, "delta"));
  if (j.contains("j_c")) c.j_c = rate(j["j_c"], join(path, "j_c"));
  if (j.contains("gamma")) c.gamma = rate(j["gamma"], join(path, "gamma"));
  if (j.contains("kappa")) c.kappa = rate(j["kappa"], join(path, "kappa"));
  if (j.contains("storage_detuning")) c.storage_detuning = rate(j["storage_detuning"], join(path, "storage_detuning"));
  if (j.contains("storage_branching"))
    c.storage_branching = number(j["storage_branching"], join(path, "storage_branching"));
  if (j.contains("n_max")) c.n_max = integer(j["n_max"], join(path, "n_max"));
  if (j.contains("boundary")) {
    const auto b = string(j["boundary"], join(path, "boundary"));
    if (b == "periodic") c.boundary = Boundary::periodic;
    else if (b == "open") c.boundary = Boundary::open;
    else throw ConfigError(join(path, "boundary"), "expected 'periodic' or 'open'");
  }
  if (c.nodes < 2) throw ConfigError(join(path, "nodes"), "need at least 2 nodes");

  if (j.contains("omega") && (j.contains("omega_first") || j.contains("omega_last")))
    throw ConfigError(join(path, "omega"), "give either 'omega' or 'omega_first'/'omega_last', not both");
  if (j.contains("omega")) {
    const auto& o = j["omega"];
    const auto opath = join(path, "omega");
    if (!o.is_array()) throw ConfigError(opath, "expected one entry per node");
    if (static_cast<int>(o.size()) != c.nodes)
      throw ConfigError(opath, "has " + std::to_string(o.size()) + " entries for " + std::to_string(c.nodes) + " nodes");
    c.omega.clear();
    for (std::size_t i = 0; i < o.size(); ++i) c.omega.push_back(rate.complex(o[i], opath + "[" + std::to_string(i) + "]"));
  } else if (j.contains("omega_first") || j.contains("omega_last") || c.nodes != old_nodes) {
    // Keep end drives from the preset (or previous value) when only the size changes.
    cplx first = c.omega.empty() ? cplx{0.0} : c.omega.front();
    cplx last = c.omega.empty() ? cplx{0.0} : c.omega.back();
    if (j.contains("omega_first")) first = rate.complex(j["omega_first"], join(path, "omega_first"));
    if (j.contains("omega_last")) last = rate.complex(j["omega_last"], join(path, "omega_last"));
    apply_omega_ends(c, first, last);
  }
  try {
    c.validate();
  } catch (const DomainError& e) {
    throw ConfigError(path, e.what());
  }
}

void parse_grid(const json& j, ExperimentConfig& cfg, const std::string& path) {
  check_keys(j, path, {"t0", "t1", "n_steps", "stride"});
  if (j.contains("t0")) cfg.grid.t0 = number(j["t0"], join(path, "t0"));
  if (j.contains("t1")) {
    if (j["t1"].is_string()) {
      if (j["t1"].get<std::string>() != "auto") throw ConfigError(join(path, "t1"), "expected a number or \"auto\"");
      cfg.grid_auto_end = true;
    } else {
      cfg.grid.t1 = number(j["t1"], join(path, "t1"));
      cfg.grid_auto_end = false;
    }
  }
  if (j.contains("n_steps")) cfg.grid.n_steps = integer(j["n_steps"], join(path, "n_steps"));
  if (j.contains("stride")) cfg.grid.stride = integer(j["stride"], join(path, "stride"));
  if (cfg.grid.n_steps < 1) throw ConfigError(join(path, "n_steps"), "must be at least 1");
  if (cfg.grid.stride < 1) throw ConfigError(join(path, "stride"), "must be at least 1");
  if (!cfg.grid_auto_end && !(cfg.grid.t1 > cfg.grid.t0)) throw ConfigError(join(path, "t1"), "must exceed t0");
}

void parse_transfer(const json& j, ExperimentConfig& cfg, const std::string& path) {
  check_keys(j, path, {"alpha", "beta", "backend"});
  if (j.contains("alpha")) cfg.alpha = plain_complex(j["alpha"], join(path, "alpha"));
  if (j.contains("beta")) cfg.beta = plain_complex(j["beta"], join(path, "beta"));
  if (j.contains("backend")) {
    try {
      cfg.backend = parse_backend(string(j["backend"], join(path, "backend")));
    } catch (const ConfigError& e) {
      throw ConfigError(join(path, "backend"), std::string(e.what()).substr(e.key_path().size() + 2));
    }
  }
  const double norm = std::norm(cfg.alpha) + std::norm(cfg.beta);
  if (std::abs(norm - 1.0) > 1e-9) throw ConfigError(path, "|alpha|^2 + |beta|^2 must equal 1");
}

void parse_schedule(const json& j, ExperimentConfig& cfg, const std::string& path, const RateReader& rate) {
  check_keys(j, path, {"shape", "amp1", "ampN", "t_center1", "t_centerN", "width", "total_time", "overlap"});
  PulseSchedule s;
  if (j.contains("overlap")) {
    for (const char* k : {"t_center1", "t_centerN", "total_time"})
      if (j.contains(k)) throw ConfigError(join(path, k), "not allowed together with 'overlap'");
    for (const char* k : {"amp1", "ampN", "width"})
      if (!j.contains(k)) throw ConfigError(join(path, k), "required");
    if (j.contains("shape") && string(j["shape"], join(path, "shape")) != "sin2")
      throw ConfigError(join(path, "shape"), "'overlap' sequences are sin2");
    try {
      s = PulseSchedule::sin2_sequence(rate(j["amp1"], join(path, "amp1")), rate(j["ampN"], join(path, "ampN")),
                                       number(j["width"], join(path, "width")),
                                       number(j["overlap"], join(path, "overlap")));
    } catch (const DomainError& e) {
      throw ConfigError(path, e.what());
    }
    cfg.schedule = s;
    return;
  }
  for (const char* k : {"amp1", "ampN", "t_center1", "t_centerN", "width", "total_time"})
    if (!j.contains(k)) throw ConfigError(join(path, k), "required");
  if (j.contains("shape")) {
    const auto sh = string(j["shape"], join(path, "shape"));
    if (sh == "sin2") s.shape = PulseShape::sin2;
    else if (sh == "gaussian") s.shape = PulseShape::gaussian;
    else throw ConfigError(join(path, "shape"), "expected 'sin2' or 'gaussian'");
  }
  s.amp1 = rate(j["amp1"], join(path, "amp1"));
  s.ampN = rate(j["ampN"], join(path, "ampN"));
  s.t_center1 = number(j["t_center1"], join(path, "t_center1"));
  s.t_centerN = number(j["t_centerN"], join(path, "t_centerN"));
  s.width = number(j["width"], join(path, "width"));
  s.total_time = number(j["total_time"], join(path, "total_time"));
  try {
    s.validate();
  } catch (const DomainError& e) {
    throw ConfigError(path, e.what());
  }
  cfg.schedule = s;
}

void parse_scan(const json& j, ExperimentConfig& cfg, const std::string& path) {
  check_keys(j, path, {"nodes", "nodes_from", "nodes_to"});
  ScanSettings s;
  if (j.contains("nodes")) {
    if (j.contains("nodes_from") || j.contains("nodes_to"))
      throw ConfigError(join(path, "nodes"), "give either a list or a range");
    const auto& n = j["nodes"];
    if (!n.is_array()) throw ConfigError(join(path, "nodes"), "expected a list of integers");
    for (std::size_t i = 0; i < n.size(); ++i) s.nodes.push_back(integer(n[i], join(path, "nodes") + "[" + std::to_string(i) + "]"));
  } else {
    if (!j.contains("nodes_from") || !j.contains("nodes_to"))
      throw ConfigError(path, "needs 'nodes' or both 'nodes_from' and 'nodes_to'");
    const int a = integer(j["nodes_from"], join(path, "nodes_from"));
    const int b = integer(j["nodes_to"], join(path, "nodes_to"));
    if (b < a) throw ConfigError(join(path, "nodes_to"), "must not be below nodes_from");
    for (int n = a; n <= b; ++n) s.nodes.push_back(n);
  }
  if (s.nodes.empty()) throw ConfigError(join(path, "nodes"), "must not be empty");
  for (int n : s.nodes)
    if (n < 2) throw ConfigError(join(path, "nodes"), "every entry needs at least 2 nodes");
  cfg.scan = s;
}

}  // namespace

std::string to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::transfer: return "transfer";
    case ExperimentKind::compare: return "compare";
    case ExperimentKind::fidelity_scan: return "fidelity-scan";
    case ExperimentKind::stirap: return "stirap";
  }
  return "?";
}

std::string to_string(Backend b) {
  switch (b) {
    case Backend::schrodinger: return "schrodinger";
    case Backend::lindblad: return "lindblad";
    case Backend::mcwf: return "mcwf";
    case Backend::effective: return "effective";
  }
  return "?";
}

Backend parse_backend(std::string_view s) {
  if (s == "schrodinger") return Backend::schrodinger;
  if (s == "lindblad") return Backend::lindblad;
  if (s == "mcwf") return Backend::mcwf;
  if (s == "effective") return Backend::effective;
  throw ConfigError("backend", "unknown backend '" + std::string(s) + "' (schrodinger, lindblad, mcwf, effective)");
}

std::vector<std::string> preset_names() { return {"raman-demo", "raman-demo-weak", "stripline-hardware"}; }

std::optional<PresetClaims> ExperimentConfig::claims() const {
  if (auto p = find_preset(preset)) return p->claims;
  return std::nullopt;
}

void ExperimentConfig::validate() const {
  try {
    chain.validate();
  } catch (const DomainError& e) {
    throw ConfigError("chain", e.what());
  }
  if (experiment == ExperimentKind::fidelity_scan && (!scan || scan->nodes.empty()))
    throw ConfigError("scan", "required for a fidelity-scan experiment");
  if (experiment == ExperimentKind::stirap && !schedule)
    throw ConfigError("schedule", "required for a stirap experiment");
  if ((experiment == ExperimentKind::transfer || experiment == ExperimentKind::compare) &&
      backend == Backend::mcwf && !mcwf)
    throw ConfigError("mcwf", "required for the mcwf backend");
  if (experiment == ExperimentKind::compare && backend == Backend::effective)
    throw ConfigError("transfer.backend", "compare needs a full-model backend");
  if (mcwf && mcwf->n_traj < 1) throw ConfigError("mcwf.n_traj", "must be at least 1");
  if (intermediate_mode && (*intermediate_mode < 0 || *intermediate_mode >= chain.nodes))
    throw ConfigError("stirap.intermediate_mode", "out of range");
  if (!(integrator.dt >= 0.0)) throw ConfigError("integrator.dt", "must be non-negative");
  if (!(integrator.dt_scale > 0.0)) throw ConfigError("integrator.dt_scale", "must be positive");
  if (output.dir.empty()) throw ConfigError("output.dir", "must not be empty");
}

ExperimentConfig parse_config(std::string_view text) {
  json root;
  try {
    root = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ConfigError("", std::string("invalid JSON: ") + e.what());
  }
  check_keys(root, "", {"experiment", "preset", "chain", "grid", "transfer", "mcwf", "scan", "schedule", "stirap",
                        "effective", "integrator", "output"});
  ExperimentConfig cfg;
  if (!root.contains("experiment")) throw ConfigError("experiment", "required");
  cfg.experiment = parse_kind(string(root["experiment"], "experiment"), "experiment");
  if (cfg.experiment == ExperimentKind::compare) cfg.backend = Backend::lindblad;

  if (root.contains("preset")) {
    cfg.preset = string(root["preset"], "preset");
    auto p = find_preset(cfg.preset);
    if (!p) {
      std::string names;
      for (const auto& n : preset_names()) names += (names.empty() ? "" : ", ") + n;
      throw ConfigError("preset", "unknown preset '" + cfg.preset + "' (" + names + ")");
    }
    cfg.chain = p->chain;
    cfg.g_rad_per_us = p->g_rad_per_us;
  }

  RateReader rate;
  if (root.contains("chain")) {
    parse_chain(root["chain"], cfg, "chain");
    if (root["chain"].contains("unit") && root["chain"]["unit"] != "g")
      rate.per_unit = 1.0 / root["chain"]["g"].get<double>();
  }
  if (root.contains("grid")) parse_grid(root["grid"], cfg, "grid");
  if (root.contains("transfer")) parse_transfer(root["transfer"], cfg, "transfer");
  if (root.contains("mcwf")) {
    const auto& j = root["mcwf"];
    check_keys(j, "mcwf", {"n_traj", "seed"});
    McwfSettings m;
    if (j.contains("n_traj")) m.n_traj = integer(j["n_traj"], "mcwf.n_traj");
    if (j.contains("seed")) {
      if (!j["seed"].is_number_unsigned() && !(j["seed"].is_number_integer() && j["seed"].get<long long>() >= 0))
        throw ConfigError("mcwf.seed", "expected a non-negative integer");
      m.seed = j["seed"].get<std::uint64_t>();
    }
    cfg.mcwf = m;
  }
  if (root.contains("scan")) parse_scan(root["scan"], cfg, "scan");
  if (root.contains("schedule")) parse_schedule(root["schedule"], cfg, "schedule", rate);
  if (root.contains("stirap")) {
    const auto& j = root["stirap"];
    check_keys(j, "stirap", {"backend", "intermediate_mode"});
    if (j.contains("backend")) {
      const auto b = string(j["backend"], "stirap.backend");
      if (b == "effective") cfg.stirap_backend = StirapBackend::effective;
      else if (b == "exact") cfg.stirap_backend = StirapBackend::exact;
      else throw ConfigError("stirap.backend", "expected 'effective' or 'exact'");
    }
    if (j.contains("intermediate_mode")) {
      if (j["intermediate_mode"].is_string()) {
        if (j["intermediate_mode"] != "auto") throw ConfigError("stirap.intermediate_mode", "expected an integer or \"auto\"");
      } else {
        cfg.intermediate_mode = integer(j["intermediate_mode"], "stirap.intermediate_mode");
      }
    }
  }
  if (root.contains("effective")) {
    const auto& j = root["effective"];
    check_keys(j, "effective", {"omega_k_rule"});
    if (j.contains("omega_k_rule")) {
      const auto r = string(j["omega_k_rule"], "effective.omega_k_rule");
      if (r == "pairwise") cfg.omega_k_rule = OmegaKRule::pairwise;
      else if (r == "global") cfg.omega_k_rule = OmegaKRule::global;
      else throw ConfigError("effective.omega_k_rule", "expected 'pairwise' or 'global'");
    }
  }
  if (root.contains("integrator")) {
    const auto& j = root["integrator"];
    check_keys(j, "integrator", {"dt", "dt_scale", "step_halving", "reduce"});
    if (j.contains("dt")) cfg.integrator.dt = number(j["dt"], "integrator.dt");
    if (j.contains("dt_scale")) cfg.integrator.dt_scale = number(j["dt_scale"], "integrator.dt_scale");
    if (j.contains("step_halving")) cfg.integrator.step_halving = boolean(j["step_halving"], "integrator.step_halving");
    if (j.contains("reduce")) cfg.integrator.reduce = boolean(j["reduce"], "integrator.reduce");
  }
  if (root.contains("output")) {
    const auto& j = root["output"];
    check_keys(j, "output", {"dir", "plots"});
    if (j.contains("dir")) cfg.output.dir = string(j["dir"], "output.dir");
    if (j.contains("plots")) cfg.output.plots = boolean(j["plots"], "output.plots");
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string dump_config(const ExperimentConfig& cfg, int indent) {
  json root;
  root["experiment"] = to_string(cfg.experiment);
  if (!cfg.preset.empty()) root["preset"] = cfg.preset;
  const auto& c = cfg.chain;
  json chain{{"unit", "g"},
             {"nodes", c.nodes},
             {"delta", c.delta},
             {"j_c", c.j_c},
             {"gamma", c.gamma},
             {"kappa", c.kappa},
             {"n_max", c.n_max},
             {"boundary", c.boundary == Boundary::periodic ? "periodic" : "open"},
             {"storage_branching", c.storage_branching},
             {"storage_detuning", c.storage_detuning}};
  if (!c.omega.empty()) {
    json omega = json::array();
    for (int i = 0; i < c.nodes; ++i) omega.push_back(complex_json(c.omega_at(i)));
    chain["omega"] = omega;
  }
  if (cfg.g_rad_per_us) chain["g_rad_per_us"] = *cfg.g_rad_per_us;
  root["chain"] = chain;

  json grid{{"t0", cfg.grid.t0}, {"n_steps", cfg.grid.n_steps}, {"stride", cfg.grid.stride}};
  grid["t1"] = cfg.grid_auto_end ? json("auto") : json(cfg.grid.t1);
  root["grid"] = grid;
  root["transfer"] = {{"alpha", complex_json(cfg.alpha)}, {"beta", complex_json(cfg.beta)},
                      {"backend", to_string(cfg.backend)}};
  if (cfg.mcwf) root["mcwf"] = {{"n_traj", cfg.mcwf->n_traj}, {"seed", cfg.mcwf->seed}};
  if (cfg.scan) root["scan"] = {{"nodes", cfg.scan->nodes}};
  if (cfg.schedule) {
    const auto& s = *cfg.schedule;
    root["schedule"] = {{"shape", s.shape == PulseShape::sin2 ? "sin2" : "gaussian"},
                        {"amp1", s.amp1},
                        {"ampN", s.ampN},
                        {"t_center1", s.t_center1},
                        {"t_centerN", s.t_centerN},
                        {"width", s.width},
                        {"total_time", s.total_time}};
  }
  json st{{"backend", cfg.stirap_backend == StirapBackend::effective ? "effective" : "exact"}};
  st["intermediate_mode"] = cfg.intermediate_mode ? json(*cfg.intermediate_mode) : json("auto");
  root["stirap"] = st;
  root["effective"] = {{"omega_k_rule", cfg.omega_k_rule == OmegaKRule::pairwise ? "pairwise" : "global"}};
  root["integrator"] = {{"dt", cfg.integrator.dt},
                        {"dt_scale", cfg.integrator.dt_scale},
                        {"step_halving", cfg.integrator.step_halving},
                        {"reduce", cfg.integrator.reduce}};
  root["output"] = {{"dir", cfg.output.dir}, {"plots", cfg.output.plots}};
  return root.dump(indent);
}

}  // namespace qtransfer

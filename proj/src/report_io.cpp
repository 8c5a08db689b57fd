#include "qtransfer/report_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "qtransfer/errors.hpp"
#include "qtransfer/version.hpp"

namespace qtransfer {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

std::string num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// JSON has no NaN/inf; emit null for them.
json jnum(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json jcplx(cplx z) { return json::array({jnum(z.real()), jnum(z.imag())}); }

json jflags(const ValidityFlags& f) {
  return {{"modes_positive", f.modes_positive},   {"strong_detuning", f.strong_detuning},
          {"weak_drive", f.weak_drive},           {"low_cavity_loss", f.low_cavity_loss},
          {"low_emission", f.low_emission},       {"dispersive_modes", f.dispersive_modes},
          {"raman_regime", f.raman_regime},       {"estimate_in_range", f.estimate_in_range},
          {"all", f.all()}};
}

json jmodel(const EffectiveModel& m) {
  json e;
  e["theta_r"] = jcplx(m.theta_r);
  e["t_f"] = jnum(m.t_f);
  e["gamma_e"] = jnum(m.gamma_e);
  e["gamma_c"] = jnum(m.gamma_c);
  e["f_est"] = jnum(m.f_est);
  e["f_unclamped"] = jnum(m.f_unclamped);
  e["e_k"] = m.e_k;
  e["flags"] = jflags(m.flags);
  return e;
}

json jmeta(const Metadata& m) {
  json j = json::object();
  for (const auto& [k, v] : m) {
    if (k == "config") j[k] = json::parse(v);
    else j[k] = v;
  }
  return j;
}

}  // namespace

Metadata run_metadata(const ExperimentConfig& cfg, const TrajectoryResult* run) {
  Metadata m;
  if (run) m = run->metadata;
  m["config"] = dump_config(cfg, -1);
  m["version"] = kVersion;
  m["experiment"] = to_string(cfg.experiment);
  if (!m.count("backend")) m["backend"] = to_string(cfg.backend);
  if (cfg.backend == Backend::mcwf && cfg.mcwf) {
    m["seed"] = std::to_string(cfg.mcwf->seed);
    m["n_traj"] = std::to_string(cfg.mcwf->n_traj);
  }
  m["dt_scale"] = num(cfg.integrator.dt_scale);
  if (cfg.integrator.dt > 0.0) m["dt_requested"] = num(cfg.integrator.dt);
  return m;
}

std::string format_csv(const TrajectoryResult& r, const Metadata& meta) {
  std::ostringstream os;
  for (const auto& [k, v] : meta) {
    std::string flat = v;
    std::replace(flat.begin(), flat.end(), '\n', ' ');
    os << "# " << k << ": " << flat << '\n';
  }
  os << 't';
  for (const auto& n : r.names) os << ',' << n;
  const bool err = !r.errors.empty();
  if (err)
    for (const auto& n : r.names) os << ',' << n << "_stderr";
  os << '\n';
  for (std::size_t i = 0; i < r.times.size(); ++i) {
    os << num(r.times[i]);
    for (const auto& v : r.values) os << ',' << num(v[i]);
    if (err)
      for (const auto& e : r.errors) os << ',' << num(e[i]);
    os << '\n';
  }
  return os.str();
}

std::vector<double> CsvTable::column(const std::string& name) const {
  const auto it = std::find(columns.begin(), columns.end(), name);
  if (it == columns.end()) throw DomainError("no column '" + name + "'");
  const auto c = static_cast<std::size_t>(it - columns.begin());
  std::vector<double> out;
  for (const auto& r : rows) out.push_back(r.at(c));
  return out;
}

CsvTable parse_csv(const std::string& text) {
  CsvTable t;
  std::istringstream is(text);
  std::string line;
  bool header = false;
  auto split = [](const std::string& s) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ls(s);
    while (std::getline(ls, cell, ',')) out.push_back(cell);
    return out;
  };
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (line.rfind("# ", 0) == 0) {
      const auto colon = line.find(": ");
      if (colon != std::string::npos) t.metadata[line.substr(2, colon - 2)] = line.substr(colon + 2);
      continue;
    }
    if (!header) {
      t.columns = split(line);
      header = true;
      continue;
    }
    std::vector<double> row;
    for (const auto& c : split(line)) row.push_back(std::stod(c));
    if (row.size() != t.columns.size()) throw DomainError("CSV row width does not match the header");
    t.rows.push_back(std::move(row));
  }
  return t;
}

std::string format_svg(const TrajectoryResult& r, const std::string& title, const std::vector<std::string>& names) {
  const double w = 720, h = 420, ml = 60, mr = 150, mt = 36, mb = 44;
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < r.names.size(); ++i)
    if (names.empty() || std::find(names.begin(), names.end(), r.names[i]) != names.end()) idx.push_back(i);
  double ymin = 0.0, ymax = 1.0;
  for (auto i : idx)
    for (double v : r.values[i]) {
      if (std::isfinite(v)) {
        ymin = std::min(ymin, v);
        ymax = std::max(ymax, v);
      }
    }
  const double t0 = r.times.empty() ? 0.0 : r.times.front();
  const double t1 = r.times.empty() || r.times.back() == t0 ? t0 + 1.0 : r.times.back();
  auto px = [&](double t) { return ml + (t - t0) / (t1 - t0) * (w - ml - mr); };
  auto py = [&](double y) { return h - mb - (y - ymin) / (ymax - ymin) * (h - mt - mb); };
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << w / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" << title << "</text>\n";
  os << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << w - ml - mr << "\" height=\"" << h - mt - mb
     << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double y = ymin + (ymax - ymin) * k / 4.0, t = t0 + (t1 - t0) * k / 4.0;
    os << "<text x=\"" << ml - 6 << "\" y=\"" << py(y) + 4 << "\" text-anchor=\"end\">" << num(std::round(y * 1e3) / 1e3) << "</text>\n";
    os << "<text x=\"" << px(t) << "\" y=\"" << h - mb + 16 << "\" text-anchor=\"middle\">" << num(std::round(t * 10) / 10) << "</text>\n";
  }
  os << "<text x=\"" << (ml + w - mr) / 2 << "\" y=\"" << h - 8 << "\" text-anchor=\"middle\">t [1/g]</text>\n";
  for (std::size_t n = 0; n < idx.size(); ++n) {
    const auto& v = r.values[idx[n]];
    const char* col = colors[n % 8];
    os << "<polyline fill=\"none\" stroke=\"" << col << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < r.times.size(); ++i)
      if (std::isfinite(v[i])) os << px(r.times[i]) << ',' << py(v[i]) << ' ';
    os << "\"/>\n";
    const double ly = mt + 14 + 18.0 * static_cast<double>(n);
    os << "<line x1=\"" << w - mr + 10 << "\" y1=\"" << ly - 4 << "\" x2=\"" << w - mr + 30 << "\" y2=\"" << ly - 4
       << "\" stroke=\"" << col << "\" stroke-width=\"2\"/>\n";
    os << "<text x=\"" << w - mr + 36 << "\" y=\"" << ly << "\">" << r.names[idx[n]] << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

std::string transfer_report(const ExperimentConfig& cfg, const TransferOutput& out) {
  json j;
  j["metadata"] = jmeta(run_metadata(cfg, &out.curves));
  j["effective_model"] = jmodel(out.model);
  j["fidelity"] = {{"recovery_gate", out.fidelity_gate},
                   {"phase_calibrated", out.fidelity_calibrated},
                   {"calibrated_phase", jcplx(out.calibrated_phase)},
                   {"no_gate", out.fidelity_no_gate}};
  j["t_end"] = out.curves.times.empty() ? json(nullptr) : json(out.curves.times.back());
  if (cfg.g_rad_per_us) j["t_f_us"] = jnum(out.model.t_f / *cfg.g_rad_per_us);
  json fin = json::object();
  for (std::size_t i = 0; i < out.curves.names.size(); ++i) fin[out.curves.names[i]] = out.curves.values[i].back();
  j["final_populations"] = fin;
  return j.dump(2);
}

std::string compare_report(const ExperimentConfig& cfg, const CompareOutput& out) {
  const auto& s = out.summary;
  json j;
  j["metadata"] = jmeta(run_metadata(cfg, &out.exact));
  j["effective_model"] = jmodel(out.model);
  j["deviation"] = {{"max_abs_first", s.max_dev_first}, {"max_abs_last", s.max_dev_last},
                    {"mean_abs_first", s.mean_dev_first}, {"mean_abs_last", s.mean_dev_last},
                    {"peak_leakage", s.peak_leakage}};
  j["final_exact"] = {{"first", s.final_first}, {"last", s.final_last}};
  j["t_f"] = jnum(s.t_f);
  j["theta_r"] = jcplx(s.theta_r);
  j["measured_peak_time"] = jnum(s.measured_t_f);
  return j.dump(2);
}

std::string fidelity_report(const ExperimentConfig& cfg, const FidelityReport& rep) {
  json j;
  j["metadata"] = jmeta(run_metadata(cfg));
  json rows = json::array();
  for (const auto& r : rep.rows) {
    rows.push_back({{"nodes", r.nodes},
                    {"theta_r", jcplx(r.theta_r)},
                    {"t_f", jnum(r.t_f)},
                    {"t_f_us", jnum(r.t_f_us)},
                    {"gamma_e", jnum(r.gamma_e)},
                    {"gamma_c", jnum(r.gamma_c)},
                    {"f_est", jnum(r.f_est)},
                    {"f_unclamped", jnum(r.f_unclamped)},
                    {"flags", jflags(r.flags)}});
  }
  j["rows"] = rows;
  j["nonincreasing"] = rep.nonincreasing;
  j["max_increase"] = rep.max_increase;
  j["max_increase_at"] = rep.max_increase_at;
  if (rep.claims) {
    const auto& c = *rep.claims;
    j["claim_comparison"] = {{"nodes", c.nodes},
                             {"computed_fidelity", c.computed_f},
                             {"claimed_fidelity", c.claimed_f},
                             {"fidelity_agrees", c.fidelity_agrees},
                             {"computed_t_f_us", jnum(c.computed_t_f_us)},
                             {"claimed_t_f_us", c.claimed_t_f_us},
                             {"time_agrees", c.time_agrees}};
  }
  return j.dump(2);
}

std::string fidelity_table_csv(const ExperimentConfig& cfg, const FidelityReport& rep) {
  std::ostringstream os;
  for (const auto& [k, v] : run_metadata(cfg)) os << "# " << k << ": " << v << '\n';
  os << "nodes,theta_r_re,theta_r_im,t_f,t_f_us,gamma_e,gamma_c,f_est,f_unclamped,valid\n";
  for (const auto& r : rep.rows)
    os << r.nodes << ',' << num(r.theta_r.real()) << ',' << num(r.theta_r.imag()) << ',' << num(r.t_f) << ','
       << num(r.t_f_us) << ',' << num(r.gamma_e) << ',' << num(r.gamma_c) << ',' << num(r.f_est) << ','
       << num(r.f_unclamped) << ',' << (r.flags.all() ? 1 : 0) << '\n';
  return os.str();
}

std::string stirap_report(const ExperimentConfig& cfg, const StirapOutput& out) {
  json j;
  j["metadata"] = jmeta(run_metadata(cfg, &out.curves));
  j["intermediate_mode"] = out.intermediate_mode;
  j["counterintuitive"] = cfg.schedule->counterintuitive();
  j["final_transfer"] = out.final_transfer;
  j["peak_intermediate"] = out.peak_upper;
  return j.dump(2);
}

std::filesystem::path write_file(const std::filesystem::path& dir, const std::string& name, const std::string& text) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error("cannot create output directory '" + dir.string() + "': " + ec.message());
  const auto path = dir / name;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw Error("write failed for '" + path.string() + "'");
  return path;
}

std::vector<std::filesystem::path> run_and_emit(const ExperimentConfig& cfg) {
  const std::filesystem::path dir = cfg.output.dir;
  std::vector<std::filesystem::path> files;
  switch (cfg.experiment) {
    case ExperimentKind::transfer: {
      const auto out = run_transfer(cfg);
      files.push_back(write_file(dir, "transfer_report.json", transfer_report(cfg, out)));
      files.push_back(write_file(dir, "transfer_curves.csv", format_csv(out.curves, run_metadata(cfg, &out.curves))));
      if (cfg.output.plots) files.push_back(write_file(dir, "transfer_curves.svg", format_svg(out.curves, "transfer")));
      break;
    }
    case ExperimentKind::compare: {
      const auto out = run_compare(cfg);
      files.push_back(write_file(dir, "compare_report.json", compare_report(cfg, out)));
      files.push_back(write_file(dir, "compare_exact.csv", format_csv(out.exact, run_metadata(cfg, &out.exact))));
      auto eff_meta = run_metadata(cfg, &out.effective);
      files.push_back(write_file(dir, "compare_effective.csv", format_csv(out.effective, eff_meta)));
      if (cfg.output.plots) {
        TrajectoryResult both = out.effective;
        for (auto& n : both.names) n += " (effective)";
        const std::string last = "P_1_" + std::to_string(cfg.chain.nodes);
        for (const auto* n : {"P_1_1", last.c_str(), "leakage"}) {
          both.names.push_back(std::string(n) + " (exact)");
          both.values.push_back(out.exact.series(n));
        }
        files.push_back(write_file(dir, "compare.svg", format_svg(both, "exact vs effective")));
      }
      break;
    }
    case ExperimentKind::fidelity_scan: {
      const auto rep = run_fidelity_scan(cfg);
      files.push_back(write_file(dir, "fidelity_report.json", fidelity_report(cfg, rep)));
      files.push_back(write_file(dir, "fidelity_scan.csv", fidelity_table_csv(cfg, rep)));
      break;
    }
    case ExperimentKind::stirap: {
      const auto out = run_stirap_experiment(cfg);
      files.push_back(write_file(dir, "stirap_report.json", stirap_report(cfg, out)));
      files.push_back(write_file(dir, "stirap_curves.csv", format_csv(out.curves, run_metadata(cfg, &out.curves))));
      if (cfg.output.plots) files.push_back(write_file(dir, "stirap_curves.svg", format_svg(out.curves, "adiabatic passage")));
      break;
    }
  }
  return files;
}

}  // namespace qtransfer

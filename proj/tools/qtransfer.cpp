// Command-line front end: qtransfer <transfer|compare|fidelity-scan|stirap|validate-config> --config FILE [...]

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "qtransfer/errors.hpp"
#include "qtransfer/experiment_config.hpp"
#include "qtransfer/report_io.hpp"
#include "qtransfer/version.hpp"

namespace {

using namespace qtransfer;

struct Overrides {
  std::string config;
  std::optional<std::string> out;
  std::optional<std::string> backend;
  std::optional<std::uint64_t> seed;
  std::optional<int> traj;
  bool plots = false;
};

int fail(const char* kind, const std::string& message, const std::string& key_path, int code) {
  nlohmann::json j{{"error", kind}, {"message", message}};
  if (!key_path.empty()) j["key_path"] = key_path;
  std::cerr << j.dump() << '\n';
  return code;
}

ExperimentConfig resolve(const Overrides& o, std::optional<ExperimentKind> kind) {
  ExperimentConfig cfg = load_config(o.config);
  if (kind && cfg.experiment != *kind)
    throw ConfigError("experiment", "config describes '" + to_string(cfg.experiment) + "' but the subcommand is '" +
                                        to_string(*kind) + "'");
  if (o.out) cfg.output.dir = *o.out;
  if (o.backend) {
    try {
      cfg.backend = parse_backend(*o.backend);
    } catch (const ConfigError& e) {
      throw ConfigError("--backend", std::string(e.what()).substr(e.key_path().size() + 2));
    }
  }
  if (o.seed || o.traj) {
    McwfSettings m = cfg.mcwf.value_or(McwfSettings{});
    if (o.seed) m.seed = *o.seed;
    if (o.traj) m.n_traj = *o.traj;
    cfg.mcwf = m;
  }
  if (o.plots) cfg.output.plots = true;
  cfg.validate();
  return cfg;
}

void add_common(CLI::App* sub, Overrides& o, bool run_flags) {
  sub->add_option("--config", o.config, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
  if (!run_flags) return;
  sub->add_option("--out", o.out, "output directory");
  sub->add_option("--backend", o.backend, "schrodinger|lindblad|mcwf|effective");
  sub->add_option("--seed", o.seed, "MCWF seed");
  sub->add_option("--traj", o.traj, "MCWF trajectory count")->check(CLI::PositiveNumber);
  sub->add_flag("--plots", o.plots, "also write SVG plots");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quantum state transfer through a coupled-cavity waveguide"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);
  Overrides o;
  struct Cmd {
    const char* name;
    const char* help;
    std::optional<ExperimentKind> kind;
  };
  const Cmd cmds[] = {
      {"transfer", "evolve to the transfer time and report the fidelity", ExperimentKind::transfer},
      {"compare", "exact dynamics against the effective Raman model", ExperimentKind::compare},
      {"fidelity-scan", "effective-model fidelity over chain lengths", ExperimentKind::fidelity_scan},
      {"stirap", "adiabatic passage with a pulse schedule", ExperimentKind::stirap},
      {"validate-config", "parse a config and print its resolved form", std::nullopt},
  };
  std::vector<std::pair<CLI::App*, const Cmd*>> subs;
  for (const auto& c : cmds) {
    auto* s = app.add_subcommand(c.name, c.help);
    add_common(s, o, c.kind.has_value());
    subs.emplace_back(s, &c);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    for (const auto& [s, c] : subs) {
      if (!s->parsed()) continue;
      if (!c->kind) {
        const auto cfg = resolve(o, std::nullopt);
        std::cout << dump_config(cfg) << '\n';
        return 0;
      }
      const auto cfg = resolve(o, c->kind);
      const auto files = run_and_emit(cfg);
      for (const auto& f : files) std::cout << f.string() << '\n';
      return 0;
    }
  } catch (const ConfigError& e) {
    return fail("config", e.what(), e.key_path(), 2);
  } catch (const DimensionError& e) {
    return fail("dimension", e.what(), "", 3);
  } catch (const DomainError& e) {
    return fail("domain", e.what(), "", 3);
  } catch (const IntegrationError& e) {
    return fail("integration", e.what(), "", 4);
  } catch (const std::exception& e) {
    return fail("internal", e.what(), "", 1);
  }
  return 1;
}

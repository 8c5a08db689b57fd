#pragma once

// File emission. CSV files start with `# key: value` metadata lines, then a
// header row `t,<obs>...,<obs>_stderr...`, then rows with 17 significant
// digits. JSON reports carry the same metadata under "metadata".

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "qtransfer/experiments.hpp"

namespace qtransfer {

using Metadata = std::map<std::string, std::string>;

/// Resolved config, artifact version, backend, seed and integrator settings.
Metadata run_metadata(const ExperimentConfig& cfg, const TrajectoryResult* run = nullptr);

std::string format_csv(const TrajectoryResult& r, const Metadata& meta);

struct CsvTable {
  Metadata metadata;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  std::vector<double> column(const std::string& name) const;
};

CsvTable parse_csv(const std::string& text);

/// Line chart of the named series (all series when empty).
std::string format_svg(const TrajectoryResult& r, const std::string& title, const std::vector<std::string>& names = {});

std::string transfer_report(const ExperimentConfig& cfg, const TransferOutput& out);
std::string compare_report(const ExperimentConfig& cfg, const CompareOutput& out);
std::string fidelity_report(const ExperimentConfig& cfg, const FidelityReport& rep);
std::string fidelity_table_csv(const ExperimentConfig& cfg, const FidelityReport& rep);
std::string stirap_report(const ExperimentConfig& cfg, const StirapOutput& out);

/// Writes `text` to dir/name, creating dir. Returns the path written.
std::filesystem::path write_file(const std::filesystem::path& dir, const std::string& name, const std::string& text);

/// Runs the configured experiment and writes its files into cfg.output.dir.
/// Returns the paths written, the JSON report first.
std::vector<std::filesystem::path> run_and_emit(const ExperimentConfig& cfg);

}  // namespace qtransfer

#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "json.hpp"
#include "okpc/config.hpp"
#include "okpc/diagnostics.hpp"
#include "okpc/scheme.hpp"

namespace okpc {

/// Exit codes of the command layer.
enum ExitCode : int { kExitOk = 0, kExitConfig = 1, kExitSolver = 2 };

int cmd_run(const RunConfig& config, std::ostream& log);
int cmd_spectrum(const RunConfig& config, std::ostream& log);
int cmd_bench(const RunConfig& config, std::ostream& log);
int cmd_cond_table(const RunConfig& config, std::ostream& log);

nlohmann::json to_json(const SolveReport& r);
nlohmann::json run_stats_json(const RunResult& r);

/// CSV writers; every file starts with its header row.
void write_snapshot_csv(const std::filesystem::path& path, const Mesh& mesh, const Snapshot& s);
void write_energy_csv(const std::filesystem::path& path, const RunResult& r);
void write_eigenvalues_csv(const std::filesystem::path& path, const ComplexVector& ev);
void write_json(const std::filesystem::path& path, const nlohmann::json& j);

}  // namespace okpc

#pragma once

#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "okpc/params.hpp"
#include "okpc/precond.hpp"

namespace okpc {

struct BenchConfig {
  /// 1D: vertices p; 2D: 2 p (both fields).
  std::vector<std::size_t> dofs;
  std::vector<std::pair<double, double>> cases;  ///< (eps, sigma)
  std::vector<PrecondKind> kinds;
  std::size_t steps = 100;
  /// dt = eps^2 for each case; otherwise params.dt.
  bool dt_eps_squared = true;
};

struct RunConfig {
  int dim = 1;
  std::size_t n = 100;
  Params params;
  PrecondConfig precond;
  std::string output_dir = "okpc_out";
  std::vector<double> snapshot_times;
  BenchConfig bench;
  std::vector<std::string> spectrum_operators{"A", "BT", "EL", "MHSS"};
  std::vector<std::size_t> cond_mhat{100, 500, 1000, 2000};
};

/// Parses a file; malformed JSON raises ConfigError "path:line:column: ...".
nlohmann::json load_json_file(const std::string& path);

/// Applies "a.b.c=value"; value is parsed as JSON, or taken as a string.
void apply_override(nlohmann::json& j, const std::string& assignment);

/// Validates every key (unknown keys are errors) and value.
RunConfig parse_config(const nlohmann::json& j);

/// File + overrides + OK_OUTPUT_DIR.
RunConfig load_config(const std::string& path, const std::vector<std::string>& overrides = {});

/// Maps a bench DOF to cells per axis.
std::size_t cells_for_dof(int dim, std::size_t dof);

}  // namespace okpc

#include "okpc/config.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "okpc/error.hpp"

namespace okpc {

namespace {

using nlohmann::json;

void check_keys(const json& obj, const std::string& where, const std::set<std::string>& allowed) {
  if (!obj.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [key, value] : obj.items()) {
    (void)value;
    if (!allowed.count(key)) {
      std::string list;
      for (const auto& a : allowed) list += (list.empty() ? "" : ", ") + a;
      throw ConfigError("unknown key '" + (where.empty() ? key : where + "." + key) + "' (allowed: " + list + ")");
    }
  }
}

double get_number(const json& obj, const std::string& where, const char* key, double fallback) {
  if (!obj.contains(key)) return fallback;
  const auto& v = obj.at(key);
  if (!v.is_number()) throw ConfigError(where + "." + key + " must be a number");
  return v.get<double>();
}

std::size_t get_count(const json& obj, const std::string& where, const char* key, std::size_t fallback) {
  if (!obj.contains(key)) return fallback;
  const auto& v = obj.at(key);
  if (!v.is_number_integer() || v.get<long long>() < 0) {
    throw ConfigError(where + "." + key + " must be a nonnegative integer");
  }
  return v.get<std::size_t>();
}

bool get_bool(const json& obj, const std::string& where, const char* key, bool fallback) {
  if (!obj.contains(key)) return fallback;
  const auto& v = obj.at(key);
  if (!v.is_boolean()) throw ConfigError(where + "." + key + " must be true or false");
  return v.get<bool>();
}

std::string get_string(const json& obj, const std::string& where, const char* key, const std::string& fallback) {
  if (!obj.contains(key)) return fallback;
  const auto& v = obj.at(key);
  if (!v.is_string()) throw ConfigError(where + "." + key + " must be a string");
  return v.get<std::string>();
}

std::pair<std::size_t, std::size_t> line_column(const std::string& text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < text.size() && i + 1 < byte; ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

}  // namespace

json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    const auto [line, col] = line_column(text, e.byte);
    std::string msg = e.what();
    const auto pos = msg.find(": ");
    if (pos != std::string::npos) msg = msg.substr(pos + 2);
    throw ConfigError(path + ":" + std::to_string(line) + ":" + std::to_string(col) + ": malformed JSON: " + msg);
  }
}

void apply_override(json& j, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + assignment + "' is not key=value");
  const std::string path = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);
  json value;
  try {
    value = json::parse(raw);
  } catch (const json::parse_error&) {
    value = raw;
  }
  json* node = &j;
  std::size_t start = 0;
  while (true) {
    const auto dot = path.find('.', start);
    const std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (key.empty()) throw ConfigError("override '" + assignment + "' has an empty key");
    if (dot == std::string::npos) {
      (*node)[key] = value;
      return;
    }
    if (!node->contains(key)) (*node)[key] = json::object();
    node = &(*node)[key];
    if (!node->is_object()) throw ConfigError("override '" + assignment + "': '" + key + "' is not a section");
    start = dot + 1;
  }
}

RunConfig parse_config(const json& j) {
  RunConfig c;
  check_keys(j, "", {"mesh", "params", "precond", "solver", "output", "bench", "spectrum", "cond"});

  if (j.contains("mesh")) {
    const auto& s = j.at("mesh");
    check_keys(s, "mesh", {"dim", "n"});
    c.dim = static_cast<int>(get_count(s, "mesh", "dim", 1));
    c.n = get_count(s, "mesh", "n", c.n);
  }
  if (c.dim != 1 && c.dim != 2) throw ConfigError("mesh.dim must be 1 or 2");
  if (c.n < 2) throw ConfigError("mesh.n must be at least 2");

  Params& p = c.params;
  if (j.contains("params")) {
    const auto& s = j.at("params");
    check_keys(s, "params", {"eps", "sigma", "dt", "m", "T", "seed", "amplitude", "lag"});
    p.eps = get_number(s, "params", "eps", p.eps);
    p.sigma = get_number(s, "params", "sigma", p.sigma);
    p.dt = get_number(s, "params", "dt", p.dt);
    p.m = get_number(s, "params", "m", p.m);
    p.T = get_number(s, "params", "T", p.T);
    p.seed = get_count(s, "params", "seed", p.seed);
    p.amplitude = get_number(s, "params", "amplitude", p.amplitude);
    const std::string lag = get_string(s, "params", "lag", "step");
    if (lag == "step") {
      p.lag = ConcaveLag::PreviousStep;
    } else if (lag == "iterate") {
      p.lag = ConcaveLag::PreviousIterate;
    } else {
      throw ConfigError("params.lag must be \"step\" or \"iterate\"");
    }
  }

  if (j.contains("solver")) {
    const auto& s = j.at("solver");
    check_keys(s, "solver",
               {"gmres_tol", "gmres_max", "restart", "cg_tol", "fp_tol", "fp_max", "ss_tol", "inner", "abort_on_fp_max"});
    p.gmres_tol = get_number(s, "solver", "gmres_tol", p.gmres_tol);
    p.gmres_max = get_count(s, "solver", "gmres_max", p.gmres_max);
    p.restart = get_count(s, "solver", "restart", p.restart);
    p.inner.cg_tol = get_number(s, "solver", "cg_tol", p.inner.cg_tol);
    p.fp_tol = get_number(s, "solver", "fp_tol", p.fp_tol);
    p.fp_max = get_count(s, "solver", "fp_max", p.fp_max);
    p.ss_tol = get_number(s, "solver", "ss_tol", p.ss_tol);
    p.abort_on_fp_max = get_bool(s, "solver", "abort_on_fp_max", p.abort_on_fp_max);
    const std::string inner = get_string(s, "solver", "inner", "cholesky");
    if (inner == "cholesky") {
      p.inner.method = InnerSolveOptions::Method::Cholesky;
    } else if (inner == "cg") {
      p.inner.method = InnerSolveOptions::Method::JacobiCg;
    } else {
      throw ConfigError("solver.inner must be \"cholesky\" or \"cg\"");
    }
  }
  p.validate();

  PrecondConfig& pc = c.precond;
  if (j.contains("precond")) {
    const auto& s = j.at("precond");
    check_keys(s, "precond", {"kind", "alpha", "eps1", "eps1_adaptive", "eps2", "safety", "a_inverse", "max_depth",
                              "probes", "seed"});
    pc.kind = precond_kind_from_string(get_string(s, "precond", "kind", to_string(pc.kind)));
    if (s.contains("alpha")) {
      const auto& a = s.at("alpha");
      if (a.is_number()) {
        pc.alpha_strategy = AlphaStrategy::Fixed;
        pc.alpha_value = a.get<double>();
      } else if (a.is_string() && (a == "trace_a" || a == "TRACE_A")) {
        pc.alpha_strategy = AlphaStrategy::TraceA;
      } else if (a.is_string() && (a == "trace_m4" || a == "TRACE_M4")) {
        pc.alpha_strategy = AlphaStrategy::TraceM4;
      } else {
        throw ConfigError("precond.alpha must be \"trace_a\", \"trace_m4\" or a positive number");
      }
    }
    pc.eps1 = get_number(s, "precond", "eps1", pc.eps1);
    pc.eps1_adaptive = get_number(s, "precond", "eps1_adaptive", pc.eps1_adaptive);
    pc.eps2 = get_number(s, "precond", "eps2", pc.eps2);
    pc.safety = get_number(s, "precond", "safety", pc.safety);
    pc.max_depth = get_count(s, "precond", "max_depth", pc.max_depth);
    pc.hutchinson_probes = get_count(s, "precond", "probes", pc.hutchinson_probes);
    pc.seed = get_count(s, "precond", "seed", pc.seed);
    const std::string ainv = get_string(s, "precond", "a_inverse", "neumann");
    if (ainv == "neumann") {
      pc.a_inverse = AInverseKind::Neumann;
    } else if (ainv == "exact") {
      pc.a_inverse = AInverseKind::Exact;
    } else {
      throw ConfigError("precond.a_inverse must be \"neumann\" or \"exact\"");
    }
  }
  pc.validate();

  if (j.contains("output")) {
    const auto& s = j.at("output");
    check_keys(s, "output", {"dir", "snapshot_times"});
    c.output_dir = get_string(s, "output", "dir", c.output_dir);
    if (s.contains("snapshot_times")) {
      const auto& t = s.at("snapshot_times");
      if (!t.is_array()) throw ConfigError("output.snapshot_times must be an array of numbers");
      for (const auto& v : t) {
        if (!v.is_number() || v.get<double>() < 0.0) {
          throw ConfigError("output.snapshot_times must hold nonnegative numbers");
        }
        c.snapshot_times.push_back(v.get<double>());
      }
    }
  }
  if (const char* env = std::getenv("OK_OUTPUT_DIR"); env != nullptr && *env != '\0') c.output_dir = env;

  if (j.contains("bench")) {
    const auto& s = j.at("bench");
    check_keys(s, "bench", {"dofs", "cases", "kinds", "steps", "dt_eps_squared"});
    BenchConfig& b = c.bench;
    if (s.contains("dofs")) {
      if (!s.at("dofs").is_array()) throw ConfigError("bench.dofs must be an array");
      for (const auto& v : s.at("dofs")) {
        if (!v.is_number_integer() || v.get<long long>() < 3) throw ConfigError("bench.dofs entries must be integers >= 3");
        b.dofs.push_back(v.get<std::size_t>());
      }
    }
    if (s.contains("cases")) {
      if (!s.at("cases").is_array()) throw ConfigError("bench.cases must be an array of [eps, sigma]");
      for (const auto& v : s.at("cases")) {
        if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
          throw ConfigError("bench.cases entries must be [eps, sigma]");
        }
        b.cases.emplace_back(v[0].get<double>(), v[1].get<double>());
      }
    }
    if (s.contains("kinds")) {
      if (!s.at("kinds").is_array()) throw ConfigError("bench.kinds must be an array");
      for (const auto& v : s.at("kinds")) {
        if (!v.is_string()) throw ConfigError("bench.kinds entries must be strings");
        b.kinds.push_back(precond_kind_from_string(v.get<std::string>()));
      }
    }
    b.steps = get_count(s, "bench", "steps", b.steps);
    b.dt_eps_squared = get_bool(s, "bench", "dt_eps_squared", b.dt_eps_squared);
    for (auto dof : b.dofs) (void)cells_for_dof(c.dim, dof);
  }

  if (j.contains("spectrum")) {
    const auto& s = j.at("spectrum");
    check_keys(s, "spectrum", {"operators"});
    if (s.contains("operators")) {
      const auto& ops = s.at("operators");
      if (!ops.is_array() || ops.empty()) throw ConfigError("spectrum.operators must be a non-empty array");
      c.spectrum_operators.clear();
      for (const auto& v : ops) {
        if (!v.is_string()) throw ConfigError("spectrum.operators entries must be strings");
        const auto name = v.get<std::string>();
        if (name != "A" && name != "BT" && name != "EL" && name != "MHSS") {
          throw ConfigError("spectrum operator '" + name + "' is not one of A, BT, EL, MHSS");
        }
        c.spectrum_operators.push_back(name);
      }
    }
  }

  if (j.contains("cond")) {
    const auto& s = j.at("cond");
    check_keys(s, "cond", {"mhat"});
    if (s.contains("mhat")) {
      const auto& v = s.at("mhat");
      if (!v.is_array()) throw ConfigError("cond.mhat must be an array");
      c.cond_mhat.clear();
      for (const auto& x : v) {
        if (!x.is_number_integer() || x.get<long long>() < 3) throw ConfigError("cond.mhat entries must be integers >= 3");
        c.cond_mhat.push_back(x.get<std::size_t>());
      }
    }
  }
  return c;
}

RunConfig load_config(const std::string& path, const std::vector<std::string>& overrides) {
  json j = load_json_file(path);
  if (!j.is_object()) throw ConfigError(path + ": top level must be a JSON object");
  for (const auto& o : overrides) apply_override(j, o);
  return parse_config(j);
}

std::size_t cells_for_dof(int dim, std::size_t dof) {
  if (dim == 1) {
    if (dof < 3) throw ConfigError("1D DOF must be at least 3");
    return dof - 1;
  }
  if (dof % 2 != 0) throw ConfigError("2D DOF counts both fields and must be even, got " + std::to_string(dof));
  const std::size_t p = dof / 2;
  const auto side = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(p))));
  if (side * side != p || side < 3) {
    throw ConfigError("2D DOF " + std::to_string(dof) + " is not 2 (n+1)^2 for an integer n >= 2");
  }
  return side - 1;
}

}  // namespace okpc

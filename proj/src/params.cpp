#include "okpc/params.hpp"

#include <cmath>
#include <string>

#include "okpc/error.hpp"

namespace okpc {

std::size_t Params::steps() const {
  if (T <= 0.0) return 0;
  return static_cast<std::size_t>(std::llround(T / dt));
}

void Params::validate() const {
  auto require = [](bool ok, const std::string& msg) {
    if (!ok) throw ConfigError(msg);
  };
  require(std::isfinite(eps) && eps > 0.0, "eps must be positive");
  require(std::isfinite(sigma) && sigma >= 0.0, "sigma must be nonnegative");
  require(std::isfinite(dt) && dt > 0.0, "dt must be positive");
  require(std::isfinite(m) && std::abs(m) < 1.0, "m must satisfy |m| < 1");
  require(std::isfinite(T) && T >= 0.0, "T must be nonnegative");
  require(std::isfinite(amplitude) && amplitude >= 0.0, "amplitude must be nonnegative");
  require(gmres_tol > 0.0 && gmres_tol < 1.0, "gmres_tol must lie in (0, 1)");
  require(gmres_max >= 1, "gmres_max must be at least 1");
  require(fp_tol > 0.0, "fp_tol must be positive");
  require(fp_max >= 1, "fp_max must be at least 1");
  require(ss_tol >= 0.0, "ss_tol must be nonnegative");
  require(inner.cg_tol > 0.0 && inner.cg_tol < 1.0, "cg_tol must lie in (0, 1)");
}

}  // namespace okpc

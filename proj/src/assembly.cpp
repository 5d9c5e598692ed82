#include "okpc/assembly.hpp"

#include <array>
#include <cmath>
#include <string>

#include "okpc/error.hpp"

namespace okpc {

namespace {

// Three-point Gauss-Legendre on [0,1], barycentric (1 - x, x).
constexpr double kG = 0.38729833462074168852;  // sqrt(3/5) / 2
const std::array<QuadraturePoint, 3> kLineRule{{
    {{0.5 + kG, 0.5 - kG, 0.0}, 5.0 / 18.0},
    {{0.5, 0.5, 0.0}, 8.0 / 18.0},
    {{0.5 - kG, 0.5 + kG, 0.0}, 5.0 / 18.0},
}};

// Six-point symmetric rule exact for degree 4 on triangles.
constexpr double kA1 = 0.44594849091596488632;
constexpr double kW1 = 0.22338158967801146570;
constexpr double kA2 = 0.09157621350977074346;
constexpr double kW2 = 0.10995174365532186764;
const std::array<QuadraturePoint, 6> kTriangleRule{{
    {{kA1, kA1, 1.0 - 2.0 * kA1}, kW1},
    {{kA1, 1.0 - 2.0 * kA1, kA1}, kW1},
    {{1.0 - 2.0 * kA1, kA1, kA1}, kW1},
    {{kA2, kA2, 1.0 - 2.0 * kA2}, kW2},
    {{kA2, 1.0 - 2.0 * kA2, kA2}, kW2},
    {{1.0 - 2.0 * kA2, kA2, kA2}, kW2},
}};

using Local = std::array<std::array<double, 3>, 3>;

template <typename LocalFn>
SparseMatrix assemble(const Mesh& mesh, LocalFn&& local) {
  const std::size_t nv = mesh.vertices_per_element();
  std::vector<Triplet> t;
  t.reserve(mesh.num_elements() * nv * nv);
  for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
    const Local loc = local(e);
    const auto& el = mesh.elements[e];
    for (std::size_t a = 0; a < nv; ++a) {
      for (std::size_t b = 0; b < nv; ++b) t.push_back({el[a], el[b], loc[a][b]});
    }
  }
  const std::size_t p = mesh.num_vertices();
  return SparseMatrix::from_triplets(p, p, std::move(t), true);
}

}  // namespace

std::span<const QuadraturePoint> quadrature_rule(int dim) {
  if (dim == 1) return kLineRule;
  return kTriangleRule;
}

SparseMatrix assemble_mass(const Mesh& mesh) {
  return assemble(mesh, [&](std::size_t e) {
    const double meas = mesh.element_measure(e);
    Local loc{};
    if (mesh.dim == 1) {
      loc[0] = {meas / 3.0, meas / 6.0, 0.0};
      loc[1] = {meas / 6.0, meas / 3.0, 0.0};
    } else {
      for (std::size_t a = 0; a < 3; ++a) {
        for (std::size_t b = 0; b < 3; ++b) loc[a][b] = (a == b ? 2.0 : 1.0) * meas / 12.0;
      }
    }
    return loc;
  });
}

SparseMatrix assemble_stiffness(const Mesh& mesh) {
  return assemble(mesh, [&](std::size_t e) {
    const double meas = mesh.element_measure(e);
    Local loc{};
    if (mesh.dim == 1) {
      const double k = 1.0 / meas;
      loc[0] = {k, -k, 0.0};
      loc[1] = {-k, k, 0.0};
      return loc;
    }
    const auto& el = mesh.elements[e];
    const auto& p0 = mesh.vertices[el[0]];
    const auto& p1 = mesh.vertices[el[1]];
    const auto& p2 = mesh.vertices[el[2]];
    // grad phi_a = rot90(opposite edge) / (2 area)
    const std::array<std::array<double, 2>, 3> g{{
        {p1[1] - p2[1], p2[0] - p1[0]},
        {p2[1] - p0[1], p0[0] - p2[0]},
        {p0[1] - p1[1], p1[0] - p0[0]},
    }};
    const double scale = 1.0 / (4.0 * meas);
    for (std::size_t a = 0; a < 3; ++a) {
      for (std::size_t b = 0; b < 3; ++b) loc[a][b] = (g[a][0] * g[b][0] + g[a][1] * g[b][1]) * scale;
    }
    return loc;
  });
}

SparseMatrix assemble_weighted_mass(const Mesh& mesh, std::span<const double> u) {
  if (u.size() != mesh.num_vertices()) {
    throw DimensionMismatch("weighted mass: field has " + std::to_string(u.size()) + " values, mesh has " +
                            std::to_string(mesh.num_vertices()) + " vertices");
  }
  const auto rule = quadrature_rule(mesh.dim);
  const std::size_t nv = mesh.vertices_per_element();
  return assemble(mesh, [&](std::size_t e) {
    const double meas = mesh.element_measure(e);
    const auto& el = mesh.elements[e];
    Local loc{};
    for (const auto& q : rule) {
      double uh = 0.0;
      for (std::size_t a = 0; a < nv; ++a) uh += u[el[a]] * q.barycentric[a];
      const double w = q.weight * meas * uh * uh;
      for (std::size_t a = 0; a < nv; ++a) {
        for (std::size_t b = 0; b < nv; ++b) loc[a][b] += w * q.barycentric[a] * q.barycentric[b];
      }
    }
    // exact mirror so the symmetric flag holds bit-for-bit
    for (std::size_t a = 0; a < nv; ++a) {
      for (std::size_t b = a + 1; b < nv; ++b) loc[b][a] = loc[a][b];
    }
    return loc;
  });
}

double integrate_double_well(const Mesh& mesh, std::span<const double> u) {
  if (u.size() != mesh.num_vertices()) throw DimensionMismatch("double-well integral: field size mismatch");
  const auto rule = quadrature_rule(mesh.dim);
  const std::size_t nv = mesh.vertices_per_element();
  double total = 0.0;
  for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
    const auto& el = mesh.elements[e];
    double local = 0.0;
    for (const auto& q : rule) {
      double uh = 0.0;
      for (std::size_t a = 0; a < nv; ++a) uh += u[el[a]] * q.barycentric[a];
      const double s = 1.0 - uh * uh;
      local += q.weight * 0.25 * s * s;
    }
    total += local * mesh.element_measure(e);
  }
  return total;
}

RhsPair assemble_rhs(const SparseMatrix& mass, std::span<const double> mass_times_one,
                     std::span<const double> u_prev_time, std::span<const double> u_lagged, double sigma,
                     double dt, double mean_mass) {
  const std::size_t p = mass.rows();
  if (u_prev_time.size() != p || u_lagged.size() != p || mass_times_one.size() != p) {
    throw DimensionMismatch("rhs: vector length differs from matrix size");
  }
  RhsPair rhs{mass.multiply(u_prev_time), mass.multiply(u_lagged)};
  const double c = sigma * dt * mean_mass;
  for (std::size_t i = 0; i < p; ++i) {
    rhs.f[i] += c * mass_times_one[i];
    rhs.e[i] = -rhs.e[i];
  }
  return rhs;
}

}  // namespace okpc

#pragma once

#include <array>
#include <span>

#include "okpc/mesh.hpp"
#include "okpc/sparse_matrix.hpp"

namespace okpc {

/// m_ij = (phi_i, phi_j), exact elementwise integration.
SparseMatrix assemble_mass(const Mesh& mesh);

/// s_ij = (grad phi_i, grad phi_j); natural (Neumann) boundary, so S 1 = 0.
SparseMatrix assemble_stiffness(const Mesh& mesh);

/// l_ij = integral of (u_h)^2 phi_i phi_j for the P1 field with nodal values u.
///
/// The integrand has degree 4 per element. 1D uses 3-point Gauss-Legendre,
/// 2D the 6-point degree-4 symmetric triangle rule; both are exact, so
/// x^T L x <= max|u|^2 x^T M x holds to round-off.
SparseMatrix assemble_weighted_mass(const Mesh& mesh, std::span<const double> u);

/// Integral of Phi(u_h) = (1 - u_h^2)^2 / 4 with the same quadrature as L.
double integrate_double_well(const Mesh& mesh, std::span<const double> u);

/// Quadrature rule on the reference element (barycentric points).
struct QuadraturePoint {
  std::array<double, 3> barycentric;
  double weight;  ///< fraction of the element measure
};
std::span<const QuadraturePoint> quadrature_rule(int dim);

/// Right-hand sides of the linearized block system:
///   F = M U_prev_time + sigma dt m (M 1),   E = -M U_lagged.
struct RhsPair {
  Vector f;
  Vector e;
};
RhsPair assemble_rhs(const SparseMatrix& mass, std::span<const double> mass_times_one,
                     std::span<const double> u_prev_time, std::span<const double> u_lagged, double sigma,
                     double dt, double mean_mass);

}  // namespace okpc

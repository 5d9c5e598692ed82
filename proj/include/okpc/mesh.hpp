#pragma once

#include <array>
#include <cstddef>
#include <vector>

namespace okpc {

/// Uniform P1 mesh of (0,1) or (0,1)^2.
///
/// In 2D every grid cell is split into two right triangles along the
/// lower-left to upper-right diagonal. Vertices are numbered row by row,
/// x fastest: vertex (i, j) has index j * (n + 1) + i.
struct Mesh {
  int dim = 1;
  std::size_t cells_per_axis = 0;
  std::vector<std::array<double, 2>> vertices;
  /// Vertex indices; only the first dim + 1 entries are meaningful.
  std::vector<std::array<std::size_t, 3>> elements;
  double h = 0.0;

  std::size_t num_vertices() const noexcept { return vertices.size(); }
  std::size_t num_elements() const noexcept { return elements.size(); }
  std::size_t vertices_per_element() const noexcept { return static_cast<std::size_t>(dim) + 1; }

  /// Length (1D) or area (2D) of element e.
  double element_measure(std::size_t e) const;
  /// Longest edge of element e.
  double element_diameter(std::size_t e) const;

  /// Throws InvalidMesh when an invariant is broken.
  void validate() const;
};

/// Builds the uniform mesh with n cells per axis. Requires n >= 2.
Mesh build_mesh(int dim, std::size_t n);

}  // namespace okpc

#include "okpc/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "okpc/error.hpp"

namespace okpc {

namespace {

double distance(const std::array<double, 2>& a, const std::array<double, 2>& b) {
  return std::hypot(a[0] - b[0], a[1] - b[1]);
}

}  // namespace

double Mesh::element_measure(std::size_t e) const {
  const auto& el = elements[e];
  if (dim == 1) return std::abs(vertices[el[1]][0] - vertices[el[0]][0]);
  const auto& a = vertices[el[0]];
  const auto& b = vertices[el[1]];
  const auto& c = vertices[el[2]];
  return 0.5 * std::abs((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]));
}

double Mesh::element_diameter(std::size_t e) const {
  const auto& el = elements[e];
  if (dim == 1) return element_measure(e);
  const auto& a = vertices[el[0]];
  const auto& b = vertices[el[1]];
  const auto& c = vertices[el[2]];
  return std::max({distance(a, b), distance(b, c), distance(a, c)});
}

void Mesh::validate() const {
  if (dim != 1 && dim != 2) throw InvalidMesh("mesh dimension must be 1 or 2");
  if (elements.empty()) throw InvalidMesh("mesh has no elements");
  const std::size_t nv = vertices_per_element();
  double total = 0.0;
  for (std::size_t e = 0; e < elements.size(); ++e) {
    const auto& el = elements[e];
    for (std::size_t a = 0; a < nv; ++a) {
      if (el[a] >= vertices.size()) throw InvalidMesh("element " + std::to_string(e) + " references a missing vertex");
      for (std::size_t b = a + 1; b < nv; ++b) {
        if (el[a] == el[b]) throw InvalidMesh("element " + std::to_string(e) + " repeats a vertex");
      }
    }
    const double diam = element_diameter(e);
    if (std::abs(diam - h) > 1e-12 * h) throw InvalidMesh("element " + std::to_string(e) + " breaks uniform spacing");
    total += element_measure(e);
  }
  if (std::abs(total - 1.0) > 1e-12) throw InvalidMesh("elements do not cover the unit domain");
}

Mesh build_mesh(int dim, std::size_t n) {
  if (dim != 1 && dim != 2) throw InvalidMesh("mesh dimension must be 1 or 2, got " + std::to_string(dim));
  if (n < 2) throw InvalidMesh("need at least 2 cells per axis, got " + std::to_string(n));

  Mesh mesh;
  mesh.dim = dim;
  mesh.cells_per_axis = n;
  const double step = 1.0 / static_cast<double>(n);

  if (dim == 1) {
    mesh.vertices.reserve(n + 1);
    for (std::size_t i = 0; i <= n; ++i) mesh.vertices.push_back({static_cast<double>(i) * step, 0.0});
    mesh.elements.reserve(n);
    for (std::size_t i = 0; i < n; ++i) mesh.elements.push_back({i, i + 1, 0});
    mesh.h = step;
    return mesh;
  }

  mesh.vertices.reserve((n + 1) * (n + 1));
  for (std::size_t j = 0; j <= n; ++j) {
    for (std::size_t i = 0; i <= n; ++i) {
      mesh.vertices.push_back({static_cast<double>(i) * step, static_cast<double>(j) * step});
    }
  }
  mesh.elements.reserve(2 * n * n);
  const auto id = [n](std::size_t i, std::size_t j) { return j * (n + 1) + i; };
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t ll = id(i, j), lr = id(i + 1, j), ur = id(i + 1, j + 1), ul = id(i, j + 1);
      mesh.elements.push_back({ll, lr, ur});
      mesh.elements.push_back({ll, ur, ul});
    }
  }
  mesh.h = std::sqrt(2.0) * step;
  return mesh;
}

}  // namespace okpc

#pragma once

#include <map>
#include <utility>

#include "litege/geometry.hpp"

namespace litege_test {

// Axis-aligned unit cube [0,1]^3 as 12 triangles.
inline litege::TriangleMesh make_unit_cube_mesh() {
  litege::TriangleMesh mesh;
  mesh.vertices = {
      {0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0},
      {0, 0, 1}, {1, 0, 1}, {1, 1, 1}, {0, 1, 1},
  };
  mesh.faces = {
      {0, 2, 1}, {0, 3, 2},  // z = 0
      {4, 5, 6}, {4, 6, 7},  // z = 1
      {0, 1, 5}, {0, 5, 4},  // y = 0
      {3, 6, 2}, {3, 7, 6},  // y = 1
      {0, 4, 7}, {0, 7, 3},  // x = 0
      {1, 2, 6}, {1, 6, 5},  // x = 1
  };
  return mesh;
}

// True when every undirected edge is shared by exactly two faces, once in
// each direction.
inline bool is_watertight(const litege::TriangleMesh& mesh) {
  std::map<std::pair<std::uint32_t, std::uint32_t>, int> directed;
  for (const auto& f : mesh.faces) {
    for (int e = 0; e < 3; ++e) {
      std::uint32_t a = f[e], b = f[(e + 1) % 3];
      if (a == b) return false;
      ++directed[{a, b}];
    }
  }
  for (const auto& [edge, count] : directed) {
    if (count != 1) return false;
    auto rev = directed.find({edge.second, edge.first});
    if (rev == directed.end() || rev->second != 1) return false;
  }
  return true;
}

}  // namespace litege_test

#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <variant>
#include <vector>

#include "litege/error.hpp"

namespace litege {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

struct TriangleMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<std::uint32_t, 3>> faces;
};

struct PointCloud {
  std::vector<Vec3> points;
};

struct AxisBox {
  Vec3 min = Vec3::Zero();
  Vec3 max = Vec3::Zero();
};

using Shape = std::variant<TriangleMesh, PointCloud>;

// Structural checks. Throw Error(invalid_input) naming the first violation:
// mesh needs >= 3 vertices, >= 1 face, in-range indices, finite coordinates;
// cloud needs >= 1 finite point. Zero-area faces are legal.
void validate_mesh(const TriangleMesh& mesh);
void validate_cloud(const PointCloud& cloud);
void validate_shape(const Shape& shape);

std::size_t count_degenerate_faces(const TriangleMesh& mesh,
                                   double area_eps = 0.0);

double triangle_area(const Vec3& a, const Vec3& b, const Vec3& c);
double surface_area(const TriangleMesh& mesh);

AxisBox bounding_box(const std::vector<Vec3>& points);
inline AxisBox bounding_box(const PointCloud& cloud) {
  return bounding_box(cloud.points);
}
double box_surface_area(const AxisBox& box);

bool is_mesh(const Shape& shape);
const TriangleMesh& as_mesh(const Shape& shape);
const PointCloud& as_cloud(const Shape& shape);
// Vertices for a mesh, points for a cloud.
const std::vector<Vec3>& shape_points(const Shape& shape);

}  // namespace litege

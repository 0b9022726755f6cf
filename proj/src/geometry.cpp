#include "litege/geometry.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace litege {

namespace {

bool finite3(const Vec3& v) {
  return std::isfinite(v.x()) && std::isfinite(v.y()) && std::isfinite(v.z());
}

}  // namespace

void validate_mesh(const TriangleMesh& mesh) {
  if (mesh.vertices.size() < 3)
    fail_invalid("mesh: vertex count " + std::to_string(mesh.vertices.size()) +
                 " < 3");
  if (mesh.faces.empty()) fail_invalid("mesh: no faces");
  for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
    if (!finite3(mesh.vertices[i]))
      fail_invalid("mesh: non-finite vertex " + std::to_string(i));
  }
  for (std::size_t i = 0; i < mesh.faces.size(); ++i) {
    for (std::uint32_t v : mesh.faces[i]) {
      if (v >= mesh.vertices.size())
        fail_invalid("mesh: face " + std::to_string(i) + " index " +
                     std::to_string(v) + " >= vertex count " +
                     std::to_string(mesh.vertices.size()));
    }
  }
}

void validate_cloud(const PointCloud& cloud) {
  if (cloud.points.empty()) fail_invalid("cloud: no points");
  for (std::size_t i = 0; i < cloud.points.size(); ++i) {
    if (!finite3(cloud.points[i]))
      fail_invalid("cloud: non-finite point " + std::to_string(i));
  }
}

void validate_shape(const Shape& shape) {
  if (is_mesh(shape))
    validate_mesh(as_mesh(shape));
  else
    validate_cloud(as_cloud(shape));
}

std::size_t count_degenerate_faces(const TriangleMesh& mesh, double area_eps) {
  std::size_t n = 0;
  for (const auto& f : mesh.faces) {
    if (triangle_area(mesh.vertices[f[0]], mesh.vertices[f[1]],
                      mesh.vertices[f[2]]) <= area_eps)
      ++n;
  }
  return n;
}

double triangle_area(const Vec3& a, const Vec3& b, const Vec3& c) {
  return 0.5 * (b - a).cross(c - a).norm();
}

double surface_area(const TriangleMesh& mesh) {
  double area = 0.0;
  for (const auto& f : mesh.faces) {
    area += triangle_area(mesh.vertices[f[0]], mesh.vertices[f[1]],
                          mesh.vertices[f[2]]);
  }
  return area;
}

AxisBox bounding_box(const std::vector<Vec3>& points) {
  if (points.empty()) fail_invalid("bounding_box: empty point set");
  AxisBox box;
  box.min = Vec3::Constant(std::numeric_limits<double>::infinity());
  box.max = -box.min;
  for (const Vec3& p : points) {
    box.min = box.min.cwiseMin(p);
    box.max = box.max.cwiseMax(p);
  }
  return box;
}

double box_surface_area(const AxisBox& box) {
  Vec3 e = box.max - box.min;
  return 2.0 * (e.x() * e.y() + e.x() * e.z() + e.y() * e.z());
}

bool is_mesh(const Shape& shape) {
  return std::holds_alternative<TriangleMesh>(shape);
}

const TriangleMesh& as_mesh(const Shape& shape) {
  if (!is_mesh(shape)) fail_invalid("expected a mesh, got a point cloud");
  return std::get<TriangleMesh>(shape);
}

const PointCloud& as_cloud(const Shape& shape) {
  if (is_mesh(shape)) fail_invalid("expected a point cloud, got a mesh");
  return std::get<PointCloud>(shape);
}

const std::vector<Vec3>& shape_points(const Shape& shape) {
  return is_mesh(shape) ? as_mesh(shape).vertices : as_cloud(shape).points;
}

}  // namespace litege

#include <doctest.h>

#include <cmath>

#include "litege/error.hpp"
#include "litege/family.hpp"
#include "litege/geometry.hpp"
#include "test_helpers.hpp"

using namespace litege;

TEST_CASE("triangle area of the unit right triangle") {
  CHECK(triangle_area({0, 0, 0}, {1, 0, 0}, {0, 1, 0}) == doctest::Approx(0.5));
}

TEST_CASE("unit cube surface area is 6") {
  CHECK(surface_area(litege_test::make_unit_cube_mesh()) == doctest::Approx(6.0));
}

TEST_CASE("icosphere area approaches the analytic sphere area") {
  TriangleMesh sphere = make_icosphere(4);
  CHECK(sphere.vertices.size() == 2562);
  CHECK(sphere.faces.size() == 5120);
  double area = surface_area(sphere);
  CHECK(std::abs(area - 4.0 * M_PI) / (4.0 * M_PI) < 0.01);
}

TEST_CASE("bounding box examples") {
  PointCloud cube;
  for (double x : {0.0, 1.0})
    for (double y : {0.0, 1.0})
      for (double z : {0.0, 1.0}) cube.points.push_back({x, y, z});
  AxisBox box = bounding_box(cube);
  CHECK(box.min == Vec3(0, 0, 0));
  CHECK(box.max == Vec3(1, 1, 1));
  CHECK(box_surface_area(box) == doctest::Approx(6.0));

  PointCloud single{{{2, 3, 4}}};
  CHECK(box_surface_area(bounding_box(single)) == doctest::Approx(0.0));

  PointCloud four{{{-1, 0, 0}, {2, 0, 0}, {0, 3, 0}, {0, 0, 1}}};
  AxisBox b4 = bounding_box(four);
  Vec3 extents = b4.max - b4.min;
  CHECK(extents == Vec3(3, 3, 1));
  CHECK(box_surface_area(b4) == doctest::Approx(30.0));
}

TEST_CASE("mesh validation rejects structural violations") {
  TriangleMesh mesh = litege_test::make_unit_cube_mesh();
  CHECK_NOTHROW(validate_mesh(mesh));

  TriangleMesh bad_index = mesh;
  bad_index.faces[0][1] = 99;
  CHECK_THROWS_AS(validate_mesh(bad_index), Error);

  TriangleMesh no_faces = mesh;
  no_faces.faces.clear();
  CHECK_THROWS_AS(validate_mesh(no_faces), Error);

  TriangleMesh few_vertices;
  few_vertices.vertices = {{0, 0, 0}, {1, 0, 0}};
  few_vertices.faces = {{0, 1, 0}};
  CHECK_THROWS_AS(validate_mesh(few_vertices), Error);

  TriangleMesh nan_vertex = mesh;
  nan_vertex.vertices[2].y() = std::nan("");
  CHECK_THROWS_AS(validate_mesh(nan_vertex), Error);
}

TEST_CASE("zero-area faces are legal but detectable") {
  TriangleMesh mesh;
  mesh.vertices = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {2, 0, 0}};
  mesh.faces = {{0, 1, 2}, {0, 1, 3}};  // second face is collinear
  CHECK_NOTHROW(validate_mesh(mesh));
  CHECK(count_degenerate_faces(mesh) == 1);
}

TEST_CASE("cloud validation") {
  CHECK_THROWS_AS(validate_cloud(PointCloud{}), Error);
  PointCloud one{{{0, 0, 0}}};
  CHECK_NOTHROW(validate_cloud(one));
  one.points[0].x() = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(validate_cloud(one), Error);
}

TEST_CASE("shape variant accessors") {
  Shape mesh_shape = litege_test::make_unit_cube_mesh();
  Shape cloud_shape = PointCloud{{{1, 2, 3}}};
  CHECK(is_mesh(mesh_shape));
  CHECK(!is_mesh(cloud_shape));
  CHECK(shape_points(mesh_shape).size() == 8);
  CHECK(shape_points(cloud_shape).size() == 1);
  CHECK_THROWS_AS((void)as_mesh(cloud_shape), Error);
  CHECK_THROWS_AS((void)as_cloud(mesh_shape), Error);
}

#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "litege/canonicalize.hpp"
#include "litege/error.hpp"
#include "litege/geometry.hpp"
#include "litege/prng.hpp"
#include "litege/sampling.hpp"

#include "test_helpers.hpp"

using namespace litege;

namespace {

// Cartesian product of per-axis values: covariance is exactly diagonal, so
// the principal axes coincide with the coordinate axes.
PointCloud axis_grid_cloud() {
  const double xs[] = {10, 1, 1, 1, -3, -10};
  const double ys[] = {2, 0.5, 0.5, -3};
  const double zs[] = {0.1, -0.1};
  PointCloud cloud;
  for (double x : xs)
    for (double y : ys)
      for (double z : zs) cloud.points.push_back({x, y, z});
  return cloud;
}

PointCloud grid_cloud(int n, double spacing) {
  PointCloud cloud;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        cloud.points.push_back({i * spacing, j * spacing, k * spacing});
  return cloud;
}

Mat3 rot_z_90() {
  Mat3 r;
  r << 0, -1, 0, 1, 0, 0, 0, 0, 1;
  return r;
}

TriangleMesh flat_square_mesh(double side) {
  TriangleMesh mesh;
  mesh.vertices = {{0, 0, 0}, {side, 0, 0}, {side, side, 0}, {0, side, 0}};
  mesh.faces = {{0, 1, 2}, {0, 2, 3}};
  return mesh;
}

}  // namespace

TEST_CASE("center subtracts the mean") {
  PointCloud cloud;
  cloud.points = {{0, 0, 0}, {2, 4, 6}};
  auto [centered, translation] = center(cloud);
  CHECK(translation.isApprox(Vec3(-1, -2, -3)));
  CHECK(centered.points[0].isApprox(Vec3(-1, -2, -3)));
  CHECK(centered.points[1].isApprox(Vec3(1, 2, 3)));

  PointCloud single;
  single.points = {{5, -1, 2}};
  auto [c1, t1] = center(single);
  CHECK(c1.points[0].norm() == doctest::Approx(0));
  CHECK(t1.isApprox(Vec3(-5, 1, -2)));

  PointCloud empty;
  CHECK_THROWS_AS(center(empty), Error);
}

TEST_CASE("bbox scaling hits the target area") {
  PointCloud cube;
  for (int i = 0; i < 8; ++i)
    cube.points.push_back({double(i & 1), double((i >> 1) & 1), double((i >> 2) & 1)});

  auto [scaled, scale] = scale_to_bbox_area(cube, 1.7);
  CHECK(scale == doctest::Approx(std::sqrt(1.7 / 6.0)).epsilon(1e-12));
  CHECK(box_surface_area(bounding_box(scaled)) == doctest::Approx(1.7).epsilon(1e-12));

  // Already at target: rescaling is a no-op.
  auto [again, scale2] = scale_to_bbox_area(scaled, 1.7);
  CHECK(scale2 == doctest::Approx(1.0).epsilon(1e-12));

  // Scale grows with the square root of the target.
  auto [s3, scale3] = scale_to_bbox_area(cube, 6.8);
  CHECK(scale3 == doctest::Approx(2.0 * scale).epsilon(1e-12));
}

TEST_CASE("bbox scaling rejects degenerate extents") {
  PointCloud planar;
  planar.points = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {1, 1, 0}};
  CHECK_THROWS_AS(scale_to_bbox_area(planar), Error);

  PointCloud point;
  point.points = {{1, 2, 3}};
  CHECK_THROWS_WITH_AS(scale_to_bbox_area(point),
                       doctest::Contains("degenerate"), Error);
}

TEST_CASE("mesh scaling normalizes surface area") {
  TriangleMesh cube = litege_test::make_unit_cube_mesh();
  auto [scaled, scale] = scale_mesh_unit_area(cube);
  CHECK(scale == doctest::Approx(1.0 / std::sqrt(6.0)).epsilon(1e-12));
  CHECK(surface_area(scaled) == doctest::Approx(1.0).epsilon(1e-12));

  auto [unit_again, s2] = scale_mesh_unit_area(scaled);
  CHECK(s2 == doctest::Approx(1.0).epsilon(1e-12));

  auto [sq, s4] = scale_mesh_unit_area(flat_square_mesh(2.0));
  CHECK(s4 == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("matched-NN scaling reproduces a known spacing") {
  PointCloud grid = grid_cloud(5, 0.1);
  auto [scaled, scale] =
      scale_pointcloud_matched_nn(grid, grid.points.size(), 0.1, 7);
  CHECK(scale == doctest::Approx(1.0).epsilon(1e-9));

  auto [doubled, scale2] =
      scale_pointcloud_matched_nn(grid, grid.points.size(), 0.2, 7);
  CHECK(scale2 == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(mean_nn_distance(doubled) == doctest::Approx(0.2).epsilon(1e-9));
}

TEST_CASE("matched-NN scaling is homogeneous") {
  Rng rng(11);
  PointCloud cloud;
  for (int i = 0; i < 300; ++i)
    cloud.points.push_back(
        {rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)});
  PointCloud halved;
  for (const Vec3& p : cloud.points) halved.points.push_back(p * 0.5);

  auto [a, scale_full] = scale_pointcloud_matched_nn(cloud, 60, 0.12121, 3);
  auto [b, scale_half] = scale_pointcloud_matched_nn(halved, 60, 0.12121, 3);
  CHECK(scale_half == doctest::Approx(2.0 * scale_full).epsilon(1e-12));
}

TEST_CASE("matched-NN scaling validates inputs") {
  PointCloud grid = grid_cloud(3, 0.5);
  CHECK_THROWS_AS(scale_pointcloud_matched_nn(grid, 1, 0.1, 0), Error);
  CHECK_THROWS_AS(scale_pointcloud_matched_nn(grid, 28, 0.1, 0), Error);
  CHECK_THROWS_AS(scale_pointcloud_matched_nn(grid, 9, -1.0, 0), Error);

  PointCloud dupes;
  for (int i = 0; i < 4; ++i) dupes.points.push_back({1, 2, 3});
  CHECK_THROWS_AS(scale_pointcloud_matched_nn(dupes, 4, 0.1, 0), Error);
}

TEST_CASE("orient_pca recovers axis-aligned frames") {
  Mat3 r = orient_pca(axis_grid_cloud());
  CHECK((r - Mat3::Identity()).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("orient_pca undoes a random rotation") {
  PointCloud base = axis_grid_cloud();
  Rng rng(99);
  for (int trial = 0; trial < 20; ++trial) {
    Mat3 r_rand = random_rotation(rng);
    CanonicalTransform t;
    t.rotation = r_rand;
    PointCloud rotated = apply_transform(base, t);
    Mat3 r = orient_pca(rotated);
    CHECK((r * r_rand - Mat3::Identity()).cwiseAbs().maxCoeff() < 1e-8);
  }
}

TEST_CASE("orient_pca is deterministic and validates rank") {
  PointCloud base = axis_grid_cloud();
  Mat3 a = orient_pca(base);
  Mat3 b = orient_pca(base);
  CHECK(a == b);

  PointCloud line;
  for (int i = 0; i < 5; ++i) line.points.push_back({double(i), double(i), double(i)});
  CHECK_THROWS_WITH_AS(orient_pca(line), doctest::Contains("collinear"), Error);

  PointCloud degenerate;
  for (int i = 0; i < 5; ++i) degenerate.points.push_back({1, 2, 3});
  CHECK_THROWS_AS(orient_pca(degenerate), Error);
}

TEST_CASE("rotation validation accepts rotations only") {
  CHECK_NOTHROW(validate_rotation(Mat3::Identity()));
  CHECK_NOTHROW(validate_rotation(rot_z_90()));
  CHECK_THROWS_AS(validate_rotation(Mat3::Identity() * 2.0), Error);
  Mat3 reflection = Mat3::Identity();
  reflection(2, 2) = -1;
  CHECK_THROWS_AS(validate_rotation(reflection), Error);
}

TEST_CASE("alignment angle matches known rotations") {
  Mat3 eye = Mat3::Identity();
  CHECK(alignment_angle(eye, eye) == doctest::Approx(0.0));
  CHECK(alignment_angle(rot_z_90(), eye) == doctest::Approx(M_PI / 2).epsilon(1e-12));

  Mat3 flip;
  flip << -1, 0, 0, 0, -1, 0, 0, 0, 1;
  CHECK(alignment_angle(flip, eye) == doctest::Approx(M_PI).epsilon(1e-12));

  Rng rng(5);
  for (int i = 0; i < 10; ++i) {
    Mat3 a = random_rotation(rng), b = random_rotation(rng), c = random_rotation(rng);
    CHECK(alignment_angle(a, b) == doctest::Approx(alignment_angle(b, a)));
    CHECK(alignment_angle(a, c) <=
          alignment_angle(a, b) + alignment_angle(b, c) + 1e-9);
  }

  CHECK_THROWS_AS(alignment_angle(Mat3::Zero(), eye), Error);
}

TEST_CASE("random rotations are valid, deterministic, and well spread") {
  Rng rng(123);
  Rng rng2(123);
  double angle_sum = 0;
  const int n = 2000;
  for (int i = 0; i < n; ++i) {
    Mat3 r = random_rotation(rng);
    CHECK_NOTHROW(validate_rotation(r));
    if (i < 5) CHECK(r == random_rotation(rng2));
    angle_sum += alignment_angle(r, Mat3::Identity());
  }
  // Uniform SO(3) mean angle is pi/2 + 2/pi.
  CHECK(angle_sum / n == doctest::Approx(M_PI / 2 + 2 / M_PI).epsilon(0.03));
}

TEST_CASE("apply_transform composes scale, rotation, translation") {
  CanonicalTransform t;
  t.rotation = rot_z_90();
  t.scale = 2.0;
  t.translation = Vec3(1, 0, 0);
  PointCloud cloud;
  cloud.points = {{0, 0, 0}, {1, 1, 0}};
  PointCloud out = apply_transform(cloud, t);
  CHECK(out.points[0].isApprox(Vec3(0, 2, 0)));
  CHECK(out.points[1].isApprox(Vec3(-2, 4, 0)));

  TriangleMesh mesh = flat_square_mesh(1.0);
  TriangleMesh mout = apply_transform(mesh, t);
  CHECK(mout.vertices[0].isApprox(Vec3(0, 2, 0)));
  CHECK(mout.faces == mesh.faces);
}

TEST_CASE("regression canonicalization composes center, scale, orient") {
  PointCloud base = axis_grid_cloud();
  PointCloud shifted;
  for (const Vec3& p : base.points) shifted.points.push_back(p + Vec3(5, -3, 2));

  CanonParams params;
  CanonicalShape canon = canonicalize(shifted, CanonMode::regression, params);
  const PointCloud& out = as_cloud(canon.shape);

  CHECK(canon.transform.translation.isApprox(Vec3(-5, 3, -2), 1e-9));
  CHECK((canon.transform.rotation - Mat3::Identity()).cwiseAbs().maxCoeff() < 1e-9);
  CHECK(box_surface_area(bounding_box(out)) == doctest::Approx(1.7).epsilon(1e-9));

  // The output is exactly the recorded transform applied to the input.
  PointCloud replay = apply_transform(shifted, canon.transform);
  for (std::size_t i = 0; i < out.points.size(); ++i)
    CHECK((replay.points[i] - out.points[i]).norm() < 1e-9);
}

TEST_CASE("regression canonicalization samples meshes deterministically") {
  TriangleMesh cube = litege_test::make_unit_cube_mesh();
  CanonParams params;
  params.regression_samples = 500;
  CanonicalShape a = canonicalize(cube, CanonMode::regression, params);
  CanonicalShape b = canonicalize(cube, CanonMode::regression, params);
  const PointCloud& ca = as_cloud(a.shape);
  const PointCloud& cb = as_cloud(b.shape);
  REQUIRE(ca.points.size() == 500);
  for (std::size_t i = 0; i < 500; ++i) CHECK(ca.points[i] == cb.points[i]);

  params.seed = 1;
  CanonicalShape c = canonicalize(cube, CanonMode::regression, params);
  CHECK(as_cloud(c.shape).points[0] != ca.points[0]);
}

TEST_CASE("matching_mesh canonicalization scales to unit area") {
  TriangleMesh mesh = flat_square_mesh(2.0);
  CanonParams params;
  params.tnet_points = 64;

  std::size_t seen_points = 0;
  Vec3 seen_mean = Vec3::Ones();
  RotationPredictor probe = [&](const PointCloud& centered) {
    seen_points = centered.points.size();
    seen_mean = Vec3::Zero();
    for (const Vec3& p : centered.points) seen_mean += p;
    seen_mean /= double(centered.points.size());
    return rot_z_90();
  };

  CanonicalShape canon = canonicalize(mesh, CanonMode::matching_mesh, params, probe);
  CHECK(seen_points == 64);
  CHECK(seen_mean.norm() < 1e-12);
  CHECK(canon.transform.scale == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(canon.transform.translation.isApprox(Vec3(-1, -1, 0), 1e-12));
  CHECK(canon.transform.rotation.isApprox(rot_z_90()));

  const TriangleMesh& out = as_mesh(canon.shape);
  CHECK(surface_area(out) == doctest::Approx(1.0).epsilon(1e-12));
  TriangleMesh replay = apply_transform(mesh, canon.transform);
  for (std::size_t i = 0; i < out.vertices.size(); ++i)
    CHECK((replay.vertices[i] - out.vertices[i]).norm() < 1e-12);
}

TEST_CASE("matching_mesh canonicalization is idempotent") {
  TriangleMesh mesh = flat_square_mesh(2.0);
  CanonParams params;
  params.tnet_points = 64;
  RotationPredictor identity = [](const PointCloud&) { return Mat3::Identity(); };

  CanonicalShape first = canonicalize(mesh, CanonMode::matching_mesh, params, identity);
  CanonicalShape second =
      canonicalize(first.shape, CanonMode::matching_mesh, params, identity);
  CHECK(second.transform.scale == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(second.transform.translation.norm() < 1e-9);
  CHECK((second.transform.rotation - Mat3::Identity()).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("matching modes require a predictor") {
  TriangleMesh mesh = flat_square_mesh(1.0);
  CanonParams params;
  CHECK_THROWS_WITH_AS(canonicalize(mesh, CanonMode::matching_mesh, params),
                       doctest::Contains("predictor"), Error);
  PointCloud grid = grid_cloud(5, 0.1);
  params.matched_nn_k = 60;
  CHECK_THROWS_AS(canonicalize(grid, CanonMode::matching_pointcloud, params), Error);
}

TEST_CASE("matching_pointcloud canonicalization applies matched-NN scale") {
  PointCloud grid = grid_cloud(5, 0.1);
  CanonParams params;
  params.matched_nn_k = grid.points.size();
  params.matched_nn_target = 0.2;
  params.tnet_points = 2000;
  RotationPredictor fixed = [](const PointCloud&) { return rot_z_90(); };

  CanonicalShape canon =
      canonicalize(grid, CanonMode::matching_pointcloud, params, fixed);
  CHECK(canon.transform.scale == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(canon.transform.rotation.isApprox(rot_z_90()));

  const PointCloud& out = as_cloud(canon.shape);
  PointCloud replay = apply_transform(grid, canon.transform);
  for (std::size_t i = 0; i < out.points.size(); ++i)
    CHECK((replay.points[i] - out.points[i]).norm() < 1e-12);
}

TEST_CASE("matching_pointcloud subsamples large clouds for the predictor") {
  Rng rng(4);
  PointCloud cloud;
  for (int i = 0; i < 4000; ++i)
    cloud.points.push_back(
        {rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)});
  CanonParams params;
  params.matched_nn_k = 60;
  params.matched_nn_target = 0.12121;
  params.tnet_points = 500;

  std::size_t seen_points = 0;
  Vec3 seen_mean = Vec3::Ones();
  RotationPredictor probe = [&](const PointCloud& centered) {
    seen_points = centered.points.size();
    seen_mean = Vec3::Zero();
    for (const Vec3& p : centered.points) seen_mean += p;
    seen_mean /= double(centered.points.size());
    return Mat3::Identity();
  };
  canonicalize(cloud, CanonMode::matching_pointcloud, params, probe);
  CHECK(seen_points == 500);
  CHECK(seen_mean.norm() < 1e-12);
}

TEST_CASE("canonical transforms round-trip through JSON") {
  Rng rng(17);
  CanonicalTransform t;
  t.rotation = random_rotation(rng);
  t.scale = 0.37;
  t.translation = Vec3(1, -2, 3);

  CanonicalTransform back = transform_from_json(transform_to_json(t));
  CHECK((back.rotation - t.rotation).cwiseAbs().maxCoeff() < 1e-15);
  CHECK(back.scale == doctest::Approx(t.scale).epsilon(1e-15));
  CHECK((back.translation - t.translation).norm() < 1e-15);

  auto path = std::filesystem::temp_directory_path() / "litege_transform_test.json";
  save_transform(path.string(), t);
  CanonicalTransform loaded = load_transform(path.string());
  CHECK((loaded.rotation - t.rotation).cwiseAbs().maxCoeff() < 1e-15);
  std::filesystem::remove(path);

  CHECK_THROWS_AS(transform_from_json("not json"), Error);
  CHECK_THROWS_AS(transform_from_json("{\"scale\": 1}"), Error);
  CHECK_THROWS_AS(
      transform_from_json(
          "{\"rotation\":[2,0,0,0,2,0,0,0,2],\"scale\":1,\"translation\":[0,0,0]}"),
      Error);
  CHECK_THROWS_AS(
      transform_from_json(
          "{\"rotation\":[1,0,0,0,1,0,0,0,1],\"scale\":-1,\"translation\":[0,0,0]}"),
      Error);
}

TEST_CASE("canonicalization mode names round-trip") {
  for (CanonMode mode : {CanonMode::regression, CanonMode::matching_mesh,
                         CanonMode::matching_pointcloud})
    CHECK(canon_mode_from_string(canon_mode_to_string(mode)) == mode);
  CHECK_THROWS_AS(canon_mode_from_string("banana"), Error);
}

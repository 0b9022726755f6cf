#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <set>

#include "litege/descriptor.hpp"
#include "litege/error.hpp"
#include "litege/family.hpp"
#include "litege/prng.hpp"
#include "litege/sampling.hpp"
#include "litege/upca_io.hpp"
#include "litege/voxelize.hpp"

using namespace litege;

namespace {

OccupancyGrid blank_grid(const VoxelGridSpec& grid) {
  OccupancyGrid occ;
  occ.grid = grid;
  occ.occupied.assign(grid.voxel_count(), false);
  return occ;
}

double hausdorff(const PointCloud& a, const PointCloud& b) {
  SpatialIndex ia(a), ib(b);
  double h = 0;
  for (const Vec3& p : a.points) h = std::max(h, ib.nearest_one(p).second);
  for (const Vec3& p : b.points) h = std::max(h, ia.nearest_one(p).second);
  return h;
}

}  // namespace

TEST_CASE("voxel grid centers follow the cell formula") {
  VoxelGridSpec grid;
  grid.resolution = 3;
  CHECK(grid.cell().isApprox(Vec3(1, 1, 1)));
  CHECK(grid.center(13).norm() == doctest::Approx(0.0));  // (1,1,1) -> origin
  CHECK(grid.center(0).isApprox(Vec3(-1, -1, -1)));
  CHECK(grid.center(26).isApprox(Vec3(1, 1, 1)));

  VoxelGridSpec bad = grid;
  bad.resolution = 1;
  CHECK_THROWS_AS(validate_grid(bad), Error);
  bad = grid;
  bad.extent.max.x() = bad.extent.min.x();
  CHECK_THROWS_AS(validate_grid(bad), Error);
}

TEST_CASE("voxelize sets exactly the touched voxels") {
  VoxelGridSpec grid;
  grid.resolution = 4;
  PointCloud one;
  one.points = {grid.center(6)};  // voxel (2,1,0)
  OccupancyGrid occ = voxelize_occupancy(one, grid);
  CHECK(occ.occupied_count() == 1);
  CHECK(occ.occupied[6]);
  CHECK(occ.dropped == 0);

  // Points exactly on the max faces land in the last voxel.
  PointCloud corner;
  corner.points = {{1.5, 1.5, 1.5}};
  OccupancyGrid occ2 = voxelize_occupancy(corner, grid);
  CHECK(occ2.occupied_count() == 1);
  CHECK(occ2.occupied[63]);
}

TEST_CASE("voxelize drops and rejects out-of-extent points") {
  VoxelGridSpec grid;
  grid.resolution = 4;
  PointCloud mixed;
  mixed.points = {{0, 0, 0}, {2, 0, 0}, {0, -9, 0}};
  OccupancyGrid occ = voxelize_occupancy(mixed, grid);
  CHECK(occ.dropped == 2);
  CHECK(occ.occupied_count() == 1);

  PointCloud outside;
  outside.points = {{5, 5, 5}, {-2, 0, 0}};
  CHECK_THROWS_AS(voxelize_occupancy(outside, grid), Error);
}

TEST_CASE("dense cube-surface sampling occupies the 296-voxel shell") {
  VoxelGridSpec grid;
  grid.resolution = 8;
  PointCloud cloud;
  const int m = 60;
  for (int face = 0; face < 6; ++face) {
    int axis = face / 2;
    double value = (face % 2) ? 1.5 : -1.5;
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < m; ++j) {
        Vec3 p;
        p[axis] = value;
        p[(axis + 1) % 3] = -1.5 + 3.0 * i / (m - 1);
        p[(axis + 2) % 3] = -1.5 + 3.0 * j / (m - 1);
        cloud.points.push_back(p);
      }
    }
  }
  OccupancyGrid occ = voxelize_occupancy(cloud, grid);
  CHECK(occ.dropped == 0);
  CHECK(occ.occupied_count() == 296);  // 8^3 - 6^3

  for (std::uint32_t v = 0; v < grid.voxel_count(); ++v) {
    std::uint32_t ix = v % 8, iy = (v / 8) % 8, iz = v / 64;
    bool shell = ix == 0 || ix == 7 || iy == 0 || iy == 7 || iz == 0 || iz == 7;
    CHECK(occ.occupied[v] == shell);
  }
}

TEST_CASE("informative-voxel selection keeps the open variance band") {
  VoxelGridSpec grid;
  grid.resolution = 6;  // 216 voxels
  const std::size_t n = 200;
  std::vector<OccupancyGrid> occupancies;
  for (std::size_t s = 0; s < n; ++s) {
    OccupancyGrid occ = blank_grid(grid);
    // Voxel v is occupied in the first min(v, n) shapes.
    for (std::uint32_t v = 0; v < grid.voxel_count(); ++v)
      occ.occupied[v] = s < v;
    occupancies.push_back(std::move(occ));
  }

  const double eps = 0.0625;
  VoxelSelection sel = select_informative_voxels(occupancies, eps);
  CHECK(sel.epsilon == eps);

  // Independent oracle: p(1-p) > eps iff p strictly inside the closed-form band.
  double lo = (1.0 - std::sqrt(1.0 - 4.0 * eps)) / 2.0;
  double hi = (1.0 + std::sqrt(1.0 - 4.0 * eps)) / 2.0;
  CHECK(lo == doctest::Approx(0.0669873).epsilon(1e-5));
  CHECK(hi == doctest::Approx(0.9330127).epsilon(1e-5));
  std::vector<std::uint32_t> expected;
  for (std::uint32_t v = 0; v < grid.voxel_count(); ++v) {
    double p = double(std::min<std::size_t>(v, n)) / double(n);
    if (p > lo && p < hi) expected.push_back(v);
  }
  CHECK(sel.voxel_ids == expected);
  CHECK(sel.voxel_ids.front() == 14);
  CHECK(sel.voxel_ids.back() == 186);
  CHECK(sel.voxel_ids.size() == 173);

  for (std::size_t j = 0; j < sel.voxel_ids.size(); ++j)
    CHECK((sel.centers[j] - grid.center(sel.voxel_ids[j])).norm() < 1e-9);
}

TEST_CASE("informative-voxel selection validates its inputs") {
  VoxelGridSpec grid;
  grid.resolution = 2;
  OccupancyGrid a = blank_grid(grid);
  a.occupied[0] = true;
  OccupancyGrid b = blank_grid(grid);

  CHECK_THROWS_AS(select_informative_voxels({a}, 0.01), Error);

  VoxelGridSpec other = grid;
  other.resolution = 4;
  OccupancyGrid c = blank_grid(other);
  CHECK_THROWS_AS(select_informative_voxels({a, c}, 0.01), Error);

  CHECK_THROWS_AS(select_informative_voxels({a, b}, 0.25), Error);

  // p = 1 everywhere: variance zero, nothing kept.
  OccupancyGrid full = blank_grid(grid);
  std::fill(full.occupied.begin(), full.occupied.end(), true);
  CHECK_THROWS_AS(select_informative_voxels({full, full}, 0.01), Error);

  // Half-occupied voxel sits at the variance maximum 0.25.
  VoxelSelection sel = select_informative_voxels({a, b}, 0.0625);
  CHECK(sel.voxel_ids == std::vector<std::uint32_t>{0});
}

TEST_CASE("compute_udf returns exact nearest distances") {
  VoxelGridSpec grid;
  grid.resolution = 3;
  VoxelSelection sel = make_selection(grid, {13}, 0.0);  // center (0,0,0)

  PointCloud hit;
  hit.points = {{0, 0, 0}, {1, 1, 1}};
  Eigen::VectorXd udf = compute_udf(hit, sel);
  REQUIRE(udf.size() == 1);
  CHECK(udf[0] == doctest::Approx(0.0));

  PointCloud far;
  far.points = {{3, 4, 0}, {6, 0, 0}};
  CHECK(compute_udf(far, sel)[0] == doctest::Approx(5.0));
}

TEST_CASE("UDF difference between samplings is bounded by their Hausdorff distance") {
  TriangleMesh sphere = make_icosphere(3);
  PointCloud coarse = sample_surface(sphere, 2000, 1);
  PointCloud fine = sample_surface(sphere, 8000, 2);

  VoxelGridSpec grid;
  grid.resolution = 8;
  std::vector<std::uint32_t> ids(grid.voxel_count());
  for (std::uint32_t v = 0; v < grid.voxel_count(); ++v) ids[v] = v;
  VoxelSelection sel = make_selection(grid, std::move(ids), 0.0);

  Eigen::VectorXd u1 = compute_udf(coarse, sel);
  Eigen::VectorXd u2 = compute_udf(fine, sel);
  double bound = hausdorff(coarse, fine);
  CHECK((u1 - u2).cwiseAbs().maxCoeff() <= bound + 1e-12);
}

TEST_CASE("fit_pca handles identical rows") {
  Eigen::MatrixXd x(4, 3);
  for (int i = 0; i < 4; ++i) x.row(i) << 2, -1, 5;
  PcaBasis basis = fit_pca(x, 2);
  CHECK((basis.mean - Eigen::Vector3d(2, -1, 5)).norm() < 1e-12);
  CHECK(basis.explained_variance.cwiseAbs().maxCoeff() < 1e-12);
  CHECK(basis.total_variance < 1e-12);
  CHECK(effective_rank(basis) == 0);
}

TEST_CASE("fit_pca matches the closed-form 2D solution") {
  Eigen::MatrixXd x(4, 2);
  x << 1, 0, -1, 0, 2, 0, -2, 0;
  PcaBasis basis = fit_pca(x, 1);
  CHECK(basis.mean.norm() < 1e-12);
  CHECK(basis.components(0, 0) == doctest::Approx(1.0));  // sign convention
  CHECK(std::abs(basis.components(0, 1)) < 1e-12);
  CHECK(basis.explained_variance[0] == doctest::Approx(10.0 / 3.0).epsilon(1e-12));
  CHECK(basis.total_variance == doctest::Approx(10.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("fit_pca satisfies the Eckart-Young identity") {
  Rng rng(31);
  Eigen::MatrixXd x(20, 8);
  for (int i = 0; i < x.rows(); ++i)
    for (int j = 0; j < x.cols(); ++j) x(i, j) = rng.normal();

  PcaBasis basis = fit_pca(x, 3);
  for (Eigen::Index i = 1; i < 3; ++i)
    CHECK(basis.explained_variance[i] <= basis.explained_variance[i - 1] + 1e-12);
  CHECK((basis.components * basis.components.transpose() -
         Eigen::MatrixXd::Identity(3, 3))
            .cwiseAbs()
            .maxCoeff() < 1e-12);

  // Residual variance after k components equals total minus explained.
  Eigen::MatrixXd centered = x.rowwise() - basis.mean.transpose();
  Eigen::MatrixXd reconstructed = (centered * basis.components.transpose()) * basis.components;
  double residual = (centered - reconstructed).squaredNorm() / double(x.rows() - 1);
  CHECK(residual == doctest::Approx(basis.total_variance -
                                    basis.explained_variance.sum())
                        .epsilon(1e-6));

  // Per-row reconstruction error is bounded by the total residual mass.
  for (int i = 0; i < x.rows(); ++i) {
    Eigen::VectorXd z = project(basis, x.row(i).transpose());
    Eigen::VectorXd back = basis.mean + basis.components.transpose() * z;
    CHECK((x.row(i).transpose() - back).squaredNorm() <=
          (basis.total_variance - basis.explained_variance.sum()) * double(x.rows() - 1) +
              1e-9);
  }
}

TEST_CASE("fit_pca validates k and flags rank deficiency") {
  Eigen::MatrixXd x(4, 3);
  x << 1, 2, 3, 2, 4, 6, 3, 6, 9, 4, 8, 12;  // rank 1
  CHECK_THROWS_AS(fit_pca(x, 4), Error);
  CHECK_THROWS_AS(fit_pca(x, 0), Error);
  CHECK_THROWS_AS(fit_pca(Eigen::MatrixXd::Zero(1, 3), 1), Error);

  PcaBasis basis = fit_pca(x, 2);
  CHECK(effective_rank(basis) == 1);
  CHECK(basis.explained_variance[1] < basis.explained_variance[0] * 1e-12);
}

TEST_CASE("project matches brute-force dot products") {
  Rng rng(47);
  Eigen::MatrixXd x(10, 6);
  for (int i = 0; i < x.rows(); ++i)
    for (int j = 0; j < x.cols(); ++j) x(i, j) = rng.normal();
  PcaBasis basis = fit_pca(x, 4);

  CHECK(project(basis, basis.mean).norm() < 1e-12);

  Eigen::VectorXd shifted = basis.mean + basis.components.row(0).transpose();
  Eigen::VectorXd z = project(basis, shifted);
  CHECK(z[0] == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(z.tail(3).norm() < 1e-9);

  Eigen::VectorXd udf(6);
  for (int j = 0; j < 6; ++j) udf[j] = rng.normal();
  z = project(basis, udf);
  for (Eigen::Index i = 0; i < 4; ++i) {
    double dot = 0;
    for (Eigen::Index j = 0; j < 6; ++j)
      dot += (udf[j] - basis.mean[j]) * basis.components(i, j);
    CHECK(z[i] == doctest::Approx(dot).epsilon(1e-9));
  }

  CHECK_THROWS_AS(project(basis, Eigen::VectorXd::Zero(5)), Error);
}

TEST_CASE("explained variance curve is a cumulative ratio") {
  Eigen::MatrixXd rank1(4, 3);
  rank1 << 1, 2, 3, 2, 4, 6, 3, 6, 9, 4, 8, 12;
  PcaBasis basis = fit_pca(rank1, 2);
  std::vector<double> curve = explained_variance_curve(basis);
  REQUIRE(curve.size() == 2);
  CHECK(curve[0] == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(curve[1] == doctest::Approx(1.0).epsilon(1e-9));

  Rng rng(7);
  Eigen::MatrixXd gauss(4000, 3);
  for (int i = 0; i < gauss.rows(); ++i)
    for (int j = 0; j < 3; ++j) gauss(i, j) = rng.normal();
  PcaBasis gb = fit_pca(gauss, 3);
  std::vector<double> gc = explained_variance_curve(gb);
  CHECK(gc[0] == doctest::Approx(1.0 / 3.0).epsilon(0.15));
  CHECK(gc[1] == doctest::Approx(2.0 / 3.0).epsilon(0.08));
  CHECK(gc[2] == doctest::Approx(1.0).epsilon(1e-9));
  for (std::size_t i = 1; i < gc.size(); ++i) CHECK(gc[i] >= gc[i - 1] - 1e-12);

  Eigen::MatrixXd flat(3, 2);
  flat << 1, 1, 1, 1, 1, 1;
  PcaBasis zero = fit_pca(flat, 1);
  CHECK_THROWS_AS(explained_variance_curve(zero), Error);
}

TEST_CASE("selection and descriptor space round-trip through serialization") {
  VoxelGridSpec grid;
  grid.resolution = 2;
  VoxelSelection sel = make_selection(grid, {0, 3, 5, 6, 7}, 0.0625);

  std::string blob = serialize_selection(sel);
  VoxelSelection back = deserialize_selection(blob, "test");
  CHECK(back.voxel_ids == sel.voxel_ids);
  CHECK(back.grid == sel.grid);
  CHECK(back.epsilon == sel.epsilon);
  CHECK(serialize_selection(back) == blob);

  Rng rng(3);
  Eigen::MatrixXd x(12, 5);
  for (int i = 0; i < x.rows(); ++i)
    for (int j = 0; j < x.cols(); ++j) x(i, j) = rng.normal();
  DescriptorSpace space{sel, fit_pca(x, 3)};

  std::string bytes = serialize_descriptor_space(space);
  DescriptorSpace loaded = deserialize_descriptor_space(bytes, "test");
  CHECK(loaded.basis.mean == space.basis.mean);
  CHECK(loaded.basis.components == space.basis.components);
  CHECK(loaded.basis.explained_variance == space.basis.explained_variance);
  CHECK(loaded.basis.total_variance == space.basis.total_variance);
  CHECK(loaded.selection.voxel_ids == space.selection.voxel_ids);
  CHECK(serialize_descriptor_space(loaded) == bytes);

  // Refitting the same data serializes byte-identically.
  DescriptorSpace space2{sel, fit_pca(x, 3)};
  CHECK(serialize_descriptor_space(space2) == bytes);

  auto path = std::filesystem::temp_directory_path() / "litege_upca_test.bin";
  save_descriptor_space(path.string(), space);
  DescriptorSpace from_file = load_descriptor_space(path.string());
  CHECK(serialize_descriptor_space(from_file) == bytes);
  std::filesystem::remove(path);
}

TEST_CASE("serialization rejects malformed data") {
  VoxelGridSpec grid;
  grid.resolution = 2;
  VoxelSelection sel = make_selection(grid, {1, 2}, 0.01);
  std::string blob = serialize_selection(sel);

  std::string bad = blob;
  bad[0] = 'X';
  CHECK_THROWS_AS(deserialize_selection(bad, "test"), Error);
  CHECK_THROWS_AS(deserialize_selection(blob.substr(0, blob.size() - 3), "test"), Error);
  CHECK_THROWS_AS(deserialize_selection(blob + "zz", "test"), Error);

  // Mismatched basis/selection dimensions cannot be serialized.
  Eigen::MatrixXd x(4, 3);
  x << 1, 0, 0, 0, 1, 0, 0, 0, 1, 1, 1, 1;
  DescriptorSpace space{sel, fit_pca(x, 2)};
  CHECK_THROWS_AS(serialize_descriptor_space(space), Error);
}

TEST_CASE("descriptors are stable across sampling density") {
  // Family of concentric spheres; informative voxels live in the radius band.
  std::vector<OccupancyGrid> occupancies;
  VoxelGridSpec grid;
  grid.resolution = 16;
  std::vector<PointCloud> clouds;
  for (int i = 0; i < 10; ++i) {
    FamilyParams params;
    params.base_radius = 0.5 + 0.08 * i;
    params.subdivision = 3;
    TriangleMesh mesh = gen_synthetic_family(params, 7);
    clouds.push_back(sample_surface(mesh, 5000, 100 + i));
    occupancies.push_back(voxelize_occupancy(clouds.back(), grid));
  }
  VoxelSelection sel = select_informative_voxels(occupancies, 0.01);
  CHECK(sel.dim() > 50);

  Eigen::MatrixXd udfs(10, static_cast<Eigen::Index>(sel.dim()));
  for (int i = 0; i < 10; ++i) udfs.row(i) = compute_udf(clouds[i], sel).transpose();
  DescriptorSpace space{sel, fit_pca(udfs, 5)};

  FamilyParams params;
  params.base_radius = 0.8;
  params.subdivision = 3;
  TriangleMesh probe = gen_synthetic_family(params, 7);
  ShapeDescriptor coarse = describe(space, sample_surface(probe, 2000, 500));
  ShapeDescriptor fine = describe(space, sample_surface(probe, 8000, 501));
  double cosine = coarse.dot(fine) / (coarse.norm() * fine.norm());
  CHECK(cosine >= 0.9);
}

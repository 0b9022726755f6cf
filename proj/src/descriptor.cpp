#include "litege/descriptor.hpp"

#include <Eigen/SVD>
#include <cmath>

namespace litege {

VoxelSelection make_selection(const VoxelGridSpec& grid,
                              std::vector<std::uint32_t> voxel_ids,
                              double epsilon) {
  VoxelSelection sel;
  sel.grid = grid;
  sel.voxel_ids = std::move(voxel_ids);
  sel.epsilon = epsilon;
  sel.centers.reserve(sel.voxel_ids.size());
  for (std::uint32_t id : sel.voxel_ids) sel.centers.push_back(grid.center(id));
  validate_selection(sel);
  return sel;
}

void validate_selection(const VoxelSelection& selection) {
  validate_grid(selection.grid);
  if (selection.voxel_ids.empty())
    fail_invalid("voxel selection is empty");
  if (selection.centers.size() != selection.voxel_ids.size())
    fail_invalid("voxel selection: centers/ids length mismatch");
  std::uint32_t count = selection.grid.voxel_count();
  for (std::size_t i = 0; i < selection.voxel_ids.size(); ++i) {
    std::uint32_t id = selection.voxel_ids[i];
    if (id >= count) fail_invalid("voxel selection: id out of range");
    if (i > 0 && selection.voxel_ids[i - 1] >= id)
      fail_invalid("voxel selection: ids must be strictly increasing");
    if ((selection.centers[i] - selection.grid.center(id)).norm() > 1e-9)
      fail_invalid("voxel selection: center inconsistent with grid");
  }
  if (!(selection.epsilon >= 0) || !std::isfinite(selection.epsilon))
    fail_invalid("voxel selection: epsilon must be finite and non-negative");
}

VoxelSelection select_informative_voxels(const std::vector<OccupancyGrid>& occupancies,
                                         double epsilon) {
  if (occupancies.size() < 2)
    fail_invalid("informative-voxel selection needs at least 2 shapes");
  if (!(epsilon >= 0) || !(epsilon < 0.25))
    fail_invalid("epsilon must lie in [0, 0.25); p(1-p) never exceeds 0.25");
  const VoxelGridSpec& grid = occupancies.front().grid;
  for (const OccupancyGrid& occ : occupancies) {
    if (!(occ.grid == grid)) fail_invalid("occupancy grids use mismatched specs");
    if (occ.occupied.size() != grid.voxel_count())
      fail_invalid("occupancy bitset size mismatch");
  }

  const double n = static_cast<double>(occupancies.size());
  std::vector<std::uint32_t> kept;
  for (std::uint32_t v = 0; v < grid.voxel_count(); ++v) {
    std::size_t hits = 0;
    for (const OccupancyGrid& occ : occupancies) hits += occ.occupied[v] ? 1 : 0;
    double p = static_cast<double>(hits) / n;
    if (p * (1.0 - p) > epsilon) kept.push_back(v);
  }
  if (kept.empty())
    fail_invalid("no voxel passed the variance threshold " + std::to_string(epsilon));
  return make_selection(grid, std::move(kept), epsilon);
}

Eigen::VectorXd compute_udf(const SpatialIndex& index, const VoxelSelection& selection) {
  validate_selection(selection);
  Eigen::VectorXd udf(static_cast<Eigen::Index>(selection.centers.size()));
  for (std::size_t j = 0; j < selection.centers.size(); ++j)
    udf[static_cast<Eigen::Index>(j)] = index.nearest_one(selection.centers[j]).second;
  return udf;
}

Eigen::VectorXd compute_udf(const PointCloud& shape, const VoxelSelection& selection) {
  validate_cloud(shape);
  SpatialIndex index(shape);
  return compute_udf(index, selection);
}

void validate_basis(const PcaBasis& basis) {
  Eigen::Index k = basis.k(), d = basis.dim();
  if (k < 1 || d < 1) fail_invalid("pca basis: empty");
  if (basis.mean.size() != d) fail_invalid("pca basis: mean length mismatch");
  if (basis.explained_variance.size() != k)
    fail_invalid("pca basis: explained_variance length mismatch");
  if (!basis.mean.allFinite() || !basis.components.allFinite() ||
      !basis.explained_variance.allFinite() || !std::isfinite(basis.total_variance))
    fail_invalid("pca basis: non-finite entries");
  for (Eigen::Index i = 0; i < k; ++i) {
    if (basis.explained_variance[i] < 0)
      fail_invalid("pca basis: negative explained variance");
    if (i > 0 && basis.explained_variance[i] > basis.explained_variance[i - 1] + 1e-12)
      fail_invalid("pca basis: explained variance must be non-increasing");
  }
  Eigen::MatrixXd gram = basis.components * basis.components.transpose();
  if ((gram - Eigen::MatrixXd::Identity(k, k)).cwiseAbs().maxCoeff() > 1e-5)
    fail_invalid("pca basis: component rows are not orthonormal within 1e-5");
}

PcaBasis fit_pca(const Eigen::MatrixXd& udf_matrix, Eigen::Index k) {
  Eigen::Index n = udf_matrix.rows(), d = udf_matrix.cols();
  if (n < 2) fail_invalid("fit_pca: need at least 2 rows");
  if (!udf_matrix.allFinite()) fail_invalid("fit_pca: non-finite input");
  if (k < 1 || k > std::min(n - 1, d))
    fail_invalid("fit_pca: k must lie in [1, min(n-1, d)] = [1, " +
                 std::to_string(std::min(n - 1, d)) + "], got " + std::to_string(k));

  PcaBasis basis;
  basis.mean = udf_matrix.colwise().mean();
  Eigen::MatrixXd centered = udf_matrix.rowwise() - basis.mean.transpose();
  basis.total_variance = centered.squaredNorm() / static_cast<double>(n - 1);

  Eigen::BDCSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinV);
  basis.components = svd.matrixV().leftCols(k).transpose();
  basis.explained_variance =
      svd.singularValues().head(k).array().square() / static_cast<double>(n - 1);

  // Deterministic sign: the largest-magnitude entry of each row is positive.
  for (Eigen::Index i = 0; i < k; ++i) {
    Eigen::Index at = 0;
    basis.components.row(i).cwiseAbs().maxCoeff(&at);
    if (basis.components(i, at) < 0) basis.components.row(i) = -basis.components.row(i);
  }
  validate_basis(basis);
  return basis;
}

Eigen::Index effective_rank(const PcaBasis& basis, double rel_tol) {
  double top = basis.explained_variance.size() ? basis.explained_variance[0] : 0.0;
  if (!(top > 0)) return 0;
  Eigen::Index r = 0;
  while (r < basis.explained_variance.size() &&
         basis.explained_variance[r] > top * rel_tol)
    ++r;
  return r;
}

ShapeDescriptor project(const PcaBasis& basis, const Eigen::VectorXd& udf) {
  if (udf.size() != basis.dim())
    fail_invalid("project: vector length " + std::to_string(udf.size()) +
                 " does not match basis dimension " + std::to_string(basis.dim()));
  return basis.components * (udf - basis.mean);
}

std::vector<double> explained_variance_curve(const PcaBasis& basis) {
  if (!(basis.total_variance > 0))
    fail_invalid("explained_variance_curve: zero total variance");
  std::vector<double> curve;
  curve.reserve(static_cast<std::size_t>(basis.k()));
  double cum = 0;
  for (Eigen::Index i = 0; i < basis.k(); ++i) {
    cum += basis.explained_variance[i];
    curve.push_back(cum / basis.total_variance);
  }
  return curve;
}

ShapeDescriptor describe(const DescriptorSpace& space, const PointCloud& canonical) {
  return project(space.basis, compute_udf(canonical, space.selection));
}

}  // namespace litege

#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "litege/geometry.hpp"
#include "litege/spatial_index.hpp"
#include "litege/voxelize.hpp"

namespace litege {

// Frozen set of informative voxels: the descriptor's coordinate axes.
struct VoxelSelection {
  VoxelGridSpec grid;
  std::vector<std::uint32_t> voxel_ids;  // strictly increasing, < resolution^3
  std::vector<Vec3> centers;             // grid centers of voxel_ids
  double epsilon = 0.0;                  // variance threshold used at selection

  std::size_t dim() const { return voxel_ids.size(); }
};

VoxelSelection make_selection(const VoxelGridSpec& grid,
                              std::vector<std::uint32_t> voxel_ids,
                              double epsilon);
void validate_selection(const VoxelSelection& selection);

// Keeps voxels whose Bernoulli occupancy variance p(1-p) exceeds epsilon,
// with p the occupancy frequency over the dataset. Needs >= 2 grids, all on
// the same VoxelGridSpec.
VoxelSelection select_informative_voxels(const std::vector<OccupancyGrid>& occupancies,
                                         double epsilon);

// Entry j = Euclidean distance from selection.centers[j] to the nearest
// point (unsigned distance field sampled at the informative voxels).
Eigen::VectorXd compute_udf(const PointCloud& shape, const VoxelSelection& selection);
Eigen::VectorXd compute_udf(const SpatialIndex& index, const VoxelSelection& selection);

struct PcaBasis {
  Eigen::VectorXd mean;                 // d
  Eigen::MatrixXd components;           // k x d, rows orthonormal
  Eigen::VectorXd explained_variance;   // k, non-increasing, sigma^2/(n-1)
  double total_variance = 0.0;          // over all d directions, at fit time

  Eigen::Index k() const { return components.rows(); }
  Eigen::Index dim() const { return components.cols(); }
};

void validate_basis(const PcaBasis& basis);

// Thin SVD of the centered n x d matrix (never the d x d covariance).
// Requires n >= 2 and 1 <= k <= min(n-1, d). Rank-deficient data yields
// trailing zero variances; see effective_rank.
PcaBasis fit_pca(const Eigen::MatrixXd& udf_matrix, Eigen::Index k);

// Number of leading variances above a relative floor of the largest.
Eigen::Index effective_rank(const PcaBasis& basis, double rel_tol = 1e-12);

using ShapeDescriptor = Eigen::VectorXd;

// values[i] = <udf - mean, components[i]>.
ShapeDescriptor project(const PcaBasis& basis, const Eigen::VectorXd& udf);

// Cumulative explained-variance ratios; non-decreasing, last <= 1.
std::vector<double> explained_variance_curve(const PcaBasis& basis);

// The frozen descriptor pipeline: selection feeds the UDF, basis projects it.
struct DescriptorSpace {
  VoxelSelection selection;
  PcaBasis basis;
};

ShapeDescriptor describe(const DescriptorSpace& space, const PointCloud& canonical);

}  // namespace litege

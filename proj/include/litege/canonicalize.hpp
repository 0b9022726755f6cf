#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>

#include "litege/geometry.hpp"
#include "litege/prng.hpp"

namespace litege {

// Applied as p' = scale * rotation * (p + translation).
struct CanonicalTransform {
  Mat3 rotation = Mat3::Identity();
  double scale = 1.0;
  Vec3 translation = Vec3::Zero();
};

enum class CanonMode { regression, matching_mesh, matching_pointcloud };

CanonMode canon_mode_from_string(const std::string& name);
std::string canon_mode_to_string(CanonMode mode);

struct CanonParams {
  double bbox_target_area = 1.7;
  // Sample count when a mesh enters the regression pipeline as a cloud.
  std::size_t regression_samples = 2000;
  // Matched nearest-neighbor scaling for raw point clouds.
  std::size_t matched_nn_k = 500;
  double matched_nn_target = 0.03835;
  // Point count fed to the learned orienter.
  std::size_t tnet_points = 2000;
  std::uint64_t seed = 0;
};

std::pair<PointCloud, Vec3> center(const PointCloud& cloud);
std::pair<PointCloud, double> scale_to_bbox_area(const PointCloud& cloud,
                                                 double target_area = 1.7);
std::pair<TriangleMesh, double> scale_mesh_unit_area(const TriangleMesh& mesh);
std::pair<PointCloud, double> scale_pointcloud_matched_nn(
    const PointCloud& cloud, std::size_t k, double target_nn,
    std::uint64_t seed);

// Rows are the principal axes: the result maps the first/second principal
// directions to +x/+y, signed so a strict majority of points projects
// positively; exact ties keep the deterministic pre-flip sign (first
// component with magnitude > 1e-12 positive). Third row completes the
// right-handed frame. Collinear clouds (covariance rank < 2) are rejected.
Mat3 orient_pca(const PointCloud& cloud);

double alignment_angle(const Mat3& r_hat, const Mat3& r);

// Throws Error(invalid_input) unless R^T R = I within 1e-6 per entry and
// det(R) = 1 within 1e-6.
void validate_rotation(const Mat3& r);

// Uniform over SO(3).
Mat3 random_rotation(Rng& rng);

PointCloud apply_transform(const PointCloud& cloud,
                           const CanonicalTransform& t);
TriangleMesh apply_transform(const TriangleMesh& mesh,
                             const CanonicalTransform& t);

// Predicts an aligning rotation from a centered cloud; the learned-orienter
// adapter lives with the network code.
using RotationPredictor = std::function<Mat3(const PointCloud& centered)>;

struct CanonicalShape {
  Shape shape;
  CanonicalTransform transform;
};

// center -> scale -> orient. Regression mode samples meshes into clouds,
// scales to the target bounding-box area, and orients by PCA. Matching modes
// scale to unit mesh area (meshes) or matched mean NN distance (clouds) and
// orient with the supplied predictor, which is required there.
CanonicalShape canonicalize(const Shape& shape, CanonMode mode,
                            const CanonParams& params,
                            const RotationPredictor& orient = {});

std::string transform_to_json(const CanonicalTransform& t);
CanonicalTransform transform_from_json(const std::string& text);
void save_transform(const std::string& path, const CanonicalTransform& t);
CanonicalTransform load_transform(const std::string& path);

}  // namespace litege

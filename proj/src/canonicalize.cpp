#include "litege/canonicalize.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

#include <json.hpp>

#include "litege/fileio.hpp"
#include "litege/sampling.hpp"

namespace litege {

CanonMode canon_mode_from_string(const std::string& name) {
  if (name == "regression") return CanonMode::regression;
  if (name == "matching_mesh") return CanonMode::matching_mesh;
  if (name == "matching_pointcloud") return CanonMode::matching_pointcloud;
  fail_invalid("unknown canonicalization mode '" + name + "'");
}

std::string canon_mode_to_string(CanonMode mode) {
  switch (mode) {
    case CanonMode::regression: return "regression";
    case CanonMode::matching_mesh: return "matching_mesh";
    case CanonMode::matching_pointcloud: return "matching_pointcloud";
  }
  fail_invalid("unknown canonicalization mode");
}

namespace {

Vec3 mean_point(const std::vector<Vec3>& pts) {
  Vec3 sum = Vec3::Zero();
  for (const Vec3& p : pts) sum += p;
  return sum / static_cast<double>(pts.size());
}

}  // namespace

std::pair<PointCloud, Vec3> center(const PointCloud& cloud) {
  validate_cloud(cloud);
  Vec3 translation = -mean_point(cloud.points);
  PointCloud out;
  out.points.reserve(cloud.points.size());
  for (const Vec3& p : cloud.points) out.points.push_back(p + translation);
  return {std::move(out), translation};
}

std::pair<PointCloud, double> scale_to_bbox_area(const PointCloud& cloud,
                                                 double target_area) {
  validate_cloud(cloud);
  if (!(target_area > 0)) fail_invalid("scale_to_bbox_area: target_area must be positive");
  AxisBox box = bounding_box(cloud);
  Vec3 extent = box.max - box.min;
  if (!(extent.minCoeff() > 0))
    fail_invalid("scale_to_bbox_area: degenerate bounding box (planar, linear, or point cloud)");
  double area = box_surface_area(box);
  double scale = std::sqrt(target_area / area);
  PointCloud out;
  out.points.reserve(cloud.points.size());
  for (const Vec3& p : cloud.points) out.points.push_back(p * scale);
  return {std::move(out), scale};
}

std::pair<TriangleMesh, double> scale_mesh_unit_area(const TriangleMesh& mesh) {
  validate_mesh(mesh);
  double area = surface_area(mesh);
  if (!(area > 0)) fail_invalid("scale_mesh_unit_area: zero-area mesh");
  double scale = 1.0 / std::sqrt(area);
  TriangleMesh out = mesh;
  for (Vec3& v : out.vertices) v *= scale;
  return {std::move(out), scale};
}

std::pair<PointCloud, double> scale_pointcloud_matched_nn(
    const PointCloud& cloud, std::size_t k, double target_nn,
    std::uint64_t seed) {
  validate_cloud(cloud);
  if (!(target_nn > 0)) fail_invalid("matched_nn: target must be positive");
  if (k < 2) fail_invalid("matched_nn: k must be at least 2");
  if (k > cloud.points.size())
    fail_invalid("matched_nn: k=" + std::to_string(k) + " exceeds point count " +
                 std::to_string(cloud.points.size()));
  PointCloud samples = poisson_disk_sample(cloud, k, seed);
  double measured = mean_nn_distance(samples);
  if (!(measured > 0))
    fail_invalid("matched_nn: measured mean distance is zero (duplicate points)");
  double scale = target_nn / measured;
  PointCloud out;
  out.points.reserve(cloud.points.size());
  for (const Vec3& p : cloud.points) out.points.push_back(p * scale);
  return {std::move(out), scale};
}

Mat3 orient_pca(const PointCloud& cloud) {
  validate_cloud(cloud);
  Vec3 mean = mean_point(cloud.points);
  Mat3 cov = Mat3::Zero();
  for (const Vec3& p : cloud.points) {
    Vec3 d = p - mean;
    cov += d * d.transpose();
  }
  cov /= static_cast<double>(cloud.points.size());

  Eigen::SelfAdjointEigenSolver<Mat3> solver(cov);
  if (solver.info() != Eigen::Success)
    fail_runtime("orient_pca: eigendecomposition failed");
  // Eigen orders eigenvalues ascending; take the top two descending.
  Vec3 evals = solver.eigenvalues();
  if (!(evals[2] > 0)) fail_invalid("orient_pca: degenerate cloud (zero covariance)");
  if (!(evals[1] > evals[2] * 1e-12))
    fail_invalid("orient_pca: covariance rank < 2 (collinear cloud)");

  Vec3 axes[2] = {solver.eigenvectors().col(2), solver.eigenvectors().col(1)};
  for (Vec3& axis : axes) {
    for (int c = 0; c < 3; ++c) {
      if (std::abs(axis[c]) > 1e-12) {
        if (axis[c] < 0) axis = -axis;
        break;
      }
    }
    std::size_t positive = 0, negative = 0;
    for (const Vec3& p : cloud.points) {
      double proj = (p - mean).dot(axis);
      if (proj > 0) ++positive;
      else if (proj < 0) ++negative;
    }
    if (negative > positive) axis = -axis;
  }
  Mat3 r;
  r.row(0) = axes[0];
  r.row(1) = axes[1];
  r.row(2) = axes[0].cross(axes[1]);
  return r;
}

void validate_rotation(const Mat3& r) {
  Mat3 gram = r.transpose() * r;
  if ((gram - Mat3::Identity()).cwiseAbs().maxCoeff() > 1e-6)
    fail_invalid("matrix is not orthonormal within 1e-6");
  if (std::abs(r.determinant() - 1.0) > 1e-6)
    fail_invalid("matrix determinant is not +1 within 1e-6");
}

double alignment_angle(const Mat3& r_hat, const Mat3& r) {
  validate_rotation(r_hat);
  validate_rotation(r);
  double c = ((r_hat.transpose() * r).trace() - 1.0) / 2.0;
  return std::acos(std::clamp(c, -1.0, 1.0));
}

Mat3 random_rotation(Rng& rng) {
  // Shoemake's uniform quaternion method.
  double u1 = rng.next_double();
  double u2 = rng.next_double();
  double u3 = rng.next_double();
  double a = std::sqrt(1.0 - u1), b = std::sqrt(u1);
  double qx = a * std::sin(2 * M_PI * u2);
  double qy = a * std::cos(2 * M_PI * u2);
  double qz = b * std::sin(2 * M_PI * u3);
  double qw = b * std::cos(2 * M_PI * u3);
  return Eigen::Quaterniond(qw, qx, qy, qz).toRotationMatrix();
}

PointCloud apply_transform(const PointCloud& cloud, const CanonicalTransform& t) {
  PointCloud out;
  out.points.reserve(cloud.points.size());
  for (const Vec3& p : cloud.points)
    out.points.push_back(t.scale * (t.rotation * (p + t.translation)));
  return out;
}

TriangleMesh apply_transform(const TriangleMesh& mesh, const CanonicalTransform& t) {
  TriangleMesh out = mesh;
  for (Vec3& v : out.vertices) v = t.scale * (t.rotation * (v + t.translation));
  return out;
}

namespace {

PointCloud rotate_cloud(const PointCloud& cloud, const Mat3& r) {
  PointCloud out;
  out.points.reserve(cloud.points.size());
  for (const Vec3& p : cloud.points) out.points.push_back(r * p);
  return out;
}

Mat3 predict_orientation(const RotationPredictor& orient, const PointCloud& cloud,
                         std::size_t tnet_points, Rng rng) {
  if (!orient) fail_invalid("canonicalize: matching mode requires an orienting predictor");
  PointCloud input;
  if (cloud.points.size() > tnet_points && tnet_points > 0) {
    auto keep = rng.sample_without_replacement(
        static_cast<std::uint32_t>(cloud.points.size()),
        static_cast<std::uint32_t>(tnet_points));
    input.points.reserve(keep.size());
    for (std::uint32_t i : keep) input.points.push_back(cloud.points[i]);
  } else {
    input = cloud;
  }
  // The predictor contract is a centered cloud.
  input = center(input).first;
  Mat3 r = orient(input);
  validate_rotation(r);
  return r;
}

}  // namespace

CanonicalShape canonicalize(const Shape& shape, CanonMode mode,
                            const CanonParams& params,
                            const RotationPredictor& orient) {
  validate_shape(shape);
  Rng rng(params.seed);
  CanonicalShape result;

  switch (mode) {
    case CanonMode::regression: {
      PointCloud cloud =
          is_mesh(shape)
              ? sample_surface(as_mesh(shape), params.regression_samples,
                               rng.split(1).seed())
              : as_cloud(shape);
      auto [centered, translation] = center(cloud);
      auto [scaled, scale] = scale_to_bbox_area(centered, params.bbox_target_area);
      Mat3 r = orient_pca(scaled);
      result.shape = rotate_cloud(scaled, r);
      result.transform = {r, scale, translation};
      return result;
    }
    case CanonMode::matching_mesh: {
      const TriangleMesh& mesh = as_mesh(shape);
      Vec3 translation = -mean_point(mesh.vertices);
      TriangleMesh centered = mesh;
      for (Vec3& v : centered.vertices) v += translation;
      auto [scaled, scale] = scale_mesh_unit_area(centered);
      PointCloud samples =
          sample_surface(scaled, params.tnet_points, rng.split(2).seed());
      Mat3 r = predict_orientation(orient, samples, params.tnet_points, rng.split(3));
      TriangleMesh out = scaled;
      for (Vec3& v : out.vertices) v = r * v;
      result.shape = std::move(out);
      result.transform = {r, scale, translation};
      return result;
    }
    case CanonMode::matching_pointcloud: {
      auto [centered, translation] = center(as_cloud(shape));
      auto [scaled, scale] = scale_pointcloud_matched_nn(
          centered, params.matched_nn_k, params.matched_nn_target,
          rng.split(4).seed());
      Mat3 r = predict_orientation(orient, scaled, params.tnet_points, rng.split(3));
      result.shape = rotate_cloud(scaled, r);
      result.transform = {r, scale, translation};
      return result;
    }
  }
  fail_invalid("canonicalize: unknown mode");
}

std::string transform_to_json(const CanonicalTransform& t) {
  nlohmann::json j;
  std::vector<double> rot(9);
  for (int i = 0; i < 3; ++i)
    for (int c = 0; c < 3; ++c) rot[static_cast<std::size_t>(i * 3 + c)] = t.rotation(i, c);
  j["rotation"] = rot;
  j["scale"] = t.scale;
  j["translation"] = {t.translation.x(), t.translation.y(), t.translation.z()};
  return j.dump(2) + "\n";
}

CanonicalTransform transform_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail_invalid(std::string("transform: bad JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("rotation") || !j.contains("scale") ||
      !j.contains("translation"))
    fail_invalid("transform: need keys rotation/scale/translation");
  auto rot = j["rotation"];
  auto tr = j["translation"];
  if (!rot.is_array() || rot.size() != 9 || !tr.is_array() || tr.size() != 3)
    fail_invalid("transform: rotation must have 9 entries, translation 3");
  CanonicalTransform t;
  for (int i = 0; i < 3; ++i)
    for (int c = 0; c < 3; ++c)
      t.rotation(i, c) = rot[static_cast<std::size_t>(i * 3 + c)].get<double>();
  t.scale = j["scale"].get<double>();
  for (int c = 0; c < 3; ++c) t.translation[c] = tr[static_cast<std::size_t>(c)].get<double>();
  validate_rotation(t.rotation);
  if (!(t.scale > 0) || !std::isfinite(t.scale))
    fail_invalid("transform: scale must be positive and finite");
  return t;
}

void save_transform(const std::string& path, const CanonicalTransform& t) {
  write_file_atomic(path, transform_to_json(t));
}

CanonicalTransform load_transform(const std::string& path) {
  return transform_from_json(read_file(path));
}

}  // namespace litege

#include "litege/nn_models.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

namespace litege {

namespace {

constexpr double kStdFloor = 1e-8;

void check_widths(const std::vector<Eigen::Index>& widths, const char* what) {
  if (widths.empty()) {
    fail_invalid(std::string(what) + ": needs at least one width");
  }
  for (Eigen::Index w : widths) {
    if (w < 1) {
      fail_invalid(std::string(what) + ": widths must be positive");
    }
  }
}

}  // namespace

Eigen::MatrixXd CoordStats::normalize(const Eigen::MatrixXd& coords) const {
  if (coords.rows() != 3) {
    fail_invalid("coord stats: expected 3 rows");
  }
  for (int i = 0; i < 3; ++i) {
    if (!(std::isfinite(mean[i]) && std::isfinite(std[i]) && std[i] > 0.0)) {
      fail_invalid("coord stats: non-finite or non-positive entries");
    }
  }
  return (coords.colwise() - mean).array().colwise() / std.array();
}

CoordStats fit_coord_stats(const Eigen::MatrixXd& coords) {
  if (coords.rows() != 3 || coords.cols() < 1) {
    fail_invalid("coord stats: expected a non-empty 3 x n matrix");
  }
  CoordStats stats;
  stats.mean = coords.rowwise().mean();
  const Eigen::MatrixXd centered = coords.colwise() - stats.mean;
  const Vec3 var = centered.array().square().rowwise().mean();
  stats.std = var.array().sqrt().max(kStdFloor);
  return stats;
}

GeodesicNet::GeodesicNet(Eigen::Index descriptor_dim, int width_multiplier,
                         std::uint64_t seed)
    : descriptor_dim_(descriptor_dim), width_multiplier_(width_multiplier) {
  if (descriptor_dim < 1) {
    fail_invalid("geodesic net: descriptor dimension must be positive");
  }
  if (width_multiplier < 1 || width_multiplier > 8) {
    fail_invalid("geodesic net: width multiplier out of range [1, 8]");
  }
  const Eigen::Index w = width();
  Rng rng(seed);
  coord_mlp.add_block(3, w, rng);
  coord_mlp.add_block(w, w, rng);
  shape_mlp.add_block(descriptor_dim, w, rng);
  shape_mlp.add_block(w, w, rng);
  shape_mlp.add_block(w, w, rng);
  point_mlp.add_block(2 * w, w, rng);
  point_mlp.add_block(w, w, rng);
  point_mlp.add_block(w, w, rng);
  head.add_block(w, 2 * w, rng);
  head.add_block(2 * w, 2 * w, rng);
  head.add_dense(2 * w, 1, rng);
}

Eigen::VectorXd GeodesicNet::forward(const Eigen::MatrixXd& desc_src,
                                     const Eigen::MatrixXd& desc_dst,
                                     const Eigen::MatrixXd& src,
                                     const Eigen::MatrixXd& dst,
                                     const CoordStats& stats, RunMode mode) {
  const Eigen::Index b = src.cols();
  if (b < 1 || src.rows() != 3 || dst.rows() != 3 || dst.cols() != b) {
    fail_invalid("geodesic net: coordinates must be non-empty 3 x batch");
  }
  if (desc_src.rows() != descriptor_dim_ || desc_dst.rows() != descriptor_dim_ ||
      desc_src.cols() != b || desc_dst.cols() != b) {
    fail_invalid("geodesic net: descriptor batch shape mismatch");
  }
  stats_ = stats;
  batch_ = b;

  Eigen::MatrixXd coords(3, 2 * b);
  coords.leftCols(b) = src;
  coords.rightCols(b) = dst;
  const Eigen::MatrixXd c_out = coord_mlp.forward(stats.normalize(coords), mode);

  Eigen::MatrixXd descs(descriptor_dim_, 2 * b);
  descs.leftCols(b) = desc_src;
  descs.rightCols(b) = desc_dst;
  const Eigen::MatrixXd s_out = shape_mlp.forward(descs, mode);

  const Eigen::Index w = width();
  Eigen::MatrixXd joint(2 * w, 2 * b);
  joint.topRows(w) = c_out;
  joint.bottomRows(w) = s_out;
  const Eigen::MatrixXd embed = point_mlp.forward(joint, mode);

  head_input_ = embed.leftCols(b) - embed.rightCols(b);
  const Eigen::MatrixXd h = head.forward(head_input_, mode);

  const Eigen::MatrixXd diff = src - dst;
  euclid_ = diff.colwise().norm();
  diff_unit_.resize(3, b);
  for (Eigen::Index i = 0; i < b; ++i) {
    const double n = euclid_[i];
    diff_unit_.col(i) = n > 0.0 ? Vec3(diff.col(i) / n) : Vec3::Zero();
  }
  return euclid_ + h.row(0).transpose();
}

GeodesicNet::InputGrads GeodesicNet::backward(const Eigen::VectorXd& dout) {
  if (batch_ < 1) {
    fail_invalid("geodesic net: backward without a preceding forward");
  }
  const Eigen::Index b = batch_;
  if (dout.size() != b) {
    fail_invalid("geodesic net: output gradient size mismatch");
  }
  const Eigen::Index w = width();

  const Eigen::MatrixXd d_head_in = head.backward(dout.transpose());
  Eigen::MatrixXd d_embed(w, 2 * b);
  d_embed.leftCols(b) = d_head_in;
  d_embed.rightCols(b) = -d_head_in;
  const Eigen::MatrixXd d_joint = point_mlp.backward(d_embed);
  const Eigen::MatrixXd d_norm = coord_mlp.backward(d_joint.topRows(w));
  shape_mlp.backward(d_joint.bottomRows(w));

  const Eigen::MatrixXd euclid_term =
      diff_unit_.array().rowwise() * dout.transpose().array();
  InputGrads grads;
  grads.d_src =
      (d_norm.leftCols(b).array().colwise() / stats_.std.array()).matrix() +
      euclid_term;
  grads.d_dst =
      (d_norm.rightCols(b).array().colwise() / stats_.std.array()).matrix() -
      euclid_term;
  return grads;
}

Eigen::MatrixXd GeodesicNet::shape_embedding(const Eigen::MatrixXd& desc,
                                             RunMode mode) {
  if (desc.rows() != descriptor_dim_ || desc.cols() < 1) {
    fail_invalid("geodesic net: descriptor shape mismatch");
  }
  return shape_mlp.forward(desc, mode);
}

Eigen::MatrixXd GeodesicNet::point_embedding(const Eigen::MatrixXd& coords,
                                             const Eigen::MatrixXd& shape_embed,
                                             const CoordStats& stats,
                                             RunMode mode) {
  const Eigen::Index b = coords.cols();
  if (coords.rows() != 3 || b < 1) {
    fail_invalid("geodesic net: coordinates must be non-empty 3 x batch");
  }
  const Eigen::Index w = width();
  if (shape_embed.rows() != w ||
      (shape_embed.cols() != b && shape_embed.cols() != 1)) {
    fail_invalid("geodesic net: shape embedding batch mismatch");
  }
  Eigen::MatrixXd joint(2 * w, b);
  joint.topRows(w) = coord_mlp.forward(stats.normalize(coords), mode);
  if (shape_embed.cols() == b) {
    joint.bottomRows(w) = shape_embed;
  } else {
    joint.bottomRows(w) = shape_embed.replicate(1, b);
  }
  return point_mlp.forward(joint, mode);
}

Eigen::VectorXd GeodesicNet::pair_value(const Eigen::MatrixXd& e_src,
                                        const Eigen::MatrixXd& e_dst,
                                        const Eigen::MatrixXd& src,
                                        const Eigen::MatrixXd& dst,
                                        RunMode mode) {
  const Eigen::Index b = e_src.cols();
  const Eigen::Index w = width();
  if (e_src.rows() != w || e_dst.rows() != w || e_dst.cols() != b ||
      src.rows() != 3 || dst.rows() != 3 || src.cols() != b ||
      dst.cols() != b || b < 1) {
    fail_invalid("geodesic net: pair value shape mismatch");
  }
  const Eigen::MatrixXd h = head.forward(e_src - e_dst, mode);
  return (src - dst).colwise().norm().transpose() + h.row(0).transpose();
}

double GeodesicNet::predict(const Eigen::VectorXd& desc_src,
                            const Eigen::VectorXd& desc_dst, const Vec3& src,
                            const Vec3& dst, const CoordStats& stats) {
  return forward(desc_src, desc_dst, src, dst, stats, RunMode::eval)[0];
}

Eigen::Index GeodesicNet::param_count() const {
  return coord_mlp.param_count() + shape_mlp.param_count() +
         point_mlp.param_count() + head.param_count();
}

void GeodesicNet::copy_params(Eigen::VectorXd& flat) const {
  flat.resize(param_count());
  double* p = flat.data();
  coord_mlp.copy_params(p);
  p += coord_mlp.param_count();
  shape_mlp.copy_params(p);
  p += shape_mlp.param_count();
  point_mlp.copy_params(p);
  p += point_mlp.param_count();
  head.copy_params(p);
}

void GeodesicNet::load_params(const Eigen::VectorXd& flat) {
  if (flat.size() != param_count()) {
    fail_invalid("geodesic net: parameter vector size mismatch");
  }
  const double* p = flat.data();
  coord_mlp.load_params(p);
  p += coord_mlp.param_count();
  shape_mlp.load_params(p);
  p += shape_mlp.param_count();
  point_mlp.load_params(p);
  p += point_mlp.param_count();
  head.load_params(p);
}

void GeodesicNet::copy_grads(Eigen::VectorXd& flat) const {
  flat.resize(param_count());
  double* p = flat.data();
  coord_mlp.copy_grads(p);
  p += coord_mlp.param_count();
  shape_mlp.copy_grads(p);
  p += shape_mlp.param_count();
  point_mlp.copy_grads(p);
  p += point_mlp.param_count();
  head.copy_grads(p);
}

void GeodesicNet::zero_grads() {
  coord_mlp.zero_grads();
  shape_mlp.zero_grads();
  point_mlp.zero_grads();
  head.zero_grads();
}

Eigen::Index GeodesicNet::buffer_count() const {
  return coord_mlp.buffer_count() + shape_mlp.buffer_count() +
         point_mlp.buffer_count() + head.buffer_count();
}

void GeodesicNet::copy_buffers(Eigen::VectorXd& flat) const {
  flat.resize(buffer_count());
  double* p = flat.data();
  coord_mlp.copy_buffers(p);
  p += coord_mlp.buffer_count();
  shape_mlp.copy_buffers(p);
  p += shape_mlp.buffer_count();
  point_mlp.copy_buffers(p);
  p += point_mlp.buffer_count();
  head.copy_buffers(p);
}

void GeodesicNet::load_buffers(const Eigen::VectorXd& flat) {
  if (flat.size() != buffer_count()) {
    fail_invalid("geodesic net: buffer vector size mismatch");
  }
  const double* p = flat.data();
  coord_mlp.load_buffers(p);
  p += coord_mlp.buffer_count();
  shape_mlp.load_buffers(p);
  p += shape_mlp.buffer_count();
  point_mlp.load_buffers(p);
  p += point_mlp.buffer_count();
  head.load_buffers(p);
}

GeodesicNet make_regressor_net(Eigen::Index descriptor_dim,
                               std::uint64_t seed) {
  return GeodesicNet(descriptor_dim, 1, seed);
}

GeodesicNet make_matcher_net(Eigen::Index descriptor_dim, std::uint64_t seed) {
  return GeodesicNet(descriptor_dim, 2, seed);
}

bool gram_schmidt_degenerate(const Vec3& a, const Vec3& b) {
  const double na = a.norm();
  if (!(na > 1e-8)) {
    return true;
  }
  const double nb = b.norm();
  if (!(nb > 0.0)) {
    return true;
  }
  const Vec3 c1 = a / na;
  const Vec3 u = b - b.dot(c1) * c1;
  // |u| / |b| is the sine of the angle between a and b.
  return !(u.norm() > 1e-6 * nb);
}

Mat3 gram_schmidt_rotation(const Vec3& a, const Vec3& b) {
  const double na = a.norm();
  if (!(na > 1e-8)) {
    fail_invalid("gram-schmidt: first vector is near zero");
  }
  const Vec3 c1 = a / na;
  const Vec3 u = b - b.dot(c1) * c1;
  const double nb = b.norm();
  if (!(nb > 0.0) || !(u.norm() > 1e-6 * nb)) {
    fail_invalid("gram-schmidt: vectors are near parallel");
  }
  const Vec3 c2 = u / u.norm();
  Mat3 r;
  r.col(0) = c1;
  r.col(1) = c2;
  r.col(2) = c1.cross(c2);
  return r;
}

void gram_schmidt_backward(const Vec3& a, const Vec3& b, const Mat3& d_rot,
                           Vec3& da, Vec3& db) {
  const double na = a.norm();
  const Vec3 c1 = a / na;
  const Vec3 u = b - b.dot(c1) * c1;
  const double nu = u.norm();
  const Vec3 c2 = u / nu;

  const Vec3 g1 = d_rot.col(0);
  const Vec3 g2 = d_rot.col(1);
  const Vec3 g3 = d_rot.col(2);

  // c3 = c1 x c2 contributes to both inputs of the cross product.
  Vec3 dc1 = g1 + c2.cross(g3);
  const Vec3 dc2 = g2 + g3.cross(c1);

  const Vec3 du = (dc2 - c2 * c2.dot(dc2)) / nu;
  db += du - c1 * c1.dot(du);
  dc1 += -du.dot(c1) * b - b.dot(c1) * du;
  da += (dc1 - c1 * c1.dot(dc1)) / na;
}

TNet::TNet(const TNetConfig& config, std::uint64_t seed) : config_(config) {
  check_widths(config.point_widths, "tnet point widths");
  check_widths(config.head_widths, "tnet head widths");
  Rng rng(seed);
  Eigen::Index prev = 3;
  for (Eigen::Index w : config.point_widths) {
    per_point.add_block(prev, w, rng);
    prev = w;
  }
  for (Eigen::Index w : config.head_widths) {
    head.add_block(prev, w, rng);
    prev = w;
  }
  head.add_dense(prev, 6, rng);
}

Eigen::MatrixXd TNet::forward_features(const Eigen::MatrixXd& points,
                                       Eigen::Index clouds, RunMode mode) {
  if (clouds < 1 || points.rows() != 3 || points.cols() < clouds ||
      points.cols() % clouds != 0) {
    fail_invalid("tnet: point batch must hold equally sized clouds");
  }
  const Eigen::Index n = points.cols() / clouds;
  const Eigen::MatrixXd feats = per_point.forward(points, mode);
  const Eigen::Index dim = feats.rows();

  points_per_cloud_ = n;
  argmax_.assign(static_cast<std::size_t>(dim * clouds), 0);
  Eigen::MatrixXd pooled(dim, clouds);
  for (Eigen::Index c = 0; c < clouds; ++c) {
    for (Eigen::Index f = 0; f < dim; ++f) {
      Eigen::Index best = c * n;
      double best_val = feats(f, best);
      for (Eigen::Index j = 1; j < n; ++j) {
        const double v = feats(f, c * n + j);
        if (v > best_val) {
          best_val = v;
          best = c * n + j;
        }
      }
      pooled(f, c) = best_val;
      argmax_[static_cast<std::size_t>(c * dim + f)] = best;
    }
  }
  return head.forward(pooled, mode);
}

void TNet::backward_features(const Eigen::MatrixXd& d_out) {
  if (points_per_cloud_ < 1) {
    fail_invalid("tnet: backward without a preceding forward");
  }
  const Eigen::MatrixXd d_pool = head.backward(d_out);
  const Eigen::Index dim = d_pool.rows();
  const Eigen::Index clouds = d_pool.cols();
  Eigen::MatrixXd d_feats =
      Eigen::MatrixXd::Zero(dim, clouds * points_per_cloud_);
  for (Eigen::Index c = 0; c < clouds; ++c) {
    for (Eigen::Index f = 0; f < dim; ++f) {
      d_feats(f, argmax_[static_cast<std::size_t>(c * dim + f)]) +=
          d_pool(f, c);
    }
  }
  per_point.backward(d_feats);
}

Mat3 TNet::rotation(const PointCloud& centered, bool* fallback) {
  validate_cloud(centered);
  const Eigen::Index n = static_cast<Eigen::Index>(centered.points.size());
  Eigen::MatrixXd pts(3, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    pts.col(i) = centered.points[static_cast<std::size_t>(i)];
  }
  const Eigen::MatrixXd out = forward_features(pts, 1, RunMode::eval);
  const Vec3 a = out.col(0).head<3>();
  const Vec3 b = out.col(0).tail<3>();
  if (gram_schmidt_degenerate(a, b)) {
    if (fallback != nullptr) {
      *fallback = true;
    }
    return Mat3::Identity();
  }
  if (fallback != nullptr) {
    *fallback = false;
  }
  return gram_schmidt_rotation(a, b);
}

Eigen::Index TNet::param_count() const {
  return per_point.param_count() + head.param_count();
}

void TNet::copy_params(Eigen::VectorXd& flat) const {
  flat.resize(param_count());
  per_point.copy_params(flat.data());
  head.copy_params(flat.data() + per_point.param_count());
}

void TNet::load_params(const Eigen::VectorXd& flat) {
  if (flat.size() != param_count()) {
    fail_invalid("tnet: parameter vector size mismatch");
  }
  per_point.load_params(flat.data());
  head.load_params(flat.data() + per_point.param_count());
}

void TNet::copy_grads(Eigen::VectorXd& flat) const {
  flat.resize(param_count());
  per_point.copy_grads(flat.data());
  head.copy_grads(flat.data() + per_point.param_count());
}

void TNet::zero_grads() {
  per_point.zero_grads();
  head.zero_grads();
}

Eigen::Index TNet::buffer_count() const {
  return per_point.buffer_count() + head.buffer_count();
}

void TNet::copy_buffers(Eigen::VectorXd& flat) const {
  flat.resize(buffer_count());
  per_point.copy_buffers(flat.data());
  head.copy_buffers(flat.data() + per_point.buffer_count());
}

void TNet::load_buffers(const Eigen::VectorXd& flat) {
  if (flat.size() != buffer_count()) {
    fail_invalid("tnet: buffer vector size mismatch");
  }
  per_point.load_buffers(flat.data());
  head.load_buffers(flat.data() + per_point.buffer_count());
}

bool align_loss(const Vec3& a, const Vec3& b, const Eigen::MatrixXd& points,
                const Mat3& target, double& loss, Vec3* da, Vec3* db) {
  const Eigen::Index n = points.cols();
  if (points.rows() != 3 || n < 1) {
    fail_invalid("align loss: points must be non-empty 3 x n");
  }
  const bool degenerate = gram_schmidt_degenerate(a, b);
  const Mat3 r_hat =
      degenerate ? Mat3::Identity() : gram_schmidt_rotation(a, b);

  const double trace_cos = (r_hat.cwiseProduct(target).sum() - 1.0) / 2.0;
  const double c = std::clamp(trace_cos, -1.0, 1.0);
  const Mat3 diff = r_hat - target;
  double l2 = 0.0;
  Mat3 d_rot = Mat3::Zero();
  for (Eigen::Index i = 0; i < n; ++i) {
    const Vec3 y = diff * points.col(i);
    const double ny = y.norm();
    l2 += ny;
    if (ny > 0.0 && da != nullptr) {
      d_rot += (y / ny) * points.col(i).transpose();
    }
  }
  loss = std::acos(c) + 2.0 * l2 / static_cast<double>(n);
  if (da == nullptr || db == nullptr) {
    return !degenerate;
  }
  if (degenerate) {
    return false;
  }
  d_rot *= 2.0 / static_cast<double>(n);
  const double sin_sq = std::max(1.0 - c * c, 1e-12);
  d_rot += target * (-0.5 / std::sqrt(sin_sq));
  gram_schmidt_backward(a, b, d_rot, *da, *db);
  return true;
}

}  // namespace litege

#pragma once

#include <cstdint>
#include <vector>

#include "litege/geometry.hpp"
#include "litege/nn.hpp"

namespace litege {

// Per-axis normalization of query coordinates, frozen at training time.
struct CoordStats {
  Vec3 mean = Vec3::Zero();
  Vec3 std = Vec3::Ones();

  Eigen::MatrixXd normalize(const Eigen::MatrixXd& coords) const;
};

CoordStats fit_coord_stats(const Eigen::MatrixXd& coords);

// Shared pair-distance architecture. width_multiplier 1 is the geodesic
// regressor (hidden width 200, head 400); 2 is the cross-shape matcher.
// Output = ||src - dst|| + head(point_embed(src) - point_embed(dst)) with
// point_embed(x) = point_mlp(concat(coord_mlp(x_norm), shape_mlp(desc))).
class GeodesicNet {
 public:
  GeodesicNet(Eigen::Index descriptor_dim, int width_multiplier, std::uint64_t seed);

  // desc_* are k x B (one descriptor column per sample; for the regressor
  // both sides share a column), src/dst are raw canonical 3 x B.
  Eigen::VectorXd forward(const Eigen::MatrixXd& desc_src,
                          const Eigen::MatrixXd& desc_dst,
                          const Eigen::MatrixXd& src, const Eigen::MatrixXd& dst,
                          const CoordStats& stats, RunMode mode);

  struct InputGrads {
    Eigen::MatrixXd d_src, d_dst;  // 3 x B, w.r.t. raw coordinates
  };
  // Follows a forward; accumulates parameter gradients.
  InputGrads backward(const Eigen::VectorXd& dout);

  // Blocks for inference-time embedding reuse.
  Eigen::MatrixXd shape_embedding(const Eigen::MatrixXd& desc, RunMode mode);
  Eigen::MatrixXd point_embedding(const Eigen::MatrixXd& coords,
                                  const Eigen::MatrixXd& shape_embed,
                                  const CoordStats& stats, RunMode mode);
  // ||src - dst|| + head(e_src - e_dst).
  Eigen::VectorXd pair_value(const Eigen::MatrixXd& e_src,
                             const Eigen::MatrixXd& e_dst,
                             const Eigen::MatrixXd& src, const Eigen::MatrixXd& dst,
                             RunMode mode);

  double predict(const Eigen::VectorXd& desc_src, const Eigen::VectorXd& desc_dst,
                 const Vec3& src, const Vec3& dst, const CoordStats& stats);

  const Eigen::MatrixXd& last_head_input() const { return head_input_; }

  Eigen::Index descriptor_dim() const { return descriptor_dim_; }
  int width_multiplier() const { return width_multiplier_; }
  Eigen::Index width() const { return 200 * width_multiplier_; }

  Eigen::Index param_count() const;
  void copy_params(Eigen::VectorXd& flat) const;
  void load_params(const Eigen::VectorXd& flat);
  void copy_grads(Eigen::VectorXd& flat) const;
  void zero_grads();
  Eigen::Index buffer_count() const;
  void copy_buffers(Eigen::VectorXd& flat) const;
  void load_buffers(const Eigen::VectorXd& flat);

  Sequential coord_mlp, shape_mlp, point_mlp, head;

 private:
  Eigen::Index descriptor_dim_;
  int width_multiplier_;
  CoordStats stats_;  // cached from forward for the backward coordinate chain
  Eigen::Index batch_ = 0;
  Eigen::VectorXd euclid_;
  Eigen::MatrixXd diff_unit_;   // d||src-dst||/d src, zero column when src == dst
  Eigen::MatrixXd head_input_;  // e_src - e_dst
};

GeodesicNet make_regressor_net(Eigen::Index descriptor_dim, std::uint64_t seed);
GeodesicNet make_matcher_net(Eigen::Index descriptor_dim, std::uint64_t seed);

// c1 = a/|a|, c2 = normalize(b - (b.c1)c1), c3 = c1 x c2 as columns.
Mat3 gram_schmidt_rotation(const Vec3& a, const Vec3& b);
bool gram_schmidt_degenerate(const Vec3& a, const Vec3& b);
// Accumulates d loss/d a and d loss/d b given d loss/d rotation.
void gram_schmidt_backward(const Vec3& a, const Vec3& b, const Mat3& d_rot,
                           Vec3& da, Vec3& db);

struct TNetConfig {
  std::vector<Eigen::Index> point_widths = {128, 512, 2048};
  std::vector<Eigen::Index> head_widths = {2048, 512, 128};
};

// Shared per-point MLP, feature max-pool per cloud, head to 6 numbers that
// Gram-Schmidt turns into a rotation.
class TNet {
 public:
  TNet(const TNetConfig& config, std::uint64_t seed);

  // points holds `clouds` fixed-size clouds side by side (3 x clouds*n).
  Eigen::MatrixXd forward_features(const Eigen::MatrixXd& points,
                                   Eigen::Index clouds, RunMode mode);
  void backward_features(const Eigen::MatrixXd& d_out);  // 6 x clouds

  // Eval-mode rotation for one centered cloud; a degenerate 6D output falls
  // back to the identity and sets *fallback.
  Mat3 rotation(const PointCloud& centered, bool* fallback = nullptr);

  const TNetConfig& config() const { return config_; }
  Eigen::Index param_count() const;
  void copy_params(Eigen::VectorXd& flat) const;
  void load_params(const Eigen::VectorXd& flat);
  void copy_grads(Eigen::VectorXd& flat) const;
  void zero_grads();
  Eigen::Index buffer_count() const;
  void copy_buffers(Eigen::VectorXd& flat) const;
  void load_buffers(const Eigen::VectorXd& flat);

  Sequential per_point, head;

 private:
  TNetConfig config_;
  Eigen::Index points_per_cloud_ = 0;
  std::vector<Eigen::Index> argmax_;  // feature-major, clouds * feature_dim
};

// L_align for one cloud: alignment angle of GS(a, b) against the target
// plus (2/N) sum ||(R_hat - target) x_i||. Accumulates gradients into
// da/db when given; returns false (zero gradients, identity rotation used)
// when (a, b) is degenerate.
bool align_loss(const Vec3& a, const Vec3& b, const Eigen::MatrixXd& points,
                const Mat3& target, double& loss, Vec3* da = nullptr,
                Vec3* db = nullptr);

}  // namespace litege

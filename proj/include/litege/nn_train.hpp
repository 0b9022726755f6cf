#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include "litege/nn_models.hpp"
#include "litege/oracle.hpp"

namespace litege {

struct TrainConfig {
  std::size_t epochs = 10;
  Eigen::Index batch_size = 3072;
  double lr_start = 1e-2;
  double lr_end = 1e-4;
  std::size_t patience = 2;
  double val_fraction = 0.1;
  std::uint64_t seed = 0;
};

void validate_train_config(const TrainConfig& config);

struct TrainHistory {
  std::vector<double> train_loss;  // mean L1 per epoch
  std::vector<double> val_loss;
  std::size_t best_epoch = 0;
  double best_val = std::numeric_limits<double>::infinity();
  std::size_t restart_winner = 0;
  std::size_t pairs_filtered = 0;
};

// One supervised pair. The regressor uses same-shape pairs (shape_x ==
// shape_y, target = geodesic distance); the matcher uses cross-shape pairs
// at corresponding parameters (target = mean of the two shapes' geodesics).
struct TrainPair {
  std::uint32_t shape_x = 0;
  std::uint32_t shape_y = 0;
  Vec3 x = Vec3::Zero();
  Vec3 y = Vec3::Zero();
  double target = 0.0;
  double align_err_x = 0.0;  // canonical-orientation error of each side
  double align_err_y = 0.0;
};

struct PairDataset {
  Eigen::MatrixXd descriptors;  // k x num_shapes, one column per shape
  std::vector<TrainPair> pairs;
};

void validate_pair_dataset(const PairDataset& data);

// Same-shape pairs from geodesic samples; shape_id indexes descriptor
// columns.
PairDataset regression_pairs(const Eigen::MatrixXd& descriptors,
                             const std::vector<GeodesicSample>& samples);

// Appends the swapped copy of every pair.
void symmetrize_pairs(PairDataset& data);

// Cross-shape pairs from a shared-pair geodesic dataset: samples must hold
// the same vertex pairs per shape in the same order, so sample t of shapes a
// and b is one vertex pair and its target averages the two distances. Shape
// pairs are drawn without replacement from all unordered pairs;
// num_shape_pairs 0 keeps every pair. align_errors, when given, carries one
// canonical-orientation error per shape.
PairDataset matcher_pairs(const Eigen::MatrixXd& descriptors,
                          const std::vector<GeodesicSample>& samples,
                          std::size_t num_shape_pairs, std::uint64_t seed,
                          const std::vector<double>* align_errors = nullptr);

struct TrainedPairNet {
  GeodesicNet net;
  CoordStats stats;
  TrainHistory history;
};

TrainedPairNet train_regressor(const PairDataset& data,
                               const TrainConfig& config);

// Drops pairs where either side's alignment error exceeds the filter, runs
// the first epoch from `restarts` independent initializations, and continues
// the best-validation run. Restores the best checkpoint at the end.
TrainedPairNet train_matcher(const PairDataset& data, const TrainConfig& config,
                             double alignment_filter = 0.66,
                             std::size_t restarts = 8);

// Mean L1 of the net against pair targets, eval mode.
double evaluate_pairs(GeodesicNet& net, const CoordStats& stats,
                      const PairDataset& data, Eigen::Index batch_size = 4096);

struct TNetDataset {
  std::vector<Eigen::MatrixXd> clouds;  // 3 x n each, all the same n
  std::vector<Mat3> targets;            // rotation that re-canonicalizes
};

void validate_tnet_dataset(const TNetDataset& data);

// Rotates each base cloud by `rotations_per_cloud` random rotations; the
// target of each copy is the inverse rotation.
TNetDataset augment_tnet_clouds(const std::vector<Eigen::MatrixXd>& base_clouds,
                                std::size_t rotations_per_cloud,
                                std::uint64_t seed);

struct TrainedTNet {
  TNet net;
  TrainHistory history;
};

TrainedTNet train_tnet(const TNetDataset& data, const TNetConfig& arch,
                       const TrainConfig& config);

// Mean alignment loss in eval mode.
double evaluate_tnet(TNet& net, const TNetDataset& data);

}  // namespace litege

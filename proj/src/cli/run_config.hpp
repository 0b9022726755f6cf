#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace litege::cli {

// One struct per subcommand; JSON config sections and command-line flags map
// one to one onto these fields. Empty strings mean "not set".

struct FamilySection {
  std::uint32_t count = 10;
  std::uint32_t subdivision = 4;
  std::string out_dir;
};

struct GeodesicsSection {
  std::string shapes_dir;
  std::string out;
  std::uint32_t num_sources = 8;
  std::uint32_t num_dests = 128;
  std::uint32_t subdivision = 1;
  double gt_scaling = 1.42;
  bool shared_pairs = false;
};

struct CanonicalizeSection {
  std::string in;
  std::string out;
  std::string mode = "regression";
  std::string tnet_model;
  double bbox_target_area = 1.7;
  std::uint32_t regression_samples = 2000;
  std::uint32_t matched_nn_k = 500;
  double matched_nn_target = 0.03835;
  std::uint32_t tnet_points = 2000;
  bool emit_mesh = true;
};

struct VoxelsSection {
  std::string canonical_dir;
  std::string out;
  std::uint32_t resolution = 128;
  double extent = 1.5;
  double epsilon = 0.01;
};

struct PcaSection {
  std::string canonical_dir;
  std::string selection;
  std::string out;
  std::uint32_t k = 240;
};

struct DescribeSection {
  std::string in;
  std::string space;
  std::string out;
};

struct TrainGeodesicSection {
  std::string descriptors;
  std::string geodesics;
  std::string space;
  std::string out;
  std::uint32_t epochs = 10;
  std::uint32_t batch_size = 3072;
  double lr_start = 1e-2;
  double lr_end = 1e-4;
  std::uint32_t patience = 10;
  double val_fraction = 0.1;
  bool symmetrize = true;
};

struct TrainMatcherSection {
  std::string descriptors;
  std::string geodesics;
  std::string space;
  std::string out;
  std::string alignment_errors;
  std::uint32_t epochs = 10;
  std::uint32_t batch_size = 3072;
  double lr_start = 1e-2;
  double lr_end = 1e-4;
  std::uint32_t patience = 10;
  double val_fraction = 0.1;
  double alignment_filter = 0.66;
  std::uint32_t restarts = 8;
  std::uint32_t num_shape_pairs = 0;
};

struct TrainTnetSection {
  std::string canonical_dir;
  std::string out;
  std::vector<std::uint32_t> point_widths = {128, 512, 2048};
  std::vector<std::uint32_t> head_widths = {2048, 512, 128};
  std::uint32_t epochs = 450;
  std::uint32_t batch_size = 144;
  double lr_start = 1e-3;
  double lr_end = 1e-5;
  std::uint32_t patience = 450;
  double val_fraction = 0.1;
  std::uint32_t rotations_per_cloud = 8;
  std::uint32_t points_per_cloud = 2000;
};

struct InferSection {
  std::string model;
  std::string space;
  std::string shape;
  std::string queries;
  std::string out;
  bool force_basis = false;
};

struct MatchSection {
  std::string model;
  std::string space;
  std::string source;
  std::string target;
  std::string out;
  std::string cache;
  std::vector<std::uint32_t> tier_sizes = {60, 650, 0};  // 0 = every point
  std::vector<std::uint32_t> neighbor_counts = {65, 60};
  bool farthest_point = false;
  std::uint32_t num_queries = 100;
  std::vector<double> auc_thresholds = {0.1, 0.2};
  std::string gt = "index";
  bool force_basis = false;
};

struct TraceSection {
  std::string model;
  std::string space;
  std::string shape;
  std::string pairs;
  std::string out;
  std::string project_dense;
  std::vector<double> src;
  std::vector<double> dst;
  double eta = 0.0;  // 0 = pick by point count
  double eps = 0.05;
  std::uint32_t max_iters = 500;
  std::uint32_t patience = 5;
  bool force_basis = false;
};

struct EvalSection {
  std::string pred;
  std::string gt;
  std::string out;
  std::vector<double> auc_thresholds = {0.1, 0.2};
};

struct BenchSection {
  std::string space;
  std::string model;
  std::string shape;
  std::string out;
  std::uint32_t repeats = 20;
  bool force_basis = false;
};

struct RunConfig {
  std::uint64_t seed = 0;
  std::uint32_t threads = 0;  // 0 = all logical cores
  FamilySection family;
  GeodesicsSection geodesics;
  CanonicalizeSection canonicalize;
  VoxelsSection voxels;
  PcaSection pca;
  DescribeSection describe;
  TrainGeodesicSection train_geodesic;
  TrainMatcherSection train_matcher;
  TrainTnetSection train_tnet;
  InferSection infer;
  MatchSection match;
  TraceSection trace;
  EvalSection eval;
  BenchSection bench;
};

// Merges a JSON config file over the current values. Unknown keys anywhere
// and type mismatches are invalid-input errors.
void merge_config_file(RunConfig& config, const std::string& path);
void merge_config_text(RunConfig& config, const std::string& text,
                       const std::string& origin);

// Full configuration as deterministic JSON (stable key order, round-trip
// float formatting); what every run writes next to its outputs.
std::string resolved_config_json(const RunConfig& config);

}  // namespace litege::cli

#include "litege/nn_train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <utility>

#include "litege/canonicalize.hpp"

namespace litege {

namespace {

struct Checkpoint {
  Eigen::VectorXd params;
  Eigen::VectorXd buffers;
};

template <typename Net>
Checkpoint snapshot(const Net& net) {
  Checkpoint c;
  net.copy_params(c.params);
  net.copy_buffers(c.buffers);
  return c;
}

template <typename Net>
void restore(Net& net, const Checkpoint& c) {
  net.load_params(c.params);
  net.load_buffers(c.buffers);
}

std::size_t batches_per_epoch(std::size_t n, Eigen::Index batch_size) {
  const std::size_t b = static_cast<std::size_t>(batch_size);
  // Trailing batches of one sample are dropped (batch norm needs >= 2).
  return n / b + (n % b >= 2 ? 1 : 0);
}

void fill_pair_batch(const PairDataset& data,
                     const std::vector<std::uint32_t>& order, std::size_t begin,
                     std::size_t count, Eigen::MatrixXd& desc_x,
                     Eigen::MatrixXd& desc_y, Eigen::MatrixXd& px,
                     Eigen::MatrixXd& py, Eigen::VectorXd& targets) {
  const Eigen::Index k = data.descriptors.rows();
  const Eigen::Index b = static_cast<Eigen::Index>(count);
  desc_x.resize(k, b);
  desc_y.resize(k, b);
  px.resize(3, b);
  py.resize(3, b);
  targets.resize(b);
  for (Eigen::Index i = 0; i < b; ++i) {
    const TrainPair& pair =
        data.pairs[order[begin + static_cast<std::size_t>(i)]];
    desc_x.col(i) = data.descriptors.col(pair.shape_x);
    desc_y.col(i) = data.descriptors.col(pair.shape_y);
    px.col(i) = pair.x;
    py.col(i) = pair.y;
    targets[i] = pair.target;
  }
}

// One pass over `order` in shuffled chunks; returns the mean train L1.
double run_pair_epoch(GeodesicNet& net, Adam& opt, const PairDataset& data,
                      std::vector<std::uint32_t>& order, Rng& order_rng,
                      const CoordStats& stats, const TrainConfig& config,
                      std::size_t& step, std::size_t total_steps) {
  order_rng.shuffle(order);
  Eigen::MatrixXd desc_x, desc_y, px, py;
  Eigen::VectorXd targets, params, grads;
  double abs_sum = 0.0;
  std::size_t seen = 0;
  const std::size_t n = order.size();
  const std::size_t batch = static_cast<std::size_t>(config.batch_size);
  for (std::size_t pos = 0; pos < n; pos += batch) {
    const std::size_t count = std::min(batch, n - pos);
    if (count < 2) {
      break;
    }
    fill_pair_batch(data, order, pos, count, desc_x, desc_y, px, py, targets);
    const Eigen::VectorXd out =
        net.forward(desc_x, desc_y, px, py, stats, RunMode::train);
    const Eigen::VectorXd err = out - targets;
    Eigen::VectorXd dout(err.size());
    for (Eigen::Index i = 0; i < err.size(); ++i) {
      dout[i] = err[i] > 0.0 ? 1.0 : (err[i] < 0.0 ? -1.0 : 0.0);
    }
    dout /= static_cast<double>(count);
    net.zero_grads();
    net.backward(dout);
    net.copy_params(params);
    net.copy_grads(grads);
    opt.step(params, grads,
             cosine_lr(step, total_steps, config.lr_start, config.lr_end));
    net.load_params(params);
    ++step;
    abs_sum += err.cwiseAbs().sum();
    seen += count;
  }
  return abs_sum / static_cast<double>(seen);
}

double eval_pair_indices(GeodesicNet& net, const CoordStats& stats,
                         const PairDataset& data,
                         const std::vector<std::uint32_t>& idx,
                         Eigen::Index batch_size) {
  Eigen::MatrixXd desc_x, desc_y, px, py;
  Eigen::VectorXd targets;
  double abs_sum = 0.0;
  const std::size_t batch = static_cast<std::size_t>(batch_size);
  for (std::size_t pos = 0; pos < idx.size(); pos += batch) {
    const std::size_t count = std::min(batch, idx.size() - pos);
    fill_pair_batch(data, idx, pos, count, desc_x, desc_y, px, py, targets);
    const Eigen::VectorXd out =
        net.forward(desc_x, desc_y, px, py, stats, RunMode::eval);
    abs_sum += (out - targets).cwiseAbs().sum();
  }
  return abs_sum / static_cast<double>(idx.size());
}

TrainedPairNet train_pairs_impl(const PairDataset& data,
                                const TrainConfig& config, int multiplier,
                                double alignment_filter, std::size_t restarts) {
  validate_train_config(config);
  validate_pair_dataset(data);
  if (restarts < 1) {
    fail_invalid("training: restarts must be >= 1");
  }
  if (!(alignment_filter > 0.0)) {
    fail_invalid("training: alignment filter must be positive");
  }

  PairDataset kept;
  kept.descriptors = data.descriptors;
  kept.pairs.reserve(data.pairs.size());
  std::size_t filtered = 0;
  for (const TrainPair& pair : data.pairs) {
    if (pair.align_err_x <= alignment_filter &&
        pair.align_err_y <= alignment_filter) {
      kept.pairs.push_back(pair);
    } else {
      ++filtered;
    }
  }
  const std::size_t n = kept.pairs.size();
  if (n < 4) {
    fail_invalid("training: too few pairs after alignment filtering");
  }

  Rng split_rng = Rng(config.seed).split(1);
  std::vector<std::uint32_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0u);
  split_rng.shuffle(idx);
  std::size_t n_val = 0;
  if (config.val_fraction > 0.0) {
    n_val = std::max<std::size_t>(
        1, static_cast<std::size_t>(
               static_cast<double>(n) * config.val_fraction));
    n_val = std::min(n_val, n - 2);
  }
  const std::vector<std::uint32_t> val_idx(idx.begin(),
                                           idx.begin() + static_cast<long>(n_val));
  std::vector<std::uint32_t> train_idx(idx.begin() + static_cast<long>(n_val),
                                       idx.end());

  Eigen::MatrixXd coords(3, 2 * static_cast<Eigen::Index>(train_idx.size()));
  for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(train_idx.size());
       ++i) {
    const TrainPair& pair = kept.pairs[train_idx[static_cast<std::size_t>(i)]];
    coords.col(2 * i) = pair.x;
    coords.col(2 * i + 1) = pair.y;
  }
  const CoordStats stats = fit_coord_stats(coords);

  const Eigen::Index k = kept.descriptors.rows();
  const std::size_t bpe = batches_per_epoch(train_idx.size(), config.batch_size);
  const std::size_t total_steps = config.epochs * bpe;

  GeodesicNet net(k, multiplier, Rng(config.seed).split(10).seed());
  const Eigen::Index pc = net.param_count();

  TrainHistory history;
  history.pairs_filtered = filtered;

  Adam chosen_opt(pc);
  Rng chosen_order = Rng(config.seed).split(20);
  Checkpoint chosen;
  double winner_train = 0.0;
  double winner_val = std::numeric_limits<double>::infinity();
  for (std::size_t r = 0; r < restarts; ++r) {
    GeodesicNet trial(k, multiplier, Rng(config.seed).split(10 + r).seed());
    Adam opt(pc);
    Rng order_rng = Rng(config.seed).split(20 + r);
    std::vector<std::uint32_t> order = train_idx;
    std::size_t step = 0;
    const double tl = run_pair_epoch(trial, opt, kept, order, order_rng, stats,
                                     config, step, total_steps);
    const double vl =
        n_val > 0 ? eval_pair_indices(trial, stats, kept, val_idx, 4096) : tl;
    if (vl < winner_val) {
      winner_val = vl;
      winner_train = tl;
      history.restart_winner = r;
      chosen = snapshot(trial);
      chosen_opt = opt;
      chosen_order = order_rng;
    }
  }
  if (chosen.params.size() == 0) {
    fail_runtime("training: no restart produced a finite validation loss");
  }
  restore(net, chosen);
  history.train_loss.push_back(winner_train);
  history.val_loss.push_back(winner_val);
  history.best_epoch = 0;
  history.best_val = winner_val;

  Checkpoint best = chosen;
  std::size_t since_best = 0;
  std::size_t step = bpe;
  for (std::size_t e = 1; e < config.epochs; ++e) {
    const double tl = run_pair_epoch(net, chosen_opt, kept, train_idx,
                                     chosen_order, stats, config, step,
                                     total_steps);
    const double vl =
        n_val > 0 ? eval_pair_indices(net, stats, kept, val_idx, 4096) : tl;
    history.train_loss.push_back(tl);
    history.val_loss.push_back(vl);
    if (vl < history.best_val) {
      history.best_val = vl;
      history.best_epoch = e;
      best = snapshot(net);
      since_best = 0;
    } else if (++since_best >= config.patience) {
      break;
    }
  }
  restore(net, best);
  return TrainedPairNet{std::move(net), stats, std::move(history)};
}

double eval_tnet_indices(TNet& net, const TNetDataset& data,
                         const std::vector<std::uint32_t>& idx) {
  const Eigen::Index n_pts = data.clouds.front().cols();
  const std::size_t chunk = 8;
  double sum = 0.0;
  Eigen::MatrixXd pts;
  for (std::size_t pos = 0; pos < idx.size(); pos += chunk) {
    const std::size_t count = std::min(chunk, idx.size() - pos);
    pts.resize(3, static_cast<Eigen::Index>(count) * n_pts);
    for (std::size_t i = 0; i < count; ++i) {
      pts.middleCols(static_cast<Eigen::Index>(i) * n_pts, n_pts) =
          data.clouds[idx[pos + i]];
    }
    const Eigen::MatrixXd out = net.forward_features(
        pts, static_cast<Eigen::Index>(count), RunMode::eval);
    for (std::size_t i = 0; i < count; ++i) {
      const Eigen::Index c = static_cast<Eigen::Index>(i);
      double loss = 0.0;
      align_loss(out.col(c).head<3>(), out.col(c).tail<3>(),
                 data.clouds[idx[pos + i]], data.targets[idx[pos + i]], loss);
      sum += loss;
    }
  }
  return sum / static_cast<double>(idx.size());
}

}  // namespace

void validate_train_config(const TrainConfig& config) {
  if (config.epochs < 1) {
    fail_invalid("train config: epochs must be >= 1");
  }
  if (config.batch_size < 2) {
    fail_invalid("train config: batch size must be >= 2");
  }
  if (!std::isfinite(config.lr_start) || !std::isfinite(config.lr_end) ||
      !(config.lr_end > 0.0) || !(config.lr_start >= config.lr_end)) {
    fail_invalid("train config: need lr_start >= lr_end > 0");
  }
  if (!(config.val_fraction >= 0.0) || !(config.val_fraction < 1.0)) {
    fail_invalid("train config: validation fraction must be in [0, 1)");
  }
  if (config.patience < 1) {
    fail_invalid("train config: patience must be >= 1");
  }
}

void validate_pair_dataset(const PairDataset& data) {
  const Eigen::Index shapes = data.descriptors.cols();
  if (data.descriptors.rows() < 1 || shapes < 1) {
    fail_invalid("pair dataset: descriptor matrix is empty");
  }
  if (!data.descriptors.allFinite()) {
    fail_invalid("pair dataset: descriptors contain non-finite values");
  }
  if (data.pairs.empty()) {
    fail_invalid("pair dataset: no pairs");
  }
  const auto limit = static_cast<std::uint32_t>(shapes);
  for (const TrainPair& pair : data.pairs) {
    if (pair.shape_x >= limit || pair.shape_y >= limit) {
      fail_invalid("pair dataset: shape index out of range");
    }
    if (!pair.x.allFinite() || !pair.y.allFinite() ||
        !std::isfinite(pair.target) || pair.target < 0.0) {
      fail_invalid("pair dataset: non-finite pair or negative target");
    }
    if (!(pair.align_err_x >= 0.0) || !(pair.align_err_y >= 0.0)) {
      fail_invalid("pair dataset: alignment errors must be non-negative");
    }
  }
}

PairDataset regression_pairs(const Eigen::MatrixXd& descriptors,
                             const std::vector<GeodesicSample>& samples) {
  PairDataset data;
  data.descriptors = descriptors;
  data.pairs.reserve(samples.size());
  for (const GeodesicSample& s : samples) {
    TrainPair pair;
    pair.shape_x = s.shape_id;
    pair.shape_y = s.shape_id;
    pair.x = s.src;
    pair.y = s.dst;
    pair.target = s.distance;
    data.pairs.push_back(pair);
  }
  validate_pair_dataset(data);
  return data;
}

PairDataset matcher_pairs(const Eigen::MatrixXd& descriptors,
                          const std::vector<GeodesicSample>& samples,
                          std::size_t num_shape_pairs, std::uint64_t seed,
                          const std::vector<double>* align_errors) {
  if (samples.empty()) fail_invalid("matcher pairs: no samples");
  const std::size_t shapes = static_cast<std::size_t>(descriptors.cols());
  if (shapes < 2) fail_invalid("matcher pairs: need at least two shapes");
  if (samples.size() % shapes != 0)
    fail_invalid("matcher pairs: sample count not divisible by shape count");
  const std::size_t per_shape = samples.size() / shapes;
  for (std::size_t m = 0; m < shapes; ++m)
    for (std::size_t t = 0; t < per_shape; ++t)
      if (samples[m * per_shape + t].shape_id != m)
        fail_invalid("matcher pairs: samples not grouped by shape in order");
  if (align_errors && align_errors->size() != shapes)
    fail_invalid("matcher pairs: need one alignment error per shape");

  const std::size_t total = shapes * (shapes - 1) / 2;
  std::vector<std::uint32_t> chosen;
  if (num_shape_pairs == 0 || num_shape_pairs >= total) {
    chosen.resize(total);
    std::iota(chosen.begin(), chosen.end(), 0u);
  } else {
    chosen = Rng(seed).sample_without_replacement(
        static_cast<std::uint32_t>(total),
        static_cast<std::uint32_t>(num_shape_pairs));
  }

  PairDataset data;
  data.descriptors = descriptors;
  data.pairs.reserve(chosen.size() * per_shape);
  for (std::uint32_t rank : chosen) {
    // Unrank into the unordered pair (a, b), a < b.
    std::size_t a = 0, left = rank;
    while (left >= shapes - 1 - a) {
      left -= shapes - 1 - a;
      ++a;
    }
    const std::size_t b = a + 1 + left;
    for (std::size_t t = 0; t < per_shape; ++t) {
      const GeodesicSample& sa = samples[a * per_shape + t];
      const GeodesicSample& sb = samples[b * per_shape + t];
      TrainPair pair;
      pair.shape_x = static_cast<std::uint32_t>(a);
      pair.shape_y = static_cast<std::uint32_t>(b);
      pair.x = sa.src;
      pair.y = sb.dst;
      pair.target = 0.5 * (sa.distance + sb.distance);
      if (align_errors) {
        pair.align_err_x = (*align_errors)[a];
        pair.align_err_y = (*align_errors)[b];
      }
      data.pairs.push_back(pair);
    }
  }
  validate_pair_dataset(data);
  return data;
}

void symmetrize_pairs(PairDataset& data) {
  const std::size_t n = data.pairs.size();
  data.pairs.reserve(2 * n);
  for (std::size_t i = 0; i < n; ++i) {
    TrainPair swapped = data.pairs[i];
    std::swap(swapped.shape_x, swapped.shape_y);
    std::swap(swapped.x, swapped.y);
    std::swap(swapped.align_err_x, swapped.align_err_y);
    data.pairs.push_back(swapped);
  }
}

TrainedPairNet train_regressor(const PairDataset& data,
                               const TrainConfig& config) {
  return train_pairs_impl(data, config, 1,
                          std::numeric_limits<double>::infinity(), 1);
}

TrainedPairNet train_matcher(const PairDataset& data, const TrainConfig& config,
                             double alignment_filter, std::size_t restarts) {
  return train_pairs_impl(data, config, 2, alignment_filter, restarts);
}

double evaluate_pairs(GeodesicNet& net, const CoordStats& stats,
                      const PairDataset& data, Eigen::Index batch_size) {
  validate_pair_dataset(data);
  if (batch_size < 1) {
    fail_invalid("evaluate: batch size must be >= 1");
  }
  std::vector<std::uint32_t> idx(data.pairs.size());
  std::iota(idx.begin(), idx.end(), 0u);
  return eval_pair_indices(net, stats, data, idx, batch_size);
}

void validate_tnet_dataset(const TNetDataset& data) {
  if (data.clouds.empty() || data.clouds.size() != data.targets.size()) {
    fail_invalid("tnet dataset: clouds and targets must match and be non-empty");
  }
  const Eigen::Index n_pts = data.clouds.front().cols();
  if (n_pts < 1) {
    fail_invalid("tnet dataset: clouds must be non-empty");
  }
  for (const Eigen::MatrixXd& cloud : data.clouds) {
    if (cloud.rows() != 3 || cloud.cols() != n_pts) {
      fail_invalid("tnet dataset: clouds must all be 3 x n with equal n");
    }
    if (!cloud.allFinite()) {
      fail_invalid("tnet dataset: non-finite cloud");
    }
  }
  for (const Mat3& target : data.targets) {
    validate_rotation(target);
  }
}

TNetDataset augment_tnet_clouds(const std::vector<Eigen::MatrixXd>& base_clouds,
                                std::size_t rotations_per_cloud,
                                std::uint64_t seed) {
  if (base_clouds.empty() || rotations_per_cloud < 1) {
    fail_invalid("tnet augmentation: needs clouds and at least one rotation");
  }
  TNetDataset data;
  data.clouds.reserve(base_clouds.size() * rotations_per_cloud);
  data.targets.reserve(base_clouds.size() * rotations_per_cloud);
  const Rng root(seed);
  for (std::size_t i = 0; i < base_clouds.size(); ++i) {
    for (std::size_t j = 0; j < rotations_per_cloud; ++j) {
      Rng rng = root.split(i * rotations_per_cloud + j);
      const Mat3 rot = random_rotation(rng);
      data.clouds.push_back(rot * base_clouds[i]);
      data.targets.push_back(rot.transpose());
    }
  }
  validate_tnet_dataset(data);
  return data;
}

TrainedTNet train_tnet(const TNetDataset& data, const TNetConfig& arch,
                       const TrainConfig& config) {
  validate_train_config(config);
  validate_tnet_dataset(data);
  const std::size_t n = data.clouds.size();
  if (n < 4) {
    fail_invalid("tnet training: needs at least 4 clouds");
  }
  const Eigen::Index n_pts = data.clouds.front().cols();

  Rng split_rng = Rng(config.seed).split(1);
  std::vector<std::uint32_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0u);
  split_rng.shuffle(idx);
  std::size_t n_val = 0;
  if (config.val_fraction > 0.0) {
    n_val = std::max<std::size_t>(
        1, static_cast<std::size_t>(
               static_cast<double>(n) * config.val_fraction));
    n_val = std::min(n_val, n - 2);
  }
  const std::vector<std::uint32_t> val_idx(idx.begin(),
                                           idx.begin() + static_cast<long>(n_val));
  std::vector<std::uint32_t> train_idx(idx.begin() + static_cast<long>(n_val),
                                       idx.end());

  const std::size_t bpe = batches_per_epoch(train_idx.size(), config.batch_size);
  const std::size_t total_steps = config.epochs * bpe;

  TNet net(arch, Rng(config.seed).split(10).seed());
  const Eigen::Index pc = net.param_count();
  Adam opt(pc);
  Rng order_rng = Rng(config.seed).split(20);

  TrainHistory history;
  Checkpoint best;
  std::size_t since_best = 0;
  std::size_t step = 0;
  Eigen::MatrixXd pts;
  Eigen::VectorXd params, grads;
  const std::size_t batch = static_cast<std::size_t>(config.batch_size);
  for (std::size_t e = 0; e < config.epochs; ++e) {
    order_rng.shuffle(train_idx);
    double loss_sum = 0.0;
    std::size_t seen = 0;
    for (std::size_t pos = 0; pos < train_idx.size(); pos += batch) {
      const std::size_t count = std::min(batch, train_idx.size() - pos);
      if (count < 2) {
        break;
      }
      const Eigen::Index bc = static_cast<Eigen::Index>(count);
      pts.resize(3, bc * n_pts);
      for (Eigen::Index i = 0; i < bc; ++i) {
        pts.middleCols(i * n_pts, n_pts) =
            data.clouds[train_idx[pos + static_cast<std::size_t>(i)]];
      }
      const Eigen::MatrixXd out =
          net.forward_features(pts, bc, RunMode::train);
      Eigen::MatrixXd d_out = Eigen::MatrixXd::Zero(6, bc);
      for (Eigen::Index c = 0; c < bc; ++c) {
        const std::uint32_t ci = train_idx[pos + static_cast<std::size_t>(c)];
        double loss = 0.0;
        Vec3 da = Vec3::Zero(), db = Vec3::Zero();
        align_loss(out.col(c).head<3>(), out.col(c).tail<3>(), data.clouds[ci],
                   data.targets[ci], loss, &da, &db);
        d_out.col(c).head<3>() = da / static_cast<double>(count);
        d_out.col(c).tail<3>() = db / static_cast<double>(count);
        loss_sum += loss;
      }
      net.zero_grads();
      net.backward_features(d_out);
      net.copy_params(params);
      net.copy_grads(grads);
      opt.step(params, grads,
               cosine_lr(step, total_steps, config.lr_start, config.lr_end));
      net.load_params(params);
      ++step;
      seen += count;
    }
    const double tl = loss_sum / static_cast<double>(seen);
    const double vl = n_val > 0 ? eval_tnet_indices(net, data, val_idx) : tl;
    history.train_loss.push_back(tl);
    history.val_loss.push_back(vl);
    if (vl < history.best_val) {
      history.best_val = vl;
      history.best_epoch = e;
      best = snapshot(net);
      since_best = 0;
    } else if (++since_best >= config.patience) {
      break;
    }
  }
  if (best.params.size() == 0) {
    fail_runtime("tnet training: no epoch produced a finite validation loss");
  }
  restore(net, best);
  return TrainedTNet{std::move(net), std::move(history)};
}

double evaluate_tnet(TNet& net, const TNetDataset& data) {
  validate_tnet_dataset(data);
  std::vector<std::uint32_t> idx(data.clouds.size());
  std::iota(idx.begin(), idx.end(), 0u);
  return eval_tnet_indices(net, data, idx);
}

}  // namespace litege

#include "geomort/autoenc.hpp"

#include "geomort/rng.hpp"

#include <cmath>
#include <limits>

namespace geomort {

namespace {

void fill_uniform(Mat& w, double bound, SplitMix64& rng) {
  for (int r = 0; r < w.rows(); ++r) {
    for (int c = 0; c < w.cols(); ++c) w(r, c) = rng.next_in(-bound, bound);
  }
}

Vec relu(const Vec& v) { return v.cwiseMax(0.0); }

// sign with sign(0) = 0, matching the L1 subgradient convention.
double sgn(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

void check_dims(const NetParams& p, const Mat& x) {
  if (x.cols() != p.w_conv.size() || x.rows() != p.n_regions() ||
      p.w_e2.cols() != p.d1() || p.w_d3.rows() != p.d1() || p.w_d3.cols() != p.d2() ||
      p.w_d4.cols() != p.d1() || p.w_d4.rows() != p.n_regions() ||
      p.b_e1.size() != p.d1() || p.b_e2.size() != p.d2() || p.b_d3.size() != p.d1() ||
      p.b_d4.size() != p.n_regions()) {
    fail(Errc::dimension_mismatch, "network dimensions and input shape disagree");
  }
}

}  // namespace

NetParams init_params(int n_regions, int n_features, int d1, int d2, std::uint64_t seed) {
  if (n_regions < 1 || n_features < 1 || d1 < 1 || d2 < 1) {
    fail(Errc::bad_config, "network dimensions must be positive");
  }
  SplitMix64 rng(seed);
  NetParams p;
  p.w_conv = Vec(n_features);
  double bound = 1.0 / std::sqrt(static_cast<double>(n_features));
  for (int j = 0; j < n_features; ++j) p.w_conv[j] = rng.next_in(-bound, bound);
  p.b_conv = 0.0;
  p.w_e1 = Mat(d1, n_regions);
  fill_uniform(p.w_e1, 1.0 / std::sqrt(static_cast<double>(n_regions)), rng);
  p.b_e1 = Vec::Zero(d1);
  p.w_e2 = Mat(d2, d1);
  fill_uniform(p.w_e2, 1.0 / std::sqrt(static_cast<double>(d1)), rng);
  p.b_e2 = Vec::Zero(d2);
  p.w_d3 = Mat(d1, d2);
  fill_uniform(p.w_d3, 1.0 / std::sqrt(static_cast<double>(d2)), rng);
  p.b_d3 = Vec::Zero(d1);
  p.w_d4 = Mat(n_regions, d1);
  fill_uniform(p.w_d4, 1.0 / std::sqrt(static_cast<double>(d1)), rng);
  p.b_d4 = Vec::Zero(n_regions);
  return p;
}

Vec forward(const NetParams& params, const Mat& x, ForwardCache* cache) {
  check_dims(params, x);
  Vec z = x * params.w_conv;
  z.array() += params.b_conv;
  Vec a1_pre = params.w_e1 * z + params.b_e1;
  Vec a1 = relu(a1_pre);
  Vec a2 = params.w_e2 * a1 + params.b_e2;
  Vec a3_pre = params.w_d3 * a2 + params.b_d3;
  Vec a3 = relu(a3_pre);
  Vec yhat = params.w_d4 * a3 + params.b_d4;
  if (cache) {
    cache->z = std::move(z);
    cache->a1_pre = std::move(a1_pre);
    cache->a1 = std::move(a1);
    cache->a2 = std::move(a2);
    cache->a3_pre = std::move(a3_pre);
    cache->a3 = std::move(a3);
    cache->yhat = yhat;
  }
  return yhat;
}

double l1_loss(const Vec& yhat, const Vec& y) {
  if (yhat.size() != y.size()) {
    fail(Errc::dimension_mismatch, "loss arguments differ in length");
  }
  double s = 0.0;
  for (int i = 0; i < y.size(); ++i) s += std::abs(yhat[i] - y[i]);
  return s / static_cast<double>(y.size());
}

Gradients backward(const NetParams& params, const ForwardCache& cache, const Mat& x,
                   const Vec& y) {
  check_dims(params, x);
  const int n = params.n_regions();
  if (cache.z.size() != n || cache.a1_pre.size() != params.d1() ||
      cache.a2.size() != params.d2() || cache.yhat.size() != n || y.size() != n) {
    fail(Errc::stale_cache, "forward cache does not match these parameters and input");
  }
  Gradients g;
  Vec d_yhat(n);
  for (int i = 0; i < n; ++i) d_yhat[i] = sgn(cache.yhat[i] - y[i]) / n;

  g.w_d4 = d_yhat * cache.a3.transpose();
  g.b_d4 = d_yhat;
  Vec d_a3 = params.w_d4.transpose() * d_yhat;
  Vec d_a3_pre = (cache.a3_pre.array() > 0.0).select(d_a3, 0.0);

  g.w_d3 = d_a3_pre * cache.a2.transpose();
  g.b_d3 = d_a3_pre;
  Vec d_a2 = params.w_d3.transpose() * d_a3_pre;

  g.w_e2 = d_a2 * cache.a1.transpose();
  g.b_e2 = d_a2;
  Vec d_a1 = params.w_e2.transpose() * d_a2;
  Vec d_a1_pre = (cache.a1_pre.array() > 0.0).select(d_a1, 0.0);

  g.w_e1 = d_a1_pre * cache.z.transpose();
  g.b_e1 = d_a1_pre;
  Vec d_z = params.w_e1.transpose() * d_a1_pre;

  g.w_conv = x.transpose() * d_z;
  g.b_conv = d_z.sum();
  return g;
}

double cyclical_lr(const TrainConfig& config, int epoch) {
  int cycle = std::max(config.lr_cycle, 1);
  int phase = (epoch - 1) % cycle;
  double half = cycle / 2.0;
  double tri = phase <= half ? phase / half : (cycle - phase) / half;
  return config.lr_base + (config.lr_peak - config.lr_base) * tri;
}

namespace {

void sgd_step(NetParams& p, const Gradients& g, double lr) {
  p.w_conv -= lr * g.w_conv;
  p.b_conv -= lr * g.b_conv;
  p.w_e1 -= lr * g.w_e1;
  p.b_e1 -= lr * g.b_e1;
  p.w_e2 -= lr * g.w_e2;
  p.b_e2 -= lr * g.b_e2;
  p.w_d3 -= lr * g.w_d3;
  p.b_d3 -= lr * g.b_d3;
  p.w_d4 -= lr * g.w_d4;
  p.b_d4 -= lr * g.b_d4;
}

}  // namespace

TrainResult train(const std::vector<std::pair<Mat, Vec>>& pairs, int val_index,
                  const TrainConfig& config, const NetParams* init) {
  if (val_index < 0 || val_index >= static_cast<int>(pairs.size())) {
    fail(Errc::bad_config, "validation pair index out of range");
  }
  if (pairs.size() < 2) fail(Errc::empty_training_set, "no training pairs besides validation");
  if (config.patience >= config.max_epochs) {
    fail(Errc::bad_config, "patience must be smaller than max_epochs");
  }
  const int n = static_cast<int>(pairs.front().first.rows());

  NetParams params = init ? *init
                          : init_params(n, static_cast<int>(pairs.front().first.cols()),
                                        config.d1, config.d2, config.seed);
  TrainResult result;
  result.best_val = std::numeric_limits<double>::infinity();
  NetParams best = params;
  int stale_epochs = 0;

  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    double lr = cyclical_lr(config, epoch);
    for (std::size_t t = 0; t < pairs.size(); ++t) {
      if (static_cast<int>(t) == val_index) continue;
      ForwardCache cache;
      forward(params, pairs[t].first, &cache);
      Gradients g = backward(params, cache, pairs[t].first, pairs[t].second);
      sgd_step(params, g, lr);
    }
    double train_sum = 0.0;
    int train_cnt = 0;
    for (std::size_t t = 0; t < pairs.size(); ++t) {
      if (static_cast<int>(t) == val_index) continue;
      train_sum += l1_loss(forward(params, pairs[t].first), pairs[t].second);
      ++train_cnt;
    }
    double val = l1_loss(forward(params, pairs[val_index].first), pairs[val_index].second);

    bool improved = val < result.best_val;
    if (improved) {
      result.best_val = val;
      result.best_epoch = epoch;
      best = params;
      stale_epochs = 0;
    } else {
      ++stale_epochs;
    }
    result.log.push_back({epoch, train_sum / train_cnt, val, lr, improved});
    if (stale_epochs >= config.patience) break;
  }
  result.params = std::move(best);
  return result;
}

ConvCache conv_cache(const NetParams& params, const Mat& x) {
  check_dims(params, x);
  ConvCache c;
  c.z = x * params.w_conv;
  c.z.array() += params.b_conv;
  c.c1 = params.w_e1 * c.z + params.b_e1;
  return c;
}

double output_with_replaced_row(const NetParams& params, const ConvCache& cache, int i,
                                const Eigen::Ref<const Eigen::RowVectorXd>& row) {
  double z_new = row.dot(params.w_conv) + params.b_conv;
  Vec a1 = relu(cache.c1 + (z_new - cache.z[i]) * params.w_e1.col(i));
  Vec a2 = params.w_e2 * a1 + params.b_e2;
  Vec a3 = relu(params.w_d3 * a2 + params.b_d3);
  return params.w_d4.row(i).dot(a3) + params.b_d4[i];
}

AttributionResult expected_gradients(const NetParams& params, const Mat& x,
                                     const std::vector<Mat>& baselines, int n_samples,
                                     std::uint64_t seed) {
  check_dims(params, x);
  if (baselines.empty()) fail(Errc::empty_baseline, "expected gradients needs baselines");
  if (n_samples < 1) fail(Errc::bad_config, "n_samples must be >= 1");
  for (const Mat& b : baselines) {
    if (b.rows() != x.rows() || b.cols() != x.cols()) {
      fail(Errc::dimension_mismatch, "baseline shape differs from input shape");
    }
  }
  const int n = params.n_regions();
  const int nf = static_cast<int>(params.w_conv.size());
  ConvCache cache = conv_cache(params, x);
  SplitMix64 rng(seed);

  AttributionResult result;
  result.shap = Mat::Zero(n, nf);
  Vec a1_pre(params.d1());
  for (int i = 0; i < n; ++i) {
    for (int s = 0; s < n_samples; ++s) {
      const Mat& b = baselines[s % baselines.size()];
      double alpha = rng.next_unit();
      // Row i moved to b_i + alpha (x_i - b_i) shifts only z_i; everything
      // else reuses the cached encoder input.
      double z_path = 0.0;
      for (int j = 0; j < nf; ++j) {
        z_path += (b(i, j) + alpha * (x(i, j) - b(i, j))) * params.w_conv[j];
      }
      z_path += params.b_conv;
      a1_pre = cache.c1 + (z_path - cache.z[i]) * params.w_e1.col(i);

      // d yhat_i / d z_i at the path point, by the chain rule through the
      // two ReLU masks.
      Vec a2 = params.w_e2 * relu(a1_pre) + params.b_e2;
      Vec a3_pre = params.w_d3 * a2 + params.b_d3;
      Vec g3 = (a3_pre.array() > 0.0).select(params.w_d4.row(i).transpose(), 0.0);
      Vec g2 = params.w_d3.transpose() * g3;
      Vec g1 = (a1_pre.array() > 0.0).select(params.w_e2.transpose() * g2, 0.0);
      double dydz = params.w_e1.col(i).dot(g1);

      for (int j = 0; j < nf; ++j) {
        result.shap(i, j) += (x(i, j) - b(i, j)) * params.w_conv[j] * dydz;
      }
    }
  }
  result.shap /= static_cast<double>(n_samples);
  result.mean_abs = Vec(nf);
  for (int j = 0; j < nf; ++j) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += std::abs(result.shap(i, j));
    result.mean_abs[j] = s / n;
  }
  return result;
}

}  // namespace geomort

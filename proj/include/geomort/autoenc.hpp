#pragma once

#include "geomort/common.hpp"

#include <cstdint>
#include <vector>

namespace geomort {

// Five-layer network: per-region conv (13-feature dot product to one scalar
// per region), affine+ReLU encoder, affine bottleneck, affine+ReLU decoder,
// affine output back to one value per region.
struct NetParams {
  Vec w_conv;  // 13
  double b_conv = 0.0;
  Mat w_e1;  // d1 x n
  Vec b_e1;
  Mat w_e2;  // d2 x d1
  Vec b_e2;
  Mat w_d3;  // d1 x d2
  Vec b_d3;
  Mat w_d4;  // n x d1
  Vec b_d4;

  int n_regions() const { return static_cast<int>(w_e1.cols()); }
  int d1() const { return static_cast<int>(w_e1.rows()); }
  int d2() const { return static_cast<int>(w_e2.rows()); }
};

// Fan-in-scaled uniform weights (U(-1/sqrt(fan_in), 1/sqrt(fan_in)), filled
// row-major from a single seeded stream), zero biases.
NetParams init_params(int n_regions, int n_features, int d1, int d2, std::uint64_t seed);

struct ForwardCache {
  Vec z;       // conv output, n
  Vec a1_pre;  // encoder pre-activation, d1
  Vec a1;
  Vec a2;      // bottleneck, d2
  Vec a3_pre;  // decoder pre-activation, d1
  Vec a3;
  Vec yhat;    // n
};

// X is n x 13, already rescaled to [0,1]. Fills the cache when given.
Vec forward(const NetParams& params, const Mat& x, ForwardCache* cache = nullptr);

double l1_loss(const Vec& yhat, const Vec& y);

struct Gradients {
  Vec w_conv;
  double b_conv = 0.0;
  Mat w_e1;
  Vec b_e1;
  Mat w_e2;
  Vec b_e2;
  Mat w_d3;
  Vec b_d3;
  Mat w_d4;
  Vec b_d4;
};

// Exact reverse-mode gradients of l1_loss(forward(params, x), y). The
// subgradient of |r| at r = 0 is taken as 0, and ReLU' at 0 is 0.
Gradients backward(const NetParams& params, const ForwardCache& cache, const Mat& x,
                   const Vec& y);

struct TrainConfig {
  int d1 = 1024;
  int d2 = 128;
  int max_epochs = 100;
  int patience = 10;
  double lr_base = 1e-4;
  double lr_peak = 1e-2;
  int lr_cycle = 10;  // epochs per triangular cycle
  std::uint64_t seed = 1;
};

// Triangular wave between lr_base and lr_peak; epoch is 1-based.
double cyclical_lr(const TrainConfig& config, int epoch);

struct TrainLogRow {
  int epoch = 0;
  double train_l1 = 0.0;
  double val_l1 = 0.0;
  double lr = 0.0;
  bool best_so_far = false;
};

struct TrainResult {
  NetParams params;  // parameters from the best-validation epoch
  std::vector<TrainLogRow> log;
  int best_epoch = 0;
  double best_val = 0.0;
};

// One SGD step per training pair per epoch, pairs visited in the given
// (chronological) order with the pair at val_index held out for validation.
// Stops after `patience` consecutive epochs without a strictly better
// validation loss and restores the best parameters. An explicit initial
// parameter set overrides the seeded initialization when provided.
TrainResult train(const std::vector<std::pair<Mat, Vec>>& pairs, int val_index,
                  const TrainConfig& config, const NetParams* init = nullptr);

// Reusable pieces of the forward pass that a single-row input change cannot
// invalidate: z = X w + b and the encoder input c1 = W_E1 z + b_E1.
struct ConvCache {
  Vec z;
  Vec c1;
};
ConvCache conv_cache(const NetParams& params, const Mat& x);

// Output channel i when row i of the cached input is replaced; O(d1*d2)
// via a rank-one update of the cached encoder input.
double output_with_replaced_row(const NetParams& params, const ConvCache& cache, int i,
                                const Eigen::Ref<const Eigen::RowVectorXd>& row);

struct AttributionResult {
  Mat shap;      // n x 13, signed
  Vec mean_abs;  // per-feature mean |shap| across regions
};

// Expected-gradients attribution of each region's output channel to that
// region's 13 inputs. Baselines cycle round-robin (sample s uses baseline
// s mod B, so sample counts divisible by B average baselines exactly);
// alpha is drawn uniformly per (region, sample) from the seeded stream.
AttributionResult expected_gradients(const NetParams& params, const Mat& x,
                                     const std::vector<Mat>& baselines, int n_samples,
                                     std::uint64_t seed);

}  // namespace geomort

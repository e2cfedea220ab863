#pragma once

#include "geomort/common.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace geomort {

struct SplitSpec {
  int feature = -1;
  double threshold = 0.0;
  double gain = 0.0;
};

// Exhaustive MAE-gain split search. Loss at a node is the mean absolute
// deviation from the node mean; candidate thresholds are midpoints of
// consecutive distinct sorted feature values; gain is
//   L(parent) - (sL/s) L(left) - (sR/s) L(right),
// with the left branch taking x <= threshold. Ties break toward the lower
// feature index, then the lower threshold. Returns nothing when no split
// has positive gain and min_leaf samples on both sides.
//
// Summation order is part of the contract (it pins results bit-for-bit):
// the parent mean and deviation run over samples in their given order;
// child sums run in ascending order of the feature sort, which is stable,
// so equal feature values keep their given relative order.
std::optional<SplitSpec> find_best_split(const Vec& targets, const Mat& features,
                                         int min_leaf);

struct TreeNode {
  int count = 0;
  double value = 0.0;  // mean of targets that reached this node
  int feature = -1;    // -1 marks a leaf
  double threshold = 0.0;
  double gain = 0.0;
  int left = -1, right = -1;

  bool leaf() const { return feature < 0; }
};

struct RegressionTree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  double predict_row(const Eigen::Ref<const Eigen::RowVectorXd>& row) const;
};

// CART-style growth: split while depth remains, both children can hold
// min_leaf samples, and some split has positive gain; leaves predict the
// mean of their targets.
RegressionTree grow_tree(const Vec& targets, const Mat& features, int max_depth,
                         int min_leaf);

struct GbtParams {
  int trees = 100;
  int max_depth = 4;
  int min_leaf = 5;
  double learning_rate = 0.1;
};

struct GbtEnsemble {
  double base = 0.0;  // mean of the training targets
  GbtParams params;
  std::vector<RegressionTree> trees;

  double predict_row(const Eigen::Ref<const Eigen::RowVectorXd>& row) const;
  Vec predict(const Mat& features) const;

  // Total split gain per feature across all trees (unnormalized).
  Vec total_gain(int n_features) const;
};

// Boosting on residuals: each round grows a tree against y - prediction
// and adds learning_rate times its output.
GbtEnsemble boost(const Mat& features, const Vec& targets, const GbtParams& params);

// trees {50,100,200} x depth {3,4,6} x min_leaf {5,20}, trees outermost.
// Grid enumeration order doubles as the tie-break order in selection.
std::vector<GbtParams> default_grid(double learning_rate = 0.1);

struct CvResult {
  Vec oof;                  // one out-of-fold prediction per sample
  std::vector<int> fold_of; // fold index per sample
  GbtParams chosen;
  int chosen_index = -1;    // into the grid
  std::vector<double> grid_val_mae;  // mean validation MAE per grid entry
};

// Seeded shuffle into `folds` contiguous chunks (sizes differ by at most
// one), grid search by mean validation MAE (ties keep the earliest grid
// entry), and out-of-fold predictions under the chosen hyperparameters.
CvResult cv_predict(const Mat& features, const Vec& targets, int folds,
                    const std::vector<GbtParams>& grid, std::uint64_t seed);

struct ImportanceReport {
  std::vector<int> years;
  Mat yearly;              // years x 13, each row sums to 1
  Vec average;             // cross-year mean per feature
  std::vector<int> order;  // feature indices, descending by average
};

// Per-year total gain normalized to sum to one, then averaged across years.
ImportanceReport gain_importance(const std::vector<int>& years,
                                 const std::vector<const GbtEnsemble*>& ensembles,
                                 int n_features);

}  // namespace geomort

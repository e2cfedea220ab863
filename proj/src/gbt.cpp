#include "geomort/gbt.hpp"

#include "geomort/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace geomort {

namespace {

double mean_over(const Vec& y, const std::vector<int>& idx) {
  double s = 0.0;
  for (int i : idx) s += y[i];
  return s / static_cast<double>(idx.size());
}

double mad_over(const Vec& y, const std::vector<int>& idx, double mean) {
  double s = 0.0;
  for (int i : idx) s += std::abs(y[i] - mean);
  return s / static_cast<double>(idx.size());
}

// Split search over a node given as an index subset. All candidate child
// statistics are recomputed from scratch in ascending sorted position so
// results do not depend on incremental-update rounding.
std::optional<SplitSpec> best_split_over(const Mat& x, const Vec& y,
                                         const std::vector<int>& idx, int min_leaf) {
  const int m = static_cast<int>(idx.size());
  if (min_leaf < 1) fail(Errc::bad_config, "min_leaf must be >= 1");
  if (m < 2 * min_leaf) return std::nullopt;

  const double parent_mean = mean_over(y, idx);
  const double parent_loss = mad_over(y, idx, parent_mean);

  std::optional<SplitSpec> best;
  std::vector<int> order(m);
  std::vector<int> child;
  for (int j = 0; j < x.cols(); ++j) {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      return x(idx[a], j) < x(idx[b], j);
    });
    for (int p = 0; p + 1 < m; ++p) {
      double a = x(idx[order[p]], j);
      double b = x(idx[order[p + 1]], j);
      if (a == b) continue;
      int s_left = p + 1;
      int s_right = m - s_left;
      if (s_left < min_leaf || s_right < min_leaf) continue;

      child.clear();
      for (int q = 0; q <= p; ++q) child.push_back(idx[order[q]]);
      double mean_l = mean_over(y, child);
      double loss_l = mad_over(y, child, mean_l);
      child.clear();
      for (int q = p + 1; q < m; ++q) child.push_back(idx[order[q]]);
      double mean_r = mean_over(y, child);
      double loss_r = mad_over(y, child, mean_r);

      double gain = parent_loss - (static_cast<double>(s_left) / m * loss_l +
                                   static_cast<double>(s_right) / m * loss_r);
      if (gain > 0.0 && (!best || gain > best->gain)) {
        best = SplitSpec{j, 0.5 * (a + b), gain};
      }
    }
  }
  return best;
}

}  // namespace

std::optional<SplitSpec> find_best_split(const Vec& targets, const Mat& features,
                                         int min_leaf) {
  if (targets.size() != features.rows()) {
    fail(Errc::dimension_mismatch, "targets and features disagree on sample count");
  }
  std::vector<int> idx(targets.size());
  std::iota(idx.begin(), idx.end(), 0);
  return best_split_over(features, targets, idx, min_leaf);
}

double RegressionTree::predict_row(const Eigen::Ref<const Eigen::RowVectorXd>& row) const {
  int node = 0;
  while (!nodes[node].leaf()) {
    node = row[nodes[node].feature] <= nodes[node].threshold ? nodes[node].left
                                                             : nodes[node].right;
  }
  return nodes[node].value;
}

RegressionTree grow_tree(const Vec& targets, const Mat& features, int max_depth,
                         int min_leaf) {
  if (targets.size() == 0) fail(Errc::empty_data, "cannot grow a tree on no samples");
  if (targets.size() != features.rows()) {
    fail(Errc::dimension_mismatch, "targets and features disagree on sample count");
  }
  RegressionTree tree;

  struct Frame {
    std::vector<int> idx;
    int depth;
    int node;
  };
  std::vector<int> root(targets.size());
  std::iota(root.begin(), root.end(), 0);
  tree.nodes.push_back({});
  std::vector<Frame> stack;
  stack.push_back({std::move(root), 0, 0});

  while (!stack.empty()) {
    Frame frame = std::move(stack.back());
    stack.pop_back();
    TreeNode& node = tree.nodes[frame.node];
    node.count = static_cast<int>(frame.idx.size());
    node.value = mean_over(targets, frame.idx);

    if (frame.depth >= max_depth) continue;
    std::optional<SplitSpec> split = best_split_over(features, targets, frame.idx, min_leaf);
    if (!split) continue;

    std::vector<int> left, right;
    for (int i : frame.idx) {
      (features(i, split->feature) <= split->threshold ? left : right).push_back(i);
    }
    int left_id = static_cast<int>(tree.nodes.size());
    tree.nodes.push_back({});
    int right_id = static_cast<int>(tree.nodes.size());
    tree.nodes.push_back({});
    // nodes may have reallocated; re-take the reference
    TreeNode& parent = tree.nodes[frame.node];
    parent.feature = split->feature;
    parent.threshold = split->threshold;
    parent.gain = split->gain;
    parent.left = left_id;
    parent.right = right_id;
    stack.push_back({std::move(right), frame.depth + 1, right_id});
    stack.push_back({std::move(left), frame.depth + 1, left_id});
  }
  return tree;
}

double GbtEnsemble::predict_row(const Eigen::Ref<const Eigen::RowVectorXd>& row) const {
  double p = base;
  for (const RegressionTree& t : trees) p += params.learning_rate * t.predict_row(row);
  return p;
}

Vec GbtEnsemble::predict(const Mat& features) const {
  Vec out(features.rows());
  for (int i = 0; i < features.rows(); ++i) out[i] = predict_row(features.row(i));
  return out;
}

Vec GbtEnsemble::total_gain(int n_features) const {
  Vec g = Vec::Zero(n_features);
  for (const RegressionTree& t : trees) {
    for (const TreeNode& node : t.nodes) {
      if (!node.leaf()) g[node.feature] += node.gain;
    }
  }
  return g;
}

GbtEnsemble boost(const Mat& features, const Vec& targets, const GbtParams& params) {
  if (targets.size() == 0) fail(Errc::empty_data, "cannot boost on no samples");
  if (!(params.learning_rate > 0.0 && params.learning_rate <= 1.0)) {
    fail(Errc::bad_config, "learning rate must lie in (0,1]");
  }
  GbtEnsemble ens;
  ens.params = params;
  double s = 0.0;
  for (int i = 0; i < targets.size(); ++i) s += targets[i];
  ens.base = s / static_cast<double>(targets.size());

  Vec residual = targets.array() - ens.base;
  ens.trees.reserve(params.trees);
  for (int round = 0; round < params.trees; ++round) {
    RegressionTree tree = grow_tree(residual, features, params.max_depth, params.min_leaf);
    for (int i = 0; i < targets.size(); ++i) {
      residual[i] -= params.learning_rate * tree.predict_row(features.row(i));
    }
    ens.trees.push_back(std::move(tree));
  }
  return ens;
}

std::vector<GbtParams> default_grid(double learning_rate) {
  std::vector<GbtParams> grid;
  for (int trees : {50, 100, 200}) {
    for (int depth : {3, 4, 6}) {
      for (int min_leaf : {5, 20}) {
        grid.push_back({trees, depth, min_leaf, learning_rate});
      }
    }
  }
  return grid;
}

CvResult cv_predict(const Mat& features, const Vec& targets, int folds,
                    const std::vector<GbtParams>& grid, std::uint64_t seed) {
  const int n = static_cast<int>(targets.size());
  if (folds < 2) fail(Errc::bad_config, "cross-validation needs at least 2 folds");
  if (grid.empty()) fail(Errc::bad_config, "empty hyperparameter grid");
  if (n < folds) {
    fail(Errc::insufficient_data, "fewer samples than folds: " + std::to_string(n));
  }

  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  SplitMix64 rng(seed);
  fisher_yates(perm, rng);

  // Contiguous chunks of the shuffled order; the first n % folds chunks
  // take the extra sample.
  CvResult result;
  result.fold_of.assign(n, -1);
  int pos = 0;
  for (int f = 0; f < folds; ++f) {
    int size = n / folds + (f < n % folds ? 1 : 0);
    for (int t = 0; t < size; ++t) result.fold_of[perm[pos++]] = f;
  }

  double best_mae = 0.0;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    Vec oof(n);
    double mae_sum = 0.0;
    for (int f = 0; f < folds; ++f) {
      std::vector<int> train_idx;
      train_idx.reserve(n);
      for (int i = 0; i < n; ++i) {
        if (result.fold_of[i] != f) train_idx.push_back(i);
      }
      Mat xf(train_idx.size(), features.cols());
      Vec yf(train_idx.size());
      for (std::size_t t = 0; t < train_idx.size(); ++t) {
        xf.row(t) = features.row(train_idx[t]);
        yf[t] = targets[train_idx[t]];
      }
      GbtEnsemble model = boost(xf, yf, grid[g]);
      double err = 0.0;
      int cnt = 0;
      for (int i = 0; i < n; ++i) {
        if (result.fold_of[i] != f) continue;
        oof[i] = model.predict_row(features.row(i));
        err += std::abs(oof[i] - targets[i]);
        ++cnt;
      }
      mae_sum += err / cnt;
    }
    double mean_mae = mae_sum / folds;
    result.grid_val_mae.push_back(mean_mae);
    if (result.chosen_index < 0 || mean_mae < best_mae) {
      result.chosen_index = static_cast<int>(g);
      result.chosen = grid[g];
      best_mae = mean_mae;
      result.oof = std::move(oof);
    }
  }
  return result;
}

ImportanceReport gain_importance(const std::vector<int>& years,
                                 const std::vector<const GbtEnsemble*>& ensembles,
                                 int n_features) {
  if (ensembles.empty() || years.size() != ensembles.size()) {
    fail(Errc::bad_config, "importance needs one ensemble per year");
  }
  ImportanceReport report;
  report.years = years;
  report.yearly = Mat(static_cast<Eigen::Index>(years.size()), n_features);
  for (std::size_t r = 0; r < ensembles.size(); ++r) {
    Vec g = ensembles[r]->total_gain(n_features);
    double total = 0.0;
    for (int j = 0; j < n_features; ++j) total += g[j];
    if (total <= 0.0) {
      fail(Errc::no_splits,
           "no split gains recorded for year " + std::to_string(years[r]));
    }
    report.yearly.row(r) = g.transpose() / total;
  }
  report.average = Vec::Zero(n_features);
  for (int j = 0; j < n_features; ++j) {
    double s = 0.0;
    for (std::size_t r = 0; r < ensembles.size(); ++r) s += report.yearly(r, j);
    report.average[j] = s / static_cast<double>(ensembles.size());
  }
  report.order.resize(n_features);
  std::iota(report.order.begin(), report.order.end(), 0);
  std::sort(report.order.begin(), report.order.end(), [&](int a, int b) {
    if (report.average[a] != report.average[b]) return report.average[a] > report.average[b];
    return a < b;
  });
  return report;
}

}  // namespace geomort

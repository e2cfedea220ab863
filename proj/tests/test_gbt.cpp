#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "geomort/gbt.hpp"
#include "helpers.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <vector>

using namespace geomort;

namespace {

Vec vec(std::initializer_list<double> xs) {
  Vec v(static_cast<int>(xs.size()));
  int i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

Mat col(std::initializer_list<double> xs) {
  Mat m(static_cast<int>(xs.size()), 1);
  int i = 0;
  for (double x : xs) m(i++, 0) = x;
  return m;
}

// Exhaustive split search, written as candidate-list-then-select instead of
// a running best, with the same canonical summation order. Must agree with
// the production search bit-for-bit, ties included.
std::optional<SplitSpec> oracle_split(const Vec& y, const Mat& x, int min_leaf) {
  const int n = static_cast<int>(y.size());
  if (n < 2 * min_leaf) return std::nullopt;

  double pm = 0.0;
  for (int i = 0; i < n; ++i) pm += y[i];
  pm /= n;
  double pl = 0.0;
  for (int i = 0; i < n; ++i) pl += std::abs(y[i] - pm);
  pl /= n;

  struct Candidate {
    int feature;
    double threshold;
    double gain;
  };
  std::vector<Candidate> candidates;  // in (feature, threshold) scan order
  for (int j = 0; j < x.cols(); ++j) {
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return x(a, j) < x(b, j); });
    for (int p = 0; p + 1 < n; ++p) {
      if (x(order[p], j) == x(order[p + 1], j)) continue;
      int s_left = p + 1, s_right = n - s_left;
      if (s_left < min_leaf || s_right < min_leaf) continue;
      double ml = 0.0;
      for (int q = 0; q < s_left; ++q) ml += y[order[q]];
      ml /= s_left;
      double ll = 0.0;
      for (int q = 0; q < s_left; ++q) ll += std::abs(y[order[q]] - ml);
      ll /= s_left;
      double mr = 0.0;
      for (int q = s_left; q < n; ++q) mr += y[order[q]];
      mr /= s_right;
      double lr = 0.0;
      for (int q = s_left; q < n; ++q) lr += std::abs(y[order[q]] - mr);
      lr /= s_right;
      double gain = pl - (static_cast<double>(s_left) / n * ll +
                          static_cast<double>(s_right) / n * lr);
      if (gain > 0.0) {
        candidates.push_back({j, 0.5 * (x(order[p], j) + x(order[p + 1], j)), gain});
      }
    }
  }
  if (candidates.empty()) return std::nullopt;
  double best_gain = candidates[0].gain;
  for (const Candidate& c : candidates) best_gain = std::max(best_gain, c.gain);
  for (const Candidate& c : candidates) {
    if (c.gain == best_gain) return SplitSpec{c.feature, c.threshold, c.gain};
  }
  return std::nullopt;
}

// Longhand splitmix64 + Fisher-Yates, mirroring the documented shuffle.
std::vector<int> shuffle_oracle(int n, std::uint64_t seed) {
  std::vector<int> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  std::uint64_t state = seed;
  auto next = [&state] {
    state += 0x9E3779B97F4A7C15ull;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  };
  for (std::size_t i = perm.size(); i-- > 1;) {
    std::size_t j = static_cast<std::size_t>(next() % (i + 1));
    std::swap(perm[i], perm[j]);
  }
  return perm;
}

// Index sets reaching each node, by routing every sample from the root.
void route(const RegressionTree& tree, const Mat& x, int node, std::vector<int> idx,
           std::vector<std::vector<int>>& reached) {
  reached[static_cast<std::size_t>(node)] = idx;
  const TreeNode& t = tree.nodes[static_cast<std::size_t>(node)];
  if (t.leaf()) return;
  std::vector<int> left, right;
  for (int i : idx) {
    (x(i, t.feature) <= t.threshold ? left : right).push_back(i);
  }
  route(tree, x, t.left, std::move(left), reached);
  route(tree, x, t.right, std::move(right), reached);
}

}  // namespace

TEST_CASE("the textbook split comes out exactly") {
  Vec y = vec({0.0, 0.0, 10.0, 10.0});
  Mat x = col({1.0, 2.0, 3.0, 4.0});
  std::optional<SplitSpec> s = find_best_split(y, x, 1);
  REQUIRE(s.has_value());
  CHECK(s->feature == 0);
  CHECK(s->threshold == 2.5);  // midpoint of 2 and 3
  CHECK(s->gain == 5.0);       // parent MAD 5, both children pure

  // min_leaf 2 still admits only the middle cut; min_leaf 3 admits none.
  std::optional<SplitSpec> s2 = find_best_split(y, x, 2);
  REQUIRE(s2.has_value());
  CHECK(s2->threshold == 2.5);
  CHECK(!find_best_split(y, x, 3).has_value());
}

TEST_CASE("splits that cannot help are refused") {
  CHECK(!find_best_split(vec({5.0, 5.0, 5.0, 5.0}), col({1, 2, 3, 4}), 1).has_value());
  CHECK(!find_best_split(vec({1.0, 9.0, 4.0}), col({2, 2, 2}), 1).has_value());
  CHECK_ERRC(find_best_split(vec({1.0, 2.0}), col({1, 2, 3}), 1), Errc::dimension_mismatch);
  CHECK_ERRC(find_best_split(vec({1.0, 2.0, 3.0}), col({1, 2, 3}), 0), Errc::bad_config);
}

TEST_CASE("an identical duplicate feature loses the tie to the lower index") {
  Vec y = vec({0.0, 0.0, 10.0, 10.0});
  Mat x(4, 3);
  x.col(0) = Vec::Constant(4, 1.0);          // useless
  x.col(1) = col({1, 2, 3, 4}).col(0);       // informative
  x.col(2) = x.col(1);                       // bitwise identical twin
  std::optional<SplitSpec> s = find_best_split(y, x, 1);
  REQUIRE(s.has_value());
  CHECK(s->feature == 1);
}

TEST_CASE("a monotone transform of a feature moves the threshold, not the split") {
  Vec y = vec({3.0, 1.0, 9.0, 4.0, 8.0, 2.0});
  Mat x(6, 2);
  x.col(0) = col({0.5, 1.5, 2.5, 3.5, 4.5, 5.5}).col(0);
  x.col(1) = col({2, 2, 1, 1, 3, 3}).col(0);
  std::optional<SplitSpec> before = find_best_split(y, x, 1);
  REQUIRE(before.has_value());

  Mat warped = x;
  for (int i = 0; i < 6; ++i) {
    double v = x(i, before->feature);
    warped(i, before->feature) = v * v * v + 2.0;  // strictly increasing on x >= 0
  }
  std::optional<SplitSpec> after = find_best_split(y, warped, 1);
  REQUIRE(after.has_value());
  CHECK(after->feature == before->feature);
  CHECK(after->gain == before->gain);
  // Both thresholds cut the sample identically.
  for (int i = 0; i < 6; ++i) {
    CHECK((x(i, before->feature) <= before->threshold) ==
          (warped(i, after->feature) <= after->threshold));
  }
}

TEST_CASE("duplicating every sample leaves the chosen split alone") {
  Vec y = vec({0.0, 1.0, 7.0, 9.0, 2.0});
  Mat x = col({2, 4, 6, 8, 10});
  std::optional<SplitSpec> one = find_best_split(y, x, 1);
  REQUIRE(one.has_value());

  Vec y2(10);
  Mat x2(10, 1);
  y2 << y, y;
  x2 << x, x;
  std::optional<SplitSpec> two = find_best_split(y2, x2, 1);
  REQUIRE(two.has_value());
  CHECK(two->feature == one->feature);
  CHECK(two->threshold == one->threshold);
  CHECK(two->gain == doctest::Approx(one->gain).epsilon(1e-12));
}

TEST_CASE("random split searches agree with the oracle bitwise") {
  std::mt19937 rng(991177);
  std::uniform_int_distribution<int> n_dist(4, 80);
  std::uniform_int_distribution<int> f_dist(1, 5);
  std::uniform_int_distribution<int> xv(0, 4);   // coarse grid forces ties
  std::uniform_int_distribution<int> yv(0, 9);
  const int leaves[] = {1, 2, 5};

  for (int rep = 0; rep < 60; ++rep) {
    const int n = n_dist(rng), f = f_dist(rng);
    Vec y(n);
    Mat x(n, f);
    for (int i = 0; i < n; ++i) {
      y[i] = yv(rng);
      for (int j = 0; j < f; ++j) x(i, j) = xv(rng);
    }
    int min_leaf = leaves[rep % 3];
    std::optional<SplitSpec> got = find_best_split(y, x, min_leaf);
    std::optional<SplitSpec> want = oracle_split(y, x, min_leaf);
    CAPTURE(rep);
    REQUIRE(got.has_value() == want.has_value());
    if (got) {
      CHECK(got->feature == want->feature);
      CHECK(got->threshold == want->threshold);
      CHECK(got->gain == want->gain);
    }
  }
}

TEST_CASE("trees route, store gains, and stop exactly as specified") {
  std::mt19937 rng(5512);
  std::uniform_int_distribution<int> xv(0, 6);
  const int n = 50;
  Vec y(n);
  Mat x(n, 3);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < 3; ++j) x(i, j) = xv(rng);
    y[i] = 3.0 * x(i, 0) - 2.0 * x(i, 2) + (i % 5);
  }

  RegressionTree tree = grow_tree(y, x, 3, 4);
  REQUIRE(!tree.nodes.empty());

  std::vector<std::vector<int>> reached(tree.nodes.size());
  std::vector<int> all(n);
  std::iota(all.begin(), all.end(), 0);
  route(tree, x, 0, all, reached);

  for (std::size_t k = 0; k < tree.nodes.size(); ++k) {
    const TreeNode& node = tree.nodes[k];
    const std::vector<int>& idx = reached[k];
    REQUIRE(node.count == static_cast<int>(idx.size()));

    // Stored value is the mean of the routed targets, summed in order.
    double s = 0.0;
    for (int i : idx) s += y[i];
    CHECK(node.value == s / static_cast<double>(idx.size()));

    if (node.leaf()) continue;
    // Stored split equals a fresh search over exactly the routed subset.
    Vec ys(static_cast<int>(idx.size()));
    Mat xs(static_cast<int>(idx.size()), 3);
    for (std::size_t t = 0; t < idx.size(); ++t) {
      ys[static_cast<int>(t)] = y[idx[t]];
      xs.row(static_cast<int>(t)) = x.row(idx[t]);
    }
    std::optional<SplitSpec> split = find_best_split(ys, xs, 4);
    REQUIRE(split.has_value());
    CHECK(node.feature == split->feature);
    CHECK(node.threshold == split->threshold);
    CHECK(node.gain == split->gain);
    // Children hold at least min_leaf samples each.
    CHECK(static_cast<int>(reached[static_cast<std::size_t>(node.left)].size()) >= 4);
    CHECK(static_cast<int>(reached[static_cast<std::size_t>(node.right)].size()) >= 4);
  }

  // Depth cap: no path may exceed max_depth splits.
  struct Walk {
    const RegressionTree& t;
    int deepest = 0;
    void go(int node, int depth) {
      deepest = std::max(deepest, depth);
      if (t.nodes[static_cast<std::size_t>(node)].leaf()) return;
      go(t.nodes[static_cast<std::size_t>(node)].left, depth + 1);
      go(t.nodes[static_cast<std::size_t>(node)].right, depth + 1);
    }
  } walk{tree};
  walk.go(0, 0);
  CHECK(walk.deepest <= 3);

  RegressionTree stump = grow_tree(y, x, 0, 1);
  REQUIRE(stump.nodes.size() == 1);
  CHECK(stump.nodes[0].leaf());
  CHECK(stump.nodes[0].value == y.mean());
}

TEST_CASE("rows exactly at a threshold go left") {
  RegressionTree tree = grow_tree(vec({0.0, 10.0}), col({1.0, 3.0}), 1, 1);
  REQUIRE(tree.nodes.size() == 3);
  CHECK(tree.nodes[0].threshold == 2.0);
  Eigen::RowVectorXd at_threshold(1);
  at_threshold << 2.0;
  CHECK(tree.predict_row(at_threshold) == 0.0);
}

TEST_CASE("boosting composes base, rate, and trees exactly") {
  Vec y = vec({1.0, 5.0, 2.0, 8.0});
  Mat x = col({1, 2, 3, 4});
  GbtParams params{3, 3, 1, 1.0};
  GbtEnsemble ens = boost(x, y, params);

  CHECK(ens.base == 4.0);  // plain mean
  REQUIRE(static_cast<int>(ens.trees.size()) == 3);

  // Unit learning rate and isolating leaves: round one fits the residuals
  // exactly (all values are small integers), later rounds add nothing.
  Vec pred = ens.predict(x);
  for (int i = 0; i < 4; ++i) CHECK(pred[i] == y[i]);
  CHECK(ens.trees[1].nodes.size() == 1);
  CHECK(ens.trees[1].nodes[0].value == 0.0);

  // predict is the documented sum, reconstructed by hand.
  for (int i = 0; i < 4; ++i) {
    double p = ens.base;
    for (const RegressionTree& t : ens.trees) {
      p += params.learning_rate * t.predict_row(x.row(i));
    }
    CHECK(ens.predict_row(x.row(i)) == p);
  }
}

TEST_CASE("boosting validates its inputs") {
  Vec y = vec({1.0, 2.0, 3.0});
  Mat x = col({1, 2, 3});
  CHECK_ERRC(boost(x, y, GbtParams{5, 2, 1, 0.0}), Errc::bad_config);
  CHECK_ERRC(boost(x, y, GbtParams{5, 2, 1, -0.5}), Errc::bad_config);
  CHECK_ERRC(boost(x, y, GbtParams{5, 2, 1, 1.5}), Errc::bad_config);
  CHECK_NOTHROW(boost(x, y, GbtParams{2, 2, 1, 1.0}));

  CHECK_ERRC(boost(Mat(0, 1), Vec(0), GbtParams{}), Errc::empty_data);
  CHECK_ERRC(grow_tree(Vec(0), Mat(0, 1), 2, 1), Errc::empty_data);
  CHECK_ERRC(grow_tree(vec({1.0, 2.0}), col({1, 2, 3}), 2, 1), Errc::dimension_mismatch);
}

TEST_CASE("hyperparameter defaults and grid are frozen") {
  GbtParams d;
  CHECK(d.trees == 100);
  CHECK(d.max_depth == 4);
  CHECK(d.min_leaf == 5);
  CHECK(d.learning_rate == 0.1);

  std::vector<GbtParams> grid = default_grid(0.05);
  REQUIRE(grid.size() == 18);
  int k = 0;
  for (int trees : {50, 100, 200}) {
    for (int depth : {3, 4, 6}) {
      for (int min_leaf : {5, 20}) {
        CHECK(grid[k].trees == trees);
        CHECK(grid[k].max_depth == depth);
        CHECK(grid[k].min_leaf == min_leaf);
        CHECK(grid[k].learning_rate == 0.05);
        ++k;
      }
    }
  }
}

TEST_CASE("cross-validation partitions, selects, and predicts reproducibly") {
  const int n = 23;
  std::mt19937 mt(77);
  std::uniform_int_distribution<int> xv(0, 8);
  Vec y(n);
  Mat x(n, 2);
  for (int i = 0; i < n; ++i) {
    x(i, 0) = xv(mt);
    x(i, 1) = xv(mt);
    y[i] = 2.0 * x(i, 0) + (i % 3);
  }
  const std::vector<GbtParams> grid = {{8, 2, 2, 0.5}, {16, 3, 2, 0.5}};
  const std::uint64_t seed = 314159;
  const int folds = 5;

  CvResult cv = cv_predict(x, y, folds, grid, seed);

  // Fold assignment equals the longhand shuffle chunked contiguously,
  // first n % folds chunks one larger.
  std::vector<int> perm = shuffle_oracle(n, seed);
  std::vector<int> want_fold(n, -1);
  int pos = 0;
  for (int f = 0; f < folds; ++f) {
    int size = n / folds + (f < n % folds ? 1 : 0);
    for (int t = 0; t < size; ++t) want_fold[static_cast<std::size_t>(perm[pos++])] = f;
  }
  CHECK(cv.fold_of == want_fold);
  std::vector<int> sizes(folds, 0);
  for (int f : cv.fold_of) {
    REQUIRE(f >= 0);
    REQUIRE(f < folds);
    ++sizes[static_cast<std::size_t>(f)];
  }
  CHECK(sizes == std::vector<int>{5, 5, 5, 4, 4});

  // Selection: strictly smaller mean validation MAE, recomputed by refit.
  REQUIRE(cv.grid_val_mae.size() == grid.size());
  for (std::size_t g = 0; g < grid.size(); ++g) {
    double mae_sum = 0.0;
    Vec oof(n);
    for (int f = 0; f < folds; ++f) {
      std::vector<int> train_idx;
      for (int i = 0; i < n; ++i) {
        if (cv.fold_of[i] != f) train_idx.push_back(i);
      }
      Mat xf(static_cast<int>(train_idx.size()), 2);
      Vec yf(static_cast<int>(train_idx.size()));
      for (std::size_t t = 0; t < train_idx.size(); ++t) {
        xf.row(static_cast<int>(t)) = x.row(train_idx[t]);
        yf[static_cast<int>(t)] = y[train_idx[t]];
      }
      GbtEnsemble model = boost(xf, yf, grid[g]);
      double err = 0.0;
      int cnt = 0;
      for (int i = 0; i < n; ++i) {
        if (cv.fold_of[i] != f) continue;
        oof[i] = model.predict_row(x.row(i));
        err += std::abs(oof[i] - y[i]);
        ++cnt;
      }
      mae_sum += err / cnt;
    }
    CHECK(cv.grid_val_mae[g] == mae_sum / folds);
    if (static_cast<int>(g) == cv.chosen_index) {
      for (int i = 0; i < n; ++i) CHECK(cv.oof[i] == oof[i]);
    }
  }
  int want_chosen = 0;
  for (std::size_t g = 1; g < grid.size(); ++g) {
    if (cv.grid_val_mae[g] < cv.grid_val_mae[static_cast<std::size_t>(want_chosen)]) {
      want_chosen = static_cast<int>(g);
    }
  }
  CHECK(cv.chosen_index == want_chosen);
  CHECK(cv.chosen.trees == grid[static_cast<std::size_t>(want_chosen)].trees);

  // Re-running is bitwise identical.
  CvResult again = cv_predict(x, y, folds, grid, seed);
  CHECK(again.fold_of == cv.fold_of);
  CHECK(again.chosen_index == cv.chosen_index);
  for (int i = 0; i < n; ++i) CHECK(again.oof[i] == cv.oof[i]);

  // A duplicated grid entry ties and the earlier one wins.
  CvResult dup = cv_predict(x, y, folds, {grid[0], grid[0]}, seed);
  CHECK(dup.grid_val_mae[0] == dup.grid_val_mae[1]);
  CHECK(dup.chosen_index == 0);
}

TEST_CASE("cross-validation validates its inputs") {
  Vec y = vec({1.0, 2.0, 3.0, 4.0});
  Mat x = col({1, 2, 3, 4});
  std::vector<GbtParams> grid = {{2, 2, 1, 0.5}};
  CHECK_ERRC(cv_predict(x, y, 1, grid, 1), Errc::bad_config);
  CHECK_ERRC(cv_predict(x, y, 2, {}, 1), Errc::bad_config);
  CHECK_ERRC(cv_predict(x, y, 5, grid, 1), Errc::insufficient_data);
}

TEST_CASE("gain importance finds the only signal and normalizes per year") {
  std::mt19937 mt(2024);
  std::uniform_int_distribution<int> xv(0, 9);
  const int n = 60;
  Vec y(n);
  Mat x(n, 4);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < 4; ++j) x(i, j) = xv(mt);
    y[i] = 3.0 * x(i, 2);
  }
  GbtEnsemble a = boost(x, y, {20, 3, 2, 0.3});
  GbtEnsemble b = boost(x, (2.0 * y.array()).matrix(), {10, 2, 2, 0.3});

  ImportanceReport rep = gain_importance({2014, 2015}, {&a, &b}, 4);
  CHECK(rep.years == std::vector<int>{2014, 2015});
  REQUIRE(rep.yearly.rows() == 2);
  for (int r = 0; r < 2; ++r) {
    CHECK(rep.yearly.row(r).sum() == doctest::Approx(1.0).epsilon(1e-12));
    for (int j = 0; j < 4; ++j) CHECK(rep.yearly(r, j) >= 0.0);
  }
  CHECK(rep.average[2] > 0.9);
  CHECK(rep.order[0] == 2);
  for (int j = 0; j < 4; ++j) {
    CHECK(rep.average[j] == doctest::Approx(0.5 * (rep.yearly(0, j) + rep.yearly(1, j)))
                                .epsilon(1e-14));
  }
}

TEST_CASE("importance refuses ensembles that never split") {
  Vec y = Vec::Constant(12, 3.0);
  Mat x = col({1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12});
  GbtEnsemble flat = boost(x, y, {5, 3, 2, 0.5});
  try {
    gain_importance({2013}, {&flat}, 1);
    FAIL("expected no_splits");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::no_splits);
    CHECK(std::string(e.what()).find("2013") != std::string::npos);
  }

  CHECK_ERRC(gain_importance({}, {}, 1), Errc::bad_config);
  CHECK_ERRC(gain_importance({2013, 2014}, {&flat}, 1), Errc::bad_config);
}

#include "uqr/isolation_forest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "uqr/errors.hpp"

namespace uqr {

double harmonic(int n) {
  double h = 0.0;
  for (int i = 1; i <= n; ++i) h += 1.0 / i;
  return h;
}

double avg_path_length(int n) {
  if (n <= 1) return 0.0;
  return 2.0 * harmonic(n - 1) - 2.0 * (n - 1) / static_cast<double>(n);
}

double score_from_path(double mean_path, double c_psi) {
  return std::exp2(-mean_path / c_psi);
}

namespace {

struct TreeBuilder {
  std::span<const double> x;
  std::size_t d;
  int height_limit;
  Rng* rng;
  IsolationTree* tree;

  int build(std::vector<std::size_t>& rows, int depth) {
    const int id = static_cast<int>(tree->nodes.size());
    tree->nodes.push_back({});
    if (depth >= height_limit || rows.size() <= 1) {
      tree->nodes[id].size = static_cast<int>(rows.size());
      return id;
    }
    // feature candidates with node-local spread
    std::vector<std::size_t> splittable;
    std::vector<double> lo(d), hi(d);
    for (std::size_t f = 0; f < d; ++f) {
      double mn = x[rows[0] * d + f], mx = mn;
      for (std::size_t r : rows) {
        const double v = x[r * d + f];
        mn = std::min(mn, v);
        mx = std::max(mx, v);
      }
      lo[f] = mn;
      hi[f] = mx;
      if (mx > mn) splittable.push_back(f);
    }
    if (splittable.empty()) {
      tree->nodes[id].size = static_cast<int>(rows.size());
      return id;
    }
    const std::size_t f = splittable[rng->below(splittable.size())];
    const double thr = rng->uniform(lo[f], hi[f]);
    std::vector<std::size_t> left_rows, right_rows;
    for (std::size_t r : rows) {
      (x[r * d + f] < thr ? left_rows : right_rows).push_back(r);
    }
    if (left_rows.empty() || right_rows.empty()) {
      // possible only when the uniform draw hits the exact minimum
      tree->nodes[id].size = static_cast<int>(rows.size());
      return id;
    }
    rows.clear();
    rows.shrink_to_fit();
    tree->nodes[id].feature = static_cast<int>(f);
    tree->nodes[id].threshold = thr;
    const int l = build(left_rows, depth + 1);
    const int r = build(right_rows, depth + 1);
    tree->nodes[id].left = l;
    tree->nodes[id].right = r;
    return id;
  }
};

double path_length(const IsolationTree& tree, std::span<const double> row) {
  int node = 0;
  int depth = 0;
  for (;;) {
    const ForestNode& nd = tree.nodes[static_cast<std::size_t>(node)];
    if (nd.feature < 0) {
      return depth + avg_path_length(nd.size);
    }
    node = row[static_cast<std::size_t>(nd.feature)] < nd.threshold ? nd.left
                                                                    : nd.right;
    ++depth;
  }
}

}  // namespace

IsolationForest fit_isolation_forest(std::span<const double> x, std::size_t n,
                                     std::size_t d, const ForestParams& params,
                                     Rng& rng) {
  if (params.n_trees < 1) throw DataError("fit_isolation_forest: need >= 1 tree");
  if (n < 2 || d < 1 || x.size() != n * d) {
    throw DataError("fit_isolation_forest: bad matrix shape");
  }
  const int psi = params.psi > 0
                      ? params.psi
                      : static_cast<int>(std::min<std::size_t>(256, n));
  if (psi < 2 || static_cast<std::size_t>(psi) > n) {
    throw DataError("fit_isolation_forest: psi must be in [2, N]");
  }
  const int height_limit =
      static_cast<int>(std::ceil(std::log2(static_cast<double>(psi))));

  IsolationForest forest;
  forest.psi = psi;
  forest.c_psi = avg_path_length(psi);
  forest.dim = d;
  forest.trees.resize(static_cast<std::size_t>(params.n_trees));

  std::vector<std::size_t> indices(n);
  for (int t = 0; t < params.n_trees; ++t) {
    Rng tree_rng = rng.child(static_cast<std::uint64_t>(t));
    // partial Fisher-Yates: first psi entries form the subsample
    std::iota(indices.begin(), indices.end(), std::size_t{0});
    for (int i = 0; i < psi; ++i) {
      const std::size_t j = i + tree_rng.below(n - static_cast<std::size_t>(i));
      std::swap(indices[static_cast<std::size_t>(i)], indices[j]);
    }
    std::vector<std::size_t> rows(indices.begin(), indices.begin() + psi);
    TreeBuilder builder{x, d, height_limit, &tree_rng,
                        &forest.trees[static_cast<std::size_t>(t)]};
    builder.build(rows, 0);
  }
  return forest;
}

double anomaly_score(const IsolationForest& forest, std::span<const double> x) {
  if (x.size() != forest.dim) throw DataError("anomaly_score: dimension mismatch");
  double total = 0.0;
  for (const auto& tree : forest.trees) total += path_length(tree, x);
  return score_from_path(total / static_cast<double>(forest.trees.size()),
                         forest.c_psi);
}

SplitIndices outlier_split(const Dataset& data, double fraction,
                           const ForestParams& params, Rng& rng,
                           StatDiff* stat_diff) {
  if (!(fraction > 0.0 && fraction < 0.5)) {
    throw DataError("outlier_split: fraction must be in (0, 0.5)");
  }
  IsolationForest forest =
      fit_isolation_forest(data.x, data.n, data.d, params, rng);
  std::vector<double> scores(data.n);
  for (std::size_t i = 0; i < data.n; ++i) {
    scores[i] = anomaly_score(forest, data.row(i));
  }
  std::vector<std::size_t> order(data.n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return a < b;  // deterministic tie-break
  });
  const auto n_test = static_cast<std::size_t>(
      std::ceil(fraction * static_cast<double>(data.n)));

  SplitIndices split;
  split.test.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_test));
  split.train.assign(order.begin() + static_cast<std::ptrdiff_t>(n_test), order.end());
  std::sort(split.test.begin(), split.test.end());
  std::sort(split.train.begin(), split.train.end());

  if (stat_diff) {
    const auto [lo, hi] = std::minmax_element(data.y.begin(), data.y.end());
    const double range = *hi > *lo ? *hi - *lo : 1.0;
    auto stats = [&](const std::vector<std::size_t>& idx) {
      double mean = 0.0;
      for (std::size_t i : idx) mean += (data.y[i] - *lo) / range;
      mean /= static_cast<double>(idx.size());
      double var = 0.0;
      for (std::size_t i : idx) {
        const double dev = (data.y[i] - *lo) / range - mean;
        var += dev * dev;
      }
      var /= static_cast<double>(idx.size());
      return std::pair{mean, var};
    };
    const auto [test_mean, test_var] = stats(split.test);
    const auto [train_mean, train_var] = stats(split.train);
    stat_diff->mean_diff = test_mean - train_mean;
    stat_diff->var_diff = test_var - train_var;
  }
  return split;
}

}  // namespace uqr

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "uqr/data.hpp"
#include "uqr/rng.hpp"

namespace uqr {

struct ForestParams {
  int n_trees = 100;
  int psi = 0;  // subsample size; 0 means min(256, N)
};

struct ForestNode {
  int feature = -1;  // -1: leaf
  double threshold = 0.0;
  int left = -1, right = -1;
  int size = 0;  // rows at this node when growth stopped (leaves)
};

struct IsolationTree {
  std::vector<ForestNode> nodes;  // nodes[0] is the root
};

struct IsolationForest {
  int psi = 0;
  double c_psi = 0.0;  // normalizing constant c(psi)
  std::size_t dim = 0;
  std::vector<IsolationTree> trees;
};

// exact harmonic number H(n) = 1 + 1/2 + ... + 1/n
double harmonic(int n);

// average unsuccessful-search path length c(n) = 2H(n-1) - 2(n-1)/n; c(1)=0
double avg_path_length(int n);

// score 2^(-mean_path / c_psi); exposed so the fixed point s(E=c)=0.5 is
// testable in isolation
double score_from_path(double mean_path, double c_psi);

// Each tree grows on an independent psi-subsample (without replacement),
// choosing a uniformly random splittable feature (node-local min < max) and
// a uniform threshold between the node-local extremes, until depth
// ceil(log2 psi) or node size 1. Rows with no splittable feature become
// leaves.
IsolationForest fit_isolation_forest(std::span<const double> x, std::size_t n,
                                     std::size_t d, const ForestParams& params,
                                     Rng& rng);

// expected-path-length anomaly score in (0,1); higher = more anomalous
double anomaly_score(const IsolationForest& forest, std::span<const double> x);

struct StatDiff {
  double mean_diff = 0.0;  // mean(t_test) - mean(t_train), normalized targets
  double var_diff = 0.0;   // var(t_test) - var(t_train), normalized targets
};

// test = top ceil(fraction * N) rows by anomaly score over the features
// (ties broken by lower row index); StatDiff is computed on targets mapped
// to [0,1] by the full-dataset min/max
SplitIndices outlier_split(const Dataset& data, double fraction,
                           const ForestParams& params, Rng& rng,
                           StatDiff* stat_diff = nullptr);

}  // namespace uqr

#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "uqr/rng.hpp"

namespace uqr {

struct Dataset {
  std::size_t n = 0, d = 0;
  std::vector<double> x;  // row-major n x d
  std::vector<double> y;
  std::vector<std::string> feature_names;
  std::string target_name;
  std::string provenance;       // source path or generator tag
  std::size_t rejected_rows = 0; // unparsable or non-finite rows dropped at load

  std::span<const double> row(std::size_t i) const {
    return {x.data() + i * d, d};
  }
};

// Comma-separated, period decimal, mandatory header. The target column is
// selected by name, or defaults to the last column. Rows that fail to parse
// or contain non-finite values are dropped and counted; more than 10%
// dropped is an error.
Dataset load_csv(const std::string& path, const std::string& target_column = "");

void write_csv(const std::string& path, const Dataset& data);

struct NormalizationMeta {
  bool identity = false;  // pass-through (unnormalized protocols)
  std::vector<double> mean, std;  // per feature, fitted on train
  double y_min = 0.0, y_max = 1.0;
  std::size_t constant_columns = 0;  // std forced to 1 on these

  double y_range() const { return y_max - y_min; }
};

// feature standardization + target [0,1] mapping, train statistics only
NormalizationMeta fit_normalization(const Dataset& train);
Dataset apply_normalization(const Dataset& data, const NormalizationMeta& norm);
Dataset invert_normalization(const Dataset& data, const NormalizationMeta& norm);

struct SplitIndices {
  std::vector<std::size_t> train, test;
};

// test size = round-half-up(n * fraction); indices within each side ascend
SplitIndices random_split(std::size_t n, double test_fraction, Rng& rng);

Dataset take_rows(const Dataset& data, std::span<const std::size_t> rows);

// throws unless train/test are disjoint and exhaustive over 0..n-1
void audit_partition(std::size_t n, std::span<const std::size_t> train,
                     std::span<const std::size_t> test);

// line-oriented manifest: one row index per line
void write_manifest(const std::string& path, std::span<const std::size_t> idx);
std::vector<std::size_t> read_manifest(const std::string& path);

// t = x^3 + noise_sd * N(0,1), x uniform on [lo, hi]
Dataset toy_cubic(std::size_t n, double lo, double hi, double noise_sd, Rng& rng);

// auxiliary generator: smooth mean with input-dependent Gaussian noise,
// t = x sin(x) + (0.1 + 0.2|x|) * N(0,1) on x in [-3, 3]
Dataset hetero_synthetic(std::size_t n, Rng& rng);

}  // namespace uqr

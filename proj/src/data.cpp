#include "uqr/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "uqr/errors.hpp"

namespace uqr {

namespace {

std::vector<std::string> split_commas(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = line.find(',', start);
    if (pos == std::string::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

bool parse_double(const std::string& s, double& out) {
  const std::string t = trim(s);
  if (t.empty()) return false;
  const char* first = t.data();
  const char* last = t.data() + t.size();
  auto res = std::from_chars(first, last, out);
  return res.ec == std::errc{} && res.ptr == last && std::isfinite(out);
}

}  // namespace

Dataset load_csv(const std::string& path, const std::string& target_column) {
  std::ifstream fh(path);
  if (!fh) throw DataError("cannot open " + path);

  std::string line;
  if (!std::getline(fh, line)) throw DataError(path + ": empty file");
  std::vector<std::string> header = split_commas(line);
  for (auto& h : header) h = trim(h);
  if (header.size() < 2) throw DataError(path + ": need at least one feature and a target");

  std::size_t target_idx = header.size() - 1;
  if (!target_column.empty()) {
    auto it = std::find(header.begin(), header.end(), target_column);
    if (it == header.end()) {
      throw DataError(path + ": unknown target column '" + target_column + "'");
    }
    target_idx = static_cast<std::size_t>(it - header.begin());
  }

  Dataset data;
  data.d = header.size() - 1;
  data.provenance = path;
  data.target_name = header[target_idx];
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i != target_idx) data.feature_names.push_back(header[i]);
  }

  std::size_t total_rows = 0;
  std::vector<double> vals(header.size());
  while (std::getline(fh, line)) {
    if (trim(line).empty()) continue;
    ++total_rows;
    const auto cells = split_commas(line);
    bool ok = cells.size() == header.size();
    for (std::size_t i = 0; ok && i < cells.size(); ++i) {
      ok = parse_double(cells[i], vals[i]);
    }
    if (!ok) {
      ++data.rejected_rows;
      continue;
    }
    for (std::size_t i = 0; i < vals.size(); ++i) {
      if (i == target_idx) {
        data.y.push_back(vals[i]);
      } else {
        data.x.push_back(vals[i]);
      }
    }
  }
  data.n = data.y.size();
  if (data.n == 0) throw DataError(path + ": no usable rows");
  if (data.rejected_rows * 10 > total_rows) {
    throw DataError(path + ": " + std::to_string(data.rejected_rows) + " of " +
                    std::to_string(total_rows) + " rows unusable");
  }
  return data;
}

void write_csv(const std::string& path, const Dataset& data) {
  std::ofstream fh(path);
  if (!fh) throw DataError("cannot write " + path);
  fh.precision(17);
  for (std::size_t i = 0; i < data.d; ++i) {
    fh << (i < data.feature_names.size() ? data.feature_names[i]
                                         : "x" + std::to_string(i))
       << ",";
  }
  fh << (data.target_name.empty() ? "t" : data.target_name) << "\n";
  for (std::size_t r = 0; r < data.n; ++r) {
    for (std::size_t i = 0; i < data.d; ++i) fh << data.x[r * data.d + i] << ",";
    fh << data.y[r] << "\n";
  }
  if (!fh) throw DataError("write failed: " + path);
}

NormalizationMeta fit_normalization(const Dataset& train) {
  if (train.n == 0) throw DataError("fit_normalization: empty training set");
  NormalizationMeta norm;
  norm.mean.assign(train.d, 0.0);
  norm.std.assign(train.d, 0.0);
  for (std::size_t r = 0; r < train.n; ++r) {
    for (std::size_t c = 0; c < train.d; ++c) norm.mean[c] += train.x[r * train.d + c];
  }
  for (auto& m : norm.mean) m /= static_cast<double>(train.n);
  for (std::size_t r = 0; r < train.n; ++r) {
    for (std::size_t c = 0; c < train.d; ++c) {
      const double dev = train.x[r * train.d + c] - norm.mean[c];
      norm.std[c] += dev * dev;
    }
  }
  for (std::size_t c = 0; c < train.d; ++c) {
    norm.std[c] = std::sqrt(norm.std[c] / static_cast<double>(train.n));
    if (norm.std[c] <= 0.0) {
      norm.std[c] = 1.0;  // constant column passes through mean-centered
      ++norm.constant_columns;
    }
  }
  const auto [lo, hi] = std::minmax_element(train.y.begin(), train.y.end());
  norm.y_min = *lo;
  norm.y_max = *hi;
  if (!(norm.y_max > norm.y_min)) {
    throw DataError("fit_normalization: degenerate target (max == min)");
  }
  return norm;
}

Dataset apply_normalization(const Dataset& data, const NormalizationMeta& norm) {
  if (norm.identity) return data;
  if (norm.mean.size() != data.d) throw DataError("apply_normalization: dimension mismatch");
  Dataset out = data;
  for (std::size_t r = 0; r < out.n; ++r) {
    for (std::size_t c = 0; c < out.d; ++c) {
      out.x[r * out.d + c] = (out.x[r * out.d + c] - norm.mean[c]) / norm.std[c];
    }
  }
  const double range = norm.y_range();
  for (auto& t : out.y) t = (t - norm.y_min) / range;
  return out;
}

Dataset invert_normalization(const Dataset& data, const NormalizationMeta& norm) {
  if (norm.identity) return data;
  if (norm.mean.size() != data.d) throw DataError("invert_normalization: dimension mismatch");
  Dataset out = data;
  for (std::size_t r = 0; r < out.n; ++r) {
    for (std::size_t c = 0; c < out.d; ++c) {
      out.x[r * out.d + c] = out.x[r * out.d + c] * norm.std[c] + norm.mean[c];
    }
  }
  const double range = norm.y_range();
  for (auto& t : out.y) t = t * range + norm.y_min;
  return out;
}

SplitIndices random_split(std::size_t n, double test_fraction, Rng& rng) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw DataError("random_split: fraction must be in (0,1)");
  }
  const auto n_test = static_cast<std::size_t>(
      std::floor(static_cast<double>(n) * test_fraction + 0.5));  // round half up
  if (n_test < 1 || n_test >= n) {
    throw DataError("random_split: degenerate split for n=" + std::to_string(n));
  }
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  rng.shuffle(perm);
  SplitIndices split;
  split.test.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_test));
  split.train.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_test), perm.end());
  std::sort(split.test.begin(), split.test.end());
  std::sort(split.train.begin(), split.train.end());
  return split;
}

Dataset take_rows(const Dataset& data, std::span<const std::size_t> rows) {
  Dataset out;
  out.d = data.d;
  out.n = rows.size();
  out.feature_names = data.feature_names;
  out.target_name = data.target_name;
  out.provenance = data.provenance;
  out.x.reserve(out.n * out.d);
  out.y.reserve(out.n);
  for (std::size_t r : rows) {
    if (r >= data.n) throw DataError("take_rows: index out of range");
    out.x.insert(out.x.end(), data.x.begin() + static_cast<std::ptrdiff_t>(r * data.d),
                 data.x.begin() + static_cast<std::ptrdiff_t>((r + 1) * data.d));
    out.y.push_back(data.y[r]);
  }
  return out;
}

void audit_partition(std::size_t n, std::span<const std::size_t> train,
                     std::span<const std::size_t> test) {
  std::vector<char> seen(n, 0);
  for (std::size_t i : train) {
    if (i >= n || seen[i]) throw DataError("audit_partition: bad train index");
    seen[i] = 1;
  }
  for (std::size_t i : test) {
    if (i >= n || seen[i]) throw DataError("audit_partition: test overlaps train");
    seen[i] = 2;
  }
  if (train.size() + test.size() != n) {
    throw DataError("audit_partition: partition not exhaustive");
  }
}

void write_manifest(const std::string& path, std::span<const std::size_t> idx) {
  std::ofstream fh(path);
  if (!fh) throw DataError("cannot write " + path);
  for (std::size_t i : idx) fh << i << "\n";
  if (!fh) throw DataError("write failed: " + path);
}

std::vector<std::size_t> read_manifest(const std::string& path) {
  std::ifstream fh(path);
  if (!fh) throw DataError("cannot open " + path);
  std::vector<std::size_t> idx;
  std::string line;
  while (std::getline(fh, line)) {
    const std::string t = trim(line);
    if (t.empty()) continue;
    idx.push_back(std::stoull(t));
  }
  return idx;
}

Dataset toy_cubic(std::size_t n, double lo, double hi, double noise_sd, Rng& rng) {
  if (n < 1) throw DataError("toy_cubic: n must be >= 1");
  Dataset data;
  data.n = n;
  data.d = 1;
  data.feature_names = {"x"};
  data.target_name = "t";
  data.provenance = "toy-cubic";
  data.x.resize(n);
  data.y.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = rng.uniform(lo, hi);
    data.x[i] = x;
    data.y[i] = x * x * x + noise_sd * rng.normal();
  }
  return data;
}

Dataset hetero_synthetic(std::size_t n, Rng& rng) {
  if (n < 1) throw DataError("hetero_synthetic: n must be >= 1");
  Dataset data;
  data.n = n;
  data.d = 1;
  data.feature_names = {"x"};
  data.target_name = "t";
  data.provenance = "heteroscedastic-synthetic";
  data.x.resize(n);
  data.y.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = rng.uniform(-3.0, 3.0);
    const double sd = 0.1 + 0.2 * std::abs(x);
    data.x[i] = x;
    data.y[i] = x * std::sin(x) + sd * rng.normal();
  }
  return data;
}

}  // namespace uqr

#include "rreh/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace rreh {

KernelExponent kernel_exponent_from_string(const std::string& name) {
  if (name == "sq") return KernelExponent::Sq;
  if (name == "l1") return KernelExponent::L1;
  throw ValidationError("unknown kernel exponent: " + name + " (expected sq or l1)");
}

std::string to_string(KernelExponent exponent) {
  return exponent == KernelExponent::Sq ? "sq" : "l1";
}

KernelMap fit_kernel(const Matrix& training_columns, Index k, std::uint64_t seed,
                     KernelExponent exponent) {
  const Index n = training_columns.cols();
  if (n < 1 || training_columns.rows() < 1)
    throw ValidationError("fit_kernel needs a non-empty training matrix");
  if (k < 1) throw ValidationError("kernel dimension must be positive");
  if (k > n) throw ValidationError("kernel dimension exceeds the training sample count");

  std::mt19937_64 rng(seed);
  std::vector<Index> pool(static_cast<std::size_t>(n));
  std::iota(pool.begin(), pool.end(), Index{0});
  for (Index i = 0; i < k; ++i) {
    std::uniform_int_distribution<Index> pick(i, n - 1);
    std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(pick(rng))]);
  }
  std::vector<Index> selected(pool.begin(), pool.begin() + k);
  std::sort(selected.begin(), selected.end());

  KernelMap map;
  map.exponent = exponent;
  map.samples.resize(training_columns.rows(), k);
  for (Index j = 0; j < k; ++j)
    map.samples.col(j) = training_columns.col(selected[static_cast<std::size_t>(j)]);

  // Bandwidth: mean distance between every left-out training column and every
  // kernel sample. With nothing left out, fall back to the mean pairwise
  // distance among the kernel samples.
  double sum = 0.0;
  std::uint64_t pairs = 0;
  if (k < n) {
    std::vector<char> is_selected(static_cast<std::size_t>(n), 0);
    for (Index j : selected) is_selected[static_cast<std::size_t>(j)] = 1;
    for (Index s = 0; s < n; ++s) {
      if (is_selected[static_cast<std::size_t>(s)]) continue;
      for (Index j = 0; j < k; ++j) {
        sum += (training_columns.col(s) - map.samples.col(j)).norm();
        ++pairs;
      }
    }
  } else {
    for (Index a = 0; a < k; ++a)
      for (Index b = a + 1; b < k; ++b) {
        sum += (map.samples.col(a) - map.samples.col(b)).norm();
        ++pairs;
      }
  }
  map.bandwidth = pairs == 0 ? 0.0 : sum / static_cast<double>(pairs);
  if (!(map.bandwidth > 0.0) || !std::isfinite(map.bandwidth))
    throw ValidationError("degenerate data: kernel bandwidth is zero (all points identical)");
  return map;
}

Matrix lift(const KernelMap& map, const Matrix& columns) {
  if (columns.rows() != map.dim())
    throw ValidationError("lift: input dimension does not match the kernel samples");
  const double denom = 2.0 * map.bandwidth * map.bandwidth;
  Matrix lifted(map.k(), columns.cols());
  for (Index s = 0; s < columns.cols(); ++s) {
    for (Index j = 0; j < map.k(); ++j) {
      const double d2 = (columns.col(s) - map.samples.col(j)).squaredNorm();
      const double t = map.exponent == KernelExponent::Sq ? d2 : std::sqrt(d2);
      lifted(j, s) = std::exp(-t / denom);
    }
  }
  return lifted;
}

Matrix FeatureMap::apply(const Matrix& columns) const {
  return kernel ? lift(*kernel, columns) : columns;
}

Index FeatureMap::output_dim(Index input_dim) const {
  return kernel ? kernel->k() : input_dim;
}

}  // namespace rreh

#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "rreh/data_model.hpp"

namespace rreh {

/// Power applied to the Euclidean distance in the RBF exponent. `Sq` is the
/// standard squared-distance kernel; `L1` keeps the unsquared distance.
enum class KernelExponent { Sq, L1 };

KernelExponent kernel_exponent_from_string(const std::string& name);
std::string to_string(KernelExponent exponent);

/// RBF feature map against a fixed set of kernel samples: entry (j, s) of
/// the lifted matrix is exp(-dist(x_s, m_j)^p / (2 delta^2)).
struct KernelMap {
  Matrix samples;  // d x k, columns drawn from the training matrix
  double bandwidth = 0.0;
  KernelExponent exponent = KernelExponent::Sq;

  Index k() const { return samples.cols(); }
  Index dim() const { return samples.rows(); }
};

/// Samples k training columns without replacement (seeded) and sets the
/// bandwidth to the mean Euclidean distance between every non-selected
/// training column and every kernel sample. When no column is left out
/// (k equals the sample count) the mean pairwise distance among the kernel
/// samples is used instead.
KernelMap fit_kernel(const Matrix& training_columns, Index k, std::uint64_t seed,
                     KernelExponent exponent = KernelExponent::Sq);

/// Lifts columns into the kernel-induced space; output is k x n with all
/// entries in (0, 1].
Matrix lift(const KernelMap& map, const Matrix& columns);

/// Identity or RBF lift. The identity map realizes the no-kernel ablations.
struct FeatureMap {
  std::optional<KernelMap> kernel;  // nullopt -> identity

  bool is_identity() const { return !kernel.has_value(); }
  Matrix apply(const Matrix& columns) const;
  Index output_dim(Index input_dim) const;
};

}  // namespace rreh

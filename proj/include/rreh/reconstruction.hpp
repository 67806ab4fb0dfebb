#pragma once

#include "rreh/data_model.hpp"

namespace rreh {

/// Coefficients expressing each kernelized unpaired column as a linear
/// combination of the kernelized anchor columns.
struct ReconstructionFactor {
  Matrix matrix;  // a x nu
  double ridge = 0.0;

  Index anchor_count() const { return matrix.rows(); }
  Index unpaired_count() const { return matrix.cols(); }
};

/// Ridge least squares R = (Phi_a^T Phi_a + lambda I)^-1 Phi_a^T Phi_u via an
/// SPD solve. With lambda = 0 a rank-deficient anchor Gram raises a
/// NumericalError advising lambda > 0.
ReconstructionFactor fit_reconstruction(const Matrix& phi_anchors, const Matrix& phi_unpaired,
                                        double lambda);

/// Phi_a * R, the reconstruction of the unpaired block.
Matrix reconstruct(const Matrix& phi_anchors, const ReconstructionFactor& factor);

}  // namespace rreh

#include "rreh/reconstruction.hpp"

#include <Eigen/Cholesky>

namespace rreh {

ReconstructionFactor fit_reconstruction(const Matrix& phi_anchors, const Matrix& phi_unpaired,
                                        double lambda) {
  if (phi_anchors.rows() != phi_unpaired.rows())
    throw ValidationError("fit_reconstruction: row dimensions differ");
  if (lambda < 0.0) throw ValidationError("fit_reconstruction: lambda must be non-negative");
  if (!phi_anchors.allFinite() || !phi_unpaired.allFinite())
    throw ValidationError("fit_reconstruction: non-finite input");

  const Index a = phi_anchors.cols();
  ReconstructionFactor factor;
  factor.ridge = lambda;
  if (phi_unpaired.cols() == 0) {
    factor.matrix.resize(a, 0);
    return factor;
  }

  Matrix gram = phi_anchors.transpose() * phi_anchors;
  gram.diagonal().array() += lambda;
  const Matrix rhs = phi_anchors.transpose() * phi_unpaired;

  Eigen::LLT<Matrix> llt(gram);
  if (llt.info() != Eigen::Success)
    throw NumericalError("reconstruction system is singular; use lambda > 0");
  factor.matrix = llt.solve(rhs);

  // Normal-equation residual check, with one refinement pass before giving up.
  const double bound = 1e-8 * (1.0 + factor.matrix.norm());
  Matrix residual = gram * factor.matrix - rhs;
  if (residual.norm() > bound) {
    factor.matrix -= llt.solve(residual);
    residual = gram * factor.matrix - rhs;
    if (residual.norm() > bound || !factor.matrix.allFinite())
      throw NumericalError("reconstruction solve did not reach tolerance; use lambda > 0");
  }
  return factor;
}

Matrix reconstruct(const Matrix& phi_anchors, const ReconstructionFactor& factor) {
  if (phi_anchors.cols() != factor.anchor_count())
    throw ValidationError("reconstruct: anchor count mismatch");
  return phi_anchors * factor.matrix;
}

}  // namespace rreh

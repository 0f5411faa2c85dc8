#pragma once

#include <Eigen/Core>

#include "flagcurv/lie_algebra.hpp"

namespace flagcurv {

/// Reductive decomposition g = h + m with m the bi-orthogonal complement of
/// the subalgebra h; the ingredients of a normal homogeneous metric on G/H.
struct ReductiveSpace {
  LieAlgebra algebra;
  Eigen::MatrixXd h_basis;  // columns span h (possibly zero columns)
  Eigen::MatrixXd m_basis;  // bi-orthonormal columns spanning m

  int h_dim() const { return static_cast<int>(h_basis.cols()); }
  int m_dim() const { return static_cast<int>(m_basis.cols()); }
};

/// Splits g along a subalgebra h. Throws NotASubalgebra when [h,h] leaves h
/// (projection residual above 1e-10).
ReductiveSpace reductive_decomposition(const LieAlgebra& algebra, const Eigen::MatrixXd& h_basis);

/// A unit v1 in m with <w1,v1>_bi = 0 maximizing |[w1,v1]|_bi (top singular
/// direction of ad_w1 restricted to m intersect w1-perp). Throws
/// EuclideanFactor when [w1, m] = 0, the contradiction case that signals a
/// Euclidean product factor.
Eigen::VectorXd find_transverse(const ReductiveSpace& space, const Eigen::VectorXd& w1);

/// A tangent vector (t, u1) of R + m.
struct CosetVector {
  double t = 0.0;
  Eigen::VectorXd m_part;
};

/// True iff the plane spanned by u and v in R + m has zero sectional
/// curvature for the normal metric, i.e. the m-parts of a (hence any)
/// spanning pair commute. Throws DegenerateFlag for a dependent pair.
bool flat_plane_test(const ReductiveSpace& space, const CosetVector& u, const CosetVector& v);

}  // namespace flagcurv

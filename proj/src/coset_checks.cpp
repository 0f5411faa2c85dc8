#include "flagcurv/coset_checks.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "flagcurv/errors.hpp"

namespace flagcurv {

namespace {
constexpr double kSubalgebraTol = 1e-10;
constexpr double kCommuteTol = 1e-10;
}

ReductiveSpace reductive_decomposition(const LieAlgebra& algebra, const Eigen::MatrixXd& h_basis) {
  const int n = algebra.dim();
  if (h_basis.size() > 0 && h_basis.rows() != n)
    throw Error(ErrorCode::InputError, "h basis dimension mismatch");

  // Orthonormalize h and check bracket closure.
  Eigen::MatrixXd h(n, h_basis.cols());
  int hk = 0;
  for (int c = 0; c < h_basis.cols(); ++c) {
    Eigen::VectorXd v = h_basis.col(c);
    for (int k = 0; k < hk; ++k) v -= algebra.inner(h.col(k), v) * h.col(k);
    double nv = algebra.norm(v);
    if (nv > 1e-10) h.col(hk++) = v / nv;
  }
  h.conservativeResize(n, hk);

  auto project_h = [&](const Eigen::VectorXd& v) {
    Eigen::VectorXd p = Eigen::VectorXd::Zero(n);
    for (int k = 0; k < hk; ++k) p += algebra.inner(h.col(k), v) * h.col(k);
    return p;
  };

  for (int a = 0; a < hk; ++a)
    for (int b = a + 1; b < hk; ++b) {
      Eigen::VectorXd br = algebra.bracket(h.col(a), h.col(b));
      if (algebra.norm(br - project_h(br)) > kSubalgebraTol)
        throw Error(ErrorCode::NotASubalgebra, "h is not closed under the bracket");
    }

  // m = bi-orthogonal complement of h.
  Eigen::MatrixXd m(n, n - hk);
  int mk = 0;
  for (int i = 0; i < n && mk < n - hk; ++i) {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(n);
    v[i] = 1.0;
    v -= project_h(v);
    for (int k = 0; k < mk; ++k) v -= algebra.inner(m.col(k), v) * m.col(k);
    double nv = algebra.norm(v);
    if (nv > 1e-10) m.col(mk++) = v / nv;
  }
  if (mk != n - hk)
    throw Error(ErrorCode::InputError, "failed to complete the orthogonal complement");

  // [h, m] stays in m when the inner product is ad-invariant; checked anyway.
  for (int a = 0; a < hk; ++a)
    for (int b = 0; b < mk; ++b) {
      Eigen::VectorXd br = algebra.bracket(h.col(a), m.col(b));
      if (algebra.norm(project_h(br)) > kSubalgebraTol)
        throw Error(ErrorCode::NotASubalgebra, "[h,m] leaves m; inner product not ad-invariant");
    }

  return ReductiveSpace{algebra, h, m};
}

Eigen::VectorXd find_transverse(const ReductiveSpace& space, const Eigen::VectorXd& w1) {
  const LieAlgebra& alg = space.algebra;
  const int n = alg.dim();
  if (w1.size() != n) throw Error(ErrorCode::InputError, "vector dimension mismatch");
  double nw = alg.norm(w1);
  if (nw < 1e-14) throw Error(ErrorCode::InputError, "w1 must be nonzero");

  // Residual of w1 against m.
  Eigen::VectorXd in_m = Eigen::VectorXd::Zero(n);
  for (int k = 0; k < space.m_dim(); ++k)
    in_m += alg.inner(space.m_basis.col(k), w1) * space.m_basis.col(k);
  if (alg.norm(w1 - in_m) > 1e-8 * nw)
    throw Error(ErrorCode::InputError, "w1 must lie in m");

  // Bi-orthonormal basis of m intersect w1-perp.
  Eigen::VectorXd w_hat = w1 / nw;
  Eigen::MatrixXd slice(n, space.m_dim());
  int sk = 0;
  for (int c = 0; c < space.m_dim(); ++c) {
    Eigen::VectorXd v = space.m_basis.col(c);
    v -= alg.inner(w_hat, v) * w_hat;
    for (int k = 0; k < sk; ++k) v -= alg.inner(slice.col(k), v) * slice.col(k);
    double nv = alg.norm(v);
    if (nv > 1e-10) slice.col(sk++) = v / nv;
  }
  if (sk == 0)
    throw Error(ErrorCode::EuclideanFactor, "m intersect w1-perp is trivial");
  slice.conservativeResize(n, sk);

  // Maximize |[w1, v]|_bi over unit v in the slice: top singular direction of
  // L^T ad_w1 slice, with L the Cholesky factor of the inner product.
  Eigen::LLT<Eigen::MatrixXd> llt(alg.inner_product());
  Eigen::MatrixXd a = llt.matrixU() * (alg.ad(w1) * slice);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
  if (svd.singularValues().size() == 0 || svd.singularValues()[0] <= 1e-10)
    throw Error(ErrorCode::EuclideanFactor,
                "[w1, m] = 0: the space would have a Euclidean product factor");
  Eigen::VectorXd v1 = slice * svd.matrixV().col(0);
  return v1 / alg.norm(v1);
}

bool flat_plane_test(const ReductiveSpace& space, const CosetVector& u, const CosetVector& v) {
  const LieAlgebra& alg = space.algebra;
  const int n = alg.dim();
  if (u.m_part.size() != n || v.m_part.size() != n)
    throw Error(ErrorCode::InputError, "vector dimension mismatch");

  // Gram determinant in R + m (metric dt^2 + <.,.>_bi).
  double uu = u.t * u.t + alg.inner(u.m_part, u.m_part);
  double vv = v.t * v.t + alg.inner(v.m_part, v.m_part);
  double uv = u.t * v.t + alg.inner(u.m_part, v.m_part);
  double gram = uu * vv - uv * uv;
  if (!(gram > 1e-12 * uu * vv))
    throw Error(ErrorCode::DegenerateFlag, "vectors do not span a plane");

  // [u1', v1'] of any spanning pair scales by the change-of-basis
  // determinant, so the given pair decides. Normalize for a scale-free test.
  Eigen::VectorXd a = u.m_part / std::sqrt(uu);
  Eigen::VectorXd b = v.m_part / std::sqrt(vv);
  return alg.norm(alg.bracket(a, b)) <= kCommuteTol;
}

}  // namespace flagcurv

#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "flagcurv/lie_algebra.hpp"
#include "flagcurv/minkowski.hpp"

namespace flagcurv {

/// Flag: pole y and an edge v spanning the plane P = span(y, v).
struct FlagData {
  Eigen::VectorXd pole;
  Eigen::VectorXd edge;
};

/// A Minkowski norm on g read as a left-invariant Finsler metric on G.
/// Curvature is evaluated at the identity in the exponential chart; left
/// invariance makes that sufficient. chart_order is the truncation order of
/// the transport series (2 by default; 3 kept for the truncation self-test).
class InvariantMetric {
 public:
  InvariantMetric(LieAlgebra algebra, NormPtr norm, int chart_order = 2);

  const LieAlgebra& algebra() const { return algebra_; }
  const MinkowskiNorm& norm() const { return *norm_; }
  const NormPtr& norm_ptr() const { return norm_; }
  int chart_order() const { return chart_order_; }

 private:
  LieAlgebra algebra_;
  NormPtr norm_;
  int chart_order_;
};

/// Differential of the left-translated exponential chart:
/// T(x) = sum_{k=0}^{order} (-ad_x)^k / (k+1)!, so the chart metric is
/// F(x, y) = F_e(T(x) y) and T(0) = I.
Eigen::MatrixXd chart_transport(const LieAlgebra& algebra, const Eigen::VectorXd& x, int order);

/// Finite-difference steps of the curvature assembly. The spray itself is
/// evaluated through closed-form norm derivatives; only the outer derivatives
/// of G are finite differences. Richardson extrapolation (steps h and 2h) is
/// the default.
struct CurvatureOptions {
  double step_x = 1e-3;
  double step_y_rel = 1e-3;
  bool richardson = true;
};

/// Spray coefficients G^i(x, y) in the exponential chart,
/// G^i = 1/4 g^{il} ( [F^2]_{x^k y^l} y^k - [F^2]_{x^l} ).
Eigen::VectorXd spray_coefficients_at(const InvariantMetric& metric, const Eigen::VectorXd& x,
                                      const Eigen::VectorXd& y);

/// Spray at the identity (x = 0).
Eigen::VectorXd spray_coefficients(const InvariantMetric& metric, const Eigen::VectorXd& y);

/// Riemann curvature R^i_k(y) at the identity:
/// R^i_k = 2 dG^i/dx^k - y^j d2G^i/dx^j dy^k + 2 G^j d2G^i/dy^j dy^k
///         - dG^i/dy^j dG^j/dy^k.
Eigen::MatrixXd riemann_curvature(const InvariantMetric& metric, const Eigen::VectorXd& y,
                                  const CurvatureOptions& options = {});

/// Flag curvature K(e, y, span(y, v)) =
/// <R_y v, v>_y / ( <y,y>_y <v,v>_y - <y,v>_y^2 ).
/// For glued norms the evaluation delegates to the component whose weight is
/// 1 around the pole direction; poles in blending zones are rejected.
double flag_curvature(const InvariantMetric& metric, const FlagData& flag,
                      const CurvatureOptions& options = {});

/// Throws DegenerateFlag unless the bi-Gram determinant of (y, v) exceeds
/// 1e-12 * |y|^2 |v|^2.
void validate_flag(const LieAlgebra& algebra, const FlagData& flag);

/// Analytic sectional curvature of the bi-invariant metric,
/// K = 1/4 |[u,v]|^2_bi / ( |u|^2 |v|^2 - <u,v>_bi^2 ).
/// Independent of the engine; used to validate it.
double biinvariant_sectional_oracle(const LieAlgebra& algebra, const Eigen::VectorXd& u,
                                    const Eigen::VectorXd& v);

/// Max over seeded samples of |K^F(e,y,y^v) - K^F~(e,y~,y~^v)| where F is the
/// bi-invariant quadratic metric, F~ its Killing navigation by W, v is
/// g_y-orthogonal to y and y~ = y + F(y) W. Both sides go through the engine.
double navigation_correspondence_residual(const InvariantMetric& metric,
                                          const Eigen::VectorXd& wind, int n_samples,
                                          std::uint64_t seed,
                                          const CurvatureOptions& options = {});

}  // namespace flagcurv

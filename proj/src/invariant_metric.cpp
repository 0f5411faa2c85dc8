#include "flagcurv/invariant_metric.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "flagcurv/errors.hpp"
#include "flagcurv/parallel.hpp"
#include "flagcurv/rng.hpp"

namespace flagcurv {

namespace {
constexpr double kFlagGramTol = 1e-12;
}

InvariantMetric::InvariantMetric(LieAlgebra algebra, NormPtr norm, int chart_order)
    : algebra_(std::move(algebra)), norm_(std::move(norm)), chart_order_(chart_order) {
  if (!norm_) throw Error(ErrorCode::InputError, "metric norm is null");
  if (norm_->dim() != algebra_.dim())
    throw Error(ErrorCode::InputError, "norm dimension != algebra dimension");
  if (chart_order_ < 1 || chart_order_ > 3)
    throw Error(ErrorCode::InputError, "chart_order must be in {1,2,3}");
}

Eigen::MatrixXd chart_transport(const LieAlgebra& algebra, const Eigen::VectorXd& x, int order) {
  if (order < 1 || order > 3) throw Error(ErrorCode::InputError, "order must be in {1,2,3}");
  const int n = algebra.dim();
  Eigen::MatrixXd a = -algebra.ad(x);
  Eigen::MatrixXd t = Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd p = Eigen::MatrixXd::Identity(n, n);
  double fact = 1.0;
  for (int k = 1; k <= order; ++k) {
    p = (p * a).eval();
    fact *= (k + 1);
    t += p / fact;
  }
  return t;
}

namespace {

// T(x) and its analytic partials dT/dx^k for the truncated series.
struct Chart {
  Eigen::MatrixXd t;
  std::vector<Eigen::MatrixXd> dt;
};

Chart chart_with_derivatives(const LieAlgebra& alg, const Eigen::VectorXd& x, int order) {
  const int n = alg.dim();
  Chart ch;
  ch.t = chart_transport(alg, x, order);
  ch.dt.resize(n);
  Eigen::MatrixXd a = -alg.ad(x);
  Eigen::MatrixXd a2;
  if (order >= 3) a2 = a * a;
  for (int k = 0; k < n; ++k) {
    Eigen::MatrixXd b = -alg.ad_basis(k);
    Eigen::MatrixXd d = b / 2.0;
    if (order >= 2) d += (b * a + a * b) / 6.0;
    if (order >= 3) d += (b * a2 + a * b * a + a2 * b) / 24.0;
    ch.dt[k] = std::move(d);
  }
  return ch;
}

// Spray out of the norm's closed-form first/second derivatives. All
// y-curvature noise therefore comes from the outer stencils only.
Eigen::VectorXd spray_impl(const LieAlgebra& alg, const MinkowskiNorm& norm,
                           const Eigen::VectorXd& x, const Eigen::VectorXd& y, int order) {
  const int n = alg.dim();
  const bool at_origin = x.isZero(0.0);
  Eigen::VectorXd g1;           // grad F^2 at z
  Eigen::MatrixXd g2;           // hess F^2 at z
  Eigen::MatrixXd g;            // fundamental tensor in chart coordinates
  Eigen::VectorXd rhs(n);

  if (at_origin) {
    // T(0) = I, dT_k = -ad_k / 2.
    g1 = norm.energy_gradient(y);
    g2 = norm.energy_hessian(y);
    g = 0.5 * g2;
    Eigen::VectorXd dF2dx(n);
    Eigen::MatrixXd mixed(n, n);  // (k,l)
    for (int k = 0; k < n; ++k) {
      Eigen::VectorXd w = -0.5 * (alg.ad_basis(k) * y);
      dF2dx[k] = g1.dot(w);
      mixed.row(k) = (g2 * w).transpose() - 0.5 * (alg.ad_basis(k).transpose() * g1).transpose();
    }
    rhs = mixed.transpose() * y - dF2dx;
  } else {
    Chart ch = chart_with_derivatives(alg, x, order);
    Eigen::VectorXd z = ch.t * y;
    g1 = norm.energy_gradient(z);
    g2 = norm.energy_hessian(z);
    g = 0.5 * ch.t.transpose() * g2 * ch.t;
    Eigen::VectorXd dF2dx(n);
    Eigen::MatrixXd mixed(n, n);
    for (int k = 0; k < n; ++k) {
      Eigen::VectorXd w = ch.dt[k] * y;
      dF2dx[k] = g1.dot(w);
      mixed.row(k) = (ch.t.transpose() * (g2 * w) + ch.dt[k].transpose() * g1).transpose();
    }
    rhs = mixed.transpose() * y - dF2dx;
  }

  Eigen::LDLT<Eigen::MatrixXd> ldlt(g);
  if (ldlt.info() != Eigen::Success)
    throw ConvexityError("singular fundamental tensor in spray evaluation", 0.0);
  return 0.25 * ldlt.solve(rhs);
}

// Resolves glued norms at a pole direction: evaluation must go through the
// single component whose weight is 1 there. Blending-zone poles are rejected
// because the glue is only C^2 across them.
const InvariantMetric resolve_for_pole(const InvariantMetric& metric, const Eigen::VectorXd& y) {
  if (metric.norm().kind() != MinkowskiNorm::Kind::Glued) return metric;
  const auto& glued = static_cast<const GluedNorm&>(metric.norm());
  int idx = glued.pure_component(y);
  if (idx < 0)
    throw Error(ErrorCode::BlendingZonePole,
                "pole direction lies in a blending zone of the glued norm");
  return InvariantMetric(metric.algebra(), glued.components()[idx], metric.chart_order());
}

}  // namespace

Eigen::VectorXd spray_coefficients_at(const InvariantMetric& metric, const Eigen::VectorXd& x,
                                      const Eigen::VectorXd& y) {
  if (y.norm() < 1e-300) throw Error(ErrorCode::DomainError, "spray at y = 0");
  const InvariantMetric m = resolve_for_pole(metric, y);
  return spray_impl(m.algebra(), m.norm(), x, y, m.chart_order());
}

Eigen::VectorXd spray_coefficients(const InvariantMetric& metric, const Eigen::VectorXd& y) {
  return spray_coefficients_at(metric, Eigen::VectorXd::Zero(metric.algebra().dim()), y);
}

namespace {

struct RiemannParts {
  Eigen::MatrixXd dGdx;   // (i,k)
  Eigen::MatrixXd m1;     // y^j d2G^i/dx^j dy^k
  Eigen::MatrixXd m2;     // 2 G^j d2G^i/dy^j dy^k
  Eigen::MatrixXd dGdy;   // (i,j)
};

RiemannParts riemann_parts(const LieAlgebra& alg, const MinkowskiNorm& norm,
                           const Eigen::VectorXd& y, int order, double hx, double hy,
                           const Eigen::VectorXd& g0) {
  const int n = alg.dim();
  const Eigen::VectorXd x0 = Eigen::VectorXd::Zero(n);
  auto spray = [&](const Eigen::VectorXd& x, const Eigen::VectorXd& yy) {
    return spray_impl(alg, norm, x, yy, order);
  };

  RiemannParts p;
  p.dGdx.resize(n, n);
  for (int k = 0; k < n; ++k) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
    e[k] = hx;
    p.dGdx.col(k) = (spray(e, y) - spray(-e, y)) / (2.0 * hx);
  }

  p.m1.resize(n, n);
  const Eigen::VectorXd xp = hx * y, xm = -hx * y;  // directional x-step along y
  for (int k = 0; k < n; ++k) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
    e[k] = hy;
    p.m1.col(k) = (spray(xp, y + e) - spray(xp, y - e) - spray(xm, y + e) + spray(xm, y - e)) /
                  (4.0 * hx * hy);
  }

  p.dGdy.resize(n, n);
  std::vector<Eigen::VectorXd> gp(n), gm(n);
  for (int j = 0; j < n; ++j) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
    e[j] = hy;
    gp[j] = spray(x0, y + e);
    gm[j] = spray(x0, y - e);
    p.dGdy.col(j) = (gp[j] - gm[j]) / (2.0 * hy);
  }

  p.m2 = Eigen::MatrixXd::Zero(n, n);
  Eigen::VectorXd gc = spray(x0, y);
  for (int j = 0; j < n; ++j) {
    if (g0[j] == 0.0) continue;
    for (int k = 0; k < n; ++k) {
      Eigen::VectorXd d2;
      if (j == k) {
        d2 = (gp[j] - 2.0 * gc + gm[j]) / (hy * hy);
      } else {
        Eigen::VectorXd ej = Eigen::VectorXd::Zero(n), ek = Eigen::VectorXd::Zero(n);
        ej[j] = hy;
        ek[k] = hy;
        d2 = (spray(x0, y + ej + ek) - spray(x0, y + ej - ek) - spray(x0, y - ej + ek) +
              spray(x0, y - ej - ek)) /
             (4.0 * hy * hy);
      }
      p.m2.col(k) += 2.0 * g0[j] * d2;
    }
  }
  return p;
}

}  // namespace

Eigen::MatrixXd riemann_curvature(const InvariantMetric& metric, const Eigen::VectorXd& y,
                                  const CurvatureOptions& options) {
  if (y.norm() < 1e-300) throw Error(ErrorCode::DomainError, "curvature at y = 0");
  const InvariantMetric m = resolve_for_pole(metric, y);
  const LieAlgebra& alg = m.algebra();
  const double hy = options.step_y_rel * y.norm();
  const Eigen::VectorXd g0 = spray_impl(alg, m.norm(), Eigen::VectorXd::Zero(alg.dim()), y,
                                        m.chart_order());

  auto assemble = [&](double sx, double sy) {
    RiemannParts p = riemann_parts(alg, m.norm(), y, m.chart_order(), sx, sy, g0);
    return Eigen::MatrixXd(2.0 * p.dGdx - p.m1 + p.m2 - p.dGdy * p.dGdy);
  };

  if (!options.richardson) return assemble(options.step_x, hy);
  // Central stencils have O(h^2) truncation; two step sizes at ratio 2 cancel it.
  Eigen::MatrixXd r1 = assemble(options.step_x, hy);
  Eigen::MatrixXd r2 = assemble(2.0 * options.step_x, 2.0 * hy);
  return (4.0 * r1 - r2) / 3.0;
}

void validate_flag(const LieAlgebra& algebra, const FlagData& flag) {
  const auto& y = flag.pole;
  const auto& v = flag.edge;
  if (y.size() != algebra.dim() || v.size() != algebra.dim())
    throw Error(ErrorCode::InputError, "flag dimension mismatch");
  double yy = algebra.inner(y, y), vv = algebra.inner(v, v), yv = algebra.inner(y, v);
  double gram = yy * vv - yv * yv;
  if (!(gram > kFlagGramTol * yy * vv))
    throw Error(ErrorCode::DegenerateFlag, "flag pole and edge are not independent");
}

double flag_curvature(const InvariantMetric& metric, const FlagData& flag,
                      const CurvatureOptions& options) {
  validate_flag(metric.algebra(), flag);
  const InvariantMetric m = resolve_for_pole(metric, flag.pole);
  const auto& y = flag.pole;
  const auto& v = flag.edge;

  Eigen::MatrixXd g = fundamental_tensor(m.norm(), y);
  Eigen::MatrixXd r = riemann_curvature(m, y, options);
  double num = (r * v).dot(g * v);
  double yy = y.dot(g * y), vv = v.dot(g * v), yv = y.dot(g * v);
  double den = yy * vv - yv * yv;
  if (!(den > kFlagGramTol * yy * vv))
    throw Error(ErrorCode::DegenerateFlag, "flag denominator vanishes");
  return num / den;
}

double biinvariant_sectional_oracle(const LieAlgebra& algebra, const Eigen::VectorXd& u,
                                    const Eigen::VectorXd& v) {
  validate_flag(algebra, FlagData{u, v});
  double uu = algebra.inner(u, u), vv = algebra.inner(v, v), uv = algebra.inner(u, v);
  Eigen::VectorXd br = algebra.bracket(u, v);
  return 0.25 * algebra.inner(br, br) / (uu * vv - uv * uv);
}

double navigation_correspondence_residual(const InvariantMetric& metric,
                                          const Eigen::VectorXd& wind, int n_samples,
                                          std::uint64_t seed, const CurvatureOptions& options) {
  const LieAlgebra& alg = metric.algebra();
  const int n = alg.dim();
  if (wind.size() != n) throw Error(ErrorCode::InputError, "wind dimension mismatch");
  if (metric.norm().kind() != MinkowskiNorm::Kind::Quadratic)
    throw Error(ErrorCode::InputError,
                "correspondence check needs the bi-invariant quadratic metric");
  if (alg.center_dim() == n)
    throw Error(ErrorCode::HypothesisViolation, "correspondence check needs a non-Abelian algebra");
  const auto& quad = static_cast<const QuadraticNorm&>(metric.norm());
  if (wind.norm() > 0.0 && metric.norm().value(wind) >= 1.0)
    throw Error(ErrorCode::InvalidDatum, "navigation requires F(W) < 1");

  NormPtr navigated = zermelo_randers_closed_form(quad.matrix(), wind);
  InvariantMetric tilde(alg, navigated, metric.chart_order());
  const Eigen::MatrixXd q = quad.matrix();

  std::vector<double> residuals(static_cast<std::size_t>(n_samples), 0.0);
  parallel_for(static_cast<std::size_t>(n_samples), [&](std::size_t i) {
    Rng rng(derive_seed(seed, i));
    for (int attempt = 0; attempt < 64; ++attempt) {
      Eigen::VectorXd y = rng.unit_vector(n);
      Eigen::VectorXd v = rng.gaussian_vector(n);
      // project v to be g_y-orthogonal to y; g = Q for the quadratic base
      double yy = y.dot(q * y);
      v -= (y.dot(q * v) / yy) * y;
      if (v.norm() < 1e-6) continue;
      double gram = yy * v.dot(q * v);  // <y,v>_Q = 0 after projection
      if (gram < 1e-8) continue;
      double kf = flag_curvature(metric, FlagData{y, v}, options);
      Eigen::VectorXd yt = y + metric.norm().value(y) * wind;
      double kt = flag_curvature(tilde, FlagData{yt, v}, options);
      residuals[i] = std::abs(kf - kt);
      return;
    }
    throw Error(ErrorCode::SearchFailure, "could not draw a nondegenerate flag");
  });

  double worst = 0.0;
  for (double r : residuals) worst = std::max(worst, r);
  return worst;
}

}  // namespace flagcurv

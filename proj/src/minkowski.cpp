#include "flagcurv/minkowski.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "flagcurv/errors.hpp"
#include "flagcurv/rng.hpp"

namespace flagcurv {

namespace {
constexpr double kFdStepRel = 1e-4;       // finite-difference step, relative to |y|
constexpr double kNavigationTol = 1e-12;  // bisection tolerance for solve_navigation
constexpr double kWeightSumTol = 1e-10;
}  // namespace

void MinkowskiNorm::check_nonzero(const Eigen::VectorXd& y) const {
  if (y.size() != dim_) throw Error(ErrorCode::InputError, "vector dimension mismatch");
  if (y.norm() < 1e-300) throw Error(ErrorCode::DomainError, "norm derivative at y = 0");
}

Eigen::VectorXd MinkowskiNorm::energy_gradient(const Eigen::VectorXd& y) const {
  double f = value(y);
  return 2.0 * f * gradient(y);
}

Eigen::VectorXd MinkowskiNorm::gradient(const Eigen::VectorXd& y) const {
  check_nonzero(y);
  const double h = kFdStepRel * y.norm();
  Eigen::VectorXd g(dim());
  Eigen::VectorXd yp = y, ym = y;
  for (int i = 0; i < dim(); ++i) {
    yp[i] += h;
    ym[i] -= h;
    g[i] = (value(yp) - value(ym)) / (2.0 * h);
    yp[i] = y[i];
    ym[i] = y[i];
  }
  return g;
}

Eigen::MatrixXd MinkowskiNorm::hessian(const Eigen::VectorXd& y) const {
  // Recovered from the F^2 stencil: hess F = (hess F^2 / 2 - grad F grad F^T)/F.
  double f = value(y);
  Eigen::VectorXd gf = gradient(y);
  Eigen::MatrixXd he = fd_energy_hessian(y);
  return (0.5 * he - gf * gf.transpose()) / f;
}

Eigen::MatrixXd MinkowskiNorm::energy_hessian(const Eigen::VectorXd& y) const {
  double f = value(y);
  Eigen::VectorXd gf = gradient(y);
  Eigen::MatrixXd out = 2.0 * (gf * gf.transpose() + f * hessian(y));
  return 0.5 * (out + out.transpose()).eval();
}

Eigen::MatrixXd MinkowskiNorm::fd_energy_hessian(const Eigen::VectorXd& y) const {
  check_nonzero(y);
  const double h = kFdStepRel * y.norm();
  const int n = dim();
  Eigen::MatrixXd out(n, n);
  const double e0 = energy(y);
  Eigen::VectorXd w = y;
  for (int i = 0; i < n; ++i) {
    w[i] = y[i] + h;
    double epp = energy(w);
    w[i] = y[i] - h;
    double emm = energy(w);
    w[i] = y[i];
    out(i, i) = (epp - 2.0 * e0 + emm) / (h * h);
    for (int j = i + 1; j < n; ++j) {
      w[i] = y[i] + h; w[j] = y[j] + h;
      double app = energy(w);
      w[j] = y[j] - h;
      double apm = energy(w);
      w[i] = y[i] - h; w[j] = y[j] + h;
      double amp = energy(w);
      w[j] = y[j] - h;
      double amm = energy(w);
      w[i] = y[i]; w[j] = y[j];
      out(i, j) = out(j, i) = (app - apm - amp + amm) / (4.0 * h * h);
    }
  }
  return 0.5 * (out + out.transpose());
}

// ---------------------------------------------------------------------------
// Quadratic

QuadraticNorm::QuadraticNorm(Eigen::MatrixXd q)
    : MinkowskiNorm(static_cast<int>(q.rows()), Kind::Quadratic), q_(std::move(q)) {
  if (q_.rows() != q_.cols()) throw Error(ErrorCode::InputError, "Q must be square");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (q_ + q_.transpose()));
  if (es.eigenvalues().minCoeff() <= 0.0)
    throw Error(ErrorCode::InputError, "Q must be positive definite");
}

double QuadraticNorm::value(const Eigen::VectorXd& y) const {
  return std::sqrt(std::max(0.0, y.dot(q_ * y)));
}

Eigen::VectorXd QuadraticNorm::gradient(const Eigen::VectorXd& y) const {
  check_nonzero(y);
  return (q_ * y) / value(y);
}

Eigen::MatrixXd QuadraticNorm::hessian(const Eigen::VectorXd& y) const {
  check_nonzero(y);
  Eigen::VectorXd g = gradient(y);
  return (q_ - g * g.transpose()) / value(y);
}

Eigen::MatrixXd QuadraticNorm::energy_hessian(const Eigen::VectorXd& y) const {
  check_nonzero(y);
  return 2.0 * q_;
}

// ---------------------------------------------------------------------------
// Randers closed form

RandersNorm::RandersNorm(Eigen::MatrixXd h, Eigen::VectorXd wind)
    : MinkowskiNorm(static_cast<int>(h.rows()), Kind::ZermeloRanders),
      h_(std::move(h)),
      wind_(std::move(wind)) {
  if (h_.rows() != h_.cols() || wind_.size() != h_.rows())
    throw Error(ErrorCode::InputError, "Randers data dimension mismatch");
  alpha_ = 1.0 - wind_.dot(h_ * wind_);
  if (alpha_ <= 0.0)
    throw Error(ErrorCode::InvalidDatum, "navigation wind has h-norm >= 1");
}

double RandersNorm::value(const Eigen::VectorXd& u) const {
  double a = u.dot(h_ * u);
  double b = u.dot(h_ * wind_);
  double s = std::sqrt(b * b + alpha_ * a);
  return (s - b) / alpha_;
}

Eigen::VectorXd RandersNorm::gradient(const Eigen::VectorXd& u) const {
  check_nonzero(u);
  double a = u.dot(h_ * u);
  Eigen::VectorXd hw = h_ * wind_;
  double b = u.dot(hw);
  double s = std::sqrt(b * b + alpha_ * a);
  Eigen::VectorXd ds = (b * hw + alpha_ * (h_ * u)) / s;
  return (ds - hw) / alpha_;
}

Eigen::MatrixXd RandersNorm::hessian(const Eigen::VectorXd& u) const {
  check_nonzero(u);
  double a = u.dot(h_ * u);
  Eigen::VectorXd hw = h_ * wind_;
  double b = u.dot(hw);
  double s = std::sqrt(b * b + alpha_ * a);
  Eigen::VectorXd ds = (b * hw + alpha_ * (h_ * u)) / s;
  Eigen::MatrixXd d2s = (hw * hw.transpose() + alpha_ * h_ - ds * ds.transpose()) / s;
  return d2s / alpha_;
}

// ---------------------------------------------------------------------------
// Implicit navigation

NavigationDatum::NavigationDatum(NormPtr base_norm, Eigen::VectorXd w)
    : base(std::move(base_norm)), wind(std::move(w)) {
  if (!base) throw Error(ErrorCode::InputError, "navigation base is null");
  if (wind.size() != base->dim())
    throw Error(ErrorCode::InputError, "wind dimension mismatch");
  if (wind.norm() > 0.0 && base->value(wind) >= 1.0)
    throw Error(ErrorCode::InvalidDatum, "navigation requires F(W) < 1");
}

double solve_navigation(const NavigationDatum& datum, const Eigen::VectorXd& u) {
  const auto& base = *datum.base;
  const auto& w = datum.wind;
  if (u.size() != base.dim()) throw Error(ErrorCode::InputError, "vector dimension mismatch");
  double fu = base.value(u);
  if (fu == 0.0) return 0.0;
  double fw = base.value(w);
  double fmw = base.value(-w);
  double worst = std::max(fw, fmw);
  if (worst >= 1.0) throw Error(ErrorCode::InvalidDatum, "navigation requires F(+-W) < 1");

  auto phi = [&](double lam) { return base.value(u - lam * w) - lam; };
  double lo = 0.0, hi = fu / (1.0 - worst) + 1e-12;
  // phi is strictly decreasing (slope <= -(1 - F(-W))), so the root is unique.
  for (int it = 0; it < 100 && hi - lo > kNavigationTol; ++it) {
    double mid = 0.5 * (lo + hi);
    if (phi(mid) > 0.0)
      lo = mid;
    else
      hi = mid;
  }
  double lam = 0.5 * (lo + hi);
  for (int it = 0; it < 2; ++it) {  // Newton polish
    Eigen::VectorXd z = u - lam * w;
    if (z.norm() < 1e-300) break;
    double slope = -base.gradient(z).dot(w) - 1.0;
    double next = lam - phi(lam) / slope;
    if (next > 0.0 && std::isfinite(next)) lam = next;
  }
  return std::max(0.0, lam);
}

NavigationNorm::NavigationNorm(NavigationDatum datum)
    : MinkowskiNorm(datum.base->dim(), Kind::ImplicitNavigation), datum_(std::move(datum)) {}

double NavigationNorm::value(const Eigen::VectorXd& y) const {
  return solve_navigation(datum_, y);
}

Eigen::VectorXd NavigationNorm::gradient(const Eigen::VectorXd& y) const {
  check_nonzero(y);
  double lam = value(y);
  Eigen::VectorXd z = y - lam * datum_.wind;
  Eigen::VectorXd psi = datum_.base->gradient(z);
  double d = 1.0 + psi.dot(datum_.wind);
  return psi / d;
}

Eigen::MatrixXd NavigationNorm::hessian(const Eigen::VectorXd& y) const {
  check_nonzero(y);
  double lam = value(y);
  Eigen::VectorXd z = y - lam * datum_.wind;
  Eigen::VectorXd psi = datum_.base->gradient(z);
  double d = 1.0 + psi.dot(datum_.wind);
  Eigen::MatrixXd jac =
      Eigen::MatrixXd::Identity(dim(), dim()) - datum_.wind * (psi / d).transpose();
  return jac.transpose() * datum_.base->hessian(z) * jac / d;
}

// ---------------------------------------------------------------------------
// Glued norm

GluedNorm::GluedNorm(std::vector<NormPtr> components, WeightFn weight_fn,
                     PureComponentFn pure_component_fn, Eigen::MatrixXd bi_inner,
                     std::uint64_t validation_seed, int validation_samples)
    : MinkowskiNorm(components.empty() ? 0 : components.front()->dim(), Kind::Glued),
      components_(std::move(components)),
      weight_fn_(std::move(weight_fn)),
      pure_fn_(std::move(pure_component_fn)),
      bi_inner_(std::move(bi_inner)) {
  if (components_.empty()) throw Error(ErrorCode::InputError, "glued norm needs components");
  for (const auto& c : components_)
    if (c->dim() != dim()) throw Error(ErrorCode::InputError, "component dimension mismatch");
  if (bi_inner_.size() == 0) bi_inner_ = Eigen::MatrixXd::Identity(dim(), dim());

  Rng rng(validation_seed);
  for (int s = 0; s < validation_samples; ++s) {
    Eigen::VectorXd dir = bi_normalize(rng.unit_vector(dim()));
    Eigen::VectorXd w = weight_fn_(dir);
    if (w.size() != static_cast<Eigen::Index>(components_.size()))
      throw Error(ErrorCode::PartitionError, "weight vector size mismatch");
    if (w.minCoeff() < -kWeightSumTol)
      throw Error(ErrorCode::PartitionError, "negative partition weight");
    if (std::abs(w.sum() - 1.0) > kWeightSumTol)
      throw Error(ErrorCode::PartitionError, "partition weights do not sum to 1");
  }
}

Eigen::MatrixXd GluedNorm::energy_hessian(const Eigen::VectorXd& y) const {
  int pure = pure_component(y);
  if (pure >= 0) return components_[static_cast<std::size_t>(pure)]->energy_hessian(y);
  return fd_energy_hessian(y);
}

Eigen::VectorXd GluedNorm::bi_normalize(const Eigen::VectorXd& y) const {
  double n = std::sqrt(y.dot(bi_inner_ * y));
  return y / n;
}

Eigen::VectorXd GluedNorm::weights(const Eigen::VectorXd& direction) const {
  return weight_fn_(direction);
}

int GluedNorm::pure_component(const Eigen::VectorXd& y) const {
  return pure_fn_ ? pure_fn_(bi_normalize(y)) : -1;
}

double GluedNorm::value(const Eigen::VectorXd& y) const {
  if (y.norm() < 1e-300) return 0.0;
  int pure = pure_component(y);
  if (pure >= 0) return components_[pure]->value(y);
  Eigen::VectorXd w = weight_fn_(bi_normalize(y));
  double out = 0.0;
  for (std::size_t i = 0; i < components_.size(); ++i)
    if (w[static_cast<Eigen::Index>(i)] != 0.0)
      out += w[static_cast<Eigen::Index>(i)] * components_[i]->value(y);
  return out;
}

// ---------------------------------------------------------------------------
// Free operations

Eigen::MatrixXd fundamental_tensor(const MinkowskiNorm& norm, const Eigen::VectorXd& y) {
  if (y.size() != norm.dim()) throw Error(ErrorCode::InputError, "vector dimension mismatch");
  if (y.norm() < 1e-300) throw Error(ErrorCode::DomainError, "fundamental tensor at y = 0");
  Eigen::MatrixXd g = 0.5 * norm.energy_hessian(y);
  g = 0.5 * (g + g.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g);
  double min_eig = es.eigenvalues().minCoeff();
  if (min_eig <= 0.0)
    throw ConvexityError("fundamental tensor not positive definite", min_eig);
  return g;
}

double inner_at(const MinkowskiNorm& norm, const Eigen::VectorXd& y, const Eigen::VectorXd& u,
                const Eigen::VectorXd& v) {
  Eigen::MatrixXd g = fundamental_tensor(norm, y);
  return u.dot(g * v);
}

NormPtr zermelo_randers_closed_form(const Eigen::MatrixXd& h, const Eigen::VectorXd& wind) {
  return std::make_shared<RandersNorm>(h, wind);
}

double strong_convexity_margin(const MinkowskiNorm& norm, int n_samples, std::uint64_t seed) {
  if (n_samples < 1) throw Error(ErrorCode::InputError, "n_samples must be >= 1");
  double margin = std::numeric_limits<double>::infinity();
  Rng rng(seed);
  for (int s = 0; s < n_samples; ++s) {
    Eigen::VectorXd y = rng.unit_vector(norm.dim());
    Eigen::MatrixXd g = 0.5 * norm.energy_hessian(y);
    g = 0.5 * (g + g.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g);
    margin = std::min(margin, es.eigenvalues().minCoeff());
  }
  return margin;
}

}  // namespace flagcurv

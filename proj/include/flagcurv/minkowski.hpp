#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

namespace flagcurv {

/// Minkowski norm F on R^n: positively 1-homogeneous, strongly convex away
/// from 0, F(0) = 0 by continuity. Derivatives are of F itself; the
/// fundamental tensor g = grad F (x) grad F^T + F hess F is assembled from them.
///
/// The finite-difference fallbacks differentiate F^2 with central stencils at
/// step 1e-4 * |y|; kinds with closed-form derivatives override them, and the
/// test suites keep the finite-difference route as the independent oracle.
class MinkowskiNorm {
 public:
  enum class Kind { Quadratic, ZermeloRanders, ImplicitNavigation, Glued };

  explicit MinkowskiNorm(int dim, Kind kind) : dim_(dim), kind_(kind) {}
  virtual ~MinkowskiNorm() = default;

  int dim() const { return dim_; }
  Kind kind() const { return kind_; }

  virtual double value(const Eigen::VectorXd& y) const = 0;

  /// grad of F at y != 0.
  virtual Eigen::VectorXd gradient(const Eigen::VectorXd& y) const;
  /// Hessian of F at y != 0.
  virtual Eigen::MatrixXd hessian(const Eigen::VectorXd& y) const;

  double energy(const Eigen::VectorXd& y) const {  // F^2
    double f = value(y);
    return f * f;
  }
  Eigen::VectorXd energy_gradient(const Eigen::VectorXd& y) const;
  /// Symmetrized Hessian of F^2. The default composes gradient() and
  /// hessian(), so kinds with closed-form derivatives stay closed-form here;
  /// with the finite-difference defaults it reduces to the F^2 stencil.
  virtual Eigen::MatrixXd energy_hessian(const Eigen::VectorXd& y) const;

 protected:
  void check_nonzero(const Eigen::VectorXd& y) const;
  /// Central finite differences of F^2 at step 1e-4 |y|.
  Eigen::MatrixXd fd_energy_hessian(const Eigen::VectorXd& y) const;

 private:
  int dim_;
  Kind kind_;
};

using NormPtr = std::shared_ptr<const MinkowskiNorm>;

/// F(y) = sqrt(y^T Q y) for SPD Q.
class QuadraticNorm : public MinkowskiNorm {
 public:
  explicit QuadraticNorm(Eigen::MatrixXd q);
  const Eigen::MatrixXd& matrix() const { return q_; }

  double value(const Eigen::VectorXd& y) const override;
  Eigen::VectorXd gradient(const Eigen::VectorXd& y) const override;
  Eigen::MatrixXd hessian(const Eigen::VectorXd& y) const override;
  Eigen::MatrixXd energy_hessian(const Eigen::VectorXd& y) const override;

 private:
  Eigen::MatrixXd q_;
};

/// Closed-form solution of the navigation equation for a quadratic base:
/// F(u) is the positive root of  alpha L^2 + 2 h(u,W) L - h(u,u) = 0,
/// alpha = 1 - h(W,W). Agrees with solve_navigation(quadratic(h), W) everywhere.
class RandersNorm : public MinkowskiNorm {
 public:
  RandersNorm(Eigen::MatrixXd h, Eigen::VectorXd wind);
  const Eigen::MatrixXd& base_matrix() const { return h_; }
  const Eigen::VectorXd& wind() const { return wind_; }

  double value(const Eigen::VectorXd& y) const override;
  Eigen::VectorXd gradient(const Eigen::VectorXd& y) const override;
  Eigen::MatrixXd hessian(const Eigen::VectorXd& y) const override;

 private:
  Eigen::MatrixXd h_;
  Eigen::VectorXd wind_;
  double alpha_;
};

/// Navigation datum (F, W) with F(W) < 1; produces the deformed norm
/// F~ with F~(y + F(y) W) = F(y).
struct NavigationDatum {
  NormPtr base;
  Eigen::VectorXd wind;

  NavigationDatum(NormPtr base_norm, Eigen::VectorXd w);
};

/// The unique lambda >= 0 with base(u - lambda W) = lambda. Bisection on
/// [0, base(u)/(1 - base(W))] to 1e-12, then two Newton polish steps.
double solve_navigation(const NavigationDatum& datum, const Eigen::VectorXd& u);

/// Implicitly defined navigation norm for an arbitrary base; derivatives come
/// from the implicit function theorem applied to the navigation equation.
class NavigationNorm : public MinkowskiNorm {
 public:
  explicit NavigationNorm(NavigationDatum datum);
  const NavigationDatum& datum() const { return datum_; }

  double value(const Eigen::VectorXd& y) const override;
  Eigen::VectorXd gradient(const Eigen::VectorXd& y) const override;
  Eigen::MatrixXd hessian(const Eigen::VectorXd& y) const override;

 private:
  NavigationDatum datum_;
};

/// Partition-of-unity glue F(y) = sum_i mu_i(y/|y|_bi) F_i(y).
/// weight_fn returns the component weights at a bi-unit direction;
/// pure_component_fn returns the component index whose weight is exactly 1 on
/// an open cone around the direction (or -1), which makes the glue evaluate
/// through that single component there.
class GluedNorm : public MinkowskiNorm {
 public:
  using WeightFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;
  using PureComponentFn = std::function<int(const Eigen::VectorXd&)>;

  GluedNorm(std::vector<NormPtr> components, WeightFn weight_fn,
            PureComponentFn pure_component_fn,
            Eigen::MatrixXd bi_inner = Eigen::MatrixXd(),
            std::uint64_t validation_seed = 2024, int validation_samples = 256);

  const std::vector<NormPtr>& components() const { return components_; }
  Eigen::VectorXd weights(const Eigen::VectorXd& direction) const;
  /// Component index whose weight is 1 near this direction, or -1.
  int pure_component(const Eigen::VectorXd& y) const;
  Eigen::VectorXd bi_normalize(const Eigen::VectorXd& y) const;

  double value(const Eigen::VectorXd& y) const override;
  /// Delegates to the pure component where one exists; the finite-difference
  /// fallback handles blending zones (its C^2 weights support second
  /// derivatives, which is all the margin scan needs).
  Eigen::MatrixXd energy_hessian(const Eigen::VectorXd& y) const override;

 private:
  std::vector<NormPtr> components_;
  WeightFn weight_fn_;
  PureComponentFn pure_fn_;
  Eigen::MatrixXd bi_inner_;
};

/// g_ij(y) = 1/2 d2(F^2)/dy_i dy_j, symmetrized. Quadratic kind returns Q
/// exactly. Throws ConvexityError (carrying the eigenvalue) if not positive
/// definite, DomainError for y = 0.
Eigen::MatrixXd fundamental_tensor(const MinkowskiNorm& norm, const Eigen::VectorXd& y);

/// <u,v>_y = u^T g(y) v.
double inner_at(const MinkowskiNorm& norm, const Eigen::VectorXd& y, const Eigen::VectorXd& u,
                const Eigen::VectorXd& v);

/// Randers-type norm solving the navigation equation for quadratic base h and
/// wind W with h(W,W) < 1.
NormPtr zermelo_randers_closed_form(const Eigen::MatrixXd& h, const Eigen::VectorXd& wind);

/// Minimum eigenvalue of the fundamental tensor over seeded unit directions;
/// a positive value certifies sampled strong convexity, a nonpositive one
/// signals that epsilon must shrink. Never throws on nonconvexity.
double strong_convexity_margin(const MinkowskiNorm& norm, int n_samples, std::uint64_t seed);

}  // namespace flagcurv

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <Eigen/Dense>
#include <cmath>

#include "doctest.h"
#include "flagcurv/errors.hpp"
#include "flagcurv/minkowski.hpp"
#include "flagcurv/rng.hpp"

using namespace flagcurv;

namespace {

// Independent finite-difference Hessian of F^2, value() calls only. This is
// the oracle the closed-form derivative paths are checked against.
Eigen::MatrixXd fd_energy_hessian(const MinkowskiNorm& norm, const Eigen::VectorXd& y,
                                  double h) {
  const int n = norm.dim();
  Eigen::MatrixXd out(n, n);
  auto e2 = [&](const Eigen::VectorXd& w) { return norm.energy(w); };
  double e0 = e2(y);
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd ei = Eigen::VectorXd::Zero(n);
    ei[i] = h;
    out(i, i) = (e2(y + ei) - 2.0 * e0 + e2(y - ei)) / (h * h);
    for (int j = i + 1; j < n; ++j) {
      Eigen::VectorXd ej = Eigen::VectorXd::Zero(n);
      ej[j] = h;
      out(i, j) = out(j, i) =
          (e2(y + ei + ej) - e2(y + ei - ej) - e2(y - ei + ej) + e2(y - ei - ej)) /
          (4.0 * h * h);
    }
  }
  return out;
}

Eigen::MatrixXd identity2() { return Eigen::MatrixXd::Identity(2, 2); }

Eigen::VectorXd vec2(double a, double b) {
  Eigen::VectorXd v(2);
  v << a, b;
  return v;
}

}  // namespace

TEST_CASE("fundamental tensor of a quadratic norm is Q") {
  Eigen::MatrixXd q(2, 2);
  q << 2.0, 0.3, 0.3, 1.0;
  QuadraticNorm norm(q);
  Rng rng(5);
  for (int trial = 0; trial < 8; ++trial) {
    Eigen::VectorXd y = rng.gaussian_vector(2);
    if (y.norm() < 1e-3) continue;
    CHECK((fundamental_tensor(norm, y) - q).cwiseAbs().maxCoeff() <= 1e-12);
  }
  CHECK_THROWS_AS(fundamental_tensor(norm, Eigen::VectorXd::Zero(2)), Error);
}

TEST_CASE("fundamental tensor is 0-homogeneous") {
  RandersNorm norm(identity2(), vec2(0.3, 0.1));
  Eigen::VectorXd y = vec2(0.7, -0.4);
  Eigen::MatrixXd g1 = fundamental_tensor(norm, y);
  Eigen::MatrixXd g2 = fundamental_tensor(norm, 2.0 * y);
  CHECK((g1 - g2).cwiseAbs().maxCoeff() <= 1e-6);
}

TEST_CASE("Randers closed form matches the finite-difference oracle") {
  RandersNorm norm(identity2(), vec2(0.5, 0.0));
  Eigen::VectorXd y = vec2(1.0, 0.0);
  Eigen::MatrixXd g = fundamental_tensor(norm, y);
  Eigen::MatrixXd g_fd = 0.5 * fd_energy_hessian(norm, y, 1e-4);
  CHECK((g - g_fd).cwiseAbs().maxCoeff() <= 1e-6);

  Rng rng(7);
  for (int trial = 0; trial < 16; ++trial) {
    Eigen::VectorXd w = rng.unit_vector(2);
    Eigen::MatrixXd ga = fundamental_tensor(norm, w);
    Eigen::MatrixXd gf = 0.5 * fd_energy_hessian(norm, w, 1e-4 * w.norm());
    CHECK((ga - gf).cwiseAbs().maxCoeff() <= 1e-6);
  }
}

TEST_CASE("navigation norm matches the finite-difference oracle") {
  auto base = std::make_shared<QuadraticNorm>(identity2());
  NavigationNorm norm(NavigationDatum(base, vec2(0.4, 0.2)));
  Rng rng(11);
  for (int trial = 0; trial < 8; ++trial) {
    Eigen::VectorXd w = rng.unit_vector(2);
    Eigen::MatrixXd ga = 0.5 * norm.energy_hessian(w);
    Eigen::MatrixXd gf = 0.5 * fd_energy_hessian(norm, w, 1e-4);
    CHECK((ga - gf).cwiseAbs().maxCoeff() <= 1e-6);
  }
}

TEST_CASE("inner_at: symmetry and Euler identity") {
  RandersNorm norm(identity2(), vec2(0.2, 0.3));
  Rng rng(13);
  for (int trial = 0; trial < 8; ++trial) {
    Eigen::VectorXd y = rng.unit_vector(2);
    Eigen::VectorXd u = rng.gaussian_vector(2), v = rng.gaussian_vector(2);
    CHECK(inner_at(norm, y, u, v) == doctest::Approx(inner_at(norm, y, v, u)).epsilon(1e-12));
    double f = norm.value(y);
    CHECK(inner_at(norm, y, y, y) == doctest::Approx(f * f).epsilon(1e-6));
  }
  Eigen::MatrixXd q(2, 2);
  q << 3.0, 0.5, 0.5, 2.0;
  QuadraticNorm quad(q);
  Eigen::VectorXd u = vec2(1.0, 2.0), v = vec2(-0.5, 1.0);
  CHECK(inner_at(quad, vec2(0.3, 0.9), u, v) == doctest::Approx(u.dot(q * v)).epsilon(1e-12));
}

TEST_CASE("solve_navigation: hand-solved values") {
  auto base = std::make_shared<QuadraticNorm>(identity2());

  // zero wind: lambda = |u|
  NavigationDatum still(base, vec2(0.0, 0.0));
  CHECK(solve_navigation(still, vec2(3.0, 4.0)) == doctest::Approx(5.0).epsilon(1e-12));
  CHECK(solve_navigation(still, vec2(0.0, 0.0)) == 0.0);

  // |1 - lambda/2| = lambda  =>  lambda = 2/3 ; with u = (-1,0): 1 + lambda/2 = lambda => 2
  NavigationDatum datum(base, vec2(0.5, 0.0));
  CHECK(solve_navigation(datum, vec2(1.0, 0.0)) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(solve_navigation(datum, vec2(-1.0, 0.0)) == doctest::Approx(2.0).epsilon(1e-12));

  CHECK_THROWS_AS(NavigationDatum(base, vec2(1.0, 0.0)), Error);
}

TEST_CASE("navigation consistency: base(u - lambda W) = lambda") {
  auto base = std::make_shared<QuadraticNorm>(identity2());
  NavigationDatum datum(base, vec2(0.5, 0.0));
  Rng rng(17);
  for (int s = 0; s < 1000; ++s) {
    Eigen::VectorXd u = rng.gaussian_vector(2);
    double lam = solve_navigation(datum, u);
    CHECK(std::abs(base->value(u - lam * datum.wind) - lam) <= 1e-10);
  }
}

TEST_CASE("closed form and implicit solver agree to 1e-10") {
  Rng winds(23);
  for (int w = 0; w < 3; ++w) {
    Eigen::VectorXd wind = 0.6 * winds.uniform() * winds.unit_vector(2);
    RandersNorm closed(identity2(), wind);
    NavigationDatum datum(std::make_shared<QuadraticNorm>(identity2()), wind);
    Rng rng(derive_seed(23, static_cast<std::uint64_t>(w)));
    for (int s = 0; s < 1000; ++s) {
      Eigen::VectorXd u = rng.gaussian_vector(2);
      double a = closed.value(u);
      double b = solve_navigation(datum, u);
      CHECK(std::abs(a - b) <= 1e-10 * std::max(1.0, std::abs(a)));
    }
  }
}

TEST_CASE("navigating back with -W recovers the base norm") {
  Eigen::VectorXd wind = vec2(0.4, -0.2);
  auto tilde = std::make_shared<RandersNorm>(identity2(), wind);
  NavigationNorm back(NavigationDatum(tilde, -wind));
  QuadraticNorm base(identity2());
  Rng rng(29);
  for (int s = 0; s < 200; ++s) {
    Eigen::VectorXd u = rng.gaussian_vector(2);
    CHECK(std::abs(back.value(u) - base.value(u)) <= 1e-8 * std::max(1.0, base.value(u)));
  }
}

TEST_CASE("positive 1-homogeneity and triangle inequality") {
  RandersNorm norm(identity2(), vec2(0.3, 0.4));
  Rng rng(31);
  for (int s = 0; s < 200; ++s) {
    Eigen::VectorXd y = rng.gaussian_vector(2);
    double lam = std::abs(rng.gaussian()) + 0.1;
    CHECK(norm.value(lam * y) == doctest::Approx(lam * norm.value(y)).epsilon(1e-10));
    Eigen::VectorXd u = rng.gaussian_vector(2), v = rng.gaussian_vector(2);
    CHECK(norm.value(u + v) <= norm.value(u) + norm.value(v) + 1e-10);
  }
  CHECK(norm.value(Eigen::VectorXd::Zero(2)) == 0.0);
}

TEST_CASE("zermelo closed form: frozen example values") {
  NormPtr norm = zermelo_randers_closed_form(identity2(), vec2(0.5, 0.0));
  CHECK(norm->value(vec2(1.0, 0.0)) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  NavigationDatum datum(std::make_shared<QuadraticNorm>(identity2()), vec2(0.5, 0.0));
  CHECK(norm->value(vec2(0.0, 1.0)) ==
        doctest::Approx(solve_navigation(datum, vec2(0.0, 1.0))).epsilon(1e-10));

  NormPtr calm = zermelo_randers_closed_form(identity2(), vec2(0.0, 0.0));
  QuadraticNorm quad(identity2());
  Rng rng(37);
  for (int s = 0; s < 32; ++s) {
    Eigen::VectorXd u = rng.gaussian_vector(2);
    CHECK(calm->value(u) == doctest::Approx(quad.value(u)).epsilon(1e-15));
  }
  CHECK_THROWS_AS(zermelo_randers_closed_form(identity2(), vec2(1.1, 0.0)), Error);
}

TEST_CASE("glued norm: single component and equal components") {
  auto q = std::make_shared<QuadraticNorm>(identity2());
  auto one = [](const Eigen::VectorXd&) {
    Eigen::VectorXd w(1);
    w << 1.0;
    return w;
  };
  GluedNorm single({q}, one, [](const Eigen::VectorXd&) { return 0; });
  Rng rng(41);
  for (int s = 0; s < 32; ++s) {
    Eigen::VectorXd y = rng.gaussian_vector(2);
    CHECK(single.value(y) == q->value(y));  // short-circuit: bit-identical
  }

  // all components equal F: any admissible partition gives F back
  auto r = std::make_shared<RandersNorm>(identity2(), vec2(0.2, 0.1));
  auto blend = [](const Eigen::VectorXd& d) {
    Eigen::VectorXd w(2);
    double t = 0.5 + 0.4 * d[0];
    w << t, 1.0 - t;
    return w;
  };
  GluedNorm mixed({r, r}, blend, [](const Eigen::VectorXd&) { return -1; });
  for (int s = 0; s < 32; ++s) {
    Eigen::VectorXd y = rng.gaussian_vector(2);
    if (y.norm() < 1e-6) continue;
    CHECK(mixed.value(y) == doctest::Approx(r->value(y)).epsilon(1e-14));
  }

  // weights that do not sum to 1 are rejected at construction
  auto broken = [](const Eigen::VectorXd&) {
    Eigen::VectorXd w(2);
    w << 0.6, 0.6;
    return w;
  };
  CHECK_THROWS_AS(GluedNorm({r, r}, broken, nullptr), Error);
}

TEST_CASE("strong convexity margin") {
  CHECK(strong_convexity_margin(QuadraticNorm(identity2()), 64, 3) == doctest::Approx(1.0));
  Eigen::MatrixXd diag(2, 2);
  diag << 1.0, 0.0, 0.0, 4.0;
  CHECK(strong_convexity_margin(QuadraticNorm(diag), 64, 3) == doctest::Approx(1.0));
  CHECK(strong_convexity_margin(RandersNorm(identity2(), vec2(0.5, 0.0)), 64, 3) > 0.0);
}

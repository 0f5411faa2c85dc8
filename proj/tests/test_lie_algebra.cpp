#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <Eigen/Dense>

#include "doctest.h"
#include "flagcurv/errors.hpp"
#include "flagcurv/lie_algebra.hpp"
#include "flagcurv/rng.hpp"

using namespace flagcurv;

namespace {

Eigen::VectorXd basis_vector(int n, int i) {
  Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
  e[i] = 1.0;
  return e;
}

// su2 with c[1][2][3] bumped to 1.01 while the other cyclic entries stay 1.
LieAlgebra perturbed_su2() {
  LieAlgebra good = su2_algebra();
  std::vector<Eigen::MatrixXd> ads;
  for (int i = 0; i < 3; ++i) ads.push_back(good.ad_basis(i));
  ads[0](2, 1) = 1.01;   // [e1,e2] = 1.01 e3
  ads[1](2, 0) = -1.01;  // antisymmetric partner
  return LieAlgebra(std::move(ads), Eigen::MatrixXd::Identity(3, 3), {"e1", "e2", "e3"});
}

}  // namespace

TEST_CASE("bracket reproduces the structure constants") {
  LieAlgebra alg = su2_algebra();
  Eigen::VectorXd e1 = basis_vector(3, 0), e2 = basis_vector(3, 1), e3 = basis_vector(3, 2);
  CHECK((alg.bracket(e1, e2) - e3).norm() == doctest::Approx(0.0));
  CHECK((alg.bracket(e2, e3) - e1).norm() == doctest::Approx(0.0));
  CHECK((alg.bracket(e3, e1) - e2).norm() == doctest::Approx(0.0));

  Rng rng(3);
  Eigen::VectorXd x = rng.gaussian_vector(3);
  CHECK(alg.bracket(x, x).norm() <= 1e-14);

  LieAlgebra sr = su2_plus_r_algebra();
  CHECK(sr.bracket(basis_vector(4, 2), basis_vector(4, 3)).norm() == 0.0);
}

TEST_CASE("bracket is bilinear") {
  LieAlgebra alg = su2_plus_su2_algebra();
  Rng rng(17);
  for (int trial = 0; trial < 32; ++trial) {
    Eigen::VectorXd x = rng.gaussian_vector(6), z = rng.gaussian_vector(6),
                    y = rng.gaussian_vector(6);
    double a = rng.gaussian(), b = rng.gaussian();
    Eigen::VectorXd lhs = alg.bracket(a * x + b * z, y);
    Eigen::VectorXd rhs = a * alg.bracket(x, y) + b * alg.bracket(z, y);
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("ad is antisymmetric for the bi-invariant inner product") {
  for (const char* name : {"su2", "su2xR", "su2xsu2"}) {
    LieAlgebra alg = builtin_algebra(name);
    Rng rng(29);
    for (int trial = 0; trial < 16; ++trial) {
      Eigen::VectorXd v = rng.gaussian_vector(alg.dim());
      Eigen::VectorXd x = rng.gaussian_vector(alg.dim());
      Eigen::VectorXd y = rng.gaussian_vector(alg.dim());
      double lhs = alg.inner(alg.bracket(v, x), y);
      double rhs = -alg.inner(x, alg.bracket(v, y));
      CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
    }
  }
}

TEST_CASE("validate: built-ins pass, perturbed su2 fails") {
  ValidationReport rep = su2_algebra().validate();
  CHECK(rep.passed);
  CHECK(rep.center_dim == 0);
  CHECK(rep.rank == 1);

  // Scaling c[1][2][3] alone still satisfies Jacobi (a rescaled basis of the
  // same algebra); the identity inner product stops being ad-invariant.
  ValidationReport bad = perturbed_su2().validate();
  CHECK_FALSE(bad.passed);
  CHECK(bad.max_antisymmetry <= 1e-12);
  CHECK(bad.max_jacobi <= 1e-12);
  CHECK(bad.max_ad_invariance == doctest::Approx(0.01).epsilon(1e-9));

  // A genuinely broken Jacobi identity: [e1,e2] = e3 + 0.01 e1.
  {
    LieAlgebra good = su2_algebra();
    std::vector<Eigen::MatrixXd> ads;
    for (int i = 0; i < 3; ++i) ads.push_back(good.ad_basis(i));
    ads[0](0, 1) = 0.01;
    ads[1](0, 0) = -0.01;
    ValidationReport broken =
        LieAlgebra(std::move(ads), Eigen::MatrixXd::Identity(3, 3), {"e1", "e2", "e3"}).validate();
    CHECK_FALSE(broken.passed);
    CHECK(broken.max_jacobi == doctest::Approx(0.01).epsilon(1e-9));
  }

  ValidationReport ab = abelian_algebra(3).validate();
  CHECK(ab.passed);
  CHECK(ab.center_dim == 3);
  CHECK_FALSE(ab.center_dim_ok);

  ValidationReport sr = su2_plus_r_algebra().validate();
  CHECK(sr.passed);
  CHECK(sr.center_dim == 1);
  CHECK(sr.rank == 2);
  CHECK(sr.center_dim_ok);
}

TEST_CASE("centralizer kernels") {
  LieAlgebra su2 = su2_algebra();
  Eigen::MatrixXd c = su2.centralizer(basis_vector(3, 2));
  REQUIRE(c.cols() == 1);
  CHECK(std::abs(std::abs(c(2, 0)) - 1.0) <= 1e-12);

  LieAlgebra ab = abelian_algebra(3);
  CHECK(ab.centralizer(basis_vector(3, 0)).cols() == 3);

  LieAlgebra sr = su2_plus_r_algebra();
  Eigen::VectorXd v = basis_vector(4, 2) + basis_vector(4, 3);
  Eigen::MatrixXd cs = sr.centralizer(v);
  REQUIRE(cs.cols() == 2);
  // span(e3, u0): e1 and e2 components vanish
  CHECK(cs.row(0).cwiseAbs().maxCoeff() <= 1e-10);
  CHECK(cs.row(1).cwiseAbs().maxCoeff() <= 1e-10);

  CHECK_THROWS_AS(su2.centralizer(Eigen::VectorXd::Zero(3)), Error);
}

TEST_CASE("centralizer members commute with v") {
  for (const char* name : {"su2", "su2xR", "su2xsu2"}) {
    LieAlgebra alg = builtin_algebra(name);
    Rng rng(41);
    for (int trial = 0; trial < 8; ++trial) {
      Eigen::VectorXd v = rng.unit_vector(alg.dim());
      Eigen::MatrixXd c = alg.centralizer(v);
      for (int k = 0; k < c.cols(); ++k)
        CHECK(alg.norm(alg.bracket(v, c.col(k))) <= 1e-8);
    }
  }
}

TEST_CASE("rank and genericity") {
  LieAlgebra su2 = su2_algebra();
  auto [r1, g1] = su2.rank_and_genericity(basis_vector(3, 2));
  CHECK(r1 == 1);
  CHECK(g1);

  LieAlgebra sr = su2_plus_r_algebra();
  auto [r2, g2] = sr.rank_and_genericity(basis_vector(4, 2));
  CHECK(r2 == 2);
  CHECK(g2);  // centralizer(e3) = span(e3,u0) already realizes the rank
  auto [r3, g3] = sr.rank_and_genericity(basis_vector(4, 3));
  CHECK(r3 == 2);
  CHECK_FALSE(g3);  // u0 is central: centralizer is everything

  LieAlgebra ss = su2_plus_su2_algebra();
  auto [r4, g4] = ss.rank_and_genericity(basis_vector(6, 2) + basis_vector(6, 5));
  CHECK(r4 == 2);
  CHECK(g4);
}

TEST_CASE("cartan_avoiding finds subalgebras at positive distance") {
  LieAlgebra su2 = su2_algebra();
  auto res = su2.cartan_avoiding(basis_vector(3, 0), 7);
  CHECK(res.basis.cols() == 1);
  CHECK(res.margin >= 1e-3);
  CHECK(su2.norm(su2.project_onto(res.basis, basis_vector(3, 0))) <= 1.0 - 1e-3);
  CHECK(su2.norm(su2.bracket(res.generic_vector, res.basis.col(0))) <= 1e-8);

  LieAlgebra sr = su2_plus_r_algebra();
  auto res2 = sr.cartan_avoiding(basis_vector(4, 0), 7);
  CHECK(res2.basis.cols() == 2);
  CHECK(res2.margin >= 1e-3);

  // u0 itself is excluded: the caps take care of the center directions.
  CHECK_THROWS_AS(sr.cartan_avoiding(basis_vector(4, 3), 7), Error);
}

TEST_CASE("JSON round trip and rejection") {
  // su2 in the interchange schema (only i<j entries).
  const char* good = R"({
    "dim": 3,
    "labels": ["e1","e2","e3"],
    "structure_constants": [[0,1,2,1.0],[1,2,0,1.0],[0,2,1,-1.0]],
    "inner_product": [1,0,0, 0,1,0, 0,0,1]
  })";
  LieAlgebra alg = algebra_from_json_text(good);
  CHECK(alg.dim() == 3);
  CHECK(alg.validate().passed);
  Eigen::VectorXd e1 = basis_vector(3, 0), e2 = basis_vector(3, 1);
  CHECK((alg.bracket(e1, e2) - basis_vector(3, 2)).norm() <= 1e-14);

  // broken Jacobi identity: loader must reject.
  const char* bad = R"({
    "dim": 3,
    "structure_constants": [[0,1,2,1.01],[1,2,0,1.0],[0,2,1,-1.0]],
    "inner_product": [1,0,0, 0,1,0, 0,0,1]
  })";
  CHECK_THROWS_AS(algebra_from_json_text(bad), Error);

  // non-ad-invariant inner product: rejected rather than repaired.
  const char* skew = R"({
    "dim": 3,
    "structure_constants": [[0,1,2,1.0],[1,2,0,1.0],[0,2,1,-1.0]],
    "inner_product": [2,0,0, 0,1,0, 0,0,1]
  })";
  CHECK_THROWS_AS(algebra_from_json_text(skew), Error);
}

TEST_CASE("resolve_algebra accepts built-in names") {
  CHECK(resolve_algebra("su2").dim() == 3);
  CHECK(resolve_algebra("su2xR").dim() == 4);
  CHECK(resolve_algebra("su2xsu2").dim() == 6);
  CHECK(resolve_algebra("abelian5").dim() == 5);
  CHECK_THROWS_AS(resolve_algebra("nope.json"), Error);
}

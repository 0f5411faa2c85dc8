#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <Eigen/Dense>
#include <cmath>

#include "doctest.h"
#include "flagcurv/coset_checks.hpp"
#include "flagcurv/errors.hpp"
#include "flagcurv/invariant_metric.hpp"
#include "flagcurv/lie_algebra.hpp"
#include "flagcurv/rng.hpp"

using namespace flagcurv;

namespace {

Eigen::VectorXd basis_vector(int n, int i) {
  Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
  e[i] = 1.0;
  return e;
}

Eigen::MatrixXd columns(std::initializer_list<Eigen::VectorXd> cols) {
  Eigen::MatrixXd m(cols.begin()->size(), static_cast<Eigen::Index>(cols.size()));
  int c = 0;
  for (const auto& v : cols) m.col(c++) = v;
  return m;
}

}  // namespace

TEST_CASE("reductive decomposition") {
  LieAlgebra su2 = su2_algebra();

  // h = 0: the group case, m = g
  ReductiveSpace group = reductive_decomposition(su2, Eigen::MatrixXd(3, 0));
  CHECK(group.h_dim() == 0);
  CHECK(group.m_dim() == 3);

  // h = span(e3): m = span(e1, e2) and [e3, m] stays in m
  ReductiveSpace s2 = reductive_decomposition(su2, columns({basis_vector(3, 2)}));
  CHECK(s2.m_dim() == 2);
  for (int c = 0; c < 2; ++c) {
    CHECK(std::abs(s2.m_basis(2, c)) <= 1e-12);
    Eigen::VectorXd br = su2.bracket(basis_vector(3, 2), s2.m_basis.col(c));
    CHECK(std::abs(su2.inner(br, basis_vector(3, 2))) <= 1e-10);
  }

  // span(e1 + e2) is abelian, hence a subalgebra; decomposition succeeds
  ReductiveSpace line =
      reductive_decomposition(su2, columns({basis_vector(3, 0) + basis_vector(3, 1)}));
  CHECK(line.h_dim() == 1);
  CHECK(line.m_dim() == 2);

  // span(e1, e2) is not closed under the bracket
  CHECK_THROWS_AS(
      reductive_decomposition(su2, columns({basis_vector(3, 0), basis_vector(3, 1)})),
      Error);
}

TEST_CASE("find_transverse: maximizing witness and euclidean-factor error") {
  LieAlgebra su2 = su2_algebra();

  // group case: |[e1, v]| over unit v orthogonal to e1 peaks at 1
  ReductiveSpace group = reductive_decomposition(su2, Eigen::MatrixXd(3, 0));
  Eigen::VectorXd w1 = basis_vector(3, 0);
  Eigen::VectorXd out = find_transverse(group, w1);
  CHECK(std::abs(su2.inner(out, w1)) <= 1e-12);
  CHECK(su2.norm(out) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(su2.norm(su2.bracket(w1, out)) == doctest::Approx(1.0).epsilon(1e-10));

  // su2 / span(e3): m = span(e1,e2), w1 = e1 -> v1 = +-e2
  ReductiveSpace s2 = reductive_decomposition(su2, columns({basis_vector(3, 2)}));
  Eigen::VectorXd v = find_transverse(s2, basis_vector(3, 0));
  CHECK(std::abs(std::abs(v[1]) - 1.0) <= 1e-10);
  CHECK(std::abs(v[0]) <= 1e-10);
  CHECK(std::abs(v[2]) <= 1e-10);
  CHECK(su2.norm(su2.bracket(basis_vector(3, 0), v)) > 0.0);

  // central w1: the Lemma contradiction case
  LieAlgebra sr = su2_plus_r_algebra();
  ReductiveSpace group4 = reductive_decomposition(sr, Eigen::MatrixXd(4, 0));
  CHECK_THROWS_AS(find_transverse(group4, basis_vector(4, 3)), Error);
}

TEST_CASE("flat_plane_test basics") {
  LieAlgebra su2 = su2_algebra();
  ReductiveSpace group = reductive_decomposition(su2, Eigen::MatrixXd(3, 0));

  // one factor with zero m-part: always flat
  CHECK(flat_plane_test(group, CosetVector{1.0, Eigen::VectorXd::Zero(3)},
                        CosetVector{0.0, basis_vector(3, 0)}));
  // group case span(e1, e2): [e1,e2] = e3 != 0
  CHECK_FALSE(flat_plane_test(group, CosetVector{0.0, basis_vector(3, 0)},
                              CosetVector{0.0, basis_vector(3, 1)}));
  // dependent pair
  CHECK_THROWS_AS(flat_plane_test(group, CosetVector{0.0, basis_vector(3, 2)},
                                  CosetVector{0.0, 2.0 * basis_vector(3, 2)}),
                  Error);
}

TEST_CASE("flat_plane_test is invariant under re-spanning") {
  LieAlgebra sr = su2_plus_r_algebra();
  ReductiveSpace group = reductive_decomposition(sr, Eigen::MatrixXd(4, 0));
  Rng rng(7);
  for (int s = 0; s < 32; ++s) {
    CosetVector u{rng.gaussian(), rng.gaussian_vector(4)};
    CosetVector v{rng.gaussian(), rng.gaussian_vector(4)};
    bool verdict = flat_plane_test(group, u, v);
    // random GL(2) change of the spanning pair
    double a = rng.gaussian(), b = rng.gaussian(), c = rng.gaussian(), d = rng.gaussian();
    if (std::abs(a * d - b * c) < 1e-2) continue;
    CosetVector u2{a * u.t + b * v.t, a * u.m_part + b * v.m_part};
    CosetVector v2{c * u.t + d * v.t, c * u.m_part + d * v.m_part};
    CHECK(flat_plane_test(group, u2, v2) == verdict);
  }
}

TEST_CASE("flat_plane_test agrees with the curvature oracle on the group case") {
  LieAlgebra sr = su2_plus_r_algebra();
  ReductiveSpace group = reductive_decomposition(sr, Eigen::MatrixXd(4, 0));
  Rng rng(11);
  int flats = 0;
  for (int s = 0; s < 100; ++s) {
    Eigen::VectorXd u = rng.gaussian_vector(4), v = rng.gaussian_vector(4);
    bool flat = flat_plane_test(group, CosetVector{0.0, u}, CosetVector{0.0, v});
    bool oracle_flat = biinvariant_sectional_oracle(sr, u, v) <= 1e-6;
    CHECK(flat == oracle_flat);
    if (flat) ++flats;
  }
  // designed flat plane: span(e3, u0) commutes
  CHECK(flat_plane_test(group, CosetVector{0.0, basis_vector(4, 2)},
                        CosetVector{0.0, basis_vector(4, 3)}));
  CHECK(flats == 0);  // random pairs almost surely do not commute
}

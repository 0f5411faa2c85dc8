#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace flagcurv {

struct ValidationReport {
  double max_antisymmetry = 0.0;
  double max_jacobi = 0.0;
  double max_ad_invariance = 0.0;
  double inner_symmetry = 0.0;
  double inner_min_eigenvalue = 0.0;
  int center_dim = 0;
  int rank = 0;
  bool center_dim_ok = false;  // dim c(g) <= 1
  bool passed = false;
  std::string summary() const;
};

/// Compact Lie algebra given by structure constants on a fixed basis together
/// with a bi-invariant inner product <.,.>_bi. All vectors are coordinates in
/// that basis.
class LieAlgebra {
 public:
  /// ad_basis[i] is the matrix of ad_{e_i}, i.e. column j holds [e_i, e_j].
  LieAlgebra(std::vector<Eigen::MatrixXd> ad_basis, Eigen::MatrixXd inner_product,
             std::vector<std::string> labels);

  int dim() const { return dim_; }
  const std::vector<std::string>& labels() const { return labels_; }
  const Eigen::MatrixXd& inner_product() const { return inner_; }
  const Eigen::MatrixXd& ad_basis(int i) const { return ad_basis_[i]; }

  /// Structure constant c[i][j][k] with [e_i,e_j] = sum_k c[i][j][k] e_k.
  double structure_constant(int i, int j, int k) const { return ad_basis_[i](k, j); }

  Eigen::MatrixXd ad(const Eigen::VectorXd& x) const;
  Eigen::VectorXd bracket(const Eigen::VectorXd& x, const Eigen::VectorXd& y) const;

  double inner(const Eigen::VectorXd& x, const Eigen::VectorXd& y) const;
  double norm(const Eigen::VectorXd& x) const;

  ValidationReport validate(std::uint64_t seed = 2024) const;

  /// Orthonormal (w.r.t. <.,.>_bi) basis of ker(ad_v), as matrix columns.
  /// Rank decisions use an SVD cutoff of 1e-9 * sigma_max.
  Eigen::MatrixXd centralizer(const Eigen::VectorXd& v) const;

  /// rank = min centralizer dimension over 64 seeded unit draws;
  /// generic iff dim centralizer(v) equals it.
  std::pair<int, bool> rank_and_genericity(const Eigen::VectorXd& v,
                                           std::uint64_t seed = 2024) const;
  int rank(std::uint64_t seed = 2024) const;

  /// Orthonormal basis of the center (the Abelian factor g_0).
  const Eigen::MatrixXd& center() const { return center_; }
  int center_dim() const { return static_cast<int>(center_.cols()); }
  /// Unit generator u0 of the center when it is one dimensional.
  std::optional<Eigen::VectorXd> center_unit() const;

  struct CartanResult {
    Eigen::MatrixXd basis;         // bi-orthonormal basis of t, columns
    Eigen::VectorXd generic_vector;
    double margin = 0.0;           // 1 - ||proj_t u||_bi
  };

  /// Cartan subalgebra t = centralizer of a generic v with u at positive
  /// bi-distance from t. Draws seeded generic candidates and keeps the one
  /// with the largest margin; accepts when ||proj_t u||_bi <= 1 - 1e-3.
  /// Throws SearchFailure after max_draws failed draws.
  CartanResult cartan_avoiding(const Eigen::VectorXd& u, std::uint64_t seed = 2024,
                               int max_draws = 64) const;

  /// Projection onto the span of bi-orthonormal columns.
  Eigen::VectorXd project_onto(const Eigen::MatrixXd& basis, const Eigen::VectorXd& u) const;

 private:
  int dim_;
  std::vector<Eigen::MatrixXd> ad_basis_;
  Eigen::MatrixXd inner_;
  std::vector<std::string> labels_;
  Eigen::MatrixXd center_;  // computed once at construction

  Eigen::MatrixXd compute_center() const;
  Eigen::MatrixXd kernel_basis(const Eigen::MatrixXd& m) const;
  Eigen::MatrixXd bi_orthonormalize(const Eigen::MatrixXd& basis) const;
};

/// Built-in algebras: "su2", "su2xR", "su2xsu2", "abelianN" (e.g. abelian3).
LieAlgebra builtin_algebra(const std::string& name);
std::vector<std::string> builtin_algebra_names();

LieAlgebra su2_algebra();
LieAlgebra su2_plus_r_algebra();
LieAlgebra su2_plus_su2_algebra();
LieAlgebra abelian_algebra(int n);

/// JSON ingestion. Schema:
///   { "dim": n, "labels": [..], "structure_constants": [[i,j,k,value], ...],
///     "inner_product": [n*n row-major] }
/// Only i<j entries are given; the antisymmetric completion is applied.
/// Indices are 0-based. The loader rejects algebras that fail validate().
LieAlgebra load_algebra_json(const std::string& path);
LieAlgebra algebra_from_json_text(const std::string& text);

/// Resolves a --algebra argument: built-in name or path to a JSON file.
LieAlgebra resolve_algebra(const std::string& source);

}  // namespace flagcurv

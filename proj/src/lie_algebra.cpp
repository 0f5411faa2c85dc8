#include "flagcurv/lie_algebra.hpp"

#include <Eigen/Dense>
#include <fstream>
#include <sstream>

#include "flagcurv/errors.hpp"
#include "flagcurv/rng.hpp"
#include "nlohmann/json.hpp"

namespace flagcurv {

namespace {
constexpr double kInvariantTol = 1e-12;
constexpr double kKernelCutoff = 1e-9;
constexpr double kCartanAccept = 1e-3;
}  // namespace

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::InputError: return "input-error";
    case ErrorCode::DomainError: return "domain-error";
    case ErrorCode::ConvexityViolation: return "convexity-violation";
    case ErrorCode::InvalidDatum: return "invalid-datum";
    case ErrorCode::PartitionError: return "partition-error";
    case ErrorCode::SearchFailure: return "search-failure";
    case ErrorCode::HypothesisViolation: return "hypothesis-violation";
    case ErrorCode::CoveringFailure: return "covering-failure";
    case ErrorCode::DeltaSearchFailure: return "delta-search-failure";
    case ErrorCode::RegionAssignment: return "region-assignment-error";
    case ErrorCode::EpsilonTooLarge: return "epsilon-too-large";
    case ErrorCode::DegenerateFlag: return "degenerate-flag";
    case ErrorCode::NotASubalgebra: return "not-a-subalgebra";
    case ErrorCode::EuclideanFactor: return "euclidean-factor";
    case ErrorCode::BlendingZonePole: return "blending-zone-pole";
    case ErrorCode::IoError: return "io-error";
    case ErrorCode::SchemaError: return "schema-error";
  }
  return "unknown-error";
}

LieAlgebra::LieAlgebra(std::vector<Eigen::MatrixXd> ad_basis, Eigen::MatrixXd inner_product,
                       std::vector<std::string> labels)
    : dim_(static_cast<int>(ad_basis.size())),
      ad_basis_(std::move(ad_basis)),
      inner_(std::move(inner_product)),
      labels_(std::move(labels)) {
  if (dim_ <= 0) throw Error(ErrorCode::InputError, "algebra dimension must be positive");
  for (const auto& m : ad_basis_) {
    if (m.rows() != dim_ || m.cols() != dim_)
      throw Error(ErrorCode::InputError, "ad matrices must be dim x dim");
  }
  if (inner_.rows() != dim_ || inner_.cols() != dim_)
    throw Error(ErrorCode::InputError, "inner product must be dim x dim");
  if (labels_.empty()) {
    for (int i = 0; i < dim_; ++i) labels_.push_back("e" + std::to_string(i + 1));
  }
  if (static_cast<int>(labels_.size()) != dim_)
    throw Error(ErrorCode::InputError, "need one label per basis vector");
  center_ = compute_center();
}

Eigen::MatrixXd LieAlgebra::ad(const Eigen::VectorXd& x) const {
  if (x.size() != dim_) throw Error(ErrorCode::InputError, "vector dimension mismatch");
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(dim_, dim_);
  for (int i = 0; i < dim_; ++i) m.noalias() += x[i] * ad_basis_[i];
  return m;
}

Eigen::VectorXd LieAlgebra::bracket(const Eigen::VectorXd& x, const Eigen::VectorXd& y) const {
  if (x.size() != dim_ || y.size() != dim_)
    throw Error(ErrorCode::InputError, "vector dimension mismatch");
  Eigen::VectorXd out = Eigen::VectorXd::Zero(dim_);
  for (int i = 0; i < dim_; ++i) {
    if (x[i] != 0.0) out.noalias() += x[i] * (ad_basis_[i] * y);
  }
  return out;
}

double LieAlgebra::inner(const Eigen::VectorXd& x, const Eigen::VectorXd& y) const {
  return x.dot(inner_ * y);
}

double LieAlgebra::norm(const Eigen::VectorXd& x) const {
  return std::sqrt(std::max(0.0, inner(x, x)));
}

std::string ValidationReport::summary() const {
  std::ostringstream os;
  os << (passed ? "PASS" : "FAIL")
     << " antisymmetry=" << max_antisymmetry << " jacobi=" << max_jacobi
     << " ad_invariance=" << max_ad_invariance << " inner_symmetry=" << inner_symmetry
     << " inner_min_eig=" << inner_min_eigenvalue << " center_dim=" << center_dim
     << " rank=" << rank;
  return os.str();
}

ValidationReport LieAlgebra::validate(std::uint64_t seed) const {
  ValidationReport rep;
  const int n = dim_;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        rep.max_antisymmetry = std::max(
            rep.max_antisymmetry, std::abs(structure_constant(i, j, k) + structure_constant(j, i, k)));

  Eigen::VectorXd ei = Eigen::VectorXd::Zero(n), ej = Eigen::VectorXd::Zero(n),
                  ek = Eigen::VectorXd::Zero(n);
  for (int i = 0; i < n; ++i) {
    ei.setZero(); ei[i] = 1.0;
    for (int j = 0; j < n; ++j) {
      ej.setZero(); ej[j] = 1.0;
      for (int k = 0; k < n; ++k) {
        ek.setZero(); ek[k] = 1.0;
        Eigen::VectorXd jac =
            bracket(bracket(ei, ej), ek) + bracket(bracket(ej, ek), ei) + bracket(bracket(ek, ei), ej);
        rep.max_jacobi = std::max(rep.max_jacobi, jac.cwiseAbs().maxCoeff());
        double adinv = inner(bracket(ei, ej), ek) + inner(ej, bracket(ei, ek));
        rep.max_ad_invariance = std::max(rep.max_ad_invariance, std::abs(adinv));
      }
    }
  }

  rep.inner_symmetry = (inner_ - inner_.transpose()).cwiseAbs().maxCoeff();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (inner_ + inner_.transpose()));
  rep.inner_min_eigenvalue = es.eigenvalues().minCoeff();

  rep.center_dim = center_dim();
  rep.rank = rank(seed);
  rep.center_dim_ok = rep.center_dim <= 1;
  rep.passed = rep.max_antisymmetry <= kInvariantTol && rep.max_jacobi <= kInvariantTol &&
               rep.max_ad_invariance <= kInvariantTol && rep.inner_symmetry <= kInvariantTol &&
               rep.inner_min_eigenvalue > 0.0;
  return rep;
}

Eigen::MatrixXd LieAlgebra::kernel_basis(const Eigen::MatrixXd& m) const {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  double cutoff = sv.size() > 0 ? kKernelCutoff * sv[0] : 0.0;
  int rank = 0;
  for (int i = 0; i < sv.size(); ++i)
    if (sv[i] > cutoff) ++rank;
  int nullity = static_cast<int>(m.cols()) - rank;
  return svd.matrixV().rightCols(nullity);
}

Eigen::MatrixXd LieAlgebra::bi_orthonormalize(const Eigen::MatrixXd& basis) const {
  // Gram-Schmidt in the bi-invariant inner product.
  Eigen::MatrixXd out(dim_, basis.cols());
  int kept = 0;
  for (int c = 0; c < basis.cols(); ++c) {
    Eigen::VectorXd v = basis.col(c);
    for (int k = 0; k < kept; ++k) v -= inner(out.col(k), v) * out.col(k);
    double nv = norm(v);
    if (nv > 1e-10) out.col(kept++) = v / nv;
  }
  return out.leftCols(kept);
}

Eigen::MatrixXd LieAlgebra::centralizer(const Eigen::VectorXd& v) const {
  if (v.size() != dim_) throw Error(ErrorCode::InputError, "vector dimension mismatch");
  if (v.norm() < 1e-14) throw Error(ErrorCode::InputError, "centralizer of the zero vector");
  return bi_orthonormalize(kernel_basis(ad(v)));
}

Eigen::MatrixXd LieAlgebra::compute_center() const {
  // c(g) = { v : ad_v = 0 }, the kernel of v -> vec(ad_v).
  Eigen::MatrixXd m(dim_ * dim_, dim_);
  for (int i = 0; i < dim_; ++i)
    m.col(i) = Eigen::Map<const Eigen::VectorXd>(ad_basis_[i].data(), dim_ * dim_);
  return bi_orthonormalize(kernel_basis(m));
}

std::optional<Eigen::VectorXd> LieAlgebra::center_unit() const {
  if (center_dim() != 1) return std::nullopt;
  return center_.col(0);
}

std::pair<int, bool> LieAlgebra::rank_and_genericity(const Eigen::VectorXd& v,
                                                     std::uint64_t seed) const {
  if (v.size() != dim_) throw Error(ErrorCode::InputError, "vector dimension mismatch");
  if (v.norm() < 1e-14) throw Error(ErrorCode::InputError, "genericity of the zero vector");
  int r = rank(seed);
  int dv = static_cast<int>(centralizer(v).cols());
  return {r, dv == r};
}

int LieAlgebra::rank(std::uint64_t seed) const {
  Rng rng(derive_seed(seed, 0xca47a4));
  int best = dim_;
  for (int i = 0; i < 64; ++i) {
    Eigen::VectorXd v = rng.unit_vector(dim_);
    best = std::min(best, static_cast<int>(centralizer(v).cols()));
  }
  return best;
}

Eigen::VectorXd LieAlgebra::project_onto(const Eigen::MatrixXd& basis,
                                         const Eigen::VectorXd& u) const {
  Eigen::VectorXd p = Eigen::VectorXd::Zero(dim_);
  for (int c = 0; c < basis.cols(); ++c) p += inner(basis.col(c), u) * basis.col(c);
  return p;
}

LieAlgebra::CartanResult LieAlgebra::cartan_avoiding(const Eigen::VectorXd& u, std::uint64_t seed,
                                                     int max_draws) const {
  if (u.size() != dim_) throw Error(ErrorCode::InputError, "vector dimension mismatch");
  if (std::abs(norm(u) - 1.0) > 1e-8)
    throw Error(ErrorCode::InputError, "cartan_avoiding expects a bi-unit vector");
  if (center_dim() > 1)
    throw Error(ErrorCode::HypothesisViolation, "center dimension exceeds 1");
  if (auto u0 = center_unit()) {
    if (std::abs(inner(u, *u0)) > 1.0 - 1e-9)
      throw Error(ErrorCode::InputError, "u lies in the center unit set; caps handle it");
  }

  Rng rng(derive_seed(seed, 0xcaf7a9));
  int r = rank(seed);
  CartanResult best;
  bool found = false;
  for (int draw = 0; draw < max_draws; ++draw) {
    Eigen::VectorXd v = rng.unit_vector(dim_);
    Eigen::MatrixXd t = centralizer(v);
    if (static_cast<int>(t.cols()) != r) continue;  // non-generic draw
    double margin = 1.0 - norm(project_onto(t, u));
    if (margin < kCartanAccept) continue;
    if (!found || margin > best.margin) {
      best.basis = t;
      best.generic_vector = v;
      best.margin = margin;
      found = true;
    }
  }
  if (!found)
    throw Error(ErrorCode::SearchFailure,
                "no Cartan subalgebra avoiding u found; shrink the chart radius");
  return best;
}

namespace {

std::vector<Eigen::MatrixXd> zero_ads(int n) {
  return std::vector<Eigen::MatrixXd>(n, Eigen::MatrixXd::Zero(n, n));
}

// Writes the so(3)-style cyclic block [b0,b1]=b2, [b1,b2]=b0, [b2,b0]=b1
// into ad matrices at basis offset.
void fill_su2_block(std::vector<Eigen::MatrixXd>& ads, int off) {
  const int idx[3] = {off, off + 1, off + 2};
  for (int a = 0; a < 3; ++a) {
    int b = (a + 1) % 3, c = (a + 2) % 3;
    ads[idx[a]](idx[c], idx[b]) = 1.0;
    ads[idx[b]](idx[c], idx[a]) = -1.0;
  }
}

}  // namespace

LieAlgebra su2_algebra() {
  auto ads = zero_ads(3);
  fill_su2_block(ads, 0);
  return LieAlgebra(std::move(ads), Eigen::MatrixXd::Identity(3, 3), {"e1", "e2", "e3"});
}

LieAlgebra su2_plus_r_algebra() {
  auto ads = zero_ads(4);
  fill_su2_block(ads, 0);
  return LieAlgebra(std::move(ads), Eigen::MatrixXd::Identity(4, 4), {"e1", "e2", "e3", "u0"});
}

LieAlgebra su2_plus_su2_algebra() {
  auto ads = zero_ads(6);
  fill_su2_block(ads, 0);
  fill_su2_block(ads, 3);
  return LieAlgebra(std::move(ads), Eigen::MatrixXd::Identity(6, 6),
                    {"e1", "e2", "e3", "f1", "f2", "f3"});
}

LieAlgebra abelian_algebra(int n) {
  if (n <= 0) throw Error(ErrorCode::InputError, "abelian dimension must be positive");
  std::vector<std::string> labels;
  for (int i = 0; i < n; ++i) labels.push_back("a" + std::to_string(i + 1));
  return LieAlgebra(zero_ads(n), Eigen::MatrixXd::Identity(n, n), std::move(labels));
}

std::vector<std::string> builtin_algebra_names() {
  return {"su2", "su2xR", "su2xsu2", "abelianN (e.g. abelian3)"};
}

LieAlgebra builtin_algebra(const std::string& name) {
  if (name == "su2") return su2_algebra();
  if (name == "su2xR" || name == "su2+R") return su2_plus_r_algebra();
  if (name == "su2xsu2" || name == "su2+su2") return su2_plus_su2_algebra();
  if (name.rfind("abelian", 0) == 0) {
    int n = std::stoi(name.substr(7));
    return abelian_algebra(n);
  }
  throw Error(ErrorCode::InputError, "unknown built-in algebra: " + name);
}

namespace {

LieAlgebra algebra_from_json(const nlohmann::json& j) {
  if (!j.contains("dim") || !j.contains("structure_constants") || !j.contains("inner_product"))
    throw Error(ErrorCode::SchemaError, "algebra JSON needs dim, structure_constants, inner_product");
  int n = j.at("dim").get<int>();
  if (n <= 0) throw Error(ErrorCode::SchemaError, "dim must be positive");

  std::vector<std::string> labels;
  if (j.contains("labels")) labels = j.at("labels").get<std::vector<std::string>>();

  auto ads = zero_ads(n);
  for (const auto& entry : j.at("structure_constants")) {
    if (!entry.is_array() || entry.size() != 4)
      throw Error(ErrorCode::SchemaError, "structure_constants entries are [i,j,k,value]");
    int i = entry[0].get<int>(), jj = entry[1].get<int>(), k = entry[2].get<int>();
    double value = entry[3].get<double>();
    if (i < 0 || jj < 0 || k < 0 || i >= n || jj >= n || k >= n)
      throw Error(ErrorCode::SchemaError, "structure constant index out of range");
    if (i >= jj)
      throw Error(ErrorCode::SchemaError, "structure_constants carry only i<j entries");
    ads[i](k, jj) = value;
    ads[jj](k, i) = -value;  // antisymmetric completion
  }

  const auto& ip = j.at("inner_product");
  if (!ip.is_array() || ip.size() != static_cast<std::size_t>(n * n))
    throw Error(ErrorCode::SchemaError, "inner_product must hold dim*dim row-major entries");
  Eigen::MatrixXd inner(n, n);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) inner(r, c) = ip[r * n + c].get<double>();

  LieAlgebra alg(std::move(ads), std::move(inner), std::move(labels));
  ValidationReport rep = alg.validate();
  if (!rep.passed)
    throw Error(ErrorCode::SchemaError, "algebra fails validation: " + rep.summary());
  return alg;
}

}  // namespace

LieAlgebra algebra_from_json_text(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::SchemaError, std::string("bad JSON: ") + e.what());
  }
  return algebra_from_json(j);
}

LieAlgebra load_algebra_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return algebra_from_json_text(ss.str());
}

LieAlgebra resolve_algebra(const std::string& source) {
  if (source == "su2" || source == "su2xR" || source == "su2+R" || source == "su2xsu2" ||
      source == "su2+su2" || source.rfind("abelian", 0) == 0)
    return builtin_algebra(source);
  return load_algebra_json(source);
}

}  // namespace flagcurv

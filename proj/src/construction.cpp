#include "flagcurv/construction.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <sstream>

#include "flagcurv/errors.hpp"
#include "flagcurv/parallel.hpp"
#include "flagcurv/rng.hpp"

namespace flagcurv {

namespace {

constexpr double kRadiusFactor = 0.85;  // of the chordal Cartan distance
constexpr double kRadiusClamp = 1.25;   // < sqrt(2): charts cover less than half the sphere
constexpr int kCircleScan = 512;        // verify_delta scan resolution
constexpr int kMaxPoleScan = 1024;

double bi_distance2(const Eigen::MatrixXd& p, const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  Eigen::VectorXd d = a - b;
  return d.dot(p * d);
}

/// Smooth band coordinate of w for the sphere {|x - center|_bi = radius}:
/// |t| >= 1 iff w is delta-clear of the sphere (measured through rho^2, which
/// is smooth everywhere).
double band_coordinate(const Eigen::MatrixXd& p, const Eigen::VectorXd& center, double radius,
                       double delta, const Eigen::VectorXd& w) {
  double rho2 = bi_distance2(p, w, center);
  return (rho2 - radius * radius) / (2.0 * radius * delta);
}

/// C^2 window: 0 for s <= -1, 1 for s >= 1, quintic smoothstep between.
/// Satisfies window(s) + window(-s) = 1, which makes the cell weights sum to
/// 1 identically.
double window(double s) {
  if (s <= -1.0) return 0.0;
  if (s >= 1.0) return 1.0;
  double u = 0.5 * (s + 1.0);
  return ((6.0 * u - 15.0) * u + 10.0) * u * u * u;
}

Eigen::VectorXd bi_unit(const LieAlgebra& alg, Rng& rng) {
  for (;;) {
    Eigen::VectorXd v = rng.gaussian_vector(alg.dim());
    double n = alg.norm(v);
    if (n > 1e-12) return v / n;
  }
}

bool point_covered(const SphereCovering& cov, const Eigen::VectorXd& w) {
  const Eigen::MatrixXd& p = cov.algebra.inner_product();
  for (const auto& ch : cov.charts)
    if (bi_distance2(p, w, ch.center) < ch.radius * ch.radius) return true;
  if (cov.caps) {
    if (bi_distance2(p, w, cov.caps->u0) < cov.caps->radius * cov.caps->radius) return true;
    if (bi_distance2(p, w, Eigen::VectorXd(-cov.caps->u0)) < cov.caps->radius * cov.caps->radius)
      return true;
  }
  return false;
}

}  // namespace

// ---------------------------------------------------------------------------
// Covering

SphereCovering build_covering(const LieAlgebra& algebra, double r0, int target_charts,
                              std::uint64_t seed) {
  const int n = algebra.dim();
  if (algebra.center_dim() == n)
    throw Error(ErrorCode::HypothesisViolation, "the construction needs a non-Abelian algebra");
  if (algebra.center_dim() > 1)
    throw Error(ErrorCode::HypothesisViolation, "the construction needs dim c(g) <= 1");
  if (target_charts < 1) throw Error(ErrorCode::InputError, "target_charts must be >= 1");

  SphereCovering cov{algebra, std::nullopt, {}, seed, r0};
  if (algebra.center_dim() == 1) {
    if (!(r0 > 0.0) || r0 >= kRadiusClamp)
      throw Error(ErrorCode::InputError, "cap radius r0 must lie in (0, 1.25)");
    cov.caps = CoveringCaps{*algebra.center_unit(), r0};
  }

  Rng rng(derive_seed(seed, 0xc0fe));
  Rng recheck(derive_seed(seed, 0xcc));  // same stream check_covering scans
  const int max_charts = 16 * target_charts;

  for (;;) {
    // Collect uncovered directions; once 5 * 10^4 fresh samples are all
    // covered, sweep the re-check stream too so stragglers become charts
    // instead of failures.
    std::vector<Eigen::VectorXd> uncovered;
    for (int s = 0; s < 50000 && static_cast<int>(uncovered.size()) < 512; ++s) {
      Eigen::VectorXd w = bi_unit(algebra, rng);
      if (!point_covered(cov, w)) uncovered.push_back(w);
    }
    if (uncovered.empty()) {
      for (int s = 0; s < 20000 && static_cast<int>(uncovered.size()) < 64; ++s) {
        Eigen::VectorXd w = bi_unit(algebra, recheck);
        if (!point_covered(cov, w)) uncovered.push_back(w);
      }
    }
    if (uncovered.empty()) break;
    if (cov.chart_count() >= max_charts)
      throw Error(ErrorCode::CoveringFailure,
                  "covering did not close; retry with a larger r0 or another seed");

    // Greedy max-coverage: score a handful of candidate centers by how many
    // currently uncovered probes their chart would swallow.
    int n_candidates = std::min<int>(16, static_cast<int>(uncovered.size()));
    CoveringChart best;
    long best_score = -1;
    for (int c = 0; c < n_candidates; ++c) {
      const Eigen::VectorXd& u = uncovered[static_cast<std::size_t>(c)];
      LieAlgebra::CartanResult cr;
      try {
        cr = algebra.cartan_avoiding(u, derive_seed(seed, 1000 + cov.chart_count() * 64 + c));
      } catch (const Error&) {
        continue;
      }
      double chordal = std::sqrt(2.0 * cr.margin);
      double radius = std::min(kRadiusFactor * chordal, kRadiusClamp);
      long score = 0;
      for (const auto& w : uncovered)
        if (bi_distance2(algebra.inner_product(), w, u) < radius * radius) ++score;
      if (score > best_score) {
        best_score = score;
        best = CoveringChart{u, radius, cr.basis, cr.generic_vector, cr.margin};
      }
    }
    if (best_score < 0)
      throw Error(ErrorCode::CoveringFailure, "no admissible chart center found");

    // Align the wind with the nearest existing chart's wind (v and -v span
    // the same Cartan subalgebra; alignment keeps adjacent navigation
    // metrics close, which is gentler on the glued Hessian).
    if (!cov.charts.empty()) {
      double dmin = std::numeric_limits<double>::infinity();
      const CoveringChart* nearest = nullptr;
      for (const auto& ch : cov.charts) {
        double d = bi_distance2(algebra.inner_product(), ch.center, best.center);
        if (d < dmin) {
          dmin = d;
          nearest = &ch;
        }
      }
      if (nearest &&
          algebra.inner(best.killing_direction, nearest->killing_direction) < 0.0)
        best.killing_direction = -best.killing_direction;
    }
    cov.charts.push_back(std::move(best));
  }

  if (cov.charts.empty())
    throw Error(ErrorCode::CoveringFailure, "covering ended with no charts");
  check_covering(cov, seed);
  return cov;
}

void check_covering(const SphereCovering& cov, std::uint64_t seed) {
  const LieAlgebra& alg = cov.algebra;
  Rng rng(derive_seed(seed, 0xcc));

  for (const auto& ch : cov.charts) {
    if (!(ch.radius > 0.0) || ch.radius >= std::sqrt(2.0))
      throw Error(ErrorCode::CoveringFailure, "chart radius outside (0, sqrt(2))");
    double angular = 2.0 * std::asin(std::min(1.0, ch.radius / 2.0));
    for (int s = 0; s < 1000; ++s) {
      // Sample the closed chart, boundary included.
      double phi = (s < 100) ? angular : angular * std::sqrt(rng.uniform());
      Eigen::VectorXd q = bi_unit(alg, rng);
      q -= alg.inner(q, ch.center) * ch.center;
      double nq = alg.norm(q);
      if (nq < 1e-9) continue;
      q /= nq;
      Eigen::VectorXd w = std::cos(phi) * ch.center + std::sin(phi) * q;
      double proj = alg.norm(alg.project_onto(ch.cartan_basis, w));
      if (!(proj < 1.0 - 1e-9))
        throw Error(ErrorCode::CoveringFailure,
                    "chart closure touches its Cartan subalgebra");
    }
  }

  for (int s = 0; s < 10000; ++s) {
    Eigen::VectorXd w = bi_unit(alg, rng);
    if (!point_covered(cov, w))
      throw Error(ErrorCode::CoveringFailure, "sampled sphere point left uncovered");
  }
}

// ---------------------------------------------------------------------------
// Delta search

namespace {

bool circle_point_safe(const SphereCovering& cov, double delta, const Eigen::VectorXd& w) {
  const Eigen::MatrixXd& p = cov.algebra.inner_product();
  for (const auto& ch : cov.charts)
    if (std::abs(band_coordinate(p, ch.center, ch.radius, delta, w)) < 1.0) return false;
  if (cov.caps) {
    if (band_coordinate(p, cov.caps->u0, cov.caps->radius, delta, w) < 1.0) return false;
    if (band_coordinate(p, Eigen::VectorXd(-cov.caps->u0), cov.caps->radius, delta, w) < 1.0)
      return false;
  }
  return true;
}

// Seeded bi-orthonormal 2-plane basis.
std::pair<Eigen::VectorXd, Eigen::VectorXd> random_plane(const LieAlgebra& alg, Rng& rng) {
  for (;;) {
    Eigen::VectorXd a = bi_unit(alg, rng);
    Eigen::VectorXd b = rng.gaussian_vector(alg.dim());
    b -= alg.inner(a, b) * a;
    double nb = alg.norm(b);
    if (nb > 1e-6) return {a, b / nb};
  }
}

}  // namespace

bool verify_delta(const SphereCovering& cov, double delta, int n_planes, std::uint64_t seed) {
  if (!(delta > 0.0)) throw Error(ErrorCode::InputError, "delta must be positive");
  if (n_planes <= 0) return true;
  std::vector<char> ok(static_cast<std::size_t>(n_planes), 0);
  parallel_for(static_cast<std::size_t>(n_planes), [&](std::size_t i) {
    Rng rng(derive_seed(seed, i));
    auto [a, b] = random_plane(cov.algebra, rng);
    for (int s = 0; s < kCircleScan; ++s) {
      double th = 2.0 * M_PI * s / kCircleScan;
      Eigen::VectorXd w = std::cos(th) * a + std::sin(th) * b;
      if (circle_point_safe(cov, delta, w)) {
        ok[i] = 1;
        return;
      }
    }
  });
  for (char c : ok)
    if (!c) return false;
  return true;
}

double select_delta(const SphereCovering& cov, std::uint64_t seed) {
  double rmin = std::numeric_limits<double>::infinity();
  for (const auto& ch : cov.charts) rmin = std::min(rmin, ch.radius);
  if (cov.caps) rmin = std::min(rmin, cov.caps->radius);
  double delta = rmin / 4.0;
  for (int h = 0; h <= 20; ++h) {
    if (verify_delta(cov, delta, 1000, derive_seed(seed, 0xde17a)))
      return delta;
    delta *= 0.5;
  }
  throw Error(ErrorCode::DeltaSearchFailure, "no delta passed the big-circle check");
}

// ---------------------------------------------------------------------------
// Regions and the partition of unity

RegionPartition::RegionPartition(const SphereCovering& cov, double delta, int resolution,
                                 std::uint64_t seed) {
  if (!(delta > 0.0)) throw Error(ErrorCode::InputError, "delta must be positive");
  delta_ = delta;
  bi_inner_ = cov.algebra.inner_product();
  for (const auto& ch : cov.charts) {
    centers_.push_back(ch.center);
    radii_.push_back(ch.radius);
  }
  if (cov.caps) {
    cap_centers_.push_back(cov.caps->u0);
    cap_centers_.push_back(-cov.caps->u0);
    cap_radii_.assign(2, cov.caps->radius);
  }
  // Cap interiors blend into the chart nearest to the cap center.
  for (const auto& cc : cap_centers_) {
    int best = 0;
    double dmin = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < centers_.size(); ++j) {
      double d = bi_distance2(bi_inner_, centers_[j], cc);
      if (d < dmin) {
        dmin = d;
        best = static_cast<int>(j);
      }
    }
    cap_charts_.push_back(best);
  }

  // Enumerate the nonempty sign cells from a dense seeded sample. Cells the
  // sample misses still get correct weights at evaluation time; the list
  // feeds reports, representatives and tests.
  struct Acc {
    int count = 0;
    double depth = -1.0;
    Eigen::VectorXd rep;
  };
  std::map<std::vector<int>, Acc> cells;
  Rng rng(derive_seed(seed, 0x4e6));
  const LieAlgebra& alg = cov.algebra;
  for (int s = 0; s < resolution; ++s) {
    Eigen::VectorXd w = bi_unit(alg, rng);
    Eigen::VectorXd t(centers_.size()), tc(cap_centers_.size());
    for (std::size_t i = 0; i < centers_.size(); ++i)
      t[static_cast<Eigen::Index>(i)] =
          band_coordinate(bi_inner_, centers_[i], radii_[i], delta_, w);
    for (std::size_t i = 0; i < cap_centers_.size(); ++i)
      tc[static_cast<Eigen::Index>(i)] =
          band_coordinate(bi_inner_, cap_centers_[i], cap_radii_[i], delta_, w);
    if (t.size() > 0 && t.cwiseAbs().minCoeff() <= 1.0) continue;
    if (tc.size() > 0 && tc.minCoeff() <= 1.0) continue;
    std::vector<int> signs(centers_.size());
    bool has_in = false;
    double depth = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < t.size(); ++i) {
      signs[static_cast<std::size_t>(i)] = t[i] < 0.0 ? -1 : 1;
      has_in = has_in || t[i] < 0.0;
      depth = std::min(depth, std::abs(t[i]) - 1.0);
    }
    for (Eigen::Index i = 0; i < tc.size(); ++i) depth = std::min(depth, tc[i] - 1.0);
    if (!has_in)
      throw Error(ErrorCode::RegionAssignment,
                  "region sample not inside any chart; covering is unsound");
    Acc& acc = cells[signs];
    acc.count++;
    if (depth > acc.depth) {
      acc.depth = depth;
      acc.rep = w;
    }
  }
  if (cells.empty())
    throw Error(ErrorCode::RegionAssignment,
                "no region survived; delta too large, retry with a smaller delta");

  for (auto& [signs, acc] : cells) {
    Region r;
    r.signs = signs;
    r.chart = assignment_chart(signs);
    r.representative = acc.rep;
    r.sample_count = acc.count;
    regions_.push_back(std::move(r));
  }
  index_regions();
}

RegionPartition RegionPartition::from_descriptors(const SphereCovering& cov, double delta,
                                                  std::vector<Region> regions,
                                                  std::vector<int> cap_charts) {
  RegionPartition part;
  part.delta_ = delta;
  part.bi_inner_ = cov.algebra.inner_product();
  for (const auto& ch : cov.charts) {
    part.centers_.push_back(ch.center);
    part.radii_.push_back(ch.radius);
  }
  if (cov.caps) {
    part.cap_centers_.push_back(cov.caps->u0);
    part.cap_centers_.push_back(-cov.caps->u0);
    part.cap_radii_.assign(2, cov.caps->radius);
  }
  part.cap_charts_ = std::move(cap_charts);
  if (part.cap_charts_.size() != part.cap_centers_.size())
    throw Error(ErrorCode::InputError, "cap assignment size mismatch");
  part.regions_ = std::move(regions);
  part.index_regions();
  return part;
}

void RegionPartition::index_regions() {
  region_index_.clear();
  for (std::size_t i = 0; i < regions_.size(); ++i) {
    if (regions_[i].signs.size() != centers_.size())
      throw Error(ErrorCode::InputError, "region sign vector size mismatch");
    region_index_[regions_[i].signs] = static_cast<int>(i);
  }
}

Eigen::VectorXd RegionPartition::band_coordinates(const Eigen::VectorXd& dir) const {
  Eigen::VectorXd t(centers_.size() + cap_centers_.size());
  for (std::size_t i = 0; i < centers_.size(); ++i)
    t[static_cast<Eigen::Index>(i)] =
        band_coordinate(bi_inner_, centers_[i], radii_[i], delta_, dir);
  for (std::size_t i = 0; i < cap_centers_.size(); ++i)
    t[static_cast<Eigen::Index>(centers_.size() + i)] =
        band_coordinate(bi_inner_, cap_centers_[i], cap_radii_[i], delta_, dir);
  return t;
}

int RegionPartition::assignment_chart(const std::vector<int>& signs) const {
  for (std::size_t i = 0; i < signs.size(); ++i)
    if (signs[i] < 0) return static_cast<int>(i);
  return 0;
}

RegionPartition::Membership RegionPartition::locate(const Eigen::VectorXd& dir) const {
  Eigen::VectorXd t = band_coordinates(dir);
  const int m = chart_count();
  Membership out;
  std::vector<int> signs(static_cast<std::size_t>(m));
  bool has_in = false;
  for (int i = 0; i < m; ++i) {
    if (std::abs(t[i]) <= 1.0) return out;
    signs[static_cast<std::size_t>(i)] = t[i] < 0.0 ? -1 : 1;
    has_in = has_in || t[i] < 0.0;
  }
  for (Eigen::Index i = m; i < t.size(); ++i)
    if (t[i] <= 1.0) return out;
  if (!has_in) return out;
  out.in_region = true;
  out.chart = assignment_chart(signs);
  auto it = region_index_.find(signs);
  out.region = it == region_index_.end() ? -1 : it->second;
  return out;
}

double RegionPartition::window_product(const std::vector<int>& signs, const Eigen::VectorXd& t,
                                       const Eigen::VectorXd& tcap) const {
  double prod = 1.0;
  for (std::size_t i = 0; i < signs.size(); ++i) {
    double ti = t[static_cast<Eigen::Index>(i)];
    prod *= signs[i] < 0 ? window(-ti) : window(ti);
    if (prod == 0.0) return 0.0;
  }
  for (Eigen::Index i = 0; i < tcap.size(); ++i) {
    prod *= window(tcap[i]);
    if (prod == 0.0) return 0.0;
  }
  return prod;
}

double RegionPartition::region_weight(int region, const Eigen::VectorXd& dir) const {
  if (region < 0 || region >= region_count())
    throw Error(ErrorCode::InputError, "region index out of range");
  Eigen::VectorXd t = band_coordinates(dir);
  return window_product(regions_[static_cast<std::size_t>(region)].signs, t.head(chart_count()),
                        t.tail(static_cast<Eigen::Index>(cap_centers_.size())));
}

Eigen::VectorXd RegionPartition::chart_weights(const Eigen::VectorXd& dir) const {
  const int m = chart_count();
  Eigen::VectorXd t = band_coordinates(dir);
  Eigen::VectorXd w = Eigen::VectorXd::Zero(m);

  double cap_factor = 1.0;
  for (std::size_t i = 0; i < cap_centers_.size(); ++i)
    cap_factor *= window(t[static_cast<Eigen::Index>(m + static_cast<int>(i))]);

  std::vector<int> bands;
  std::vector<int> signs(static_cast<std::size_t>(m), 1);
  for (int i = 0; i < m; ++i) {
    double ti = t[i];
    if (std::abs(ti) < 1.0)
      bands.push_back(i);
    else
      signs[static_cast<std::size_t>(i)] = ti < 0.0 ? -1 : 1;
  }
  if (bands.size() > 20)
    throw Error(ErrorCode::PartitionError, "too many overlapping chart bands");

  if (cap_factor > 0.0) {
    const std::size_t subsets = std::size_t{1} << bands.size();
    for (std::size_t mask = 0; mask < subsets; ++mask) {
      double prod = cap_factor;
      for (std::size_t b = 0; b < bands.size() && prod > 0.0; ++b) {
        double ti = t[bands[b]];
        bool in = (mask >> b) & 1u;
        prod *= in ? window(-ti) : window(ti);
        signs[static_cast<std::size_t>(bands[b])] = in ? -1 : 1;
      }
      if (prod <= 0.0) continue;
      // Reset signs for this mask before picking the chart (loop above may
      // have exited early on prod == 0).
      for (std::size_t b = 0; b < bands.size(); ++b)
        signs[static_cast<std::size_t>(bands[b])] = ((mask >> b) & 1u) ? -1 : 1;
      w[assignment_chart(signs)] += prod;
    }
  }
  for (std::size_t i = 0; i < cap_centers_.size(); ++i)
    w[cap_charts_[i]] += window(-t[static_cast<Eigen::Index>(m + static_cast<int>(i))]);
  return w;
}

int RegionPartition::pure_chart(const Eigen::VectorXd& dir) const {
  const int m = chart_count();
  Eigen::VectorXd t = band_coordinates(dir);
  std::vector<int> signs(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) {
    if (std::abs(t[i]) <= 1.0) return -1;
    signs[static_cast<std::size_t>(i)] = t[i] < 0.0 ? -1 : 1;
  }
  for (std::size_t i = 0; i < cap_centers_.size(); ++i) {
    double tc = t[static_cast<Eigen::Index>(m + static_cast<int>(i))];
    if (std::abs(tc) <= 1.0) return -1;
    if (tc < 0.0) return cap_charts_[i];  // deep cap interior: filler weight is 1
  }
  return assignment_chart(signs);
}

NormPtr glued_norm(const std::vector<NormPtr>& chart_norms, const RegionPartition& partition,
                   const Eigen::MatrixXd& bi_inner) {
  if (static_cast<int>(chart_norms.size()) != partition.chart_count())
    throw Error(ErrorCode::InputError, "one component norm per chart expected");
  auto part = std::make_shared<RegionPartition>(partition);
  return std::make_shared<GluedNorm>(
      chart_norms, [part](const Eigen::VectorXd& d) { return part->chart_weights(d); },
      [part](const Eigen::VectorXd& d) { return part->pure_chart(d); }, bi_inner);
}

// ---------------------------------------------------------------------------
// Assembly

AssembledMetric assemble_theorem1_metric(const LieAlgebra& algebra, const SphereCovering& covering,
                                         const RegionPartition& partition, double epsilon,
                                         int margin_samples, std::uint64_t seed) {
  if (epsilon < 0.0) throw Error(ErrorCode::InputError, "epsilon must be >= 0");
  if (epsilon >= 1.0)
    throw Error(ErrorCode::InvalidDatum, "epsilon must keep the wind inside the unit ball");
  const Eigen::MatrixXd& q = algebra.inner_product();

  std::vector<NormPtr> chart_norms;
  chart_norms.reserve(covering.charts.size());
  for (const auto& ch : covering.charts) {
    Eigen::VectorXd v = ch.killing_direction;
    double nv = algebra.norm(v);
    chart_norms.push_back(zermelo_randers_closed_form(q, (epsilon / nv) * v));
  }

  NormPtr glue = glued_norm(chart_norms, partition, q);
  double margin = strong_convexity_margin(*glue, margin_samples, derive_seed(seed, 0x3a6));
  if (!(margin > 0.0))
    throw EpsilonTooLargeError("glued norm lost strong convexity; shrink epsilon", margin);

  return AssembledMetric{std::move(chart_norms), glue, InvariantMetric(algebra, glue), epsilon,
                         margin};
}

// ---------------------------------------------------------------------------
// FP verification

namespace {

std::vector<PlaneRecord> forced_planes(const SphereCovering& cov) {
  const LieAlgebra& alg = cov.algebra;
  std::vector<PlaneRecord> out;
  for (std::size_t j = 0; j < cov.charts.size(); ++j) {
    const auto& basis = cov.charts[j].cartan_basis;
    for (int a = 0; a < basis.cols(); ++a)
      for (int b = a + 1; b < basis.cols(); ++b) {
        PlaneRecord rec;
        rec.basis_a = basis.col(a);
        rec.basis_b = basis.col(b);
        rec.forced = true;
        rec.label = "cartan-plane[chart " + std::to_string(j) + "]";
        out.push_back(std::move(rec));
      }
  }
  if (cov.caps) {
    const Eigen::VectorXd& u0 = cov.caps->u0;
    for (int k = 0; k < alg.dim(); ++k) {
      Eigen::VectorXd e = Eigen::VectorXd::Zero(alg.dim());
      e[k] = 1.0;
      Eigen::VectorXd a = e - alg.inner(e, u0) * u0;
      double na = alg.norm(a);
      if (na < 1e-6) continue;  // basis vector parallel to u0
      PlaneRecord rec;
      rec.basis_a = a / na;
      rec.basis_b = u0;
      rec.forced = true;
      rec.label = "center-plane[" + alg.labels()[static_cast<std::size_t>(k)] + "^u0]";
      out.push_back(std::move(rec));
    }
  }
  return out;
}

void scan_plane(const InvariantMetric& metric, const RegionPartition& partition,
                int pole_resolution, const CurvatureOptions& options, PlaneRecord& rec) {
  int res = pole_resolution;
  for (;;) {
    rec.samples.clear();
    rec.eligible_poles = 0;
    rec.best_k = -std::numeric_limits<double>::infinity();
    for (int s = 0; s < res; ++s) {
      double th = 2.0 * M_PI * s / res;
      Eigen::VectorXd y = std::cos(th) * rec.basis_a + std::sin(th) * rec.basis_b;
      auto membership = partition.locate(y);
      if (!membership.in_region) continue;
      Eigen::VectorXd edge = -std::sin(th) * rec.basis_a + std::cos(th) * rec.basis_b;
      double k = flag_curvature(metric, FlagData{y, edge}, options);
      rec.samples.push_back(PoleSample{th, membership.region, membership.chart, k});
      rec.eligible_poles++;
      if (k > rec.best_k) {
        rec.best_k = k;
        rec.best_theta = th;
        rec.best_region = membership.region;
      }
    }
    rec.scan_resolution = res;
    if (rec.eligible_poles > 0 || res >= kMaxPoleScan) break;
    res *= 2;  // the circle meets some region (Lemma-3.2 check); refine until seen
  }
  rec.passed = rec.eligible_poles > 0 && rec.best_k > 0.0;
}

}  // namespace

FpReport verify_fp(const AssembledMetric& assembled, const SphereCovering& covering,
                   const RegionPartition& partition, int n_planes, int pole_resolution,
                   std::uint64_t seed, const CurvatureOptions& options) {
  if (pole_resolution < 4) throw Error(ErrorCode::InputError, "pole_resolution too small");
  const LieAlgebra& alg = covering.algebra;
  FpReport report;
  report.seed = seed;
  report.epsilon = assembled.epsilon;
  report.delta = partition.delta();
  report.pole_resolution = pole_resolution;

  report.planes = forced_planes(covering);
  const std::size_t n_forced = report.planes.size();
  report.planes.resize(n_forced + static_cast<std::size_t>(std::max(0, n_planes)));
  for (std::size_t i = n_forced; i < report.planes.size(); ++i) {
    Rng rng(derive_seed(seed, i - n_forced));
    auto [a, b] = random_plane(alg, rng);
    report.planes[i].basis_a = a;
    report.planes[i].basis_b = b;
    report.planes[i].label = "sampled[" + std::to_string(i - n_forced) + "]";
  }

  parallel_for(report.planes.size(), [&](std::size_t i) {
    scan_plane(assembled.metric, partition, pole_resolution, options, report.planes[i]);
  });

  report.min_best_k = std::numeric_limits<double>::infinity();
  for (const auto& rec : report.planes) {
    if (!rec.passed) report.failures++;
    if (rec.eligible_poles > 0) report.min_best_k = std::min(report.min_best_k, rec.best_k);
  }
  if (!std::isfinite(report.min_best_k)) report.min_best_k = 0.0;
  report.passed = report.failures == 0;
  return report;
}

// ---------------------------------------------------------------------------
// Pipeline

PipelineResult run_theorem1_pipeline(const LieAlgebra& algebra, const PipelineConfig& config) {
  PipelineResult result;
  result.epsilon_initial = config.epsilon0;

  std::string stage = "covering";
  try {
    result.covering = build_covering(algebra, config.r0, config.target_charts, config.seed);

    stage = "delta";
    if (config.delta_override) {
      if (!verify_delta(*result.covering, *config.delta_override, 1000,
                        derive_seed(config.seed, 0xde17a)))
        throw Error(ErrorCode::DeltaSearchFailure, "delta override fails the big-circle check");
      result.delta = *config.delta_override;
    } else {
      result.delta = select_delta(*result.covering, config.seed);
    }

    stage = "regions";
    result.partition.emplace(*result.covering, result.delta, config.region_resolution,
                             config.seed);

    stage = "epsilon-search";
    double epsilon = config.epsilon0;
    std::string last_failure;
    for (int attempt = 0; attempt <= config.max_epsilon_halvings; ++attempt, epsilon *= 0.5) {
      AssembledMetric assembled{{}, nullptr, InvariantMetric(algebra,
          std::make_shared<QuadraticNorm>(algebra.inner_product())), 0.0, 0.0};
      try {
        assembled = assemble_theorem1_metric(algebra, *result.covering, *result.partition,
                                             epsilon, config.margin_samples, config.seed);
      } catch (const EpsilonTooLargeError& e) {
        last_failure = "assemble: " + std::string(e.what());
        continue;
      }
      stage = "verify-fp";
      FpReport report = verify_fp(assembled, *result.covering, *result.partition,
                                  config.n_planes, config.pole_resolution, config.seed,
                                  config.curvature);
      stage = "epsilon-search";
      bool better = !result.assembled || report.failures < result.report.failures;
      if (better) {
        result.assembled = std::move(assembled);
        result.report = std::move(report);
        result.margin = result.assembled->margin;
        result.epsilon_final = epsilon;
      }
      if (result.report.passed) {
        result.passed = true;
        return result;
      }
      last_failure = "verify-fp: " + std::to_string(result.report.failures) + " plane(s) failed";
    }
    result.failure_stage = result.assembled ? "verify-fp" : "assemble";
    result.failure_message = last_failure.empty() ? "epsilon search exhausted" : last_failure;
    return result;
  } catch (const Error& e) {
    result.failure_stage = stage;
    result.failure_message = e.what();
    return result;
  }
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

nlohmann::json vec_to_json(const Eigen::VectorXd& v) {
  nlohmann::json arr = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

Eigen::VectorXd vec_from_json(const nlohmann::json& j) {
  Eigen::VectorXd v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  return v;
}

nlohmann::json mat_to_json(const Eigen::MatrixXd& m) {
  nlohmann::json arr = nlohmann::json::array();
  for (int c = 0; c < m.cols(); ++c) arr.push_back(vec_to_json(m.col(c)));
  return arr;
}

Eigen::MatrixXd mat_from_json(const nlohmann::json& j, int rows) {
  Eigen::MatrixXd m(rows, static_cast<int>(j.size()));
  for (std::size_t c = 0; c < j.size(); ++c) m.col(static_cast<Eigen::Index>(c)) = vec_from_json(j[c]);
  return m;
}

}  // namespace

nlohmann::json covering_to_json(const SphereCovering& cov) {
  nlohmann::json j;
  j["seed"] = cov.seed;
  j["r0"] = cov.r0;
  if (cov.caps) {
    j["caps"] = {{"u0", vec_to_json(cov.caps->u0)}, {"radius", cov.caps->radius}};
  }
  nlohmann::json charts = nlohmann::json::array();
  for (const auto& ch : cov.charts) {
    charts.push_back({{"center", vec_to_json(ch.center)},
                      {"radius", ch.radius},
                      {"cartan_basis", mat_to_json(ch.cartan_basis)},
                      {"killing_direction", vec_to_json(ch.killing_direction)},
                      {"cartan_margin", ch.cartan_margin}});
  }
  j["charts"] = charts;
  return j;
}

SphereCovering covering_from_json(const LieAlgebra& algebra, const nlohmann::json& j) {
  SphereCovering cov{algebra, std::nullopt, {}, j.value("seed", std::uint64_t{0}),
                     j.value("r0", 0.0)};
  if (j.contains("caps"))
    cov.caps = CoveringCaps{vec_from_json(j.at("caps").at("u0")),
                            j.at("caps").at("radius").get<double>()};
  for (const auto& cj : j.at("charts")) {
    CoveringChart ch;
    ch.center = vec_from_json(cj.at("center"));
    ch.radius = cj.at("radius").get<double>();
    ch.cartan_basis = mat_from_json(cj.at("cartan_basis"), algebra.dim());
    ch.killing_direction = vec_from_json(cj.at("killing_direction"));
    ch.cartan_margin = cj.at("cartan_margin").get<double>();
    cov.charts.push_back(std::move(ch));
  }
  return cov;
}

nlohmann::json partition_to_json(const RegionPartition& part) {
  nlohmann::json j;
  j["delta"] = part.delta();
  j["cap_charts"] = part.cap_charts();
  nlohmann::json regions = nlohmann::json::array();
  for (const auto& r : part.regions()) {
    regions.push_back({{"signs", r.signs},
                       {"chart", r.chart},
                       {"representative", vec_to_json(r.representative)},
                       {"sample_count", r.sample_count}});
  }
  j["regions"] = regions;
  return j;
}

RegionPartition partition_from_json(const SphereCovering& covering, const nlohmann::json& j) {
  std::vector<Region> regions;
  for (const auto& rj : j.at("regions")) {
    Region r;
    r.signs = rj.at("signs").get<std::vector<int>>();
    r.chart = rj.at("chart").get<int>();
    r.representative = vec_from_json(rj.at("representative"));
    r.sample_count = rj.at("sample_count").get<int>();
    regions.push_back(std::move(r));
  }
  return RegionPartition::from_descriptors(covering, j.at("delta").get<double>(),
                                           std::move(regions),
                                           j.at("cap_charts").get<std::vector<int>>());
}

nlohmann::json fp_report_to_json(const FpReport& report) {
  nlohmann::json j;
  j["seed"] = report.seed;
  j["epsilon"] = report.epsilon;
  j["delta"] = report.delta;
  j["pole_resolution"] = report.pole_resolution;
  j["min_best_k"] = report.min_best_k;
  j["failures"] = report.failures;
  j["passed"] = report.passed;
  nlohmann::json planes = nlohmann::json::array();
  for (const auto& rec : report.planes) {
    planes.push_back({{"label", rec.label},
                      {"forced", rec.forced},
                      {"basis_a", vec_to_json(rec.basis_a)},
                      {"basis_b", vec_to_json(rec.basis_b)},
                      {"scan_resolution", rec.scan_resolution},
                      {"eligible_poles", rec.eligible_poles},
                      {"best_k", rec.best_k},
                      {"best_theta", rec.best_theta},
                      {"best_region", rec.best_region},
                      {"passed", rec.passed}});
  }
  j["planes"] = planes;
  return j;
}

std::string fp_report_to_csv(const FpReport& report) {
  std::ostringstream os;
  os << "plane,theta,K,region\n";
  os.precision(17);
  for (std::size_t i = 0; i < report.planes.size(); ++i)
    for (const auto& s : report.planes[i].samples)
      os << i << "," << s.theta << "," << s.k << "," << s.region << "\n";
  return os.str();
}

nlohmann::json pipeline_result_to_json(const PipelineResult& result,
                                       const std::string& algebra_name) {
  nlohmann::json j;
  j["schema_version"] = 1;
  j["algebra"] = algebra_name;
  j["passed"] = result.passed;
  j["epsilon_initial"] = result.epsilon_initial;
  j["epsilon_final"] = result.epsilon_final;
  j["delta"] = result.delta;
  j["margin"] = result.margin;
  if (!result.failure_stage.empty()) {
    j["failure_stage"] = result.failure_stage;
    j["failure_message"] = result.failure_message;
  }
  if (result.covering) j["covering"] = covering_to_json(*result.covering);
  if (result.partition) j["partition"] = partition_to_json(*result.partition);
  j["fp_report"] = fp_report_to_json(result.report);
  return j;
}

}  // namespace flagcurv

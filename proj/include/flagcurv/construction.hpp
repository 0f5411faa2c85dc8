#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "flagcurv/invariant_metric.hpp"
#include "flagcurv/lie_algebra.hpp"
#include "flagcurv/minkowski.hpp"
#include "nlohmann/json.hpp"

namespace flagcurv {

/// One chart U_{u,r} of the sphere covering: an open chordal ball on the
/// bi-unit sphere whose closure avoids the Cartan subalgebra t, plus the
/// Killing direction v in t that drives the chart's navigation metric.
struct CoveringChart {
  Eigen::VectorXd center;             // u, bi-unit
  double radius = 0.0;                // chordal
  Eigen::MatrixXd cartan_basis;       // bi-orthonormal columns spanning t
  Eigen::VectorXd killing_direction;  // generic v in t, bi-unit
  double cartan_margin = 0.0;         // 1 - |proj_t u|_bi
};

struct CoveringCaps {
  Eigen::VectorXd u0;  // center unit generator
  double radius = 0.0; // r0, chordal
};

struct SphereCovering {
  LieAlgebra algebra;
  std::optional<CoveringCaps> caps;  // present iff dim c(g) = 1
  std::vector<CoveringChart> charts;
  std::uint64_t seed = 0;
  double r0 = 0.0;

  int chart_count() const { return static_cast<int>(charts.size()); }
};

/// Greedy randomized covering of the bi-unit sphere by Cartan-avoiding charts
/// (plus caps around +-u0 when the center is one dimensional). Chart radii are
/// 0.75 of the chordal Cartan distance, clamped to 1.2; fewer, larger charts
/// keep the partition ramps gentle.
SphereCovering build_covering(const LieAlgebra& algebra, double r0, int target_charts,
                              std::uint64_t seed);

/// Sampled invariant checks of a covering (chart closures avoid their Cartan
/// subalgebras; the sphere is covered). Throws CoveringFailure on violation.
void check_covering(const SphereCovering& covering, std::uint64_t seed);

/// A region is a sign cell of the sphere arrangement cut by the chart
/// boundary spheres, taken at clearance delta. Membership and weights are
/// expressed through the smooth band coordinate
///   t_i(w) = (|w - u_i|^2 - r_i^2) / (2 r_i delta),
/// so a point is delta-clear of boundary sphere i iff |t_i| >= 1.
struct Region {
  std::vector<int> signs;  // -1 inside chart sphere i, +1 outside
  int chart = -1;          // owning chart: lowest index with sign -1
  Eigen::VectorXd representative;
  int sample_count = 0;
};

/// Partition of unity subordinate to the covering: per-cell weights are
/// products of C^2 windows in the band coordinates, so they are exactly 1 on
/// their cell, exactly 0 on every other cell, and sum to 1 identically.
/// Cap interiors are carried by filler weights bound to the chart nearest to
/// the cap center.
class RegionPartition {
 public:
  RegionPartition(const SphereCovering& covering, double delta, int resolution,
                  std::uint64_t seed);

  double delta() const { return delta_; }
  int region_count() const { return static_cast<int>(regions_.size()); }
  const std::vector<Region>& regions() const { return regions_; }
  int chart_count() const { return static_cast<int>(centers_.size()); }
  const std::vector<int>& cap_charts() const { return cap_charts_; }

  /// Band coordinates of a bi-unit direction, chart spheres then cap spheres.
  Eigen::VectorXd band_coordinates(const Eigen::VectorXd& dir) const;

  struct Membership {
    bool in_region = false;
    int region = -1;  // discovered region index; -1 for an unenumerated cell
    int chart = -1;
  };
  Membership locate(const Eigen::VectorXd& dir) const;

  /// Weights per chart metric at a bi-unit direction; nonnegative, sum 1.
  Eigen::VectorXd chart_weights(const Eigen::VectorXd& dir) const;

  /// Chart whose aggregate weight is exactly 1 on an open cone around dir
  /// (cells and deep cap interiors), or -1 in blending zones.
  int pure_chart(const Eigen::VectorXd& dir) const;

  /// Raw per-region weight mu_i (plus cap fillers after the regions); used by
  /// the partition test suite.
  double region_weight(int region, const Eigen::VectorXd& dir) const;

  /// Rebuild from persisted descriptors (see partition_to_json).
  static RegionPartition from_descriptors(const SphereCovering& covering, double delta,
                                          std::vector<Region> regions,
                                          std::vector<int> cap_charts);

 private:
  RegionPartition() = default;

  double delta_ = 0.0;
  Eigen::MatrixXd bi_inner_;
  std::vector<Eigen::VectorXd> centers_;  // chart sphere centers
  std::vector<double> radii_;
  std::vector<Eigen::VectorXd> cap_centers_;
  std::vector<double> cap_radii_;
  std::vector<int> cap_charts_;  // filler assignment per cap
  std::vector<Region> regions_;
  std::map<std::vector<int>, int> region_index_;

  double window_product(const std::vector<int>& signs, const Eigen::VectorXd& t,
                        const Eigen::VectorXd& tcap) const;
  int assignment_chart(const std::vector<int>& signs) const;
  void index_regions();
};

/// Lemma-3.2 check: every seeded 2-plane's big circle has a point that is
/// delta-clear of all boundary spheres and outside the cap bands
/// (512-point scan per circle).
bool verify_delta(const SphereCovering& covering, double delta, int n_planes,
                  std::uint64_t seed);

/// Largest passing delta from bisection: starts at min(chart radius, r0)/4 and
/// halves until verify_delta passes with 1000 planes; at most 20 halvings.
double select_delta(const SphereCovering& covering, std::uint64_t seed);

struct AssembledMetric {
  std::vector<NormPtr> chart_norms;  // F~_{j;eps} per chart
  NormPtr glue;
  InvariantMetric metric;            // the glued left-invariant metric
  double epsilon = 0.0;
  double margin = 0.0;               // sampled strong-convexity margin
};

/// Builds mu-glued navigation metrics: each chart contributes the closed-form
/// Randers norm with wind eps * v_j. Throws EpsilonTooLarge (carrying the
/// sampled margin) when the glue loses strong convexity at this eps.
AssembledMetric assemble_theorem1_metric(const LieAlgebra& algebra,
                                         const SphereCovering& covering,
                                         const RegionPartition& partition, double epsilon,
                                         int margin_samples = 2048, std::uint64_t seed = 2024);

/// Glue of per-chart norms through a partition (the partition-of-unity sum
/// F(y) = sum_i mu_i(y/|y|_bi) F_i(y), aggregated by owning chart).
NormPtr glued_norm(const std::vector<NormPtr>& chart_norms, const RegionPartition& partition,
                   const Eigen::MatrixXd& bi_inner);

struct PoleSample {
  double theta = 0.0;
  int region = -1;
  int chart = -1;
  double k = 0.0;
};

struct PlaneRecord {
  Eigen::VectorXd basis_a, basis_b;  // bi-orthonormal plane basis
  bool forced = false;
  std::string label;
  int scan_resolution = 0;
  int eligible_poles = 0;
  double best_k = 0.0;
  double best_theta = 0.0;
  int best_region = -1;
  bool passed = false;
  std::vector<PoleSample> samples;
};

struct FpReport {
  std::vector<PlaneRecord> planes;
  double min_best_k = 0.0;
  int failures = 0;
  std::uint64_t seed = 0;
  double epsilon = 0.0;
  double delta = 0.0;
  int pole_resolution = 0;
  bool passed = false;
};

/// Scans every plane's big circle; poles inside regions are evaluated through
/// the component metric (where the glue coincides with it exactly), poles in
/// blending zones are skipped. A plane passes iff its best pole has K > 0.
/// Forced adversarial planes: the Cartan planes of every chart and, when the
/// center is one dimensional, the planes span(e_k, u0).
FpReport verify_fp(const AssembledMetric& assembled, const SphereCovering& covering,
                   const RegionPartition& partition, int n_planes, int pole_resolution,
                   std::uint64_t seed, const CurvatureOptions& options = {});

struct PipelineConfig {
  double epsilon0 = 0.1;
  double r0 = 0.8;
  std::optional<double> delta_override;
  int target_charts = 12;
  int n_planes = 1000;
  int pole_resolution = 64;
  int region_resolution = 20000;
  int margin_samples = 10000;
  int max_epsilon_halvings = 12;
  std::uint64_t seed = 7;
  CurvatureOptions curvature;
};

struct PipelineResult {
  std::optional<SphereCovering> covering;
  double delta = 0.0;
  std::optional<RegionPartition> partition;
  std::optional<AssembledMetric> assembled;
  FpReport report;
  double margin = 0.0;
  double epsilon_initial = 0.0;
  double epsilon_final = 0.0;
  bool passed = false;
  std::string failure_stage;  // empty when passed
  std::string failure_message;
};

/// Full Theorem-1 pipeline: covering -> delta -> regions -> assemble ->
/// verify; epsilon is halved from epsilon0 until the glue is strongly convex
/// and the verifier passes.
PipelineResult run_theorem1_pipeline(const LieAlgebra& algebra, const PipelineConfig& config);

nlohmann::json covering_to_json(const SphereCovering& covering);
SphereCovering covering_from_json(const LieAlgebra& algebra, const nlohmann::json& j);
nlohmann::json partition_to_json(const RegionPartition& partition);
RegionPartition partition_from_json(const SphereCovering& covering, const nlohmann::json& j);
nlohmann::json fp_report_to_json(const FpReport& report);
nlohmann::json pipeline_result_to_json(const PipelineResult& result, const std::string& algebra_name);
/// CSV rows "plane,theta,K,region" of every evaluated pole.
std::string fp_report_to_csv(const FpReport& report);

}  // namespace flagcurv

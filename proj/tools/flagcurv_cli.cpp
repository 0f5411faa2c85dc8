#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "flagcurv/construction.hpp"
#include "flagcurv/coset_checks.hpp"
#include "flagcurv/errors.hpp"
#include "flagcurv/invariant_metric.hpp"
#include "flagcurv/lie_algebra.hpp"
#include "flagcurv/minkowski.hpp"
#include "flagcurv/rng.hpp"
#include "nlohmann/json.hpp"

namespace {

using namespace flagcurv;

int exit_code_for(const Error& e) {
  switch (e.code()) {
    case ErrorCode::IoError:
    case ErrorCode::SchemaError:
    case ErrorCode::InputError:
    case ErrorCode::InvalidDatum:
      return 2;
    default:
      return 1;
  }
}

void write_output(const std::string& out_path, const std::string& text) {
  if (out_path.empty()) {
    std::cout << text << std::endl;
    return;
  }
  std::ofstream out(out_path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + out_path);
  out << text << "\n";
}

Eigen::VectorXd parse_vector(const std::string& csv, int dim) {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(dim);
  std::stringstream ss(csv);
  std::string item;
  int i = 0;
  while (std::getline(ss, item, ',')) {
    if (i >= dim) throw Error(ErrorCode::InputError, "wind has too many entries");
    v[i++] = std::stod(item);
  }
  if (i != dim) throw Error(ErrorCode::InputError, "wind needs one entry per dimension");
  return v;
}

struct CommonOptions {
  std::string algebra = "su2";
  std::uint64_t seed = 7;
  std::string out;
  std::string format = "json";
};

int cmd_validate(const CommonOptions& common) {
  LieAlgebra alg = resolve_algebra(common.algebra);
  ValidationReport rep = alg.validate(common.seed);
  nlohmann::json j;
  j["schema_version"] = 1;
  j["algebra"] = common.algebra;
  j["passed"] = rep.passed;
  j["max_antisymmetry"] = rep.max_antisymmetry;
  j["max_jacobi"] = rep.max_jacobi;
  j["max_ad_invariance"] = rep.max_ad_invariance;
  j["inner_symmetry"] = rep.inner_symmetry;
  j["inner_min_eigenvalue"] = rep.inner_min_eigenvalue;
  j["center_dim"] = rep.center_dim;
  j["rank"] = rep.rank;
  j["center_dim_ok"] = rep.center_dim_ok;
  write_output(common.out, j.dump(2));
  return rep.passed ? 0 : 1;
}

int cmd_curvature(const CommonOptions& common, const std::string& metric_kind, double epsilon,
                  const std::string& wind_csv, const std::string& pipeline_path, int n_flags) {
  LieAlgebra alg = resolve_algebra(common.algebra);
  const int n = alg.dim();

  NormPtr norm;
  if (metric_kind == "bi") {
    norm = std::make_shared<QuadraticNorm>(alg.inner_product());
  } else if (metric_kind == "navigated") {
    Eigen::VectorXd dir;
    if (wind_csv.empty()) {
      dir = Eigen::VectorXd::Zero(n);
      dir[n - 1] = 1.0;
    } else {
      dir = parse_vector(wind_csv, n);
    }
    double nd = alg.norm(dir);
    if (nd < 1e-14) throw Error(ErrorCode::InputError, "wind direction is zero");
    norm = zermelo_randers_closed_form(alg.inner_product(), (epsilon / nd) * dir);
  } else if (metric_kind == "glued") {
    if (pipeline_path.empty())
      throw Error(ErrorCode::InputError, "--pipeline is required for the glued metric");
    std::ifstream in(pipeline_path);
    if (!in) throw Error(ErrorCode::IoError, "cannot open " + pipeline_path);
    nlohmann::json saved = nlohmann::json::parse(in, nullptr, false);
    if (saved.is_discarded()) throw Error(ErrorCode::SchemaError, "bad pipeline JSON");
    SphereCovering cov = covering_from_json(alg, saved.at("covering"));
    RegionPartition part = partition_from_json(cov, saved.at("partition"));
    double eps = saved.at("epsilon_final").get<double>();
    AssembledMetric assembled = assemble_theorem1_metric(alg, cov, part, eps);
    norm = assembled.glue;
  } else {
    throw Error(ErrorCode::InputError, "--metric must be bi, navigated or glued");
  }

  InvariantMetric metric(alg, norm);
  Rng rng(common.seed);
  std::ostringstream csv;
  csv.precision(17);
  for (int i = 0; i < n; ++i) csv << "y" << i << ",";
  for (int i = 0; i < n; ++i) csv << "v" << i << ",";
  csv << "K,status\n";

  nlohmann::json rows = nlohmann::json::array();
  for (int s = 0; s < n_flags; ++s) {
    Eigen::VectorXd y = rng.unit_vector(n);
    Eigen::VectorXd v = rng.gaussian_vector(n);
    std::string status = "ok";
    double k = 0.0;
    try {
      k = flag_curvature(metric, FlagData{y, v});
    } catch (const Error& e) {
      if (e.code() == ErrorCode::DegenerateFlag || e.code() == ErrorCode::BlendingZonePole)
        status = error_code_name(e.code());
      else
        throw;
    }
    for (int i = 0; i < n; ++i) csv << y[i] << ",";
    for (int i = 0; i < n; ++i) csv << v[i] << ",";
    csv << k << "," << status << "\n";
    nlohmann::json row;
    row["y"] = std::vector<double>(y.data(), y.data() + n);
    row["v"] = std::vector<double>(v.data(), v.data() + n);
    row["K"] = k;
    row["status"] = status;
    rows.push_back(row);
  }

  if (common.format == "csv") {
    write_output(common.out, csv.str());
  } else {
    nlohmann::json j;
    j["schema_version"] = 1;
    j["algebra"] = common.algebra;
    j["metric"] = metric_kind;
    j["epsilon"] = epsilon;
    j["seed"] = common.seed;
    j["flags"] = rows;
    write_output(common.out, j.dump(2));
  }
  return 0;
}

int cmd_navigation_check(const CommonOptions& common, double epsilon, const std::string& wind_csv,
                         int n_samples, double tol) {
  LieAlgebra alg = resolve_algebra(common.algebra);
  const int n = alg.dim();
  Eigen::VectorXd dir;
  if (wind_csv.empty()) {
    dir = Eigen::VectorXd::Zero(n);
    dir[n - 1] = 1.0;
  } else {
    dir = parse_vector(wind_csv, n);
  }
  double nd = alg.norm(dir);
  if (nd < 1e-14) throw Error(ErrorCode::InputError, "wind direction is zero");
  Eigen::VectorXd wind = (epsilon / nd) * dir;

  InvariantMetric metric(alg, std::make_shared<QuadraticNorm>(alg.inner_product()));
  double residual = navigation_correspondence_residual(metric, wind, n_samples, common.seed);

  nlohmann::json j;
  j["schema_version"] = 1;
  j["algebra"] = common.algebra;
  j["epsilon"] = epsilon;
  j["samples"] = n_samples;
  j["seed"] = common.seed;
  j["tolerance"] = tol;
  j["max_residual"] = residual;
  j["passed"] = residual <= tol;
  write_output(common.out, j.dump(2));
  return residual <= tol ? 0 : 1;
}

int cmd_verify_fp(const CommonOptions& common, const PipelineConfig& config) {
  LieAlgebra alg = resolve_algebra(common.algebra);
  PipelineResult result = run_theorem1_pipeline(alg, config);
  if (common.format == "csv") {
    write_output(common.out, fp_report_to_csv(result.report));
  } else {
    write_output(common.out, pipeline_result_to_json(result, common.algebra).dump(2));
  }
  if (!result.passed) {
    std::cerr << "verify-fp failed at stage: " << result.failure_stage << " ("
              << result.failure_message << ")" << std::endl;
    return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"numerical laboratory for flag-wise positively curved invariant Finsler metrics"};
  app.require_subcommand(1);

  CommonOptions common;
  double epsilon = 0.1;
  std::string wind_csv;
  std::string metric_kind = "bi";
  std::string pipeline_path;
  int n_flags = 100;
  int n_samples = 100;
  double tol = 1e-3;
  PipelineConfig config;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--algebra", common.algebra, "built-in name or JSON file");
    cmd->add_option("--seed", common.seed, "64-bit seed");
    cmd->add_option("--out", common.out, "output path (default stdout)");
    cmd->add_option("--format", common.format, "json or csv")
        ->check(CLI::IsMember({"json", "csv"}));
  };

  CLI::App* validate = app.add_subcommand("validate", "check the Lie-algebra invariants");
  add_common(validate);

  CLI::App* curvature = app.add_subcommand("curvature", "flag curvatures on sampled flags");
  add_common(curvature);
  curvature->add_option("--metric", metric_kind, "bi, navigated or glued");
  curvature->add_option("--epsilon", epsilon, "navigation wind size");
  curvature->add_option("--wind", wind_csv, "wind direction, comma separated");
  curvature->add_option("--pipeline", pipeline_path, "saved verify-fp JSON for the glued metric");
  curvature->add_option("--flags", n_flags, "number of sampled flags");

  CLI::App* nav = app.add_subcommand("navigation-check", "Killing navigation correspondence");
  add_common(nav);
  nav->add_option("--epsilon", epsilon, "navigation wind size");
  nav->add_option("--wind", wind_csv, "wind direction, comma separated");
  nav->add_option("--samples", n_samples, "number of flag pairs");
  nav->add_option("--tol", tol, "acceptance tolerance on the residual");

  CLI::App* verify = app.add_subcommand("verify-fp", "full construction + FP verification");
  add_common(verify);
  verify->add_option("--epsilon", config.epsilon0, "initial navigation size (halved as needed)");
  verify->add_option("--r0", config.r0, "cap radius around the center directions");
  double delta_override = -1.0;
  verify->add_option("--delta", delta_override, "margin override (skips the delta search)");
  verify->add_option("--planes", config.n_planes, "number of sampled planes");
  verify->add_option("--poles", config.pole_resolution, "poles scanned per big circle");
  verify->add_option("--target-charts", config.target_charts, "covering size hint");

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand(validate)) return cmd_validate(common);
    if (app.got_subcommand(curvature))
      return cmd_curvature(common, metric_kind, epsilon, wind_csv, pipeline_path, n_flags);
    if (app.got_subcommand(nav))
      return cmd_navigation_check(common, epsilon, wind_csv, n_samples, tol);
    if (app.got_subcommand(verify)) {
      config.seed = common.seed;
      if (delta_override > 0.0) config.delta_override = delta_override;
      return cmd_verify_fp(common, config);
    }
  } catch (const flagcurv::Error& e) {
    std::cerr << e.what() << std::endl;
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 1;
  }
  return 2;
}

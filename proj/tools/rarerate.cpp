// rarerate: rate estimates and confidence intervals from importance weights,
// coverage studies, and study reports.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rarerate/ci.hpp"
#include "rarerate/core.hpp"
#include "rarerate/error.hpp"
#include "rarerate/io.hpp"
#include "rarerate/next_weight.hpp"
#include "rarerate/report.hpp"
#include "rarerate/simulator.hpp"

namespace {

using namespace rarerate;

constexpr int kExitOther = 1;
constexpr int kExitInput = 2;
constexpr int kExitNumerical = 3;

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string format_value(double x, bool round) {
  std::ostringstream os;
  if (round) {
    os << std::llround(x);
  } else {
    os << std::setprecision(10) << x;
  }
  return os.str();
}

struct EstimateArgs {
  std::string weights;
  double alpha = 0.1;
  std::string methods = "eb";
  std::string backend = "mc";
  std::string next_weight = "auto";
  double gamma_hat = kDefaultGammaHat;
  std::string segments;
  std::optional<double> w2_norm;
  std::size_t bootstrap = kDefaultBootstrapDraws;
  std::uint64_t seed = 0;
  std::string category;
  bool round = false;
  std::string csv;
};

// Turns --next-weight and friends into a NextWeightSpec.
NextWeightSpec next_weight_spec(const std::string& mode, double gamma_hat, std::optional<double> w2_norm,
                                bool have_segments) {
  NextWeightSpec spec;
  spec.gamma_hat = gamma_hat;
  spec.norm2 = w2_norm;
  if (mode == "auto") {
    if (have_segments || w2_norm) {
      spec.mode = NextWeightMode::Wm;
    } else {
      spec.mode = NextWeightMode::MaxObserved;
      std::cerr << "warning: no segment data or --w2-norm; using the largest observed weight as next weight\n";
    }
  } else if (mode == "max-observed") {
    spec.mode = NextWeightMode::MaxObserved;
  } else if (mode == "w2") {
    spec.mode = NextWeightMode::W2;
  } else if (mode == "wm") {
    spec.mode = NextWeightMode::Wm;
  } else {
    std::size_t used = 0;
    double value = 0.0;
    try {
      value = std::stod(mode, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != mode.size()) {
      throw Error(ErrorCode::InvalidArgument,
                  "--next-weight must be auto, max-observed, w2, wm or a number, got '" + mode + "'");
    }
    spec.mode = NextWeightMode::Fixed;
    spec.value = value;
  }
  return spec;
}

CiConfig base_config(double alpha, const std::string& backend, std::size_t draws, std::uint64_t seed) {
  CiConfig cfg;
  cfg.alpha = alpha;
  cfg.backend = parse_backend(backend);
  cfg.bootstrap_draws = draws;
  cfg.seed = seed;
  cfg.validate();
  return cfg;
}

int run_estimate(const EstimateArgs& a) {
  WeightSample sample = io::read_weights_csv(a.weights);
  if (!a.category.empty()) sample = sample.subset(a.category);
  std::vector<SegmentRecord> records;
  if (!a.segments.empty()) records = io::read_segments_csv(a.segments);

  CiConfig cfg = base_config(a.alpha, a.backend, a.bootstrap, a.seed);
  cfg.next_weight = next_weight_spec(a.next_weight, a.gamma_hat, a.w2_norm, !records.empty());

  std::vector<CiMethod> methods;
  for (const auto& name : split_list(a.methods)) methods.push_back(parse_method(name));
  if (methods.empty()) throw Error(ErrorCode::InvalidArgument, "--method lists no methods");

  std::vector<CiResult> results;
  for (CiMethod m : methods) {
    cfg.method = m;
    results.push_back(compute_ci(sample, cfg, records));
  }

  for (const auto& r : results) {
    if (methods.size() > 1) std::cout << to_string(r.method) << ',';
    std::cout << format_value(r.point_estimate, a.round) << ",[" << format_value(r.lower, a.round) << ','
              << format_value(r.upper, a.round) << "]\n";
  }

  if (!a.csv.empty()) {
    std::ofstream out(a.csv);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + a.csv);
    out << "method,backend,alpha,point_estimate,lower,upper,next_weight\n" << std::setprecision(17);
    for (const auto& r : results) {
      out << to_string(r.method) << ',' << to_string(r.backend) << ',' << r.alpha << ',' << r.point_estimate << ','
          << r.lower << ',' << r.upper << ',' << r.next_weight_used << '\n';
    }
  }
  return 0;
}

int run_simulate(const std::string& config, const std::string& out_path, std::size_t jobs) {
  const auto cells = io::load_scenario_config(config);
  const CoverageReport report = run_study(cells, jobs);
  if (out_path.empty() || out_path == "-") {
    io::write_coverage_csv(std::cout, report);
  } else {
    std::ofstream out(out_path);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + out_path);
    io::write_coverage_csv(out, report);
  }
  return 0;
}

int run_report(const std::string& in_path, const std::string& prefix) {
  std::ifstream in(in_path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + in_path);
  const auto rows = io::parse_coverage_csv(in);
  for (const auto& path : report::write_report(rows, prefix)) std::cout << path.string() << '\n';
  return 0;
}

struct MonotonicityArgs {
  std::string weights;
  std::string subset;
  std::string methods = "go,gp,gm,wg,eb,pb";
  double alpha = 0.1;
  std::string backend = "mc";
  std::string next_weight = "max-observed";
  std::optional<double> w2_norm;
  std::size_t bootstrap = kDefaultBootstrapDraws;
  std::uint64_t seed = 0;
  bool round = false;
};

int run_check_monotonicity(const MonotonicityArgs& a) {
  const WeightSample full = io::read_weights_csv(a.weights);
  CiConfig cfg = base_config(a.alpha, a.backend, a.bootstrap, a.seed);
  cfg.next_weight = next_weight_spec(a.next_weight, kDefaultGammaHat, a.w2_norm, false);
  std::vector<CiMethod> methods;
  for (const auto& name : split_list(a.methods)) methods.push_back(parse_method(name));

  const auto rows = check_monotonicity(full, a.subset, methods, cfg);
  std::cout << "method,subset_lower,subset_upper,union_lower,union_upper,lower_violation,upper_violation\n";
  for (const auto& r : rows) {
    std::cout << to_string(r.method) << ',' << format_value(r.subset.lower, a.round) << ','
              << format_value(r.subset.upper, a.round) << ',' << format_value(r.full.lower, a.round) << ','
              << format_value(r.full.upper, a.round) << ',' << (r.lower_violation ? 1 : 0) << ','
              << (r.upper_violation ? 1 : 0) << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Rare-event rate estimation and confidence intervals under importance sampling"};
  app.require_subcommand(1);

  EstimateArgs est;
  auto* estimate = app.add_subcommand("estimate", "Point estimate and CI from a weights file");
  estimate->add_option("--weights", est.weights, "CSV with header weight,category")->required();
  estimate->add_option("--alpha", est.alpha, "Miscoverage level")->capture_default_str();
  estimate->add_option("--method", est.methods, "Comma-separated: pb,eb,wg,go,gp,gm")->capture_default_str();
  estimate->add_option("--backend", est.backend, "mc or saddlepoint (EB and WG)")->capture_default_str();
  estimate->add_option("--next-weight", est.next_weight, "auto, max-observed, w2, wm or a number")
      ->capture_default_str();
  estimate->add_option("--gamma-hat", est.gamma_hat, "Sampling index used to estimate ||w||_2")
      ->capture_default_str();
  estimate->add_option("--segments", est.segments, "Segments CSV for next-weight estimation");
  estimate->add_option("--w2-norm", est.w2_norm, "Known ||w||_2, used instead of segment data");
  estimate->add_option("--bootstrap", est.bootstrap, "Monte Carlo draws")->capture_default_str();
  estimate->add_option("--seed", est.seed, "Random seed")->capture_default_str();
  estimate->add_option("--category", est.category, "Restrict to one category");
  estimate->add_flag("--round", est.round, "Round to integers");
  estimate->add_option("--csv", est.csv, "Also write results to this CSV file");

  std::string config, out_path;
  std::size_t jobs = 0;
  auto* simulate = app.add_subcommand("simulate", "Run a coverage study from a JSON scenario config");
  simulate->add_option("--config", config, "Scenario config (JSON)")->required();
  simulate->add_option("--out", out_path, "Output CSV (default stdout)");
  simulate->add_option("--jobs", jobs, "Worker threads, 0 for all cores")->capture_default_str();

  std::string in_path, prefix;
  auto* rep = app.add_subcommand("report", "Pivot tables and SVG charts from a coverage CSV");
  rep->add_option("--in", in_path, "Coverage CSV written by simulate")->required();
  rep->add_option("--out-prefix", prefix, "Path prefix for the written files")->required();

  MonotonicityArgs mono;
  auto* check = app.add_subcommand("check-monotonicity", "Compare subset and union CIs per method");
  check->add_option("--weights", mono.weights, "CSV with header weight,category")->required();
  check->add_option("--subset-category", mono.subset, "Category forming the subset")->required();
  check->add_option("--methods", mono.methods, "Comma-separated methods")->capture_default_str();
  check->add_option("--alpha", mono.alpha, "Miscoverage level")->capture_default_str();
  check->add_option("--backend", mono.backend, "mc or saddlepoint")->capture_default_str();
  check->add_option("--next-weight", mono.next_weight, "max-observed, w2, wm or a number")->capture_default_str();
  check->add_option("--w2-norm", mono.w2_norm, "Known ||w||_2 for the w2/wm rules");
  check->add_option("--bootstrap", mono.bootstrap, "Monte Carlo draws")->capture_default_str();
  check->add_option("--seed", mono.seed, "Random seed")->capture_default_str();
  check->add_flag("--round", mono.round, "Round to integers");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitInput;
  }

  try {
    if (*estimate) return run_estimate(est);
    if (*simulate) return run_simulate(config, out_path, jobs);
    if (*rep) return run_report(in_path, prefix);
    if (*check) return run_check_monotonicity(mono);
  } catch (const Error& e) {
    std::cerr << "error: " << to_string(e.code()) << ": " << e.what() << '\n';
    return is_input_error(e.code()) ? kExitInput : kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitOther;
  }
  return kExitOther;
}

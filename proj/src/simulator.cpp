#include "rarerate/simulator.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>
#include <thread>

#include "rarerate/ci.hpp"
#include "rarerate/error.hpp"
#include "rarerate/random.hpp"

namespace rarerate {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;
// A fixed gamma_hat of exactly 0 would make p^(1/gamma_hat) degenerate.
constexpr double kMinGammaHat = 0.01;

double log_normal_density(const NormalDensity& d, double v) {
  const double z = (v - d.mean) / d.sd;
  return -0.5 * z * z - std::log(d.sd) - 0.5 * kLog2Pi;
}

std::string lower_ascii(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string format_number(double x) {
  std::ostringstream os;
  os << x;
  return os.str();
}

// p_i = min(1, n * budget * score_i / sum(score)); zero when nothing scores.
std::vector<double> budgeted_probabilities(std::span<const double> scores, double budget) {
  std::vector<double> p(scores.size(), 0.0);
  double total = 0.0;
  for (double s : scores) total += s;
  if (!(total > 0.0) || budget <= 0.0) return p;
  const double scale = static_cast<double>(scores.size()) * budget / total;
  for (std::size_t i = 0; i < scores.size(); ++i) p[i] = std::min(1.0, scale * scores[i]);
  return p;
}

double power_score(double r, double gamma) {
  if (gamma == 0.0) return 1.0;
  return r > 0.0 ? std::pow(r, gamma) : 0.0;
}

bool bernoulli(std::mt19937_64& rng, double p) {
  if (p >= 1.0) return true;
  if (p <= 0.0) return false;
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng) < p;
}

}  // namespace

double SamplingModel::score(double r) const {
  switch (kind) {
    case SamplingModelKind::Power:
      return power_score(r, gamma);
    case SamplingModelKind::SqrtTimesOneMinusR:
      return std::sqrt(r) * (1.0 - r);
    case SamplingModelKind::RTimesOnePlusR:
      return r * (1.0 + r);
  }
  return 0.0;
}

std::string SamplingModel::label() const {
  switch (kind) {
    case SamplingModelKind::Power:
      return format_number(gamma);
    case SamplingModelKind::SqrtTimesOneMinusR:
      return "sqrt_times_one_minus_r";
    case SamplingModelKind::RTimesOnePlusR:
      return "r_times_one_plus_r";
  }
  return "";
}

StudyMethod parse_study_method(std::string_view name) {
  const std::string n = lower_ascii(name);
  using M = NextWeightMode;
  if (n == "pb") return {"PB", CiMethod::PB, M::MaxObserved, Backend::MonteCarlo};
  if (n == "eb2") return {"EB2", CiMethod::EB, M::W2, Backend::Saddlepoint};
  if (n == "eb2m") return {"EB2m", CiMethod::EB, M::Wm, Backend::Saddlepoint};
  if (n == "eb2-mc") return {"EB2-mc", CiMethod::EB, M::W2, Backend::MonteCarlo};
  if (n == "eb2m-mc") return {"EB2m-mc", CiMethod::EB, M::Wm, Backend::MonteCarlo};
  if (n == "go2m") return {"GO2m", CiMethod::GO, M::Wm, Backend::Analytic};
  if (n == "gp2m") return {"GP2m", CiMethod::GP, M::Wm, Backend::Analytic};
  if (n == "wg2m") return {"WG2m", CiMethod::WG, M::Wm, Backend::Saddlepoint};
  throw Error(ErrorCode::InvalidArgument, "unknown study method '" + std::string(name) + "'");
}

std::optional<double> Scenario::overall_gamma() const {
  if (two_stage) return two_stage->gamma1 + two_stage->gamma2;
  if (sampling.kind == SamplingModelKind::Power) return sampling.gamma;
  return std::nullopt;
}

std::string Scenario::gamma_label() const {
  if (two_stage) return format_number(two_stage->gamma1) + "+" + format_number(two_stage->gamma2);
  return sampling.label();
}

double true_positive_prob(const Scenario& scenario, double v) {
  if (scenario.pi >= 1.0) return 1.0;
  if (scenario.pi <= 0.0) return 0.0;
  const double logit = std::log(scenario.pi) - std::log1p(-scenario.pi) +
                       log_normal_density(scenario.f1, v) - log_normal_density(scenario.f0, v);
  return 1.0 / (1.0 + std::exp(-logit));
}

std::vector<Candidate> generate_population(const Scenario& scenario, std::uint64_t seed) {
  std::vector<Candidate> out;
  if (!(scenario.lambda > 0.0)) return out;
  std::mt19937_64 rng(seed);
  const auto n = std::poisson_distribution<std::uint64_t>(scenario.lambda)(rng);
  out.reserve(n);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> z(0.0, 1.0);
  for (std::uint64_t i = 0; i < n; ++i) {
    Candidate c;
    c.true_positive = unif(rng) < scenario.pi;
    const NormalDensity& d = c.true_positive ? scenario.f1 : scenario.f0;
    c.v = d.mean + d.sd * z(rng);
    out.push_back(c);
  }
  return out;
}

SamplingOutcome apply_sampling(std::span<const Candidate> population, const Scenario& scenario,
                               std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const std::size_t n = population.size();
  std::vector<double> r(n);
  for (std::size_t i = 0; i < n; ++i) r[i] = true_positive_prob(scenario, population[i].v);

  SamplingOutcome out;
  std::vector<double> weights;
  auto record_segment = [&](std::size_t i, double s, std::optional<double> h, double p, bool reviewed) {
    SegmentRecord rec;
    rec.segment_id = std::to_string(i);
    rec.s_prob = s;
    rec.h_prob = h;
    rec.p_prob = p;
    rec.simulated = true;
    rec.reviewed = reviewed;
    if (reviewed) rec.outcome = population[i].true_positive;
    out.records.push_back(std::move(rec));
    if (reviewed && population[i].true_positive) {
      weights.push_back(1.0 / p);
      out.event_records.push_back(out.records.size() - 1);
    }
  };

  if (!scenario.two_stage) {
    std::vector<double> scores(n);
    for (std::size_t i = 0; i < n; ++i) scores[i] = scenario.sampling.score(r[i]);
    const std::vector<double> p = budgeted_probabilities(scores, scenario.budget);
    out.records.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      const bool sampled = bernoulli(rng, p[i]);
      record_segment(i, 1.0, p[i], p[i], sampled);
    }
  } else {
    const TwoStage& ts = *scenario.two_stage;
    std::vector<double> scores(n);
    for (std::size_t i = 0; i < n; ++i) scores[i] = power_score(r[i], ts.gamma1);
    const std::vector<double> s = budgeted_probabilities(scores, ts.b1);

    std::vector<std::size_t> survivors;
    for (std::size_t i = 0; i < n; ++i) {
      if (bernoulli(rng, s[i])) survivors.push_back(i);
    }
    std::vector<double> second(survivors.size());
    for (std::size_t k = 0; k < survivors.size(); ++k) second[k] = power_score(r[survivors[k]], ts.gamma2);
    const std::vector<double> h = budgeted_probabilities(second, scenario.budget);

    out.records.reserve(survivors.size());
    for (std::size_t k = 0; k < survivors.size(); ++k) {
      const std::size_t i = survivors[k];
      const bool reviewed = bernoulli(rng, h[k]);
      record_segment(i, s[i], h[k], s[i] * h[k], reviewed);
    }
  }
  out.sample = validate_weights(weights);
  return out;
}

const CoverageRow* CoverageReport::find(std::size_t cell, std::string_view method) const {
  for (const auto& row : rows) {
    if (row.cell == cell && row.method == method) return &row;
  }
  return nullptr;
}

std::uint64_t replicate_seed(std::uint64_t base_seed, std::size_t cell, std::size_t replicate) {
  return derive_seed({base_seed, static_cast<std::uint64_t>(cell), static_cast<std::uint64_t>(replicate)});
}

namespace {

struct MethodOutcome {
  bool failed = false;
  bool covered = false;
  double width = 0.0;
};

struct ReplicateOutcome {
  double point_estimate = 0.0;
  std::vector<MethodOutcome> methods;
};

void check_scenario(const Scenario& sc) {
  auto fail = [](const std::string& msg) { throw Error(ErrorCode::ConfigError, msg); };
  if (!(sc.lambda >= 0.0) || !std::isfinite(sc.lambda)) fail("lambda must be a nonnegative finite number");
  if (!(sc.pi >= 0.0 && sc.pi <= 1.0)) fail("pi must lie in [0,1]");
  if (!(sc.f1.sd > 0.0) || !(sc.f0.sd > 0.0)) fail("density sd must be positive");
  if (!(sc.budget >= 0.0 && sc.budget <= 1.0)) fail("budget must lie in [0,1]");
  if (!(sc.alpha > 0.0 && sc.alpha < 1.0)) fail("alpha must lie in (0,1)");
  if (sc.replicates < 1) fail("replicates must be at least 1");
  if (sc.methods.empty()) fail("at least one method is required");
  if (sc.sampling.kind == SamplingModelKind::Power && !(sc.sampling.gamma >= 0.0)) fail("gamma must be >= 0");
  if (sc.two_stage) {
    const TwoStage& ts = *sc.two_stage;
    if (!(ts.b1 >= 0.0 && ts.b1 <= 1.0)) fail("b1 must lie in [0,1]");
    if (!(ts.gamma1 >= 0.0) || !(ts.gamma2 >= 0.0)) fail("stage gammas must be >= 0");
    if (sc.sampling.kind != SamplingModelKind::Power) fail("two-stage sampling uses the power model only");
  }
  if (sc.gamma_hat.oracle && !sc.overall_gamma()) {
    fail("an oracle gamma_hat needs a power sampling model");
  }
  if (!sc.gamma_hat.oracle && !(sc.gamma_hat.value > 0.0)) fail("gamma_hat must be positive");
}

ReplicateOutcome run_replicate(const Scenario& sc, std::uint64_t seed) {
  const auto population = generate_population(sc, derive_seed({seed, 1}));
  const SamplingOutcome sampled = apply_sampling(population, sc, derive_seed({seed, 2}));
  const WeightSample& sample = sampled.sample;
  const double theta = sc.true_rate();

  ReplicateOutcome out;
  out.point_estimate = sample.point_estimate();
  out.methods.resize(sc.methods.size());

  const double gamma_hat =
      std::max(kMinGammaHat, sc.gamma_hat.oracle ? *sc.overall_gamma() : sc.gamma_hat.value);

  // ||w||_2 is shared by every method that needs it; its failure fails only those.
  std::optional<double> norm2;
  bool norm2_failed = false;
  auto next_weight = [&](NextWeightMode mode) -> double {
    if (mode == NextWeightMode::MaxObserved) return sample.max_weight();
    if (!norm2 && !norm2_failed) {
      try {
        norm2 = resolve_next_weight(NextWeightSpec::w2(gamma_hat), sample, sampled.records);
      } catch (const Error&) {
        norm2_failed = true;
      }
    }
    if (!norm2) throw Error(ErrorCode::NextWeightUnresolved, "norm estimate failed");
    return mode == NextWeightMode::W2 ? *norm2 : std::max(*norm2, sample.max_weight());
  };

  for (std::size_t m = 0; m < sc.methods.size(); ++m) {
    const StudyMethod& method = sc.methods[m];
    MethodOutcome& mo = out.methods[m];
    try {
      CiConfig cfg;
      cfg.alpha = sc.alpha;
      cfg.method = method.method;
      cfg.bootstrap_draws = sc.bootstrap_draws;
      cfg.seed = derive_seed({seed, 3, static_cast<std::uint64_t>(m)});
      cfg.backend = method.backend == Backend::Analytic ? Backend::Saddlepoint : method.backend;
      CiResult ci;
      switch (method.method) {
        case CiMethod::PB:
          ci = pb_ci(sample, cfg);
          break;
        case CiMethod::EB:
          ci = eb_ci_with_next_weight(sample, next_weight(method.next_weight), cfg);
          break;
        case CiMethod::GO:
          ci = go_ci(sample, next_weight(method.next_weight), sc.alpha);
          break;
        case CiMethod::GP:
          ci = gp_ci(sample, next_weight(method.next_weight), sc.alpha);
          break;
        case CiMethod::WG: {
          const auto strata = group_weights(sample);
          ci = weighted_gamma_ci(strata, next_weight(method.next_weight), sc.alpha,
                                 {cfg.backend, cfg.bootstrap_draws, cfg.seed});
          break;
        }
        case CiMethod::GM:
          ci = gm_ci(group_weights(sample), sc.alpha);
          break;
      }
      mo.covered = ci.lower <= theta && theta <= ci.upper;
      mo.width = ci.upper - ci.lower;
    } catch (const Error&) {
      mo.failed = true;
    }
  }
  return out;
}

}  // namespace

CoverageReport run_study(std::span<const Scenario> cells, std::size_t jobs) {
  for (const auto& sc : cells) check_scenario(sc);

  struct Task {
    std::size_t cell;
    std::size_t replicate;
  };
  std::vector<Task> tasks;
  std::vector<std::size_t> offsets;
  for (std::size_t c = 0; c < cells.size(); ++c) {
    offsets.push_back(tasks.size());
    for (std::size_t r = 0; r < cells[c].replicates; ++r) tasks.push_back({c, r});
  }
  std::vector<ReplicateOutcome> results(tasks.size());

  // Each replicate writes only its own slot, so aggregation order is fixed.
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t t = next.fetch_add(1); t < tasks.size(); t = next.fetch_add(1)) {
      const Scenario& sc = cells[tasks[t].cell];
      results[t] = run_replicate(sc, replicate_seed(sc.base_seed, tasks[t].cell, tasks[t].replicate));
    }
  };
  if (jobs == 0) jobs = std::max(1u, std::thread::hardware_concurrency());
  jobs = std::min(jobs, std::max<std::size_t>(1, tasks.size()));
  if (jobs <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  CoverageReport report;
  for (std::size_t c = 0; c < cells.size(); ++c) {
    const Scenario& sc = cells[c];
    double point_sum = 0.0;
    for (std::size_t r = 0; r < sc.replicates; ++r) point_sum += results[offsets[c] + r].point_estimate;
    for (std::size_t m = 0; m < sc.methods.size(); ++m) {
      CoverageRow row;
      row.cell = c;
      row.budget = sc.budget;
      row.gamma = sc.gamma_label();
      row.method = sc.methods[m].label;
      row.replicates = sc.replicates;
      row.mean_point_estimate = point_sum / static_cast<double>(sc.replicates);
      std::size_t misses = 0;
      double width_sum = 0.0;
      for (std::size_t r = 0; r < sc.replicates; ++r) {
        const MethodOutcome& mo = results[offsets[c] + r].methods[m];
        if (mo.failed) {
          ++row.failures;
          continue;
        }
        if (!mo.covered) ++misses;
        width_sum += mo.width;
      }
      const std::size_t scored = sc.replicates - row.failures;
      if (scored > 0) {
        row.coverage_error = static_cast<double>(misses) / static_cast<double>(scored);
        row.mean_width = width_sum / static_cast<double>(scored);
      } else {
        row.coverage_error = std::numeric_limits<double>::quiet_NaN();
        row.mean_width = std::numeric_limits<double>::quiet_NaN();
      }
      report.rows.push_back(std::move(row));
    }
  }
  return report;
}

}  // namespace rarerate

#include "rarerate/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <set>
#include <sstream>

#include <json.hpp>

#include "rarerate/error.hpp"

namespace rarerate::io {

namespace {

using nlohmann::json;

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

[[noreturn]] void malformed(std::size_t line, const std::string& msg) {
  throw Error(ErrorCode::MalformedInput, "line " + std::to_string(line) + ": " + msg);
}

double parse_double(const std::string& field, std::size_t line, std::string_view name) {
  const std::string s = trim(field);
  double value = 0.0;
  // from_chars for doubles is available in libstdc++ 11.
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
    malformed(line, "invalid number for " + std::string(name) + ": '" + s + "'");
  }
  return value;
}

bool parse_flag(const std::string& field, std::size_t line, std::string_view name) {
  const std::string s = trim(field);
  if (s == "1") return true;
  if (s == "0") return false;
  malformed(line, std::string(name) + " must be 0 or 1, got '" + s + "'");
}

std::vector<std::string> header_fields(std::istream& in, std::size_t& line_no) {
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    if (!trim(line).empty()) {
      auto fields = split_csv_line(line);
      for (auto& f : fields) f = trim(f);
      return fields;
    }
  }
  throw Error(ErrorCode::MalformedInput, "missing CSV header");
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  return in;
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string fmt(double x) {
  std::ostringstream os;
  os << std::setprecision(std::numeric_limits<double>::max_digits10) << x;
  return os.str();
}

// ---- scenario config -------------------------------------------------------

[[noreturn]] void config_error(const std::string& msg) { throw Error(ErrorCode::ConfigError, msg); }

void reject_unknown(const json& obj, std::initializer_list<std::string_view> allowed, std::string_view where) {
  for (const auto& [key, value] : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      config_error("unknown key '" + key + "' in " + std::string(where));
    }
  }
}

double number(const json& j, std::string_view what) {
  if (!j.is_number()) config_error(std::string(what) + " must be a number");
  return j.get<double>();
}

std::uint64_t integer(const json& j, std::string_view what) {
  if (!j.is_number_unsigned() && !(j.is_number_integer() && j.get<std::int64_t>() >= 0)) {
    config_error(std::string(what) + " must be a nonnegative integer");
  }
  return j.get<std::uint64_t>();
}

NormalDensity density(const json& j, std::string_view what) {
  if (!j.is_object()) config_error(std::string(what) + " must be an object {mean, sd}");
  reject_unknown(j, {"mean", "sd"}, what);
  NormalDensity d;
  if (j.contains("mean")) d.mean = number(j["mean"], "mean");
  if (j.contains("sd")) d.sd = number(j["sd"], "sd");
  return d;
}

std::vector<double> number_list(const json& j, std::string_view what) {
  std::vector<double> out;
  if (j.is_number()) {
    out.push_back(j.get<double>());
  } else if (j.is_array()) {
    for (const auto& v : j) out.push_back(number(v, what));
  } else if (j.is_object()) {
    reject_unknown(j, {"from", "to", "steps"}, what);
    if (!j.contains("from") || !j.contains("to") || !j.contains("steps")) {
      config_error(std::string(what) + " grid needs from, to and steps");
    }
    const double from = number(j["from"], "from");
    const double to = number(j["to"], "to");
    const auto steps = integer(j["steps"], "steps");
    if (steps < 1) config_error(std::string(what) + " grid needs steps >= 1");
    if (steps == 1) {
      out.push_back(from);
    } else {
      for (std::uint64_t k = 0; k < steps; ++k) {
        out.push_back(from + (to - from) * static_cast<double>(k) / static_cast<double>(steps - 1));
      }
    }
  } else {
    config_error(std::string(what) + " must be a number, an array or a {from, to, steps} grid");
  }
  if (out.empty()) config_error(std::string(what) + " is empty");
  return out;
}

}  // namespace

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  fields.push_back(std::move(cur));
  return fields;
}

WeightSample parse_weights_csv(std::istream& in) {
  std::size_t line_no = 0;
  const auto header = header_fields(in, line_no);
  const bool with_category = header.size() == 2 && header[1] == "category";
  if (header.empty() || header[0] != "weight" || (header.size() == 2 && !with_category) || header.size() > 2) {
    throw Error(ErrorCode::MalformedInput, "weights CSV header must be 'weight,category'");
  }
  std::vector<double> weights;
  std::vector<std::string> categories;
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() > header.size()) malformed(line_no, "too many fields");
    weights.push_back(parse_double(fields[0], line_no, "weight"));
    categories.push_back(fields.size() > 1 ? trim(fields[1]) : std::string());
  }
  const bool any_category =
      std::any_of(categories.begin(), categories.end(), [](const std::string& c) { return !c.empty(); });
  if (!any_category) categories.clear();
  return validate_weights(weights, std::move(categories));
}

WeightSample read_weights_csv(const std::filesystem::path& path) {
  auto in = open_input(path);
  return parse_weights_csv(in);
}

void write_weights_csv(std::ostream& out, const WeightSample& sample) {
  out << "weight,category\n";
  const auto w = sample.weights();
  const auto c = sample.categories();
  for (std::size_t i = 0; i < w.size(); ++i) out << fmt(w[i]) << ',' << csv_escape(c[i]) << '\n';
}

std::vector<SegmentRecord> parse_segments_csv(std::istream& in) {
  static const std::vector<std::string> expected{"segment_id", "s_prob",   "h_prob", "p_prob",
                                                 "simulated",  "reviewed", "outcome"};
  std::size_t line_no = 0;
  if (header_fields(in, line_no) != expected) {
    throw Error(ErrorCode::MalformedInput,
                "segments CSV header must be 'segment_id,s_prob,h_prob,p_prob,simulated,reviewed,outcome'");
  }
  std::vector<SegmentRecord> records;
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != expected.size()) malformed(line_no, "expected 7 fields");
    SegmentRecord r;
    r.segment_id = trim(f[0]);
    r.s_prob = parse_double(f[1], line_no, "s_prob");
    if (!trim(f[2]).empty()) r.h_prob = parse_double(f[2], line_no, "h_prob");
    r.p_prob = parse_double(f[3], line_no, "p_prob");
    r.simulated = parse_flag(f[4], line_no, "simulated");
    r.reviewed = parse_flag(f[5], line_no, "reviewed");
    if (!trim(f[6]).empty()) r.outcome = parse_flag(f[6], line_no, "outcome");
    try {
      validate_record(r);
    } catch (const Error& e) {
      throw Error(e.code(), "line " + std::to_string(line_no) + ": " + e.what());
    }
    records.push_back(std::move(r));
  }
  return records;
}

std::vector<SegmentRecord> read_segments_csv(const std::filesystem::path& path) {
  auto in = open_input(path);
  return parse_segments_csv(in);
}

void write_segments_csv(std::ostream& out, std::span<const SegmentRecord> records) {
  out << "segment_id,s_prob,h_prob,p_prob,simulated,reviewed,outcome\n";
  for (const auto& r : records) {
    out << csv_escape(r.segment_id) << ',' << fmt(r.s_prob) << ',';
    if (r.h_prob) out << fmt(*r.h_prob);
    out << ',' << fmt(r.p_prob) << ',' << (r.simulated ? 1 : 0) << ',' << (r.reviewed ? 1 : 0) << ',';
    if (r.outcome) out << (*r.outcome ? 1 : 0);
    out << '\n';
  }
}

std::vector<Scenario> parse_scenario_config(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    config_error(std::string("invalid JSON: ") + e.what());
  }
  if (!doc.is_object()) config_error("config must be a JSON object");
  reject_unknown(doc,
                 {"lambda", "pi", "f1", "f0", "sampling_model", "gamma", "budget", "two_stage", "alpha",
                  "methods", "gamma_hat", "replicates", "base_seed", "bootstrap_draws"},
                 "config");

  Scenario base;
  try {
    if (doc.contains("lambda")) base.lambda = number(doc["lambda"], "lambda");
    if (doc.contains("pi")) base.pi = number(doc["pi"], "pi");
    if (doc.contains("f1")) base.f1 = density(doc["f1"], "f1");
    if (doc.contains("f0")) base.f0 = density(doc["f0"], "f0");
    if (doc.contains("alpha")) base.alpha = number(doc["alpha"], "alpha");
    if (doc.contains("replicates")) base.replicates = integer(doc["replicates"], "replicates");
    if (doc.contains("base_seed")) base.base_seed = integer(doc["base_seed"], "base_seed");
    if (doc.contains("bootstrap_draws")) base.bootstrap_draws = integer(doc["bootstrap_draws"], "bootstrap_draws");

    if (doc.contains("sampling_model")) {
      const auto& m = doc["sampling_model"];
      if (!m.is_string()) config_error("sampling_model must be a string");
      const auto name = m.get<std::string>();
      if (name == "power") {
        base.sampling.kind = SamplingModelKind::Power;
      } else if (name == "sqrt_times_one_minus_r") {
        base.sampling.kind = SamplingModelKind::SqrtTimesOneMinusR;
      } else if (name == "r_times_one_plus_r") {
        base.sampling.kind = SamplingModelKind::RTimesOnePlusR;
      } else {
        config_error("unknown sampling_model '" + name + "'");
      }
    }

    if (doc.contains("two_stage")) {
      const auto& ts = doc["two_stage"];
      if (!ts.is_object()) config_error("two_stage must be an object {b1, gamma1, gamma2}");
      reject_unknown(ts, {"b1", "gamma1", "gamma2"}, "two_stage");
      TwoStage stage;
      if (ts.contains("b1")) stage.b1 = number(ts["b1"], "b1");
      if (ts.contains("gamma1")) stage.gamma1 = number(ts["gamma1"], "gamma1");
      if (ts.contains("gamma2")) stage.gamma2 = number(ts["gamma2"], "gamma2");
      base.two_stage = stage;
      if (doc.contains("gamma")) config_error("gamma does not apply to two-stage sampling; use gamma1/gamma2");
    }

    if (doc.contains("gamma_hat")) {
      const auto& g = doc["gamma_hat"];
      if (g.is_string() && g.get<std::string>() == "oracle") {
        base.gamma_hat.oracle = true;
      } else if (g.is_number()) {
        base.gamma_hat = {false, g.get<double>()};
      } else {
        config_error("gamma_hat must be \"oracle\" or a number");
      }
    }

    if (!doc.contains("methods")) config_error("methods is required");
    const auto& methods = doc["methods"];
    if (!methods.is_array()) config_error("methods must be an array of names");
    for (const auto& m : methods) {
      if (!m.is_string()) config_error("methods must be an array of names");
      try {
        base.methods.push_back(parse_study_method(m.get<std::string>()));
      } catch (const Error& e) {
        config_error(e.what());
      }
    }
  } catch (const json::exception& e) {
    config_error(e.what());
  }

  const std::vector<double> budgets =
      doc.contains("budget") ? number_list(doc["budget"], "budget") : std::vector<double>{base.budget};
  std::vector<double> gammas{base.sampling.gamma};
  if (doc.contains("gamma")) {
    if (base.sampling.kind != SamplingModelKind::Power) config_error("gamma only applies to the power model");
    gammas = number_list(doc["gamma"], "gamma");
  }

  std::vector<Scenario> cells;
  for (double g : gammas) {
    for (double b : budgets) {
      Scenario sc = base;
      sc.sampling.gamma = g;
      sc.budget = b;
      cells.push_back(std::move(sc));
    }
  }
  return cells;
}

std::vector<Scenario> load_scenario_config(const std::filesystem::path& path) {
  auto in = open_input(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario_config(ss.str());
}

void write_coverage_csv(std::ostream& out, const CoverageReport& report) {
  out << kCoverageHeader << '\n';
  for (const auto& r : report.rows) {
    out << fmt(r.budget) << ',' << csv_escape(r.gamma) << ',' << csv_escape(r.method) << ','
        << fmt(r.coverage_error) << ',' << fmt(r.mean_width) << ',' << r.replicates << ','
        << fmt(r.mean_point_estimate) << ',' << r.failures << '\n';
  }
}

std::vector<CoverageRow> parse_coverage_csv(std::istream& in) {
  std::size_t line_no = 0;
  const auto header = header_fields(in, line_no);
  const auto expected = split_csv_line(kCoverageHeader);
  if (header.size() < 6 || header.size() > expected.size() ||
      !std::equal(header.begin(), header.end(), expected.begin())) {
    throw Error(ErrorCode::MalformedInput, "coverage CSV header must start with " +
                                               std::string(kCoverageHeader.substr(0, 60)));
  }
  std::vector<CoverageRow> rows;
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != header.size()) malformed(line_no, "expected " + std::to_string(header.size()) + " fields");
    CoverageRow r;
    r.cell = rows.size();
    r.budget = parse_double(f[0], line_no, "budget");
    r.gamma = trim(f[1]);
    r.method = trim(f[2]);
    r.coverage_error = parse_double(f[3], line_no, "coverage_error");
    r.mean_width = parse_double(f[4], line_no, "mean_width");
    const double reps = parse_double(f[5], line_no, "replicates");
    if (!(reps >= 0.0) || reps != std::floor(reps)) malformed(line_no, "replicates must be a whole number");
    r.replicates = static_cast<std::size_t>(reps);
    if (f.size() > 6) r.mean_point_estimate = parse_double(f[6], line_no, "mean_point_estimate");
    if (f.size() > 7) r.failures = static_cast<std::size_t>(parse_double(f[7], line_no, "failures"));
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace rarerate::io

#include "rarerate/report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "rarerate/error.hpp"

namespace rarerate::report {

namespace {

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                    "#9467bd", "#8c564b", "#e377c2", "#17becf"};

std::vector<std::string> method_labels(std::span<const CoverageRow> rows, const std::string& gamma) {
  std::vector<std::string> out;
  for (const auto& r : rows) {
    if (r.gamma == gamma && std::find(out.begin(), out.end(), r.method) == out.end()) out.push_back(r.method);
  }
  return out;
}

std::vector<double> budgets_for(std::span<const CoverageRow> rows, const std::string& gamma) {
  std::vector<double> out;
  for (const auto& r : rows) {
    if (r.gamma == gamma) out.push_back(r.budget);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::string escape_xml(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string num(double x) {
  std::ostringstream os;
  os << x;
  return os.str();
}

struct Panel {
  double left, top, width, height;
  double x_min, x_max, y_min, y_max;
  bool log_y;

  double px(double x) const {
    const double span = x_max - x_min;
    return left + (span > 0 ? (x - x_min) / span : 0.5) * width;
  }
  double py(double y) const {
    const double v = log_y ? std::log10(y) : y;
    const double span = y_max - y_min;
    return top + height - (span > 0 ? (v - y_min) / span : 0.5) * height;
  }
};

void draw_axes(std::ostringstream& svg, const Panel& p, const std::string& title, const std::string& y_label) {
  svg << "<rect x=\"" << p.left << "\" y=\"" << p.top << "\" width=\"" << p.width << "\" height=\"" << p.height
      << "\" fill=\"none\" stroke=\"#333\"/>\n";
  svg << "<text x=\"" << p.left + p.width / 2 << "\" y=\"" << p.top - 10
      << "\" text-anchor=\"middle\" font-size=\"14\">" << escape_xml(title) << "</text>\n";
  svg << "<text x=\"" << p.left + p.width / 2 << "\" y=\"" << p.top + p.height + 36
      << "\" text-anchor=\"middle\" font-size=\"12\">budget</text>\n";
  svg << "<text x=\"" << p.left - 48 << "\" y=\"" << p.top + p.height / 2 << "\" text-anchor=\"middle\" font-size=\"12\" "
      << "transform=\"rotate(-90 " << p.left - 48 << ' ' << p.top + p.height / 2 << ")\">" << escape_xml(y_label)
      << "</text>\n";
  for (int k = 0; k <= 4; ++k) {
    const double x = p.x_min + (p.x_max - p.x_min) * k / 4.0;
    const double sx = p.px(x);
    svg << "<line x1=\"" << sx << "\" y1=\"" << p.top + p.height << "\" x2=\"" << sx << "\" y2=\""
        << p.top + p.height + 4 << "\" stroke=\"#333\"/>\n";
    svg << "<text x=\"" << sx << "\" y=\"" << p.top + p.height + 18 << "\" text-anchor=\"middle\" font-size=\"10\">"
        << num(x) << "</text>\n";
    const double v = p.y_min + (p.y_max - p.y_min) * k / 4.0;
    const double sy = p.top + p.height - p.height * k / 4.0;
    svg << "<line x1=\"" << p.left - 4 << "\" y1=\"" << sy << "\" x2=\"" << p.left << "\" y2=\"" << sy
        << "\" stroke=\"#333\"/>\n";
    svg << "<text x=\"" << p.left - 6 << "\" y=\"" << sy + 3 << "\" text-anchor=\"end\" font-size=\"10\">"
        << num(p.log_y ? std::pow(10.0, v) : v) << "</text>\n";
  }
}

}  // namespace

std::vector<std::string> gamma_labels(std::span<const CoverageRow> rows) {
  std::vector<std::string> out;
  for (const auto& r : rows) {
    if (std::find(out.begin(), out.end(), r.gamma) == out.end()) out.push_back(r.gamma);
  }
  return out;
}

std::string pivot_csv(std::span<const CoverageRow> rows, const std::string& gamma) {
  const auto methods = method_labels(rows, gamma);
  std::ostringstream os;
  os << "budget";
  for (const auto& m : methods) os << ',' << m << "_coverage_error";
  for (const auto& m : methods) os << ',' << m << "_mean_width";
  os << '\n';
  for (double b : budgets_for(rows, gamma)) {
    std::map<std::string, const CoverageRow*> at;
    for (const auto& r : rows) {
      if (r.gamma == gamma && r.budget == b) at[r.method] = &r;
    }
    os << num(b);
    for (const auto& m : methods) {
      os << ',';
      if (at.count(m)) os << num(at[m]->coverage_error);
    }
    for (const auto& m : methods) {
      os << ',';
      if (at.count(m)) os << num(at[m]->mean_width);
    }
    os << '\n';
  }
  return os.str();
}

std::string render_svg(std::span<const CoverageRow> rows, const std::string& gamma) {
  const auto methods = method_labels(rows, gamma);
  const auto budgets = budgets_for(rows, gamma);
  if (methods.empty()) throw Error(ErrorCode::NoRows, "no rows for gamma " + gamma);

  double w_min = INFINITY, w_max = -INFINITY, ce_max = 0.0;
  for (const auto& r : rows) {
    if (r.gamma != gamma) continue;
    if (std::isfinite(r.coverage_error)) ce_max = std::max(ce_max, r.coverage_error);
    if (r.mean_width > 0 && std::isfinite(r.mean_width)) {
      w_min = std::min(w_min, r.mean_width);
      w_max = std::max(w_max, r.mean_width);
    }
  }
  if (!std::isfinite(w_min)) w_min = w_max = 1.0;
  double lw_min = std::floor(std::log10(w_min));
  double lw_max = std::ceil(std::log10(w_max));
  if (lw_max <= lw_min) lw_max = lw_min + 1;

  const double x_min = budgets.front();
  const double x_max = budgets.back() > x_min ? budgets.back() : x_min + 1.0;
  const Panel left{80, 50, 380, 280, x_min, x_max, 0.0, std::max(0.2, std::ceil(ce_max * 10) / 10), false};
  const Panel right{560, 50, 380, 280, x_min, x_max, lw_min, lw_max, true};

  std::ostringstream svg;
  svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"1000\" height=\""
      << 400 + 18 * methods.size() << "\" font-family=\"sans-serif\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"500\" y=\"22\" text-anchor=\"middle\" font-size=\"16\">gamma = " << escape_xml(gamma)
      << "</text>\n";

  struct Series {
    const Panel* panel;
    bool width;
    const char* title;
    const char* y_label;
  };
  for (const Series& s : {Series{&left, false, "coverage error", "fraction of CIs missing the true rate"},
                          Series{&right, true, "mean CI width", "width (log scale)"}}) {
    svg << "<g class=\"chart\">\n";
    draw_axes(svg, *s.panel, s.title, s.y_label);
    for (std::size_t m = 0; m < methods.size(); ++m) {
      const char* color = kPalette[m % std::size(kPalette)];
      std::ostringstream pts;
      std::vector<std::pair<double, double>> xy;
      for (double b : budgets) {
        for (const auto& r : rows) {
          if (r.gamma != gamma || r.method != methods[m] || r.budget != b) continue;
          const double y = s.width ? r.mean_width : r.coverage_error;
          if (!std::isfinite(y) || (s.width && y <= 0)) continue;
          xy.emplace_back(s.panel->px(b), s.panel->py(y));
        }
      }
      for (const auto& [x, y] : xy) pts << x << ',' << y << ' ';
      if (xy.size() > 1) {
        svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"" << pts.str()
            << "\"/>\n";
      }
      for (const auto& [x, y] : xy) {
        svg << "<circle cx=\"" << x << "\" cy=\"" << y << "\" r=\"3\" fill=\"" << color << "\"/>\n";
      }
    }
    svg << "</g>\n";
  }

  for (std::size_t m = 0; m < methods.size(); ++m) {
    const double y = 380 + 18 * m;
    svg << "<line x1=\"80\" y1=\"" << y << "\" x2=\"110\" y2=\"" << y << "\" stroke=\""
        << kPalette[m % std::size(kPalette)] << "\" stroke-width=\"2\"/>\n";
    svg << "<text x=\"116\" y=\"" << y + 4 << "\" font-size=\"12\">" << escape_xml(methods[m]) << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

std::vector<std::filesystem::path> write_report(std::span<const CoverageRow> rows, const std::string& out_prefix) {
  if (rows.empty()) throw Error(ErrorCode::NoRows, "no rows");
  std::vector<std::filesystem::path> written;
  for (const auto& gamma : gamma_labels(rows)) {
    std::string tag = gamma;
    for (char& c : tag) {
      if (c == '/' || c == '\\' || c == ' ') c = '_';
    }
    for (const auto& [ext, body] : {std::pair{".csv", pivot_csv(rows, gamma)}, {".svg", render_svg(rows, gamma)}}) {
      const std::filesystem::path path = out_prefix + "_gamma-" + tag + ext;
      std::ofstream out(path);
      if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
      out << body;
      written.push_back(path);
    }
  }
  return written;
}

}  // namespace rarerate::report

#include "ergolab/output.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "ergolab/errors.hpp"

namespace ergolab {

namespace {

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&':
        out += "&amp;";
        break;
      case '<':
        out += "&lt;";
        break;
      case '>':
        out += "&gt;";
        break;
      default:
        out += c;
    }
  }
  return out;
}

}  // namespace

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string provenance_line(const std::string& command, const std::string& config_hash,
                            const std::vector<std::uint64_t>& seeds) {
  std::ostringstream os;
  os << "ergolab " << command << " config=" << config_hash << " seeds=";
  for (std::size_t i = 0; i < seeds.size(); ++i) os << (i ? ";" : "") << seeds[i];
  return os.str();
}

RunDirectory::RunDirectory(const std::filesystem::path& root, const std::string& name, const std::string& command,
                           const std::string& config_hash, std::vector<std::uint64_t> seeds)
    : provenance_(provenance_line(command, config_hash, seeds)) {
  std::filesystem::create_directories(root);
  const std::string stem = name + "-" + config_hash.substr(0, 8) + "-" + command + "-";
  for (std::size_t k = 1;; ++k) {
    const auto candidate = root / (stem + std::to_string(k));
    // create_directory reports false when the directory already exists.
    if (std::filesystem::create_directory(candidate)) {
      path_ = candidate;
      id_ = stem + std::to_string(k);
      return;
    }
  }
}

std::ofstream RunDirectory::create(const std::string& filename, const std::string& comment_prefix,
                                   const std::string& comment_suffix) const {
  const auto p = path_ / filename;
  if (std::filesystem::exists(p)) throw InvalidArgument("refusing to overwrite " + p.string());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw InvalidArgument("cannot create " + p.string());
  out << comment_prefix << provenance_ << comment_suffix << '\n';
  return out;
}

CsvWriter::CsvWriter(const RunDirectory& dir, const std::string& filename, const std::vector<std::string>& columns)
    : out_(dir.create(filename)), columns_(columns.size()) {
  for (std::size_t i = 0; i < columns.size(); ++i) out_ << (i ? "," : "") << columns[i];
  out_ << '\n';
}

CsvWriter& CsvWriter::cell(const std::string& s) {
  if (filled_ == columns_) throw InvalidArgument("CsvWriter: too many cells in row");
  out_ << (filled_ ? "," : "") << s;
  ++filled_;
  return *this;
}

CsvWriter& CsvWriter::cell(double v) { return cell(format_double(v)); }
CsvWriter& CsvWriter::cell(std::int64_t v) { return cell(std::to_string(v)); }
CsvWriter& CsvWriter::cell(std::uint64_t v) { return cell(std::to_string(v)); }

void CsvWriter::end_row() {
  if (filled_ != columns_) throw InvalidArgument("CsvWriter: row has too few cells");
  out_ << '\n';
  filled_ = 0;
}

void write_svg_plot(const RunDirectory& dir, const std::string& filename, const PlotSpec& spec,
                    const std::vector<PlotSeries>& series) {
  constexpr double W = 640, H = 440, L = 70, R = 20, T = 40, B = 50;
  static const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"};
  const auto tx = [&](double v) { return spec.log_x ? std::log10(v) : v; };
  const auto ty = [&](double v) { return spec.log_y ? std::log10(v) : v; };
  const auto usable = [&](const std::pair<double, double>& p) {
    return std::isfinite(tx(p.first)) && std::isfinite(ty(p.second));
  };

  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto& s : series) {
    for (const auto& p : s.points) {
      if (!usable(p)) continue;
      x0 = std::min(x0, tx(p.first));
      x1 = std::max(x1, tx(p.first));
      y0 = std::min(y0, ty(p.second));
      y1 = std::max(y1, ty(p.second));
    }
  }
  if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (x1 == x0) x0 -= 0.5, x1 += 0.5;
  if (y1 == y0) y0 -= 0.5, y1 += 0.5;
  const auto px = [&](double v) { return L + (tx(v) - x0) / (x1 - x0) * (W - L - R); };
  const auto py = [&](double v) { return H - B - (ty(v) - y0) / (y1 - y0) * (H - T - B); };

  auto out = dir.create(filename, "<!-- ", " -->");
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%.0f\" height=\"%.0f\" viewBox=\"0 0 %.0f %.0f\" "
                "font-family=\"sans-serif\" font-size=\"12\">\n",
                W, H, W, H);
  out << buf << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  std::snprintf(buf, sizeof buf,
                "<rect x=\"%.1f\" y=\"%.1f\" width=\"%.1f\" height=\"%.1f\" fill=\"none\" stroke=\"black\"/>\n", L, T,
                W - L - R, H - T - B);
  out << buf;
  out << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">" << xml_escape(spec.title)
      << "</text>\n";
  out << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\">"
      << xml_escape(spec.x_label) << (spec.log_x ? " (log10)" : "") << "</text>\n";
  out << "<text x=\"16\" y=\"" << (T + H - B) / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
      << (T + H - B) / 2 << ")\">" << xml_escape(spec.y_label) << (spec.log_y ? " (log10)" : "") << "</text>\n";
  for (int i = 0; i <= 4; ++i) {
    const double fx = x0 + (x1 - x0) * i / 4, fy = y0 + (y1 - y0) * i / 4;
    std::snprintf(buf, sizeof buf, "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"middle\">%.3g</text>\n",
                  L + (W - L - R) * i / 4, H - B + 16, fx);
    out << buf;
    std::snprintf(buf, sizeof buf, "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"end\">%.3g</text>\n", L - 6,
                  H - B - (H - T - B) * i / 4 + 4, fy);
    out << buf;
  }
  for (std::size_t s = 0; s < series.size(); ++s) {
    const char* color = kColors[s % 6];
    const auto& pts = series[s].points;
    if (series[s].line) {
      out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
      for (const auto& p : pts) {
        if (!usable(p)) continue;
        std::snprintf(buf, sizeof buf, "%.2f,%.2f ", px(p.first), py(p.second));
        out << buf;
      }
      out << "\"/>\n";
    } else {
      for (const auto& p : pts) {
        if (!usable(p)) continue;
        std::snprintf(buf, sizeof buf, "<circle cx=\"%.2f\" cy=\"%.2f\" r=\"1.2\" fill=\"%s\"/>\n", px(p.first),
                      py(p.second), color);
        out << buf;
      }
    }
    std::snprintf(buf, sizeof buf, "<text x=\"%.1f\" y=\"%.1f\" fill=\"%s\">%s</text>\n", L + 8,
                  T + 16 + 14 * double(s), color, xml_escape(series[s].label).c_str());
    out << buf;
  }
  out << "</svg>\n";
}

}  // namespace ergolab

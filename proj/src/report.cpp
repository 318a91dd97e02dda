#include "relcat/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "relcat/error.hpp"
#include "relcat/json_writer.hpp"
#include "relcat/text.hpp"

namespace relcat {
namespace {

constexpr const char* kRowTotal = "Total Sentences";
constexpr const char* kRowCategorized = "Categorized";
constexpr const char* kRowNa = "N/A (No Category Assigned)";
constexpr const char* kFont = "font-family=\"Helvetica, Arial, sans-serif\"";
constexpr const char* kColorA = "#1f77b4";
constexpr const char* kColorB = "#ff7f0e";

std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", x);
  std::string s(buf);
  if (s == "-0.00") s = "0.00";
  return s;
}

std::string xml_escape(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

class Svg {
 public:
  Svg() {
    out_ << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kCanvasWidth
         << "\" height=\"" << kCanvasHeight << "\" viewBox=\"0 0 " << kCanvasWidth << ' '
         << kCanvasHeight << "\">\n";
    out_ << "<rect x=\"0\" y=\"0\" width=\"" << kCanvasWidth << "\" height=\"" << kCanvasHeight
         << "\" fill=\"#ffffff\"/>\n";
  }

  void rect(double x, double y, double w, double h, std::string_view fill,
            std::string_view cls = {}, std::string_view extra = {}) {
    out_ << "<rect";
    if (!cls.empty()) out_ << " class=\"" << cls << '"';
    out_ << " x=\"" << num(x) << "\" y=\"" << num(y) << "\" width=\"" << num(w)
         << "\" height=\"" << num(h) << "\" fill=\"" << fill << '"';
    if (!extra.empty()) out_ << ' ' << extra;
    out_ << "/>\n";
  }

  void line(double x1, double y1, double x2, double y2) {
    out_ << "<line x1=\"" << num(x1) << "\" y1=\"" << num(y1) << "\" x2=\"" << num(x2)
         << "\" y2=\"" << num(y2) << "\" stroke=\"#333333\" stroke-width=\"1\"/>\n";
  }

  void text(double x, double y, std::string_view s, double size, std::string_view anchor,
            std::string_view cls = {}, std::string_view extra = {}) {
    out_ << "<text";
    if (!cls.empty()) out_ << " class=\"" << cls << '"';
    out_ << " x=\"" << num(x) << "\" y=\"" << num(y) << "\" " << kFont << " font-size=\""
         << num(size) << "\" text-anchor=\"" << anchor << '"';
    if (!extra.empty()) out_ << ' ' << extra;
    out_ << '>' << xml_escape(s) << "</text>\n";
  }

  std::string finish() {
    out_ << "</svg>\n";
    return out_.str();
  }

 private:
  std::ostringstream out_;
};

void title_and_axes(Svg& svg, const PlotSpec& spec) {
  svg.text(kCanvasWidth / 2.0, 28, spec.title, 18, "middle", "title", "font-weight=\"bold\"");
  if (!spec.x_label.empty()) {
    svg.text(kCanvasWidth / 2.0, kCanvasHeight - 12, spec.x_label, 13, "middle", "x-label");
  }
  if (!spec.y_label.empty()) {
    svg.text(18, kCanvasHeight / 2.0, spec.y_label, 13, "middle", "y-label",
             "transform=\"rotate(-90 18 " + num(kCanvasHeight / 2.0) + ")\"");
  }
}

void require_kind(const PlotSpec& spec, PlotKind kind, const char* what) {
  if (spec.kind != kind) throw PreconditionError(std::string(what) + ": plot spec kind mismatch");
}

std::string rate_text(const std::optional<double>& r) { return r ? format_fixed(*r, 4) : "n/a"; }

// Bar plot frame shared by both bar charts.
constexpr double kBarLeft = 300;
constexpr double kBarWidth = 560;
constexpr double kBarTop = 56;
constexpr double kBarBottom = 496;

void rate_axis(Svg& svg) {
  svg.line(kBarLeft, kBarTop, kBarLeft, kBarBottom);
  svg.line(kBarLeft, kBarBottom, kBarLeft + kBarWidth, kBarBottom);
  for (int t = 0; t <= 4; ++t) {
    const double x = kBarLeft + kBarWidth * t / 4.0;
    svg.line(x, kBarBottom, x, kBarBottom + 4);
    svg.text(x, kBarBottom + 17, format_fixed(t / 4.0, 2), 11, "middle", "tick");
  }
}

std::string hex_color(double t) {
  // White to #08306b, linear per channel.
  t = std::clamp(t, 0.0, 1.0);
  auto channel = [t](int lo) { return static_cast<int>(std::lround(255.0 - t * (255.0 - lo))); };
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", channel(0x08), channel(0x30), channel(0x6b));
  return buf;
}

}  // namespace

PlotSpec agreement_bars_spec() {
  return {PlotKind::kBar, "Category agreement by relationship category", "Agreement rate", "",
          false};
}

PlotSpec heatmap_spec() {
  return {PlotKind::kHeatmap, "Pairwise category assignments", "Model B category",
          "Model A category", true};
}

PlotSpec entity_bars_spec() {
  return {PlotKind::kGroupedBar, "Entity agreement by relationship category", "Agreement rate",
          "", false};
}

std::string plot_label(std::string_view key, const Taxonomy& taxonomy) {
  if (const Category* c = taxonomy.find(key)) {
    std::string name = c->display_name;
    constexpr std::string_view kSuffix = " Relationship";
    if (text::ends_with(name, kSuffix)) name.resize(name.size() - kSuffix.size());
    return name;
  }
  return std::string(key);
}

std::string emit_coverage_table(const std::vector<CoverageStats>& stats) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> header{"Metric"};
  for (const auto& s : stats) header.push_back(s.model_id);
  rows.push_back(header);
  if (!stats.empty()) {
    auto add = [&](const char* name, auto field) {
      std::vector<std::string> row{name};
      for (const auto& s : stats) row.push_back(std::to_string(s.*field));
      rows.push_back(std::move(row));
    };
    add(kRowTotal, &CoverageStats::total_sentences);
    add(kRowCategorized, &CoverageStats::categorized);
    add(kRowNa, &CoverageStats::not_applicable);
  }

  std::vector<std::size_t> width(header.size(), 0);
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) width[i] = std::max(width[i], row[i].size());
  }
  std::string out;
  auto emit_row = [&](const std::vector<std::string>& row) {
    std::string line;
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) line += " | ";
      const std::size_t pad = width[i] - row[i].size();
      // Label column left-aligned, counts right-aligned.
      if (i == 0) line += row[i] + std::string(pad, ' ');
      else line += std::string(pad, ' ') + row[i];
    }
    while (!line.empty() && line.back() == ' ') line.pop_back();
    out += line + '\n';
  };
  emit_row(rows[0]);
  std::string rule;
  for (std::size_t i = 0; i < width.size(); ++i) {
    if (i) rule += "-+-";
    rule += std::string(width[i], '-');
  }
  out += rule + '\n';
  for (std::size_t r = 1; r < rows.size(); ++r) emit_row(rows[r]);
  return out;
}

std::string emit_coverage_csv(const std::vector<CoverageStats>& stats) {
  std::string out = "metric";
  for (const auto& s : stats) out += ',' + csv_escape(s.model_id);
  out += '\n';
  if (stats.empty()) return out;
  auto add = [&](const char* name, auto field) {
    out += csv_escape(name);
    for (const auto& s : stats) out += ',' + std::to_string(s.*field);
    out += '\n';
  };
  add(kRowTotal, &CoverageStats::total_sentences);
  add(kRowCategorized, &CoverageStats::categorized);
  add(kRowNa, &CoverageStats::not_applicable);
  return out;
}

namespace {

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur.push_back('"');
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (quoted) throw FormatError("coverage csv: unterminated quote");
  fields.push_back(std::move(cur));
  return fields;
}

std::size_t parse_count(const std::string& s) {
  if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos) {
    throw FormatError("coverage csv: bad count '" + s + "'");
  }
  return static_cast<std::size_t>(std::stoull(s));
}

}  // namespace

std::vector<CoverageStats> parse_coverage_csv(std::string_view csv) {
  const auto lines = text::split_lines(csv);
  if (lines.empty()) throw FormatError("coverage csv: missing header");
  const auto header = split_csv_line(lines[0]);
  if (header.empty() || header[0] != "metric") throw FormatError("coverage csv: bad header");
  std::vector<CoverageStats> stats(header.size() - 1);
  for (std::size_t i = 1; i < header.size(); ++i) stats[i - 1].model_id = header[i];
  if (stats.empty()) return stats;
  if (lines.size() != 4) throw FormatError("coverage csv: expected 3 data rows");
  const std::pair<const char*, std::size_t CoverageStats::*> rows[] = {
      {kRowTotal, &CoverageStats::total_sentences},
      {kRowCategorized, &CoverageStats::categorized},
      {kRowNa, &CoverageStats::not_applicable}};
  for (std::size_t r = 0; r < 3; ++r) {
    const auto fields = split_csv_line(lines[r + 1]);
    if (fields.size() != header.size() || fields[0] != rows[r].first) {
      throw FormatError("coverage csv: malformed row " + std::to_string(r + 1));
    }
    for (std::size_t i = 1; i < fields.size(); ++i) stats[i - 1].*(rows[r].second) = parse_count(fields[i]);
  }
  for (auto& s : stats) {
    if (s.categorized + s.not_applicable > s.total_sentences) {
      throw FormatError("coverage csv: counts exceed total for " + s.model_id);
    }
    s.uncovered = s.total_sentences - s.categorized - s.not_applicable;
  }
  return stats;
}

std::string emit_agreement_bars(const AgreementReport& report, const Taxonomy& taxonomy,
                                const PlotSpec& spec) {
  require_kind(spec, PlotKind::kBar, "emit_agreement_bars");
  std::vector<const CategoryRate*> bars;
  for (const auto& c : report.per_category) {
    if (!c.rate) continue;
    if (!spec.include_zero && *c.rate <= 0.0) continue;
    bars.push_back(&c);
  }
  std::stable_sort(bars.begin(), bars.end(), [](const CategoryRate* a, const CategoryRate* b) {
    return *a->rate > *b->rate;
  });

  Svg svg;
  title_and_axes(svg, spec);
  if (bars.empty()) return svg.finish();
  rate_axis(svg);

  const double slot = (kBarBottom - kBarTop) / static_cast<double>(bars.size());
  const double height = std::min(28.0, slot * 0.75);
  for (std::size_t i = 0; i < bars.size(); ++i) {
    const CategoryRate& c = *bars[i];
    const double y = kBarTop + slot * static_cast<double>(i) + (slot - height) / 2;
    const double mid = y + height / 2 + 4;
    svg.text(kBarLeft - 8, mid, plot_label(c.key, taxonomy), 12, "end", "bar-label");
    svg.rect(kBarLeft, y, kBarWidth * *c.rate, height, kColorA, "bar",
             "data-category=\"" + xml_escape(c.key) + "\"");
    svg.text(kBarLeft + kBarWidth * *c.rate + 6, mid, rate_text(c.rate), 11, "start",
             "bar-value");
  }
  return svg.finish();
}

std::string emit_heatmap(const AgreementMatrix& matrix, const Taxonomy& taxonomy,
                         const PlotSpec& spec) {
  require_kind(spec, PlotKind::kHeatmap, "emit_heatmap");
  const std::size_t n = matrix.labels.size();
  if (matrix.counts.size() != n) throw PreconditionError("emit_heatmap: matrix is not square");
  for (const auto& row : matrix.counts) {
    if (row.size() != n) throw PreconditionError("emit_heatmap: matrix is not square");
  }

  Svg svg;
  title_and_axes(svg, spec);
  if (n == 0) return svg.finish();

  std::size_t peak = 0;
  for (const auto& row : matrix.counts) {
    for (std::size_t v : row) peak = std::max(peak, v);
  }
  constexpr double left = 230, top = 170, right = 20, bottom = 30;
  const double cell = std::min((kCanvasWidth - left - right) / static_cast<double>(n),
                               (kCanvasHeight - top - bottom) / static_cast<double>(n));
  const double font = std::clamp(cell * 0.45, 6.0, 12.0);

  for (std::size_t i = 0; i < n; ++i) {
    const double cy = top + cell * static_cast<double>(i) + cell / 2 + font / 3;
    svg.text(left - 6, cy, plot_label(matrix.labels[i], taxonomy), font, "end", "row-label");
    const double cx = left + cell * static_cast<double>(i) + cell / 2;
    const double ly = top - 6;
    svg.text(cx, ly, plot_label(matrix.labels[i], taxonomy), font, "start", "col-label",
             "transform=\"rotate(-60 " + num(cx) + ' ' + num(ly) + ")\"");
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const std::size_t v = matrix.counts[i][j];
      const double t = peak == 0 ? 0.0 : static_cast<double>(v) / static_cast<double>(peak);
      const double x = left + cell * static_cast<double>(j);
      const double y = top + cell * static_cast<double>(i);
      svg.rect(x, y, cell, cell, hex_color(t), "cell",
               "stroke=\"#dddddd\" stroke-width=\"0.5\" data-row=\"" +
                   xml_escape(matrix.labels[i]) + "\" data-col=\"" +
                   xml_escape(matrix.labels[j]) + "\" data-count=\"" + std::to_string(v) + '"');
      if (v == 0) continue;
      svg.text(x + cell / 2, y + cell / 2 + font / 3, std::to_string(v), font, "middle",
               "count", t > 0.5 ? "fill=\"#ffffff\"" : "fill=\"#000000\"");
    }
  }
  return svg.finish();
}

std::string emit_entity_bars(const AgreementReport& report, const Taxonomy& taxonomy,
                             const PlotSpec& spec) {
  require_kind(spec, PlotKind::kGroupedBar, "emit_entity_bars");
  std::vector<const CategoryRate*> groups;
  for (const auto& c : report.per_category) {
    if (!c.entity_a_rate || !c.entity_b_rate) continue;
    if (!spec.include_zero && *c.entity_a_rate <= 0.0 && *c.entity_b_rate <= 0.0) continue;
    groups.push_back(&c);
  }
  std::stable_sort(groups.begin(), groups.end(),
                   [](const CategoryRate* a, const CategoryRate* b) {
                     if (*a->entity_a_rate != *b->entity_a_rate) {
                       return *a->entity_a_rate > *b->entity_a_rate;
                     }
                     return *a->entity_b_rate > *b->entity_b_rate;
                   });

  Svg svg;
  title_and_axes(svg, spec);
  if (groups.empty()) return svg.finish();
  rate_axis(svg);

  // Legend, top right.
  svg.rect(kBarLeft + kBarWidth - 150, 36, 12, 12, kColorA, "legend");
  svg.text(kBarLeft + kBarWidth - 134, 46, "Entity A", 11, "start", "legend-label");
  svg.rect(kBarLeft + kBarWidth - 70, 36, 12, 12, kColorB, "legend");
  svg.text(kBarLeft + kBarWidth - 54, 46, "Entity B", 11, "start", "legend-label");

  const double slot = (kBarBottom - kBarTop) / static_cast<double>(groups.size());
  const double height = std::min(14.0, slot * 0.38);
  for (std::size_t i = 0; i < groups.size(); ++i) {
    const CategoryRate& c = *groups[i];
    const double y0 = kBarTop + slot * static_cast<double>(i) + (slot - 2 * height) / 2;
    svg.text(kBarLeft - 8, y0 + height + 4, plot_label(c.key, taxonomy), 12, "end",
             "bar-label");
    const std::string tag = "data-category=\"" + xml_escape(c.key) + "\"";
    const std::pair<double, const char*> bars[] = {{*c.entity_a_rate, kColorA},
                                                   {*c.entity_b_rate, kColorB}};
    for (int k = 0; k < 2; ++k) {
      const double y = y0 + height * k;
      svg.rect(kBarLeft, y, kBarWidth * bars[k].first, height, bars[k].second,
               k == 0 ? "bar-a" : "bar-b", tag);
      svg.text(kBarLeft + kBarWidth * bars[k].first + 6, y + height - 3,
               format_fixed(bars[k].first, 4), 10, "start", "bar-value");
    }
  }
  return svg.finish();
}

}  // namespace relcat

#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "relcat/metrics.hpp"
#include "relcat/taxonomy.hpp"

namespace relcat {

enum class PlotKind { kBar, kGroupedBar, kHeatmap };

struct PlotSpec {
  PlotKind kind = PlotKind::kBar;
  std::string title;
  std::string x_label;
  std::string y_label;
  bool include_zero = false;  // false: drop categories whose rates are all zero
};

PlotSpec agreement_bars_spec();
PlotSpec heatmap_spec();
PlotSpec entity_bars_spec();

inline constexpr int kCanvasWidth = 960;
inline constexpr int kCanvasHeight = 540;

// Rows Total / Categorized / N/A, one column per model.
std::string emit_coverage_table(const std::vector<CoverageStats>& stats);
std::string emit_coverage_csv(const std::vector<CoverageStats>& stats);
// Inverse of emit_coverage_csv; uncovered is recovered from the identity.
std::vector<CoverageStats> parse_coverage_csv(std::string_view csv);

// Horizontal bars sorted by descending rate.
std::string emit_agreement_bars(const AgreementReport& report,
                                const Taxonomy& taxonomy = Taxonomy::builtin(),
                                const PlotSpec& spec = agreement_bars_spec());
// Linear white-to-dark shading; counts printed in nonzero cells.
std::string emit_heatmap(const AgreementMatrix& matrix,
                         const Taxonomy& taxonomy = Taxonomy::builtin(),
                         const PlotSpec& spec = heatmap_spec());
// Entity A vs entity B bars per category, sorted by entity A rate.
std::string emit_entity_bars(const AgreementReport& report,
                             const Taxonomy& taxonomy = Taxonomy::builtin(),
                             const PlotSpec& spec = entity_bars_spec());

// Short label used on plot axes: display name without "Relationship", or the
// raw key for labels outside the taxonomy.
std::string plot_label(std::string_view key, const Taxonomy& taxonomy);

}  // namespace relcat

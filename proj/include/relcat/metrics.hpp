#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "relcat/align.hpp"
#include "relcat/corpus.hpp"
#include "relcat/parser.hpp"
#include "relcat/taxonomy.hpp"

namespace relcat {

// Counted over source sentences: categorized + not_applicable + uncovered ==
// total_sentences.
struct CoverageStats {
  std::string model_id;
  std::size_t total_sentences = 0;
  std::size_t categorized = 0;
  std::size_t not_applicable = 0;  // N/A, plus None (parse failure)
  std::size_t uncovered = 0;       // no aligned record

  CoverageStats& operator+=(const CoverageStats& o);
  bool operator==(const CoverageStats&) const = default;
};

// `records` must already carry source_sent_id from align_to_source.
CoverageStats coverage(const std::vector<ClassifiedSentence>& records, const CleanDocument& doc,
                       std::string_view model_id);
CoverageStats coverage(const std::vector<ClassifiedSentence>& records,
                       const std::vector<CleanDocument>& docs, std::string_view model_id);

enum class CategoryDenominator {
  kModelA,  // pairs where model A assigned the category
  kUnion,   // pairs where either model assigned it
};

struct EntityOptions {
  bool fuzzy = false;
  double fuzzy_threshold = 0.9;
};

// Labels agree only when equal: same id, both N/A, both None, or identical
// out-of-taxonomy text.
bool labels_agree(const CategoryLabel& a, const CategoryLabel& b);

// Case-fold, trim, drop a leading article, collapse whitespace, drop trailing
// punctuation.
std::string normalize_entity(std::string_view entity);
bool entities_match(std::string_view a, std::string_view b, const EntityOptions& options = {});

struct CategoryRate {
  std::string key;  // label key: id, "N/A", "None" or "out:<label>"
  std::size_t pairs = 0;
  std::size_t agree = 0;
  std::optional<double> rate;
  std::size_t entity_a_matches = 0;
  std::size_t entity_b_matches = 0;
  std::optional<double> entity_a_rate;
  std::optional<double> entity_b_rate;
};

struct AgreementMatrix {
  std::vector<std::string> labels;
  std::vector<std::vector<std::size_t>> counts;  // [label_a][label_b]

  std::size_t total() const;
  std::size_t diagonal() const;
  std::optional<std::size_t> index_of(std::string_view label) const;
  std::size_t at(std::string_view label_a, std::string_view label_b) const;
};

struct CategoryAgreement {
  std::size_t n_pairs = 0;
  std::size_t agree = 0;
  std::optional<double> overall;
  std::vector<CategoryRate> per_category;
};

struct EntityAgreement {
  std::optional<double> a_micro;
  std::optional<double> b_micro;
  std::optional<double> a_macro;
  std::optional<double> b_macro;
};

struct AgreementReport {
  std::size_t n_pairs = 0;
  std::size_t n_agree = 0;
  std::optional<double> category_agreement_overall;
  std::vector<CategoryRate> per_category;
  std::optional<double> entity_a_rate;  // pair-weighted
  std::optional<double> entity_b_rate;
  std::optional<double> entity_a_macro;  // mean of per-category rates
  std::optional<double> entity_b_macro;
  AgreementMatrix matrix;
  CategoryDenominator denominator = CategoryDenominator::kModelA;
  EntityOptions entity_options;
};

// Additive counts behind every agreement number. merge() is associative and
// commutative, so per-paragraph tallies can be combined in any order.
class AgreementTally {
 public:
  void add(const CategoryLabel& label_a, const CategoryLabel& label_b, bool entity_a_match,
           bool entity_b_match);
  void add(const AlignmentPair& pair, const EntityOptions& options = {});
  AgreementTally& merge(const AgreementTally& other);

  AgreementReport report(const Taxonomy& taxonomy = Taxonomy::builtin(),
                         CategoryDenominator denominator = CategoryDenominator::kModelA,
                         const EntityOptions& options = {}) const;

  std::size_t n_pairs() const { return n_pairs_; }
  bool operator==(const AgreementTally&) const = default;

 private:
  struct EntityCounts {
    std::size_t a = 0;
    std::size_t b = 0;
    bool operator==(const EntityCounts&) const = default;
  };
  std::size_t n_pairs_ = 0;
  std::map<std::pair<std::string, std::string>, std::size_t> cells_;
  std::map<std::string, EntityCounts> entity_by_label_a_;
};

CategoryAgreement category_agreement(const std::vector<AlignmentPair>& pairs,
                                     const Taxonomy& taxonomy = Taxonomy::builtin(),
                                     CategoryDenominator denominator = CategoryDenominator::kModelA);
EntityAgreement entity_agreement(const std::vector<AlignmentPair>& pairs,
                                 const EntityOptions& options = {});
AgreementMatrix agreement_matrix(const std::vector<AlignmentPair>& pairs,
                                 const Taxonomy& taxonomy = Taxonomy::builtin());
AgreementReport agreement_report(const std::vector<AlignmentPair>& pairs,
                                 const Taxonomy& taxonomy = Taxonomy::builtin(),
                                 CategoryDenominator denominator = CategoryDenominator::kModelA,
                                 const EntityOptions& options = {});

// Taxonomy ids in order, then N/A, None, then every other present key sorted.
std::vector<std::string> label_order(const Taxonomy& taxonomy,
                                     const std::vector<std::string>& present);

struct MetricsBundle {
  std::string model_a;
  std::string model_b;
  double alignment_threshold = kDefaultAlignmentThreshold;
  std::vector<CoverageStats> coverage;
  AgreementReport agreement;
};

std::string to_metrics_json(const MetricsBundle& bundle, const Taxonomy& taxonomy);
MetricsBundle read_metrics_json(std::string_view json);
std::string to_per_category_csv(const AgreementReport& report);
std::string to_matrix_csv(const AgreementMatrix& matrix);

std::string csv_escape(std::string_view field);

}  // namespace relcat

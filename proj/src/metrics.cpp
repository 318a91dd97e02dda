#include "relcat/metrics.hpp"

#include <algorithm>
#include <set>
#include <unordered_map>

#include <json.hpp>

#include "relcat/error.hpp"
#include "relcat/json_writer.hpp"
#include "relcat/text.hpp"

namespace relcat {

namespace {

std::optional<double> ratio(std::size_t num, std::size_t den) {
  if (den == 0) return std::nullopt;
  return static_cast<double>(num) / static_cast<double>(den);
}

bool is_trailing_punct(char c) {
  return c == '.' || c == ',' || c == ';' || c == ':' || c == '!' || c == '?';
}

std::string normalize_entity_once(const std::string& s) {
  std::string out = text::to_lower(text::collapse_whitespace(s));
  while (!out.empty() && is_trailing_punct(out.back())) out.pop_back();
  for (std::string_view article : {"a ", "an ", "the "}) {
    if (out.size() > article.size() && out.compare(0, article.size(), article) == 0) {
      out.erase(0, article.size());
      break;
    }
  }
  return std::string(text::trim(out));
}

const char* denominator_name(CategoryDenominator d) {
  return d == CategoryDenominator::kUnion ? "union" : "model_a";
}

std::optional<double> opt_double(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<double>();
}

}  // namespace

CoverageStats& CoverageStats::operator+=(const CoverageStats& o) {
  total_sentences += o.total_sentences;
  categorized += o.categorized;
  not_applicable += o.not_applicable;
  uncovered += o.uncovered;
  return *this;
}

CoverageStats coverage(const std::vector<ClassifiedSentence>& records, const CleanDocument& doc,
                       std::string_view model_id) {
  std::unordered_map<std::string, const ClassifiedSentence*> by_sentence;
  for (const auto& r : records) {
    if (r.source_sent_id && r.source_para.doc_id == doc.doc_id) {
      by_sentence.emplace(*r.source_sent_id, &r);
    }
  }
  CoverageStats stats;
  stats.model_id = std::string(model_id);
  for (const auto& para : doc.paragraphs) {
    for (const auto& sent : para.sentences) {
      ++stats.total_sentences;
      auto it = by_sentence.find(sent.sent_id);
      if (it == by_sentence.end()) {
        ++stats.uncovered;
        continue;
      }
      const auto kind = it->second->label.kind();
      if (kind == CategoryLabel::Kind::kNotApplicable || kind == CategoryLabel::Kind::kNone) {
        ++stats.not_applicable;
      } else {
        ++stats.categorized;
      }
    }
  }
  return stats;
}

CoverageStats coverage(const std::vector<ClassifiedSentence>& records,
                       const std::vector<CleanDocument>& docs, std::string_view model_id) {
  CoverageStats total;
  total.model_id = std::string(model_id);
  for (const auto& doc : docs) total += coverage(records, doc, model_id);
  return total;
}

bool labels_agree(const CategoryLabel& a, const CategoryLabel& b) { return a == b; }

std::string normalize_entity(std::string_view entity) {
  return text::until_stable(std::string(entity), normalize_entity_once);
}

bool entities_match(std::string_view a, std::string_view b, const EntityOptions& options) {
  const std::string na = normalize_entity(a);
  const std::string nb = normalize_entity(b);
  if (na == nb) return true;
  return options.fuzzy && similarity(na, nb) >= options.fuzzy_threshold;
}

std::size_t AgreementMatrix::total() const {
  std::size_t sum = 0;
  for (const auto& row : counts) {
    for (std::size_t c : row) sum += c;
  }
  return sum;
}

std::size_t AgreementMatrix::diagonal() const {
  std::size_t sum = 0;
  for (std::size_t i = 0; i < counts.size(); ++i) sum += counts[i][i];
  return sum;
}

std::optional<std::size_t> AgreementMatrix::index_of(std::string_view label) const {
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == label) return i;
  }
  return std::nullopt;
}

std::size_t AgreementMatrix::at(std::string_view label_a, std::string_view label_b) const {
  const auto i = index_of(label_a), j = index_of(label_b);
  if (!i || !j) return 0;
  return counts[*i][*j];
}

std::vector<std::string> label_order(const Taxonomy& taxonomy,
                                     const std::vector<std::string>& present) {
  std::vector<std::string> labels;
  for (const auto& c : taxonomy.categories()) labels.push_back(c.id);
  labels.push_back("N/A");
  labels.push_back("None");
  std::set<std::string> extra;
  for (const auto& key : present) {
    if (std::find(labels.begin(), labels.end(), key) == labels.end()) extra.insert(key);
  }
  labels.insert(labels.end(), extra.begin(), extra.end());
  return labels;
}

void AgreementTally::add(const CategoryLabel& label_a, const CategoryLabel& label_b,
                         bool entity_a_match, bool entity_b_match) {
  ++n_pairs_;
  const std::string key_a = label_a.key();
  ++cells_[{key_a, label_b.key()}];
  EntityCounts& e = entity_by_label_a_[key_a];
  e.a += entity_a_match ? 1 : 0;
  e.b += entity_b_match ? 1 : 0;
}

void AgreementTally::add(const AlignmentPair& pair, const EntityOptions& options) {
  add(pair.rec_a.label, pair.rec_b.label,
      entities_match(pair.rec_a.entity_a, pair.rec_b.entity_a, options),
      entities_match(pair.rec_a.entity_b, pair.rec_b.entity_b, options));
}

AgreementTally& AgreementTally::merge(const AgreementTally& other) {
  n_pairs_ += other.n_pairs_;
  for (const auto& [cell, n] : other.cells_) cells_[cell] += n;
  for (const auto& [key, e] : other.entity_by_label_a_) {
    entity_by_label_a_[key].a += e.a;
    entity_by_label_a_[key].b += e.b;
  }
  return *this;
}

AgreementReport AgreementTally::report(const Taxonomy& taxonomy,
                                       CategoryDenominator denominator,
                                       const EntityOptions& options) const {
  AgreementReport r;
  r.n_pairs = n_pairs_;
  r.denominator = denominator;
  r.entity_options = options;

  std::vector<std::string> present;
  for (const auto& [cell, n] : cells_) {
    present.push_back(cell.first);
    present.push_back(cell.second);
  }
  r.matrix.labels = label_order(taxonomy, present);
  const std::size_t n = r.matrix.labels.size();
  r.matrix.counts.assign(n, std::vector<std::size_t>(n, 0));
  for (const auto& [cell, count] : cells_) {
    r.matrix.counts[*r.matrix.index_of(cell.first)][*r.matrix.index_of(cell.second)] = count;
  }
  r.n_agree = r.matrix.diagonal();
  r.category_agreement_overall = ratio(r.n_agree, r.n_pairs);

  std::size_t entity_a_total = 0, entity_b_total = 0;
  double macro_a = 0.0, macro_b = 0.0;
  std::size_t macro_n = 0;
  for (std::size_t i = 0; i < n; ++i) {
    CategoryRate rate;
    rate.key = r.matrix.labels[i];
    std::size_t row = 0, col = 0;
    for (std::size_t j = 0; j < n; ++j) {
      row += r.matrix.counts[i][j];
      col += r.matrix.counts[j][i];
    }
    rate.agree = r.matrix.counts[i][i];
    rate.pairs = denominator == CategoryDenominator::kUnion ? row + col - rate.agree : row;
    rate.rate = ratio(rate.agree, rate.pairs);
    if (auto it = entity_by_label_a_.find(rate.key); it != entity_by_label_a_.end()) {
      rate.entity_a_matches = it->second.a;
      rate.entity_b_matches = it->second.b;
    }
    rate.entity_a_rate = ratio(rate.entity_a_matches, row);
    rate.entity_b_rate = ratio(rate.entity_b_matches, row);
    entity_a_total += rate.entity_a_matches;
    entity_b_total += rate.entity_b_matches;
    if (row > 0) {
      macro_a += *rate.entity_a_rate;
      macro_b += *rate.entity_b_rate;
      ++macro_n;
    }
    r.per_category.push_back(std::move(rate));
  }
  r.entity_a_rate = ratio(entity_a_total, r.n_pairs);
  r.entity_b_rate = ratio(entity_b_total, r.n_pairs);
  if (macro_n > 0) {
    r.entity_a_macro = macro_a / static_cast<double>(macro_n);
    r.entity_b_macro = macro_b / static_cast<double>(macro_n);
  }
  return r;
}

AgreementReport agreement_report(const std::vector<AlignmentPair>& pairs,
                                 const Taxonomy& taxonomy, CategoryDenominator denominator,
                                 const EntityOptions& options) {
  AgreementTally tally;
  for (const auto& p : pairs) tally.add(p, options);
  return tally.report(taxonomy, denominator, options);
}

CategoryAgreement category_agreement(const std::vector<AlignmentPair>& pairs,
                                     const Taxonomy& taxonomy,
                                     CategoryDenominator denominator) {
  const AgreementReport r = agreement_report(pairs, taxonomy, denominator);
  return {r.n_pairs, r.n_agree, r.category_agreement_overall, r.per_category};
}

EntityAgreement entity_agreement(const std::vector<AlignmentPair>& pairs,
                                 const EntityOptions& options) {
  const AgreementReport r = agreement_report(pairs, Taxonomy::builtin(),
                                             CategoryDenominator::kModelA, options);
  return {r.entity_a_rate, r.entity_b_rate, r.entity_a_macro, r.entity_b_macro};
}

AgreementMatrix agreement_matrix(const std::vector<AlignmentPair>& pairs,
                                 const Taxonomy& taxonomy) {
  return agreement_report(pairs, taxonomy).matrix;
}

std::string csv_escape(std::string_view field) {
  if (field.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::string to_metrics_json(const MetricsBundle& m, const Taxonomy& taxonomy) {
  const AgreementReport& r = m.agreement;
  JsonWriter w(true);
  w.begin_object();
  w.key("models").begin_object().key("a").value(m.model_a).key("b").value(m.model_b).end_object();
  w.key("alignment_threshold").fixed(m.alignment_threshold);
  w.key("coverage_denominator").value("source_sentences");
  w.key("coverage").begin_array();
  for (const auto& c : m.coverage) {
    w.begin_object()
        .key("model_id").value(c.model_id)
        .key("total_sentences").value(static_cast<std::uint64_t>(c.total_sentences))
        .key("categorized").value(static_cast<std::uint64_t>(c.categorized))
        .key("not_applicable").value(static_cast<std::uint64_t>(c.not_applicable))
        .key("uncovered").value(static_cast<std::uint64_t>(c.uncovered))
        .end_object();
  }
  w.end_array();

  w.key("agreement").begin_object();
  w.key("n_pairs").value(static_cast<std::uint64_t>(r.n_pairs));
  w.key("n_agree").value(static_cast<std::uint64_t>(r.n_agree));
  w.key("category_agreement_overall").fixed(r.category_agreement_overall);
  w.key("per_category_denominator").value(denominator_name(r.denominator));
  w.key("entity_match").value(r.entity_options.fuzzy
                                  ? "fuzzy>=" + format_fixed(r.entity_options.fuzzy_threshold, 2)
                                  : std::string("exact"));
  w.key("entity_a_rate").fixed(r.entity_a_rate);
  w.key("entity_b_rate").fixed(r.entity_b_rate);
  w.key("entity_a_macro").fixed(r.entity_a_macro);
  w.key("entity_b_macro").fixed(r.entity_b_macro);
  w.key("per_category").begin_array();
  for (const auto& c : r.per_category) {
    const Category* cat = taxonomy.find(c.key);
    w.begin_object()
        .key("category").value(c.key)
        .key("display_name").value(cat ? cat->display_name : c.key)
        .key("pairs").value(static_cast<std::uint64_t>(c.pairs))
        .key("agree").value(static_cast<std::uint64_t>(c.agree))
        .key("rate").fixed(c.rate)
        .key("entity_a_matches").value(static_cast<std::uint64_t>(c.entity_a_matches))
        .key("entity_b_matches").value(static_cast<std::uint64_t>(c.entity_b_matches))
        .key("entity_a_rate").fixed(c.entity_a_rate)
        .key("entity_b_rate").fixed(c.entity_b_rate)
        .end_object();
  }
  w.end_array();
  w.key("matrix").begin_object();
  w.key("labels").string_array(r.matrix.labels);
  w.key("counts").begin_array();
  for (const auto& row : r.matrix.counts) {
    w.uint_array(row);
  }
  w.end_array();
  w.end_object();
  w.end_object();
  w.end_object();
  return w.str() + "\n";
}

MetricsBundle read_metrics_json(std::string_view json) {
  MetricsBundle m;
  try {
    const auto j = nlohmann::json::parse(json);
    m.model_a = j.at("models").at("a").get<std::string>();
    m.model_b = j.at("models").at("b").get<std::string>();
    m.alignment_threshold = j.at("alignment_threshold").get<double>();
    for (const auto& c : j.at("coverage")) {
      m.coverage.push_back({c.at("model_id").get<std::string>(),
                            c.at("total_sentences").get<std::size_t>(),
                            c.at("categorized").get<std::size_t>(),
                            c.at("not_applicable").get<std::size_t>(),
                            c.at("uncovered").get<std::size_t>()});
    }
    const auto& a = j.at("agreement");
    AgreementReport& r = m.agreement;
    r.n_pairs = a.at("n_pairs").get<std::size_t>();
    r.n_agree = a.at("n_agree").get<std::size_t>();
    r.category_agreement_overall = opt_double(a, "category_agreement_overall");
    r.denominator = a.at("per_category_denominator") == "union" ? CategoryDenominator::kUnion
                                                                : CategoryDenominator::kModelA;
    r.entity_a_rate = opt_double(a, "entity_a_rate");
    r.entity_b_rate = opt_double(a, "entity_b_rate");
    r.entity_a_macro = opt_double(a, "entity_a_macro");
    r.entity_b_macro = opt_double(a, "entity_b_macro");
    for (const auto& c : a.at("per_category")) {
      CategoryRate rate;
      rate.key = c.at("category").get<std::string>();
      rate.pairs = c.at("pairs").get<std::size_t>();
      rate.agree = c.at("agree").get<std::size_t>();
      rate.rate = opt_double(c, "rate");
      rate.entity_a_matches = c.at("entity_a_matches").get<std::size_t>();
      rate.entity_b_matches = c.at("entity_b_matches").get<std::size_t>();
      rate.entity_a_rate = opt_double(c, "entity_a_rate");
      rate.entity_b_rate = opt_double(c, "entity_b_rate");
      r.per_category.push_back(std::move(rate));
    }
    r.matrix.labels = a.at("matrix").at("labels").get<std::vector<std::string>>();
    r.matrix.counts = a.at("matrix").at("counts").get<std::vector<std::vector<std::size_t>>>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("invalid metrics.json: ") + e.what());
  }
  return m;
}

std::string to_per_category_csv(const AgreementReport& report) {
  auto rate = [](const std::optional<double>& r) { return r ? format_fixed(*r) : std::string(); };
  std::string out = "category_id,pairs,agree,rate,entity_a_rate,entity_b_rate\n";
  for (const auto& c : report.per_category) {
    out += csv_escape(c.key) + "," + std::to_string(c.pairs) + "," + std::to_string(c.agree) +
           "," + rate(c.rate) + "," + rate(c.entity_a_rate) + "," + rate(c.entity_b_rate) + "\n";
  }
  return out;
}

std::string to_matrix_csv(const AgreementMatrix& matrix) {
  std::string out = "model_a\\model_b";
  for (const auto& l : matrix.labels) out += "," + csv_escape(l);
  out += "\n";
  for (std::size_t i = 0; i < matrix.labels.size(); ++i) {
    out += csv_escape(matrix.labels[i]);
    for (std::size_t v : matrix.counts[i]) out += "," + std::to_string(v);
    out += "\n";
  }
  return out;
}

}  // namespace relcat

#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "relcat/taxonomy.hpp"

namespace relcat {

struct SourcePara {
  std::string doc_id;
  std::size_t para_index = 0;

  bool operator==(const SourcePara&) const = default;
  bool operator<(const SourcePara& o) const {
    return doc_id != o.doc_id ? doc_id < o.doc_id : para_index < o.para_index;
  }
};

// One model's verdict for one sentence.
struct ClassifiedSentence {
  std::string model_id;
  std::string sent_text;  // as echoed by the model, citations stripped
  CategoryLabel label = CategoryLabel::none();
  std::string entity_a;
  std::string entity_b;
  SourcePara source_para;
  std::vector<std::string> parse_warnings;
  // Filled in by align_to_source.
  std::optional<std::string> source_sent_id;
  std::optional<double> source_sim;
};

// Per-line accounting: every input line lands in exactly one of
// fluff_lines_removed, consumed_lines or dropped_lines.
struct ParseReport {
  std::vector<ClassifiedSentence> records;
  std::size_t dropped_blocks = 0;
  std::size_t fluff_lines_removed = 0;
  std::size_t consumed_lines = 0;
  std::size_t dropped_lines = 0;
  std::size_t total_lines = 0;
};

// Drops blank lines, decoration lines (***, ---, **, rules) and prose lines
// outside the span of field-tag lines; removes list numbering in front of
// field tags and inline ** runs.
std::string strip_fluff(std::string_view raw);

// Never throws. Recognizes Sentence/Category/A/B stanzas with reordered or
// missing entity lines, bold tags, list numbering and the compact
// "Sentence: .. | Category: .. | A: .. | B: .." form.
ParseReport parse_response(std::string_view raw, std::string_view model_id,
                           const SourcePara& source_para,
                           const Taxonomy& taxonomy = Taxonomy::builtin());

// Canonical four-line stanza; parse_response(render_stanza(r)) reproduces r
// up to warnings.
std::string render_stanza(const ClassifiedSentence& record,
                          const Taxonomy& taxonomy = Taxonomy::builtin());

// parsed.<model_id>.jsonl:
// {"model_id","doc_id","para_index","sent_text","category","entity_a","entity_b","warnings"}
std::string to_parsed_jsonl(const std::vector<ClassifiedSentence>& records);
std::vector<ClassifiedSentence> read_parsed_jsonl(std::string_view jsonl);

}  // namespace relcat

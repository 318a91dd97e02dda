#include "relcat/parser.hpp"

#include <array>
#include <set>

#include <json.hpp>

#include "relcat/corpus.hpp"
#include "relcat/error.hpp"
#include "relcat/json_writer.hpp"
#include "relcat/text.hpp"

namespace relcat {

namespace {

enum class Field { kSentence, kCategory, kEntityA, kEntityB };

const char* field_name(Field f) {
  switch (f) {
    case Field::kSentence: return "Sentence";
    case Field::kCategory: return "Category";
    case Field::kEntityA: return "A";
    case Field::kEntityB: return "B";
  }
  return "";
}

struct Segment {
  Field field;
  std::string value;
};

enum class LineKind { kBlank, kDecoration, kTag, kOther };

struct Line {
  LineKind kind = LineKind::kOther;
  std::string_view raw;
  std::vector<Segment> segments;  // kTag only
};

bool is_emphasis(char c) { return c == '*' || c == '_' || c == '`'; }

std::size_t skip_spaces(std::string_view s, std::size_t i) {
  while (i < s.size() && text::is_space(s[i])) ++i;
  return i;
}

std::size_t skip_emphasis(std::string_view s, std::size_t i) {
  while (i < s.size() && is_emphasis(s[i])) ++i;
  return i;
}

// Skips "1. ", "2) ", "- ", "+ ", "* ", "• " and "### " list/heading prefixes.
std::size_t skip_list_prefix(std::string_view s, std::size_t i) {
  std::size_t j = i;
  while (j < s.size() && text::is_digit(s[j])) ++j;
  if (j > i && j < s.size() && (s[j] == '.' || s[j] == ')') && j + 1 < s.size() &&
      text::is_space(s[j + 1])) {
    return skip_spaces(s, j + 1);
  }
  if (i + 1 < s.size() && (s[i] == '-' || s[i] == '+' || s[i] == '*') &&
      text::is_space(s[i + 1])) {
    return skip_spaces(s, i + 1);
  }
  if (s.substr(i, 3) == "\xE2\x80\xA2") return skip_spaces(s, i + 3);
  j = i;
  while (j < s.size() && s[j] == '#') ++j;
  if (j > i && j < s.size() && text::is_space(s[j])) return skip_spaces(s, j);
  return i;
}

struct TagMatch {
  Field field;
  std::size_t value_start;
};

// Recognizes a field tag starting at s[i] (after optional list prefix and
// emphasis) and returns where its value begins.
std::optional<TagMatch> match_tag(std::string_view s, std::size_t i, bool allow_prefix) {
  i = skip_spaces(s, i);
  if (allow_prefix) i = skip_list_prefix(s, i);
  i = skip_emphasis(s, i);
  const std::string_view rest = s.substr(i);

  struct Name {
    std::string_view word;
    Field field;
  };
  static constexpr std::array<Name, 8> kNames = {{
      {"sentence", Field::kSentence},
      {"category", Field::kCategory},
      {"entity a", Field::kEntityA},
      {"entity b", Field::kEntityB},
      {"entity_a", Field::kEntityA},
      {"entity_b", Field::kEntityB},
      {"a", Field::kEntityA},
      {"b", Field::kEntityB},
  }};
  for (const auto& name : kNames) {
    if (!text::starts_with_icase(rest, name.word)) continue;
    std::size_t j = i + name.word.size();
    if (name.field == Field::kSentence) {
      // "Sentence 3:" numbering.
      std::size_t k = skip_spaces(s, j);
      std::size_t digits = k;
      while (digits < s.size() && text::is_digit(s[digits])) ++digits;
      if (digits > k) j = digits;
    }
    j = skip_emphasis(s, j);
    while (j < s.size() && s[j] == ' ') ++j;
    if (j >= s.size() || s[j] != ':') continue;
    j = skip_emphasis(s, j + 1);
    return TagMatch{name.field, j};
  }
  return std::nullopt;
}

bool is_decoration(std::string_view trimmed) {
  if (trimmed.empty()) return false;
  for (std::size_t i = 0; i < trimmed.size(); ++i) {
    const char c = trimmed[i];
    if (c == '*' || c == '-' || c == '_' || c == '=' || c == '#' || c == '~' ||
        c == '`' || c == '|' || c == ':' || text::is_space(c)) {
      continue;
    }
    if (trimmed.substr(i, 3) == "\xE2\x80\x94" || trimmed.substr(i, 3) == "\xE2\x80\x93") {
      i += 2;
      continue;
    }
    return false;
  }
  return true;
}

// Removes every run of two or more asterisks.
std::string remove_bold_runs(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size();) {
    if (s[i] == '*' && i + 1 < s.size() && s[i + 1] == '*') {
      while (i < s.size() && s[i] == '*') ++i;
      continue;
    }
    out.push_back(s[i++]);
  }
  return out;
}

std::string strip_wrapping(std::string_view s) {
  static constexpr std::array<std::pair<std::string_view, std::string_view>, 6> kPairs = {{
      {"\"", "\""}, {"'", "'"}, {"\xE2\x80\x9C", "\xE2\x80\x9D"}, {"*", "*"}, {"_", "_"},
      {"`", "`"}}};
  for (auto [open, close] : kPairs) {
    if (s.size() >= open.size() + close.size() && s.substr(0, open.size()) == open &&
        text::ends_with(s, close)) {
      return std::string(text::trim(s.substr(open.size(), s.size() - open.size() - close.size())));
    }
  }
  return std::string(s);
}

std::string clean_field(std::string_view value) {
  return text::until_stable(std::string(value), [](const std::string& v) {
    return strip_wrapping(text::trim(text::collapse_whitespace(remove_bold_runs(v))));
  });
}

std::string clean_sentence(std::string_view value) {
  return text::until_stable(clean_field(value), [](const std::string& v) {
    return clean_field(normalize_whitespace(strip_citations(v)));
  });
}

bool is_entity_placeholder(std::string_view cleaned) {
  static const std::set<std::string, std::less<>> kPlaceholders = {
      "-", "--", "\xE2\x80\x94", "\xE2\x80\x93", "n/a", "na", "none", "null",
      "nil", "not applicable", "(none)", "n.a."};
  return kPlaceholders.count(text::to_lower(cleaned)) > 0;
}

// Splits a tag line into segments; the compact form separates fields with '|'.
std::vector<Segment> split_segments(std::string_view line, const TagMatch& first) {
  std::vector<Segment> segments;
  Field field = first.field;
  std::size_t value_start = first.value_start;
  std::size_t pos = value_start;
  while (true) {
    std::size_t bar = line.find('|', pos);
    std::optional<TagMatch> next;
    while (bar != std::string_view::npos) {
      next = match_tag(line, bar + 1, false);
      if (next) break;
      bar = line.find('|', bar + 1);
    }
    if (!next) {
      segments.push_back({field, std::string(line.substr(value_start))});
      return segments;
    }
    segments.push_back({field, std::string(line.substr(value_start, bar - value_start))});
    field = next->field;
    value_start = next->value_start;
    pos = value_start;
  }
}

Line classify(std::string_view raw) {
  Line line;
  line.raw = raw;
  const std::string_view trimmed = text::trim(raw);
  if (trimmed.empty()) {
    line.kind = LineKind::kBlank;
  } else if (is_decoration(trimmed)) {
    line.kind = LineKind::kDecoration;
  } else if (auto tag = match_tag(raw, 0, true)) {
    line.kind = LineKind::kTag;
    line.segments = split_segments(raw, *tag);
  } else {
    line.kind = LineKind::kOther;
  }
  return line;
}

struct FluffPass {
  std::vector<Line> lines;
  std::vector<bool> kept;
  std::size_t removed = 0;
  bool has_tags = false;
};

FluffPass run_fluff_pass(std::string_view raw) {
  FluffPass pass;
  for (std::string_view l : text::split_lines(raw)) pass.lines.push_back(classify(l));
  std::size_t first_tag = pass.lines.size(), last_tag = 0;
  for (std::size_t i = 0; i < pass.lines.size(); ++i) {
    if (pass.lines[i].kind == LineKind::kTag) {
      first_tag = std::min(first_tag, i);
      last_tag = i;
      pass.has_tags = true;
    }
  }
  pass.kept.assign(pass.lines.size(), false);
  for (std::size_t i = 0; i < pass.lines.size(); ++i) {
    const LineKind kind = pass.lines[i].kind;
    bool keep = false;
    if (kind == LineKind::kTag) {
      keep = true;
    } else if (kind == LineKind::kOther) {
      keep = !pass.has_tags || (i > first_tag && i < last_tag);
    }
    pass.kept[i] = keep;
    if (!keep) ++pass.removed;
  }
  return pass;
}

std::string render_kept_line(const Line& line) {
  if (line.kind != LineKind::kTag) return remove_bold_runs(line.raw);
  std::string out;
  for (std::size_t k = 0; k < line.segments.size(); ++k) {
    if (k > 0) out += " | ";
    const std::string value(text::trim(remove_bold_runs(line.segments[k].value)));
    out += field_name(line.segments[k].field);
    out += ':';
    if (!value.empty()) out += ' ' + value;
  }
  return out;
}

struct Block {
  std::optional<std::string> sentence;
  std::optional<std::string> category;
  std::optional<std::string> entity_a;
  std::optional<std::string> entity_b;
  std::size_t lines = 0;

  std::optional<std::string>& slot(Field f) {
    switch (f) {
      case Field::kSentence: return sentence;
      case Field::kCategory: return category;
      case Field::kEntityA: return entity_a;
      default: return entity_b;
    }
  }
};

std::string entity_value(const std::optional<std::string>& raw, const char* which,
                         std::vector<std::string>& warnings) {
  if (!raw) {
    warnings.push_back(std::string("missing entity ") + which + " line");
    return {};
  }
  std::string cleaned = text::sanitize_utf8(clean_field(*raw));
  if (cleaned.empty()) {
    warnings.push_back(std::string("empty entity ") + which);
    return {};
  }
  if (is_entity_placeholder(cleaned)) {
    warnings.push_back(std::string("placeholder entity ") + which + " '" + cleaned + "'");
    return {};
  }
  return cleaned;
}

}  // namespace

std::string strip_fluff(std::string_view raw) {
  const FluffPass pass = run_fluff_pass(raw);
  std::string out;
  for (std::size_t i = 0; i < pass.lines.size(); ++i) {
    if (!pass.kept[i]) continue;
    if (!out.empty()) out.push_back('\n');
    out += render_kept_line(pass.lines[i]);
  }
  if (!out.empty() && !raw.empty() && raw.back() == '\n') out.push_back('\n');
  return out;
}

ParseReport parse_response(std::string_view raw, std::string_view model_id,
                           const SourcePara& source_para, const Taxonomy& taxonomy) {
  ParseReport report;
  const FluffPass pass = run_fluff_pass(raw);
  report.total_lines = pass.lines.size();
  report.fluff_lines_removed = pass.removed;

  std::optional<Block> current;
  auto close = [&] {
    if (!current) return;
    Block block = std::move(*current);
    current.reset();
    std::string sentence;
    if (block.sentence) sentence = text::sanitize_utf8(clean_sentence(*block.sentence));
    if (sentence.empty()) {
      ++report.dropped_blocks;
      report.dropped_lines += block.lines;
      return;
    }
    ClassifiedSentence rec;
    rec.model_id = std::string(model_id);
    rec.sent_text = std::move(sentence);
    rec.source_para = source_para;
    if (!block.category) {
      rec.parse_warnings.push_back("missing Category line");
      rec.label = CategoryLabel::none();
    } else {
      rec.label = normalize_label(text::sanitize_utf8(*block.category), taxonomy);
      if (rec.label.kind() == CategoryLabel::Kind::kNone) {
        rec.parse_warnings.push_back("empty Category value");
      } else if (rec.label.kind() == CategoryLabel::Kind::kOutOfTaxonomy) {
        rec.parse_warnings.push_back("category outside taxonomy: '" + rec.label.value() + "'");
      }
    }
    rec.entity_a = entity_value(block.entity_a, "A", rec.parse_warnings);
    rec.entity_b = entity_value(block.entity_b, "B", rec.parse_warnings);
    report.consumed_lines += block.lines;
    report.records.push_back(std::move(rec));
  };

  std::optional<Field> last_field;
  std::optional<std::size_t> prev_kept;
  for (std::size_t i = 0; i < pass.lines.size(); ++i) {
    if (!pass.kept[i]) continue;
    const Line& line = pass.lines[i];
    const bool adjacent = prev_kept && *prev_kept + 1 == i;
    prev_kept = i;
    if (line.kind == LineKind::kTag) {
      for (const Segment& seg : line.segments) {
        if (seg.field == Field::kSentence || !current || current->slot(seg.field)) {
          close();
          current.emplace();
        }
        current->slot(seg.field) = seg.value;
        last_field = seg.field;
      }
      ++current->lines;
      continue;
    }
    if (!pass.has_tags) {
      // No anchors at all: blank-line-separated runs form candidate blocks.
      if (!current || !adjacent) {
        close();
        current.emplace();
      }
      ++current->lines;
      continue;
    }
    if (current && adjacent && last_field == Field::kSentence && current->sentence) {
      *current->sentence += ' ';
      *current->sentence += line.raw;
      ++current->lines;
      continue;
    }
    ++report.dropped_lines;
  }
  close();

  if (report.records.empty() && report.dropped_blocks == 0) {
    // Nothing recognizable at all still counts as one unparseable block.
    report.dropped_blocks = 1;
  }
  return report;
}

std::string render_stanza(const ClassifiedSentence& record, const Taxonomy& taxonomy) {
  std::string out = "Sentence: " + record.sent_text + "\n";
  switch (record.label.kind()) {
    case CategoryLabel::Kind::kInTaxonomy: {
      const Category* c = taxonomy.find(record.label.value());
      out += "Category: " + (c ? c->display_name : record.label.value()) + "\n";
      break;
    }
    case CategoryLabel::Kind::kNotApplicable: out += "Category: N/A\n"; break;
    case CategoryLabel::Kind::kOutOfTaxonomy: out += "Category: " + record.label.value() + "\n"; break;
    case CategoryLabel::Kind::kNone: break;
  }
  out += "A: " + (record.entity_a.empty() ? std::string("-") : record.entity_a) + "\n";
  out += "B: " + (record.entity_b.empty() ? std::string("-") : record.entity_b) + "\n";
  return out;
}

std::string to_parsed_jsonl(const std::vector<ClassifiedSentence>& records) {
  std::string out;
  for (const auto& r : records) {
    JsonWriter w;
    w.begin_object()
        .key("model_id").value(r.model_id)
        .key("doc_id").value(r.source_para.doc_id)
        .key("para_index").value(static_cast<std::uint64_t>(r.source_para.para_index))
        .key("sent_text").value(r.sent_text)
        .key("category").value(r.label.key())
        .key("entity_a").value(r.entity_a)
        .key("entity_b").value(r.entity_b)
        .key("warnings").string_array(r.parse_warnings)
        .end_object();
    out += w.str();
    out.push_back('\n');
  }
  return out;
}

std::vector<ClassifiedSentence> read_parsed_jsonl(std::string_view jsonl) {
  std::vector<ClassifiedSentence> records;
  std::size_t line_no = 0;
  for (std::string_view line : text::split_lines(jsonl)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      ClassifiedSentence r;
      r.model_id = j.at("model_id").get<std::string>();
      r.source_para = {j.at("doc_id").get<std::string>(), j.at("para_index").get<std::size_t>()};
      r.sent_text = j.at("sent_text").get<std::string>();
      r.label = CategoryLabel::from_key(j.at("category").get<std::string>());
      r.entity_a = j.at("entity_a").get<std::string>();
      r.entity_b = j.at("entity_b").get<std::string>();
      r.parse_warnings = j.at("warnings").get<std::vector<std::string>>();
      records.push_back(std::move(r));
    } catch (const nlohmann::json::exception& e) {
      throw FormatError("parsed jsonl line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return records;
}

}  // namespace relcat

#include "relcat/corpus.hpp"

#include <array>
#include <cstdio>
#include <map>

#include <json.hpp>

#include "relcat/error.hpp"
#include "relcat/json_writer.hpp"
#include "relcat/text.hpp"

namespace relcat {

namespace {

using text::is_digit;
using text::is_space;
using text::is_upper;

constexpr std::array<std::string_view, 4> kMathEnvironments = {
    "equation", "equation*", "align", "align*"};

bool at(std::string_view s, std::size_t i, std::string_view token) {
  return s.substr(i, token.size()) == token;
}

// Index of the next '$' at or after `from` that is not escaped by '\'.
std::size_t find_unescaped_dollar(std::string_view s, std::size_t from) {
  for (std::size_t i = from; i < s.size(); ++i) {
    if (s[i] == '\\') {
      ++i;
      continue;
    }
    if (s[i] == '$') return i;
  }
  return std::string_view::npos;
}

void warn(std::vector<std::string>* warnings, std::string_view delimiter,
          std::size_t offset) {
  if (!warnings) return;
  warnings->push_back("unmatched math delimiter '" + std::string(delimiter) +
                      "' at byte " + std::to_string(offset));
}

// Matches [n], [n,m], [n-m] (and en-dash ranges) at s[i]; returns the length
// of the citation or 0.
std::size_t match_numeric_citation(std::string_view s, std::size_t i) {
  if (s[i] != '[') return 0;
  std::size_t j = i + 1;
  bool need_number = true;
  while (j < s.size()) {
    while (j < s.size() && s[j] == ' ') ++j;
    if (need_number) {
      const std::size_t start = j;
      while (j < s.size() && is_digit(s[j])) ++j;
      if (j == start) return 0;
      need_number = false;
      continue;
    }
    if (s[j] == ']') return j + 1 - i;
    if (s[j] == ',' || s[j] == '-') {
      ++j;
    } else if (at(s, j, "\xE2\x80\x93")) {  // en dash
      j += 3;
    } else {
      return 0;
    }
    need_number = true;
  }
  return 0;
}

bool is_name_connector(std::string_view token) {
  static constexpr std::array<std::string_view, 13> kConnectors = {
      "and", "&", "van", "von", "de", "der", "den",
      "da",  "di", "du", "le", "la", "del"};
  for (auto c : kConnectors) {
    if (token == c) return true;
  }
  return false;
}

bool is_name_token(std::string_view token) {
  if (token.empty()) return false;
  const auto first = static_cast<unsigned char>(token[0]);
  if (!is_upper(token[0]) && first < 0x80) return false;
  for (char c : token) {
    const auto b = static_cast<unsigned char>(c);
    if (b >= 0x80 || text::is_alpha(c) || c == '-' || c == '\'' || c == '.') {
      continue;
    }
    return false;
  }
  return true;
}

bool is_year(std::string_view token) {
  if (token.size() != 4 && token.size() != 5) return false;
  for (std::size_t k = 0; k < 4; ++k) {
    if (!is_digit(token[k])) return false;
  }
  return token.size() == 4 || text::is_lower(token[4]);
}

// "<Name tokens>[ et al.][,] <year>" with the comma mandatory unless "et al."
// is present.
bool is_author_year(std::string_view part) {
  part = text::trim(part);
  const std::size_t last_space = part.rfind(' ');
  if (last_space == std::string_view::npos) return false;
  if (!is_year(part.substr(last_space + 1))) return false;
  std::string_view names = text::trim(part.substr(0, last_space));
  bool comma = false;
  if (!names.empty() && names.back() == ',') {
    comma = true;
    names = text::trim(names.substr(0, names.size() - 1));
  }
  bool et_al = false;
  if (text::ends_with(names, " et al.")) {
    et_al = true;
    names = text::trim(names.substr(0, names.size() - 7));
  }
  if (!comma && !et_al) return false;
  if (names.empty()) return false;

  std::size_t tokens = 0;
  std::size_t pos = 0;
  while (pos < names.size()) {
    std::size_t end = names.find(' ', pos);
    if (end == std::string_view::npos) end = names.size();
    std::string_view token = names.substr(pos, end - pos);
    if (!token.empty() && token.back() == ',') token.remove_suffix(1);
    if (!token.empty()) {
      const bool ok = tokens == 0 ? is_name_token(token)
                                  : (is_name_token(token) || is_name_connector(token));
      if (!ok) return false;
      ++tokens;
    }
    pos = end + 1;
  }
  return tokens >= 1 && tokens <= 8;
}

// Matches a parenthetical author-year citation (possibly several joined by
// ';') at s[i]; returns its length or 0.
std::size_t match_author_year(std::string_view s, std::size_t i) {
  if (s[i] != '(') return 0;
  constexpr std::size_t kMaxLength = 300;
  std::size_t j = i + 1;
  while (j < s.size() && j - i < kMaxLength && s[j] != ')' && s[j] != '(') ++j;
  if (j >= s.size() || s[j] != ')') return 0;
  std::string_view inner = s.substr(i + 1, j - i - 1);
  std::size_t pos = 0;
  while (true) {
    std::size_t semi = inner.find(';', pos);
    std::string_view part = inner.substr(
        pos, semi == std::string_view::npos ? std::string_view::npos : semi - pos);
    if (!is_author_year(part)) return 0;
    if (semi == std::string_view::npos) break;
    pos = semi + 1;
  }
  return j + 1 - i;
}

std::size_t match_superscript_marker(std::string_view s, std::size_t i) {
  if (!at(s, i, "^{")) return 0;
  std::size_t j = i + 2;
  const std::size_t start = j;
  while (j < s.size() && is_digit(s[j])) ++j;
  if (j == start || j >= s.size() || s[j] != '}') return 0;
  return j + 1 - i;
}

std::size_t match_footnote(std::string_view s, std::size_t i) {
  static constexpr std::string_view kOpen = "\\footnote{";
  if (!at(s, i, kOpen)) return 0;
  int depth = 1;
  for (std::size_t j = i + kOpen.size(); j < s.size(); ++j) {
    if (s[j] == '\\') {
      ++j;
      continue;
    }
    if (s[j] == '{') ++depth;
    if (s[j] == '}' && --depth == 0) return j + 1 - i;
  }
  return 0;
}

bool is_closing_punct(char c) {
  return c == '.' || c == ',' || c == ';' || c == ':' || c == '!' ||
         c == '?' || c == ')' || c == ']';
}

bool is_terminator(char c) { return c == '.' || c == '?' || c == '!'; }

// True when an abbreviation ends exactly at s[end - 1] on a word boundary.
bool ends_with_abbreviation(std::string_view s, std::size_t end) {
  std::string_view head = s.substr(0, end);
  for (const auto& abbr : sentence_abbreviations()) {
    if (!text::ends_with(head, abbr)) continue;
    if (head.size() == abbr.size()) return true;
    const char before = head[head.size() - abbr.size() - 1];
    if (is_space(before) || before == '(' || before == '"') return true;
  }
  return false;
}

}  // namespace

std::size_t CleanDocument::sentence_count() const {
  std::size_t n = 0;
  for (const auto& p : paragraphs) n += p.sentences.size();
  return n;
}

std::vector<std::string> segment_paragraphs(const RawDocument& raw) {
  if (auto bad = text::first_invalid_utf8(raw.text)) {
    throw IngestError("document '" + raw.doc_id +
                          "': invalid UTF-8 at byte offset " + std::to_string(*bad),
                      *bad);
  }
  std::vector<std::string> paragraphs;
  std::string current;
  auto flush = [&] {
    if (!current.empty()) paragraphs.push_back(std::move(current));
    current.clear();
  };
  for (std::string_view line : text::split_lines(raw.text)) {
    std::string_view trimmed = text::trim(line);
    if (trimmed.empty()) {
      flush();
      continue;
    }
    if (!current.empty()) current.push_back(' ');
    current.append(trimmed);
  }
  flush();
  return paragraphs;
}

std::string strip_math(std::string_view s, std::vector<std::string>* warnings) {
  std::string out;
  out.reserve(s.size());
  std::size_t i = 0;
  auto unmatched = [&](std::string_view delimiter) {
    warn(warnings, delimiter, i);
    out.append(s.substr(i));
    i = s.size();
  };
  while (i < s.size()) {
    const char c = s[i];
    if (c == '\\' && i + 1 < s.size()) {
      const char next = s[i + 1];
      if (next == '$' || next == '\\') {
        out.append(s.substr(i, 2));
        i += 2;
        continue;
      }
      if (next == '(' || next == '[') {
        const std::string_view close = next == '(' ? "\\)" : "\\]";
        const std::size_t end = s.find(close, i + 2);
        if (end == std::string_view::npos) {
          unmatched(s.substr(i, 2));
          break;
        }
        out.push_back(' ');
        i = end + 2;
        continue;
      }
      if (at(s, i, "\\begin{")) {
        const std::size_t name_start = i + 7;
        const std::size_t name_end = s.find('}', name_start);
        if (name_end != std::string_view::npos) {
          const std::string_view env = s.substr(name_start, name_end - name_start);
          bool is_math = false;
          for (auto m : kMathEnvironments) is_math = is_math || env == m;
          if (is_math) {
            const std::string close = "\\end{" + std::string(env) + "}";
            const std::size_t end = s.find(close, name_end + 1);
            if (end == std::string_view::npos) {
              unmatched(s.substr(i, name_end + 1 - i));
              break;
            }
            out.push_back(' ');
            i = end + close.size();
            continue;
          }
        }
      }
      out.push_back(c);
      ++i;
      continue;
    }
    if (c == '$') {
      if (i + 1 < s.size() && s[i + 1] == '$') {
        const std::size_t end = s.find("$$", i + 2);
        if (end == std::string_view::npos) {
          unmatched("$$");
          break;
        }
        out.push_back(' ');
        i = end + 2;
        continue;
      }
      const std::size_t end = find_unescaped_dollar(s, i + 1);
      if (end == std::string_view::npos) {
        unmatched("$");
        break;
      }
      out.push_back(' ');
      i = end + 1;
      continue;
    }
    out.push_back(c);
    ++i;
  }
  return out;
}

std::string strip_citations(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size();) {
    std::size_t len = 0;
    switch (s[i]) {
      case '[': len = match_numeric_citation(s, i); break;
      case '(': len = match_author_year(s, i); break;
      case '^': len = match_superscript_marker(s, i); break;
      case '\\': len = match_footnote(s, i); break;
      default: break;
    }
    if (len > 0) {
      out.push_back(' ');
      i += len;
    } else {
      out.push_back(s[i]);
      ++i;
    }
  }
  return out;
}

std::string normalize_whitespace(std::string_view s) {
  std::string collapsed = text::collapse_whitespace(s);
  std::string out;
  out.reserve(collapsed.size());
  for (std::size_t i = 0; i < collapsed.size(); ++i) {
    if (collapsed[i] == ' ' && i + 1 < collapsed.size() &&
        is_closing_punct(collapsed[i + 1])) {
      continue;
    }
    out.push_back(collapsed[i]);
  }
  return out;
}

std::string clean_text(std::string_view s, std::vector<std::string>* warnings) {
  bool first_round = true;
  return text::until_stable(std::string(s), [&](const std::string& current) {
    std::vector<std::string>* sink = first_round ? warnings : nullptr;
    first_round = false;
    return normalize_whitespace(strip_citations(strip_math(current, sink)));
  });
}

const std::vector<std::string>& sentence_abbreviations() {
  static const std::vector<std::string> kAbbreviations = {
      "et al.", "Fig.",  "Figs.", "Eq.",  "Eqs.",  "i.e.",  "e.g.",
      "vs.",    "cf.",   "Dr.",   "No.",  "Nos.",  "Mr.",   "Mrs.",
      "Ms.",    "Prof.", "Sec.",  "Ref.", "Refs.", "Tab.",  "Vol.",
      "pp.",    "approx.", "resp.", "Ch.",  "St.",   "Jr.",   "Sr."};
  return kAbbreviations;
}

std::vector<std::string> split_sentences(std::string_view paragraph) {
  std::vector<std::string> sentences;
  std::size_t start = 0;
  const std::size_t n = paragraph.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (!is_terminator(paragraph[i])) continue;
    if (i + 1 >= n || !is_space(paragraph[i + 1])) continue;
    std::size_t k = i + 1;
    while (k < n && is_space(paragraph[k])) ++k;
    if (k >= n || !(is_upper(paragraph[k]) || is_digit(paragraph[k]))) continue;
    if (paragraph[i] == '.' && ends_with_abbreviation(paragraph, i + 1)) continue;
    std::string_view piece = text::trim(paragraph.substr(start, i + 1 - start));
    if (!piece.empty()) sentences.emplace_back(piece);
    start = k;
  }
  std::string_view tail = text::trim(paragraph.substr(std::min(start, n)));
  if (!tail.empty()) sentences.emplace_back(tail);
  return sentences;
}

std::string make_sent_id(std::string_view doc_id, std::size_t para_index,
                         std::size_t sent_index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, ".par%03zu.s%03zu", para_index, sent_index);
  return std::string(doc_id) + buf;
}

CleanDocument clean_document(const RawDocument& raw) {
  CleanDocument doc;
  doc.doc_id = raw.doc_id;
  const std::vector<std::string> paragraphs = segment_paragraphs(raw);
  for (std::size_t k = 0; k < paragraphs.size(); ++k) {
    std::vector<std::string> warnings;
    const std::string cleaned = clean_text(paragraphs[k], &warnings);
    for (auto& w : warnings) {
      doc.warnings.push_back("paragraph " + std::to_string(k) + ": " + w);
    }
    std::vector<std::string> pieces;
    if (!cleaned.empty()) pieces = split_sentences(cleaned);
    if (pieces.empty()) {
      doc.dropped_paragraphs.push_back(k);
      doc.warnings.push_back("paragraph " + std::to_string(k) +
                             ": empty after cleaning, dropped");
      continue;
    }
    Paragraph para;
    para.para_index = doc.paragraphs.size();
    for (std::size_t s = 0; s < pieces.size(); ++s) {
      para.sentences.push_back(
          {make_sent_id(doc.doc_id, para.para_index, s), std::move(pieces[s]),
           para.para_index, s});
    }
    doc.paragraphs.push_back(std::move(para));
  }
  return doc;
}

RawDocument to_raw(const CleanDocument& doc) {
  RawDocument raw{doc.doc_id, {}};
  for (const auto& para : doc.paragraphs) {
    if (!raw.text.empty()) raw.text += "\n\n";
    for (std::size_t s = 0; s < para.sentences.size(); ++s) {
      if (s > 0) raw.text.push_back(' ');
      raw.text += para.sentences[s].text;
    }
  }
  return raw;
}

std::string to_clean_jsonl(const std::vector<CleanDocument>& docs) {
  std::string out;
  for (const auto& doc : docs) {
    for (const auto& para : doc.paragraphs) {
      for (const auto& sent : para.sentences) {
        JsonWriter w;
        w.begin_object()
            .key("doc_id").value(doc.doc_id)
            .key("para_index").value(static_cast<std::uint64_t>(sent.para_index))
            .key("sent_index").value(static_cast<std::uint64_t>(sent.sent_index))
            .key("sent_id").value(sent.sent_id)
            .key("text").value(sent.text)
            .end_object();
        out += w.str();
        out.push_back('\n');
      }
    }
  }
  return out;
}

std::vector<CleanDocument> read_clean_jsonl(std::string_view jsonl) {
  std::vector<CleanDocument> docs;
  std::map<std::string, std::size_t> doc_slot;
  std::size_t line_no = 0;
  for (std::string_view line : text::split_lines(jsonl)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
      Sentence sent{j.at("sent_id").get<std::string>(), j.at("text").get<std::string>(),
                    j.at("para_index").get<std::size_t>(),
                    j.at("sent_index").get<std::size_t>()};
      const auto doc_id = j.at("doc_id").get<std::string>();
      auto [it, inserted] = doc_slot.try_emplace(doc_id, docs.size());
      if (inserted) docs.push_back(CleanDocument{doc_id, {}, {}, {}});
      CleanDocument& doc = docs[it->second];
      if (doc.paragraphs.empty() || doc.paragraphs.back().para_index != sent.para_index) {
        doc.paragraphs.push_back(Paragraph{sent.para_index, {}});
      }
      doc.paragraphs.back().sentences.push_back(std::move(sent));
    } catch (const nlohmann::json::exception& e) {
      throw FormatError("clean.jsonl line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return docs;
}

}  // namespace relcat

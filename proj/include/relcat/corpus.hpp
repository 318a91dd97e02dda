#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace relcat {

struct RawDocument {
  std::string doc_id;
  // UTF-8; paragraphs separated by one or more blank lines.
  std::string text;
};

struct Sentence {
  std::string sent_id;  // "<doc_id>.parNNN.sNNN", zero-based
  std::string text;
  std::size_t para_index = 0;
  std::size_t sent_index = 0;

  bool operator==(const Sentence&) const = default;
};

struct Paragraph {
  std::size_t para_index = 0;
  std::vector<Sentence> sentences;

  bool operator==(const Paragraph&) const = default;
};

struct CleanDocument {
  std::string doc_id;
  std::vector<Paragraph> paragraphs;
  std::vector<std::string> warnings;
  // Input paragraph indices that were empty after cleaning.
  std::vector<std::size_t> dropped_paragraphs;

  std::size_t sentence_count() const;
};

// Splits on runs of blank (whitespace-only) lines and joins the lines of each
// paragraph with single spaces. Throws IngestError on malformed UTF-8.
std::vector<std::string> segment_paragraphs(const RawDocument& raw);

// Removes $..$, $$..$$, \(..\), \[..\] and equation/align environments
// (starred too), replacing each span with one space. An unmatched opener
// stops processing: the rest of the text is kept and a warning recorded.
std::string strip_math(std::string_view text,
                       std::vector<std::string>* warnings = nullptr);

// Removes [n], [n,m], [n-m], (Name et al., 2020), (Name, 2020), ^{n} and
// \footnote{...}, replacing each with one space.
std::string strip_citations(std::string_view text);

// Collapses whitespace and drops a space that precedes closing punctuation.
std::string normalize_whitespace(std::string_view text);

// strip_math -> strip_citations -> normalize_whitespace, iterated to a fixed
// point. Warnings are deduplicated.
std::string clean_text(std::string_view text,
                       std::vector<std::string>* warnings = nullptr);

// Abbreviations that never end a sentence.
const std::vector<std::string>& sentence_abbreviations();

// Breaks after '.', '?' or '!' when followed by whitespace and an uppercase
// ASCII letter or digit, unless the terminator closes a protected
// abbreviation.
std::vector<std::string> split_sentences(std::string_view paragraph);

CleanDocument clean_document(const RawDocument& raw);

std::string make_sent_id(std::string_view doc_id, std::size_t para_index,
                         std::size_t sent_index);

// Renders a cleaned document back to blank-line-separated text.
RawDocument to_raw(const CleanDocument& doc);

// clean.jsonl: {"doc_id","para_index","sent_index","sent_id","text"} per line.
std::string to_clean_jsonl(const std::vector<CleanDocument>& docs);
std::vector<CleanDocument> read_clean_jsonl(std::string_view jsonl);

}  // namespace relcat

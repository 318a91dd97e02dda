#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "relcat/corpus.hpp"
#include "relcat/parser.hpp"

namespace relcat {

inline constexpr double kDefaultAlignmentThreshold = 0.85;

// Case-folded, punctuation-stripped, whitespace-collapsed form compared by
// similarity().
std::string similarity_key(std::string_view s);

// Levenshtein distance over code points.
std::size_t edit_distance(std::u32string_view a, std::u32string_view b);

// 1 - edit_distance / max(len a, len b) on similarity_key forms; 1 for two
// empty strings.
double similarity(std::string_view a, std::string_view b);

struct AlignmentPair {
  std::optional<std::string> source_sent_id;
  ClassifiedSentence rec_a;
  ClassifiedSentence rec_b;
  double sim_ab = 0.0;
  std::optional<double> sim_a_src;
  std::optional<double> sim_b_src;
  std::size_t index_a = 0;  // position in the input lists
  std::size_t index_b = 0;
};

struct UnmatchedRecord {
  std::size_t index = 0;
  ClassifiedSentence record;
};

struct AlignmentResult {
  std::vector<AlignmentPair> pairs;  // ordered by index_a
  std::vector<UnmatchedRecord> unmatched_a;
  std::vector<UnmatchedRecord> unmatched_b;
  double threshold = kDefaultAlignmentThreshold;
};

// Greedy global-best matching within each (doc_id, para_index): repeatedly
// takes the highest-similarity unused cross pair with sim >= threshold, ties
// broken by lower a index, then lower b index.
AlignmentResult align_records(const std::vector<ClassifiedSentence>& list_a,
                              const std::vector<ClassifiedSentence>& list_b,
                              double threshold = kDefaultAlignmentThreshold);

// Same greedy rule against the paragraph's source sentences. Each source
// sentence hosts at most one record; unmatched records get no source id.
std::vector<ClassifiedSentence> align_to_source(std::vector<ClassifiedSentence> records,
                                                const CleanDocument& doc,
                                                double threshold = kDefaultAlignmentThreshold);

// aligned.jsonl: one line per pair, then unmatched a, then unmatched b.
std::string to_aligned_jsonl(const AlignmentResult& result, std::string_view model_a,
                             std::string_view model_b);

struct AlignedFile {
  std::string model_a;
  std::string model_b;
  double threshold = kDefaultAlignmentThreshold;
  AlignmentResult result;
};
AlignedFile read_aligned_jsonl(std::string_view jsonl);

}  // namespace relcat

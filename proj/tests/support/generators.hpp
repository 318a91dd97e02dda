#pragma once
// Seeded fixture builders shared by unit tests and the acceptance runner.

#include <cstddef>
#include <random>
#include <string>
#include <vector>

#include "relcat/align.hpp"
#include "relcat/corpus.hpp"
#include "relcat/metrics.hpp"
#include "relcat/parser.hpp"
#include "relcat/taxonomy.hpp"

namespace gen {

using Rng = std::mt19937_64;

inline std::size_t uniform(Rng& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

template <typename T>
const T& pick(Rng& rng, const std::vector<T>& items) {
  return items[uniform(rng, 0, items.size() - 1)];
}

inline std::vector<std::string> taxonomy_ids() {
  std::vector<std::string> ids;
  for (const auto& c : relcat::Taxonomy::builtin().categories()) ids.push_back(c.id);
  return ids;
}

// All label keys a pair can carry: 17 ids, N/A, None and two drift labels.
inline std::vector<relcat::CategoryLabel> label_pool() {
  std::vector<relcat::CategoryLabel> pool;
  for (const auto& id : taxonomy_ids()) pool.push_back(relcat::CategoryLabel::in_taxonomy(id));
  pool.push_back(relcat::CategoryLabel::not_applicable());
  pool.push_back(relcat::CategoryLabel::none());
  pool.push_back(relcat::CategoryLabel::out_of_taxonomy("causal chain"));
  pool.push_back(relcat::CategoryLabel::out_of_taxonomy("definition"));
  return pool;
}

inline relcat::ClassifiedSentence record(std::string model, std::string text,
                                         relcat::CategoryLabel label, std::string a = "x",
                                         std::string b = "y", std::string doc = "d",
                                         std::size_t para = 0) {
  relcat::ClassifiedSentence r;
  r.model_id = std::move(model);
  r.sent_text = std::move(text);
  r.label = std::move(label);
  r.entity_a = std::move(a);
  r.entity_b = std::move(b);
  r.source_para = {std::move(doc), para};
  return r;
}

// Pair with entity strings chosen so that entity matches are exactly as
// requested.
inline relcat::AlignmentPair pair(const relcat::CategoryLabel& la, const relcat::CategoryLabel& lb,
                                  bool entity_a_match, bool entity_b_match, std::size_t index = 0) {
  relcat::AlignmentPair p;
  p.rec_a = record("model-a", "sentence " + std::to_string(index), la, "alpha", "beta");
  p.rec_b = record("model-b", "sentence " + std::to_string(index), lb,
                   entity_a_match ? "Alpha" : "gamma", entity_b_match ? "the beta." : "delta");
  p.sim_ab = 1.0;
  p.index_a = p.index_b = index;
  return p;
}

// Labels paired so that exactly `agree` of `n` pairs agree, shuffled.
inline std::vector<relcat::AlignmentPair> planted_agreement(std::size_t n, std::size_t agree,
                                                            Rng& rng) {
  const auto pool = label_pool();
  std::vector<relcat::AlignmentPair> pairs;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& la = pick(rng, pool);
    relcat::CategoryLabel lb = la;
    if (i >= agree) {
      while (lb == la) lb = pick(rng, pool);
    }
    pairs.push_back(pair(la, lb, uniform(rng, 0, 1) == 1, uniform(rng, 0, 1) == 1, i));
  }
  std::shuffle(pairs.begin(), pairs.end(), rng);
  return pairs;
}

// `agree` of `pairs` model-A assignments of `id` agree with model B.
inline void plant_category(std::vector<relcat::AlignmentPair>& out, const std::string& id,
                           std::size_t pairs, std::size_t agree, const std::string& other) {
  for (std::size_t i = 0; i < pairs; ++i) {
    const auto la = relcat::CategoryLabel::in_taxonomy(id);
    const auto lb = i < agree ? la : relcat::CategoryLabel::in_taxonomy(other);
    out.push_back(pair(la, lb, false, false, out.size()));
  }
}

// Random pair set over the whole label pool.
inline std::vector<relcat::AlignmentPair> random_pairs(Rng& rng, std::size_t max_n) {
  const auto pool = label_pool();
  const std::size_t n = uniform(rng, 0, max_n);
  // Bias toward agreement so the diagonal is exercised.
  std::vector<relcat::AlignmentPair> pairs;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& la = pick(rng, pool);
    const auto& lb = uniform(rng, 0, 2) == 0 ? la : pick(rng, pool);
    pairs.push_back(pair(la, lb, uniform(rng, 0, 1) == 1, uniform(rng, 0, 1) == 1, i));
  }
  return pairs;
}

// Random lowercase sentence of 4..9 words from a small science vocabulary.
inline std::string random_sentence(Rng& rng) {
  static const std::vector<std::string> words = {
      "heat",  "flows", "into",   "the",    "cell", "membrane", "rate", "of",   "growth",
      "model", "shows", "strong", "signal", "from", "sample",   "gas",  "cloud", "forms",
      "a",     "star",  "energy", "drops",  "when", "pressure", "rises", "ion", "channel"};
  std::string out;
  const std::size_t n = uniform(rng, 4, 9);
  for (std::size_t i = 0; i < n; ++i) {
    if (i) out += ' ';
    out += pick(rng, words);
  }
  if (uniform(rng, 0, 1)) out[0] = static_cast<char>(out[0] - 32);
  return out + ".";
}

// Random single-character edits: insert, delete or substitute a letter.
inline std::string perturb(Rng& rng, std::string s, std::size_t edits) {
  for (std::size_t e = 0; e < edits && !s.empty(); ++e) {
    const std::size_t at = uniform(rng, 0, s.size() - 1);
    const char letter = static_cast<char>('a' + uniform(rng, 0, 25));
    switch (uniform(rng, 0, 2)) {
      case 0: s.insert(s.begin() + static_cast<std::ptrdiff_t>(at), letter); break;
      case 1: s.erase(at, 1); break;
      default: s[at] = letter;
    }
  }
  return s;
}

// n model-A sentences and a shuffled, perturbed model-B copy, all in one
// paragraph. With `families` > 0 the A sentences are themselves variants of
// that many seeds, so off-diagonal pairs compete above the threshold.
inline std::pair<std::vector<relcat::ClassifiedSentence>, std::vector<relcat::ClassifiedSentence>>
perturbed_instance(Rng& rng, std::size_t n, std::size_t families = 0) {
  std::vector<std::string> seeds;
  for (std::size_t f = 0; f < families; ++f) seeds.push_back(random_sentence(rng));
  std::vector<std::string> base;
  for (std::size_t i = 0; i < n; ++i) {
    base.push_back(families ? perturb(rng, seeds[i % families], uniform(rng, 1, 5))
                            : random_sentence(rng));
  }
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<relcat::ClassifiedSentence> a, b;
  for (std::size_t i = 0; i < n; ++i) {
    a.push_back(record("model-a", base[i], relcat::CategoryLabel::none()));
    b.push_back(record("model-b", perturb(rng, base[order[i]], uniform(rng, 0, 4)),
                       relcat::CategoryLabel::none()));
  }
  return {a, b};
}

// One document with `n_sentences` single-sentence-per-slot source sentences
// spread over paragraphs of up to 10.
inline relcat::CleanDocument synthetic_doc(const std::string& doc_id, std::size_t n_sentences) {
  relcat::CleanDocument doc;
  doc.doc_id = doc_id;
  for (std::size_t k = 0; k < n_sentences; ++k) {
    const std::size_t p = k / 10, s = k % 10;
    if (s == 0) doc.paragraphs.push_back({p, {}});
    doc.paragraphs.back().sentences.push_back(
        {relcat::make_sent_id(doc_id, p, s), "Sentence " + std::to_string(k) + ".", p, s});
  }
  return doc;
}

// Records already annotated against `doc`: the first `categorized` sentences
// get category labels, the next `na` get N/A, the rest get no record.
inline std::vector<relcat::ClassifiedSentence> planted_coverage(const relcat::CleanDocument& doc,
                                                                const std::string& model,
                                                                std::size_t categorized,
                                                                std::size_t na, Rng& rng) {
  const auto ids = taxonomy_ids();
  std::vector<relcat::ClassifiedSentence> out;
  std::size_t k = 0;
  for (const auto& p : doc.paragraphs) {
    for (const auto& s : p.sentences) {
      relcat::CategoryLabel label = relcat::CategoryLabel::none();
      if (k < categorized) label = relcat::CategoryLabel::in_taxonomy(pick(rng, ids));
      else if (k < categorized + na) label = uniform(rng, 0, 3) == 0
                                                 ? relcat::CategoryLabel::none()
                                                 : relcat::CategoryLabel::not_applicable();
      else {
        ++k;
        continue;
      }
      auto r = record(model, s.text, label, "x", "y", doc.doc_id, p.para_index);
      r.source_sent_id = s.sent_id;
      r.source_sim = 1.0;
      out.push_back(std::move(r));
      ++k;
    }
  }
  std::shuffle(out.begin(), out.end(), rng);
  return out;
}

// Raw text assembled from prose, math in every delimiter style, citations,
// footnotes and stray delimiters.
inline std::string random_latex_document(Rng& rng) {
  static const std::vector<std::string> words = {
      "energy", "The",  "model", "Results", "flux", "is",   "and", "of",  "we",  "Figure",
      "rate",   "heat", "grows", "et al.",  "Fig.", "e.g.", "99.5", "A",  "B",   "x",
      "\xC3\xA9t\xC3\xA9", "\xCE\xB1", "(see", "this)", "[note]", "----", "**", "%", "&", "#"};
  static const std::vector<std::string> inserts = {
      "$x$", "$$E=mc^2$$", "\\(a+b\\)", "\\[ \\int f \\]",
      "\\begin{equation} y \\end{equation}", "\\begin{align*} a &= b \\\\ c \\end{align*}",
      "[12]", "[3, 4]", "[5-7]", "[8\xE2\x80\x93" "9]", "(Smith et al., 2020)", "(Jones, 2019a)",
      "(Lee and Kim, 2021; Park, 2018)", "^{3}", "\\footnote{A note {nested}.}", "\\$",
      "$", "\\(", "\\begin{equation}", "\\end{align}", "}", "{", "\\\\", "(Smith, (Jones, 2020) 2021)",
      "$a$$b$", "[1]]", "((Doe, 2001))"};
  std::string doc;
  const std::size_t paragraphs = uniform(rng, 0, 6);
  for (std::size_t p = 0; p < paragraphs; ++p) {
    if (p) doc += uniform(rng, 0, 1) ? "\n\n" : "\n \n\t\n";
    const std::size_t tokens = uniform(rng, 0, 40);
    for (std::size_t t = 0; t < tokens; ++t) {
      const std::size_t roll = uniform(rng, 0, 9);
      if (roll < 2) doc += pick(rng, inserts);
      else doc += pick(rng, words);
      if (roll == 3) doc += ".";
      if (roll == 4) doc += uniform(rng, 0, 1) ? "\n" : "  ";
      else doc += " ";
    }
  }
  return doc;
}

}  // namespace gen

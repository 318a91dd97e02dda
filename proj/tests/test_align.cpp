#include <doctest.h>

#include <json.hpp>
#include <set>

#include "relcat/align.hpp"
#include "relcat/error.hpp"
#include "relcat/text.hpp"
#include "support/generators.hpp"
#include "support/oracles.hpp"

using namespace relcat;

namespace {

std::vector<ClassifiedSentence> records(const std::string& model,
                                        const std::vector<std::string>& texts,
                                        std::size_t para = 0) {
  std::vector<ClassifiedSentence> out;
  for (const auto& t : texts) out.push_back(gen::record(model, t, CategoryLabel::none(), "x", "y", "d", para));
  return out;
}

CleanDocument source_doc(const std::vector<std::string>& sentences) {
  CleanDocument doc;
  doc.doc_id = "d";
  doc.paragraphs.push_back({0, {}});
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    doc.paragraphs[0].sentences.push_back({make_sent_id("d", 0, i), sentences[i], 0, i});
  }
  return doc;
}

// Greedy result as a -> b index map, -1 for unmatched.
std::vector<int> assignment(const AlignmentResult& r, std::size_t n) {
  std::vector<int> out(n, -1);
  for (const auto& p : r.pairs) out[p.index_a] = static_cast<int>(p.index_b);
  return out;
}

std::vector<std::vector<double>> sim_matrix(const std::vector<ClassifiedSentence>& a,
                                            const std::vector<ClassifiedSentence>& b) {
  std::vector<std::vector<double>> w(a.size(), std::vector<double>(b.size()));
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < b.size(); ++j) w[i][j] = oracle::similarity(a[i].sent_text, b[j].sent_text);
  }
  return w;
}

}  // namespace

TEST_CASE("similarity examples") {
  CHECK(similarity("kitten", "kitten") == 1.0);
  CHECK(similarity("kitten", "sitting") == doctest::Approx(1.0 - 3.0 / 7.0));
  CHECK(similarity("kitten", "sitting") == doctest::Approx(0.5714).epsilon(1e-4));
  CHECK(similarity("", "abc") == 0.0);
  CHECK(similarity("", "") == 1.0);
  CHECK(similarity("...", "") == 1.0);
  // Case, punctuation and spacing do not count.
  CHECK(similarity("Smoking causes  lung cancer.", "smoking causes lung cancer") == 1.0);
  CHECK(similarity_key("  The  Cell, (a) membrane! ") == "the cell a membrane");
  // Code points, not bytes.
  CHECK(similarity("\xCE\xB1\xCE\xB2", "\xCE\xB1\xCE\xB3") == 0.5);
}

TEST_CASE("similarity agrees with the matrix oracle on short strings") {
  std::vector<std::string> strings = {""};
  for (std::size_t len = 1; len <= 5; ++len) {
    std::vector<std::string> next;
    for (const auto& s : strings) {
      if (s.size() != len - 1) continue;
      for (char c : {'a', 'b', 'c'}) next.push_back(s + c);
    }
    strings.insert(strings.end(), next.begin(), next.end());
  }
  REQUIRE(strings.size() == 364);
  for (const auto& x : strings) {
    for (const auto& y : strings) {
      const double expected = oracle::ascii_similarity(x, y);
      if (similarity(x, y) != expected) {
        FAIL_CHECK(x << " vs " << y);
        return;
      }
    }
  }
  gen::Rng rng(3);
  for (int i = 0; i < 2000; ++i) {
    const auto a = gen::random_sentence(rng), b = gen::perturb(rng, a, gen::uniform(rng, 0, 6));
    CHECK(similarity(a, b) == doctest::Approx(oracle::similarity(a, b)).epsilon(1e-12));
    CHECK(similarity(a, b) == similarity(b, a));
  }
}

TEST_CASE("align_records: identity and disjoint corpora") {
  const std::vector<std::string> texts = {"Heat flows into the cell.", "Stars form from gas.",
                                          "Pressure rises."};
  SUBCASE("identical lists pair fully") {
    const auto r = align_records(records("a", texts), records("b", texts));
    REQUIRE(r.pairs.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
      CHECK(r.pairs[i].index_a == i);
      CHECK(r.pairs[i].index_b == i);
      CHECK(r.pairs[i].sim_ab == 1.0);
    }
    CHECK(r.unmatched_a.empty());
    CHECK(r.unmatched_b.empty());
  }
  SUBCASE("disjoint texts pair nothing") {
    const auto r = align_records(records("a", texts),
                                 records("b", {"Completely unrelated words.", "Nothing alike here."}));
    CHECK(r.pairs.empty());
    CHECK(r.unmatched_a.size() == 3);
    CHECK(r.unmatched_b.size() == 2);
  }
  SUBCASE("never across paragraphs") {
    auto b = records("b", texts, 1);
    const auto r = align_records(records("a", texts), b);
    CHECK(r.pairs.empty());
  }
}

TEST_CASE("align_records: ties go to the lower a index, then the lower b index") {
  const auto a = records("a", {"Same text.", "Same text."});
  const auto b = records("b", {"Same text.", "Same text."});
  const auto r = align_records(a, b);
  REQUIRE(r.pairs.size() == 2);
  CHECK(r.pairs[0].index_a == 0);
  CHECK(r.pairs[0].index_b == 0);
  CHECK(r.pairs[1].index_b == 1);
  const auto one_b = align_records(a, records("b", {"Same text."}));
  REQUIRE(one_b.pairs.size() == 1);
  CHECK(one_b.pairs[0].index_a == 0);
  REQUIRE(one_b.unmatched_a.size() == 1);
  CHECK(one_b.unmatched_a[0].index == 1);
}

TEST_CASE("align_records rejects thresholds outside (0, 1]") {
  for (double t : {0.0, -0.1, 1.5}) {
    CHECK_THROWS_AS(align_records({}, {}, t), PreconditionError);
    CHECK_THROWS_AS(align_to_source({}, CleanDocument{}, t), PreconditionError);
  }
  CHECK_NOTHROW(align_records({}, {}, 1.0));
}

TEST_CASE("greedy equals exhaustive maximum-weight matching on perturbed 6x6 instances") {
  gen::Rng rng(42);
  for (std::size_t families : {0, 2}) {
    CAPTURE(families);
    int checked = 0;
    while (checked < 40) {
      const auto [a, b] = gen::perturbed_instance(rng, 6, families);
      const auto w = sim_matrix(a, b);
      // Only values that clear the threshold take part in either matching.
      std::vector<double> usable;
      for (const auto& row : w)
        for (double v : row)
          if (v >= kDefaultAlignmentThreshold) usable.push_back(v);
      if (std::set<double>(usable.begin(), usable.end()).size() != usable.size()) continue;
      ++checked;
      CHECK(assignment(align_records(a, b), 6) ==
            oracle::max_weight_matching(w, kDefaultAlignmentThreshold));
    }
  }
}

TEST_CASE("partition and monotonicity on random corpora") {
  gen::Rng rng(8);
  for (int trial = 0; trial < 150; ++trial) {
    std::vector<ClassifiedSentence> a, b;
    const std::size_t paras = gen::uniform(rng, 1, 3);
    for (std::size_t p = 0; p < paras; ++p) {
      const std::size_t n = gen::uniform(rng, 0, 6);
      for (std::size_t i = 0; i < n; ++i) {
        const auto s = gen::random_sentence(rng);
        a.push_back(gen::record("a", s, CategoryLabel::none(), "x", "y", "d", p));
        if (gen::uniform(rng, 0, 3))
          b.push_back(gen::record("b", gen::perturb(rng, s, gen::uniform(rng, 0, 8)),
                                  CategoryLabel::none(), "x", "y", "d", p));
      }
      for (std::size_t extra = gen::uniform(rng, 0, 2); extra > 0; --extra)
        b.push_back(gen::record("b", gen::random_sentence(rng), CategoryLabel::none(), "x", "y", "d", p));
    }
    std::shuffle(b.begin(), b.end(), rng);
    std::size_t previous = SIZE_MAX;
    for (double t : {0.3, 0.5, 0.7, 0.85, 0.95, 1.0}) {
      const auto r = align_records(a, b, t);
      std::multiset<std::size_t> seen_a, seen_b;
      for (const auto& p : r.pairs) {
        seen_a.insert(p.index_a);
        seen_b.insert(p.index_b);
        CHECK(p.sim_ab >= t);
        CHECK(p.rec_a.source_para == p.rec_b.source_para);
      }
      for (const auto& u : r.unmatched_a) seen_a.insert(u.index);
      for (const auto& u : r.unmatched_b) seen_b.insert(u.index);
      CHECK(seen_a.size() == a.size());
      CHECK(std::set<std::size_t>(seen_a.begin(), seen_a.end()).size() == a.size());
      CHECK(seen_b.size() == b.size());
      CHECK(std::set<std::size_t>(seen_b.begin(), seen_b.end()).size() == b.size());
      CHECK(r.pairs.size() <= previous);
      previous = r.pairs.size();
    }
  }
}

TEST_CASE("align_to_source: verbatim, invented and merged sentences") {
  const auto doc = source_doc({"Heat flows into the cell.", "Stars form from gas."});
  SUBCASE("verbatim echoes") {
    const auto out = align_to_source(records("m", {"Stars form from gas.", "Heat flows into the cell."}), doc);
    CHECK(out[0].source_sent_id == "d.par000.s001");
    CHECK(out[1].source_sent_id == "d.par000.s000");
    CHECK(out[0].source_sim == 1.0);
  }
  SUBCASE("invented sentence") {
    const auto out = align_to_source(records("m", {"We thank the reviewers."}), doc);
    CHECK_FALSE(out[0].source_sent_id.has_value());
    CHECK_FALSE(out[0].source_sim.has_value());
  }
  SUBCASE("one source hosts one record") {
    const auto out = align_to_source(records("m", {"Stars form from gas.", "Stars form from gas!"}), doc);
    CHECK(out[0].source_sent_id == "d.par000.s001");
    CHECK_FALSE(out[1].source_sent_id.has_value());
  }
  SUBCASE("record from another document") {
    auto r = records("m", {"x"});
    r[0].source_para.doc_id = "other";
    CHECK_THROWS_AS(align_to_source(r, doc), PreconditionError);
  }
}

TEST_CASE("align_to_source matches the exhaustive oracle on the merged-sentence fixture") {
  const auto cases = nlohmann::json::parse(oracle::slurp(RELCAT_FIXTURES "/merged_sentences.json"));
  REQUIRE(cases.size() == 5);
  for (const auto& c : cases) {
    CAPTURE(c["name"].get<std::string>());
    const auto sources = c["sources"].get<std::vector<std::string>>();
    const auto texts = c["records"].get<std::vector<std::string>>();
    const double threshold = c["threshold"];
    const auto expected = c["expected"].get<std::vector<int>>();

    // Square the matrix with unusable padding so the oracle sees all options.
    const std::size_t n = std::max(sources.size(), texts.size());
    std::vector<std::vector<double>> w(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < texts.size(); ++i) {
      for (std::size_t s = 0; s < sources.size(); ++s) w[i][s] = oracle::similarity(texts[i], sources[s]);
    }
    auto best = oracle::max_weight_matching(w, threshold);
    best.resize(texts.size());
    CHECK(best == expected);

    const auto out = align_to_source(records("m", texts), source_doc(sources), threshold);
    for (std::size_t i = 0; i < texts.size(); ++i) {
      CAPTURE(i);
      if (expected[i] < 0) {
        CHECK_FALSE(out[i].source_sent_id.has_value());
      } else {
        CHECK(out[i].source_sent_id == make_sent_id("d", 0, static_cast<std::size_t>(expected[i])));
      }
    }
  }
}

TEST_CASE("aligned.jsonl round trip") {
  auto a = records("a", {"Heat flows into the cell.", "Only in a."});
  auto b = records("b", {"Heat flows in to the cell", "Only in b, quite different."});
  a[0].source_sent_id = "d.par000.s000";
  a[0].source_sim = 1.0;
  a[0].label = CategoryLabel::in_taxonomy("location_based");
  b[0].parse_warnings = {"missing entity B line"};
  const auto r = align_records(a, b);
  REQUIRE(r.pairs.size() == 1);
  const std::string jsonl = to_aligned_jsonl(r, "a", "b");
  const auto file = read_aligned_jsonl(jsonl);
  CHECK(file.model_a == "a");
  CHECK(file.model_b == "b");
  CHECK(file.threshold == kDefaultAlignmentThreshold);
  REQUIRE(file.result.pairs.size() == 1);
  const auto& p = file.result.pairs[0];
  CHECK(p.source_sent_id == "d.par000.s000");
  CHECK(p.rec_a.label == CategoryLabel::in_taxonomy("location_based"));
  CHECK(p.rec_b.parse_warnings == b[0].parse_warnings);
  CHECK(p.sim_ab == doctest::Approx(r.pairs[0].sim_ab).epsilon(1e-4));
  CHECK(file.result.unmatched_a.size() == 1);
  CHECK(file.result.unmatched_b.size() == 1);
  CHECK(file.result.unmatched_b[0].index == 1);
  CHECK(to_aligned_jsonl(file.result, "a", "b") == jsonl);
  CHECK(jsonl.find("\"sim_ab\":0.9") != std::string::npos);
  CHECK_THROWS_AS(read_aligned_jsonl("{\"kind\":\"pair\"}\n"), FormatError);
}

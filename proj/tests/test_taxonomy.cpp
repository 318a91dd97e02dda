#include <doctest.h>

#include <set>

#include "relcat/corpus.hpp"
#include "relcat/error.hpp"
#include "relcat/taxonomy.hpp"
#include "support/oracles.hpp"

using namespace relcat;

TEST_CASE("builtin taxonomy: order, names and examples") {
  const auto& cats = Taxonomy::builtin().categories();
  REQUIRE(cats.size() == 17);
  const std::vector<std::string> order = {
      "part_whole",          "category_type",          "cause_effect",
      "condition_rule",      "action_change",          "interaction_influence",
      "comparison",          "opposing",               "time_based",
      "location_based",      "quantity_measurement",   "ownership_control",
      "limitation_restriction", "representation_symbol", "replacement_substitution",
      "formation_emergence", "process_change_over_time"};
  std::set<std::string> seen;
  for (std::size_t i = 0; i < cats.size(); ++i) {
    CHECK(cats[i].id == order[i]);
    CHECK_FALSE(cats[i].example.empty());
    CHECK(seen.insert(cats[i].id).second);
  }
  CHECK(cats[0].example == "A mitochondrion is part of a cell.");
  CHECK(cats[2].display_name == "Cause & Effect Relationship");
  CHECK(cats[2].example == "Smoking causes lung cancer.");
  CHECK(cats[3].example == "If water reaches 100\xC2\xB0" "C, it boils.");
}

TEST_CASE("taxonomy asset equals the builtin") {
  const Taxonomy loaded = Taxonomy::load(RELCAT_SOURCE_DIR "/assets/taxonomy.json");
  CHECK(loaded.categories() == Taxonomy::builtin().categories());
  CHECK(loaded.hash() == Taxonomy::builtin().hash());
  const Taxonomy variant = Taxonomy::load(RELCAT_SOURCE_DIR "/assets/taxonomy_prompt_variant.json");
  CHECK(variant.size() == 17);
  CHECK(variant.categories()[1].example == "Gravity is a fundamental force in physics.");
  CHECK(variant.hash() != loaded.hash());
}

TEST_CASE("taxonomy validation") {
  CHECK_THROWS_AS(Taxonomy({}), ConfigError);
  CHECK_THROWS_AS(Taxonomy({{"a", "A", "d", "e"}, {"a", "B", "d", "e"}}), ConfigError);
  CHECK_THROWS_AS(Taxonomy({{"a", "A", "d", ""}}), ConfigError);
  CHECK_THROWS_AS(Taxonomy::from_json("{}"), ConfigError);
}

TEST_CASE("normalize_label examples") {
  CHECK(normalize_label("**Cause & Effect Relationship**") ==
        CategoryLabel::in_taxonomy("cause_effect"));
  CHECK(normalize_label("N/A") == CategoryLabel::not_applicable());
  CHECK(normalize_label("NA") == CategoryLabel::not_applicable());
  CHECK(normalize_label("none assigned") == CategoryLabel::not_applicable());
  CHECK(normalize_label("") == CategoryLabel::none());
  CHECK(normalize_label("  ** ") == CategoryLabel::none());
  CHECK(normalize_label("Function & Purpose Relationship") ==
        CategoryLabel::out_of_taxonomy("function & purpose"));
  CHECK(normalize_label("3. Time-Based Relationship") == CategoryLabel::in_taxonomy("time_based"));
  CHECK(normalize_label("cause and effect") == CategoryLabel::in_taxonomy("cause_effect"));
  CHECK(normalize_label("`limitation_restriction`") ==
        CategoryLabel::in_taxonomy("limitation_restriction"));
  CHECK(normalize_label("Comparison Relationship (A is better than B)") ==
        CategoryLabel::in_taxonomy("comparison"));
  CHECK(normalize_label("\"Part-Whole\".") == CategoryLabel::in_taxonomy("part_whole"));
}

TEST_CASE("normalize_label round-trips every display name and id") {
  for (const auto& c : Taxonomy::builtin().categories()) {
    CHECK(normalize_label(c.display_name) == CategoryLabel::in_taxonomy(c.id));
    CHECK(normalize_label(c.id) == CategoryLabel::in_taxonomy(c.id));
  }
}

TEST_CASE("normalize_label is idempotent on out-of-taxonomy output") {
  for (const char* raw : {"Mathematical Relationship", "**Purpose & Function**", "1. Definition:",
                          "Causal chain relationship", "Related To"}) {
    const CategoryLabel first = normalize_label(raw);
    REQUIRE(first.kind() == CategoryLabel::Kind::kOutOfTaxonomy);
    CHECK(normalize_label(first.value()) == first);
  }
}

TEST_CASE("label keys round-trip") {
  for (const auto& l : {CategoryLabel::in_taxonomy("comparison"), CategoryLabel::not_applicable(),
                        CategoryLabel::none(), CategoryLabel::out_of_taxonomy("x y")}) {
    CHECK(CategoryLabel::from_key(l.key()) == l);
  }
  CHECK(CategoryLabel::not_applicable().key() == "N/A");
  CHECK(CategoryLabel::none().key() == "None");
  CHECK(CategoryLabel::out_of_taxonomy("definition").key() == "out:definition");
}

namespace {
Paragraph para(std::vector<std::string> sentences) {
  Paragraph p;
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    p.sentences.push_back({make_sent_id("doc", 0, i), sentences[i], 0, i});
  }
  return p;
}
}  // namespace

TEST_CASE("build_prompt contents") {
  const auto prompt = build_prompt(Taxonomy::builtin(), "doc", para({"A causes B.", "C is D."}));
  CHECK(prompt.text.find("\nCategory: <Selected category>\n") != std::string::npos);
  CHECK(prompt.text.rfind("You will be given a paragraph", 0) == 0);
  CHECK(prompt.text.find("A causes B. C is D.") != std::string::npos);
  for (const auto& c : Taxonomy::builtin().categories()) {
    CHECK(prompt.text.find(c.display_name) != std::string::npos);
    CHECK(prompt.text.find("\"" + c.example + "\"") != std::string::npos);
  }
  CHECK(prompt.first_sent_id == "doc.par000.s000");
  CHECK(prompt.last_sent_id == "doc.par000.s001");
  CHECK(prompt.taxonomy_hash == Taxonomy::builtin().hash());
}

TEST_CASE("build_prompt is deterministic and linear in the paragraph") {
  const auto a = build_prompt(Taxonomy::builtin(), "doc", para({"Same text."}));
  const auto b = build_prompt(Taxonomy::builtin(), "doc", para({"Same text."}));
  CHECK(a.text == b.text);
  CHECK(a.taxonomy_hash == b.taxonomy_hash);
  const std::string s = "Twelve chars.";
  const auto one = build_prompt(Taxonomy::builtin(), "doc", para({s}));
  const auto two = build_prompt(Taxonomy::builtin(), "doc", para({s, s}));
  const auto three = build_prompt(Taxonomy::builtin(), "doc", para({s, s, s}));
  CHECK(two.text.size() - one.text.size() == s.size() + 1);
  CHECK(three.text.size() - two.text.size() == s.size() + 1);
}

TEST_CASE("build_prompt golden for a one-sentence paragraph") {
  // The golden prompt shows the alternate Category & Type example.
  const Taxonomy variant = Taxonomy::load(RELCAT_SOURCE_DIR "/assets/taxonomy_prompt_variant.json");
  const auto prompt = build_prompt(variant, "doc", para({"Water boils."}));
  CHECK(prompt.text == oracle::slurp(RELCAT_FIXTURES "/golden/prompt_water_boils.txt"));
  const std::string tail =
      "Now, classify the following paragraph:\nWater boils.\n\n"
      "Provide output in the following format:\nSentence: <Extracted sentence>\n"
      "Category: <Selected category>\nA: <Entity A>\nB: <Entity B>\n";
  REQUIRE(prompt.text.size() > tail.size());
  CHECK(prompt.text.substr(prompt.text.size() - tail.size()) == tail);
}

TEST_CASE("build_prompt rejects an empty paragraph") {
  CHECK_THROWS_AS(build_prompt(Taxonomy::builtin(), "doc", Paragraph{}), PreconditionError);
}

TEST_CASE("prompt template asset equals the builtin and slots are required") {
  CHECK(PromptTemplate::load(RELCAT_SOURCE_DIR "/assets/prompt.tmpl").body() ==
        PromptTemplate::builtin().body());
  CHECK_THROWS_AS(PromptTemplate("no slots"), ConfigError);
  CHECK_THROWS_AS(PromptTemplate("{{categories}} only"), ConfigError);
  // Slot text inside the paragraph is not expanded again.
  const PromptTemplate t("[{{categories}}] [{{paragraph}}]");
  CHECK(t.render("C", "{{categories}}") == "[C] [{{categories}}]");
}

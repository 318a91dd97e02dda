#include "relcat/taxonomy.hpp"

#include <array>
#include <set>

#include <json.hpp>

#include "relcat/error.hpp"
#include "relcat/hash.hpp"
#include "relcat/json_writer.hpp"
#include "relcat/text.hpp"

namespace relcat {

namespace {

std::vector<Category> builtin_categories() {
  return {
      {"part_whole", "Part-Whole Relationship", "A is a part of B or contains B.",
       "A mitochondrion is part of a cell."},
      {"category_type", "Category & Type Relationship",
       "A is a specific instance of category B.", "A rose is a type of flower."},
      {"cause_effect", "Cause & Effect Relationship", "A causes or leads to B.",
       "Smoking causes lung cancer."},
      {"condition_rule", "Condition & Rule Relationship", "If A happens, B follows.",
       "If water reaches 100\xC2\xB0" "C, it boils."},
      {"action_change", "Action & Change Relationship", "A changes or transforms B.",
       "Heating metal expands it."},
      {"interaction_influence", "Interaction & Influence Relationship",
       "A and B influence each other.", "Gut bacteria influence human metabolism."},
      {"comparison", "Comparison Relationship", "A is similar to or different from B.",
       "Electric cars are more efficient than gasoline cars."},
      {"opposing", "Opposing Relationship", "A prevents or contradicts B.",
       "Vaccination prevents disease."},
      {"time_based", "Time-Based Relationship", "A happens before or after B.",
       "The Renaissance happened before the Industrial Revolution."},
      {"location_based", "Location-Based Relationship", "A is inside, near, or above B.",
       "The nucleus is inside the cell."},
      {"quantity_measurement", "Quantity & Measurement Relationship",
       "A is greater than or proportional to B.",
       "Speed is proportional to distance over time."},
      {"ownership_control", "Ownership & Control Relationship", "A owns or controls B.",
       "A company owns patents."},
      {"limitation_restriction", "Limitation & Restriction Relationship",
       "A limits or stops B.", "Budget constraints limit research progress."},
      {"representation_symbol", "Representation & Symbol Relationship",
       "A represents or encodes B.", "DNA encodes genetic information."},
      {"replacement_substitution", "Replacement & Substitution Relationship",
       "A replaces or is equivalent to B.", "Solar energy replaces fossil fuels."},
      {"formation_emergence", "Formation & Emergence Relationship",
       "A emerges from B or leads to the formation of B.",
       "Planets form from cosmic dust."},
      {"process_change_over_time", "Process & Change Over Time Relationship",
       "A transitions into B.", "A caterpillar turns into a butterfly."},
  };
}

constexpr std::string_view kBuiltinTemplate =
    "You will be given a paragraph from a scientific paper. Your task\n"
    "is to categorize each sentence within the paragraph into one of\n"
    "the 17 predefined relationship categories listed below. For each\n"
    "sentence, extract the two primary entities (A and B) involved in\n"
    "the relationship. The possible relationship categories are:\n"
    "\n"
    "{{categories}}\n"
    "\n"
    "Now, classify the following paragraph:\n"
    "{{paragraph}}\n"
    "\n"
    "Provide output in the following format:\n"
    "Sentence: <Extracted sentence>\n"
    "Category: <Selected category>\n"
    "A: <Entity A>\n"
    "B: <Entity B>\n";

constexpr std::string_view kCategoriesSlot = "{{categories}}";
constexpr std::string_view kParagraphSlot = "{{paragraph}}";

// Lowercase token key with connectors and the word "relationship" removed,
// so "Cause & Effect Relationship", "cause and effect" and "cause_effect"
// all compare equal.
std::string loose_key(std::string_view s) {
  std::string spaced;
  for (char c : s) {
    const auto b = static_cast<unsigned char>(c);
    if (text::is_alpha(c) || text::is_digit(c) || b >= 0x80) {
      spaced.push_back(text::to_lower(c));
    } else {
      spaced.push_back(' ');
    }
  }
  std::string key;
  std::size_t pos = 0;
  while (pos < spaced.size()) {
    std::size_t end = spaced.find(' ', pos);
    if (end == std::string::npos) end = spaced.size();
    std::string_view token(spaced.data() + pos, end - pos);
    if (!token.empty() && token != "and" && token != "relationship" &&
        token != "relationships") {
      if (!key.empty()) key.push_back(' ');
      key.append(token);
    }
    pos = end + 1;
  }
  return key;
}

std::string strip_leading_numbering(std::string_view s) {
  std::size_t i = 0;
  while (i < s.size() && text::is_digit(s[i])) ++i;
  if (i > 0 && i < s.size() && (s[i] == '.' || s[i] == ')')) {
    return std::string(text::trim(s.substr(i + 1)));
  }
  if (!s.empty() && (s[0] == '-' || s[0] == '#') && s.size() > 1 && s[1] == ' ') {
    return std::string(text::trim(s.substr(2)));
  }
  return std::string(s);
}

std::string strip_quotes(std::string_view s) {
  static constexpr std::array<std::pair<std::string_view, std::string_view>, 3> kPairs = {{
      {"\"", "\""}, {"'", "'"}, {"\xE2\x80\x9C", "\xE2\x80\x9D"}}};
  for (auto [open, close] : kPairs) {
    if (s.size() >= open.size() + close.size() && s.substr(0, open.size()) == open &&
        text::ends_with(s, close)) {
      return std::string(s.substr(open.size(), s.size() - open.size() - close.size()));
    }
  }
  return std::string(s);
}

std::string clean_label_once(const std::string& s) {
  // '_' survives only inside a word, so "cause_effect" keeps its id form
  // while "__bold__" loses its emphasis.
  auto alnum = [&](std::size_t i) {
    return i < s.size() && (text::is_alpha(s[i]) || text::is_digit(s[i]));
  };
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const char c = s[i];
    if (c == '*' || c == '`') continue;
    if (c == '_' && !(i > 0 && alnum(i - 1) && alnum(i + 1))) continue;
    out.push_back(c);
  }
  out = text::collapse_whitespace(out);
  out = strip_leading_numbering(out);
  out = std::string(text::trim(strip_quotes(out)));
  while (!out.empty() && (out.back() == '.' || out.back() == ':' || out.back() == ',')) {
    out.pop_back();
  }
  out = text::to_lower(text::trim(out));
  if (text::ends_with(out, " relationship")) {
    out.resize(out.size() - std::string_view(" relationship").size());
  }
  return std::string(text::trim(out));
}

bool is_not_applicable(std::string_view cleaned) {
  static const std::set<std::string, std::less<>> kForms = {
      "n/a", "na", "none assigned", "none", "not applicable",
      "no category", "no category assigned", "n/a (no category assigned)"};
  return kForms.count(cleaned) > 0;
}

const Category* match_category(std::string_view cleaned, const Taxonomy& taxonomy) {
  const std::string key = loose_key(cleaned);
  if (key.empty()) return nullptr;
  for (const auto& cat : taxonomy.categories()) {
    if (loose_key(cat.display_name) == key || loose_key(cat.id) == key) return &cat;
  }
  return nullptr;
}

std::string taxonomy_json(const std::vector<Category>& categories, bool pretty) {
  JsonWriter w(pretty);
  w.begin_array();
  for (const auto& c : categories) {
    w.begin_object()
        .key("id").value(c.id)
        .key("display_name").value(c.display_name)
        .key("definition").value(c.definition)
        .key("example").value(c.example)
        .end_object();
  }
  w.end_array();
  return w.str();
}

}  // namespace

Taxonomy::Taxonomy(std::vector<Category> categories)
    : categories_(std::move(categories)) {
  if (categories_.empty()) throw ConfigError("taxonomy has no categories");
  std::set<std::string> ids;
  for (const auto& c : categories_) {
    if (c.id.empty() || c.display_name.empty() || c.definition.empty() ||
        c.example.empty()) {
      throw ConfigError("taxonomy category '" + c.id + "' has an empty field");
    }
    if (!ids.insert(c.id).second) {
      throw ConfigError("duplicate taxonomy id '" + c.id + "'");
    }
  }
  hash_ = sha256_hex(taxonomy_json(categories_, false));
}

const Taxonomy& Taxonomy::builtin() {
  static const Taxonomy kBuiltin(builtin_categories());
  return kBuiltin;
}

Taxonomy Taxonomy::from_json(std::string_view json) {
  std::vector<Category> categories;
  try {
    const auto j = nlohmann::json::parse(json);
    if (!j.is_array()) throw ConfigError("taxonomy JSON must be an array");
    for (const auto& item : j) {
      categories.push_back({item.at("id").get<std::string>(),
                            item.at("display_name").get<std::string>(),
                            item.at("definition").get<std::string>(),
                            item.at("example").get<std::string>()});
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("invalid taxonomy JSON: ") + e.what());
  }
  return Taxonomy(std::move(categories));
}

Taxonomy Taxonomy::load(const std::filesystem::path& path) {
  return from_json(read_file(path));
}

std::string Taxonomy::to_json() const { return taxonomy_json(categories_, true) + "\n"; }

const Category* Taxonomy::find(std::string_view id) const {
  for (const auto& c : categories_) {
    if (c.id == id) return &c;
  }
  return nullptr;
}

std::optional<std::size_t> Taxonomy::index_of(std::string_view id) const {
  for (std::size_t i = 0; i < categories_.size(); ++i) {
    if (categories_[i].id == id) return i;
  }
  return std::nullopt;
}

std::string CategoryLabel::key() const {
  switch (kind_) {
    case Kind::kInTaxonomy: return value_;
    case Kind::kNotApplicable: return "N/A";
    case Kind::kNone: return "None";
    case Kind::kOutOfTaxonomy: return "out:" + value_;
  }
  return "None";
}

CategoryLabel CategoryLabel::from_key(std::string_view key) {
  if (key == "N/A") return not_applicable();
  if (key == "None") return none();
  if (key.substr(0, 4) == "out:") return out_of_taxonomy(std::string(key.substr(4)));
  return in_taxonomy(std::string(key));
}

CategoryLabel normalize_label(std::string_view raw, const Taxonomy& taxonomy) {
  const std::string direct = text::to_lower(text::trim(raw));
  if (const Category* c = taxonomy.find(direct)) return CategoryLabel::in_taxonomy(c->id);

  const std::string cleaned = text::until_stable(std::string(raw), clean_label_once);
  if (cleaned.empty()) return CategoryLabel::none();
  if (is_not_applicable(cleaned)) return CategoryLabel::not_applicable();
  if (const Category* c = match_category(cleaned, taxonomy)) {
    return CategoryLabel::in_taxonomy(c->id);
  }
  // "Cause & Effect (A causes B)": retry without the trailing gloss.
  if (cleaned.back() == ')') {
    const std::size_t open = cleaned.rfind(" (");
    if (open != std::string::npos) {
      const std::string head = clean_label_once(cleaned.substr(0, open));
      if (const Category* c = match_category(head, taxonomy)) {
        return CategoryLabel::in_taxonomy(c->id);
      }
    }
  }
  return CategoryLabel::out_of_taxonomy(cleaned);
}

PromptTemplate::PromptTemplate(std::string body) : body_(std::move(body)) {
  if (body_.find(kCategoriesSlot) == std::string::npos ||
      body_.find(kParagraphSlot) == std::string::npos) {
    throw ConfigError("prompt template must contain {{categories}} and {{paragraph}}");
  }
}

const PromptTemplate& PromptTemplate::builtin() {
  static const PromptTemplate kBuiltin{std::string(kBuiltinTemplate)};
  return kBuiltin;
}

PromptTemplate PromptTemplate::load(const std::filesystem::path& path) {
  return PromptTemplate(read_file(path));
}

std::string PromptTemplate::render(std::string_view categories,
                                   std::string_view paragraph) const {
  // Single left-to-right pass so slot text inside inserted content is never
  // expanded again.
  std::string out;
  out.reserve(body_.size() + categories.size() + paragraph.size());
  for (std::size_t i = 0; i < body_.size();) {
    if (body_.compare(i, kCategoriesSlot.size(), kCategoriesSlot) == 0) {
      out.append(categories);
      i += kCategoriesSlot.size();
    } else if (body_.compare(i, kParagraphSlot.size(), kParagraphSlot) == 0) {
      out.append(paragraph);
      i += kParagraphSlot.size();
    } else {
      out.push_back(body_[i++]);
    }
  }
  return out;
}

std::string render_category_blocks(const Taxonomy& taxonomy) {
  std::string out;
  std::size_t n = 0;
  for (const auto& c : taxonomy.categories()) {
    std::string_view definition = c.definition;
    if (!definition.empty() && definition.back() == '.') definition.remove_suffix(1);
    if (n > 0) out += "\n\n";
    out += std::to_string(++n) + ". " + c.display_name + " (" + std::string(definition) +
           ")\n   Example: \"" + c.example + "\"";
  }
  return out;
}

PromptText build_prompt(const Taxonomy& taxonomy, std::string_view doc_id,
                        const Paragraph& paragraph, const PromptTemplate& tmpl) {
  if (paragraph.sentences.empty()) {
    throw PreconditionError("build_prompt: paragraph " +
                            std::to_string(paragraph.para_index) + " of '" +
                            std::string(doc_id) + "' has no sentences");
  }
  std::string joined;
  for (const auto& s : paragraph.sentences) {
    if (!joined.empty()) joined.push_back(' ');
    joined += s.text;
  }
  PromptText prompt;
  prompt.text = tmpl.render(render_category_blocks(taxonomy), joined);
  prompt.doc_id = std::string(doc_id);
  prompt.para_index = paragraph.para_index;
  prompt.taxonomy_hash = taxonomy.hash();
  prompt.first_sent_id = paragraph.sentences.front().sent_id;
  prompt.last_sent_id = paragraph.sentences.back().sent_id;
  return prompt;
}

}  // namespace relcat

#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "relcat/corpus.hpp"

namespace relcat {

struct Category {
  std::string id;            // snake_case, stable
  std::string display_name;  // e.g. "Cause & Effect Relationship"
  std::string definition;
  std::string example;

  bool operator==(const Category&) const = default;
};

class Taxonomy {
 public:
  explicit Taxonomy(std::vector<Category> categories);

  // The 17 built-in relationship categories.
  static const Taxonomy& builtin();
  // Array of {id, display_name, definition, example}.
  static Taxonomy from_json(std::string_view json);
  static Taxonomy load(const std::filesystem::path& path);
  std::string to_json() const;

  const std::vector<Category>& categories() const { return categories_; }
  std::size_t size() const { return categories_.size(); }
  const Category* find(std::string_view id) const;
  std::optional<std::size_t> index_of(std::string_view id) const;

  // SHA-256 of the canonical JSON form.
  const std::string& hash() const { return hash_; }

 private:
  std::vector<Category> categories_;
  std::string hash_;
};

class CategoryLabel {
 public:
  enum class Kind { kInTaxonomy, kNotApplicable, kNone, kOutOfTaxonomy };

  static CategoryLabel in_taxonomy(std::string id) { return {Kind::kInTaxonomy, std::move(id)}; }
  static CategoryLabel not_applicable() { return {Kind::kNotApplicable, {}}; }
  static CategoryLabel none() { return {Kind::kNone, {}}; }
  static CategoryLabel out_of_taxonomy(std::string raw) {
    return {Kind::kOutOfTaxonomy, std::move(raw)};
  }

  // Serialized form: category id, "N/A", "None" or "out:<label>".
  std::string key() const;
  static CategoryLabel from_key(std::string_view key);

  Kind kind() const { return kind_; }
  // Category id for kInTaxonomy, cleaned raw label for kOutOfTaxonomy.
  const std::string& value() const { return value_; }

  bool operator==(const CategoryLabel&) const = default;

 private:
  CategoryLabel(Kind kind, std::string value) : kind_(kind), value_(std::move(value)) {}

  Kind kind_;
  std::string value_;
};

// Total mapping from a model-emitted label onto the taxonomy.
CategoryLabel normalize_label(std::string_view raw,
                              const Taxonomy& taxonomy = Taxonomy::builtin());

// Prompt template with {{categories}} and {{paragraph}} slots.
class PromptTemplate {
 public:
  explicit PromptTemplate(std::string body);

  static const PromptTemplate& builtin();
  static PromptTemplate load(const std::filesystem::path& path);

  const std::string& body() const { return body_; }
  std::string render(std::string_view categories, std::string_view paragraph) const;

 private:
  std::string body_;
};

struct PromptText {
  std::string text;
  std::string doc_id;
  std::size_t para_index = 0;
  std::string taxonomy_hash;
  std::string first_sent_id;
  std::string last_sent_id;
};

// One numbered block per category, blank-line separated.
std::string render_category_blocks(const Taxonomy& taxonomy);

// Throws PreconditionError when the paragraph has no sentences.
PromptText build_prompt(const Taxonomy& taxonomy, std::string_view doc_id,
                        const Paragraph& paragraph,
                        const PromptTemplate& tmpl = PromptTemplate::builtin());

}  // namespace relcat

#include "relcat/align.hpp"

#include <algorithm>
#include <map>

#include <json.hpp>

#include "relcat/error.hpp"
#include "relcat/json_writer.hpp"
#include "relcat/text.hpp"

namespace relcat {

namespace {

bool is_ascii_punct(char c) {
  const auto b = static_cast<unsigned char>(c);
  return b < 0x80 && b > 0x20 && b != 0x7F && !text::is_alpha(c) && !text::is_digit(c);
}

void build_key(std::string_view s, std::string& out) {
  out.clear();
  bool pending_space = false;
  for (char c : s) {
    if (text::is_space(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (is_ascii_punct(c)) continue;
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(text::to_lower(c));
  }
}

struct Candidate {
  double sim;
  std::size_t left;
  std::size_t right;
};

// Sorts candidates best-first and accepts each whose endpoints are unused.
std::vector<Candidate> greedy_select(std::vector<Candidate> candidates,
                                     std::vector<bool>& left_used,
                                     std::vector<bool>& right_used) {
  std::sort(candidates.begin(), candidates.end(), [](const Candidate& x, const Candidate& y) {
    if (x.sim != y.sim) return x.sim > y.sim;
    if (x.left != y.left) return x.left < y.left;
    return x.right < y.right;
  });
  std::vector<Candidate> chosen;
  for (const auto& c : candidates) {
    if (left_used[c.left] || right_used[c.right]) continue;
    left_used[c.left] = right_used[c.right] = true;
    chosen.push_back(c);
  }
  return chosen;
}

void write_record(JsonWriter& w, const ClassifiedSentence& r, std::size_t index) {
  w.begin_object()
      .key("index").value(static_cast<std::uint64_t>(index))
      .key("model_id").value(r.model_id)
      .key("sent_text").value(r.sent_text)
      .key("category").value(r.label.key())
      .key("entity_a").value(r.entity_a)
      .key("entity_b").value(r.entity_b)
      .key("source_sent_id").optional_string(r.source_sent_id)
      .key("source_sim").fixed(r.source_sim)
      .key("warnings").string_array(r.parse_warnings)
      .end_object();
}

ClassifiedSentence read_record(const nlohmann::json& j, const SourcePara& para) {
  ClassifiedSentence r;
  r.model_id = j.at("model_id").get<std::string>();
  r.sent_text = j.at("sent_text").get<std::string>();
  r.label = CategoryLabel::from_key(j.at("category").get<std::string>());
  r.entity_a = j.at("entity_a").get<std::string>();
  r.entity_b = j.at("entity_b").get<std::string>();
  r.source_para = para;
  if (!j.at("source_sent_id").is_null()) r.source_sent_id = j["source_sent_id"].get<std::string>();
  if (!j.at("source_sim").is_null()) r.source_sim = j["source_sim"].get<double>();
  r.parse_warnings = j.at("warnings").get<std::vector<std::string>>();
  return r;
}

}  // namespace

std::string similarity_key(std::string_view s) {
  std::string out;
  build_key(s, out);
  return out;
}

std::size_t edit_distance(std::u32string_view a, std::u32string_view b) {
  if (a.size() < b.size()) std::swap(a, b);
  thread_local std::vector<std::size_t> row;
  row.resize(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) row[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::size_t diagonal = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t above = row[j];
      const std::size_t substitute = diagonal + (a[i - 1] == b[j - 1] ? 0 : 1);
      row[j] = std::min({above + 1, row[j - 1] + 1, substitute});
      diagonal = above;
    }
  }
  return row[b.size()];
}

double similarity(std::string_view a, std::string_view b) {
  thread_local std::string key_a, key_b;
  build_key(a, key_a);
  build_key(b, key_b);
  const std::u32string cps_a = text::decode_utf8(key_a);
  const std::u32string cps_b = text::decode_utf8(key_b);
  const std::size_t longest = std::max(cps_a.size(), cps_b.size());
  if (longest == 0) return 1.0;
  return 1.0 - static_cast<double>(edit_distance(cps_a, cps_b)) / static_cast<double>(longest);
}

AlignmentResult align_records(const std::vector<ClassifiedSentence>& list_a,
                              const std::vector<ClassifiedSentence>& list_b,
                              double threshold) {
  if (!(threshold > 0.0 && threshold <= 1.0)) {
    throw PreconditionError("alignment threshold must lie in (0, 1]");
  }
  std::map<SourcePara, std::pair<std::vector<std::size_t>, std::vector<std::size_t>>> groups;
  for (std::size_t i = 0; i < list_a.size(); ++i) groups[list_a[i].source_para].first.push_back(i);
  for (std::size_t j = 0; j < list_b.size(); ++j) groups[list_b[j].source_para].second.push_back(j);

  std::vector<bool> used_a(list_a.size(), false), used_b(list_b.size(), false);
  AlignmentResult result;
  result.threshold = threshold;
  for (const auto& [para, members] : groups) {
    std::vector<Candidate> candidates;
    for (std::size_t i : members.first) {
      for (std::size_t j : members.second) {
        const double sim = similarity(list_a[i].sent_text, list_b[j].sent_text);
        if (sim >= threshold) candidates.push_back({sim, i, j});
      }
    }
    for (const auto& c : greedy_select(std::move(candidates), used_a, used_b)) {
      AlignmentPair pair;
      pair.rec_a = list_a[c.left];
      pair.rec_b = list_b[c.right];
      pair.sim_ab = c.sim;
      pair.index_a = c.left;
      pair.index_b = c.right;
      pair.sim_a_src = pair.rec_a.source_sim;
      pair.sim_b_src = pair.rec_b.source_sim;
      pair.source_sent_id = pair.rec_a.source_sent_id ? pair.rec_a.source_sent_id
                                                      : pair.rec_b.source_sent_id;
      result.pairs.push_back(std::move(pair));
    }
  }
  std::sort(result.pairs.begin(), result.pairs.end(),
            [](const AlignmentPair& x, const AlignmentPair& y) { return x.index_a < y.index_a; });
  for (std::size_t i = 0; i < list_a.size(); ++i) {
    if (!used_a[i]) result.unmatched_a.push_back({i, list_a[i]});
  }
  for (std::size_t j = 0; j < list_b.size(); ++j) {
    if (!used_b[j]) result.unmatched_b.push_back({j, list_b[j]});
  }
  return result;
}

std::vector<ClassifiedSentence> align_to_source(std::vector<ClassifiedSentence> records,
                                                const CleanDocument& doc, double threshold) {
  if (!(threshold > 0.0 && threshold <= 1.0)) {
    throw PreconditionError("alignment threshold must lie in (0, 1]");
  }
  std::map<std::size_t, const Paragraph*> paragraphs;
  for (const auto& p : doc.paragraphs) paragraphs[p.para_index] = &p;

  std::map<std::size_t, std::vector<std::size_t>> by_para;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (records[i].source_para.doc_id != doc.doc_id) {
      throw PreconditionError("align_to_source: record from '" + records[i].source_para.doc_id +
                              "' aligned against document '" + doc.doc_id + "'");
    }
    records[i].source_sent_id.reset();
    records[i].source_sim.reset();
    by_para[records[i].source_para.para_index].push_back(i);
  }
  std::vector<bool> record_used(records.size(), false);
  for (const auto& [para_index, members] : by_para) {
    auto it = paragraphs.find(para_index);
    if (it == paragraphs.end()) continue;
    const auto& sentences = it->second->sentences;
    std::vector<Candidate> candidates;
    for (std::size_t i : members) {
      for (std::size_t s = 0; s < sentences.size(); ++s) {
        const double sim = similarity(records[i].sent_text, sentences[s].text);
        if (sim >= threshold) candidates.push_back({sim, i, s});
      }
    }
    std::vector<bool> sentence_used(sentences.size(), false);
    for (const auto& c : greedy_select(std::move(candidates), record_used, sentence_used)) {
      records[c.left].source_sent_id = sentences[c.right].sent_id;
      records[c.left].source_sim = c.sim;
    }
  }
  return records;
}

std::string to_aligned_jsonl(const AlignmentResult& result, std::string_view model_a,
                             std::string_view model_b) {
  std::string out;
  auto header = [&](JsonWriter& w, const char* kind, const SourcePara& para) {
    w.begin_object()
        .key("kind").value(kind)
        .key("model_a").value(model_a)
        .key("model_b").value(model_b)
        .key("threshold").fixed(result.threshold)
        .key("doc_id").value(para.doc_id)
        .key("para_index").value(static_cast<std::uint64_t>(para.para_index));
  };
  for (const auto& p : result.pairs) {
    JsonWriter w;
    header(w, "pair", p.rec_a.source_para);
    w.key("source_sent_id").optional_string(p.source_sent_id)
        .key("sim_ab").fixed(p.sim_ab)
        .key("sim_a_src").fixed(p.sim_a_src)
        .key("sim_b_src").fixed(p.sim_b_src)
        .key("a");
    write_record(w, p.rec_a, p.index_a);
    w.key("b");
    write_record(w, p.rec_b, p.index_b);
    w.end_object();
    out += w.str() + "\n";
  }
  auto unmatched = [&](const std::vector<UnmatchedRecord>& list, const char* kind) {
    for (const auto& u : list) {
      JsonWriter w;
      header(w, kind, u.record.source_para);
      w.key("source_sent_id").optional_string(u.record.source_sent_id)
          .key("sim_src").fixed(u.record.source_sim)
          .key("record");
      write_record(w, u.record, u.index);
      w.end_object();
      out += w.str() + "\n";
    }
  };
  unmatched(result.unmatched_a, "unmatched_a");
  unmatched(result.unmatched_b, "unmatched_b");
  return out;
}

AlignedFile read_aligned_jsonl(std::string_view jsonl) {
  AlignedFile file;
  std::size_t line_no = 0;
  for (std::string_view line : text::split_lines(jsonl)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      file.model_a = j.at("model_a").get<std::string>();
      file.model_b = j.at("model_b").get<std::string>();
      file.threshold = j.at("threshold").get<double>();
      file.result.threshold = file.threshold;
      const SourcePara para{j.at("doc_id").get<std::string>(), j.at("para_index").get<std::size_t>()};
      const auto kind = j.at("kind").get<std::string>();
      if (kind == "pair") {
        AlignmentPair p;
        p.rec_a = read_record(j.at("a"), para);
        p.rec_b = read_record(j.at("b"), para);
        p.index_a = j["a"].at("index").get<std::size_t>();
        p.index_b = j["b"].at("index").get<std::size_t>();
        p.sim_ab = j.at("sim_ab").get<double>();
        p.sim_a_src = p.rec_a.source_sim;
        p.sim_b_src = p.rec_b.source_sim;
        if (!j.at("source_sent_id").is_null()) p.source_sent_id = j["source_sent_id"].get<std::string>();
        file.result.pairs.push_back(std::move(p));
      } else if (kind == "unmatched_a" || kind == "unmatched_b") {
        UnmatchedRecord u{j.at("record").at("index").get<std::size_t>(),
                          read_record(j.at("record"), para)};
        (kind == "unmatched_a" ? file.result.unmatched_a : file.result.unmatched_b)
            .push_back(std::move(u));
      } else {
        throw FormatError("unknown kind '" + kind + "'");
      }
    } catch (const nlohmann::json::exception& e) {
      throw FormatError("aligned.jsonl line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return file;
}

}  // namespace relcat

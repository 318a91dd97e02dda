#include "relcat/pipeline.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <memory>

#include <json.hpp>

#include "relcat/align.hpp"
#include "relcat/corpus.hpp"
#include "relcat/error.hpp"
#include "relcat/hash.hpp"
#include "relcat/json_writer.hpp"
#include "relcat/parser.hpp"
#include "relcat/report.hpp"
#include "relcat/text.hpp"

namespace relcat {

namespace fs = std::filesystem;

std::string out_files::responses(std::string_view provider_id) {
  return "responses." + std::string(provider_id) + ".jsonl";
}

std::string out_files::parsed(std::string_view model_id) {
  return "parsed." + std::string(model_id) + ".jsonl";
}

void validate(const RunConfig& config) {
  if (!(config.threshold > 0.0 && config.threshold <= 1.0)) {
    throw ConfigError("threshold must be in (0, 1], got " + format_fixed(config.threshold, 4));
  }
  if (config.parallelism < 1) throw ConfigError("parallelism must be at least 1");
  if (config.out_dir.empty()) throw ConfigError("output directory not set");
}

std::string to_responses_jsonl(const std::vector<ResponseRow>& rows) {
  std::string out;
  for (const auto& r : rows) {
    JsonWriter w;
    w.begin_object()
        .key("provider_id").value(r.provider_id)
        .key("model_name").value(r.model_name)
        .key("doc_id").value(r.doc_id)
        .key("para_index").value(static_cast<std::uint64_t>(r.para_index))
        .key("cache_key").value(r.cache_key)
        .key("response_text").value(r.response_text)
        .end_object();
    out += w.str();
    out += '\n';
  }
  return out;
}

std::vector<ResponseRow> read_responses_jsonl(std::string_view jsonl) {
  std::vector<ResponseRow> rows;
  std::size_t line_no = 0;
  for (const auto& line : text::split_lines(jsonl)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      ResponseRow r;
      r.provider_id = j.at("provider_id").get<std::string>();
      r.model_name = j.at("model_name").get<std::string>();
      r.doc_id = j.at("doc_id").get<std::string>();
      r.para_index = j.at("para_index").get<std::size_t>();
      r.cache_key = j.at("cache_key").get<std::string>();
      r.response_text = j.at("response_text").get<std::string>();
      rows.push_back(std::move(r));
    } catch (const nlohmann::json::exception& e) {
      throw FormatError("responses line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return rows;
}

namespace {

void say(const Runtime& rt, const std::string& msg) {
  if (rt.log) *rt.log << msg << '\n';
}

fs::path out_path(const RunConfig& c, std::string_view name) { return c.out_dir / name; }

std::string require_file(const std::string& stage, const fs::path& path) {
  std::error_code ec;
  if (!fs::is_regular_file(path, ec)) throw MissingInputError(stage, path.string());
  return read_file(path);
}

Taxonomy effective_taxonomy(const RunConfig& c, const std::string& stage) {
  if (!c.taxonomy_file) return Taxonomy::builtin();
  require_file(stage, *c.taxonomy_file);
  return Taxonomy::load(*c.taxonomy_file);
}

PromptTemplate effective_template(const RunConfig& c, const std::string& stage) {
  if (!c.template_file) return PromptTemplate::builtin();
  require_file(stage, *c.template_file);
  return PromptTemplate::load(*c.template_file);
}

ProvidersFile providers_for(const RunConfig& c, const std::string& stage) {
  if (c.providers.empty()) throw ConfigError(stage + ": providers file not set");
  require_file(stage, c.providers);
  return load_providers(c.providers);
}

std::pair<std::string, std::string> resolve_models(const RunConfig& c, const std::string& stage) {
  std::string a = c.model_a, b = c.model_b;
  if (a.empty() || b.empty()) {
    const ProvidersFile pf = providers_for(c, stage);
    if (pf.providers.size() < 2 && (a.empty() || b.empty())) {
      throw ConfigError(stage + ": two providers are needed to compare models");
    }
    if (a.empty()) a = pf.providers[0].provider_id;
    if (b.empty()) b = pf.providers[1].provider_id;
  }
  if (a == b) throw ConfigError(stage + ": model_a and model_b must differ");
  return {a, b};
}

std::vector<fs::path> corpus_files(const RunConfig& c) {
  std::error_code ec;
  if (c.corpus.empty()) throw ConfigError("ingest: corpus path not set");
  if (fs::is_regular_file(c.corpus, ec)) return {c.corpus};
  if (!fs::is_directory(c.corpus, ec)) throw MissingInputError("ingest", c.corpus.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(c.corpus)) {
    if (entry.is_regular_file() && entry.path().extension() == ".txt") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) {
    throw PreconditionError("ingest: no *.txt documents in " + c.corpus.string());
  }
  return files;
}

std::vector<CleanDocument> load_clean(const RunConfig& c, const std::string& stage) {
  return read_clean_jsonl(require_file(stage, out_path(c, out_files::kClean)));
}

// Attaches source_sent_id/source_sim to every record, keeping list order.
void attach_sources(std::vector<ClassifiedSentence>& records,
                    const std::vector<CleanDocument>& docs, double threshold) {
  std::map<std::string, std::vector<std::size_t>> by_doc;
  for (std::size_t i = 0; i < records.size(); ++i) {
    by_doc[records[i].source_para.doc_id].push_back(i);
  }
  for (const auto& [doc_id, idx] : by_doc) {
    auto doc = std::find_if(docs.begin(), docs.end(),
                            [&](const CleanDocument& d) { return d.doc_id == doc_id; });
    if (doc == docs.end()) {
      throw PreconditionError("align: record refers to unknown document '" + doc_id + "'");
    }
    std::vector<ClassifiedSentence> subset;
    subset.reserve(idx.size());
    for (std::size_t i : idx) subset.push_back(records[i]);
    subset = align_to_source(std::move(subset), *doc, threshold);
    for (std::size_t k = 0; k < idx.size(); ++k) records[idx[k]] = std::move(subset[k]);
  }
}

void ingest_impl(const RunConfig& c, const Runtime& rt) {
  std::vector<CleanDocument> docs;
  for (const auto& path : corpus_files(c)) {
    RawDocument raw{path.stem().string(), read_file(path)};
    for (const auto& d : docs) {
      if (d.doc_id == raw.doc_id) throw PreconditionError("ingest: duplicate doc_id " + raw.doc_id);
    }
    CleanDocument doc = clean_document(raw);
    for (const auto& w : doc.warnings) say(rt, "ingest: " + doc.doc_id + ": " + w);
    say(rt, "ingest: " + doc.doc_id + ": " + std::to_string(doc.paragraphs.size()) +
                " paragraphs, " + std::to_string(doc.sentence_count()) + " sentences");
    docs.push_back(std::move(doc));
  }
  write_file_atomic(out_path(c, out_files::kClean), to_clean_jsonl(docs));
}

void run_impl(const RunConfig& c, const std::string& provider_id, const Runtime& rt) {
  const std::string stage = "run";
  // Everything that can fail without the network is checked first.
  const auto docs = load_clean(c, stage);
  const ProvidersFile pf = providers_for(c, stage);
  const ProviderConfig& cfg = pf.get(provider_id);
  const Taxonomy taxonomy = effective_taxonomy(c, stage);
  const PromptTemplate tmpl = effective_template(c, stage);

  std::unique_ptr<Transport> owned;
  Transport* transport = rt.transport;
  if (!transport) {
    owned = make_http_transport();
    transport = owned.get();
  }
  ResponseCache cache(pf.cache_dir);
  LlmClient client(cache, *transport, rt.sleeper, rt.env, rt.clock);

  std::vector<ResponseRow> rows;
  std::vector<ParagraphFailure> failures;
  for (const auto& doc : docs) {
    std::vector<std::pair<std::size_t, std::string>> results;
    try {
      results = client.run_corpus(doc, cfg, c.parallelism, c.cache_mode, taxonomy, tmpl);
    } catch (const CorpusRunError& e) {
      for (const auto& f : e.failures()) {
        say(rt, "run: " + provider_id + ": " + doc.doc_id + " paragraph " +
                    std::to_string(f.para_index) + ": " + f.message);
        failures.push_back(f);
      }
      continue;
    }
    for (auto& [para_index, text] : results) {
      auto para = std::find_if(doc.paragraphs.begin(), doc.paragraphs.end(),
                               [&](const Paragraph& p) { return p.para_index == para_index; });
      const PromptText prompt = build_prompt(taxonomy, doc.doc_id, *para, tmpl);
      rows.push_back({cfg.provider_id, cfg.model_name, doc.doc_id, para_index,
                      make_cache_key(cfg.provider_id, cfg.model_name, cfg.temperature, prompt.text),
                      std::move(text)});
    }
  }
  if (!failures.empty()) throw CorpusRunError(std::move(failures));
  say(rt, "run: " + provider_id + ": " + std::to_string(rows.size()) + " responses, " +
              std::to_string(client.http_calls()) + " network calls");
  write_file_atomic(out_path(c, out_files::responses(provider_id)), to_responses_jsonl(rows));
}

void parse_impl(const RunConfig& c, const std::string& provider_id, const Runtime& rt) {
  const std::string stage = "parse";
  const auto rows =
      read_responses_jsonl(require_file(stage, out_path(c, out_files::responses(provider_id))));
  const Taxonomy taxonomy = effective_taxonomy(c, stage);
  std::vector<ClassifiedSentence> records;
  std::size_t dropped = 0;
  for (const auto& row : rows) {
    ParseReport rep =
        parse_response(row.response_text, provider_id, {row.doc_id, row.para_index}, taxonomy);
    dropped += rep.dropped_blocks;
    for (auto& r : rep.records) records.push_back(std::move(r));
  }
  say(rt, "parse: " + provider_id + ": " + std::to_string(records.size()) + " records, " +
              std::to_string(dropped) + " dropped blocks");
  write_file_atomic(out_path(c, out_files::parsed(provider_id)), to_parsed_jsonl(records));
}

void align_impl(const RunConfig& c, const Runtime& rt) {
  const std::string stage = "align";
  const auto [model_a, model_b] = resolve_models(c, stage);
  const auto docs = load_clean(c, stage);
  auto list_a = read_parsed_jsonl(require_file(stage, out_path(c, out_files::parsed(model_a))));
  auto list_b = read_parsed_jsonl(require_file(stage, out_path(c, out_files::parsed(model_b))));
  attach_sources(list_a, docs, c.threshold);
  attach_sources(list_b, docs, c.threshold);
  const AlignmentResult result = align_records(list_a, list_b, c.threshold);
  say(rt, "align: " + std::to_string(result.pairs.size()) + " pairs, " +
              std::to_string(result.unmatched_a.size()) + " unmatched " + model_a + ", " +
              std::to_string(result.unmatched_b.size()) + " unmatched " + model_b);
  write_file_atomic(out_path(c, out_files::kAligned), to_aligned_jsonl(result, model_a, model_b));
}

std::vector<ClassifiedSentence> side_records(const AlignmentResult& r, bool side_a) {
  std::vector<std::pair<std::size_t, const ClassifiedSentence*>> all;
  for (const auto& p : r.pairs) all.push_back(side_a ? std::pair{p.index_a, &p.rec_a}
                                                     : std::pair{p.index_b, &p.rec_b});
  for (const auto& u : side_a ? r.unmatched_a : r.unmatched_b) all.push_back({u.index, &u.record});
  std::sort(all.begin(), all.end(),
            [](const auto& x, const auto& y) { return x.first < y.first; });
  std::vector<ClassifiedSentence> out;
  out.reserve(all.size());
  for (const auto& [i, rec] : all) out.push_back(*rec);
  return out;
}

void analyze_impl(const RunConfig& c, const Runtime& rt) {
  const std::string stage = "analyze";
  const auto docs = load_clean(c, stage);
  const AlignedFile aligned = read_aligned_jsonl(require_file(stage, out_path(c, out_files::kAligned)));
  const Taxonomy taxonomy = effective_taxonomy(c, stage);

  MetricsBundle bundle;
  bundle.model_a = aligned.model_a;
  bundle.model_b = aligned.model_b;
  bundle.alignment_threshold = aligned.threshold;
  bundle.coverage.push_back(coverage(side_records(aligned.result, true), docs, aligned.model_a));
  bundle.coverage.push_back(coverage(side_records(aligned.result, false), docs, aligned.model_b));

  EntityOptions opts;
  opts.fuzzy = c.entity_fuzzy;
  bundle.agreement = agreement_report(aligned.result.pairs, taxonomy, c.denominator, opts);
  say(rt, "analyze: category agreement " +
              (bundle.agreement.category_agreement_overall
                   ? format_fixed(*bundle.agreement.category_agreement_overall, 4)
                   : std::string("undefined")) +
              " over " + std::to_string(bundle.agreement.n_pairs) + " pairs");

  write_file_atomic(out_path(c, out_files::kMetrics), to_metrics_json(bundle, taxonomy));
  write_file_atomic(out_path(c, out_files::kPerCategory), to_per_category_csv(bundle.agreement));
  write_file_atomic(out_path(c, out_files::kMatrix), to_matrix_csv(bundle.agreement.matrix));
}

void report_impl(const RunConfig& c, const Runtime& rt) {
  const std::string stage = "report";
  const MetricsBundle bundle =
      read_metrics_json(require_file(stage, out_path(c, out_files::kMetrics)));
  const Taxonomy taxonomy = effective_taxonomy(c, stage);
  write_file_atomic(out_path(c, out_files::kCoverageTxt), emit_coverage_table(bundle.coverage));
  write_file_atomic(out_path(c, out_files::kCoverageCsv), emit_coverage_csv(bundle.coverage));
  write_file_atomic(out_path(c, out_files::kFigCategory),
                    emit_agreement_bars(bundle.agreement, taxonomy));
  write_file_atomic(out_path(c, out_files::kFigHeatmap),
                    emit_heatmap(bundle.agreement.matrix, taxonomy));
  write_file_atomic(out_path(c, out_files::kFigEntity),
                    emit_entity_bars(bundle.agreement, taxonomy));
  say(rt, "report: wrote tables and figures to " + c.out_dir.string());
}

// ---- stamps ---------------------------------------------------------------

// A stage's identity: its name, the settings it depends on, its input files
// and its output files.
struct StageDef {
  std::string name;
  std::string settings;
  std::vector<fs::path> inputs;
  std::vector<std::string> outputs;  // names inside out_dir
  bool cacheable = true;
  std::function<void()> run;
};

std::string file_digest(const fs::path& p) {
  std::error_code ec;
  if (!fs::is_regular_file(p, ec)) return "missing";
  return sha256_hex(read_file(p));
}

std::string fingerprint(const StageDef& s) {
  std::string material = s.name + '\n' + s.settings + '\n';
  // File names only, so identical inputs fingerprint alike in any directory.
  for (const auto& p : s.inputs) material += p.filename().string() + " " + file_digest(p) + "\n";
  return sha256_hex(material);
}

fs::path stamp_path(const RunConfig& c, const std::string& stage) {
  std::string name = stage;
  std::replace(name.begin(), name.end(), ':', '_');
  return c.out_dir / out_files::kStampDir / (name + ".json");
}

std::string stamp_json(const RunConfig& c, const StageDef& s) {
  JsonWriter w(true);
  w.begin_object().key("stage").value(s.name).key("inputs").value(fingerprint(s));
  w.key("outputs").begin_object();
  for (const auto& o : s.outputs) w.key(o).value(file_digest(out_path(c, o)));
  w.end_object().end_object();
  return w.str() + '\n';
}

bool stamp_current(const RunConfig& c, const StageDef& s) {
  if (!s.cacheable) return false;
  std::error_code ec;
  const fs::path p = stamp_path(c, s.name);
  if (!fs::is_regular_file(p, ec)) return false;
  return read_file(p) == stamp_json(c, s);
}

void write_stamp(const RunConfig& c, const StageDef& s) {
  write_file_atomic(stamp_path(c, s.name), stamp_json(c, s));
}

std::string optional_path(const std::optional<fs::path>& p) {
  return p ? p->generic_string() : std::string("builtin");
}

std::vector<fs::path> config_files(const RunConfig& c) {
  std::vector<fs::path> files;
  if (c.taxonomy_file) files.push_back(*c.taxonomy_file);
  if (c.template_file) files.push_back(*c.template_file);
  return files;
}

std::vector<fs::path> cache_files(const RunConfig& c, const std::string& provider_id) {
  std::vector<fs::path> files;
  std::error_code ec;
  if (!fs::is_regular_file(c.providers, ec)) return files;
  const ProvidersFile pf = load_providers(c.providers);
  const fs::path dir = pf.cache_dir / provider_id;
  if (!fs::is_directory(dir, ec)) return files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

StageDef ingest_def(const RunConfig& c, const Runtime& rt) {
  return {"ingest", "", corpus_files(c), {out_files::kClean}, true, [&] { ingest_impl(c, rt); }};
}

StageDef run_def(const RunConfig& c, const std::string& p, const Runtime& rt) {
  StageDef s{"run:" + p,
             std::string("mode=") + cache_mode_name(c.cache_mode) + " taxonomy=" +
                 optional_path(c.taxonomy_file) + " template=" + optional_path(c.template_file),
             {out_path(c, out_files::kClean), c.providers},
             {out_files::responses(p)},
             c.cache_mode != CacheMode::kLive,
             [&c, p, &rt] { run_impl(c, p, rt); }};
  for (auto& f : config_files(c)) s.inputs.push_back(f);
  for (auto& f : cache_files(c, p)) s.inputs.push_back(f);
  return s;
}

StageDef parse_def(const RunConfig& c, const std::string& p, const Runtime& rt) {
  StageDef s{"parse:" + p, "taxonomy=" + optional_path(c.taxonomy_file),
             {out_path(c, out_files::responses(p))}, {out_files::parsed(p)}, true,
             [&c, p, &rt] { parse_impl(c, p, rt); }};
  if (c.taxonomy_file) s.inputs.push_back(*c.taxonomy_file);
  return s;
}

StageDef align_def(const RunConfig& c, const std::string& a, const std::string& b,
                   const Runtime& rt) {
  return {"align",
          "threshold=" + format_fixed(c.threshold, 6) + " a=" + a + " b=" + b,
          {out_path(c, out_files::kClean), out_path(c, out_files::parsed(a)),
           out_path(c, out_files::parsed(b))},
          {out_files::kAligned},
          true,
          [&] { align_impl(c, rt); }};
}

StageDef analyze_def(const RunConfig& c, const Runtime& rt) {
  StageDef s{"analyze",
             std::string("fuzzy=") + (c.entity_fuzzy ? "1" : "0") + " denominator=" +
                 (c.denominator == CategoryDenominator::kUnion ? "union" : "model_a") +
                 " taxonomy=" + optional_path(c.taxonomy_file),
             {out_path(c, out_files::kClean), out_path(c, out_files::kAligned)},
             {out_files::kMetrics, out_files::kPerCategory, out_files::kMatrix},
             true,
             [&] { analyze_impl(c, rt); }};
  if (c.taxonomy_file) s.inputs.push_back(*c.taxonomy_file);
  return s;
}

StageDef report_def(const RunConfig& c, const Runtime& rt) {
  StageDef s{"report",
             "taxonomy=" + optional_path(c.taxonomy_file),
             {out_path(c, out_files::kMetrics)},
             {out_files::kCoverageTxt, out_files::kCoverageCsv, out_files::kFigCategory,
              out_files::kFigHeatmap, out_files::kFigEntity},
             true,
             [&] { report_impl(c, rt); }};
  if (c.taxonomy_file) s.inputs.push_back(*c.taxonomy_file);
  return s;
}

// Runs a stage unconditionally and records its stamp.
void execute(const RunConfig& c, const StageDef& s) {
  s.run();
  write_stamp(c, s);
}

}  // namespace

void cmd_ingest(const RunConfig& config, const Runtime& runtime) {
  validate(config);
  execute(config, ingest_def(config, runtime));
}

void cmd_run(const RunConfig& config, const std::string& provider_id, const Runtime& runtime) {
  validate(config);
  execute(config, run_def(config, provider_id, runtime));
}

void cmd_parse(const RunConfig& config, const std::string& provider_id, const Runtime& runtime) {
  validate(config);
  execute(config, parse_def(config, provider_id, runtime));
}

void cmd_align(const RunConfig& config, const Runtime& runtime) {
  validate(config);
  const auto [a, b] = resolve_models(config, "align");
  execute(config, align_def(config, a, b, runtime));
}

void cmd_analyze(const RunConfig& config, const Runtime& runtime) {
  validate(config);
  execute(config, analyze_def(config, runtime));
}

void cmd_report(const RunConfig& config, const Runtime& runtime) {
  validate(config);
  execute(config, report_def(config, runtime));
}

StageLog cmd_all(const RunConfig& config, const Runtime& runtime) {
  validate(config);
  // Models and providers are resolved up front so that configuration errors
  // surface before any stage runs.
  const auto [a, b] = resolve_models(config, "all");
  {
    const ProvidersFile pf = providers_for(config, "all");
    pf.get(a);
    pf.get(b);
  }
  effective_taxonomy(config, "all");
  effective_template(config, "all");

  StageLog log;
  // Definitions are built lazily: a stage's input list (e.g. cache entries)
  // may depend on what earlier stages produced.
  const std::vector<std::function<StageDef()>> stages = {
      [&] { return ingest_def(config, runtime); },
      [&] { return run_def(config, a, runtime); },
      [&] { return run_def(config, b, runtime); },
      [&] { return parse_def(config, a, runtime); },
      [&] { return parse_def(config, b, runtime); },
      [&] { return align_def(config, a, b, runtime); },
      [&] { return analyze_def(config, runtime); },
      [&] { return report_def(config, runtime); },
  };
  for (const auto& make : stages) {
    const StageDef s = make();
    if (stamp_current(config, s)) {
      log.skipped.push_back(s.name);
      say(runtime, "all: " + s.name + " up to date");
      continue;
    }
    s.run();
    // Recomputed so the stamp sees inputs the stage itself added (new cache
    // entries after a record run).
    write_stamp(config, make());
    log.ran.push_back(s.name);
  }
  return log;
}

std::string error_json(const std::exception& e) {
  JsonWriter w;
  w.begin_object();
  if (const auto* err = dynamic_cast<const Error*>(&e)) {
    w.key("error").value(error_code_name(err->code()));
  } else {
    w.key("error").value("internal");
  }
  w.key("message").value(e.what());
  if (const auto* mi = dynamic_cast<const MissingInputError*>(&e)) {
    w.key("path").value(mi->path());
  }
  if (const auto* ie = dynamic_cast<const IngestError*>(&e)) {
    w.key("byte_offset").value(static_cast<std::uint64_t>(ie->byte_offset()));
  }
  if (const auto* cr = dynamic_cast<const CorpusRunError*>(&e)) {
    w.key("failed_paragraphs").value(static_cast<std::uint64_t>(cr->failures().size()));
  }
  w.end_object();
  return w.str();
}

}  // namespace relcat

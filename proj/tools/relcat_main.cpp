// relcat: stage-wise relation-classification pipeline.
//
//   relcat ingest  --corpus papers/ --out out/
//   relcat run     --provider gpt-4o --providers providers.json --out out/
//   relcat all     --corpus papers/ --providers providers.json --cache-mode replay
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "relcat/error.hpp"
#include "relcat/pipeline.hpp"

namespace {

struct Options {
  std::string corpus;
  std::string providers;
  std::string taxonomy;
  std::string tmpl;
  std::string cache_mode = "replay";
  double threshold = relcat::kDefaultAlignmentThreshold;
  bool entity_fuzzy = false;
  std::size_t parallelism = 4;
  std::string out = "out";
  std::string model_a;
  std::string model_b;
  std::string denominator = "model_a";
  std::string provider;
  bool quiet = false;
};

relcat::RunConfig to_config(const Options& o) {
  relcat::RunConfig c;
  c.corpus = o.corpus;
  c.providers = o.providers;
  if (!o.taxonomy.empty()) c.taxonomy_file = o.taxonomy;
  if (!o.tmpl.empty()) c.template_file = o.tmpl;
  c.cache_mode = relcat::parse_cache_mode(o.cache_mode);
  c.threshold = o.threshold;
  c.entity_fuzzy = o.entity_fuzzy;
  c.parallelism = o.parallelism;
  c.out_dir = o.out;
  c.model_a = o.model_a;
  c.model_b = o.model_b;
  if (o.denominator == "union") {
    c.denominator = relcat::CategoryDenominator::kUnion;
  } else if (o.denominator != "model_a") {
    throw relcat::ConfigError("--denominator must be model_a or union");
  }
  relcat::validate(c);
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Classify sentences of scientific papers with two LLMs and compare them"};
  app.require_subcommand(1);
  Options o;

  app.add_option("--corpus", o.corpus, "Directory of *.txt documents, or one file");
  app.add_option("--providers", o.providers, "providers.json");
  app.add_option("--taxonomy", o.taxonomy, "Taxonomy JSON (default: built-in 17 categories)");
  app.add_option("--template", o.tmpl, "Prompt template (default: built-in)");
  app.add_option("--cache-mode", o.cache_mode, "record, replay or live")
      ->check(CLI::IsMember({"record", "replay", "live"}));
  app.add_option("--threshold", o.threshold, "Alignment similarity threshold in (0,1]");
  app.add_flag("--entity-fuzzy", o.entity_fuzzy, "Fuzzy entity matching (similarity >= 0.9)");
  app.add_option("--parallelism", o.parallelism, "Prompts in flight per provider")
      ->check(CLI::PositiveNumber);
  app.add_option("--out", o.out, "Output directory");
  app.add_option("--model-a", o.model_a, "Provider id of model A");
  app.add_option("--model-b", o.model_b, "Provider id of model B");
  app.add_option("--denominator", o.denominator, "Per-category denominator: model_a or union")
      ->check(CLI::IsMember({"model_a", "union"}));
  app.add_flag("-q,--quiet", o.quiet, "No progress output");

  auto* ingest = app.add_subcommand("ingest", "Clean documents into clean.jsonl");
  auto* run = app.add_subcommand("run", "Prompt one provider for every paragraph");
  run->add_option("provider", o.provider, "Provider id")->required();
  auto* parse = app.add_subcommand("parse", "Parse one provider's responses");
  parse->add_option("provider", o.provider, "Provider id")->required();
  auto* align = app.add_subcommand("align", "Align model A and model B records");
  auto* analyze = app.add_subcommand("analyze", "Coverage and agreement metrics");
  auto* report = app.add_subcommand("report", "Tables and SVG figures");
  auto* all = app.add_subcommand("all", "Every stage in order, skipping up-to-date ones");
  for (auto* sub : {ingest, run, parse, align, analyze, report, all}) sub->fallthrough();

  CLI11_PARSE(app, argc, argv);

  try {
    const relcat::RunConfig config = to_config(o);
    relcat::Runtime rt;
    if (!o.quiet) rt.log = &std::cerr;
    if (*ingest) relcat::cmd_ingest(config, rt);
    else if (*run) relcat::cmd_run(config, o.provider, rt);
    else if (*parse) relcat::cmd_parse(config, o.provider, rt);
    else if (*align) relcat::cmd_align(config, rt);
    else if (*analyze) relcat::cmd_analyze(config, rt);
    else if (*report) relcat::cmd_report(config, rt);
    else if (*all) relcat::cmd_all(config, rt);
  } catch (const relcat::Error& e) {
    std::cerr << relcat::error_json(e) << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << relcat::error_json(e) << '\n';
    return 3;
  }
  return 0;
}

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "relcat/align.hpp"
#include "relcat/corpus.hpp"
#include "relcat/error.hpp"
#include "relcat/metrics.hpp"
#include "relcat/parser.hpp"
#include "relcat/pipeline.hpp"
#include "relcat/taxonomy.hpp"

namespace py = pybind11;
using namespace relcat;

namespace {

py::dict record_dict(const ClassifiedSentence& r) {
  py::dict d;
  d["sent_text"] = r.sent_text;
  d["category"] = r.label.key();
  d["entity_a"] = r.entity_a;
  d["entity_b"] = r.entity_b;
  d["warnings"] = r.parse_warnings;
  return d;
}

}  // namespace

PYBIND11_MODULE(_relcat, m) {
  m.doc() = "Relationship-category annotation pipeline (C++ core)";

  static py::exception<Error> error_type(m, "Error");
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      // Instances carry the machine-readable code next to the message.
      py::object inst = py::reinterpret_borrow<py::object>(error_type)(py::str(e.what()));
      inst.attr("code") = error_code_name(e.code());
      PyErr_SetObject(error_type.ptr(), inst.ptr());
    }
  });

  m.attr("DEFAULT_THRESHOLD") = kDefaultAlignmentThreshold;

  m.def("similarity", [](const std::string& a, const std::string& b) { return similarity(a, b); },
        py::arg("a"), py::arg("b"), "Edit-distance similarity in [0, 1] on normalized forms.");
  m.def("similarity_key", [](const std::string& s) { return similarity_key(s); }, py::arg("s"));

  m.def("taxonomy", [] {
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& c : Taxonomy::builtin().categories()) out.emplace_back(c.id, c.display_name);
    return out;
  }, "Built-in categories as (id, display name) pairs.");
  m.def("normalize_label", [](const std::string& raw) { return normalize_label(raw).key(); },
        py::arg("raw"), "Label key for raw model output: an id, 'N/A', 'None' or 'out:<label>'.");

  m.def("clean_document", [](const std::string& doc_id, const std::string& text) {
    std::vector<std::vector<std::string>> out;
    for (const auto& p : clean_document(RawDocument{doc_id, text}).paragraphs) {
      auto& sentences = out.emplace_back();
      for (const auto& s : p.sentences) sentences.push_back(s.text);
    }
    return out;
  }, py::arg("doc_id"), py::arg("text"), "Cleaned sentences, grouped by kept paragraph.");

  m.def("parse_response", [](const std::string& raw, const std::string& model_id,
                             const std::string& doc_id, std::size_t para_index) {
    const auto rep = parse_response(raw, model_id, SourcePara{doc_id, para_index});
    py::list records;
    for (const auto& r : rep.records) records.append(record_dict(r));
    py::dict d;
    d["records"] = records;
    d["dropped_blocks"] = rep.dropped_blocks;
    return d;
  }, py::arg("raw"), py::arg("model_id") = "model", py::arg("doc_id") = "doc",
        py::arg("para_index") = 0);

  m.def("category_agreement", [](const std::vector<std::string>& labels_a,
                                 const std::vector<std::string>& labels_b) {
    if (labels_a.size() != labels_b.size()) {
      throw PreconditionError("label lists differ in length");
    }
    std::size_t agree = 0;
    for (std::size_t i = 0; i < labels_a.size(); ++i) {
      agree += labels_agree(normalize_label(labels_a[i]), normalize_label(labels_b[i]));
    }
    py::dict d;
    d["n_pairs"] = labels_a.size();
    d["n_agree"] = agree;
    d["overall"] = labels_a.empty() ? py::object(py::none())
                                    : py::float_(static_cast<double>(agree) / labels_a.size());
    return d;
  }, py::arg("labels_a"), py::arg("labels_b"), "Share of positions whose normalized labels agree.");

  m.def("run_all", [](const std::filesystem::path& corpus, const std::filesystem::path& providers,
                      const std::filesystem::path& out_dir, const std::string& cache_mode,
                      double threshold, std::size_t parallelism) {
    RunConfig c;
    c.corpus = corpus;
    c.providers = providers;
    c.out_dir = out_dir;
    c.cache_mode = parse_cache_mode(cache_mode);
    c.threshold = threshold;
    c.parallelism = parallelism;
    StageLog log;
    {
      py::gil_scoped_release release;
      log = cmd_all(c);
    }
    py::dict d;
    d["ran"] = log.ran;
    d["skipped"] = log.skipped;
    return d;
  }, py::arg("corpus"), py::arg("providers"), py::arg("out_dir"), py::arg("cache_mode") = "replay",
        py::arg("threshold") = kDefaultAlignmentThreshold, py::arg("parallelism") = 4,
        "Every stage, skipping those whose inputs are unchanged.");
}

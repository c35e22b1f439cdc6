#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <json.hpp>

#include "minimt/cli.hpp"
#include "minimt/corpus.hpp"
#include "minimt/error.hpp"
#include "minimt/lm.hpp"
#include "minimt/manifest.hpp"
#include "minimt/metrics.hpp"
#include "minimt/pipeline.hpp"
#include "minimt/simplex.hpp"
#include "minimt/util.hpp"

namespace py = pybind11;
using namespace minimt;

namespace {

// Reports cross the boundary as JSON text; the Python side decodes them.
std::string dump(const nlohmann::json& j) { return j.dump(); }

std::vector<metrics::Words> split_all(const std::vector<std::string>& lines) {
  std::vector<metrics::Words> out;
  out.reserve(lines.size());
  for (const auto& l : lines) out.push_back(split_ws(l));
  return out;
}

std::vector<simplex::ChunkTag> parse_tags(const std::string& text) {
  std::vector<simplex::ChunkTag> tags;
  for (const auto& t : split_ws(text)) tags.push_back(simplex::parse_tag(t));
  return tags;
}

const char* kind_name(ErrorKind k) {
  switch (k) {
    case ErrorKind::Usage: return "usage";
    case ErrorKind::Data: return "data";
    case ErrorKind::Model: return "model";
    case ErrorKind::Numeric: return "numeric";
  }
  return "unknown";
}

}  // namespace

PYBIND11_MODULE(_minimt, m) {
  m.doc() = "minimt native core";
  m.attr("__version__") = kVersion;

  static py::exception<Error> exc(m, "MinimtError");
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object err = py::reinterpret_borrow<py::object>(exc.ptr())(py::str(e.what()));
      err.attr("kind") = kind_name(e.kind());
      PyErr_SetObject(exc.ptr(), err.ptr());
    }
  });

  m.def("tokenize", &corpus::tokenize_words, py::arg("text"));
  m.def("split_chars", &corpus::split_chars, py::arg("text"));

  m.def(
      "bleu_json",
      [](const std::vector<std::string>& refs, const std::vector<std::string>& hyps, int max_n) {
        return dump(metrics::to_json(metrics::bleu(split_all(refs), split_all(hyps), max_n)));
      },
      py::arg("refs"), py::arg("hyps"), py::arg("max_n") = 4);
  m.def(
      "ter_json",
      [](const std::vector<std::string>& refs, const std::vector<std::string>& hyps) {
        return dump(metrics::to_json(metrics::ter(split_all(refs), split_all(hyps))));
      },
      py::arg("refs"), py::arg("hyps"));
  m.def(
      "classification_stats_json",
      [](const std::array<std::array<std::size_t, 2>, 2>& predicted_rows, const std::string& positive) {
        if (positive != "Simple" && positive != "Other") usage_error("positive must be Simple or Other");
        auto cm = metrics::ConfusionMatrix::from_predicted_rows(predicted_rows);
        auto label = positive == "Simple" ? metrics::Label::Simple : metrics::Label::Other;
        return dump(metrics::to_json(metrics::classification_stats(cm, label)));
      },
      py::arg("predicted_rows"), py::arg("positive") = "Other");

  py::class_<lm::NGramLM>(m, "LanguageModel")
      .def_static(
          "train",
          [](const std::vector<std::string>& lines, std::size_t order) {
            lm::LmOptions opts;
            opts.order = order;
            std::vector<std::vector<std::string>> sents;
            for (const auto& l : lines) sents.push_back(split_ws(l));
            return lm::train_lm(sents, opts);
          },
          py::arg("lines"), py::arg("order") = 3)
      .def_static("from_arpa", &lm::NGramLM::from_arpa)
      .def("to_arpa", &lm::NGramLM::to_arpa)
      .def_property_readonly("order", &lm::NGramLM::order)
      .def("logprob", py::overload_cast<const std::vector<std::string>&, const std::string&>(&lm::NGramLM::logprob,
                                                                                              py::const_),
           py::arg("context"), py::arg("word"))
      .def("predictable_words", &lm::NGramLM::predictable_words);

  m.def(
      "mine_rules",
      [](const std::vector<std::string>& tag_lines) {
        std::vector<simplex::ChunkSequence> seqs;
        for (const auto& l : tag_lines) seqs.push_back({0, parse_tags(l)});
        return simplex::mine_rules(seqs).serialize();
      },
      py::arg("tag_lines"), "Mines rules from chunk-tag lines of simple sentences; returns the rules file text.");
  m.def(
      "classify_rule",
      [](const std::string& rules_text, const std::string& tags) {
        auto rules = simplex::RuleSet::parse(rules_text);
        return metrics::to_string(simplex::classify_rule(rules, {0, parse_tags(tags)}));
      },
      py::arg("rules_text"), py::arg("tags"));

  py::class_<pipeline::Translator>(m, "Translator")
      .def_static("load", &pipeline::Translator::load, py::arg("model_dir"))
      .def_property_readonly("system", [](const pipeline::Translator& t) { return pipeline::to_string(t.system()); })
      .def_property_readonly("src_lang", &pipeline::Translator::src_lang)
      .def("translate", [](const pipeline::Translator& t, const std::string& line) { return t.translate(line); },
           py::arg("line"));

  m.def("sha256_hex", [](const std::string& bytes) { return sha256_hex(bytes); });

  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        py::gil_scoped_release release;
        return cli::run(args);
      },
      py::arg("args"), "Runs the command-line tool in-process and returns its exit code.");
}

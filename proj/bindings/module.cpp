#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "pcts/detector.hpp"
#include "pcts/eval_harness.hpp"
#include "pcts/lm_backend.hpp"
#include "pcts/prompt_templates.hpp"
#include "pcts/reranker.hpp"
#include "pcts/summary_engine.hpp"
#include "pcts/text_metrics.hpp"
#include "pcts/verbalizer_builder.hpp"

namespace py = pybind11;
using namespace pcts;

namespace {

std::vector<std::string> extractive_candidates(const std::string& content, int num_candidates,
                                               int max_summary_words) {
    summary::GeneratorConfig config;
    config.num_candidates = num_candidates;
    config.max_summary_words = max_summary_words;
    const auto generator = summary::make_generator("extractive_fallback");
    return summary::generate_candidates(content, config, *generator).candidates;
}

py::dict metrics_dict(const eval::Metrics& m) {
    py::dict d;
    d["accuracy"] = m.accuracy;
    d["precision"] = m.precision;
    d["recall"] = m.recall;
    d["f1"] = m.f1;
    return d;
}

py::dict detect(const std::string& headline, const std::string& summary, int template_id,
                const verbalizer::Verbalizer& verb, const lm::TableScorer& scorer) {
    const auto tmpl = prompts::template_by_id(template_id);
    const auto prompt = prompts::render(tmpl, headline, summary, scorer.mask_token());
    const auto result = detector::score(prompt, verb, scorer);
    py::dict d;
    d["scores"] = result.per_label_score;
    d["predicted"] = result.predicted;
    d["degenerate"] = result.degenerate;
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Clickbait detection core: overlap metrics, extractive summaries, prompt "
              "templates and verbalizer scoring.";
    m.attr("__version__") = "0.1.0";

    py::class_<metrics::RougeScore>(m, "RougeScore")
        .def_readonly("precision", &metrics::RougeScore::precision)
        .def_readonly("recall", &metrics::RougeScore::recall)
        .def_readonly("f1", &metrics::RougeScore::f1)
        .def("__repr__", [](const metrics::RougeScore& s) {
            return "RougeScore(precision=" + std::to_string(s.precision) +
                   ", recall=" + std::to_string(s.recall) + ", f1=" + std::to_string(s.f1) + ")";
        });

    m.def("tokenize",
          [](const std::string& text) { return metrics::tokenize(text); },
          py::arg("text"), "Lowercased word tokens; non-alphanumeric ASCII separates.");
    m.def("rouge_n", &metrics::rouge_n, py::arg("candidate"), py::arg("reference"), py::arg("n"),
          "Clipped n-gram overlap of two token lists.");
    m.def("rouge_l", &metrics::rouge_l, py::arg("candidate"), py::arg("reference"),
          "Longest-common-subsequence overlap of two token lists.");

    m.def("extractive_candidates", &extractive_candidates, py::arg("content"),
          py::arg("num_candidates") = 8, py::arg("max_summary_words") = 41,
          "Leading-sentence summary candidates under a word budget.");

    py::class_<prompts::RenderedPrompt>(m, "RenderedPrompt")
        .def_readonly("text", &prompts::RenderedPrompt::text)
        .def_readonly("mask_position", &prompts::RenderedPrompt::mask_position)
        .def_readonly("template_id", &prompts::RenderedPrompt::template_id);

    m.def("template_ids", []() {
        std::vector<int> ids;
        for (const auto& t : prompts::builtin_templates()) ids.push_back(t.id);
        return ids;
    });
    m.def("template_pattern", [](int id) { return prompts::template_by_id(id).pattern; },
          py::arg("id"));
    m.def("render_template",
          [](int id, const std::string& headline, const std::string& summary,
             const std::string& mask_token) {
              return prompts::render(prompts::template_by_id(id), headline, summary, mask_token);
          },
          py::arg("id"), py::arg("headline"), py::arg("summary"), py::arg("mask_token"));

    py::class_<lm::TableScorer>(m, "TableScorer")
        .def_static("from_file", &lm::TableScorer::from_file, py::arg("path"))
        .def_property_readonly("name", &lm::TableScorer::name)
        .def_property_readonly("mask_token", &lm::TableScorer::mask_token);

    py::class_<verbalizer::Verbalizer>(m, "Verbalizer")
        .def_static("load", &verbalizer::load_verbalizer, py::arg("path"))
        .def_readonly("labels", &verbalizer::Verbalizer::labels)
        .def("words", [](const verbalizer::Verbalizer& v,
                         const std::string& label) { return v.label_words.at(label); },
             py::arg("label"))
        .def("hash", &verbalizer::verbalizer_hash);

    m.def("detect", &detect, py::arg("headline"), py::arg("summary"), py::arg("template_id"),
          py::arg("verbalizer"), py::arg("scorer"),
          "Mean label-word mask probability per label plus the argmax prediction.");

    m.def("binary_metrics",
          [](const std::vector<int>& predicted, const std::vector<int>& gold) {
              return metrics_dict(eval::metrics(eval::count_confusion(predicted, gold)));
          },
          py::arg("predicted"), py::arg("gold"));
    m.def("weighted_metrics",
          [](const std::vector<int>& predicted, const std::vector<int>& gold) {
              return metrics_dict(eval::weighted_metrics(eval::count_confusion(predicted, gold)));
          },
          py::arg("predicted"), py::arg("gold"));

    m.def("cosine_similarity", &lm::cosine_similarity, py::arg("a"), py::arg("b"));
}

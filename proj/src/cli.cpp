#include "pcts/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "pcts/datasets.hpp"
#include "pcts/detector.hpp"
#include "pcts/errors.hpp"
#include "pcts/eval_harness.hpp"
#include "pcts/lm_backend.hpp"
#include "pcts/prompt_templates.hpp"
#include "pcts/random.hpp"
#include "pcts/reranker.hpp"
#include "pcts/summary_engine.hpp"
#include "pcts/text_metrics.hpp"
#include "pcts/util.hpp"
#include "pcts/verbalizer_builder.hpp"

namespace fs = std::filesystem;

namespace pcts::cli {

namespace {

struct RunConfig {
    std::string resource_root;

    std::string dataset_path;
    std::string dataset_format = "auto";  // webis | news | auto
    std::string backend = "table";        // mask scorer backend kind
    std::string embeddings_path;
    std::string lexicon_path;
    std::string concepts_path;
    std::string scorer_path;
    std::string verbalizer_path;
    std::string templates_path;
    std::string reranker_path;
    std::string head_path;
    std::string summaries_path;
    std::string records_path;
    std::string corpus_path;
    std::string manifest_path;

    int template_id = 3;
    int n_a = 15;
    int window_c = 5;
    int min_votes = 1;
    std::vector<std::string> labels = {"clickbait", "news"};
    std::string positive_label = "clickbait";
    std::vector<std::string> strategies;  // empty = all five

    std::string generator_name = "extractive_fallback";
    int num_candidates = 8;
    int max_summary_words = 41;
    std::string decoding_mode = "extractive_fallback";

    double learning_rate = 4e-5;
    int batch_size = 32;
    int epochs = 10;
    double dropout = 0.5;
    double weight_decay = 1e-5;
    std::string loss_mode = "squared_error";

    double rerank_learning_rate = 0.02;
    int rerank_epochs = 300;
    int rerank_hidden_dim = 6;

    int shots = 5;
    std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
    std::string mode = "ours";
    int full_content_budget = 128;

    std::string sweep_axis = "learning_rate";
    std::vector<double> sweep_grid;

    std::uint64_t seed = 1;
    std::string out_path;
    bool print_config = false;
};

nlohmann::json config_to_json(const RunConfig& c) {
    nlohmann::json j;
    j["resource_root"] = c.resource_root;
    j["dataset"] = c.dataset_path;
    j["dataset_format"] = c.dataset_format;
    j["backend"] = c.backend;
    j["embeddings"] = c.embeddings_path;
    j["lexicon"] = c.lexicon_path;
    j["concepts"] = c.concepts_path;
    j["scorer"] = c.scorer_path;
    j["verbalizer"] = c.verbalizer_path;
    j["templates_file"] = c.templates_path;
    j["reranker"] = c.reranker_path;
    j["head"] = c.head_path;
    j["summaries"] = c.summaries_path;
    j["records"] = c.records_path;
    j["corpus"] = c.corpus_path;
    j["manifest"] = c.manifest_path;
    j["template"] = c.template_id;
    j["n_a"] = c.n_a;
    j["window_c"] = c.window_c;
    j["min_votes"] = c.min_votes;
    j["labels"] = c.labels;
    j["positive_label"] = c.positive_label;
    j["strategies"] = c.strategies;
    j["generator"] = {{"name", c.generator_name},
                      {"num_candidates", c.num_candidates},
                      {"max_summary_words", c.max_summary_words},
                      {"decoding_mode", c.decoding_mode}};
    j["detector"] = {{"learning_rate", c.learning_rate}, {"batch_size", c.batch_size},
                     {"epochs", c.epochs},               {"dropout", c.dropout},
                     {"weight_decay", c.weight_decay},   {"loss_mode", c.loss_mode}};
    j["reranker_training"] = {{"learning_rate", c.rerank_learning_rate},
                              {"epochs", c.rerank_epochs},
                              {"hidden_dim", c.rerank_hidden_dim}};
    j["shots"] = c.shots;
    j["seeds"] = c.seeds;
    j["mode"] = c.mode;
    j["full_content_budget"] = c.full_content_budget;
    j["sweep"] = {{"axis", c.sweep_axis}, {"grid", c.sweep_grid}};
    j["seed"] = c.seed;
    j["out"] = c.out_path;
    return j;
}

template <typename T>
void take(const nlohmann::json& obj, const char* key, T& into) {
    if (obj.contains(key)) into = obj.at(key).get<T>();
}

void apply_config_file(RunConfig& c, const std::string& path) {
    nlohmann::json obj;
    try {
        obj = nlohmann::json::parse(read_file(path));
    } catch (const ResourceError&) {
        throw;
    } catch (const std::exception& e) {
        throw ResourceError("config file " + path + ": " + e.what());
    }
    take(obj, "resource_root", c.resource_root);
    take(obj, "dataset", c.dataset_path);
    take(obj, "dataset_format", c.dataset_format);
    take(obj, "backend", c.backend);
    take(obj, "embeddings", c.embeddings_path);
    take(obj, "lexicon", c.lexicon_path);
    take(obj, "concepts", c.concepts_path);
    take(obj, "scorer", c.scorer_path);
    take(obj, "verbalizer", c.verbalizer_path);
    take(obj, "templates_file", c.templates_path);
    take(obj, "reranker", c.reranker_path);
    take(obj, "head", c.head_path);
    take(obj, "summaries", c.summaries_path);
    take(obj, "records", c.records_path);
    take(obj, "corpus", c.corpus_path);
    take(obj, "manifest", c.manifest_path);
    take(obj, "template", c.template_id);
    take(obj, "n_a", c.n_a);
    take(obj, "window_c", c.window_c);
    take(obj, "min_votes", c.min_votes);
    take(obj, "labels", c.labels);
    take(obj, "positive_label", c.positive_label);
    take(obj, "strategies", c.strategies);
    if (obj.contains("generator")) {
        const auto& g = obj["generator"];
        take(g, "name", c.generator_name);
        take(g, "num_candidates", c.num_candidates);
        take(g, "max_summary_words", c.max_summary_words);
        take(g, "decoding_mode", c.decoding_mode);
    }
    if (obj.contains("detector")) {
        const auto& d = obj["detector"];
        take(d, "learning_rate", c.learning_rate);
        take(d, "batch_size", c.batch_size);
        take(d, "epochs", c.epochs);
        take(d, "dropout", c.dropout);
        take(d, "weight_decay", c.weight_decay);
        take(d, "loss_mode", c.loss_mode);
    }
    if (obj.contains("reranker_training")) {
        const auto& r = obj["reranker_training"];
        take(r, "learning_rate", c.rerank_learning_rate);
        take(r, "epochs", c.rerank_epochs);
        take(r, "hidden_dim", c.rerank_hidden_dim);
    }
    take(obj, "shots", c.shots);
    take(obj, "seeds", c.seeds);
    take(obj, "mode", c.mode);
    take(obj, "full_content_budget", c.full_content_budget);
    if (obj.contains("sweep")) {
        const auto& s = obj["sweep"];
        take(s, "axis", c.sweep_axis);
        take(s, "grid", c.sweep_grid);
    }
    take(obj, "seed", c.seed);
    take(obj, "out", c.out_path);
}

std::string resolve_resource(const RunConfig& c, const std::string& path) {
    if (path.empty() || c.resource_root.empty()) return path;
    if (fs::path(path).is_absolute()) return path;
    return (fs::path(c.resource_root) / path).string();
}

std::vector<data::Document> load_dataset(const RunConfig& c) {
    if (c.dataset_path.empty()) throw ResourceError("no dataset path given (--dataset)");
    const std::string path = resolve_resource(c, c.dataset_path);
    std::string format = c.dataset_format;
    if (format == "auto") {
        const std::string ext = fs::path(path).extension().string();
        if (ext == ".jsonl" || ext == ".json") {
            format = "webis";
        } else if (ext == ".tsv" || ext == ".txt") {
            format = "news";
        } else {
            throw ResourceError("cannot infer dataset format from '" + path +
                                "'; pass --dataset-format webis|news");
        }
    }
    data::LoaderStats stats;
    std::vector<data::Document> docs;
    if (format == "webis") {
        docs = data::load_webis(path, &stats);
    } else if (format == "news") {
        docs = data::load_news_clickbait(path, &stats);
    } else {
        throw ResourceError("unknown dataset format '" + format + "'");
    }
    std::cerr << "loaded " << stats.loaded << " documents from " << path << " (skipped "
              << stats.skipped << ", avg " << format_double(stats.avg_content_words, 1)
              << " content words)\n";
    if (docs.empty()) throw ResourceError("dataset " + path + " contains no usable documents");
    return docs;
}

prompts::PromptTemplate resolve_template(const RunConfig& c) {
    if (!c.templates_path.empty()) {
        const auto templates = prompts::load_templates(resolve_resource(c, c.templates_path));
        for (const auto& t : templates) {
            if (t.id == c.template_id) return t;
        }
        throw ResourceError("template id " + std::to_string(c.template_id) + " not in " +
                            c.templates_path);
    }
    return prompts::template_by_id(c.template_id);
}

struct Resources {
    std::optional<lm::EmbeddingTable> embeddings;
    std::optional<lm::FrequencyLexicon> lexicon;
    std::optional<lm::ConceptBase> concepts;
    std::optional<lm::TableScorer> scorer;
};

Resources load_resources(const RunConfig& c) {
    if (c.backend != "table") {
        throw ResourceError("unknown mask scorer backend '" + c.backend +
                            "' (the built-in backend is 'table')");
    }
    Resources r;
    if (!c.embeddings_path.empty()) {
        r.embeddings = lm::load_embeddings(resolve_resource(c, c.embeddings_path));
    }
    if (!c.lexicon_path.empty()) {
        r.lexicon = lm::load_lexicon(resolve_resource(c, c.lexicon_path));
    }
    if (!c.concepts_path.empty()) {
        r.concepts = lm::load_concepts(resolve_resource(c, c.concepts_path));
    }
    if (!c.scorer_path.empty()) {
        r.scorer = lm::TableScorer::from_file(resolve_resource(c, c.scorer_path));
    }
    return r;
}

const lm::TableScorer& require_scorer(const Resources& r) {
    if (!r.scorer) throw ResourceError("a mask scorer fixture is required (--scorer)");
    return *r.scorer;
}

verbalizer::Verbalizer require_verbalizer(const RunConfig& c) {
    if (c.verbalizer_path.empty()) {
        throw ResourceError("a verbalizer file is required (--verbalizer)");
    }
    return verbalizer::load_verbalizer(resolve_resource(c, c.verbalizer_path));
}

void write_output(const std::string& path, const std::string& content) {
    const fs::path p(path);
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    write_file(path, content);
}

eval::PipelineComponents make_components(const RunConfig& c,
                                         const std::vector<data::Document>* docs,
                                         const verbalizer::Verbalizer* verb,
                                         const lm::MaskScorer* scorer,
                                         const summary::SummaryGenerator* generator,
                                         const rerank::RerankerModel* reranker) {
    eval::PipelineComponents comp;
    comp.documents = docs;
    comp.verb = verb;
    comp.scorer = scorer;
    comp.generator = generator;
    comp.reranker = reranker;
    comp.prompt_template = resolve_template(c);
    comp.generator_config.num_candidates = c.num_candidates;
    comp.generator_config.max_summary_words = c.max_summary_words;
    comp.generator_config.decoding_mode = summary::mode_from_name(c.decoding_mode);
    comp.generator_config.seed = c.seed;
    comp.trainer.learning_rate = c.learning_rate;
    comp.trainer.batch_size = c.batch_size;
    comp.trainer.epochs = c.epochs;
    comp.trainer.dropout = c.dropout;
    comp.trainer.weight_decay = c.weight_decay;
    comp.trainer.loss_mode = detector::loss_mode_from_name(c.loss_mode);
    comp.trainer.seed = c.seed;
    comp.positive_label = c.positive_label;
    comp.full_content_budget = c.full_content_budget;
    return comp;
}

// ---- subcommands ----

int cmd_summarize(const RunConfig& c) {
    const auto docs = load_dataset(c);
    const auto generator = summary::make_generator(c.generator_name);
    std::optional<rerank::RerankerModel> model;
    if (!c.reranker_path.empty()) {
        model = rerank::load_model(resolve_resource(c, c.reranker_path));
    }

    summary::GeneratorConfig gen;
    gen.num_candidates = c.num_candidates;
    gen.max_summary_words = c.max_summary_words;
    gen.decoding_mode = summary::mode_from_name(c.decoding_mode);
    gen.seed = c.seed;

    const std::string out_dir = c.out_path.empty() ? "summaries" : c.out_path;
    fs::create_directories(out_dir);
    std::ostringstream candidates_out, selections_out;
    std::size_t written = 0, skipped = 0;
    for (const auto& doc : docs) {
        if (metrics::tokenize(doc.content).empty()) {
            ++skipped;
            continue;
        }
        const auto set = summary::generate_candidates(doc.content, gen, *generator, doc.id);
        candidates_out << summary::to_jsonl_record(set) << "\n";
        std::size_t index = 0;
        std::string selector = "lead";
        if (model) {
            index = rerank::select_best(*model, set, doc.content).first;
            selector = "reranker";
        }
        nlohmann::json sel;
        sel["id"] = doc.id;
        sel["selected_index"] = index;
        sel["summary"] = set.candidates[index];
        sel["selector"] = selector;
        sel["generator_tag"] = set.generator_tag;
        selections_out << sel.dump() << "\n";
        ++written;
    }
    write_output((fs::path(out_dir) / "candidates.jsonl").string(), candidates_out.str());
    write_output((fs::path(out_dir) / "selections.jsonl").string(), selections_out.str());
    std::cout << "wrote " << written << " candidate sets to " << out_dir << " (skipped "
              << skipped << " empty documents)\n";
    return 0;
}

int cmd_rerank_train(const RunConfig& c) {
    if (c.corpus_path.empty()) {
        throw ResourceError("rerank-train needs a training corpus (--corpus)");
    }
    const std::string body = read_file(resolve_resource(c, c.corpus_path));
    std::vector<rerank::RerankTrainingExample> corpus;
    for (const auto& raw : split(body, '\n')) {
        const std::string line = trim(raw);
        if (line.empty()) continue;
        nlohmann::json obj;
        try {
            obj = nlohmann::json::parse(line);
        } catch (const std::exception& e) {
            throw ResourceError("corpus line is not JSON: " + std::string(e.what()));
        }
        rerank::RerankTrainingExample ex;
        ex.document = obj.value("document", std::string());
        ex.reference_summary = obj.value("reference_summary", obj.value("reference", std::string()));
        for (const auto& cand : obj.value("candidates", nlohmann::json::array())) {
            ex.candidates.push_back(cand.get<std::string>());
        }
        corpus.push_back(std::move(ex));
    }
    if (corpus.empty()) throw ResourceError("rerank-train corpus is empty");

    rerank::RerankTrainConfig train;
    train.learning_rate = c.rerank_learning_rate;
    train.epochs = c.rerank_epochs;
    train.hidden_dim = static_cast<std::size_t>(c.rerank_hidden_dim);
    train.seed = c.seed;

    std::vector<double> history;
    const auto model = rerank::train_reranker(corpus, train, &history);
    const std::string out = c.out_path.empty() ? "reranker.model" : c.out_path;
    rerank::save_model(model, out);
    std::cout << "trained on " << corpus.size() << " examples; loss "
              << format_double(history.front()) << " -> "
              << format_double(rerank::multi_metric_loss(model, corpus)) << "; saved to " << out
              << "\n";
    return 0;
}

int cmd_build_verbalizer(const RunConfig& c) {
    const Resources res = load_resources(c);
    verbalizer::BuilderConfig build;
    build.labels = c.labels;
    build.n_a = c.n_a;
    build.window_c = c.window_c;
    build.min_votes = c.min_votes;
    build.anchor_template = resolve_template(c);
    if (!c.strategies.empty()) {
        build.strategies.clear();
        for (const auto& name : c.strategies) {
            build.strategies.push_back(verbalizer::strategy_from_name(name));
        }
    }
    verbalizer::BuilderResources resources;
    if (res.concepts) resources.kb = &*res.concepts;
    if (res.embeddings) resources.embeddings = &*res.embeddings;
    if (res.lexicon) resources.lexicon = &*res.lexicon;
    if (res.scorer) resources.scorer = &*res.scorer;

    const auto verb = verbalizer::build_verbalizer(resources, build);
    const std::string out = c.out_path.empty() ? "verbalizer.tsv" : c.out_path;
    verbalizer::save_verbalizer(verb, out);

    std::map<std::string, std::size_t> contributions;
    for (const auto& label : verb.labels) {
        for (const auto& [word, strategies] : verb.provenance.at(label)) {
            (void)word;
            for (const auto& s : strategies) ++contributions[s];
        }
    }
    std::cout << "verbalizer " << verbalizer::verbalizer_hash(verb) << " -> " << out << "\n";
    for (const auto& label : verb.labels) {
        std::cout << "label " << label << ": " << verb.label_words.at(label).size()
                  << " words\n";
    }
    for (const auto& [s, n] : contributions) {
        std::cout << "strategy " << s << ": " << n << " contributions\n";
    }
    return 0;
}

std::map<std::string, std::string> load_summaries_by_id(const std::string& path) {
    std::map<std::string, std::string> by_id;
    for (const auto& raw : split(read_file(path), '\n')) {
        const std::string line = trim(raw);
        if (line.empty()) continue;
        nlohmann::json obj;
        try {
            obj = nlohmann::json::parse(line);
        } catch (const std::exception& e) {
            throw ResourceError("summaries file " + path + ": bad line: " + e.what());
        }
        const std::string id = obj.value("id", std::string());
        const std::string summary = obj.value("summary", std::string());
        if (id.empty() || summary.empty()) {
            throw ResourceError("summaries file " + path + ": record needs id and summary");
        }
        by_id[id] = summary;
    }
    return by_id;
}

int cmd_detect(const RunConfig& c) {
    const auto docs = load_dataset(c);
    const auto verb = require_verbalizer(c);
    const Resources res = load_resources(c);
    const auto& scorer = require_scorer(res);
    const auto mode = eval::mode_from_label(c.mode);

    std::optional<rerank::RerankerModel> model;
    if (!c.reranker_path.empty()) {
        model = rerank::load_model(resolve_resource(c, c.reranker_path));
    }
    std::optional<detector::DetectorHead> head;
    if (!c.head_path.empty()) {
        head = detector::load_head(resolve_resource(c, c.head_path));
    }
    std::map<std::string, std::string> summaries;
    if (!c.summaries_path.empty()) {
        summaries = load_summaries_by_id(resolve_resource(c, c.summaries_path));
    }

    auto components = make_components(c, &docs, &verb, &scorer, nullptr,
                                      model ? &*model : nullptr);
    const std::string hash = verbalizer::verbalizer_hash(verb);

    std::ostringstream records;
    std::size_t degenerate = 0;
    for (const auto& doc : docs) {
        std::string text_b;
        if (!summaries.empty() && mode == eval::SummaryMode::summary) {
            auto it = summaries.find(doc.id);
            if (it == summaries.end()) {
                throw ResourceError("no summary for document '" + doc.id + "' in " +
                                    c.summaries_path);
            }
            text_b = it->second;
        } else {
            text_b = eval::summary_text_for(doc, mode, components);
        }
        const auto prompt = prompts::render(components.prompt_template, doc.headline, text_b,
                                            scorer.mask_token());
        const auto det = detector::score(prompt, verb, scorer);
        if (det.degenerate) ++degenerate;

        detector::DetectionRecord record;
        record.id = doc.id;
        record.scores = det.per_label_score;
        record.predicted = det.predicted;
        if (head) {
            const auto adjusted = detector::apply_head(*head, det.per_label_score);
            const auto best = static_cast<std::size_t>(
                std::max_element(adjusted.begin(), adjusted.end()) - adjusted.begin());
            record.predicted = head->labels[best];
        }
        record.template_id = prompt.template_id;
        record.verbalizer_hash = hash;
        records << detector::to_jsonl_record(record) << "\n";
    }
    const std::string out = c.out_path.empty() ? "detections.jsonl" : c.out_path;
    write_output(out, records.str());
    if (degenerate > 0) {
        std::cerr << "warning: " << degenerate
                  << " documents scored zero for every label (words out of vocabulary?)\n";
    }
    std::cout << "wrote " << docs.size() << " detection records to " << out << "\n";
    return 0;
}

int cmd_train(const RunConfig& c) {
    const auto docs = load_dataset(c);
    const auto verb = require_verbalizer(c);
    const Resources res = load_resources(c);
    const auto& scorer = require_scorer(res);
    const auto mode = eval::mode_from_label(c.mode);

    auto components = make_components(c, &docs, &verb, &scorer, nullptr, nullptr);
    const auto split = data::sample_few_shot(docs, c.shots, c.seed);
    if (!c.manifest_path.empty()) data::save_split_manifest(split, c.manifest_path);

    const auto scored =
        eval::score_dataset(split.train, mode, components.prompt_template, components);
    const auto result =
        detector::train_detector(scored.raw, scored.gold, verb.labels, components.trainer);

    const std::string out = c.out_path.empty() ? "detector_head.txt" : c.out_path;
    detector::save_head(result.head, out);
    std::cout << "epoch\tloss\n";
    for (std::size_t i = 0; i < result.loss_history.size(); ++i) {
        std::cout << i << "\t" << format_double(result.loss_history[i]) << "\n";
    }
    std::cout << "saved head to " << out << "\n";
    return 0;
}

eval::ExperimentSpec make_spec(const RunConfig& c) {
    eval::ExperimentSpec spec;
    spec.dataset_id = fs::path(c.dataset_path).filename().string();
    spec.shots = c.shots;
    spec.seeds = c.seeds;
    spec.template_id = c.template_id;
    for (const auto& name : c.strategies) {
        spec.strategies.push_back(verbalizer::strategy_from_name(name));
    }
    if (c.mode != "all") spec.summary_mode = eval::mode_from_label(c.mode);
    return spec;
}

int emit_reports(const RunConfig& c, const std::vector<eval::ExperimentReport>& reports) {
    const std::string table = eval::reports_to_tsv(reports);
    std::cout << table;
    if (!c.out_path.empty()) {
        write_output(c.out_path, table);
        write_output(c.out_path + ".jsonl", eval::reports_to_jsonl(reports));
    }
    return 0;
}

int cmd_eval(const RunConfig& c) {
    if (!c.records_path.empty()) {
        // Score existing detection records against the dataset's gold labels.
        const auto docs = load_dataset(c);
        std::map<std::string, int> gold;
        for (const auto& doc : docs) {
            if (doc.label) gold[doc.id] = *doc.label;
        }
        std::vector<int> predicted_v, gold_v;
        int template_id = 0;
        for (const auto& raw : split(read_file(resolve_resource(c, c.records_path)), '\n')) {
            const std::string line = trim(raw);
            if (line.empty()) continue;
            const auto record = detector::detection_record_from_jsonl(line);
            auto it = gold.find(record.id);
            if (it == gold.end()) {
                throw ResourceError("record '" + record.id + "' has no labeled document");
            }
            template_id = record.template_id;
            predicted_v.push_back(record.predicted == c.positive_label ? 1 : 0);
            gold_v.push_back(it->second);
        }
        if (predicted_v.empty()) throw ResourceError("no detection records to evaluate");

        eval::ExperimentReport report;
        report.dataset = fs::path(c.dataset_path).filename().string();
        report.shots = 0;
        report.mode = "records";
        report.template_id = template_id;
        eval::SeedResult row;
        row.seed = 0;
        row.counts = eval::count_confusion(predicted_v, gold_v);
        row.binary = eval::metrics(row.counts);
        row.weighted = eval::weighted_metrics(row.counts);
        report.per_seed.push_back(row);
        report.mean_binary = row.binary;
        report.mean_weighted = row.weighted;
        return emit_reports(c, {report});
    }

    const auto docs = load_dataset(c);
    const auto verb = require_verbalizer(c);
    const Resources res = load_resources(c);
    const auto& scorer = require_scorer(res);
    std::optional<rerank::RerankerModel> model;
    if (!c.reranker_path.empty()) {
        model = rerank::load_model(resolve_resource(c, c.reranker_path));
    }
    auto components = make_components(c, &docs, &verb, &scorer, nullptr,
                                      model ? &*model : nullptr);
    const auto spec = make_spec(c);

    std::vector<eval::ExperimentReport> reports;
    if (c.mode == "all") {
        reports = eval::run_ablation(spec, components);
    } else {
        reports.push_back(eval::run_experiment(spec, components));
    }
    return emit_reports(c, reports);
}

int cmd_sweep(const RunConfig& c) {
    if (c.sweep_grid.empty()) {
        throw ResourceError("sweep needs a value grid (--grid or config sweep.grid)");
    }
    const auto docs = load_dataset(c);
    const auto verb = require_verbalizer(c);
    const Resources res = load_resources(c);
    const auto& scorer = require_scorer(res);
    auto components = make_components(c, &docs, &verb, &scorer, nullptr, nullptr);
    const auto spec = make_spec(c);
    const auto axis = eval::axis_from_name(c.sweep_axis);

    const auto points = eval::sweep(spec, components, axis, c.sweep_grid);

    const std::string out_dir = c.out_path.empty() ? "sweep_out" : c.out_path;
    fs::create_directories(out_dir);
    std::vector<eval::ExperimentReport> reports;
    for (const auto& p : points) reports.push_back(p.report);
    write_output((fs::path(out_dir) / "sweep_table.tsv").string(),
                 eval::reports_to_tsv(reports));
    for (const std::string metric : {"accuracy", "f1"}) {
        write_output((fs::path(out_dir) / ("sweep_" + c.sweep_axis + "_" + metric + ".dat")).string(),
                     eval::sweep_plot_data(points, metric));
    }
    std::cout << "axis=" << c.sweep_axis << "\n" << eval::reports_to_tsv(reports);
    std::cout << "wrote sweep data to " << out_dir << "\n";
    return 0;
}

struct SubcommandState {
    CLI::App* app = nullptr;
    RunConfig flags;           // values bound to CLI11 options
    std::string config_path;   // --config
};

void add_common_options(SubcommandState& s) {
    auto* sub = s.app;
    sub->add_option("--config", s.config_path, "JSON config file; flags override its values");
    sub->add_option("--resource-root", s.flags.resource_root,
                    "base directory for relative resource paths");
    sub->add_option("--out", s.flags.out_path, "output file or directory");
    sub->add_option("--seed", s.flags.seed, "master random seed");
    sub->add_flag("--print-config", s.flags.print_config,
                  "print the effective configuration and exit");
}

void add_dataset_options(SubcommandState& s) {
    s.app->add_option("--dataset", s.flags.dataset_path, "dataset file");
    s.app->add_option("--dataset-format", s.flags.dataset_format,
                      "webis | news | auto (by extension)");
}

void add_resource_options(SubcommandState& s) {
    s.app->add_option("--embeddings", s.flags.embeddings_path, "word embedding table");
    s.app->add_option("--lexicon", s.flags.lexicon_path, "Zipf frequency lexicon");
    s.app->add_option("--concepts", s.flags.concepts_path, "instance/concept/probability file");
    s.app->add_option("--scorer", s.flags.scorer_path, "mask scorer fixture (JSON)");
    s.app->add_option("--backend", s.flags.backend, "mask scorer backend kind");
}

void add_template_options(SubcommandState& s) {
    s.app->add_option("--template", s.flags.template_id, "prompt template id");
    s.app->add_option("--templates-file", s.flags.templates_path,
                      "custom template file (id<TAB>pattern)");
}

void add_detector_options(SubcommandState& s) {
    s.app->add_option("--learning-rate", s.flags.learning_rate, "detector learning rate");
    s.app->add_option("--batch-size", s.flags.batch_size, "detector batch size");
    s.app->add_option("--epochs", s.flags.epochs, "detector training epochs");
    s.app->add_option("--dropout", s.flags.dropout, "input score dropout");
    s.app->add_option("--weight-decay", s.flags.weight_decay, "L2 coefficient");
    s.app->add_option("--loss-mode", s.flags.loss_mode, "squared_error | cross_entropy");
}

void add_generator_options(SubcommandState& s) {
    s.app->add_option("--generator", s.flags.generator_name, "summary generator backend");
    s.app->add_option("--num-candidates", s.flags.num_candidates, "candidates per document");
    s.app->add_option("--max-summary-words", s.flags.max_summary_words,
                      "word budget per candidate");
    s.app->add_option("--decoding-mode", s.flags.decoding_mode,
                      "beam | diverse_beam | extractive_fallback");
    s.app->add_option("--reranker", s.flags.reranker_path, "trained reranker checkpoint");
}

void add_experiment_options(SubcommandState& s) {
    s.app->add_option("--shots", s.flags.shots, "labeled examples per class (5, 10 or 20)");
    s.app->add_option("--seeds", s.flags.seeds, "experiment seeds")->delimiter(',');
    s.app->add_option("--mode", s.flags.mode, "ours | -summary | original_news | all");
    s.app->add_option("--full-content-budget", s.flags.full_content_budget,
                      "words of raw content in original_news mode");
    s.app->add_option("--positive-label", s.flags.positive_label, "label counted as positive");
}

// Defaults, then config file, then explicitly passed flags.
RunConfig effective_config(const SubcommandState& s) {
    RunConfig cfg;
    if (const char* root = std::getenv("PCTS_RESOURCE_ROOT")) cfg.resource_root = root;
    if (!s.config_path.empty()) apply_config_file(cfg, s.config_path);

    auto passed = [&](const char* name) {
        auto* opt = s.app->get_option_no_throw(name);
        return opt != nullptr && opt->count() > 0;
    };
    const RunConfig& f = s.flags;
    if (passed("--resource-root")) cfg.resource_root = f.resource_root;
    if (passed("--dataset")) cfg.dataset_path = f.dataset_path;
    if (passed("--dataset-format")) cfg.dataset_format = f.dataset_format;
    if (passed("--backend")) cfg.backend = f.backend;
    if (passed("--embeddings")) cfg.embeddings_path = f.embeddings_path;
    if (passed("--lexicon")) cfg.lexicon_path = f.lexicon_path;
    if (passed("--concepts")) cfg.concepts_path = f.concepts_path;
    if (passed("--scorer")) cfg.scorer_path = f.scorer_path;
    if (passed("--verbalizer")) cfg.verbalizer_path = f.verbalizer_path;
    if (passed("--templates-file")) cfg.templates_path = f.templates_path;
    if (passed("--reranker")) cfg.reranker_path = f.reranker_path;
    if (passed("--head")) cfg.head_path = f.head_path;
    if (passed("--summaries")) cfg.summaries_path = f.summaries_path;
    if (passed("--records")) cfg.records_path = f.records_path;
    if (passed("--corpus")) cfg.corpus_path = f.corpus_path;
    if (passed("--manifest")) cfg.manifest_path = f.manifest_path;
    if (passed("--template")) cfg.template_id = f.template_id;
    if (passed("--n-a")) cfg.n_a = f.n_a;
    if (passed("--window-c")) cfg.window_c = f.window_c;
    if (passed("--min-votes")) cfg.min_votes = f.min_votes;
    if (passed("--labels")) cfg.labels = f.labels;
    if (passed("--positive-label")) cfg.positive_label = f.positive_label;
    if (passed("--strategies")) cfg.strategies = f.strategies;
    if (passed("--generator")) cfg.generator_name = f.generator_name;
    if (passed("--num-candidates")) cfg.num_candidates = f.num_candidates;
    if (passed("--max-summary-words")) cfg.max_summary_words = f.max_summary_words;
    if (passed("--decoding-mode")) cfg.decoding_mode = f.decoding_mode;
    if (passed("--learning-rate")) cfg.learning_rate = f.learning_rate;
    if (passed("--batch-size")) cfg.batch_size = f.batch_size;
    if (passed("--epochs")) cfg.epochs = f.epochs;
    if (passed("--dropout")) cfg.dropout = f.dropout;
    if (passed("--weight-decay")) cfg.weight_decay = f.weight_decay;
    if (passed("--loss-mode")) cfg.loss_mode = f.loss_mode;
    if (passed("--rerank-learning-rate")) cfg.rerank_learning_rate = f.rerank_learning_rate;
    if (passed("--rerank-epochs")) cfg.rerank_epochs = f.rerank_epochs;
    if (passed("--rerank-hidden-dim")) cfg.rerank_hidden_dim = f.rerank_hidden_dim;
    if (passed("--shots")) cfg.shots = f.shots;
    if (passed("--seeds")) cfg.seeds = f.seeds;
    if (passed("--mode")) cfg.mode = f.mode;
    if (passed("--full-content-budget")) cfg.full_content_budget = f.full_content_budget;
    if (passed("--axis")) cfg.sweep_axis = f.sweep_axis;
    if (passed("--grid")) cfg.sweep_grid = f.sweep_grid;
    if (passed("--seed")) cfg.seed = f.seed;
    if (passed("--out")) cfg.out_path = f.out_path;
    if (passed("--print-config")) cfg.print_config = f.print_config;
    return cfg;
}

}  // namespace

int run(int argc, const char* const* argv) {
    CLI::App app{"pcts: clickbait detection via summary re-ranking and prompt verbalizers"};
    app.require_subcommand(1);

    std::vector<SubcommandState> states(7);

    auto init = [&](std::size_t i, const char* name, const char* description) {
        states[i].app = app.add_subcommand(name, description);
        add_common_options(states[i]);
        return states[i].app;
    };

    // summarize
    {
        init(0, "summarize", "generate summary candidates and pick one per document");
        add_dataset_options(states[0]);
        add_generator_options(states[0]);
    }
    // rerank-train
    {
        auto* sub = init(1, "rerank-train", "train the multi-metric candidate re-ranker");
        sub->add_option("--corpus", states[1].flags.corpus_path,
                        "JSONL with document, candidates, reference_summary");
        sub->add_option("--rerank-learning-rate", states[1].flags.rerank_learning_rate,
                        "re-ranker learning rate");
        sub->add_option("--rerank-epochs", states[1].flags.rerank_epochs, "re-ranker epochs");
        sub->add_option("--rerank-hidden-dim", states[1].flags.rerank_hidden_dim,
                        "encoder hidden width");
    }
    // build-verbalizer
    {
        auto* sub = init(2, "build-verbalizer", "expand label word sets and serialize them");
        add_resource_options(states[2]);
        add_template_options(states[2]);
        sub->add_option("--labels", states[2].flags.labels, "class labels in declaration order")
            ->delimiter(',');
        sub->add_option("--strategies", states[2].flags.strategies,
                        "subset of concepts,mlm_prediction,embedding_similarity,frequency,context")
            ->delimiter(',');
        sub->add_option("--n-a", states[2].flags.n_a, "per-strategy word cap");
        sub->add_option("--window-c", states[2].flags.window_c, "context window half width");
        sub->add_option("--min-votes", states[2].flags.min_votes,
                        "strategies required to keep a word (1 = union)");
    }
    // detect
    {
        auto* sub = init(3, "detect", "score documents against a verbalizer");
        add_dataset_options(states[3]);
        add_resource_options(states[3]);
        add_template_options(states[3]);
        add_generator_options(states[3]);
        sub->add_option("--verbalizer", states[3].flags.verbalizer_path, "verbalizer file");
        sub->add_option("--mode", states[3].flags.mode, "ours | -summary | original_news");
        sub->add_option("--summaries", states[3].flags.summaries_path,
                        "selections.jsonl with precomputed summaries");
        sub->add_option("--head", states[3].flags.head_path, "trained detector head");
        sub->add_option("--full-content-budget", states[3].flags.full_content_budget,
                        "words of raw content in original_news mode");
    }
    // train
    {
        auto* sub = init(4, "train", "train the detector head on a few-shot split");
        add_dataset_options(states[4]);
        add_resource_options(states[4]);
        add_template_options(states[4]);
        add_detector_options(states[4]);
        sub->add_option("--verbalizer", states[4].flags.verbalizer_path, "verbalizer file");
        sub->add_option("--shots", states[4].flags.shots, "labeled examples per class");
        sub->add_option("--mode", states[4].flags.mode, "ours | -summary | original_news");
        sub->add_option("--manifest", states[4].flags.manifest_path,
                        "write the split id manifest here");
    }
    // eval
    {
        auto* sub = init(5, "eval", "run experiments or evaluate detection records");
        add_dataset_options(states[5]);
        add_resource_options(states[5]);
        add_template_options(states[5]);
        add_detector_options(states[5]);
        add_experiment_options(states[5]);
        sub->add_option("--verbalizer", states[5].flags.verbalizer_path, "verbalizer file");
        sub->add_option("--records", states[5].flags.records_path,
                        "detection records to evaluate instead of running the pipeline");
        sub->add_option("--reranker", states[5].flags.reranker_path,
                        "trained reranker checkpoint");
    }
    // sweep
    {
        auto* sub = init(6, "sweep", "repeat an experiment across a parameter grid");
        add_dataset_options(states[6]);
        add_resource_options(states[6]);
        add_template_options(states[6]);
        add_detector_options(states[6]);
        add_experiment_options(states[6]);
        sub->add_option("--verbalizer", states[6].flags.verbalizer_path, "verbalizer file");
        sub->add_option("--axis", states[6].flags.sweep_axis, "learning_rate | batch_size");
        sub->add_option("--grid", states[6].flags.sweep_grid, "parameter values")
            ->delimiter(',');
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        for (std::size_t i = 0; i < states.size(); ++i) {
            if (!states[i].app->parsed()) continue;
            const RunConfig cfg = effective_config(states[i]);
            if (cfg.print_config) {
                std::cout << config_to_json(cfg).dump(2) << "\n";
                return 0;
            }
            switch (i) {
                case 0: return cmd_summarize(cfg);
                case 1: return cmd_rerank_train(cfg);
                case 2: return cmd_build_verbalizer(cfg);
                case 3: return cmd_detect(cfg);
                case 4: return cmd_train(cfg);
                case 5: return cmd_eval(cfg);
                case 6: return cmd_sweep(cfg);
            }
        }
        std::cerr << "no subcommand given\n";
        return 2;
    } catch (const ResourceError& e) {
        std::cerr << "resource error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "invalid argument: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace pcts::cli

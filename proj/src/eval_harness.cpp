#include "pcts/eval_harness.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "pcts/random.hpp"
#include "pcts/text_metrics.hpp"
#include "pcts/util.hpp"

namespace pcts::eval {

namespace {

double ratio(long num, long den) { return den == 0 ? 0.0 : static_cast<double>(num) / den; }

double f1_of(double p, double r) { return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r); }

std::string truncate_chunks(const std::string& text, int budget) {
    std::istringstream in(text);
    std::string chunk, out;
    int kept = 0;
    while (kept < budget && in >> chunk) {
        if (kept) out += " ";
        out += chunk;
        ++kept;
    }
    return out;
}

Metrics mean_of(const std::vector<Metrics>& rows) {
    Metrics m;
    if (rows.empty()) return m;
    for (const auto& r : rows) {
        m.accuracy += r.accuracy;
        m.precision += r.precision;
        m.recall += r.recall;
        m.f1 += r.f1;
    }
    const auto n = static_cast<double>(rows.size());
    m.accuracy /= n;
    m.precision /= n;
    m.recall /= n;
    m.f1 /= n;
    return m;
}

std::string sanitize_cell(std::string text) {
    for (char& c : text) {
        if (c == '\t' || c == '\n' || c == '\r') c = ' ';
    }
    return text;
}

nlohmann::json metrics_json(const Metrics& m) {
    return {{"accuracy", m.accuracy},
            {"precision", m.precision},
            {"recall", m.recall},
            {"f1", m.f1}};
}

}  // namespace

Metrics metrics(const ConfusionCounts& counts) {
    if (counts.total() <= 0) throw std::invalid_argument("metrics: empty confusion counts");
    if (counts.tp < 0 || counts.fp < 0 || counts.tn < 0 || counts.fn < 0) {
        throw std::invalid_argument("metrics: negative count");
    }
    Metrics m;
    m.accuracy = ratio(counts.tp + counts.tn, counts.total());
    m.precision = ratio(counts.tp, counts.tp + counts.fp);
    m.recall = ratio(counts.tp, counts.tp + counts.fn);
    m.f1 = f1_of(m.precision, m.recall);
    return m;
}

Metrics weighted_metrics(const ConfusionCounts& counts) {
    if (counts.total() <= 0) throw std::invalid_argument("weighted_metrics: empty counts");
    const double p_pos = ratio(counts.tp, counts.tp + counts.fp);
    const double r_pos = ratio(counts.tp, counts.tp + counts.fn);
    const double p_neg = ratio(counts.tn, counts.tn + counts.fn);
    const double r_neg = ratio(counts.tn, counts.tn + counts.fp);
    const double support_pos = static_cast<double>(counts.tp + counts.fn);
    const double support_neg = static_cast<double>(counts.tn + counts.fp);
    const double total = support_pos + support_neg;

    Metrics m;
    m.accuracy = ratio(counts.tp + counts.tn, counts.total());
    m.precision = (support_pos * p_pos + support_neg * p_neg) / total;
    m.recall = (support_pos * r_pos + support_neg * r_neg) / total;
    m.f1 = (support_pos * f1_of(p_pos, r_pos) + support_neg * f1_of(p_neg, r_neg)) / total;
    return m;
}

ConfusionCounts count_confusion(const std::vector<int>& predicted, const std::vector<int>& gold) {
    if (predicted.size() != gold.size()) {
        throw std::invalid_argument("count_confusion: size mismatch");
    }
    if (predicted.empty()) throw std::invalid_argument("count_confusion: empty lists");
    ConfusionCounts counts;
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        if ((predicted[i] != 0 && predicted[i] != 1) || (gold[i] != 0 && gold[i] != 1)) {
            throw std::invalid_argument("count_confusion: labels must be 0 or 1");
        }
        if (predicted[i] == 1) {
            ++(gold[i] == 1 ? counts.tp : counts.fp);
        } else {
            ++(gold[i] == 1 ? counts.fn : counts.tn);
        }
    }
    return counts;
}

std::string mode_label(SummaryMode mode) {
    switch (mode) {
        case SummaryMode::summary: return "ours";
        case SummaryMode::no_summary: return "-summary";
        case SummaryMode::full_content: return "original_news";
    }
    throw std::invalid_argument("mode_label: unknown mode");
}

SummaryMode mode_from_label(const std::string& label) {
    if (label == "ours" || label == "summary") return SummaryMode::summary;
    if (label == "-summary" || label == "no_summary") return SummaryMode::no_summary;
    if (label == "original_news" || label == "full_content") return SummaryMode::full_content;
    throw std::invalid_argument("unknown summary mode: " + label);
}

std::string summary_text_for(const data::Document& doc, SummaryMode mode,
                             const PipelineComponents& components) {
    if (mode == SummaryMode::no_summary) return components.no_summary_sentinel;
    if (mode == SummaryMode::full_content) {
        const std::string truncated = truncate_chunks(doc.content, components.full_content_budget);
        return truncated.empty() ? components.no_summary_sentinel : truncated;
    }
    if (metrics::tokenize(doc.content).empty()) return components.no_summary_sentinel;

    static const summary::ExtractiveFallbackGenerator fallback;
    const summary::SummaryGenerator& generator =
        components.generator ? *components.generator : fallback;
    const auto set = summary::generate_candidates(doc.content, components.generator_config,
                                                  generator, doc.id);
    if (components.reranker) {
        return rerank::select_best(*components.reranker, set, doc.content).second;
    }
    return set.candidates.front();
}

namespace {

std::pair<std::size_t, std::size_t> label_indices(const PipelineComponents& components) {
    if (!components.verb) throw std::invalid_argument("verbalizer required");
    const auto& labels = components.verb->labels;
    if (labels.size() != 2) {
        throw std::invalid_argument("binary pipeline needs exactly two labels, got " +
                                    std::to_string(labels.size()));
    }
    const auto pos_it = std::find(labels.begin(), labels.end(), components.positive_label);
    if (pos_it == labels.end()) {
        throw std::invalid_argument("positive label '" + components.positive_label +
                                    "' not in verbalizer");
    }
    const auto pos_idx = static_cast<std::size_t>(pos_it - labels.begin());
    return {pos_idx, pos_idx == 0 ? 1 : 0};
}

}  // namespace

ScoredDataset score_dataset(const std::vector<data::Document>& docs, SummaryMode mode,
                            const prompts::PromptTemplate& tmpl,
                            const PipelineComponents& components) {
    if (!components.scorer) throw std::invalid_argument("score_dataset: scorer required");
    const auto [pos_idx, neg_idx] = label_indices(components);
    const auto& labels = components.verb->labels;
    ScoredDataset out;
    for (const auto& doc : docs) {
        if (!doc.label) {
            throw std::invalid_argument("score_dataset: document '" + doc.id + "' is unlabeled");
        }
        const std::string text_b = summary_text_for(doc, mode, components);
        const auto prompt =
            prompts::render(tmpl, doc.headline, text_b, components.scorer->mask_token());
        const auto det = detector::score(prompt, *components.verb, *components.scorer);
        std::vector<double> row(labels.size());
        for (std::size_t k = 0; k < labels.size(); ++k) {
            row[k] = det.per_label_score.at(labels[k]);
        }
        out.raw.push_back(std::move(row));
        out.gold.push_back(static_cast<int>(*doc.label == 1 ? pos_idx : neg_idx));
    }
    return out;
}

ExperimentReport run_experiment(const ExperimentSpec& spec,
                                const PipelineComponents& components) {
    if (!components.documents || !components.verb || !components.scorer) {
        throw std::invalid_argument("run_experiment: documents, verbalizer and scorer required");
    }
    if (spec.seeds.empty()) throw std::invalid_argument("run_experiment: no seeds");

    const auto& labels = components.verb->labels;
    const auto [pos_idx, neg_idx] = label_indices(components);
    (void)neg_idx;

    prompts::PromptTemplate tmpl = components.prompt_template;
    if (tmpl.pattern.empty()) tmpl = prompts::template_by_id(spec.template_id);

    ExperimentReport report;
    report.dataset = spec.dataset_id;
    report.shots = spec.shots;
    report.mode = mode_label(spec.summary_mode);
    report.template_id = tmpl.id;

    std::vector<Metrics> ok_binary, ok_weighted;
    for (const auto seed : spec.seeds) {
        SeedResult row;
        row.seed = seed;
        try {
            const auto split = data::sample_few_shot(*components.documents, spec.shots, seed);
            const auto train = score_dataset(split.train, spec.summary_mode, tmpl, components);
            detector::DetectorTrainConfig trainer = components.trainer;
            trainer.seed = derive_seed(seed, "experiment-detector");
            const auto trained =
                detector::train_detector(train.raw, train.gold, labels, trainer);

            const auto test = score_dataset(split.test, spec.summary_mode, tmpl, components);
            std::vector<int> predicted, gold;
            for (std::size_t i = 0; i < test.raw.size(); ++i) {
                std::vector<double> logits(labels.size());
                for (std::size_t k = 0; k < labels.size(); ++k) {
                    logits[k] = test.raw[i][k] + trained.head.bias[k];
                }
                const auto probs = detector::softmax(logits);
                const std::size_t best =
                    static_cast<std::size_t>(std::max_element(probs.begin(), probs.end()) -
                                             probs.begin());
                predicted.push_back(best == pos_idx ? 1 : 0);
                gold.push_back(test.gold[i] == static_cast<int>(pos_idx) ? 1 : 0);
            }
            row.counts = count_confusion(predicted, gold);
            row.binary = metrics(row.counts);
            row.weighted = weighted_metrics(row.counts);
            ok_binary.push_back(row.binary);
            ok_weighted.push_back(row.weighted);
        } catch (const std::exception& e) {
            row.failed = true;
            row.error = e.what();
            report.partial = true;
        }
        report.per_seed.push_back(std::move(row));
    }
    report.mean_binary = mean_of(ok_binary);
    report.mean_weighted = mean_of(ok_weighted);
    return report;
}

std::vector<ExperimentReport> run_ablation(const ExperimentSpec& spec,
                                           const PipelineComponents& components) {
    std::vector<ExperimentReport> reports;
    for (SummaryMode mode :
         {SummaryMode::summary, SummaryMode::no_summary, SummaryMode::full_content}) {
        ExperimentSpec row_spec = spec;
        row_spec.summary_mode = mode;
        reports.push_back(run_experiment(row_spec, components));
    }
    return reports;
}

std::string axis_name(SweepAxis axis) {
    return axis == SweepAxis::learning_rate ? "learning_rate" : "batch_size";
}

SweepAxis axis_from_name(const std::string& name) {
    if (name == "learning_rate") return SweepAxis::learning_rate;
    if (name == "batch_size") return SweepAxis::batch_size;
    throw std::invalid_argument("unknown sweep axis: " + name);
}

std::vector<SweepPoint> sweep(const ExperimentSpec& spec, const PipelineComponents& components,
                              SweepAxis axis, const std::vector<double>& grid) {
    if (grid.empty()) throw std::invalid_argument("sweep: empty grid");
    std::vector<SweepPoint> points;
    for (const double value : grid) {
        PipelineComponents varied = components;
        if (axis == SweepAxis::learning_rate) {
            if (value < 0.0) throw std::invalid_argument("sweep: negative learning rate");
            varied.trainer.learning_rate = value;
        } else {
            if (value < 1.0 || value != std::floor(value)) {
                throw std::invalid_argument("sweep: batch size must be a positive integer");
            }
            varied.trainer.batch_size = static_cast<int>(value);
        }
        points.push_back({value, run_experiment(spec, varied)});
    }
    return points;
}

std::string reports_to_tsv(const std::vector<ExperimentReport>& reports) {
    std::ostringstream out;
    out << "dataset\tshots\tmode\ttemplate\tseed\taccuracy\tprecision\trecall\tf1"
        << "\tw_precision\tw_recall\tw_f1\ttp\tfp\ttn\tfn\tstatus\n";
    for (const auto& report : reports) {
        for (const auto& row : report.per_seed) {
            out << sanitize_cell(report.dataset) << "\t" << report.shots << "\t" << report.mode
                << "\t" << report.template_id << "\t" << row.seed << "\t";
            if (row.failed) {
                out << "-\t-\t-\t-\t-\t-\t-\t-\t-\t-\t-\tfailed: " << sanitize_cell(row.error)
                    << "\n";
                continue;
            }
            out << format_double(row.binary.accuracy) << "\t"
                << format_double(row.binary.precision) << "\t"
                << format_double(row.binary.recall) << "\t" << format_double(row.binary.f1)
                << "\t" << format_double(row.weighted.precision) << "\t"
                << format_double(row.weighted.recall) << "\t" << format_double(row.weighted.f1)
                << "\t" << row.counts.tp << "\t" << row.counts.fp << "\t" << row.counts.tn
                << "\t" << row.counts.fn << "\tok\n";
        }
        out << sanitize_cell(report.dataset) << "\t" << report.shots << "\t" << report.mode
            << "\t" << report.template_id << "\tmean\t"
            << format_double(report.mean_binary.accuracy) << "\t"
            << format_double(report.mean_binary.precision) << "\t"
            << format_double(report.mean_binary.recall) << "\t"
            << format_double(report.mean_binary.f1) << "\t"
            << format_double(report.mean_weighted.precision) << "\t"
            << format_double(report.mean_weighted.recall) << "\t"
            << format_double(report.mean_weighted.f1) << "\t-\t-\t-\t-\t"
            << (report.partial ? "partial" : "ok") << "\n";
    }
    return out.str();
}

std::string reports_to_jsonl(const std::vector<ExperimentReport>& reports) {
    std::ostringstream out;
    for (const auto& report : reports) {
        nlohmann::json obj;
        obj["dataset"] = report.dataset;
        obj["shots"] = report.shots;
        obj["mode"] = report.mode;
        obj["template_id"] = report.template_id;
        obj["partial"] = report.partial;
        obj["mean"] = metrics_json(report.mean_binary);
        obj["mean_weighted"] = metrics_json(report.mean_weighted);
        obj["seeds"] = nlohmann::json::array();
        for (const auto& row : report.per_seed) {
            nlohmann::json seed_obj;
            seed_obj["seed"] = row.seed;
            if (row.failed) {
                seed_obj["error"] = row.error;
            } else {
                seed_obj["metrics"] = metrics_json(row.binary);
                seed_obj["weighted"] = metrics_json(row.weighted);
                seed_obj["counts"] = {{"tp", row.counts.tp},
                                      {"fp", row.counts.fp},
                                      {"tn", row.counts.tn},
                                      {"fn", row.counts.fn}};
            }
            obj["seeds"].push_back(std::move(seed_obj));
        }
        out << obj.dump() << "\n";
    }
    return out.str();
}

std::string sweep_plot_data(const std::vector<SweepPoint>& points, const std::string& metric) {
    std::ostringstream out;
    for (const auto& point : points) {
        double value = 0.0;
        if (metric == "accuracy") {
            value = point.report.mean_binary.accuracy;
        } else if (metric == "precision") {
            value = point.report.mean_binary.precision;
        } else if (metric == "recall") {
            value = point.report.mean_binary.recall;
        } else if (metric == "f1") {
            value = point.report.mean_binary.f1;
        } else {
            throw std::invalid_argument("sweep_plot_data: unknown metric " + metric);
        }
        out << format_double(point.value, 8) << "\t" << format_double(value) << "\n";
    }
    return out.str();
}

}  // namespace pcts::eval

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pcts/datasets.hpp"
#include "pcts/detector.hpp"
#include "pcts/lm_backend.hpp"
#include "pcts/prompt_templates.hpp"
#include "pcts/reranker.hpp"
#include "pcts/summary_engine.hpp"
#include "pcts/verbalizer_builder.hpp"

namespace pcts::eval {

struct ConfusionCounts {
    long tp = 0, fp = 0, tn = 0, fn = 0;
    long total() const { return tp + fp + tn + fn; }
};

struct Metrics {
    double accuracy = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

// Binary metrics, class 1 positive; zero denominators yield zero.
Metrics metrics(const ConfusionCounts& counts);

// Support-weighted average of the per-class metrics, the convention some
// published tables use without saying so. Reported alongside the binary form.
Metrics weighted_metrics(const ConfusionCounts& counts);

ConfusionCounts count_confusion(const std::vector<int>& predicted, const std::vector<int>& gold);

enum class SummaryMode { summary, no_summary, full_content };

// Report row labels: "ours", "-summary", "original_news".
std::string mode_label(SummaryMode mode);
SummaryMode mode_from_label(const std::string& label);

struct ExperimentSpec {
    std::string dataset_id;
    int shots = 5;
    std::vector<std::uint64_t> seeds;
    int template_id = 3;
    std::vector<verbalizer::Strategy> strategies;  // recorded for the report
    SummaryMode summary_mode = SummaryMode::summary;
};

struct PipelineComponents {
    const std::vector<data::Document>* documents = nullptr;
    const verbalizer::Verbalizer* verb = nullptr;
    const lm::MaskScorer* scorer = nullptr;
    const summary::SummaryGenerator* generator = nullptr;  // null: extractive fallback
    const rerank::RerankerModel* reranker = nullptr;       // null: lead candidate wins
    prompts::PromptTemplate prompt_template;               // empty: use spec.template_id
    summary::GeneratorConfig generator_config;
    detector::DetectorTrainConfig trainer;
    std::string positive_label = "clickbait";
    int full_content_budget = 128;                         // whitespace chunks kept
    std::string no_summary_sentinel = "(no summary)";
};

struct SeedResult {
    std::uint64_t seed = 0;
    ConfusionCounts counts;
    Metrics binary;
    Metrics weighted;
    bool failed = false;
    std::string error;
};

struct ExperimentReport {
    std::string dataset;
    int shots = 0;
    std::string mode;
    int template_id = 0;
    std::vector<SeedResult> per_seed;
    Metrics mean_binary;   // averaged over successful seeds
    Metrics mean_weighted;
    bool partial = false;  // a seed failed; its row carries the error
};

// The text filling the summary slot under the given mode. The no_summary mode
// never touches content or generators; empty content falls back to the
// sentinel in the other modes.
std::string summary_text_for(const data::Document& doc, SummaryMode mode,
                             const PipelineComponents& components);

struct ScoredDataset {
    std::vector<std::vector<double>> raw;  // per document, ordered like verbalizer labels
    std::vector<int> gold;                 // index into verbalizer labels
};

// Renders and scores every document; requires all documents labeled and the
// verbalizer binary with components.positive_label present.
ScoredDataset score_dataset(const std::vector<data::Document>& docs, SummaryMode mode,
                            const prompts::PromptTemplate& tmpl,
                            const PipelineComponents& components);

// Few-shot split -> train detector head -> evaluate on the held-out side,
// once per seed. Per-seed failures are recorded, not fatal.
ExperimentReport run_experiment(const ExperimentSpec& spec,
                                const PipelineComponents& components);

// The three summary modes from one spec, in fixed order.
std::vector<ExperimentReport> run_ablation(const ExperimentSpec& spec,
                                           const PipelineComponents& components);

enum class SweepAxis { learning_rate, batch_size };
std::string axis_name(SweepAxis axis);
SweepAxis axis_from_name(const std::string& name);

struct SweepPoint {
    double value = 0.0;
    ExperimentReport report;
};

// One run_experiment per grid value, everything else fixed.
std::vector<SweepPoint> sweep(const ExperimentSpec& spec, const PipelineComponents& components,
                              SweepAxis axis, const std::vector<double>& grid);

std::string reports_to_tsv(const std::vector<ExperimentReport>& reports);
std::string reports_to_jsonl(const std::vector<ExperimentReport>& reports);

// Two columns: parameter value, mean metric ("accuracy"/"precision"/"recall"/"f1").
std::string sweep_plot_data(const std::vector<SweepPoint>& points, const std::string& metric);

}  // namespace pcts::eval

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "pcts/summary_engine.hpp"

namespace pcts::rerank {

// Metric names, fixed order: the three overlap signals supervising the heads.
const std::vector<std::string>& metric_names();

struct MetricScores {
    std::map<std::string, std::vector<double>> per_metric;
};

// Shared encoder h = tanh(Wx + b) with one sigmoid head per metric.
// Parameter layout: W (hidden x feature, row major), b, then per metric
// head weights u and bias c.
struct RerankerModel {
    std::size_t feature_dim = 0;
    std::size_t hidden_dim = 0;
    std::vector<std::string> metrics;
    std::vector<double> params;

    std::size_t param_count() const {
        return hidden_dim * feature_dim + hidden_dim + metrics.size() * (hidden_dim + 1);
    }
    // Per-metric head probabilities for one feature vector.
    std::vector<double> head_probabilities(const std::vector<double>& features) const;
};

struct RerankTrainingExample {
    std::string document;
    std::vector<std::string> candidates;
    std::string reference_summary;
};

struct RerankTrainConfig {
    double learning_rate = 0.02;
    int epochs = 300;
    std::size_t hidden_dim = 6;
    std::uint64_t seed = 1;
};

// Overlap statistics of one candidate against its source document, plus
// length, position and bias terms. Computable at inference time (no
// reference needed).
std::vector<double> candidate_features(const std::string& document, const std::string& candidate,
                                       std::size_t position, std::size_t num_candidates);

std::size_t feature_count();

// Per-metric F1 of every candidate against the reference summary.
MetricScores score_candidates(const RerankTrainingExample& example);

// 1 for every candidate attaining the maximum score (ties all positive).
std::vector<int> label_candidates(const RerankTrainingExample& example,
                                  const std::string& metric);

// Predictions are clamped to [1e-7, 1 - 1e-7] before the logs.
double bce_loss(double prediction, int label);

// Mean over metrics of the mean per-candidate BCE for that metric's head.
double multi_metric_loss(const RerankerModel& model,
                         const std::vector<RerankTrainingExample>& batch);

// Loss plus analytic gradient with respect to model.params.
std::pair<double, std::vector<double>> multi_metric_loss_gradient(
    const RerankerModel& model, const std::vector<RerankTrainingExample>& batch);

// Adam on the full corpus per epoch; returns the best snapshot by training
// loss, so the result never scores worse than the initial parameters.
// Non-finite loss aborts with the epoch in the message.
RerankerModel train_reranker(const std::vector<RerankTrainingExample>& corpus,
                             const RerankTrainConfig& config,
                             std::vector<double>* loss_history = nullptr);

// Mean of head probabilities per candidate; argmax wins, first index on ties.
std::size_t argmax_mean(const std::vector<std::vector<double>>& head_probs);

std::pair<std::size_t, std::string> select_best(const RerankerModel& model,
                                                const summary::SummaryCandidateSet& candidates,
                                                const std::string& document);

void save_model(const RerankerModel& model, const std::string& path);
RerankerModel load_model(const std::string& path);

}  // namespace pcts::rerank

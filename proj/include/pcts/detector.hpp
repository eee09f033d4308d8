#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "pcts/lm_backend.hpp"
#include "pcts/prompt_templates.hpp"
#include "pcts/verbalizer_builder.hpp"

namespace pcts::detector {

// The printed training objective is squared error with an L2 term; a true
// cross-entropy mode is available behind this switch.
enum class LossMode { squared_error, cross_entropy };

std::string loss_mode_name(LossMode mode);
LossMode loss_mode_from_name(const std::string& name);

struct DetectionResult {
    std::map<std::string, double> per_label_score;  // mean label-word probability
    std::string predicted;                          // argmax, first label on exact ties
    lm::MaskDistribution mask_probs;                // restricted to verbalizer words
    bool degenerate = false;                        // every label scored zero
};

// per_label_score(y) = mean of p(mask = v) over v in V_y.
DetectionResult score(const prompts::RenderedPrompt& prompt, const verbalizer::Verbalizer& verb,
                      const lm::MaskScorer& scorer);

struct DetectionRecord {
    std::string id;
    std::map<std::string, double> scores;
    std::string predicted;
    int template_id = 0;
    std::string verbalizer_hash;
};

std::string to_jsonl_record(const DetectionRecord& record);
DetectionRecord detection_record_from_jsonl(const std::string& line);

struct DetectorTrainConfig {
    double learning_rate = 4e-5;
    int batch_size = 32;
    int epochs = 10;
    double dropout = 0.5;
    double weight_decay = 1e-5;
    LossMode loss_mode = LossMode::squared_error;
    std::uint64_t seed = 0;
};

// Trainable head: one bias per label, applied as softmax(raw scores + bias).
struct DetectorHead {
    std::vector<std::string> labels;
    std::vector<double> bias;
};

std::vector<double> softmax(const std::vector<double>& logits);

// Mean squared error of the true-class probability (or its negative log in
// cross-entropy mode) plus lambda * ||params||^2. predictions[i] must be a
// normalized probability vector; labels[i] indexes the true class.
double detection_loss(const std::vector<std::vector<double>>& predictions,
                      const std::vector<int>& labels, const std::vector<double>& params,
                      double lambda, LossMode mode = LossMode::squared_error);

// The same objective driven through the head: p_i = softmax(raw_i + bias).
double head_loss(const std::vector<std::vector<double>>& raw_scores,
                 const std::vector<int>& labels, const std::vector<double>& bias, double lambda,
                 LossMode mode = LossMode::squared_error);

std::pair<double, std::vector<double>> head_loss_gradient(
    const std::vector<std::vector<double>>& raw_scores, const std::vector<int>& labels,
    const std::vector<double>& bias, double lambda, LossMode mode = LossMode::squared_error);

struct DetectorTrainResult {
    DetectorHead head;
    // Dropout-free loss per epoch; entry 0 is the untrained loss.
    std::vector<double> loss_history;
};

// Adam over mini-batches with inverted dropout on the raw input scores.
// Returns the best snapshot by dropout-free training loss, so the result
// never scores worse than the initial bias. Non-finite loss aborts.
DetectorTrainResult train_detector(const std::vector<std::vector<double>>& raw_scores,
                                   const std::vector<int>& labels,
                                   const std::vector<std::string>& label_names,
                                   const DetectorTrainConfig& config);

// Head-adjusted probability vector for one document, ordered like head.labels.
std::vector<double> apply_head(const DetectorHead& head,
                               const std::map<std::string, double>& per_label_score);

void save_head(const DetectorHead& head, const std::string& path);
DetectorHead load_head(const std::string& path);

}  // namespace pcts::detector

#include "pcts/detector.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "pcts/errors.hpp"
#include "pcts/random.hpp"
#include "pcts/util.hpp"

namespace pcts::detector {

namespace {

void check_prediction_row(const std::vector<double>& row, std::size_t labels, int true_label,
                          const char* origin) {
    if (row.size() != labels) {
        throw std::invalid_argument(std::string(origin) + ": prediction width mismatch");
    }
    if (true_label < 0 || static_cast<std::size_t>(true_label) >= labels) {
        throw std::invalid_argument(std::string(origin) + ": label index out of range");
    }
    double total = 0.0;
    for (double p : row) {
        if (!std::isfinite(p) || p < 0.0) {
            throw std::invalid_argument(std::string(origin) + ": bad probability value");
        }
        total += p;
    }
    if (std::abs(total - 1.0) > 1e-6) {
        throw std::invalid_argument(std::string(origin) + ": prediction row not normalized");
    }
}

double per_example_loss(double p_true, LossMode mode) {
    if (mode == LossMode::squared_error) {
        const double err = 1.0 - p_true;
        return err * err;
    }
    return -std::log(std::max(p_true, 1e-12));
}

}  // namespace

std::string loss_mode_name(LossMode mode) {
    return mode == LossMode::squared_error ? "squared_error" : "cross_entropy";
}

LossMode loss_mode_from_name(const std::string& name) {
    if (name == "squared_error") return LossMode::squared_error;
    if (name == "cross_entropy") return LossMode::cross_entropy;
    throw std::invalid_argument("unknown loss mode: " + name);
}

DetectionResult score(const prompts::RenderedPrompt& prompt, const verbalizer::Verbalizer& verb,
                      const lm::MaskScorer& scorer) {
    if (verb.labels.empty()) throw std::invalid_argument("score: verbalizer has no labels");
    for (const auto& label : verb.labels) {
        auto it = verb.label_words.find(label);
        if (it == verb.label_words.end() || it->second.empty()) {
            throw std::invalid_argument("score: label '" + label + "' has an empty word set");
        }
    }

    const lm::MaskDistribution dist = lm::mask_distribution(prompt, scorer);
    DetectionResult result;
    double best = -1.0;
    for (const auto& label : verb.labels) {
        const auto& words = verb.label_words.at(label);
        double sum = 0.0;
        for (const auto& word : words) {
            const double p = dist.prob_of(word);
            result.mask_probs.word_probs[word] = p;
            sum += p;
        }
        const double mean = sum / static_cast<double>(words.size());
        result.per_label_score[label] = mean;
        if (mean > best) {  // strict: exact ties keep the earlier label
            best = mean;
            result.predicted = label;
        }
    }
    result.degenerate = best == 0.0;
    return result;
}

std::string to_jsonl_record(const DetectionRecord& record) {
    nlohmann::json obj;
    obj["id"] = record.id;
    obj["scores"] = record.scores;
    obj["predicted"] = record.predicted;
    obj["template_id"] = record.template_id;
    obj["verbalizer_hash"] = record.verbalizer_hash;
    return obj.dump();
}

DetectionRecord detection_record_from_jsonl(const std::string& line) {
    nlohmann::json obj;
    try {
        obj = nlohmann::json::parse(line);
    } catch (const std::exception& e) {
        throw ResourceError(std::string("bad detection record: ") + e.what());
    }
    DetectionRecord record;
    record.id = obj.value("id", std::string());
    record.predicted = obj.value("predicted", std::string());
    record.template_id = obj.value("template_id", 0);
    record.verbalizer_hash = obj.value("verbalizer_hash", std::string());
    if (obj.contains("scores")) {
        for (auto it = obj["scores"].begin(); it != obj["scores"].end(); ++it) {
            record.scores[it.key()] = it.value().get<double>();
        }
    }
    if (record.id.empty() || record.predicted.empty()) {
        throw ResourceError("detection record missing id or predicted label");
    }
    return record;
}

std::vector<double> softmax(const std::vector<double>& logits) {
    if (logits.empty()) throw std::invalid_argument("softmax: empty input");
    const double peak = *std::max_element(logits.begin(), logits.end());
    std::vector<double> out(logits.size());
    double total = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        out[i] = std::exp(logits[i] - peak);
        total += out[i];
    }
    for (double& x : out) x /= total;
    return out;
}

double detection_loss(const std::vector<std::vector<double>>& predictions,
                      const std::vector<int>& labels, const std::vector<double>& params,
                      double lambda, LossMode mode) {
    if (predictions.empty()) throw std::invalid_argument("detection_loss: no predictions");
    if (predictions.size() != labels.size()) {
        throw std::invalid_argument("detection_loss: predictions/labels size mismatch");
    }
    const std::size_t width = predictions.front().size();
    double loss = 0.0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        check_prediction_row(predictions[i], width, labels[i], "detection_loss");
        loss += per_example_loss(predictions[i][static_cast<std::size_t>(labels[i])], mode);
    }
    loss /= static_cast<double>(predictions.size());
    double reg = 0.0;
    for (double p : params) reg += p * p;
    loss += lambda * reg;
    if (!std::isfinite(loss)) throw std::runtime_error("detection_loss: non-finite loss");
    return loss;
}

double head_loss(const std::vector<std::vector<double>>& raw_scores,
                 const std::vector<int>& labels, const std::vector<double>& bias, double lambda,
                 LossMode mode) {
    if (raw_scores.empty()) throw std::invalid_argument("head_loss: no examples");
    if (raw_scores.size() != labels.size()) {
        throw std::invalid_argument("head_loss: scores/labels size mismatch");
    }
    std::vector<std::vector<double>> predictions;
    predictions.reserve(raw_scores.size());
    for (const auto& row : raw_scores) {
        if (row.size() != bias.size()) {
            throw std::invalid_argument("head_loss: score width does not match bias");
        }
        std::vector<double> logits(row.size());
        for (std::size_t k = 0; k < row.size(); ++k) logits[k] = row[k] + bias[k];
        predictions.push_back(softmax(logits));
    }
    return detection_loss(predictions, labels, bias, lambda, mode);
}

std::pair<double, std::vector<double>> head_loss_gradient(
    const std::vector<std::vector<double>>& raw_scores, const std::vector<int>& labels,
    const std::vector<double>& bias, double lambda, LossMode mode) {
    const double loss = head_loss(raw_scores, labels, bias, lambda, mode);
    std::vector<double> grad(bias.size(), 0.0);
    const double scale = 1.0 / static_cast<double>(raw_scores.size());

    for (std::size_t i = 0; i < raw_scores.size(); ++i) {
        std::vector<double> logits(bias.size());
        for (std::size_t k = 0; k < bias.size(); ++k) logits[k] = raw_scores[i][k] + bias[k];
        const auto p = softmax(logits);
        const auto t = static_cast<std::size_t>(labels[i]);

        // d p_t / d bias_k = p_t (delta_tk - p_k)
        for (std::size_t k = 0; k < bias.size(); ++k) {
            const double dpt = p[t] * ((k == t ? 1.0 : 0.0) - p[k]);
            double dl;
            if (mode == LossMode::squared_error) {
                dl = -2.0 * (1.0 - p[t]) * dpt;
            } else {
                dl = -dpt / std::max(p[t], 1e-12);
            }
            grad[k] += scale * dl;
        }
    }
    for (std::size_t k = 0; k < bias.size(); ++k) grad[k] += 2.0 * lambda * bias[k];
    return {loss, std::move(grad)};
}

DetectorTrainResult train_detector(const std::vector<std::vector<double>>& raw_scores,
                                   const std::vector<int>& labels,
                                   const std::vector<std::string>& label_names,
                                   const DetectorTrainConfig& config) {
    if (raw_scores.empty()) throw std::invalid_argument("train_detector: empty dataset");
    if (raw_scores.size() != labels.size()) {
        throw std::invalid_argument("train_detector: scores/labels size mismatch");
    }
    if (label_names.empty()) throw std::invalid_argument("train_detector: no labels");
    if (config.dropout < 0.0 || config.dropout >= 1.0) {
        throw std::invalid_argument("train_detector: dropout must be in [0,1)");
    }
    if (config.batch_size < 1) throw std::invalid_argument("train_detector: batch_size must be >= 1");
    if (config.epochs < 0) throw std::invalid_argument("train_detector: negative epochs");
    for (const auto& row : raw_scores) {
        if (row.size() != label_names.size()) {
            throw std::invalid_argument("train_detector: score width does not match labels");
        }
    }

    DetectorTrainResult result;
    result.head.labels = label_names;
    result.head.bias.assign(label_names.size(), 0.0);
    std::vector<double>& bias = result.head.bias;

    auto eval_loss = [&]() {
        return head_loss(raw_scores, labels, bias, config.weight_decay, config.loss_mode);
    };

    double best_loss = eval_loss();
    std::vector<double> best_bias = bias;
    result.loss_history.push_back(best_loss);

    Rng rng(derive_seed(config.seed, "detector-train"));
    std::vector<double> adam_m(bias.size(), 0.0), adam_v(bias.size(), 0.0);
    const double beta1 = 0.9, beta2 = 0.999, adam_eps = 1e-8;
    long step = 0;

    std::vector<std::size_t> order(raw_scores.size());
    std::iota(order.begin(), order.end(), 0);

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        rng.shuffle(order);
        for (std::size_t start = 0; start < order.size();
             start += static_cast<std::size_t>(config.batch_size)) {
            const std::size_t end =
                std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
            std::vector<std::vector<double>> batch_scores;
            std::vector<int> batch_labels;
            for (std::size_t i = start; i < end; ++i) {
                std::vector<double> row = raw_scores[order[i]];
                if (config.dropout > 0.0) {
                    for (double& x : row) {
                        if (rng.next_double() < config.dropout) {
                            x = 0.0;
                        } else {
                            x /= 1.0 - config.dropout;
                        }
                    }
                }
                batch_scores.push_back(std::move(row));
                batch_labels.push_back(labels[order[i]]);
            }
            auto [loss, grad] = head_loss_gradient(batch_scores, batch_labels, bias,
                                                   config.weight_decay, config.loss_mode);
            if (!std::isfinite(loss)) {
                std::ostringstream history;
                for (double h : result.loss_history) history << " " << format_double(h, 6);
                throw std::runtime_error("detector training diverged at epoch " +
                                         std::to_string(epoch) + "; loss history:" +
                                         history.str());
            }
            ++step;
            for (std::size_t k = 0; k < bias.size(); ++k) {
                adam_m[k] = beta1 * adam_m[k] + (1.0 - beta1) * grad[k];
                adam_v[k] = beta2 * adam_v[k] + (1.0 - beta2) * grad[k] * grad[k];
                const double mhat = adam_m[k] / (1.0 - std::pow(beta1, static_cast<double>(step)));
                const double vhat = adam_v[k] / (1.0 - std::pow(beta2, static_cast<double>(step)));
                bias[k] -= config.learning_rate * mhat / (std::sqrt(vhat) + adam_eps);
            }
        }
        const double epoch_loss = eval_loss();
        result.loss_history.push_back(epoch_loss);
        if (epoch_loss < best_loss) {
            best_loss = epoch_loss;
            best_bias = bias;
        }
    }
    bias = best_bias;
    return result;
}

std::vector<double> apply_head(const DetectorHead& head,
                               const std::map<std::string, double>& per_label_score) {
    if (head.labels.size() != head.bias.size()) {
        throw std::invalid_argument("apply_head: malformed head");
    }
    std::vector<double> logits(head.labels.size());
    for (std::size_t k = 0; k < head.labels.size(); ++k) {
        auto it = per_label_score.find(head.labels[k]);
        if (it == per_label_score.end()) {
            throw std::invalid_argument("apply_head: missing score for label " + head.labels[k]);
        }
        logits[k] = it->second + head.bias[k];
    }
    return softmax(logits);
}

void save_head(const DetectorHead& head, const std::string& path) {
    std::ostringstream out;
    out << "pcts-detector-head 1\n";
    out << "labels";
    for (const auto& label : head.labels) out << " " << label;
    out << "\nbias " << head.bias.size() << "\n";
    out.precision(17);
    for (double b : head.bias) out << b << "\n";
    write_file(path, out.str());
}

DetectorHead load_head(const std::string& path) {
    std::istringstream in(read_file(path));
    std::string magic;
    int version = 0;
    if (!(in >> magic >> version) || magic != "pcts-detector-head" || version != 1) {
        throw ResourceError("head file " + path + ": not a detector head");
    }
    DetectorHead head;
    std::string key;
    if (!(in >> key) || key != "labels") throw ResourceError("head file " + path + ": bad format");
    std::string token;
    std::size_t count = 0;
    while (in >> token && token != "bias") head.labels.push_back(token);
    if (token != "bias" || !(in >> count)) {
        throw ResourceError("head file " + path + ": missing bias section");
    }
    head.bias.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
        if (!(in >> head.bias[i])) throw ResourceError("head file " + path + ": truncated bias");
    }
    if (head.labels.size() != count || head.labels.empty()) {
        throw ResourceError("head file " + path + ": label/bias size mismatch");
    }
    return head;
}

}  // namespace pcts::detector

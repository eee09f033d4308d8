#include "pcts/reranker.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "pcts/errors.hpp"
#include "pcts/random.hpp"
#include "pcts/text_metrics.hpp"
#include "pcts/util.hpp"

namespace pcts::rerank {

namespace {

constexpr double kEps = 1e-7;
constexpr std::size_t kFeatureCount = 8;

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

struct ParamView {
    // Offsets into the flat parameter vector; see RerankerModel layout.
    std::size_t D, H, N;
    std::size_t w(std::size_t i, std::size_t j) const { return i * D + j; }
    std::size_t b(std::size_t i) const { return H * D + i; }
    std::size_t head(std::size_t k) const { return H * D + H + k * (H + 1); }
    std::size_t u(std::size_t k, std::size_t i) const { return head(k) + i; }
    std::size_t c(std::size_t k) const { return head(k) + H; }
};

ParamView view_of(const RerankerModel& model) {
    return ParamView{model.feature_dim, model.hidden_dim, model.metrics.size()};
}

void check_model(const RerankerModel& model) {
    if (model.feature_dim == 0 || model.hidden_dim == 0 || model.metrics.empty()) {
        throw std::invalid_argument("reranker model has empty dimensions");
    }
    if (model.params.size() != model.param_count()) {
        throw std::invalid_argument("reranker model parameter vector has wrong size");
    }
    for (double p : model.params) {
        if (!std::isfinite(p)) throw std::invalid_argument("reranker model has non-finite params");
    }
}

std::vector<double> hidden_layer(const RerankerModel& model, const ParamView& pv,
                                 const std::vector<double>& features) {
    std::vector<double> h(pv.H);
    for (std::size_t i = 0; i < pv.H; ++i) {
        double z = model.params[pv.b(i)];
        for (std::size_t j = 0; j < pv.D; ++j) z += model.params[pv.w(i, j)] * features[j];
        h[i] = std::tanh(z);
    }
    return h;
}

void check_example(const RerankTrainingExample& example) {
    if (example.candidates.empty()) {
        throw std::invalid_argument("rerank example has no candidates");
    }
    if (example.reference_summary.empty()) {
        throw std::invalid_argument("rerank example has empty reference summary");
    }
}

// Shared forward/backward pass; grad may be null for loss-only evaluation.
double loss_and_gradient(const RerankerModel& model,
                         const std::vector<RerankTrainingExample>& batch,
                         std::vector<double>* grad) {
    check_model(model);
    if (batch.empty()) throw std::invalid_argument("multi_metric_loss: empty batch");
    if (model.feature_dim != kFeatureCount) {
        throw std::invalid_argument("multi_metric_loss: model feature_dim does not match "
                                    "candidate_features output");
    }
    const ParamView pv = view_of(model);

    std::size_t total_candidates = 0;
    for (const auto& ex : batch) {
        check_example(ex);
        total_candidates += ex.candidates.size();
    }
    if (grad) grad->assign(model.params.size(), 0.0);

    const double cand_scale = 1.0 / static_cast<double>(total_candidates);
    const double metric_scale = 1.0 / static_cast<double>(pv.N);
    double loss = 0.0;

    for (const auto& ex : batch) {
        std::vector<std::vector<int>> labels(pv.N);
        for (std::size_t k = 0; k < pv.N; ++k) labels[k] = label_candidates(ex, model.metrics[k]);

        for (std::size_t ci = 0; ci < ex.candidates.size(); ++ci) {
            const auto features =
                candidate_features(ex.document, ex.candidates[ci], ci, ex.candidates.size());
            const auto h = hidden_layer(model, pv, features);
            std::vector<double> grad_h(pv.H, 0.0);

            for (std::size_t k = 0; k < pv.N; ++k) {
                double a = model.params[pv.c(k)];
                for (std::size_t i = 0; i < pv.H; ++i) a += model.params[pv.u(k, i)] * h[i];
                const double p = sigmoid(a);
                const int y = labels[k][ci];
                loss += metric_scale * cand_scale * bce_loss(p, y);
                if (!grad) continue;

                // d(bce)/da = p - y while the clamp is inactive, else 0.
                const double ga = (p > kEps && p < 1.0 - kEps)
                                      ? metric_scale * cand_scale * (p - y)
                                      : 0.0;
                (*grad)[pv.c(k)] += ga;
                for (std::size_t i = 0; i < pv.H; ++i) {
                    (*grad)[pv.u(k, i)] += ga * h[i];
                    grad_h[i] += ga * model.params[pv.u(k, i)];
                }
            }
            if (!grad) continue;
            for (std::size_t i = 0; i < pv.H; ++i) {
                const double gz = grad_h[i] * (1.0 - h[i] * h[i]);
                (*grad)[pv.b(i)] += gz;
                for (std::size_t j = 0; j < pv.D; ++j) (*grad)[pv.w(i, j)] += gz * features[j];
            }
        }
    }
    return loss;
}

}  // namespace

const std::vector<std::string>& metric_names() {
    static const std::vector<std::string> names = {"rouge1", "rouge2", "rougeL"};
    return names;
}

std::size_t feature_count() { return kFeatureCount; }

std::vector<double> RerankerModel::head_probabilities(const std::vector<double>& features) const {
    check_model(*this);
    if (features.size() != feature_dim) {
        throw std::invalid_argument("head_probabilities: feature dimension mismatch");
    }
    const ParamView pv = view_of(*this);
    const auto h = hidden_layer(*this, pv, features);
    std::vector<double> probs(pv.N);
    for (std::size_t k = 0; k < pv.N; ++k) {
        double a = params[pv.c(k)];
        for (std::size_t i = 0; i < pv.H; ++i) a += params[pv.u(k, i)] * h[i];
        probs[k] = sigmoid(a);
    }
    return probs;
}

std::vector<double> candidate_features(const std::string& document, const std::string& candidate,
                                       std::size_t position, std::size_t num_candidates) {
    const auto doc = metrics::tokenize(document);
    const auto cand = metrics::tokenize(candidate);
    const auto r1 = metrics::rouge_n(cand, doc, 1);
    const auto r2 = metrics::rouge_n(cand, doc, 2);
    const auto rl = metrics::rouge_l(cand, doc);
    const double norm_len = std::min(1.0, static_cast<double>(cand.size()) / 64.0);
    const double pos = num_candidates > 1
                           ? static_cast<double>(position) / static_cast<double>(num_candidates - 1)
                           : 0.0;
    return {r1.precision, r1.recall, r2.precision, r2.recall, rl.f1, norm_len, pos, 1.0};
}

MetricScores score_candidates(const RerankTrainingExample& example) {
    check_example(example);
    const auto ref = metrics::tokenize(example.reference_summary);
    MetricScores scores;
    for (const auto& name : metric_names()) scores.per_metric[name] = {};
    for (const auto& candidate : example.candidates) {
        const auto cand = metrics::tokenize(candidate);
        scores.per_metric["rouge1"].push_back(metrics::rouge_n(cand, ref, 1).f1);
        scores.per_metric["rouge2"].push_back(metrics::rouge_n(cand, ref, 2).f1);
        scores.per_metric["rougeL"].push_back(metrics::rouge_l(cand, ref).f1);
    }
    return scores;
}

std::vector<int> label_candidates(const RerankTrainingExample& example,
                                  const std::string& metric) {
    const auto& names = metric_names();
    if (std::find(names.begin(), names.end(), metric) == names.end()) {
        throw std::invalid_argument("label_candidates: unknown metric " + metric);
    }
    const auto scores = score_candidates(example).per_metric.at(metric);
    const double best = *std::max_element(scores.begin(), scores.end());
    std::vector<int> labels(scores.size(), 0);
    for (std::size_t i = 0; i < scores.size(); ++i) labels[i] = scores[i] == best ? 1 : 0;
    return labels;
}

double bce_loss(double prediction, int label) {
    if (label != 0 && label != 1) throw std::invalid_argument("bce_loss: label must be 0 or 1");
    const double p = std::clamp(prediction, kEps, 1.0 - kEps);
    return label == 1 ? -std::log(p) : -std::log(1.0 - p);
}

double multi_metric_loss(const RerankerModel& model,
                         const std::vector<RerankTrainingExample>& batch) {
    return loss_and_gradient(model, batch, nullptr);
}

std::pair<double, std::vector<double>> multi_metric_loss_gradient(
    const RerankerModel& model, const std::vector<RerankTrainingExample>& batch) {
    std::vector<double> grad;
    const double loss = loss_and_gradient(model, batch, &grad);
    return {loss, std::move(grad)};
}

RerankerModel train_reranker(const std::vector<RerankTrainingExample>& corpus,
                             const RerankTrainConfig& config,
                             std::vector<double>* loss_history) {
    if (corpus.empty()) throw std::invalid_argument("train_reranker: empty corpus");
    if (config.epochs < 0) throw std::invalid_argument("train_reranker: negative epochs");
    if (config.hidden_dim == 0) throw std::invalid_argument("train_reranker: hidden_dim is 0");

    RerankerModel model;
    model.feature_dim = kFeatureCount;
    model.hidden_dim = config.hidden_dim;
    model.metrics = metric_names();
    model.params.assign(model.param_count(), 0.0);

    Rng rng(derive_seed(config.seed, "reranker-init"));
    const ParamView pv = view_of(model);
    for (std::size_t i = 0; i < pv.H; ++i) {
        for (std::size_t j = 0; j < pv.D; ++j) {
            model.params[pv.w(i, j)] = 0.1 * rng.next_gaussian();
        }
    }
    for (std::size_t k = 0; k < pv.N; ++k) {
        for (std::size_t i = 0; i < pv.H; ++i) {
            model.params[pv.u(k, i)] = 0.1 * rng.next_gaussian();
        }
    }

    std::vector<double> adam_m(model.params.size(), 0.0);
    std::vector<double> adam_v(model.params.size(), 0.0);
    const double beta1 = 0.9, beta2 = 0.999, adam_eps = 1e-8;

    std::vector<double> best_params = model.params;
    double best_loss = multi_metric_loss(model, corpus);
    if (loss_history) loss_history->push_back(best_loss);

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        auto [loss, grad] = multi_metric_loss_gradient(model, corpus);
        if (!std::isfinite(loss)) {
            throw std::runtime_error("reranker training diverged at epoch " +
                                     std::to_string(epoch) + " (loss non-finite)");
        }
        const double t = epoch + 1;
        for (std::size_t i = 0; i < model.params.size(); ++i) {
            adam_m[i] = beta1 * adam_m[i] + (1.0 - beta1) * grad[i];
            adam_v[i] = beta2 * adam_v[i] + (1.0 - beta2) * grad[i] * grad[i];
            const double mhat = adam_m[i] / (1.0 - std::pow(beta1, t));
            const double vhat = adam_v[i] / (1.0 - std::pow(beta2, t));
            model.params[i] -= config.learning_rate * mhat / (std::sqrt(vhat) + adam_eps);
        }
        const double after = multi_metric_loss(model, corpus);
        if (loss_history) loss_history->push_back(after);
        if (after < best_loss) {
            best_loss = after;
            best_params = model.params;
        }
    }
    model.params = std::move(best_params);
    return model;
}

std::size_t argmax_mean(const std::vector<std::vector<double>>& head_probs) {
    if (head_probs.empty()) throw std::invalid_argument("argmax_mean: no candidates");
    std::size_t best = 0;
    double best_mean = -1.0;
    for (std::size_t i = 0; i < head_probs.size(); ++i) {
        if (head_probs[i].empty()) throw std::invalid_argument("argmax_mean: empty head row");
        double mean = 0.0;
        for (double p : head_probs[i]) mean += p;
        mean /= static_cast<double>(head_probs[i].size());
        if (mean > best_mean) {
            best_mean = mean;
            best = i;
        }
    }
    return best;
}

std::pair<std::size_t, std::string> select_best(const RerankerModel& model,
                                                const summary::SummaryCandidateSet& candidates,
                                                const std::string& document) {
    if (candidates.candidates.empty()) {
        throw std::invalid_argument("select_best: empty candidate set");
    }
    std::vector<std::vector<double>> head_probs;
    head_probs.reserve(candidates.candidates.size());
    for (std::size_t i = 0; i < candidates.candidates.size(); ++i) {
        head_probs.push_back(model.head_probabilities(candidate_features(
            document, candidates.candidates[i], i, candidates.candidates.size())));
    }
    const std::size_t idx = argmax_mean(head_probs);
    return {idx, candidates.candidates[idx]};
}

void save_model(const RerankerModel& model, const std::string& path) {
    check_model(model);
    std::ostringstream out;
    out << "pcts-reranker 1\n";
    out << "feature_dim " << model.feature_dim << "\n";
    out << "hidden_dim " << model.hidden_dim << "\n";
    out << "metrics";
    for (const auto& name : model.metrics) out << " " << name;
    out << "\nparams " << model.params.size() << "\n";
    out.precision(17);
    for (double p : model.params) out << p << "\n";
    write_file(path, out.str());
}

RerankerModel load_model(const std::string& path) {
    std::istringstream in(read_file(path));
    std::string magic;
    int version = 0;
    if (!(in >> magic >> version) || magic != "pcts-reranker" || version != 1) {
        throw ResourceError("model file " + path + ": not a reranker checkpoint");
    }
    RerankerModel model;
    std::string key;
    std::size_t param_count = 0;
    if (!(in >> key >> model.feature_dim) || key != "feature_dim") {
        throw ResourceError("model file " + path + ": missing feature_dim");
    }
    if (!(in >> key >> model.hidden_dim) || key != "hidden_dim") {
        throw ResourceError("model file " + path + ": missing hidden_dim");
    }
    if (!(in >> key) || key != "metrics") {
        throw ResourceError("model file " + path + ": missing metrics");
    }
    std::string token;
    while (in >> token && token != "params") model.metrics.push_back(token);
    if (token != "params" || !(in >> param_count)) {
        throw ResourceError("model file " + path + ": missing params section");
    }
    model.params.resize(param_count);
    for (std::size_t i = 0; i < param_count; ++i) {
        if (!(in >> model.params[i])) {
            throw ResourceError("model file " + path + ": truncated params");
        }
    }
    if (param_count != model.param_count()) {
        throw ResourceError("model file " + path + ": parameter count does not match dims");
    }
    check_model(model);
    return model;
}

}  // namespace pcts::rerank

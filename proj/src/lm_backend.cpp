#include "pcts/lm_backend.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "pcts/errors.hpp"
#include "pcts/util.hpp"

namespace pcts::lm {

namespace {

void check_normalized(const MaskDistribution& dist, const std::string& origin) {
    double total = 0.0;
    for (const auto& [word, p] : dist.word_probs) {
        if (!(p >= 0.0) || !std::isfinite(p)) {
            throw BackendError(origin + ": negative or non-finite probability for '" + word + "'");
        }
        total += p;
    }
    if (std::abs(total - 1.0) > 1e-6) {
        throw BackendError(origin + ": distribution sums to " + format_double(total, 8) +
                           ", expected 1");
    }
}

std::vector<std::string> whitespace_tokens(const std::string& text) {
    std::vector<std::string> tokens;
    std::istringstream in(text);
    std::string tok;
    while (in >> tok) tokens.push_back(tok);
    return tokens;
}

void sort_by_prob_desc(std::vector<std::pair<std::string, double>>& entries) {
    std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
}

MaskDistribution parse_dist(const nlohmann::json& obj, const std::string& origin) {
    MaskDistribution dist;
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        dist.word_probs[it.key()] = it.value().get<double>();
    }
    check_normalized(dist, origin);
    return dist;
}

}  // namespace

MaskDistribution mask_distribution(const prompts::RenderedPrompt& prompt,
                                   const MaskScorer& scorer) {
    const auto tokens = whitespace_tokens(prompt.text);
    if (prompt.mask_position >= tokens.size() ||
        tokens[prompt.mask_position] != scorer.mask_token()) {
        throw std::invalid_argument("mask_distribution: prompt was not rendered with scorer '" +
                                    scorer.name() + "' mask token " + scorer.mask_token());
    }
    MaskDistribution dist;
    try {
        dist = scorer.score(tokens, prompt.mask_position);
    } catch (const BackendError&) {
        throw;
    } catch (const std::exception& e) {
        throw BackendError("scorer '" + scorer.name() + "' failed on template " +
                           std::to_string(prompt.template_id) + ": " + e.what());
    }
    check_normalized(dist, "scorer '" + scorer.name() + "'");
    return dist;
}

double masked_window_loss(const std::vector<std::string>& prompt_tokens,
                          std::size_t center_index, int window,
                          const MaskScorer& scorer) {
    if (center_index >= prompt_tokens.size()) {
        throw std::invalid_argument("masked_window_loss: center index out of range");
    }
    if (window < 1) throw std::invalid_argument("masked_window_loss: window must be positive");

    const std::size_t lo =
        center_index >= static_cast<std::size_t>(window) ? center_index - window : 0;
    const std::size_t hi =
        std::min(prompt_tokens.size() - 1, center_index + static_cast<std::size_t>(window));

    double loss = 0.0;
    std::vector<std::string> masked = prompt_tokens;
    for (std::size_t j = lo; j <= hi; ++j) {
        const std::string truth = masked[j];
        masked[j] = scorer.mask_token();
        const MaskDistribution dist = scorer.score(masked, j);
        masked[j] = truth;
        loss += -std::log(std::max(dist.prob_of(truth), 1e-12));
    }
    return loss;
}

EmbeddingTable load_embeddings(const std::string& path) {
    const std::string body = read_file(path);
    std::istringstream in(body);
    EmbeddingTable table;
    std::size_t count = 0;
    if (!(in >> count >> table.dim) || table.dim == 0) {
        throw ResourceError("embedding file " + path + ": bad header, expected 'count dim'");
    }
    std::string word;
    while (in >> word) {
        std::vector<double> vec(table.dim);
        for (std::size_t i = 0; i < table.dim; ++i) {
            if (!(in >> vec[i])) {
                throw ResourceError("embedding file " + path + ": truncated vector for '" +
                                    word + "'");
            }
            if (!std::isfinite(vec[i])) {
                throw ResourceError("embedding file " + path + ": non-finite value for '" +
                                    word + "'");
            }
        }
        table.vectors[word] = std::move(vec);
    }
    if (table.vectors.size() != count) {
        throw ResourceError("embedding file " + path + ": header count " +
                            std::to_string(count) + " != " +
                            std::to_string(table.vectors.size()) + " rows");
    }
    return table;
}

double cosine_similarity(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) {
        throw std::invalid_argument("cosine_similarity: dimension mismatch");
    }
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) {
        throw std::invalid_argument("cosine_similarity: undefined for zero vector");
    }
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

FrequencyLexicon load_lexicon(const std::string& path) {
    const std::string body = read_file(path);
    FrequencyLexicon lex;
    for (const auto& raw : split(body, '\n')) {
        const std::string line = trim(raw);
        if (line.empty() || line[0] == '#') continue;
        std::istringstream in(line);
        std::string word;
        double z = 0.0;
        if (!(in >> word >> z) || !std::isfinite(z)) {
            throw ResourceError("lexicon file " + path + ": bad line: " + line);
        }
        lex.zipf[word] = z;
    }
    return lex;
}

double zipf_of(const std::string& word, const FrequencyLexicon& lexicon) {
    auto it = lexicon.zipf.find(word);
    return it == lexicon.zipf.end() ? 0.0 : it->second;
}

std::vector<std::pair<std::string, double>> ConceptBase::concepts_of(
    const std::string& instance) const {
    auto it = by_instance.find(instance);
    return it == by_instance.end() ? std::vector<std::pair<std::string, double>>{} : it->second;
}

std::vector<std::pair<std::string, double>> ConceptBase::instances_of(
    const std::string& concept_name) const {
    auto it = by_concept.find(concept_name);
    return it == by_concept.end() ? std::vector<std::pair<std::string, double>>{} : it->second;
}

ConceptBase load_concepts(const std::string& path) {
    const std::string body = read_file(path);
    ConceptBase kb;
    for (const auto& raw : split(body, '\n')) {
        const std::string line = trim(raw);
        if (line.empty() || line[0] == '#') continue;
        std::istringstream in(line);
        std::string instance, concept_name;
        double prob = 0.0;
        if (!(in >> instance >> concept_name >> prob)) {
            throw ResourceError("concept file " + path + ": bad line: " + line);
        }
        if (!(prob > 0.0) || prob > 1.0) {
            throw ResourceError("concept file " + path + ": probability outside (0,1]: " + line);
        }
        kb.by_instance[instance].emplace_back(concept_name, prob);
        kb.by_concept[concept_name].emplace_back(instance, prob);
    }
    for (auto& [_, entries] : kb.by_instance) sort_by_prob_desc(entries);
    for (auto& [_, entries] : kb.by_concept) sort_by_prob_desc(entries);
    return kb;
}

TableScorer TableScorer::from_file(const std::string& path) {
    return from_json_text(read_file(path), path);
}

TableScorer TableScorer::from_json_text(const std::string& text, const std::string& origin) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const std::exception& e) {
        throw ResourceError("scorer fixture " + origin + ": " + e.what());
    }
    TableScorer scorer;
    scorer.name_ = doc.value("name", std::string("table"));
    scorer.mask_token_ = doc.value("mask_token", std::string("[MASK]"));
    if (!doc.contains("default")) {
        throw ResourceError("scorer fixture " + origin + ": missing 'default' distribution");
    }
    scorer.default_dist_ = parse_dist(doc["default"], origin + " default");
    for (const auto& rule : doc.value("rules", nlohmann::json::array())) {
        if (!rule.contains("contains") || !rule.contains("dist")) {
            throw ResourceError("scorer fixture " + origin +
                                ": rule needs 'contains' and 'dist'");
        }
        scorer.rules_.push_back(Rule{rule["contains"].get<std::string>(),
                                     parse_dist(rule["dist"], origin + " rule")});
    }
    return scorer;
}

MaskDistribution TableScorer::score(const std::vector<std::string>& tokens,
                                    std::size_t mask_index) const {
    if (mask_index >= tokens.size() || tokens[mask_index] != mask_token_) {
        throw std::invalid_argument("TableScorer: mask token not at index " +
                                    std::to_string(mask_index));
    }
    const std::string text = join(tokens, " ");
    for (const auto& rule : rules_) {
        if (text.find(rule.contains) != std::string::npos) return rule.dist;
    }
    return default_dist_;
}

}  // namespace pcts::lm

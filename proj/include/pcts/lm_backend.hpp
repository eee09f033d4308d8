#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pcts/prompt_templates.hpp"

namespace pcts::lm {

struct MaskDistribution {
    std::map<std::string, double> word_probs;

    // Out-of-vocabulary words score 0 so averaging over label words proceeds.
    double prob_of(const std::string& word) const {
        auto it = word_probs.find(word);
        return it == word_probs.end() ? 0.0 : it->second;
    }
};

// Fills the mask slot of a wrapped input with a probability distribution over
// the backend vocabulary. Implementations must be deterministic.
class MaskScorer {
public:
    virtual ~MaskScorer() = default;
    virtual std::string name() const = 0;
    virtual std::string mask_token() const = 0;
    // tokens: whitespace tokens of the wrapped input; tokens[mask_index] must
    // equal mask_token(). Returns the distribution for that position.
    virtual MaskDistribution score(const std::vector<std::string>& tokens,
                                   std::size_t mask_index) const = 0;
    virtual bool concurrent_safe() const { return true; }
};

// Boundary wrapper: validates the prompt/scorer pairing and enforces the
// normalization invariant (probabilities >= 0, total within 1e-6 of 1).
MaskDistribution mask_distribution(const prompts::RenderedPrompt& prompt,
                                   const MaskScorer& scorer);

// Masks each window position in turn and sums -log p(true token). Window is
// [center-c, center+c] clipped to bounds, center included. Probabilities are
// floored at 1e-12 so unknown tokens yield a large finite penalty.
double masked_window_loss(const std::vector<std::string>& prompt_tokens,
                          std::size_t center_index, int window,
                          const MaskScorer& scorer);

struct EmbeddingTable {
    std::size_t dim = 0;
    std::map<std::string, std::vector<double>> vectors;

    bool contains(const std::string& word) const { return vectors.count(word) > 0; }
    const std::vector<double>* find(const std::string& word) const {
        auto it = vectors.find(word);
        return it == vectors.end() ? nullptr : &it->second;
    }
};

// Text format: first line "word_count dim", then one word + dim floats per line.
EmbeddingTable load_embeddings(const std::string& path);

double cosine_similarity(const std::vector<double>& a, const std::vector<double>& b);

struct FrequencyLexicon {
    std::map<std::string, double> zipf;
};

// Two-column text: word <TAB> zipf value.
FrequencyLexicon load_lexicon(const std::string& path);

double zipf_of(const std::string& word, const FrequencyLexicon& lexicon);

struct ConceptBase {
    // instance -> (concept, probability), kept sorted by descending probability
    // with lexicographic concept tie-break.
    std::map<std::string, std::vector<std::pair<std::string, double>>> by_instance;
    std::map<std::string, std::vector<std::pair<std::string, double>>> by_concept;

    std::vector<std::pair<std::string, double>> concepts_of(const std::string& instance) const;
    std::vector<std::pair<std::string, double>> instances_of(const std::string& concept_name) const;
};

// Three-column text: instance <TAB> concept <TAB> probability in (0,1].
ConceptBase load_concepts(const std::string& path);

// Table-driven scorer: a JSON fixture maps prompt substrings to planted
// distributions. First matching rule wins; "default" covers the rest.
class TableScorer : public MaskScorer {
public:
    static TableScorer from_file(const std::string& path);
    static TableScorer from_json_text(const std::string& text, const std::string& origin);

    std::string name() const override { return name_; }
    std::string mask_token() const override { return mask_token_; }
    MaskDistribution score(const std::vector<std::string>& tokens,
                           std::size_t mask_index) const override;

private:
    struct Rule {
        std::string contains;
        MaskDistribution dist;
    };
    std::string name_;
    std::string mask_token_;
    MaskDistribution default_dist_;
    std::vector<Rule> rules_;
};

}  // namespace pcts::lm

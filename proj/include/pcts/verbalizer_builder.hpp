#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "pcts/lm_backend.hpp"
#include "pcts/prompt_templates.hpp"

namespace pcts::verbalizer {

enum class Strategy { concepts, mlm_prediction, embedding_similarity, frequency, context };

std::string strategy_name(Strategy s);
Strategy strategy_from_name(const std::string& name);
const std::vector<Strategy>& all_strategies();

struct ScoredWord {
    std::string word;
    double score = 0.0;
};

// ranked_words are best first; for the context strategy the score is the
// negated window loss so "descending score" still means "best first".
struct StrategyResult {
    Strategy strategy = Strategy::concepts;
    std::vector<ScoredWord> ranked_words;
};

struct Verbalizer {
    std::vector<std::string> labels;  // declaration order, ties in scoring break to the first
    std::map<std::string, std::vector<std::string>> label_words;
    // label -> word -> contributing strategy names; the always-included label
    // name may have an empty set.
    std::map<std::string, std::map<std::string, std::set<std::string>>> provenance;
    int n_a = 15;
};

// True when word is a morphological variant of label: shared 4-byte prefix or
// equal stems after suffix stripping. The label name itself is not a variant.
bool is_derivation(const std::string& word, const std::string& label);

// Knowledge-base concepts for the label, re-ranked by cosine similarity to the
// label vector. Concepts without an embedding vector are dropped, as are
// variants of the label itself. Scores are cosine similarities.
StrategyResult strategy_concepts(const std::string& label_name, const lm::ConceptBase& kb,
                                 const lm::EmbeddingTable& embeddings, int n_a);

// Top vocabulary words by mask probability; lexicographic tie-break.
StrategyResult strategy_mlm(const prompts::RenderedPrompt& prompt, const lm::MaskScorer& scorer,
                            int n_a);

// Pool ranked by cosine similarity to the label vector; vectorless words are
// excluded; lexicographic tie-break.
StrategyResult strategy_embedding(const std::string& label_name,
                                  const std::vector<std::string>& pool,
                                  const lm::EmbeddingTable& embeddings, int n_a);

// Pool ranked by Zipf frequency, unknown words last; stable on ties.
StrategyResult strategy_frequency(const std::vector<std::string>& pool,
                                  const lm::FrequencyLexicon& lexicon, int n_a);

// Pool ranked by masked-window loss of substituting each word at the mask,
// lowest loss first; lexicographic tie-break.
StrategyResult strategy_context(const std::vector<std::string>& prompt_tokens,
                                std::size_t mask_index, const std::vector<std::string>& pool,
                                const lm::MaskScorer& scorer, int window, int n_a);

// Union with provenance. The label name always opens V_y; remaining words are
// ordered by (contributing strategies desc, best strategy rank asc, word).
// Words equal to or derived from another label are excluded. min_votes > 1
// keeps only words contributed by at least that many strategies.
Verbalizer integrate(const std::map<std::string, std::vector<StrategyResult>>& results_per_label,
                     const std::vector<std::string>& label_names, int n_a, int min_votes = 1);

struct BuilderResources {
    const lm::ConceptBase* kb = nullptr;
    const lm::EmbeddingTable* embeddings = nullptr;
    const lm::FrequencyLexicon* lexicon = nullptr;
    const lm::MaskScorer* scorer = nullptr;
};

struct BuilderConfig {
    std::vector<std::string> labels;
    std::vector<Strategy> strategies = all_strategies();
    int n_a = 15;
    int window_c = 5;
    int min_votes = 1;
    prompts::PromptTemplate anchor_template;  // rendered with the label name in both text slots
};

// Runs the selected strategies per label and integrates. The candidate pool
// for the frequency/embedding/context strategies is the union of the concept
// retrieval and MLM prediction outputs, which are the two word sources.
Verbalizer build_verbalizer(const BuilderResources& resources, const BuilderConfig& config);

// Canonical text form; the fingerprint hashes it, so equal serializations
// mean equal verbalizers.
std::string serialize_verbalizer(const Verbalizer& v);
std::string verbalizer_hash(const Verbalizer& v);
void save_verbalizer(const Verbalizer& v, const std::string& path);
Verbalizer load_verbalizer(const std::string& path);

}  // namespace pcts::verbalizer

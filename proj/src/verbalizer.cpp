#include "pcts/verbalizer_builder.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <sstream>
#include <stdexcept>

#include "pcts/errors.hpp"
#include "pcts/util.hpp"

namespace pcts::verbalizer {

namespace {

const std::vector<std::string>& strategy_names() {
    static const std::vector<std::string> names = {
        "concepts", "mlm_prediction", "embedding_similarity", "frequency", "context"};
    return names;
}

void check_cap(int n_a) {
    if (n_a < 1) throw std::invalid_argument("per-strategy cap n_a must be at least 1");
}

std::vector<std::string> dedupe_keep_order(const std::vector<std::string>& words) {
    std::vector<std::string> out;
    for (const auto& w : words) {
        if (!w.empty() && std::find(out.begin(), out.end(), w) == out.end()) out.push_back(w);
    }
    return out;
}

void truncate(std::vector<ScoredWord>& words, int n_a) {
    if (words.size() > static_cast<std::size_t>(n_a)) words.resize(static_cast<std::size_t>(n_a));
}

std::string stem(const std::string& word) {
    static const std::vector<std::string> suffixes = {"ing", "ers", "ies",
                                                      "ed",  "es",  "er", "ly", "s"};
    for (const auto& suf : suffixes) {
        if (word.size() > suf.size() + 2 && word.ends_with(suf)) {
            return word.substr(0, word.size() - suf.size());
        }
    }
    return word;
}

bool vector_usable(const std::vector<double>* vec) {
    if (!vec) return false;
    for (double x : *vec) {
        if (x != 0.0) return true;
    }
    return false;
}

}  // namespace

std::string strategy_name(Strategy s) { return strategy_names()[static_cast<std::size_t>(s)]; }

Strategy strategy_from_name(const std::string& name) {
    const auto& names = strategy_names();
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (names[i] == name) return static_cast<Strategy>(i);
    }
    throw std::invalid_argument("unknown verbalizer strategy: " + name);
}

const std::vector<Strategy>& all_strategies() {
    static const std::vector<Strategy> all = {Strategy::concepts, Strategy::mlm_prediction,
                                              Strategy::embedding_similarity, Strategy::frequency,
                                              Strategy::context};
    return all;
}

bool is_derivation(const std::string& word, const std::string& label) {
    if (word.empty() || label.empty() || word == label) return false;
    if (word.size() >= 4 && label.size() >= 4 && word.compare(0, 4, label, 0, 4) == 0) return true;
    return stem(word) == stem(label);
}

StrategyResult strategy_concepts(const std::string& label_name, const lm::ConceptBase& kb,
                                 const lm::EmbeddingTable& embeddings, int n_a) {
    check_cap(n_a);
    const auto* label_vec = embeddings.find(label_name);
    if (!vector_usable(label_vec)) {
        throw std::invalid_argument("strategy_concepts: label '" + label_name +
                                    "' missing from embedding table");
    }
    StrategyResult result{Strategy::concepts, {}};
    for (const auto& [concept_name, nv] : kb.concepts_of(label_name)) {
        (void)nv;  // retrieval order already encodes N(v)
        if (is_derivation(concept_name, label_name)) continue;
        const auto* vec = embeddings.find(concept_name);
        if (!vector_usable(vec)) continue;
        result.ranked_words.push_back({concept_name, lm::cosine_similarity(*label_vec, *vec)});
    }
    // Stable: equal similarities keep the N(v) retrieval order.
    std::stable_sort(result.ranked_words.begin(), result.ranked_words.end(),
                     [](const ScoredWord& a, const ScoredWord& b) { return a.score > b.score; });
    truncate(result.ranked_words, n_a);
    return result;
}

StrategyResult strategy_mlm(const prompts::RenderedPrompt& prompt, const lm::MaskScorer& scorer,
                            int n_a) {
    check_cap(n_a);
    const auto dist = lm::mask_distribution(prompt, scorer);
    StrategyResult result{Strategy::mlm_prediction, {}};
    for (const auto& [word, prob] : dist.word_probs) {
        result.ranked_words.push_back({word, prob});
    }
    std::sort(result.ranked_words.begin(), result.ranked_words.end(),
              [](const ScoredWord& a, const ScoredWord& b) {
                  if (a.score != b.score) return a.score > b.score;
                  return a.word < b.word;
              });
    truncate(result.ranked_words, n_a);
    return result;
}

StrategyResult strategy_embedding(const std::string& label_name,
                                  const std::vector<std::string>& pool,
                                  const lm::EmbeddingTable& embeddings, int n_a) {
    check_cap(n_a);
    const auto* label_vec = embeddings.find(label_name);
    if (!vector_usable(label_vec)) {
        throw std::invalid_argument("strategy_embedding: label '" + label_name +
                                    "' missing from embedding table");
    }
    StrategyResult result{Strategy::embedding_similarity, {}};
    for (const auto& word : dedupe_keep_order(pool)) {
        const auto* vec = embeddings.find(word);
        if (!vector_usable(vec)) continue;
        result.ranked_words.push_back({word, lm::cosine_similarity(*label_vec, *vec)});
    }
    std::sort(result.ranked_words.begin(), result.ranked_words.end(),
              [](const ScoredWord& a, const ScoredWord& b) {
                  if (a.score != b.score) return a.score > b.score;
                  return a.word < b.word;
              });
    truncate(result.ranked_words, n_a);
    return result;
}

StrategyResult strategy_frequency(const std::vector<std::string>& pool,
                                  const lm::FrequencyLexicon& lexicon, int n_a) {
    check_cap(n_a);
    StrategyResult result{Strategy::frequency, {}};
    for (const auto& word : dedupe_keep_order(pool)) {
        result.ranked_words.push_back({word, lm::zipf_of(word, lexicon)});
    }
    // Stable: unknown words (Zipf 0) and exact ties keep pool order.
    std::stable_sort(result.ranked_words.begin(), result.ranked_words.end(),
                     [](const ScoredWord& a, const ScoredWord& b) { return a.score > b.score; });
    truncate(result.ranked_words, n_a);
    return result;
}

StrategyResult strategy_context(const std::vector<std::string>& prompt_tokens,
                                std::size_t mask_index, const std::vector<std::string>& pool,
                                const lm::MaskScorer& scorer, int window, int n_a) {
    check_cap(n_a);
    if (mask_index >= prompt_tokens.size()) {
        throw std::invalid_argument("strategy_context: mask index out of range");
    }
    StrategyResult result{Strategy::context, {}};
    std::vector<std::string> tokens = prompt_tokens;
    for (const auto& word : dedupe_keep_order(pool)) {
        tokens[mask_index] = word;
        const double loss = lm::masked_window_loss(tokens, mask_index, window, scorer);
        result.ranked_words.push_back({word, -loss});  // lower loss ranks first
    }
    tokens[mask_index] = prompt_tokens[mask_index];
    std::sort(result.ranked_words.begin(), result.ranked_words.end(),
              [](const ScoredWord& a, const ScoredWord& b) {
                  if (a.score != b.score) return a.score > b.score;
                  return a.word < b.word;
              });
    truncate(result.ranked_words, n_a);
    return result;
}

Verbalizer integrate(const std::map<std::string, std::vector<StrategyResult>>& results_per_label,
                     const std::vector<std::string>& label_names, int n_a, int min_votes) {
    check_cap(n_a);
    if (label_names.empty()) throw std::invalid_argument("integrate: no labels");
    if (min_votes < 1) throw std::invalid_argument("integrate: min_votes must be at least 1");
    for (const auto& label : label_names) {
        if (std::count(label_names.begin(), label_names.end(), label) != 1) {
            throw std::invalid_argument("integrate: duplicate label " + label);
        }
    }

    Verbalizer v;
    v.labels = label_names;
    v.n_a = n_a;

    for (const auto& label : label_names) {
        struct Entry {
            std::set<std::string> strategies;
            std::size_t best_rank = SIZE_MAX;
        };
        std::map<std::string, Entry> entries;

        auto it = results_per_label.find(label);
        if (it != results_per_label.end()) {
            for (const auto& result : it->second) {
                if (result.ranked_words.size() > static_cast<std::size_t>(n_a)) {
                    throw std::invalid_argument("integrate: strategy " +
                                                strategy_name(result.strategy) +
                                                " exceeds the n_a cap");
                }
                for (std::size_t rank = 0; rank < result.ranked_words.size(); ++rank) {
                    const auto& word = result.ranked_words[rank].word;
                    if (word.empty()) continue;
                    bool conflicts = false;
                    for (const auto& other : label_names) {
                        if (other == label) continue;
                        if (word == other || is_derivation(word, other)) {
                            conflicts = true;
                            break;
                        }
                    }
                    if (conflicts) continue;
                    auto& entry = entries[word];
                    entry.strategies.insert(strategy_name(result.strategy));
                    entry.best_rank = std::min(entry.best_rank, rank);
                }
            }
        }

        std::vector<std::string> ordered;
        std::vector<std::pair<std::string, Entry>> rest;
        for (auto& [word, entry] : entries) {
            if (word == label) continue;
            if (static_cast<int>(entry.strategies.size()) < min_votes) continue;
            rest.emplace_back(word, entry);
        }
        std::sort(rest.begin(), rest.end(), [](const auto& a, const auto& b) {
            if (a.second.strategies.size() != b.second.strategies.size()) {
                return a.second.strategies.size() > b.second.strategies.size();
            }
            if (a.second.best_rank != b.second.best_rank) {
                return a.second.best_rank < b.second.best_rank;
            }
            return a.first < b.first;
        });

        ordered.push_back(label);  // the label name always opens its word set
        v.provenance[label][label] = entries.count(label) ? entries[label].strategies
                                                          : std::set<std::string>{};
        for (auto& [word, entry] : rest) {
            ordered.push_back(word);
            v.provenance[label][word] = entry.strategies;
        }
        v.label_words[label] = std::move(ordered);
    }
    return v;
}

Verbalizer build_verbalizer(const BuilderResources& resources, const BuilderConfig& config) {
    check_cap(config.n_a);
    if (config.labels.empty()) throw std::invalid_argument("build_verbalizer: no labels");
    if (config.window_c < 1) throw std::invalid_argument("build_verbalizer: window must be >= 1");

    const auto selected = [&](Strategy s) {
        return std::find(config.strategies.begin(), config.strategies.end(), s) !=
               config.strategies.end();
    };
    if (selected(Strategy::concepts) && (!resources.kb || !resources.embeddings)) {
        throw ResourceError("strategy concepts requires a concept base and an embedding table");
    }
    if (selected(Strategy::mlm_prediction) && !resources.scorer) {
        throw ResourceError("strategy mlm_prediction requires a mask scorer");
    }
    if (selected(Strategy::embedding_similarity) && !resources.embeddings) {
        throw ResourceError("strategy embedding_similarity requires an embedding table");
    }
    if (selected(Strategy::frequency) && !resources.lexicon) {
        throw ResourceError("strategy frequency requires a frequency lexicon");
    }
    if (selected(Strategy::context) && !resources.scorer) {
        throw ResourceError("strategy context requires a mask scorer");
    }

    prompts::PromptTemplate anchor = config.anchor_template;
    if (anchor.pattern.empty()) anchor = prompts::template_by_id(3);

    std::map<std::string, std::vector<StrategyResult>> results;
    for (const auto& label : config.labels) {
        // Word sources: concept retrieval and MLM prediction feed the pool the
        // ranking-only strategies select from.
        StrategyResult concepts_result{Strategy::concepts, {}};
        const bool label_embedded =
            resources.embeddings && resources.embeddings->contains(label);
        if (selected(Strategy::concepts)) {
            concepts_result = strategy_concepts(label, *resources.kb, *resources.embeddings,
                                                config.n_a);
        } else if (resources.kb && resources.embeddings && label_embedded) {
            concepts_result = strategy_concepts(label, *resources.kb, *resources.embeddings,
                                                config.n_a);
        }

        StrategyResult mlm_result{Strategy::mlm_prediction, {}};
        prompts::RenderedPrompt anchor_prompt;
        bool have_prompt = false;
        if (resources.scorer) {
            anchor_prompt = prompts::render(anchor, label, label, resources.scorer->mask_token());
            have_prompt = true;
            mlm_result = strategy_mlm(anchor_prompt, *resources.scorer, config.n_a);
        }

        std::vector<std::string> pool;
        for (const auto& sw : concepts_result.ranked_words) pool.push_back(sw.word);
        for (const auto& sw : mlm_result.ranked_words) pool.push_back(sw.word);
        pool = dedupe_keep_order(pool);

        std::vector<StrategyResult>& label_results = results[label];
        for (Strategy s : all_strategies()) {
            if (!selected(s)) continue;
            switch (s) {
                case Strategy::concepts:
                    label_results.push_back(concepts_result);
                    break;
                case Strategy::mlm_prediction:
                    label_results.push_back(mlm_result);
                    break;
                case Strategy::embedding_similarity:
                    label_results.push_back(
                        strategy_embedding(label, pool, *resources.embeddings, config.n_a));
                    break;
                case Strategy::frequency:
                    label_results.push_back(
                        strategy_frequency(pool, *resources.lexicon, config.n_a));
                    break;
                case Strategy::context: {
                    if (!have_prompt) {
                        throw ResourceError("strategy context requires a mask scorer");
                    }
                    std::istringstream in(anchor_prompt.text);
                    std::vector<std::string> tokens;
                    std::string tok;
                    while (in >> tok) tokens.push_back(tok);
                    label_results.push_back(strategy_context(tokens, anchor_prompt.mask_position,
                                                             pool, *resources.scorer,
                                                             config.window_c, config.n_a));
                    break;
                }
            }
        }
    }
    return integrate(results, config.labels, config.n_a, config.min_votes);
}

std::string serialize_verbalizer(const Verbalizer& v) {
    std::ostringstream out;
    out << "# pcts-verbalizer 1\n";
    out << "# n_a " << v.n_a << "\n";
    out << "# labels";
    for (const auto& label : v.labels) out << "\t" << label;
    out << "\n";
    static const std::map<std::string, std::set<std::string>> no_provenance;
    for (const auto& label : v.labels) {
        auto words_it = v.label_words.find(label);
        if (words_it == v.label_words.end()) {
            throw std::invalid_argument("serialize_verbalizer: label '" + label + "' has no words");
        }
        const auto& words = words_it->second;
        auto prov_it = v.provenance.find(label);
        const auto& prov_by_word = prov_it == v.provenance.end() ? no_provenance : prov_it->second;
        for (std::size_t rank = 0; rank < words.size(); ++rank) {
            out << label << "\t" << words[rank] << "\t" << rank << "\t";
            auto it = prov_by_word.find(words[rank]);
            if (it == prov_by_word.end() || it->second.empty()) {
                out << "-";
            } else {
                bool first = true;
                for (const auto& s : it->second) {
                    if (!first) out << ",";
                    out << s;
                    first = false;
                }
            }
            out << "\n";
        }
    }
    return out.str();
}

std::string verbalizer_hash(const Verbalizer& v) {
    std::ostringstream out;
    out << std::hex;
    out.width(16);
    out.fill('0');
    out << fnv1a64(serialize_verbalizer(v));
    return out.str();
}

void save_verbalizer(const Verbalizer& v, const std::string& path) {
    write_file(path, serialize_verbalizer(v));
}

Verbalizer load_verbalizer(const std::string& path) {
    const std::string body = read_file(path);
    const auto lines = split(body, '\n');
    Verbalizer v;
    bool magic_seen = false;
    for (const auto& raw : lines) {
        const std::string line = trim(raw);
        if (line.empty()) continue;
        if (line[0] == '#') {
            const auto fields = split(line, '\t');
            if (line.rfind("# pcts-verbalizer", 0) == 0) {
                magic_seen = true;
            } else if (line.rfind("# n_a ", 0) == 0) {
                v.n_a = std::stoi(line.substr(6));
            } else if (fields[0] == "# labels") {
                v.labels.assign(fields.begin() + 1, fields.end());
            }
            continue;
        }
        const auto fields = split(line, '\t');
        if (fields.size() != 4) {
            throw ResourceError("verbalizer file " + path + ": bad row: " + line);
        }
        const std::string& label = fields[0];
        const std::string& word = fields[1];
        v.label_words[label].push_back(word);
        std::set<std::string> prov;
        if (fields[3] != "-") {
            for (const auto& s : split(fields[3], ',')) prov.insert(s);
        }
        v.provenance[label][word] = std::move(prov);
    }
    if (!magic_seen) throw ResourceError("verbalizer file " + path + ": missing header");
    if (v.labels.empty()) throw ResourceError("verbalizer file " + path + ": missing labels");
    for (const auto& label : v.labels) {
        if (!v.label_words.count(label) || v.label_words.at(label).empty()) {
            throw ResourceError("verbalizer file " + path + ": label '" + label + "' has no words");
        }
    }
    return v;
}

}  // namespace pcts::verbalizer

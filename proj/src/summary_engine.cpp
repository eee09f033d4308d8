#include "pcts/summary_engine.hpp"

#include <algorithm>
#include <stdexcept>

#include <json.hpp>

#include "pcts/errors.hpp"
#include "pcts/text_metrics.hpp"
#include "pcts/util.hpp"

namespace pcts::summary {

std::string mode_name(DecodingMode mode) {
    switch (mode) {
        case DecodingMode::beam: return "beam";
        case DecodingMode::diverse_beam: return "diverse_beam";
        case DecodingMode::extractive_fallback: return "extractive_fallback";
    }
    throw std::invalid_argument("mode_name: unknown decoding mode");
}

DecodingMode mode_from_name(const std::string& name) {
    if (name == "beam") return DecodingMode::beam;
    if (name == "diverse_beam") return DecodingMode::diverse_beam;
    if (name == "extractive_fallback") return DecodingMode::extractive_fallback;
    throw std::invalid_argument("unknown decoding mode: " + name);
}

namespace {

// Sentences end at '.', '!' or '?' runs; the terminator stays attached.
std::vector<std::string> split_sentences(const std::string& content) {
    std::vector<std::string> sentences;
    std::string cur;
    for (std::size_t i = 0; i < content.size(); ++i) {
        const char c = content[i];
        cur.push_back(c);
        const bool at_end = (c == '.' || c == '!' || c == '?') &&
                            (i + 1 == content.size() || content[i + 1] == ' ' ||
                             content[i + 1] == '\n' || content[i + 1] == '\t' ||
                             content[i + 1] == '\r');
        if (at_end) {
            const std::string sentence = trim(cur);
            if (!metrics::tokenize(sentence).empty()) sentences.push_back(sentence);
            cur.clear();
        }
    }
    const std::string tail = trim(cur);
    if (!metrics::tokenize(tail).empty()) sentences.push_back(tail);
    return sentences;
}

}  // namespace

std::vector<std::string> extractive_fallback(const std::string& content, int m, int max_words) {
    if (m < 1) throw std::invalid_argument("extractive_fallback: m must be positive");
    if (max_words < 1) throw std::invalid_argument("extractive_fallback: max_words must be positive");

    const auto sentences = split_sentences(content);
    std::vector<std::size_t> word_counts;
    word_counts.reserve(sentences.size());
    for (const auto& s : sentences) word_counts.push_back(metrics::tokenize(s).size());

    std::vector<std::string> candidates;
    const std::size_t limit = std::min<std::size_t>(static_cast<std::size_t>(m), sentences.size());
    for (std::size_t start = 0; start < limit; ++start) {
        std::string candidate = sentences[start];
        std::size_t words = word_counts[start];
        for (std::size_t j = start + 1; j < sentences.size(); ++j) {
            if (words + word_counts[j] > static_cast<std::size_t>(max_words)) break;
            candidate += " " + sentences[j];
            words += word_counts[j];
        }
        candidates.push_back(std::move(candidate));
    }
    return candidates;
}

std::vector<std::string> ExtractiveFallbackGenerator::generate(
    const std::string& content, const GeneratorConfig& config) const {
    return extractive_fallback(content, config.num_candidates, config.max_summary_words);
}

std::unique_ptr<SummaryGenerator> make_generator(const std::string& name) {
    if (name == "extractive_fallback") return std::make_unique<ExtractiveFallbackGenerator>();
    throw ResourceError("unknown generator backend '" + name +
                        "' (known: extractive_fallback)");
}

SummaryCandidateSet generate_candidates(const std::string& content, const GeneratorConfig& config,
                                        const SummaryGenerator& backend,
                                        const std::string& source_id) {
    if (config.num_candidates < 1) {
        throw std::invalid_argument("generate_candidates: num_candidates must be positive");
    }
    if (metrics::tokenize(content).empty()) {
        throw std::invalid_argument("generate_candidates: content is empty");
    }

    std::vector<std::string> raw;
    try {
        raw = backend.generate(content, config);
    } catch (const std::invalid_argument&) {
        throw;
    } catch (const std::exception& e) {
        throw BackendError("generator '" + backend.name() + "' failed: " + e.what());
    }

    SummaryCandidateSet set;
    set.source_id = source_id;
    const std::string mode = mode_name(config.decoding_mode);
    set.generator_tag = backend.name() == mode ? mode : backend.name() + ":" + mode;
    for (auto& c : raw) {
        if (std::find(set.candidates.begin(), set.candidates.end(), c) == set.candidates.end()) {
            set.candidates.push_back(std::move(c));
        }
        if (set.candidates.size() == static_cast<std::size_t>(config.num_candidates)) break;
    }
    if (set.candidates.empty()) {
        throw BackendError("generator '" + backend.name() + "' produced no candidates");
    }
    return set;
}

std::string to_jsonl_record(const SummaryCandidateSet& set) {
    nlohmann::json obj;
    obj["id"] = set.source_id;
    obj["generator_tag"] = set.generator_tag;
    obj["candidates"] = set.candidates;
    return obj.dump();
}

SummaryCandidateSet from_jsonl_record(const std::string& line) {
    nlohmann::json obj;
    try {
        obj = nlohmann::json::parse(line);
    } catch (const std::exception& e) {
        throw ResourceError(std::string("bad candidate record: ") + e.what());
    }
    SummaryCandidateSet set;
    set.source_id = obj.value("id", std::string());
    set.generator_tag = obj.value("generator_tag", std::string());
    for (const auto& c : obj.value("candidates", nlohmann::json::array())) {
        set.candidates.push_back(c.get<std::string>());
    }
    if (set.candidates.empty()) throw ResourceError("candidate record with no candidates");
    return set;
}

}  // namespace pcts::summary

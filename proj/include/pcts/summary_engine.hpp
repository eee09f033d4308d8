#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace pcts::summary {

enum class DecodingMode { beam, diverse_beam, extractive_fallback };

std::string mode_name(DecodingMode mode);
DecodingMode mode_from_name(const std::string& name);

struct GeneratorConfig {
    int num_candidates = 8;
    DecodingMode decoding_mode = DecodingMode::extractive_fallback;
    int max_summary_words = 41;
    std::uint64_t seed = 0;
};

struct SummaryCandidateSet {
    std::string source_id;
    std::vector<std::string> candidates;
    std::string generator_tag;
};

class SummaryGenerator {
public:
    virtual ~SummaryGenerator() = default;
    virtual std::string name() const = 0;
    virtual std::vector<std::string> generate(const std::string& content,
                                              const GeneratorConfig& config) const = 0;
    virtual bool concurrent_safe() const { return true; }
};

// Lead-window extractive candidates: candidate i concatenates sentences from
// sentence i onward, greedily extended while the word budget allows. Always
// includes at least one sentence, so a single long sentence may exceed the
// budget. Returns at most min(m, sentence count) candidates.
std::vector<std::string> extractive_fallback(const std::string& content, int m, int max_words);

class ExtractiveFallbackGenerator : public SummaryGenerator {
public:
    std::string name() const override { return "extractive_fallback"; }
    std::vector<std::string> generate(const std::string& content,
                                      const GeneratorConfig& config) const override;
};

// Known backends: "extractive_fallback". Unknown names raise ResourceError.
std::unique_ptr<SummaryGenerator> make_generator(const std::string& name);

// Exact-duplicate candidates are dropped; at most config.num_candidates kept.
SummaryCandidateSet generate_candidates(const std::string& content, const GeneratorConfig& config,
                                        const SummaryGenerator& backend,
                                        const std::string& source_id = "");

// One JSON object per line: {"id":..., "generator_tag":..., "candidates":[...]}.
std::string to_jsonl_record(const SummaryCandidateSet& set);
SummaryCandidateSet from_jsonl_record(const std::string& line);

}  // namespace pcts::summary

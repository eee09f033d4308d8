#include "pcts/text_metrics.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>

namespace pcts::metrics {

namespace {

bool is_word_byte(unsigned char c) {
    return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
           c >= 0x80;
}

RougeScore from_counts(double overlap, double cand_total, double ref_total) {
    RougeScore s;
    if (cand_total > 0) s.precision = overlap / cand_total;
    if (ref_total > 0) s.recall = overlap / ref_total;
    if (s.precision + s.recall > 0) s.f1 = 2.0 * s.precision * s.recall / (s.precision + s.recall);
    return s;
}

}  // namespace

TokenSequence tokenize(std::string_view text) {
    TokenSequence tokens;
    std::string cur;
    for (unsigned char c : text) {
        if (is_word_byte(c)) {
            if (c >= 'A' && c <= 'Z') c = static_cast<unsigned char>(c - 'A' + 'a');
            cur.push_back(static_cast<char>(c));
        } else if (!cur.empty()) {
            tokens.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) tokens.push_back(std::move(cur));
    return tokens;
}

RougeScore rouge_n(const TokenSequence& candidate, const TokenSequence& reference, int n) {
    if (n < 1) throw std::invalid_argument("rouge_n: n must be at least 1");
    const auto un = static_cast<std::size_t>(n);
    if (candidate.size() < un || reference.size() < un) return {};

    std::map<std::vector<std::string>, long> ref_counts;
    for (std::size_t i = 0; i + un <= reference.size(); ++i) {
        ++ref_counts[{reference.begin() + static_cast<std::ptrdiff_t>(i),
                      reference.begin() + static_cast<std::ptrdiff_t>(i + un)}];
    }

    // Clipped count: each reference n-gram occurrence is matched at most once.
    long overlap = 0;
    for (std::size_t i = 0; i + un <= candidate.size(); ++i) {
        std::vector<std::string> gram(candidate.begin() + static_cast<std::ptrdiff_t>(i),
                                      candidate.begin() + static_cast<std::ptrdiff_t>(i + un));
        auto it = ref_counts.find(gram);
        if (it != ref_counts.end() && it->second > 0) {
            --it->second;
            ++overlap;
        }
    }
    return from_counts(static_cast<double>(overlap),
                       static_cast<double>(candidate.size() - un + 1),
                       static_cast<double>(reference.size() - un + 1));
}

std::size_t lcs_length(const TokenSequence& a, const TokenSequence& b) {
    if (a.empty() || b.empty()) return 0;
    std::vector<std::size_t> prev(b.size() + 1, 0);
    std::vector<std::size_t> cur(b.size() + 1, 0);
    for (std::size_t i = 1; i <= a.size(); ++i) {
        for (std::size_t j = 1; j <= b.size(); ++j) {
            cur[j] = (a[i - 1] == b[j - 1]) ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

RougeScore rouge_l(const TokenSequence& candidate, const TokenSequence& reference) {
    if (candidate.empty() || reference.empty()) return {};
    const auto lcs = static_cast<double>(lcs_length(candidate, reference));
    return from_counts(lcs, static_cast<double>(candidate.size()),
                       static_cast<double>(reference.size()));
}

}  // namespace pcts::metrics

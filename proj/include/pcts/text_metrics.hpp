#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace pcts::metrics {

using TokenSequence = std::vector<std::string>;

struct RougeScore {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

// Lowercases and splits on anything that is not an ASCII alphanumeric byte.
// Bytes >= 0x80 are kept so multibyte UTF-8 words survive intact.
TokenSequence tokenize(std::string_view text);

// Clipped n-gram overlap. Sequences shorter than n score zero everywhere.
RougeScore rouge_n(const TokenSequence& candidate, const TokenSequence& reference, int n);

RougeScore rouge_l(const TokenSequence& candidate, const TokenSequence& reference);

std::size_t lcs_length(const TokenSequence& a, const TokenSequence& b);

}  // namespace pcts::metrics

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace pcts::data {

struct Document {
    std::string id;
    std::string headline;
    std::string content;
    std::optional<int> label;         // 1 = clickbait, 0 = news
    std::optional<double> truth_mean; // annotator mean in [0,1] when present
};

// "more than 0.5": exactly 0.5 maps to 0.
int label_from_truth_mean(double truth_mean);

struct LoaderStats {
    std::size_t loaded = 0;
    std::size_t skipped = 0;
    double avg_content_words = 0.0;
};

// Line-delimited JSON records: id, postText (string or array), targetParagraphs
// (array), truthMean. Malformed records are skipped and counted, not fatal.
std::vector<Document> load_webis(const std::string& path, LoaderStats* stats = nullptr);

// Tab-separated: headline, body, label (0/1), optional header row. Row ids are
// "line-<N>" with N the 1-based line number.
std::vector<Document> load_news_clickbait(const std::string& path, LoaderStats* stats = nullptr);

struct FewShotSplit {
    int k_shot = 0;
    std::uint64_t seed = 0;
    std::vector<Document> train;  // k_shot per class
    std::vector<Document> test;   // every remaining labeled document
};

// Class-balanced sample without replacement, k_shot in {5, 10, 20}.
// Unlabeled documents are excluded from both sides.
FewShotSplit sample_few_shot(const std::vector<Document>& docs, int k_shot, std::uint64_t seed);

// Audit manifest: seed, k, and the exact train/test id lists.
void save_split_manifest(const FewShotSplit& split, const std::string& path);

}  // namespace pcts::data

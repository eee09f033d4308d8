#include "pcts/datasets.hpp"

#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "pcts/errors.hpp"
#include "pcts/random.hpp"
#include "pcts/text_metrics.hpp"
#include "pcts/util.hpp"

namespace pcts::data {

namespace {

std::string join_text(const nlohmann::json& value) {
    if (value.is_string()) return value.get<std::string>();
    if (value.is_array()) {
        std::string out;
        for (const auto& part : value) {
            if (!part.is_string()) continue;
            if (!out.empty()) out += " ";
            out += part.get<std::string>();
        }
        return out;
    }
    return "";
}

void finish_stats(LoaderStats* stats, const std::vector<Document>& docs, std::size_t skipped) {
    if (!stats) return;
    stats->loaded = docs.size();
    stats->skipped = skipped;
    double words = 0.0;
    for (const auto& d : docs) words += static_cast<double>(metrics::tokenize(d.content).size());
    stats->avg_content_words = docs.empty() ? 0.0 : words / static_cast<double>(docs.size());
}

}  // namespace

int label_from_truth_mean(double truth_mean) {
    if (truth_mean < 0.0 || truth_mean > 1.0) {
        throw std::invalid_argument("truth_mean outside [0,1]");
    }
    return truth_mean > 0.5 ? 1 : 0;
}

std::vector<Document> load_webis(const std::string& path, LoaderStats* stats) {
    const std::string body = read_file(path);
    std::vector<Document> docs;
    std::size_t skipped = 0;
    for (const auto& raw : split(body, '\n')) {
        const std::string line = trim(raw);
        if (line.empty()) continue;
        nlohmann::json obj;
        try {
            obj = nlohmann::json::parse(line);
        } catch (const std::exception&) {
            ++skipped;
            continue;
        }
        if (!obj.is_object() || !obj.contains("id")) {
            ++skipped;
            continue;
        }
        Document doc;
        doc.id = obj["id"].is_string() ? obj["id"].get<std::string>()
                                       : nlohmann::to_string(obj["id"]);
        doc.headline = trim(join_text(obj.value("postText", nlohmann::json())));
        doc.content = trim(join_text(obj.value("targetParagraphs", nlohmann::json())));
        if (doc.headline.empty()) {
            ++skipped;
            continue;
        }
        if (obj.contains("truthMean")) {
            if (!obj["truthMean"].is_number()) {
                ++skipped;
                continue;
            }
            const double mean = obj["truthMean"].get<double>();
            if (mean < 0.0 || mean > 1.0) {
                ++skipped;
                continue;
            }
            doc.truth_mean = mean;
            doc.label = label_from_truth_mean(mean);
        }
        docs.push_back(std::move(doc));
    }
    finish_stats(stats, docs, skipped);
    return docs;
}

std::vector<Document> load_news_clickbait(const std::string& path, LoaderStats* stats) {
    const std::string body = read_file(path);
    std::vector<Document> docs;
    std::size_t skipped = 0;
    std::size_t line_no = 0;
    for (const auto& raw : split(body, '\n')) {
        ++line_no;
        if (trim(raw).empty()) continue;
        const auto fields = split(raw, '\t');
        if (fields.size() != 3) {
            ++skipped;
            continue;
        }
        const std::string headline = trim(fields[0]);
        const std::string label_text = trim(fields[2]);
        if (line_no == 1 && label_text != "0" && label_text != "1") continue;  // header row
        if (headline.empty() || (label_text != "0" && label_text != "1")) {
            ++skipped;
            continue;
        }
        Document doc;
        doc.id = "line-" + std::to_string(line_no);
        doc.headline = headline;
        doc.content = trim(fields[1]);
        doc.label = label_text == "1" ? 1 : 0;
        docs.push_back(std::move(doc));
    }
    finish_stats(stats, docs, skipped);
    return docs;
}

FewShotSplit sample_few_shot(const std::vector<Document>& docs, int k_shot, std::uint64_t seed) {
    if (k_shot != 5 && k_shot != 10 && k_shot != 20) {
        throw std::invalid_argument("k_shot must be 5, 10 or 20");
    }
    std::vector<std::size_t> negatives, positives;
    for (std::size_t i = 0; i < docs.size(); ++i) {
        if (!docs[i].label) continue;
        (*docs[i].label == 1 ? positives : negatives).push_back(i);
    }
    const auto k = static_cast<std::size_t>(k_shot);
    if (negatives.size() < k || positives.size() < k) {
        throw std::invalid_argument(
            "sample_few_shot: a class has fewer than k_shot labeled documents (have " +
            std::to_string(negatives.size()) + " negative, " + std::to_string(positives.size()) +
            " positive)");
    }

    Rng rng(derive_seed(seed, "few-shot"));
    FewShotSplit split;
    split.k_shot = k_shot;
    split.seed = seed;

    std::vector<bool> in_train(docs.size(), false);
    for (auto* pool : {&negatives, &positives}) {
        std::vector<std::size_t> order = *pool;
        rng.shuffle(order);
        for (std::size_t i = 0; i < k; ++i) {
            split.train.push_back(docs[order[i]]);
            in_train[order[i]] = true;
        }
    }
    for (std::size_t i = 0; i < docs.size(); ++i) {
        if (docs[i].label && !in_train[i]) split.test.push_back(docs[i]);
    }
    return split;
}

void save_split_manifest(const FewShotSplit& split, const std::string& path) {
    std::ostringstream out;
    out << "# pcts-split 1\n";
    out << "# k_shot " << split.k_shot << "\n";
    out << "# seed " << split.seed << "\n";
    for (const auto& d : split.train) out << "train\t" << d.id << "\n";
    for (const auto& d : split.test) out << "test\t" << d.id << "\n";
    write_file(path, out.str());
}

}  // namespace pcts::data

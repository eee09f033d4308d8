#include <doctest.h>

#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "pcts/cli.hpp"
#include "pcts/detector.hpp"
#include "pcts/reranker.hpp"
#include "pcts/summary_engine.hpp"
#include "pcts/util.hpp"
#include "pcts/verbalizer_builder.hpp"

namespace fs = std::filesystem;

namespace {

std::string fixture(const std::string& name) {
    return std::string(PCTS_FIXTURE_DIR) + "/" + name;
}

int run_cli(const std::vector<std::string>& args) {
    std::vector<const char*> argv = {"pcts"};
    for (const auto& a : args) argv.push_back(a.c_str());
    return pcts::cli::run(static_cast<int>(argv.size()), argv.data());
}

// Fresh per-test scratch directory under the test working directory.
std::string scratch(const std::string& name) {
    const std::string dir = "cli_scratch_" + name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::vector<std::string> nonempty_lines(const std::string& path) {
    std::vector<std::string> lines;
    for (const auto& line : pcts::split(pcts::read_file(path), '\n')) {
        if (!pcts::trim(line).empty()) lines.push_back(line);
    }
    return lines;
}

struct EnvGuard {
    std::string key;
    EnvGuard(const std::string& k, const std::string& value) : key(k) {
        ::setenv(key.c_str(), value.c_str(), 1);
    }
    ~EnvGuard() { ::unsetenv(key.c_str()); }
};

}  // namespace

TEST_CASE("usage errors exit with code two, help with zero") {
    CHECK(run_cli({"--help"}) == 0);
    CHECK(run_cli({"detect", "--help"}) == 0);
    CHECK(run_cli({}) == 2);                        // a subcommand is required
    CHECK(run_cli({"frobnicate"}) == 2);
    CHECK(run_cli({"detect", "--no-such-flag"}) == 2);
}

TEST_CASE("missing resources exit with code two") {
    CHECK(run_cli({"detect"}) == 2);  // no dataset
    CHECK(run_cli({"detect", "--dataset", fixture("news3.tsv")}) == 2);  // no verbalizer
    CHECK(run_cli({"detect", "--dataset", fixture("news3.tsv"), "--verbalizer",
                   fixture("e2e_verbalizer.tsv")}) == 2);  // no scorer
    CHECK(run_cli({"detect", "--dataset", fixture("news3.tsv"), "--verbalizer",
                   fixture("e2e_verbalizer.tsv"), "--scorer", fixture("e2e_scorer.json"),
                   "--backend", "quantum"}) == 2);
    CHECK(run_cli({"detect", "--dataset", fixture("missing.tsv"), "--verbalizer",
                   fixture("e2e_verbalizer.tsv"), "--scorer", fixture("e2e_scorer.json")}) == 2);
    CHECK(run_cli({"detect", "--dataset", fixture("news3.tsv"), "--verbalizer",
                   fixture("e2e_verbalizer.tsv"), "--scorer", fixture("e2e_scorer.json"),
                   "--template", "99"}) == 2);
}

TEST_CASE("print-config short-circuits before any work") {
    CHECK(run_cli({"detect", "--print-config"}) == 0);
    CHECK(run_cli({"eval", "--print-config", "--shots", "10"}) == 0);
}

TEST_CASE("summarize writes candidate and selection records") {
    const auto dir = scratch("summarize");
    CHECK(run_cli({"summarize", "--dataset", fixture("news3.tsv"), "--out", dir}) == 0);

    const auto candidates = nonempty_lines(dir + "/candidates.jsonl");
    const auto selections = nonempty_lines(dir + "/selections.jsonl");
    REQUIRE(candidates.size() == 3);
    REQUIRE(selections.size() == 3);

    const auto set = pcts::summary::from_jsonl_record(candidates[0]);
    CHECK(set.source_id == "line-1");
    CHECK_FALSE(set.candidates.empty());

    const auto sel = nlohmann::json::parse(selections[0]);
    CHECK(sel["id"] == "line-1");
    CHECK(sel["selector"] == "lead");
    CHECK(sel["selected_index"] == 0);
    CHECK_FALSE(sel["summary"].get<std::string>().empty());
}

TEST_CASE("build-verbalizer persists the integrated word sets") {
    const auto dir = scratch("buildverb");
    const std::string out = dir + "/verbalizer.tsv";
    CHECK(run_cli({"build-verbalizer", "--embeddings", fixture("embeddings.vec"), "--lexicon",
                   fixture("lexicon.tsv"), "--concepts", fixture("concepts.tsv"), "--scorer",
                   fixture("builder_scorer.json"), "--labels", "clickbait,news", "--out",
                   out}) == 0);

    const auto verb = pcts::verbalizer::load_verbalizer(out);
    CHECK(verb.labels == std::vector<std::string>{"clickbait", "news"});
    CHECK(verb.label_words.at("clickbait") ==
          std::vector<std::string>{"clickbait", "misleading", "headline", "sensational",
                                   "hyperlink", "teaser", "zzfiller"});
    CHECK(verb.label_words.at("news") ==
          std::vector<std::string>{"news", "report", "article", "broadcast", "journalism",
                                   "zzfiller"});

    // A single-strategy build through the same flags.
    const std::string mlm_out = dir + "/verbalizer_mlm.tsv";
    CHECK(run_cli({"build-verbalizer", "--embeddings", fixture("embeddings.vec"), "--lexicon",
                   fixture("lexicon.tsv"), "--concepts", fixture("concepts.tsv"), "--scorer",
                   fixture("builder_scorer.json"), "--labels", "clickbait,news", "--strategies",
                   "mlm_prediction", "--out", mlm_out}) == 0);
    const auto mlm_verb = pcts::verbalizer::load_verbalizer(mlm_out);
    CHECK(mlm_verb.label_words.at("clickbait") ==
          std::vector<std::string>{"clickbait", "misleading", "headline", "teaser", "zzfiller"});

    // Missing resources for a selected strategy are a resource error.
    CHECK(run_cli({"build-verbalizer", "--scorer", fixture("builder_scorer.json"), "--labels",
                   "clickbait,news"}) == 2);
}

TEST_CASE("detect writes one record per document") {
    const auto dir = scratch("detect");
    const std::string out = dir + "/detections.jsonl";
    CHECK(run_cli({"detect", "--dataset", fixture("news20.tsv"), "--verbalizer",
                   fixture("e2e_verbalizer.tsv"), "--scorer", fixture("e2e_scorer.json"),
                   "--template", "3", "--mode", "ours", "--out", out}) == 0);

    const auto lines = nonempty_lines(out);
    REQUIRE(lines.size() == 20);
    int clickbait = 0;
    for (const auto& line : lines) {
        const auto record = pcts::detector::detection_record_from_jsonl(line);
        CHECK(record.template_id == 3);
        CHECK_FALSE(record.verbalizer_hash.empty());
        if (record.predicted == "clickbait") ++clickbait;
    }
    CHECK(clickbait == 10);

    // The summaryless and raw-content modes also run end to end.
    CHECK(run_cli({"detect", "--dataset", fixture("news20.tsv"), "--verbalizer",
                   fixture("e2e_verbalizer.tsv"), "--scorer", fixture("e2e_scorer.json"),
                   "--mode=-summary", "--out", dir + "/nosummary.jsonl"}) == 0);
    CHECK(run_cli({"detect", "--dataset", fixture("news20.tsv"), "--verbalizer",
                   fixture("e2e_verbalizer.tsv"), "--scorer", fixture("e2e_scorer.json"),
                   "--mode", "original_news", "--out", dir + "/fullcontent.jsonl"}) == 0);
    CHECK(nonempty_lines(dir + "/nosummary.jsonl").size() == 20);
}

TEST_CASE("detect survives a vocabulary with no verbalizer words") {
    const auto dir = scratch("degenerate");
    const std::string scorer_path = dir + "/oov_scorer.json";
    pcts::write_file(scorer_path, R"({"mask_token":"[MASK]","default":{"unrelated":1.0}})");
    const std::string out = dir + "/detections.jsonl";
    CHECK(run_cli({"detect", "--dataset", fixture("news3.tsv"), "--verbalizer",
                   fixture("e2e_verbalizer.tsv"), "--scorer", scorer_path, "--out", out}) == 0);
    const auto lines = nonempty_lines(out);
    REQUIRE(lines.size() == 3);
    for (const auto& line : lines) {
        // Every label ties at zero; the first verbalizer label wins.
        CHECK(pcts::detector::detection_record_from_jsonl(line).predicted == "clickbait");
    }
}

TEST_CASE("detect consumes precomputed summaries by document id") {
    const auto dir = scratch("precomputed");
    const std::string summaries = dir + "/selections.jsonl";
    {
        std::ofstream out(summaries);
        out << R"({"id":"line-1","summary":"alpha recap"})" << "\n";
        out << R"({"id":"line-2","summary":"beta recap"})" << "\n";
        out << R"({"id":"line-3","summary":"beta recap"})" << "\n";
    }
    CHECK(run_cli({"detect", "--dataset", fixture("news3.tsv"), "--verbalizer",
                   fixture("e2e_verbalizer.tsv"), "--scorer", fixture("e2e_scorer.json"),
                   "--summaries", summaries, "--out", dir + "/detections.jsonl"}) == 0);
    CHECK(nonempty_lines(dir + "/detections.jsonl").size() == 3);

    // A dataset id missing from the summaries file is a resource error.
    {
        std::ofstream out(summaries);
        out << R"({"id":"line-1","summary":"alpha recap"})" << "\n";
    }
    CHECK(run_cli({"detect", "--dataset", fixture("news3.tsv"), "--verbalizer",
                   fixture("e2e_verbalizer.tsv"), "--scorer", fixture("e2e_scorer.json"),
                   "--summaries", summaries, "--out", dir + "/detections.jsonl"}) == 2);
}

TEST_CASE("train writes a detector head and split manifest") {
    const auto dir = scratch("train");
    const std::string head_path = dir + "/head.txt";
    const std::string manifest = dir + "/split.txt";
    CHECK(run_cli({"train", "--dataset", fixture("news20.tsv"), "--verbalizer",
                   fixture("e2e_verbalizer.tsv"), "--scorer", fixture("e2e_scorer.json"),
                   "--template", "3", "--shots", "5", "--seed", "2", "--epochs", "3",
                   "--batch-size", "4", "--dropout", "0.0", "--manifest", manifest, "--out",
                   head_path}) == 0);

    const auto head = pcts::detector::load_head(head_path);
    CHECK(head.labels == std::vector<std::string>{"clickbait", "news"});
    CHECK(head.bias.size() == 2);
    CHECK(pcts::read_file(manifest).rfind("# pcts-split 1\n", 0) == 0);

    // Shot counts outside {5, 10, 20} are rejected.
    CHECK(run_cli({"train", "--dataset", fixture("news20.tsv"), "--verbalizer",
                   fixture("e2e_verbalizer.tsv"), "--scorer", fixture("e2e_scorer.json"),
                   "--shots", "7", "--out", head_path}) == 2);
}

TEST_CASE("rerank-train fits a model loadable from disk") {
    const auto dir = scratch("reranktrain");
    const std::string corpus = dir + "/corpus.jsonl";
    {
        std::ofstream out(corpus);
        nlohmann::json a;
        a["document"] = "The council met on Tuesday. The vote passed narrowly. Funding rose.";
        a["candidates"] = {"The council met on Tuesday.", "Unrelated filler text entirely.",
                           "Budget chatter beside the point."};
        a["reference_summary"] = "The council met on Tuesday.";
        out << a.dump() << "\n";
        nlohmann::json b;
        b["document"] = "Crews finished the bridge deck. Traffic resumed at dawn. Repairs hold.";
        b["candidates"] = {"Paint dried on the fence.", "Crews finished the bridge deck."};
        b["reference"] = "Crews finished the bridge deck.";
        out << b.dump() << "\n";
    }
    const std::string model_path = dir + "/reranker.model";
    CHECK(run_cli({"rerank-train", "--corpus", corpus, "--rerank-epochs", "5", "--out",
                   model_path}) == 0);
    CHECK_NOTHROW(pcts::rerank::load_model(model_path));

    CHECK(run_cli({"rerank-train"}) == 2);  // corpus is mandatory
    pcts::write_file(dir + "/bad.jsonl", "not json\n");
    CHECK(run_cli({"rerank-train", "--corpus", dir + "/bad.jsonl"}) == 2);
}

TEST_CASE("eval scores recorded detections against gold labels") {
    const auto dir = scratch("evalrecords");
    const std::string records = dir + "/detections.jsonl";
    REQUIRE(run_cli({"detect", "--dataset", fixture("news20.tsv"), "--verbalizer",
                     fixture("e2e_verbalizer.tsv"), "--scorer", fixture("e2e_scorer.json"),
                     "--out", records}) == 0);

    const std::string table = dir + "/eval.tsv";
    CHECK(run_cli({"eval", "--dataset", fixture("news20.tsv"), "--records", records, "--out",
                   table}) == 0);
    const auto lines = nonempty_lines(table);
    REQUIRE(lines.size() == 3);  // header, the records row, the mean row
    CHECK(lines[1].find("\trecords\t") != std::string::npos);
    CHECK(lines[1].find("\t1.000000\t") != std::string::npos);
    CHECK(lines[1].find("\t10\t0\t10\t0\tok") != std::string::npos);
    CHECK(fs::exists(table + ".jsonl"));

    // Records referencing documents outside the dataset are rejected.
    CHECK(run_cli({"eval", "--dataset", fixture("news3.tsv"), "--records", records}) == 2);
}

TEST_CASE("eval runs the full experiment and the mode ablation") {
    const auto dir = scratch("evalruns");
    const std::string table = dir + "/report.tsv";
    CHECK(run_cli({"eval", "--dataset", fixture("news20.tsv"), "--verbalizer",
                   fixture("e2e_verbalizer.tsv"), "--scorer", fixture("e2e_scorer.json"),
                   "--template", "3", "--shots", "5", "--seeds", "1,2", "--mode", "ours",
                   "--epochs", "2", "--batch-size", "4", "--dropout", "0.0", "--out",
                   table}) == 0);
    auto lines = nonempty_lines(table);
    REQUIRE(lines.size() == 4);  // header, two seeds, mean
    CHECK(lines[1].rfind("news20.tsv\t5\tours\t3\t1\t1.000000\t", 0) == 0);
    CHECK(lines[3].find("\tmean\t1.000000\t") != std::string::npos);

    const std::string ablation = dir + "/ablation.tsv";
    CHECK(run_cli({"eval", "--dataset", fixture("news20.tsv"), "--verbalizer",
                   fixture("e2e_verbalizer.tsv"), "--scorer", fixture("e2e_scorer.json"),
                   "--template", "3", "--shots", "5", "--seeds", "1", "--mode", "all",
                   "--epochs", "2", "--batch-size", "4", "--dropout", "0.0", "--out",
                   ablation}) == 0);
    lines = nonempty_lines(ablation);
    REQUIRE(lines.size() == 7);  // header plus (seed + mean) per mode
    CHECK(lines[1].find("\tours\t") != std::string::npos);
    CHECK(lines[3].find("\t-summary\t") != std::string::npos);
    CHECK(lines[5].find("\toriginal_news\t") != std::string::npos);
}

TEST_CASE("sweep writes the table and per-metric plot data") {
    const auto dir = scratch("sweep");
    CHECK(run_cli({"sweep", "--dataset", fixture("news20.tsv"), "--verbalizer",
                   fixture("e2e_verbalizer.tsv"), "--scorer", fixture("e2e_scorer.json"),
                   "--shots", "5", "--seeds", "1", "--epochs", "2", "--batch-size", "4",
                   "--dropout", "0.0", "--axis", "learning_rate", "--grid", "0.001,0.01",
                   "--out", dir}) == 0);
    CHECK(fs::exists(dir + "/sweep_table.tsv"));
    const auto dat = pcts::read_file(dir + "/sweep_learning_rate_accuracy.dat");
    CHECK(dat == "0.00100000\t1.000000\n0.01000000\t1.000000\n");
    CHECK(fs::exists(dir + "/sweep_learning_rate_f1.dat"));

    CHECK(run_cli({"sweep", "--dataset", fixture("news20.tsv"), "--verbalizer",
                   fixture("e2e_verbalizer.tsv"), "--scorer", fixture("e2e_scorer.json"),
                   "--axis", "learning_rate"}) == 2);  // no grid
}

TEST_CASE("config files apply beneath explicit flags") {
    const auto dir = scratch("config");
    const std::string config_path = dir + "/config.json";
    nlohmann::json config;
    config["dataset"] = fixture("news20.tsv");
    config["out"] = dir + "/from_config";
    pcts::write_file(config_path, config.dump());

    CHECK(run_cli({"summarize", "--config", config_path}) == 0);
    CHECK(nonempty_lines(dir + "/from_config/selections.jsonl").size() == 20);

    CHECK(run_cli({"summarize", "--config", config_path, "--dataset", fixture("news3.tsv"),
                   "--out", dir + "/from_flags"}) == 0);
    CHECK(nonempty_lines(dir + "/from_flags/selections.jsonl").size() == 3);

    CHECK(run_cli({"summarize", "--config", dir + "/missing.json"}) == 2);
    pcts::write_file(dir + "/broken.json", "{not json");
    CHECK(run_cli({"summarize", "--config", dir + "/broken.json"}) == 2);
}

TEST_CASE("the resource root environment variable anchors relative paths") {
    const auto dir = scratch("envroot");
    EnvGuard guard("PCTS_RESOURCE_ROOT", std::string(PCTS_FIXTURE_DIR));
    CHECK(run_cli({"detect", "--dataset", "news3.tsv", "--verbalizer", "e2e_verbalizer.tsv",
                   "--scorer", "e2e_scorer.json", "--out", dir + "/detections.jsonl"}) == 0);
    CHECK(nonempty_lines(dir + "/detections.jsonl").size() == 3);
}

TEST_CASE("custom template files are honored by id") {
    const auto dir = scratch("templates");
    CHECK(run_cli({"detect", "--dataset", fixture("news3.tsv"), "--verbalizer",
                   fixture("e2e_verbalizer.tsv"), "--scorer", fixture("e2e_scorer.json"),
                   "--templates-file", fixture("templates.tsv"), "--template", "8", "--out",
                   dir + "/detections.jsonl"}) == 0);
    const auto lines = nonempty_lines(dir + "/detections.jsonl");
    REQUIRE(lines.size() == 3);
    CHECK(pcts::detector::detection_record_from_jsonl(lines[0]).template_id == 8);

    // An id absent from the file is a resource error.
    CHECK(run_cli({"detect", "--dataset", fixture("news3.tsv"), "--verbalizer",
                   fixture("e2e_verbalizer.tsv"), "--scorer", fixture("e2e_scorer.json"),
                   "--templates-file", fixture("templates.tsv"), "--template", "3"}) == 2);
}

#include <doctest.h>

#include <json.hpp>

#include <stdexcept>
#include <string>
#include <vector>

#include "pcts/errors.hpp"
#include "pcts/eval_harness.hpp"
#include "pcts/random.hpp"
#include "pcts/util.hpp"

using pcts::eval::ConfusionCounts;
using pcts::eval::SummaryMode;

namespace {

std::string fixture(const std::string& name) {
    return std::string(PCTS_FIXTURE_DIR) + "/" + name;
}

class BombGenerator : public pcts::summary::SummaryGenerator {
public:
    std::string name() const override { return "bomb"; }
    std::vector<std::string> generate(const std::string&,
                                      const pcts::summary::GeneratorConfig&) const override {
        throw std::runtime_error("generator invoked where no summary is needed");
    }
};

// Bundles the planted fixtures: "alpha" headlines score clickbait 0.3 vs news
// 0.1, "beta" headlines the reverse, so a zero head is already perfect.
struct PlantedPipeline {
    std::vector<pcts::data::Document> docs;
    pcts::verbalizer::Verbalizer verb;
    pcts::lm::TableScorer scorer;
    pcts::eval::PipelineComponents components;

    PlantedPipeline()
        : docs(pcts::data::load_news_clickbait(fixture("news20.tsv"))),
          verb(pcts::verbalizer::load_verbalizer(fixture("e2e_verbalizer.tsv"))),
          scorer(pcts::lm::TableScorer::from_file(fixture("e2e_scorer.json"))) {
        components.documents = &docs;
        components.verb = &verb;
        components.scorer = &scorer;
        components.trainer.epochs = 3;
        components.trainer.batch_size = 4;
        components.trainer.dropout = 0.0;
        components.trainer.learning_rate = 0.01;
    }

    pcts::eval::ExperimentSpec spec() const {
        pcts::eval::ExperimentSpec s;
        s.dataset_id = "news20";
        s.shots = 5;
        s.seeds = {1, 2, 3};
        s.template_id = 3;
        return s;
    }
};

pcts::data::Document doc_with(const std::string& content) {
    pcts::data::Document d;
    d.id = "d1";
    d.headline = "Some headline";
    d.content = content;
    d.label = 1;
    return d;
}

}  // namespace

TEST_CASE("metrics handles the perfect, coin-flip and one-class cases") {
    const auto perfect = pcts::eval::metrics({5, 0, 5, 0});
    CHECK(perfect.accuracy == 1.0);
    CHECK(perfect.precision == 1.0);
    CHECK(perfect.recall == 1.0);
    CHECK(perfect.f1 == 1.0);

    const auto half = pcts::eval::metrics({1, 1, 1, 1});
    CHECK(half.accuracy == 0.5);
    CHECK(half.precision == 0.5);
    CHECK(half.recall == 0.5);
    CHECK(half.f1 == 0.5);

    // All-negative data: accuracy is perfect, the positive-class scores are
    // zero by the zero-denominator convention.
    const auto negatives = pcts::eval::metrics({0, 0, 4, 0});
    CHECK(negatives.accuracy == 1.0);
    CHECK(negatives.precision == 0.0);
    CHECK(negatives.recall == 0.0);
    CHECK(negatives.f1 == 0.0);

    CHECK_THROWS_AS(pcts::eval::metrics(ConfusionCounts{}), std::invalid_argument);
    CHECK_THROWS_AS(pcts::eval::metrics({-1, 1, 1, 1}), std::invalid_argument);
}

TEST_CASE("weighted_metrics averages both classes by support") {
    const ConfusionCounts counts{3, 1, 4, 2};
    const auto w = pcts::eval::weighted_metrics(counts);
    CHECK(w.accuracy == doctest::Approx(0.7));
    CHECK(w.precision == doctest::Approx((5.0 * 0.75 + 5.0 * (2.0 / 3.0)) / 10.0));
    CHECK(w.recall == doctest::Approx(0.7));
    CHECK(w.f1 == doctest::Approx((5.0 * (2.0 / 3.0) + 5.0 * (8.0 / 11.0)) / 10.0));

    // Balanced symmetric counts collapse to the binary numbers.
    const auto sym = pcts::eval::weighted_metrics({4, 1, 4, 1});
    const auto bin = pcts::eval::metrics({4, 1, 4, 1});
    CHECK(sym.precision == doctest::Approx(bin.precision));
    CHECK(sym.recall == doctest::Approx(bin.recall));

    CHECK_THROWS_AS(pcts::eval::weighted_metrics(ConfusionCounts{}), std::invalid_argument);
}

TEST_CASE("count_confusion matches direct counting on random labels") {
    pcts::Rng rng(20260814);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = 1 + rng.bounded(40);
        std::vector<int> predicted(n), gold(n);
        long tp = 0, fp = 0, tn = 0, fn = 0;
        for (std::size_t i = 0; i < n; ++i) {
            predicted[i] = static_cast<int>(rng.bounded(2));
            gold[i] = static_cast<int>(rng.bounded(2));
            if (predicted[i] == 1 && gold[i] == 1) ++tp;
            if (predicted[i] == 1 && gold[i] == 0) ++fp;
            if (predicted[i] == 0 && gold[i] == 0) ++tn;
            if (predicted[i] == 0 && gold[i] == 1) ++fn;
        }
        const auto counts = pcts::eval::count_confusion(predicted, gold);
        CHECK(counts.tp == tp);
        CHECK(counts.fp == fp);
        CHECK(counts.tn == tn);
        CHECK(counts.fn == fn);
        CHECK(counts.total() == static_cast<long>(n));
    }

    CHECK_THROWS_AS(pcts::eval::count_confusion({1}, {1, 0}), std::invalid_argument);
    CHECK_THROWS_AS(pcts::eval::count_confusion({}, {}), std::invalid_argument);
    CHECK_THROWS_AS(pcts::eval::count_confusion({2}, {1}), std::invalid_argument);
}

TEST_CASE("summary mode labels round trip with aliases") {
    CHECK(pcts::eval::mode_label(SummaryMode::summary) == "ours");
    CHECK(pcts::eval::mode_label(SummaryMode::no_summary) == "-summary");
    CHECK(pcts::eval::mode_label(SummaryMode::full_content) == "original_news");
    CHECK(pcts::eval::mode_from_label("ours") == SummaryMode::summary);
    CHECK(pcts::eval::mode_from_label("summary") == SummaryMode::summary);
    CHECK(pcts::eval::mode_from_label("-summary") == SummaryMode::no_summary);
    CHECK(pcts::eval::mode_from_label("no_summary") == SummaryMode::no_summary);
    CHECK(pcts::eval::mode_from_label("original_news") == SummaryMode::full_content);
    CHECK(pcts::eval::mode_from_label("full_content") == SummaryMode::full_content);
    CHECK_THROWS_AS(pcts::eval::mode_from_label("headline_only"), std::invalid_argument);
}

TEST_CASE("summary_text_for fills the slot according to the mode") {
    pcts::eval::PipelineComponents components;
    const auto doc = doc_with("Alpha beta gamma. Second sentence here.");

    CHECK(pcts::eval::summary_text_for(doc, SummaryMode::no_summary, components) ==
          "(no summary)");

    components.full_content_budget = 3;
    CHECK(pcts::eval::summary_text_for(doc, SummaryMode::full_content, components) ==
          "Alpha beta gamma.");
    components.full_content_budget = 128;
    CHECK(pcts::eval::summary_text_for(doc, SummaryMode::full_content, components) ==
          "Alpha beta gamma. Second sentence here.");

    const auto single = doc_with("Only one sentence here.");
    CHECK(pcts::eval::summary_text_for(single, SummaryMode::summary, components) ==
          "Only one sentence here.");

    const auto empty = doc_with("");
    CHECK(pcts::eval::summary_text_for(empty, SummaryMode::summary, components) ==
          "(no summary)");
    CHECK(pcts::eval::summary_text_for(empty, SummaryMode::full_content, components) ==
          "(no summary)");

    components.no_summary_sentinel = "(none)";
    CHECK(pcts::eval::summary_text_for(doc, SummaryMode::no_summary, components) == "(none)");
}

TEST_CASE("summary_text_for in the summaryless mode never runs a generator") {
    pcts::eval::PipelineComponents components;
    const BombGenerator bomb;
    components.generator = &bomb;
    const auto doc = doc_with("Plenty of content. More of it.");
    CHECK(pcts::eval::summary_text_for(doc, SummaryMode::no_summary, components) ==
          "(no summary)");
    CHECK(pcts::eval::summary_text_for(doc, SummaryMode::full_content, components) ==
          "Plenty of content. More of it.");
    CHECK_THROWS_AS(pcts::eval::summary_text_for(doc, SummaryMode::summary, components),
                    std::runtime_error);
}

TEST_CASE("score_dataset maps planted rules onto gold label indices") {
    PlantedPipeline planted;
    const auto tmpl = pcts::prompts::template_by_id(3);
    const auto scored = pcts::eval::score_dataset(planted.docs, SummaryMode::summary, tmpl,
                                                  planted.components);
    REQUIRE(scored.raw.size() == 20);
    REQUIRE(scored.gold.size() == 20);
    for (std::size_t i = 0; i < scored.raw.size(); ++i) {
        REQUIRE(scored.raw[i].size() == 2);
        const bool is_clickbait = *planted.docs[i].label == 1;
        // Verbalizer labels run [clickbait, news]; the planted rules put 0.3
        // mass on the true side and 0.1 on the other.
        CHECK(scored.gold[i] == (is_clickbait ? 0 : 1));
        CHECK(scored.raw[i][is_clickbait ? 0 : 1] == doctest::Approx(0.3));
        CHECK(scored.raw[i][is_clickbait ? 1 : 0] == doctest::Approx(0.1));
    }
}

TEST_CASE("score_dataset rejects unlabeled documents and missing pieces") {
    PlantedPipeline planted;
    const auto tmpl = pcts::prompts::template_by_id(3);

    auto docs = planted.docs;
    docs.front().label.reset();
    CHECK_THROWS_AS(
        pcts::eval::score_dataset(docs, SummaryMode::summary, tmpl, planted.components),
        std::invalid_argument);

    auto no_scorer = planted.components;
    no_scorer.scorer = nullptr;
    CHECK_THROWS_AS(
        pcts::eval::score_dataset(planted.docs, SummaryMode::summary, tmpl, no_scorer),
        std::invalid_argument);

    auto wrong_positive = planted.components;
    wrong_positive.positive_label = "satire";
    CHECK_THROWS_AS(
        pcts::eval::score_dataset(planted.docs, SummaryMode::summary, tmpl, wrong_positive),
        std::invalid_argument);

    pcts::verbalizer::Verbalizer one_label;
    one_label.labels = {"clickbait"};
    one_label.label_words["clickbait"] = {"clickbait"};
    auto unary = planted.components;
    unary.verb = &one_label;
    CHECK_THROWS_AS(
        pcts::eval::score_dataset(planted.docs, SummaryMode::summary, tmpl, unary),
        std::invalid_argument);
}

TEST_CASE("run_experiment recovers the planted labels on every seed") {
    PlantedPipeline planted;
    const auto report = pcts::eval::run_experiment(planted.spec(), planted.components);
    CHECK(report.dataset == "news20");
    CHECK(report.shots == 5);
    CHECK(report.mode == "ours");
    CHECK(report.template_id == 3);
    CHECK_FALSE(report.partial);
    REQUIRE(report.per_seed.size() == 3);
    for (const auto& row : report.per_seed) {
        CHECK_FALSE(row.failed);
        CHECK(row.binary.accuracy == 1.0);
        CHECK(row.binary.f1 == 1.0);
        CHECK(row.counts.tp == 5);
        CHECK(row.counts.fp == 0);
        CHECK(row.counts.tn == 5);
        CHECK(row.counts.fn == 0);
    }
    CHECK(report.mean_binary.accuracy == 1.0);
    CHECK(report.mean_weighted.f1 == 1.0);

    // The whole run is deterministic.
    const auto again = pcts::eval::run_experiment(planted.spec(), planted.components);
    CHECK(pcts::eval::reports_to_tsv({report}) == pcts::eval::reports_to_tsv({again}));
}

TEST_CASE("run_experiment records per-seed failures instead of aborting") {
    PlantedPipeline planted;
    auto spec = planted.spec();
    spec.shots = 20;  // each class only has 10 documents
    const auto report = pcts::eval::run_experiment(spec, planted.components);
    CHECK(report.partial);
    REQUIRE(report.per_seed.size() == 3);
    for (const auto& row : report.per_seed) {
        CHECK(row.failed);
        CHECK(row.error.find("fewer than k_shot") != std::string::npos);
    }
    CHECK(report.mean_binary.accuracy == 0.0);

    const auto tsv = pcts::eval::reports_to_tsv({report});
    CHECK(tsv.find("failed: ") != std::string::npos);
    CHECK(tsv.find("\tpartial\n") != std::string::npos);

    auto no_seeds = planted.spec();
    no_seeds.seeds.clear();
    CHECK_THROWS_AS(pcts::eval::run_experiment(no_seeds, planted.components),
                    std::invalid_argument);
}

TEST_CASE("run_ablation emits the three modes and only ours needs summaries") {
    PlantedPipeline planted;
    const BombGenerator bomb;
    planted.components.generator = &bomb;

    const auto reports = pcts::eval::run_ablation(planted.spec(), planted.components);
    REQUIRE(reports.size() == 3);
    CHECK(reports[0].mode == "ours");
    CHECK(reports[1].mode == "-summary");
    CHECK(reports[2].mode == "original_news");

    // The generator detonates only where summaries are actually consumed.
    CHECK(reports[0].partial);
    CHECK_FALSE(reports[1].partial);
    CHECK_FALSE(reports[2].partial);
    CHECK(reports[1].mean_binary.accuracy == 1.0);
    CHECK(reports[2].mean_binary.accuracy == 1.0);
}

TEST_CASE("sweep varies one training knob across the grid") {
    PlantedPipeline planted;
    auto spec = planted.spec();
    spec.seeds = {1};

    const auto points = pcts::eval::sweep(spec, planted.components,
                                          pcts::eval::SweepAxis::learning_rate, {0.001, 0.01});
    REQUIRE(points.size() == 2);
    CHECK(points[0].value == 0.001);
    CHECK(points[1].value == 0.01);
    CHECK(points[0].report.mean_binary.accuracy == 1.0);
    CHECK(points[1].report.mean_binary.accuracy == 1.0);

    CHECK(pcts::eval::sweep_plot_data(points, "accuracy") ==
          "0.00100000\t1.000000\n0.01000000\t1.000000\n");
    CHECK(pcts::eval::sweep_plot_data(points, "f1") ==
          "0.00100000\t1.000000\n0.01000000\t1.000000\n");
    CHECK_THROWS_AS(pcts::eval::sweep_plot_data(points, "auroc"), std::invalid_argument);

    const auto batch_points = pcts::eval::sweep(spec, planted.components,
                                                pcts::eval::SweepAxis::batch_size, {4.0});
    CHECK(batch_points.size() == 1);

    CHECK_THROWS_AS(pcts::eval::sweep(spec, planted.components,
                                      pcts::eval::SweepAxis::learning_rate, {}),
                    std::invalid_argument);
    CHECK_THROWS_AS(pcts::eval::sweep(spec, planted.components,
                                      pcts::eval::SweepAxis::learning_rate, {-0.1}),
                    std::invalid_argument);
    CHECK_THROWS_AS(pcts::eval::sweep(spec, planted.components,
                                      pcts::eval::SweepAxis::batch_size, {2.5}),
                    std::invalid_argument);
    CHECK_THROWS_AS(pcts::eval::sweep(spec, planted.components,
                                      pcts::eval::SweepAxis::batch_size, {0.0}),
                    std::invalid_argument);
}

TEST_CASE("sweep axes name round trip") {
    CHECK(pcts::eval::axis_name(pcts::eval::SweepAxis::learning_rate) == "learning_rate");
    CHECK(pcts::eval::axis_name(pcts::eval::SweepAxis::batch_size) == "batch_size");
    CHECK(pcts::eval::axis_from_name("learning_rate") == pcts::eval::SweepAxis::learning_rate);
    CHECK(pcts::eval::axis_from_name("batch_size") == pcts::eval::SweepAxis::batch_size);
    CHECK_THROWS_AS(pcts::eval::axis_from_name("dropout"), std::invalid_argument);
}

TEST_CASE("reports_to_tsv prints one row per seed plus a mean row") {
    PlantedPipeline planted;
    const auto report = pcts::eval::run_experiment(planted.spec(), planted.components);
    const auto tsv = pcts::eval::reports_to_tsv({report});

    const auto lines = pcts::split(tsv, '\n');
    REQUIRE(lines.size() == 6);  // header, three seeds, mean, trailing empty
    CHECK(lines[0] ==
          "dataset\tshots\tmode\ttemplate\tseed\taccuracy\tprecision\trecall\tf1"
          "\tw_precision\tw_recall\tw_f1\ttp\tfp\ttn\tfn\tstatus");
    CHECK(lines[1].rfind("news20\t5\tours\t3\t1\t1.000000\t", 0) == 0);
    CHECK(lines[1].find("\t5\t0\t5\t0\tok") != std::string::npos);
    CHECK(lines[4].rfind("news20\t5\tours\t3\tmean\t1.000000\t", 0) == 0);
    CHECK(lines[4].find("\t-\t-\t-\t-\tok") != std::string::npos);
    CHECK(lines[5].empty());
}

TEST_CASE("reports_to_jsonl is parseable and mirrors the report") {
    PlantedPipeline planted;
    auto spec = planted.spec();
    spec.seeds = {1, 2};
    const auto report = pcts::eval::run_experiment(spec, planted.components);
    const auto jsonl = pcts::eval::reports_to_jsonl({report});

    const auto lines = pcts::split(jsonl, '\n');
    REQUIRE(lines.size() == 2);  // one report line plus trailing empty
    const auto obj = nlohmann::json::parse(lines[0]);
    CHECK(obj["dataset"] == "news20");
    CHECK(obj["mode"] == "ours");
    CHECK(obj["partial"] == false);
    CHECK(obj["mean"]["accuracy"] == 1.0);
    REQUIRE(obj["seeds"].size() == 2);
    CHECK(obj["seeds"][0]["seed"] == 1);
    CHECK(obj["seeds"][0]["counts"]["tp"] == 5);
}

#include <doctest.h>

#include <sstream>
#include <string>
#include <vector>

#include "pcts/errors.hpp"
#include "pcts/prompt_templates.hpp"
#include "pcts/util.hpp"

namespace {

const std::string kHeadline = "You Won't Believe What Happened Next";
const std::string kSummary = "A council meeting ran long.";
const std::string kMask = "[MASK]";

std::string fixture(const std::string& name) {
    return std::string(PCTS_FIXTURE_DIR) + "/" + name;
}

std::vector<std::string> whitespace_tokens(const std::string& text) {
    std::istringstream in(text);
    std::vector<std::string> tokens;
    std::string tok;
    while (in >> tok) tokens.push_back(tok);
    return tokens;
}

}  // namespace

TEST_CASE("builtin templates are the four known patterns") {
    const auto templates = pcts::prompts::builtin_templates();
    REQUIRE(templates.size() == 4);
    for (int id = 1; id <= 4; ++id) CHECK(templates[id - 1].id == id);
    CHECK(templates[1].pattern.find("Is it clickbait?") != std::string::npos);
    for (const auto& t : templates) {
        CHECK(t.pattern.find("{mask}") != std::string::npos);
    }
}

TEST_CASE("render substitutes slots") {
    const auto prompt =
        pcts::prompts::render(pcts::prompts::template_by_id(3), "H", "S", kMask);
    CHECK(prompt.text == "Article Title: H, Article Content: S, is this clickbait? [MASK]");
    CHECK(prompt.template_id == 3);
}

TEST_CASE("renders match the golden files byte for byte") {
    for (int id = 1; id <= 4; ++id) {
        const auto prompt = pcts::prompts::render(pcts::prompts::template_by_id(id), kHeadline,
                                                  kSummary, kMask);
        const std::string golden =
            pcts::read_file(fixture("goldens/template" + std::to_string(id) + ".txt"));
        CHECK(prompt.text == golden);
    }
}

TEST_CASE("mask_position indexes the mask token") {
    for (int id = 1; id <= 4; ++id) {
        const auto prompt = pcts::prompts::render(pcts::prompts::template_by_id(id), kHeadline,
                                                  kSummary, kMask);
        const auto tokens = whitespace_tokens(prompt.text);
        REQUIRE(prompt.mask_position < tokens.size());
        CHECK(tokens[prompt.mask_position] == kMask);
    }
}

TEST_CASE("render validates its inputs") {
    const auto t3 = pcts::prompts::template_by_id(3);
    CHECK_THROWS_AS(pcts::prompts::render(t3, "", "S", kMask), std::invalid_argument);
    CHECK_THROWS_AS(pcts::prompts::render(t3, "H", "", kMask), std::invalid_argument);
    CHECK_THROWS_AS(pcts::prompts::render(t3, "H", "S", ""), std::invalid_argument);

    pcts::prompts::PromptTemplate no_mask{9, "only {text_a} and {text_b}"};
    CHECK_THROWS_AS(pcts::prompts::render(no_mask, "H", "S", kMask), std::invalid_argument);
    pcts::prompts::PromptTemplate two_masks{9, "{text_a} {text_b} {mask} {mask}"};
    CHECK_THROWS_AS(pcts::prompts::render(two_masks, "H", "S", kMask), std::invalid_argument);

    CHECK_THROWS_AS(pcts::prompts::template_by_id(99), std::invalid_argument);
}

TEST_CASE("load_templates reads tab-separated patterns") {
    const auto templates = pcts::prompts::load_templates(fixture("templates.tsv"));
    REQUIRE(templates.size() == 2);
    CHECK(templates[0].id == 7);
    const auto prompt = pcts::prompts::render(templates[0], "H", "S", kMask);
    CHECK(prompt.text == "Headline: H Body: S verdict: [MASK]");
    CHECK(templates[1].id == 8);

    CHECK_THROWS_AS(pcts::prompts::load_templates(fixture("missing.tsv")), pcts::ResourceError);
}

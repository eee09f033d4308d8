#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace pcts::prompts {

// Pattern slots: {text_a} for the headline, {text_b} for the summary, {mask}
// for the mask token. Each must appear exactly once, and {mask} must stand
// alone as a whitespace-delimited token.
struct PromptTemplate {
    int id = 0;
    std::string pattern;
};

struct RenderedPrompt {
    std::string text;
    std::size_t mask_position = 0;  // whitespace-token index of the mask token
    int template_id = 0;
};

// The four built-in templates, ids 1..4.
std::vector<PromptTemplate> builtin_templates();

PromptTemplate template_by_id(int id);

RenderedPrompt render(const PromptTemplate& tmpl, const std::string& headline,
                      const std::string& summary, const std::string& mask_token);

// Tab-separated file: id <TAB> pattern. Blank lines and '#' comments skipped.
std::vector<PromptTemplate> load_templates(const std::string& path);

}  // namespace pcts::prompts

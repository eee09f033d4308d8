#include "pcts/prompt_templates.hpp"

#include <sstream>
#include <stdexcept>

#include "pcts/errors.hpp"
#include "pcts/util.hpp"

namespace pcts::prompts {

namespace {

constexpr const char* kSlotTextA = "{text_a}";
constexpr const char* kSlotTextB = "{text_b}";
constexpr const char* kSlotMask = "{mask}";

std::size_t count_occurrences(const std::string& haystack, const std::string& needle) {
    std::size_t count = 0;
    for (std::size_t pos = haystack.find(needle); pos != std::string::npos;
         pos = haystack.find(needle, pos + needle.size())) {
        ++count;
    }
    return count;
}

void replace_once(std::string& text, const std::string& slot, const std::string& value) {
    const std::size_t pos = text.find(slot);
    text.replace(pos, slot.size(), value);
}

std::vector<std::string> whitespace_tokens(const std::string& text) {
    std::vector<std::string> tokens;
    std::istringstream in(text);
    std::string tok;
    while (in >> tok) tokens.push_back(tok);
    return tokens;
}

}  // namespace

std::vector<PromptTemplate> builtin_templates() {
    return {
        {1,
         "This title is: {text_a} This article is {text_b} and provides detailed information "
         "and analysis. is_clickbait: {mask}"},
        {2,
         "This article title is: {text_a}. The content is {text_b} and provides detailed "
         "information and analysis. Is it clickbait? {mask}"},
        {3, "Article Title: {text_a}, Article Content: {text_b}, is this clickbait? {mask}"},
        {4,
         "This is an article about: {text_a} This article discusses {text_b} and provides "
         "detailed information and analysis. is_clickbait: {mask}"},
    };
}

PromptTemplate template_by_id(int id) {
    for (auto& t : builtin_templates()) {
        if (t.id == id) return t;
    }
    throw std::invalid_argument("unknown template id: " + std::to_string(id));
}

RenderedPrompt render(const PromptTemplate& tmpl, const std::string& headline,
                      const std::string& summary, const std::string& mask_token) {
    if (headline.empty()) throw std::invalid_argument("render: headline is empty");
    if (summary.empty()) throw std::invalid_argument("render: summary is empty");
    if (mask_token.empty()) throw std::invalid_argument("render: mask token is empty");
    for (const char* slot : {kSlotTextA, kSlotTextB, kSlotMask}) {
        if (count_occurrences(tmpl.pattern, slot) != 1) {
            throw std::invalid_argument("malformed template " + std::to_string(tmpl.id) +
                                        ": needs exactly one " + slot);
        }
    }

    RenderedPrompt out;
    out.template_id = tmpl.id;
    out.text = tmpl.pattern;
    replace_once(out.text, kSlotTextA, headline);
    replace_once(out.text, kSlotTextB, summary);
    replace_once(out.text, kSlotMask, mask_token);

    const auto tokens = whitespace_tokens(out.text);
    std::size_t found = 0;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (tokens[i] == mask_token) {
            out.mask_position = i;
            ++found;
        }
    }
    if (found != 1) {
        throw std::invalid_argument("render: mask token must appear exactly once, found " +
                                    std::to_string(found));
    }
    return out;
}

std::vector<PromptTemplate> load_templates(const std::string& path) {
    const std::string body = read_file(path);
    std::vector<PromptTemplate> templates;
    for (const auto& raw : split(body, '\n')) {
        const std::string line = trim(raw);
        if (line.empty() || line[0] == '#') continue;
        const auto tab = line.find('\t');
        if (tab == std::string::npos) {
            throw ResourceError("template file " + path + ": expected 'id<TAB>pattern': " + line);
        }
        PromptTemplate t;
        try {
            t.id = std::stoi(line.substr(0, tab));
        } catch (const std::exception&) {
            throw ResourceError("template file " + path + ": bad id in line: " + line);
        }
        t.pattern = trim(line.substr(tab + 1));
        templates.push_back(std::move(t));
    }
    if (templates.empty()) throw ResourceError("template file " + path + ": no templates");
    return templates;
}

}  // namespace pcts::prompts

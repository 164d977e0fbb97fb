#pragma once

#include <string>
#include <vector>

#include "crashcause/records.hpp"

namespace crashcause::prompt {

// Field keys, in Table 1 order: crash report fields, then traffic, then event.
const std::vector<std::string>& table1_field_keys();
// snake_case key -> display name used in the serialized text
std::string display_name(const std::string& field_key);

struct PromptTemplate {
    std::string version;
    std::string preamble;
    std::vector<std::string> field_order;   // Table 1 keys
    std::vector<std::string> taxonomy;      // causation label names, must contain "other"
    std::string output_format;
};

// Versioned text file with named sections: VERSION, [PREAMBLE], [FIELD_ORDER],
// [TAXONOMY], [OUTPUT_FORMAT].
PromptTemplate load_template(const std::string& path);
PromptTemplate parse_template(const std::string& text);
PromptTemplate default_template();
void validate_template(const PromptTemplate& t);

struct SerializedCase {
    std::string case_id;
    std::string text;
    int token_count = 0;
    std::string template_version;
};

using TokenCounter = int (*)(std::string_view);
int count_tokens(std::string_view text);

// counter defaults to the reference tokenizer; pass a model-specific one to
// change how token_count is measured
SerializedCase serialize_case(const records::CrashCase& cc, const PromptTemplate& tmpl,
                              TokenCounter counter = count_tokens);
// case text + enumerated taxonomy + output instructions (no preamble);
// chat backends send this as the user message with the preamble as system
std::string build_case_message(const SerializedCase& sc, const PromptTemplate& tmpl);
std::string build_classification_prompt(const SerializedCase& sc, const PromptTemplate& tmpl);

// Reference tokenizer: split on Unicode whitespace, then detach leading and
// trailing punctuation from each chunk (word-internal punctuation stays, so
// "rear-end" is one token). Model-specific tokenizers can replace this behind
// the same counting contract.
std::vector<std::string> tokenize_text(std::string_view text);

}  // namespace crashcause::prompt

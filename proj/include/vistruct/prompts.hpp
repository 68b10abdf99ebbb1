#pragma once

#include <filesystem>
#include <map>
#include <string>

namespace vistruct {

/// Editable prompt templates for every model call the pipeline makes.
/// Placeholders use {name} syntax; each template carries a [task:...] tag so
/// the offline mock backend can dispatch on it.
struct PromptSet {
    std::string caption;        // {raw_caption}
    std::string instruction;    // {description}, {examples}
    std::string consolidate;    // {members}
    std::string answer;         // {instruction}, {description}, {exemplars}
    std::string match_check;    // {description}, {instruction}
    std::string judge;          // {instruction}, {reference}, {answer_a}, {answer_b}

    static PromptSet defaults();

    /// Overrides defaults with any of caption.txt, instruction.txt,
    /// consolidate.txt, answer.txt, match_check.txt, judge.txt present in dir.
    static PromptSet load_dir(const std::filesystem::path& dir);

    /// Writes the six template files into dir (used to materialize editable
    /// copies of the built-in defaults).
    void write_dir(const std::filesystem::path& dir) const;
};

/// Replaces each {key} in the template with its value. Unknown placeholders
/// are left untouched.
std::string render_prompt(const std::string& template_text,
                          const std::map<std::string, std::string>& values);

}  // namespace vistruct

#include "vistruct/instruction_gen.hpp"

#include <cctype>
#include <unordered_set>

#include "vistruct/error.hpp"
#include "vistruct/log.hpp"
#include "vistruct/prompts.hpp"

namespace vistruct {

std::string normalize_completion(const std::string& text) {
    // collapse all whitespace (including newlines) to single spaces
    std::string collapsed;
    collapsed.reserve(text.size());
    bool in_space = true;  // leading whitespace dropped
    for (unsigned char c : text) {
        if (std::isspace(c)) {
            if (!in_space) collapsed.push_back(' ');
            in_space = true;
        } else {
            collapsed.push_back(static_cast<char>(c));
            in_space = false;
        }
    }
    while (!collapsed.empty() && collapsed.back() == ' ') collapsed.pop_back();

    // strip one layer of matching surrounding quotes
    if (collapsed.size() >= 2) {
        const char first = collapsed.front();
        const char last = collapsed.back();
        if ((first == '"' && last == '"') || (first == '\'' && last == '\'')) {
            collapsed = collapsed.substr(1, collapsed.size() - 2);
            while (!collapsed.empty() && collapsed.front() == ' ') collapsed.erase(0, 1);
            while (!collapsed.empty() && collapsed.back() == ' ') collapsed.pop_back();
        }
    }
    return collapsed;
}

std::string dedupe_key(const std::string& text) {
    std::string key;
    key.reserve(text.size());
    bool in_space = true;
    for (unsigned char c : text) {
        if (std::isspace(c)) {
            if (!in_space) key.push_back(' ');
            in_space = true;
        } else {
            key.push_back(static_cast<char>(std::tolower(c)));
            in_space = false;
        }
    }
    while (!key.empty() && key.back() == ' ') key.pop_back();
    return key;
}

std::optional<Instruction> propose_instruction(const std::string& new_id,
                                               const std::string& description,
                                               const std::vector<Instruction>& examples,
                                               ChatBackend& backend, std::uint64_t seed,
                                               const InstructionGenOptions& options) {
    if (description.empty())
        throw ValidationError("propose_instruction: description must be non-empty");
    if (static_cast<int>(examples.size()) != options.in_context)
        throw ValidationError("propose_instruction: expected " +
                              std::to_string(options.in_context) + " in-context examples, got " +
                              std::to_string(examples.size()));

    std::string examples_block;
    for (std::size_t i = 0; i < examples.size(); ++i)
        examples_block += std::to_string(i + 1) + ". " + examples[i].text + "\n";

    ChatRequest request;
    request.messages.push_back(
        {Role::user, render_prompt(options.template_text, {{"description", description},
                                                           {"examples", examples_block}})});
    request.seed = seed;

    std::string text;
    for (int attempt = 0; attempt < 2; ++attempt) {
        request.seed = seed + static_cast<std::uint64_t>(attempt);
        text = normalize_completion(backend.chat_complete(request));
        if (!text.empty()) break;
    }
    if (text.empty()) {
        log::warn("empty instruction completion after retry; skipping " + new_id);
        return std::nullopt;
    }

    Instruction out;
    out.id = new_id;
    out.text = text;
    out.origin = Origin::generated;
    for (const auto& e : examples) out.parent_ids.push_back(e.id);
    return out;
}

std::vector<Instruction> dedupe_exact(const std::vector<Instruction>& pool) {
    std::vector<Instruction> out;
    out.reserve(pool.size());
    std::unordered_set<std::string> seen;
    for (const auto& instr : pool)
        if (seen.insert(dedupe_key(instr.text)).second) out.push_back(instr);
    return out;
}

}  // namespace vistruct

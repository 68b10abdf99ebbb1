#pragma once

#include <optional>
#include <string>
#include <vector>

#include "vistruct/backend.hpp"
#include "vistruct/types.hpp"

namespace vistruct {

/// Collapses whitespace runs, trims, and strips one layer of surrounding
/// quotes; model completions arrive in all of these shapes.
std::string normalize_completion(const std::string& text);

/// Case-folded, whitespace-normalized key used for exact dedup.
std::string dedupe_key(const std::string& text);

struct InstructionGenOptions {
    int in_context = 3;          // seed examples embedded in the prompt
    std::string template_text;   // prompt template ({description}, {examples})
};

/// Asks the backend for one new instruction grounded on the description,
/// with the given seed instructions as in-context examples. Returns nullopt
/// when the completion is empty even after one retry (the image is skipped).
std::optional<Instruction> propose_instruction(const std::string& new_id,
                                               const std::string& description,
                                               const std::vector<Instruction>& examples,
                                               ChatBackend& backend, std::uint64_t seed,
                                               const InstructionGenOptions& options);

/// Removes case-folded, whitespace-normalized exact duplicates, keeping the
/// first occurrence; output order is stable.
std::vector<Instruction> dedupe_exact(const std::vector<Instruction>& pool);

}  // namespace vistruct

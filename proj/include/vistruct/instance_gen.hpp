#pragma once

#include <optional>
#include <string>
#include <vector>

#include "vistruct/backend.hpp"
#include "vistruct/types.hpp"

namespace vistruct {

struct MatchCandidate {
    std::string instruction_id;
    double score = 0.0;  // raw cosine, before clamping
};

struct MatchResult {
    std::string instruction_id;            // the sampled instruction
    double score = 0.0;                    // its raw cosine score
    std::vector<MatchCandidate> candidates;  // top-k by score, for audit
};

/// Scores every instruction against the image embedding by cosine
/// similarity, keeps the top_k highest, clamps negative scores to zero and
/// samples one instruction with probability proportional to the clamped
/// weights (uniform over the top_k when all clamp to zero). Candidate order
/// is score-descending with id ascending on ties, so results are
/// deterministic for a fixed rng_seed.
MatchResult match_instruction(const Vec& image_embedding,
                              const std::vector<Instruction>& instructions, int top_k,
                              std::uint64_t rng_seed);

struct ExemplarGenOptions {
    std::string template_text;  // answer prompt ({instruction}, {description}, {exemplars})
};

/// Stage 1: asks the strong backend for one exemplar answer per
/// (image, description) pair; exemplar instances carry stage=exemplar and
/// are excluded from export. Items whose completion stays empty after one
/// retry are dropped with a warning.
std::vector<Instance> gen_exemplars(const Instruction& instruction,
                                    const std::vector<std::pair<std::string, std::string>>&
                                        image_descriptions,  // (image_id, description)
                                    ChatBackend& strong_backend, int m, std::uint64_t seed,
                                    const ExemplarGenOptions& options);

struct AnswerGenOptions {
    int in_context = 2;         // exemplar answers embedded in the prompt
    std::string template_text;  // answer prompt ({instruction}, {description}, {exemplars})
};

/// Stage 2: generates the bulk answer for one (image, instruction) pair,
/// conditioning on the stage-1 exemplars and the image's detailed
/// description (embedded verbatim). Returns nullopt when the completion is
/// empty after one retry (instance dropped).
std::optional<Instance> gen_answer(const Instruction& instruction, const ImageRecord& image,
                                   const std::vector<Instance>& exemplars, ChatBackend& backend,
                                   std::uint64_t seed, const AnswerGenOptions& options);

}  // namespace vistruct

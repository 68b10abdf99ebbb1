#include "vistruct/instance_gen.hpp"

#include <algorithm>

#include "vistruct/error.hpp"
#include "vistruct/instruction_gen.hpp"
#include "vistruct/log.hpp"
#include "vistruct/prompts.hpp"
#include "vistruct/rng.hpp"
#include "vistruct/text.hpp"

namespace vistruct {

MatchResult match_instruction(const Vec& image_embedding,
                              const std::vector<Instruction>& instructions, int top_k,
                              std::uint64_t rng_seed) {
    if (instructions.empty()) throw ValidationError("match_instruction: empty instruction list");
    if (top_k < 1) throw ValidationError("match_instruction: top_k must be >= 1");

    std::vector<MatchCandidate> scored;
    scored.reserve(instructions.size());
    for (const auto& instr : instructions) {
        if (!instr.match_embedding)
            throw ValidationError("match_instruction: instruction " + instr.id +
                                  " has no match_embedding");
        scored.push_back({instr.id, cosine_similarity(image_embedding, *instr.match_embedding)});
    }

    std::sort(scored.begin(), scored.end(), [](const MatchCandidate& a, const MatchCandidate& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.instruction_id < b.instruction_id;
    });
    if (static_cast<int>(scored.size()) > top_k) scored.resize(static_cast<std::size_t>(top_k));

    std::vector<double> weights(scored.size());
    double total = 0.0;
    for (std::size_t i = 0; i < scored.size(); ++i) {
        weights[i] = std::max(0.0, scored[i].score);
        total += weights[i];
    }
    if (total <= 0.0) std::fill(weights.begin(), weights.end(), 1.0);  // uniform fallback

    SplitMix64 rng(rng_seed);
    const std::size_t pick = sample_weighted(weights, rng);

    MatchResult result;
    result.instruction_id = scored[pick].instruction_id;
    result.score = scored[pick].score;
    result.candidates = std::move(scored);
    return result;
}

std::vector<Instance> gen_exemplars(
    const Instruction& instruction,
    const std::vector<std::pair<std::string, std::string>>& image_descriptions,
    ChatBackend& strong_backend, int m, std::uint64_t seed, const ExemplarGenOptions& options) {
    if (m < 1) throw ValidationError("gen_exemplars: m must be >= 1");
    if (image_descriptions.empty())
        throw ValidationError("gen_exemplars: no descriptions supplied");
    for (const auto& [id, description] : image_descriptions)
        if (description.empty())
            throw ValidationError("gen_exemplars: empty description for image " + id);

    std::vector<Instance> out;
    for (int i = 0; i < m; ++i) {
        const auto& [image_id, description] =
            image_descriptions[static_cast<std::size_t>(i) % image_descriptions.size()];
        ChatRequest request;
        request.messages.push_back(
            {Role::user, render_prompt(options.template_text, {{"instruction", instruction.text},
                                                               {"description", description},
                                                               {"exemplars", ""}})});
        std::string answer;
        for (int attempt = 0; attempt < 2; ++attempt) {
            request.seed = seed + static_cast<std::uint64_t>(i) * 1000003ull +
                           static_cast<std::uint64_t>(attempt);
            answer = trim_copy(strong_backend.chat_complete(request));
            if (!answer.empty()) break;
        }
        if (answer.empty()) {
            log::warn("empty exemplar completion for instruction " + instruction.id +
                      "; dropping exemplar " + std::to_string(i));
            continue;
        }
        Instance instance;
        instance.id = "ex-" + instruction.id + "-" + std::to_string(i);
        instance.image_id = image_id;
        instance.instruction_id = instruction.id;
        instance.answer = answer;
        instance.stage = InstanceStage::exemplar;
        instance.filter_status = FilterStatus::pending;
        out.push_back(std::move(instance));
    }
    return out;
}

std::optional<Instance> gen_answer(const Instruction& instruction, const ImageRecord& image,
                                   const std::vector<Instance>& exemplars, ChatBackend& backend,
                                   std::uint64_t seed, const AnswerGenOptions& options) {
    if (static_cast<int>(exemplars.size()) != options.in_context)
        throw ValidationError("gen_answer: expected " + std::to_string(options.in_context) +
                              " exemplars, got " + std::to_string(exemplars.size()));
    for (const auto& e : exemplars)
        if (e.instruction_id != instruction.id)
            throw ValidationError("gen_answer: exemplar " + e.id +
                                  " belongs to a different instruction");
    if (image.detailed_description.empty())
        throw ValidationError("gen_answer: image " + image.id +
                              " has no detailed description for grounding");

    std::string exemplar_block = "Example answers:\n";
    for (std::size_t i = 0; i < exemplars.size(); ++i)
        exemplar_block += std::to_string(i + 1) + ". " + exemplars[i].answer + "\n";

    ChatRequest request;
    request.messages.push_back(
        {Role::user,
         render_prompt(options.template_text, {{"instruction", instruction.text},
                                               {"description", image.detailed_description},
                                               {"exemplars", exemplar_block}})});

    std::string answer;
    for (int attempt = 0; attempt < 2; ++attempt) {
        request.seed = seed + static_cast<std::uint64_t>(attempt);
        answer = trim_copy(backend.chat_complete(request));
        if (!answer.empty()) break;
    }
    if (answer.empty()) {
        log::warn("empty answer completion; dropping instance for image " + image.id);
        return std::nullopt;
    }

    Instance instance;
    instance.id = "inst-" + image.id;
    instance.image_id = image.id;
    instance.instruction_id = instruction.id;
    instance.answer = answer;
    instance.stage = InstanceStage::bulk;
    for (const auto& e : exemplars) instance.exemplar_ids.push_back(e.id);
    instance.filter_status = FilterStatus::pending;
    return instance;
}

}  // namespace vistruct

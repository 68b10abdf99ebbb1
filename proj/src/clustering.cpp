#include "vistruct/clustering.hpp"

#include "vistruct/error.hpp"
#include "vistruct/instruction_gen.hpp"
#include "vistruct/log.hpp"
#include "vistruct/prompts.hpp"

namespace vistruct {

namespace {

// member whose text embedding lies closest to the member mean; falls back
// to the first member when embeddings are unavailable
const Instruction& closest_to_centroid(const std::vector<Instruction>& members) {
    for (const auto& m : members)
        if (!m.text_embedding) return members.front();
    Vec centroid = Vec::Zero(members.front().text_embedding->size());
    for (const auto& m : members) centroid += *m.text_embedding;
    centroid /= static_cast<double>(members.size());
    std::size_t best = 0;
    double best_d = (*members[0].text_embedding - centroid).squaredNorm();
    for (std::size_t i = 1; i < members.size(); ++i) {
        const double d = (*members[i].text_embedding - centroid).squaredNorm();
        if (d < best_d) {
            best_d = d;
            best = i;
        }
    }
    return members[best];
}

}  // namespace

Instruction consolidate_cluster(const std::string& new_id,
                                const std::vector<Instruction>& members, ChatBackend& backend,
                                std::uint64_t seed, const ConsolidateOptions& options) {
    if (members.empty()) throw ValidationError("consolidate_cluster: empty cluster");
    for (const auto& m : members)
        if (m.cluster_id != members.front().cluster_id)
            throw ValidationError("consolidate_cluster: members span multiple clusters");

    Instruction out;
    out.id = new_id;
    out.origin = Origin::consolidated;
    out.cluster_id = members.front().cluster_id;
    for (const auto& m : members) out.parent_ids.push_back(m.id);

    if (members.size() == 1) {
        out.text = members.front().text;
        return out;
    }

    std::string members_block;
    for (const auto& m : members) members_block += "- " + m.text + "\n";

    ChatRequest request;
    request.messages.push_back(
        {Role::user, render_prompt(options.template_text, {{"members", members_block}})});

    std::string text;
    for (int attempt = 0; attempt < 2; ++attempt) {
        request.seed = seed + static_cast<std::uint64_t>(attempt);
        text = normalize_completion(backend.chat_complete(request));
        if (!text.empty()) break;
    }
    if (text.empty()) {
        const Instruction& fallback = closest_to_centroid(members);
        log::warn("empty consolidation completion; falling back to member " + fallback.id);
        text = fallback.text;
    }
    out.text = text;
    return out;
}

Mat stack_text_embeddings(const std::vector<Instruction>& instructions) {
    if (instructions.empty()) throw ValidationError("stack_text_embeddings: empty input");
    const auto* first = &instructions.front();
    if (!first->text_embedding)
        throw ValidationError("instruction " + first->id + " has no text_embedding");
    const Eigen::Index dim = first->text_embedding->size();
    Mat m(static_cast<Eigen::Index>(instructions.size()), dim);
    for (std::size_t i = 0; i < instructions.size(); ++i) {
        const auto& e = instructions[i].text_embedding;
        if (!e) throw ValidationError("instruction " + instructions[i].id + " has no text_embedding");
        if (e->size() != dim)
            throw ValidationError("instruction " + instructions[i].id +
                                  ": embedding dimension mismatch");
        m.row(static_cast<Eigen::Index>(i)) = e->transpose();
    }
    return m;
}

}  // namespace vistruct

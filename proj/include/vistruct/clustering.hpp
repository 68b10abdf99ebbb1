#pragma once

#include <string>
#include <vector>

#include "vistruct/backend.hpp"
#include "vistruct/kmeans.hpp"
#include "vistruct/types.hpp"

namespace vistruct {

struct ConsolidateOptions {
    std::string template_text;  // prompt template ({members})
};

/// Merges the members of one cluster into a single instruction with
/// origin=consolidated, parent_ids = member ids, and the inherited
/// cluster_id. Single-member clusters bypass the model and copy the member
/// text. An empty completion is retried once, then the member closest to
/// the cluster centroid (mean of member text embeddings) is used.
Instruction consolidate_cluster(const std::string& new_id,
                                const std::vector<Instruction>& members, ChatBackend& backend,
                                std::uint64_t seed, const ConsolidateOptions& options);

/// Packs instruction text embeddings into one matrix (row per instruction).
/// Throws if any embedding is missing or dimensions disagree.
Mat stack_text_embeddings(const std::vector<Instruction>& instructions);

}  // namespace vistruct

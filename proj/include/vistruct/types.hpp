#pragma once

#include <nlohmann/json.hpp>

#include <optional>
#include <string>
#include <vector>

#include "vistruct/embedding.hpp"

namespace vistruct {

using Json = nlohmann::ordered_json;

enum class Origin { seed, generated, consolidated, held_out };
enum class InstanceStage { exemplar, bulk };
enum class FilterStatus { pending, passed, rejected };
enum class RejectReason {
    image_too_small,
    caption_invalid,
    instruction_mismatch,
    answer_incomplete,
    answer_repetitive
};

std::string to_string(Origin o);
std::string to_string(InstanceStage s);
std::string to_string(FilterStatus s);
std::string to_string(RejectReason r);
Origin origin_from_string(const std::string& s);
InstanceStage instance_stage_from_string(const std::string& s);
FilterStatus filter_status_from_string(const std::string& s);
RejectReason reject_reason_from_string(const std::string& s);

/// One source image with its raw caption and the generated detailed
/// description that grounds every text-only model call.
struct ImageRecord {
    std::string id;
    std::string uri;
    int width = 0;
    int height = 0;
    std::string raw_caption;
    std::string detailed_description;          // empty until the caption stage runs
    std::optional<Vec> image_embedding;        // joint image-text space

    Json to_json() const;
    static ImageRecord from_json(const Json& j);
};

/// An instruction with its lineage. text_embedding lives in the
/// sentence-semantic space used for clustering; match_embedding in the joint
/// image-text space used for matching.
struct Instruction {
    std::string id;
    std::string text;
    Origin origin = Origin::seed;
    std::vector<std::string> parent_ids;       // empty for seeds
    std::optional<int> cluster_id;
    std::optional<Vec> text_embedding;
    std::optional<Vec> match_embedding;

    Json to_json() const;
    static Instruction from_json(const Json& j);
};

/// An image-instruction-answer triplet plus generation metadata.
struct Instance {
    std::string id;
    std::string image_id;
    std::string instruction_id;
    std::string answer;
    InstanceStage stage = InstanceStage::bulk;
    std::vector<std::string> exemplar_ids;     // in-context examples used (bulk stage)
    FilterStatus filter_status = FilterStatus::pending;
    std::optional<RejectReason> reject_reason;

    Json to_json() const;
    static Instance from_json(const Json& j);
};

/// The three parts of one exported training record.
struct TrainingRecord {
    std::string system_message;
    std::string instruction_text;
    std::string answer_text;
};

/// The image placeholder kept literally in rendered output; downstream
/// trainers substitute it.
inline constexpr const char* kImageToken = "<img>";
inline constexpr const char* kEndToken = "</s>";

/// Renders the fixed conversation template with single-space separators:
///   <sys> USER: <img>\n<ins> ASSISTANT: <ans></s>
std::string render_training_record(const TrainingRecord& record);

/// EmbeddingVector wire form: {"values": [...], "dim": n}. Stored vectors
/// must be unit length within 1e-6.
Json embedding_to_json(const Vec& v);
Vec embedding_from_json(const Json& j);

}  // namespace vistruct

#include "vistruct/types.hpp"

#include "vistruct/error.hpp"

namespace vistruct {

std::string to_string(Origin o) {
    switch (o) {
        case Origin::seed: return "seed";
        case Origin::generated: return "generated";
        case Origin::consolidated: return "consolidated";
        case Origin::held_out: return "held_out";
    }
    throw Error("unknown Origin");
}

std::string to_string(InstanceStage s) {
    switch (s) {
        case InstanceStage::exemplar: return "exemplar";
        case InstanceStage::bulk: return "bulk";
    }
    throw Error("unknown InstanceStage");
}

std::string to_string(FilterStatus s) {
    switch (s) {
        case FilterStatus::pending: return "pending";
        case FilterStatus::passed: return "passed";
        case FilterStatus::rejected: return "rejected";
    }
    throw Error("unknown FilterStatus");
}

std::string to_string(RejectReason r) {
    switch (r) {
        case RejectReason::image_too_small: return "image_too_small";
        case RejectReason::caption_invalid: return "caption_invalid";
        case RejectReason::instruction_mismatch: return "instruction_mismatch";
        case RejectReason::answer_incomplete: return "answer_incomplete";
        case RejectReason::answer_repetitive: return "answer_repetitive";
    }
    throw Error("unknown RejectReason");
}

Origin origin_from_string(const std::string& s) {
    if (s == "seed") return Origin::seed;
    if (s == "generated") return Origin::generated;
    if (s == "consolidated") return Origin::consolidated;
    if (s == "held_out") return Origin::held_out;
    throw ValidationError("invalid origin: " + s);
}

InstanceStage instance_stage_from_string(const std::string& s) {
    if (s == "exemplar") return InstanceStage::exemplar;
    if (s == "bulk") return InstanceStage::bulk;
    throw ValidationError("invalid stage: " + s);
}

FilterStatus filter_status_from_string(const std::string& s) {
    if (s == "pending") return FilterStatus::pending;
    if (s == "passed") return FilterStatus::passed;
    if (s == "rejected") return FilterStatus::rejected;
    throw ValidationError("invalid filter_status: " + s);
}

RejectReason reject_reason_from_string(const std::string& s) {
    if (s == "image_too_small") return RejectReason::image_too_small;
    if (s == "caption_invalid") return RejectReason::caption_invalid;
    if (s == "instruction_mismatch") return RejectReason::instruction_mismatch;
    if (s == "answer_incomplete") return RejectReason::answer_incomplete;
    if (s == "answer_repetitive") return RejectReason::answer_repetitive;
    throw ValidationError("invalid reject_reason: " + s);
}

Json embedding_to_json(const Vec& v) {
    // vectors are persisted unit length; re-scale only when out of tolerance
    // so already-normalized vectors round-trip bit-exactly
    const Vec* out = &v;
    Vec scaled;
    if (!is_unit_norm(v)) {
        scaled = l2_normalized(v);
        out = &scaled;
    }
    Json j;
    Json values = Json::array();
    for (Eigen::Index i = 0; i < out->size(); ++i) values.push_back((*out)[i]);
    j["values"] = std::move(values);
    j["dim"] = static_cast<int>(out->size());
    return j;
}

Vec embedding_from_json(const Json& j) {
    const auto& values = j.at("values");
    const int dim = j.at("dim").get<int>();
    if (static_cast<int>(values.size()) != dim)
        throw ValidationError("embedding: length(values) != dim");
    Vec v(dim);
    for (int i = 0; i < dim; ++i) v[i] = values[i].get<double>();
    return v;
}

Json ImageRecord::to_json() const {
    Json j;
    j["id"] = id;
    j["uri"] = uri;
    j["width"] = width;
    j["height"] = height;
    j["raw_caption"] = raw_caption;
    j["detailed_description"] = detailed_description;
    if (image_embedding) j["image_embedding"] = embedding_to_json(*image_embedding);
    return j;
}

ImageRecord ImageRecord::from_json(const Json& j) {
    ImageRecord r;
    r.id = j.at("id").get<std::string>();
    r.uri = j.at("uri").get<std::string>();
    r.width = j.at("width").get<int>();
    r.height = j.at("height").get<int>();
    r.raw_caption = j.at("raw_caption").get<std::string>();
    r.detailed_description = j.at("detailed_description").get<std::string>();
    if (j.contains("image_embedding") && !j["image_embedding"].is_null())
        r.image_embedding = embedding_from_json(j["image_embedding"]);
    return r;
}

Json Instruction::to_json() const {
    Json j;
    j["id"] = id;
    j["text"] = text;
    j["origin"] = to_string(origin);
    j["parent_ids"] = parent_ids;
    if (cluster_id) j["cluster_id"] = *cluster_id;
    if (text_embedding) j["text_embedding"] = embedding_to_json(*text_embedding);
    if (match_embedding) j["match_embedding"] = embedding_to_json(*match_embedding);
    return j;
}

Instruction Instruction::from_json(const Json& j) {
    Instruction r;
    r.id = j.at("id").get<std::string>();
    r.text = j.at("text").get<std::string>();
    r.origin = origin_from_string(j.at("origin").get<std::string>());
    if (j.contains("parent_ids"))
        r.parent_ids = j["parent_ids"].get<std::vector<std::string>>();
    if (j.contains("cluster_id") && !j["cluster_id"].is_null())
        r.cluster_id = j["cluster_id"].get<int>();
    if (j.contains("text_embedding") && !j["text_embedding"].is_null())
        r.text_embedding = embedding_from_json(j["text_embedding"]);
    if (j.contains("match_embedding") && !j["match_embedding"].is_null())
        r.match_embedding = embedding_from_json(j["match_embedding"]);
    return r;
}

Json Instance::to_json() const {
    Json j;
    j["id"] = id;
    j["image_id"] = image_id;
    j["instruction_id"] = instruction_id;
    j["answer"] = answer;
    j["stage"] = to_string(stage);
    j["exemplar_ids"] = exemplar_ids;
    j["filter_status"] = to_string(filter_status);
    if (reject_reason) j["reject_reason"] = to_string(*reject_reason);
    return j;
}

Instance Instance::from_json(const Json& j) {
    Instance r;
    r.id = j.at("id").get<std::string>();
    r.image_id = j.at("image_id").get<std::string>();
    r.instruction_id = j.at("instruction_id").get<std::string>();
    r.answer = j.at("answer").get<std::string>();
    r.stage = instance_stage_from_string(j.at("stage").get<std::string>());
    if (j.contains("exemplar_ids"))
        r.exemplar_ids = j["exemplar_ids"].get<std::vector<std::string>>();
    r.filter_status = filter_status_from_string(j.at("filter_status").get<std::string>());
    if (j.contains("reject_reason") && !j["reject_reason"].is_null())
        r.reject_reason = reject_reason_from_string(j["reject_reason"].get<std::string>());
    return r;
}

std::string render_training_record(const TrainingRecord& record) {
    std::string out;
    out.reserve(record.system_message.size() + record.instruction_text.size() +
                record.answer_text.size() + 32);
    out += record.system_message;
    out += " USER: ";
    out += kImageToken;
    out += '\n';
    out += record.instruction_text;
    out += " ASSISTANT: ";
    out += record.answer_text;
    out += kEndToken;
    return out;
}

}  // namespace vistruct

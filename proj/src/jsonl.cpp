#include "vistruct/jsonl.hpp"

#include "vistruct/error.hpp"

namespace vistruct {

namespace fs = std::filesystem;

Json JsonlHeader::to_json() const {
    Json j;
    j["schema_version"] = schema_version;
    j["kind"] = kind;
    j["seed"] = seed;
    return j;
}

JsonlHeader JsonlHeader::from_json(const Json& j) {
    JsonlHeader h;
    h.schema_version = j.at("schema_version").get<int>();
    h.kind = j.at("kind").get<std::string>();
    h.seed = j.at("seed").get<std::uint64_t>();
    return h;
}

JsonlWriter::JsonlWriter(const fs::path& path, JsonlHeader header) : path_(path) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    tmp_path_ = path;
    tmp_path_ += ".tmp";
    out_.open(tmp_path_, std::ios::binary | std::ios::trunc);
    if (!out_) throw Error("cannot open for writing: " + tmp_path_.string());
    out_ << header.to_json().dump() << "\n";
}

JsonlWriter::~JsonlWriter() {
    if (!closed_) {
        // abandoned writer: drop the temp file, keep any previous artifact
        out_.close();
        std::error_code ec;
        fs::remove(tmp_path_, ec);
    }
}

void JsonlWriter::write(const Json& record) {
    out_ << record.dump() << "\n";
    ++count_;
}

void JsonlWriter::close() {
    if (closed_) return;
    out_.flush();
    if (!out_) throw Error("write failed: " + tmp_path_.string());
    out_.close();
    fs::rename(tmp_path_, path_);
    closed_ = true;
}

JsonlReader::JsonlReader(const fs::path& path, const std::string& expected_kind) : path_(path) {
    in_.open(path, std::ios::binary);
    if (!in_) throw Error("cannot open for reading: " + path.string());
    std::string line;
    if (!std::getline(in_, line)) throw ValidationError("empty dataset file: " + path.string());
    ++line_;
    Json j;
    try {
        j = Json::parse(line);
        header_ = JsonlHeader::from_json(j);
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(path.string() + ":1: malformed header line: " + e.what());
    }
    if (header_.schema_version != kSchemaVersion)
        throw ValidationError(path.string() + ": unsupported schema_version " +
                              std::to_string(header_.schema_version));
    if (!expected_kind.empty() && header_.kind != expected_kind)
        throw ValidationError(path.string() + ": expected kind '" + expected_kind + "', found '" +
                              header_.kind + "'");
}

std::optional<Json> JsonlReader::next() {
    std::string line;
    while (std::getline(in_, line)) {
        ++line_;
        if (line.empty()) continue;
        try {
            return Json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw ValidationError(path_.string() + ":" + std::to_string(line_) +
                                  ": malformed JSON line: " + e.what());
        }
    }
    return std::nullopt;
}

}  // namespace vistruct

#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "vistruct/types.hpp"

namespace vistruct {

inline constexpr int kSchemaVersion = 1;

/// Every dataset file starts with one header line carrying the schema
/// version, the record kind, and the run seed.
struct JsonlHeader {
    int schema_version = kSchemaVersion;
    std::string kind;
    std::uint64_t seed = 0;

    Json to_json() const;
    static JsonlHeader from_json(const Json& j);
};

/// Streaming line-delimited JSON writer. Writes to a temp file and renames
/// on close() so interrupted stages never leave partial artifacts behind.
class JsonlWriter {
public:
    JsonlWriter(const std::filesystem::path& path, JsonlHeader header);
    ~JsonlWriter();

    JsonlWriter(const JsonlWriter&) = delete;
    JsonlWriter& operator=(const JsonlWriter&) = delete;

    void write(const Json& record);
    void close();
    std::size_t count() const { return count_; }

private:
    std::filesystem::path path_;
    std::filesystem::path tmp_path_;
    std::ofstream out_;
    std::size_t count_ = 0;
    bool closed_ = false;
};

/// Streaming reader. Parses and checks the header on open; next() yields
/// records until EOF. Parse failures carry the 1-based line number.
class JsonlReader {
public:
    /// expected_kind empty = accept any kind.
    explicit JsonlReader(const std::filesystem::path& path, const std::string& expected_kind = "");

    const JsonlHeader& header() const { return header_; }
    std::optional<Json> next();
    std::size_t line_number() const { return line_; }

private:
    std::filesystem::path path_;
    std::ifstream in_;
    JsonlHeader header_;
    std::size_t line_ = 0;
};

/// Loads a whole file of records of type T (ImageRecord, Instruction,
/// Instance, ...) using T::from_json.
template <typename T>
std::vector<T> load_records(const std::filesystem::path& path, const std::string& kind) {
    JsonlReader reader(path, kind);
    std::vector<T> records;
    while (auto j = reader.next()) records.push_back(T::from_json(*j));
    return records;
}

template <typename T>
void save_records(const std::filesystem::path& path, const std::string& kind,
                  const std::vector<T>& records, std::uint64_t seed) {
    JsonlWriter writer(path, JsonlHeader{kSchemaVersion, kind, seed});
    for (const auto& r : records) writer.write(r.to_json());
    writer.close();
}

namespace kind {
inline constexpr const char* images = "images";
inline constexpr const char* instructions = "instructions";
inline constexpr const char* instances = "instances";
inline constexpr const char* training = "training";
inline constexpr const char* matches = "matches";
inline constexpr const char* match_audit = "match_audit";
inline constexpr const char* clusters = "clusters";
inline constexpr const char* benchmark = "benchmark";
inline constexpr const char* answers = "answers";
inline constexpr const char* verdicts = "verdicts";
}  // namespace kind

}  // namespace vistruct

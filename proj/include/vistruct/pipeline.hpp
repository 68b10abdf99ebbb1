#pragma once

#include <map>
#include <string>
#include <vector>

#include "vistruct/config.hpp"
#include "vistruct/types.hpp"

namespace vistruct {

/// Canonical stage order; `run` with no explicit stage list executes all of
/// these in sequence.
const std::vector<std::string>& canonical_stages();

struct StageRecord {
    std::string fingerprint;                       // config hash + stage + input hashes
    std::map<std::string, std::string> inputs;     // file -> sha256
    std::map<std::string, std::string> outputs;    // file -> sha256
    std::map<std::string, std::int64_t> counts;
    bool skipped = false;

    Json to_json() const;
    static StageRecord from_json(const Json& j);
};

struct RunManifest {
    std::string config_hash;
    std::uint64_t seed = 0;
    std::map<std::string, StageRecord> stages;

    Json to_json() const;
    static RunManifest from_json(const Json& j);
    static RunManifest load(const std::filesystem::path& path);
    void save(const std::filesystem::path& path) const;
};

/// Executes the requested stages in canonical order (all stages when the
/// list is empty). Completed stages whose inputs, config, and seed are
/// unchanged are skipped, so interrupted runs resume where they left off.
/// Throws Error naming the missing upstream stage when an input artifact is
/// absent.
RunManifest run_pipeline(const PipelineConfig& config, std::vector<std::string> stages);

/// Benchmark commands (outside the canonical stage list).
void run_bench_build(const PipelineConfig& config);

struct BenchJudgeResult {
    std::filesystem::path verdicts_path;
    std::filesystem::path report_path;
};

BenchJudgeResult run_bench_judge(const PipelineConfig& config,
                                 const std::filesystem::path& answers_a,
                                 const std::filesystem::path& answers_b,
                                 const std::string& model_a, const std::string& model_b);

namespace artifact {
inline constexpr const char* images_captioned = "images_captioned.jsonl";
inline constexpr const char* images_embedded = "images_embedded.jsonl";
inline constexpr const char* instructions_raw = "instructions_raw.jsonl";
inline constexpr const char* clusters = "clusters.jsonl";
inline constexpr const char* instructions_final = "instructions_final.jsonl";
inline constexpr const char* matches = "matches.jsonl";
inline constexpr const char* match_audit = "match_audit.jsonl";
inline constexpr const char* exemplars = "exemplars.jsonl";
inline constexpr const char* instances_raw = "instances_raw.jsonl";
inline constexpr const char* instances_passed = "instances_passed.jsonl";
inline constexpr const char* instances_rejected = "instances_rejected.jsonl";
inline constexpr const char* filter_report = "filter_report.json";
inline constexpr const char* training = "training.jsonl";
inline constexpr const char* diversity_report = "diversity_report.json";
inline constexpr const char* benchmark = "benchmark.jsonl";
inline constexpr const char* verdicts = "verdicts.jsonl";
inline constexpr const char* winrate_report = "winrate_report.json";
inline constexpr const char* manifest = "manifest.json";
}  // namespace artifact

}  // namespace vistruct

#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>

#include "vistruct/backend.hpp"
#include "vistruct/filtering.hpp"
#include "vistruct/prompts.hpp"
#include "vistruct/types.hpp"

namespace vistruct {

/// Whole-pipeline configuration: one structured file, one section per
/// stage. Every tunable default is a named key; unknown keys are rejected
/// with their full field path.
struct PipelineConfig {
    // run
    std::filesystem::path out_dir = "out";
    std::uint64_t seed = 1;
    bool mock = true;
    std::string system_message;             // X_sys; empty-string fallback
    std::filesystem::path prompts_dir;      // empty = built-in templates

    // data
    std::filesystem::path images_path;
    std::filesystem::path seeds_path;

    // backends
    BackendConfig chat;          // bulk generation (open model)
    BackendConfig strong_chat;   // stage-1 exemplars + benchmark references
    BackendConfig judge_chat;    // pairwise judging
    BackendConfig embed;
    std::string semantic_model;
    std::string joint_model;
    int semantic_dim = 64;
    int joint_dim = 64;

    // gen_instructions
    int gen_in_context = 3;

    // cluster
    int k = 300;
    int cluster_max_iter = 100;
    double cluster_tol = 1e-6;

    // consolidate
    int holdout = 0;             // instructions withheld for the benchmark

    // match
    int top_k = 5;

    // exemplars
    int exemplar_count = 3;      // stage-1 answers per instruction

    // gen_answers
    int answer_in_context = 2;

    // filter
    FilterOptions filter;

    // stats
    int length_bin_width = 10;

    // bench
    int bench_per_instruction = 3;
    std::filesystem::path approved_images_path;  // optional curation override

    PromptSet prompts;

    /// Stable hash over every effective config value (including the seed);
    /// the run manifest keys stage skipping off it.
    std::string config_hash() const;
    Json to_json() const;
};

/// Parses and validates a config file. Errors carry field paths
/// ("cluster.k: expected integer >= 1"). Relative data paths resolve
/// against the config file's directory.
PipelineConfig load_config(const std::filesystem::path& path);

/// In-memory variant used by tests.
PipelineConfig config_from_json(const Json& j, const std::filesystem::path& base_dir);

struct Backends {
    std::unique_ptr<ChatBackend> chat;
    std::unique_ptr<ChatBackend> strong_chat;
    std::unique_ptr<ChatBackend> judge_chat;
    std::unique_ptr<EmbedBackend> embed;
};

/// Mock or HTTP backends per config.mock.
Backends make_backends(const PipelineConfig& config);

}  // namespace vistruct

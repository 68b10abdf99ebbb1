#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "vistruct/backend.hpp"
#include "vistruct/types.hpp"

namespace vistruct {

struct BenchmarkItem {
    std::string id;
    std::string instruction_id;  // origin=held_out
    std::string image_id;
    std::string reference_answer;
    std::string selection;  // "auto-top-cosine" or "approved"

    Json to_json() const;
    static BenchmarkItem from_json(const Json& j);
};

enum class Winner { A, B, tie };

std::string to_string(Winner w);
Winner winner_from_string(const std::string& s);

struct Verdict {
    std::string item_id;
    std::string model_a;
    std::string model_b;
    Winner winner = Winner::tie;
    std::string judge_raw;  // transcripts of both presentation orders

    Json to_json() const;
    static Verdict from_json(const Json& j);
};

struct WinRateReport {
    std::size_t n = 0;
    std::size_t wins = 0;
    std::size_t ties = 0;
    std::size_t losses = 0;
    double win_rate = 0.0;
    double win_or_tie_rate = 0.0;

    Json to_json() const;
};

struct BenchBuildOptions {
    int per_instruction = 3;     // images per held-out instruction
    std::string answer_template;  // reference answers ({instruction}, {description}, {exemplars})
    /// When present, overrides the automatic top-cosine image selection:
    /// instruction id -> approved image ids.
    std::map<std::string, std::vector<std::string>> approved_images;
};

/// Builds |held_out| x per_instruction benchmark items. Image selection
/// takes the top-scoring images by joint-embedding cosine per instruction (a
/// stand-in for manual curation, flagged via the selection field); an
/// approval map overrides it. Reference answers come from the strong
/// backend grounded on the image descriptions.
std::vector<BenchmarkItem> build_benchmark(const std::vector<Instruction>& held_out,
                                           const std::vector<ImageRecord>& images,
                                           ChatBackend& strong_backend, std::uint64_t seed,
                                           const BenchBuildOptions& options);

/// Queries the judge twice, once per presentation order. A winner stands
/// only when both orders agree; disagreement, either-order ties, and
/// unparseable replies all resolve to tie.
Verdict judge_pair(const BenchmarkItem& item, const std::string& instruction_text,
                   const std::string& answer_a, const std::string& answer_b,
                   const std::string& model_a, const std::string& model_b,
                   ChatBackend& judge_backend, std::uint64_t seed,
                   const std::string& judge_template);

/// Aggregates verdicts for one fixed (model_a, model_b) pair.
WinRateReport compute_win_rate(const std::vector<Verdict>& verdicts);

}  // namespace vistruct

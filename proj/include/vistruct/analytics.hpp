#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "vistruct/types.hpp"

namespace vistruct {

struct RougeScore {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

/// ROUGE-L over lowercase tokens split on whitespace and punctuation:
/// precision = LCS/|candidate|, recall = LCS/|reference|, f1 harmonic mean.
/// All-zero when either side is empty or the LCS is empty.
RougeScore rouge_l(const std::string& candidate, const std::string& reference);

/// Fixed-width histogram; values below lo clamp into the first bin, values
/// at or above lo + width*count clamp into the last.
struct Histogram {
    double lo = 0.0;
    double bin_width = 0.1;
    std::vector<std::size_t> counts;

    int bin_of(double value) const;
    void add(double value);
    std::size_t total() const;
    Json to_json() const;
    void write_csv(const std::filesystem::path& path) const;
};

struct NearestSeed {
    std::string instruction_id;
    std::string nearest_seed_id;
    double f1 = 0.0;
};

struct NearestSeedReport {
    std::vector<NearestSeed> entries;       // one per generated instruction, input order
    Histogram histogram;                    // 10 bins of width 0.1 over [0, 1]
};

/// For each generated instruction, the maximum ROUGE-L f1 over all seeds
/// (lowest seed id on ties) plus the f1 histogram.
NearestSeedReport nearest_seed_similarity(const std::vector<Instruction>& generated,
                                          const std::vector<Instruction>& seeds);

/// Whitespace-token length histogram with the given bin width.
Histogram length_histogram(const std::vector<std::string>& items, int bin_width = 10);

/// Heuristic imperative parse: the instruction's first token must be in the
/// verb lexicon; the noun is the first later token that is neither a
/// stopword/determiner nor adjective-suffixed. This approximates a
/// constituency parse and is labeled as such in the report.
std::optional<std::pair<std::string, std::string>> extract_verb_noun(const std::string& text);

struct DiversityReport {
    std::size_t generated_count = 0;
    std::size_t seed_count = 0;
    NearestSeedReport nearest_seed;
    Histogram instruction_lengths;
    Histogram answer_lengths;
    std::vector<std::pair<std::string, std::size_t>> verb_noun_counts;  // "verb noun" -> count
    std::size_t verb_noun_extracted = 0;
    std::size_t verb_noun_total = 0;

    Json to_json() const;
};

DiversityReport diversity_report(const std::vector<Instruction>& generated,
                                 const std::vector<Instruction>& seeds,
                                 const std::vector<Instruction>& final_set,
                                 const std::vector<std::string>& answers, int length_bin_width);

}  // namespace vistruct

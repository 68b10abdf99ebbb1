#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "vistruct/types.hpp"

namespace vistruct {

struct Violation {
    std::string record_id;  // empty when the line could not be parsed
    std::size_t line = 0;   // 1-based line number in the file
    std::string file;
    std::string rule;
};

struct ValidationReport {
    std::size_t checked = 0;
    std::vector<Violation> violations;

    bool ok() const { return violations.empty(); }
    Json to_json() const;
};

/// Checks every record in one dataset file against its type invariants.
/// The file kind is taken from the header line. Malformed JSON lines are
/// reported with their line number.
ValidationReport validate_dataset(const std::filesystem::path& path);

/// Validates all recognized dataset files in a run directory, plus
/// cross-file rules: instance references resolve, and no held-out
/// instruction appears in the exported training set.
ValidationReport validate_run_dir(const std::filesystem::path& dir);

}  // namespace vistruct

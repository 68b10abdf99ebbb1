#include "vistruct/validate.hpp"

#include <algorithm>
#include <fstream>
#include <unordered_set>

#include "vistruct/error.hpp"
#include "vistruct/jsonl.hpp"

namespace vistruct {

namespace fs = std::filesystem;

namespace {

struct FileScan {
    JsonlHeader header;
    std::vector<std::pair<std::size_t, Json>> records;  // (line, record)
};

// Reads all lines, reporting malformed ones instead of aborting the scan.
FileScan scan_file(const fs::path& path, ValidationReport& report) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open for reading: " + path.string());
    FileScan scan;
    std::string line;
    std::size_t line_no = 0;
    bool have_header = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        Json j;
        try {
            j = Json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            report.violations.push_back(
                {"", line_no, path.filename().string(), std::string("malformed JSON: ") + e.what()});
            continue;
        }
        if (!have_header) {
            try {
                scan.header = JsonlHeader::from_json(j);
                have_header = true;
            } catch (const nlohmann::json::exception&) {
                report.violations.push_back(
                    {"", line_no, path.filename().string(), "missing or malformed header line"});
                have_header = true;  // treat the rest as records anyway
            }
            continue;
        }
        scan.records.emplace_back(line_no, std::move(j));
    }
    return scan;
}

void check_embedding(const Json& j, const char* field, const std::string& id, std::size_t line,
                     const std::string& file, ValidationReport& report) {
    if (!j.contains(field) || j[field].is_null()) return;
    try {
        Vec v = embedding_from_json(j[field]);
        if (!is_unit_norm(v))
            report.violations.push_back(
                {id, line, file, std::string(field) + ": L2 norm not within 1e-6 of 1.0"});
    } catch (const std::exception& e) {
        report.violations.push_back({id, line, file, std::string(field) + ": " + e.what()});
    }
}

std::string record_id(const Json& j) {
    if (j.contains("id") && j["id"].is_string()) return j["id"].get<std::string>();
    return "";
}

void validate_images(const FileScan& scan, const std::string& file, ValidationReport& report) {
    std::unordered_set<std::string> seen;
    for (const auto& [line, j] : scan.records) {
        ++report.checked;
        const std::string id = record_id(j);
        ImageRecord r;
        try {
            r = ImageRecord::from_json(j);
        } catch (const std::exception& e) {
            report.violations.push_back({id, line, file, std::string("unparseable record: ") + e.what()});
            continue;
        }
        if (!seen.insert(r.id).second)
            report.violations.push_back({r.id, line, file, "id unique within a dataset file"});
        if (r.width < 1) report.violations.push_back({r.id, line, file, "width ≥ 1"});
        if (r.height < 1) report.violations.push_back({r.id, line, file, "height ≥ 1"});
        if (r.uri.empty()) report.violations.push_back({r.id, line, file, "uri non-empty"});
        check_embedding(j, "image_embedding", r.id, line, file, report);
    }
}

void validate_instructions(const FileScan& scan, const std::string& file,
                           ValidationReport& report) {
    std::unordered_set<std::string> seen;
    for (const auto& [line, j] : scan.records) {
        ++report.checked;
        const std::string id = record_id(j);
        Instruction r;
        try {
            r = Instruction::from_json(j);
        } catch (const std::exception& e) {
            report.violations.push_back({id, line, file, std::string("unparseable record: ") + e.what()});
            continue;
        }
        if (!seen.insert(r.id).second)
            report.violations.push_back({r.id, line, file, "id unique within a dataset file"});
        if (r.text.empty()) report.violations.push_back({r.id, line, file, "text non-empty"});
        if (r.origin == Origin::consolidated && r.parent_ids.empty())
            report.violations.push_back(
                {r.id, line, file, "origin=consolidated ⇒ parent_ids non-empty"});
        check_embedding(j, "text_embedding", r.id, line, file, report);
        check_embedding(j, "match_embedding", r.id, line, file, report);
    }
}

void validate_instances(const FileScan& scan, const std::string& file, ValidationReport& report) {
    std::unordered_set<std::string> seen;
    for (const auto& [line, j] : scan.records) {
        ++report.checked;
        const std::string id = record_id(j);
        Instance r;
        try {
            r = Instance::from_json(j);
        } catch (const std::exception& e) {
            report.violations.push_back({id, line, file, std::string("unparseable record: ") + e.what()});
            continue;
        }
        if (!seen.insert(r.id).second)
            report.violations.push_back({r.id, line, file, "id unique within a dataset file"});
        if (r.filter_status == FilterStatus::rejected && !r.reject_reason)
            report.violations.push_back({r.id, line, file, "rejected ⇒ reject_reason present"});
        if (r.filter_status != FilterStatus::rejected && r.reject_reason)
            report.violations.push_back(
                {r.id, line, file, "reject_reason only valid on rejected instances"});
    }
}

void validate_training(const FileScan& scan, const std::string& file, ValidationReport& report) {
    for (const auto& [line, j] : scan.records) {
        ++report.checked;
        std::string id;
        if (j.contains("instance_id") && j["instance_id"].is_string())
            id = j["instance_id"].get<std::string>();
        if (!j.contains("rendered") || !j["rendered"].is_string()) {
            report.violations.push_back({id, line, file, "rendered text missing"});
            continue;
        }
        const std::string rendered = j["rendered"].get<std::string>();
        const std::string marker = std::string("USER: ") + kImageToken + "\n";
        std::size_t first = rendered.find(marker);
        bool once = first != std::string::npos &&
                    rendered.find(marker, first + 1) == std::string::npos;
        if (!once)
            report.violations.push_back(
                {id, line, file, "rendered record must contain the image placeholder exactly once"});
        if (rendered.size() < 4 || rendered.substr(rendered.size() - 4) != kEndToken)
            report.violations.push_back({id, line, file, "rendered record must end with </s>"});
        if (!j.contains("image_uri") || !j["image_uri"].is_string() ||
            j["image_uri"].get<std::string>().empty())
            report.violations.push_back({id, line, file, "image_uri non-empty"});
    }
}

void validate_generic(const FileScan& scan, ValidationReport& report) {
    report.checked += scan.records.size();
}

ValidationReport validate_one_file(const fs::path& path, FileScan* out_scan) {
    ValidationReport report;
    FileScan scan = scan_file(path, report);
    const std::string file = path.filename().string();
    if (scan.header.kind == kind::images)
        validate_images(scan, file, report);
    else if (scan.header.kind == kind::instructions)
        validate_instructions(scan, file, report);
    else if (scan.header.kind == kind::instances)
        validate_instances(scan, file, report);
    else if (scan.header.kind == kind::training)
        validate_training(scan, file, report);
    else
        validate_generic(scan, report);
    if (out_scan) *out_scan = std::move(scan);
    return report;
}

void merge(ValidationReport& into, ValidationReport&& from) {
    into.checked += from.checked;
    for (auto& v : from.violations) into.violations.push_back(std::move(v));
}

}  // namespace

Json ValidationReport::to_json() const {
    Json j;
    j["checked"] = checked;
    Json v = Json::array();
    for (const auto& viol : violations) {
        Json e;
        e["id"] = viol.record_id;
        e["file"] = viol.file;
        e["line"] = viol.line;
        e["rule"] = viol.rule;
        v.push_back(std::move(e));
    }
    j["violations"] = std::move(v);
    return j;
}

ValidationReport validate_dataset(const fs::path& path) {
    if (fs::is_directory(path)) return validate_run_dir(path);
    return validate_one_file(path, nullptr);
}

ValidationReport validate_run_dir(const fs::path& dir) {
    ValidationReport report;

    std::unordered_set<std::string> image_ids;
    std::unordered_set<std::string> instruction_ids;
    std::unordered_set<std::string> held_out_ids;
    std::vector<std::pair<fs::path, FileScan>> instance_files;
    FileScan training_scan;
    bool have_training = false;

    // Deterministic order: sorted file names.
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.is_regular_file() && entry.path().extension() == ".jsonl")
            files.push_back(entry.path());
    std::sort(files.begin(), files.end());

    for (const auto& path : files) {
        FileScan scan;
        merge(report, validate_one_file(path, &scan));
        if (scan.header.kind == kind::images) {
            for (const auto& [line, j] : scan.records) image_ids.insert(record_id(j));
        } else if (scan.header.kind == kind::instructions) {
            for (const auto& [line, j] : scan.records) {
                instruction_ids.insert(record_id(j));
                if (j.contains("origin") && j["origin"] == "held_out")
                    held_out_ids.insert(record_id(j));
            }
        } else if (scan.header.kind == kind::instances) {
            instance_files.emplace_back(path, std::move(scan));
        } else if (scan.header.kind == kind::training) {
            training_scan = std::move(scan);
            have_training = true;
        }
    }

    // Cross-file referential integrity.
    if (!image_ids.empty() || !instruction_ids.empty()) {
        for (const auto& [path, scan] : instance_files) {
            const std::string file = path.filename().string();
            for (const auto& [line, j] : scan.records) {
                const std::string id = record_id(j);
                if (j.contains("image_id") && !image_ids.empty() &&
                    !image_ids.count(j["image_id"].get<std::string>()))
                    report.violations.push_back({id, line, file, "image_id resolves within the run"});
                if (j.contains("instruction_id") && !instruction_ids.empty() &&
                    !instruction_ids.count(j["instruction_id"].get<std::string>()))
                    report.violations.push_back(
                        {id, line, file, "instruction_id resolves within the run"});
            }
        }
    }

    // Held-out instructions never reach the exported training set.
    if (have_training && !held_out_ids.empty()) {
        for (const auto& [line, j] : training_scan.records) {
            if (j.contains("instruction_id") &&
                held_out_ids.count(j["instruction_id"].get<std::string>())) {
                std::string id;
                if (j.contains("instance_id") && j["instance_id"].is_string())
                    id = j["instance_id"].get<std::string>();
                report.violations.push_back(
                    {id, line, "training.jsonl", "held_out instruction exported in training data"});
            }
        }
    }

    return report;
}

}  // namespace vistruct

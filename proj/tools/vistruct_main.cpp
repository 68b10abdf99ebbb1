#include <CLI11.hpp>

#include <iostream>
#include <string>
#include <vector>

#include "vistruct/config.hpp"
#include "vistruct/error.hpp"
#include "vistruct/log.hpp"
#include "vistruct/pipeline.hpp"
#include "vistruct/validate.hpp"

namespace {

using namespace vistruct;

struct CommonArgs {
    std::string config_path;
    std::int64_t seed_override = -1;
    bool force_mock = false;
    bool verbose = false;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "pipeline config file (JSON)")->required();
    cmd->add_option("--seed", args.seed_override, "override the run seed from the config");
    cmd->add_flag("--mock", args.force_mock, "force the deterministic offline mock backends");
    cmd->add_flag("-v,--verbose", args.verbose, "debug logging");
}

PipelineConfig resolve_config(const CommonArgs& args) {
    if (args.verbose) log::set_level(log::Level::debug);
    PipelineConfig cfg = load_config(args.config_path);
    if (args.seed_override >= 0) cfg.seed = static_cast<std::uint64_t>(args.seed_override);
    if (args.force_mock) cfg.mock = true;
    return cfg;
}

int run_stages(const CommonArgs& args, std::vector<std::string> stages) {
    const PipelineConfig cfg = resolve_config(args);
    const RunManifest manifest = run_pipeline(cfg, std::move(stages));
    for (const auto& [name, record] : manifest.stages) {
        std::string counts;
        for (const auto& [key, value] : record.counts)
            counts += " " + key + "=" + std::to_string(value);
        std::cout << name << (record.skipped ? " [skipped]" : "") << counts << "\n";
    }
    std::cout << "manifest: " << (cfg.out_dir / artifact::manifest).string() << "\n";
    return exit_code::ok;
}

int run_validate(const std::vector<std::string>& paths) {
    bool all_ok = true;
    for (const auto& path : paths) {
        const ValidationReport report = validate_dataset(path);
        std::cout << path << ": checked " << report.checked << " record(s), "
                  << report.violations.size() << " violation(s)\n";
        for (const auto& v : report.violations)
            std::cout << "  " << v.file << ":" << v.line << " [" << v.record_id
                      << "] " << v.rule << "\n";
        all_ok = all_ok && report.ok();
    }
    return all_ok ? exit_code::ok : exit_code::validation_failure;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"visual instruction dataset pipeline"};
    app.require_subcommand(1);

    CommonArgs args;

    auto* run = app.add_subcommand("run", "run pipeline stages in canonical order");
    std::vector<std::string> stage_list;
    add_common(run, args);
    run->add_option("--stages", stage_list, "subset of stages to run (canonical order applies)")
        ->delimiter(',');

    // one subcommand per stage
    for (const auto& stage : canonical_stages()) {
        auto* cmd = app.add_subcommand(stage, "run the '" + stage + "' stage");
        add_common(cmd, args);
    }

    auto* bench_build = app.add_subcommand("bench-build", "build the held-out benchmark");
    add_common(bench_build, args);

    auto* bench_judge = app.add_subcommand("bench-judge", "judge two answer files pairwise");
    add_common(bench_judge, args);
    std::string answers_a;
    std::string answers_b;
    std::string model_a;
    std::string model_b;
    bench_judge->add_option("--a", answers_a, "answers file for model A")->required();
    bench_judge->add_option("--b", answers_b, "answers file for model B")->required();
    bench_judge->add_option("--model-a", model_a, "label for model A (default: file stem)");
    bench_judge->add_option("--model-b", model_b, "label for model B (default: file stem)");

    auto* validate = app.add_subcommand("validate", "validate dataset files or a run directory");
    std::vector<std::string> validate_paths;
    validate->add_option("paths", validate_paths, "files or directories")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (app.got_subcommand(run)) return run_stages(args, stage_list);
        for (const auto& stage : canonical_stages())
            if (app.got_subcommand(stage)) return run_stages(args, {stage});
        if (app.got_subcommand(bench_build)) {
            run_bench_build(resolve_config(args));
            return exit_code::ok;
        }
        if (app.got_subcommand(bench_judge)) {
            const PipelineConfig cfg = resolve_config(args);
            if (model_a.empty()) model_a = std::filesystem::path(answers_a).stem().string();
            if (model_b.empty()) model_b = std::filesystem::path(answers_b).stem().string();
            const auto result = run_bench_judge(cfg, answers_a, answers_b, model_a, model_b);
            std::cout << "verdicts: " << result.verdicts_path.string() << "\n"
                      << "report: " << result.report_path.string() << "\n";
            return exit_code::ok;
        }
        if (app.got_subcommand(validate)) return run_validate(validate_paths);
    } catch (const BackendExhausted& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code::backend_exhaustion;
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code::validation_failure;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code::validation_failure;
    }
    return exit_code::ok;
}

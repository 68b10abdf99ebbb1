#include <doctest.h>

#include <fstream>
#include <set>
#include <sstream>

#include "support/synth.hpp"
#include "vistruct/bench.hpp"
#include "vistruct/config.hpp"
#include "vistruct/error.hpp"
#include "vistruct/jsonl.hpp"
#include "vistruct/pipeline.hpp"
#include "vistruct/validate.hpp"

using namespace vistruct;
using vistruct::testsupport::TempDir;
using vistruct::testsupport::desk_config;
using vistruct::testsupport::make_synth_images;

namespace {

std::string slurp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

PipelineConfig prepared_config(const TempDir& tmp, std::uint64_t seed, int image_count = 60) {
    testsupport::SynthOptions synth;
    synth.count = image_count;
    save_records(tmp.path() / "images.jsonl", kind::images, make_synth_images(synth), seed);
    auto cfg = desk_config(tmp.path(), seed);
    if (image_count < 60) cfg.k = std::min(cfg.k, image_count / 3);
    return cfg;
}

const std::vector<std::string> kComparedArtifacts = {
    artifact::images_captioned, artifact::images_embedded, artifact::instructions_raw,
    artifact::clusters,         artifact::instructions_final, artifact::matches,
    artifact::match_audit,      artifact::exemplars,        artifact::instances_raw,
    artifact::instances_passed, artifact::instances_rejected, artifact::training};

}  // namespace

TEST_CASE("full mock pipeline: artifacts exist, validate cleanly, and make sense") {
    TempDir tmp;
    auto cfg = prepared_config(tmp, 21);
    cfg.k = 8;
    const auto manifest = run_pipeline(cfg, {});

    for (const auto& name : kComparedArtifacts) CHECK(std::filesystem::exists(cfg.out_dir / name));

    // the run directory passes full validation
    const auto report = validate_run_dir(cfg.out_dir);
    CHECK(report.ok());

    // consolidated count equals k minus empty clusters
    const auto cluster_record = manifest.stages.at("cluster");
    const auto consolidate_record = manifest.stages.at("consolidate");
    CHECK(consolidate_record.counts.at("consolidated") + consolidate_record.counts.at("held_out") ==
          cluster_record.counts.at("k") - cluster_record.counts.at("empty_clusters"));

    // at most one instruction per image, both filter branches taken
    const auto filter_record = manifest.stages.at("filter");
    CHECK(filter_record.counts.at("passed") > 0);
    CHECK(filter_record.counts.at("rejected") > 0);

    // at most one proposed instruction per image; lineage stays inside the seeds
    const auto seeds = load_records<Instruction>(cfg.seeds_path, kind::instructions);
    std::set<std::string> seed_ids;
    for (const auto& s : seeds) seed_ids.insert(s.id);
    const auto raw =
        load_records<Instruction>(cfg.out_dir / artifact::instructions_raw, kind::instructions);
    CHECK(raw.size() <= 60);
    std::set<std::string> raw_ids;
    for (const auto& g : raw) {
        raw_ids.insert(g.id);
        CHECK(g.origin == Origin::generated);
        for (const auto& p : g.parent_ids) CHECK(seed_ids.count(p) == 1);
    }

    // consolidation lineage: union of parent ids == clustered raw ids
    const auto final_set =
        load_records<Instruction>(cfg.out_dir / artifact::instructions_final, kind::instructions);
    std::set<std::string> lineage;
    for (const auto& f : final_set)
        for (const auto& p : f.parent_ids) lineage.insert(p);
    CHECK(lineage == raw_ids);

    // one pairing per image at most
    const auto instances =
        load_records<Instance>(cfg.out_dir / artifact::instances_raw, kind::instances);
    CHECK(instances.size() <= 60);

    // every line of training.jsonl re-renders and the uri is present
    JsonlReader reader(cfg.out_dir / artifact::training, kind::training);
    std::size_t training_lines = 0;
    while (auto j = reader.next()) {
        ++training_lines;
        const auto rendered = j->at("rendered").get<std::string>();
        CHECK(rendered.find("USER: <img>\n") != std::string::npos);
        CHECK(rendered.substr(rendered.size() - 4) == "</s>");
    }
    CHECK(training_lines ==
          static_cast<std::size_t>(manifest.stages.at("export").counts.at("exported")));
}

TEST_CASE("pipeline determinism: same seed twice gives byte-identical artifacts") {
    TempDir tmp_a;
    TempDir tmp_b;
    auto cfg_a = prepared_config(tmp_a, 5);
    auto cfg_b = prepared_config(tmp_b, 5);
    cfg_a.k = 6;
    cfg_b.k = 6;
    run_pipeline(cfg_a, {});
    run_pipeline(cfg_b, {});
    for (const auto& name : kComparedArtifacts) {
        CAPTURE(name);
        CHECK(slurp(cfg_a.out_dir / name) == slurp(cfg_b.out_dir / name));
    }
}

TEST_CASE("pipeline seed sensitivity: a different seed changes the sampled pairings") {
    TempDir tmp_a;
    TempDir tmp_b;
    auto cfg_a = prepared_config(tmp_a, 5);
    auto cfg_b = prepared_config(tmp_b, 6);
    cfg_a.k = 6;
    cfg_b.k = 6;
    // identical source images so only the seed differs
    save_records(tmp_b.path() / "images.jsonl", kind::images,
                 make_synth_images(testsupport::SynthOptions{.count = 60}), 5);
    run_pipeline(cfg_a, {});
    run_pipeline(cfg_b, {});
    CHECK(slurp(cfg_a.out_dir / artifact::matches) != slurp(cfg_b.out_dir / artifact::matches));
}

TEST_CASE("rerunning a finished pipeline is a no-op that skips every stage") {
    TempDir tmp;
    auto cfg = prepared_config(tmp, 11);
    cfg.k = 6;
    run_pipeline(cfg, {});
    const auto before = slurp(cfg.out_dir / artifact::training);
    const auto manifest = run_pipeline(cfg, {});
    for (const auto& stage : canonical_stages()) CHECK(manifest.stages.at(stage).skipped);
    CHECK(slurp(cfg.out_dir / artifact::training) == before);
}

TEST_CASE("stage isolation: requesting only 'filter' re-executes only filtering") {
    TempDir tmp;
    auto cfg = prepared_config(tmp, 11);
    cfg.k = 6;
    run_pipeline(cfg, {});
    // delete filter outputs, rerun just that stage
    std::filesystem::remove(cfg.out_dir / artifact::instances_passed);
    std::filesystem::remove(cfg.out_dir / artifact::instances_rejected);
    const auto manifest = run_pipeline(cfg, {"filter"});
    CHECK(manifest.stages.at("filter").skipped == false);
    CHECK(std::filesystem::exists(cfg.out_dir / artifact::instances_passed));
}

TEST_CASE("missing upstream artifacts name the stage to run first") {
    TempDir tmp;
    auto cfg = prepared_config(tmp, 3);
    try {
        run_pipeline(cfg, {"cluster"});
        FAIL("expected an error about the missing upstream stage");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("gen-instructions") != std::string::npos);
    }
}

TEST_CASE("unknown stages are rejected") {
    TempDir tmp;
    auto cfg = prepared_config(tmp, 3);
    CHECK_THROWS_AS(run_pipeline(cfg, {"no-such-stage"}), ValidationError);
}

TEST_CASE("interrupted run resumes to the identical result") {
    TempDir tmp_full;
    auto cfg_full = prepared_config(tmp_full, 13);
    cfg_full.k = 6;
    run_pipeline(cfg_full, {});

    TempDir tmp_resumed;
    auto cfg_resumed = prepared_config(tmp_resumed, 13);
    cfg_resumed.k = 6;
    // simulate an interruption after the first three stages
    run_pipeline(cfg_resumed, {"caption", "embed", "gen-instructions"});
    run_pipeline(cfg_resumed, {});
    for (const auto& name : kComparedArtifacts) {
        CAPTURE(name);
        CHECK(slurp(cfg_full.out_dir / name) == slurp(cfg_resumed.out_dir / name));
    }
}

TEST_CASE("filter report exercises every reject reason on the synthetic corpus") {
    TempDir tmp;
    auto cfg = prepared_config(tmp, 21, 120);
    cfg.k = 8;
    run_pipeline(cfg, {});
    const Json report = Json::parse(slurp(cfg.out_dir / artifact::filter_report));
    const auto& by_reason = report.at("by_reason");
    for (const char* reason : {"image_too_small", "caption_invalid", "instruction_mismatch",
                               "answer_incomplete", "answer_repetitive"}) {
        CAPTURE(reason);
        CHECK(by_reason.contains(reason));
        CHECK(by_reason.at(reason).get<int>() > 0);
    }
    CHECK(report.at("passed").get<int>() > 0);
}

TEST_CASE("holdout instructions flow to the benchmark and stay out of training") {
    TempDir tmp;
    auto cfg = prepared_config(tmp, 31, 80);
    cfg.k = 8;
    cfg.holdout = 2;
    cfg.bench_per_instruction = 2;
    run_pipeline(cfg, {});

    const auto final_set =
        load_records<Instruction>(cfg.out_dir / artifact::instructions_final, kind::instructions);
    std::set<std::string> held;
    for (const auto& i : final_set)
        if (i.origin == Origin::held_out) held.insert(i.id);
    CHECK(held.size() == 2);

    // training never references a held-out instruction
    JsonlReader training(cfg.out_dir / artifact::training, kind::training);
    std::set<std::string> training_images;
    while (auto j = training.next()) {
        CHECK(!held.count(j->at("instruction_id").get<std::string>()));
        training_images.insert(j->at("image_id").get<std::string>());
    }

    run_bench_build(cfg);
    const auto items =
        load_records<BenchmarkItem>(cfg.out_dir / artifact::benchmark, kind::benchmark);
    CHECK(items.size() == held.size() * 2);
    for (const auto& item : items) {
        CHECK(held.count(item.instruction_id));
        CHECK(!training_images.count(item.image_id));  // disjoint pools
        CHECK(!item.reference_answer.empty());
    }

    // judge two answer files with the order-consistent mock judge
    auto write_answers = [&](const std::filesystem::path& path, const std::string& suffix) {
        JsonlWriter writer(path, JsonlHeader{kSchemaVersion, kind::answers, cfg.seed});
        for (const auto& item : items) {
            Json j;
            j["item_id"] = item.id;
            j["answer"] = "Answer for " + item.id + suffix;
            writer.write(j);
        }
        writer.close();
    };
    write_answers(tmp.path() / "a.jsonl", " from the longer, more detailed model.");
    write_answers(tmp.path() / "b.jsonl", ".");
    const auto result =
        run_bench_judge(cfg, tmp.path() / "a.jsonl", tmp.path() / "b.jsonl", "ours", "base");
    const Json report = Json::parse(slurp(result.report_path));
    CHECK(report.at("n").get<int>() == static_cast<int>(items.size()));
    CHECK(report.at("win_rate").get<double>() == 1.0);  // longer answers always win
}

TEST_CASE("run manifest records hashes and changes when the seed changes") {
    TempDir tmp;
    auto cfg = prepared_config(tmp, 2, 30);
    cfg.k = 4;
    run_pipeline(cfg, {"caption"});
    const auto m1 = RunManifest::load(cfg.out_dir / artifact::manifest);
    CHECK(!m1.config_hash.empty());
    CHECK(m1.stages.at("caption").outputs.count(artifact::images_captioned));

    cfg.seed = 3;
    run_pipeline(cfg, {"caption"});
    const auto m2 = RunManifest::load(cfg.out_dir / artifact::manifest);
    CHECK(m1.config_hash != m2.config_hash);
    CHECK(m1.stages.at("caption").outputs.at(artifact::images_captioned) !=
          m2.stages.at("caption").outputs.at(artifact::images_captioned));
}

TEST_CASE("config: defaults applied, unknown keys rejected with field paths") {
    const PipelineConfig defaults = config_from_json(Json::object(), "/tmp");
    CHECK(defaults.k == 300);
    CHECK(defaults.top_k == 5);
    CHECK(defaults.gen_in_context == 3);
    CHECK(defaults.answer_in_context == 2);
    CHECK(defaults.filter.min_dim == 100);
    CHECK(defaults.exemplar_count == 3);
    CHECK(defaults.bench_per_instruction == 3);
    CHECK(defaults.mock);

    try {
        config_from_json(Json{{"cluster", {{"kk", 5}}}}, "/tmp");
        FAIL("unknown key accepted");
    } catch (const ValidationError& e) {
        CHECK(std::string(e.what()).find("cluster.kk") != std::string::npos);
    }
    try {
        config_from_json(Json{{"cluster", {{"k", 0}}}}, "/tmp");
        FAIL("k=0 accepted");
    } catch (const ValidationError& e) {
        CHECK(std::string(e.what()).find("cluster.k") != std::string::npos);
    }
    try {
        config_from_json(Json{{"match", {{"top_k", "five"}}}}, "/tmp");
        FAIL("non-integer top_k accepted");
    } catch (const ValidationError& e) {
        CHECK(std::string(e.what()).find("match.top_k") != std::string::npos);
    }
}

TEST_CASE("bench-judge needs bench-build first") {
    TempDir tmp;
    auto cfg = prepared_config(tmp, 2, 30);
    try {
        run_bench_judge(cfg, tmp.path() / "a.jsonl", tmp.path() / "b.jsonl", "a", "b");
        FAIL("expected an error mentioning bench-build");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("bench-build") != std::string::npos);
    }
}

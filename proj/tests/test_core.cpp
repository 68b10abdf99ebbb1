#include <doctest.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "support/synth.hpp"
#include "vistruct/error.hpp"
#include "vistruct/jsonl.hpp"
#include "vistruct/rng.hpp"
#include "vistruct/types.hpp"
#include "vistruct/validate.hpp"

using namespace vistruct;
using vistruct::testsupport::TempDir;
using vistruct::testsupport::fixture_embedding;
using vistruct::testsupport::source_dir;

namespace {

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("render_training_record follows the conversation template") {
    CHECK(render_training_record({"S", "Q", "A"}) == "S USER: <img>\nQ ASSISTANT: A</s>");
    CHECK(render_training_record({"", "Q", "A"}) == " USER: <img>\nQ ASSISTANT: A</s>");
}

TEST_CASE("render_training_record is pure") {
    const TrainingRecord record{"sys", "instruction text", "answer text"};
    CHECK(render_training_record(record) == render_training_record(record));
}

TEST_CASE("render_training_record places the image token exactly once, ends with </s>") {
    SplitMix64 rng(11);
    const std::string marker = "USER: <img>\n";
    for (int i = 0; i < 200; ++i) {
        TrainingRecord record;
        auto random_text = [&](std::size_t max_len) {
            std::string s;
            const auto len = rng.next_below(max_len + 1);
            for (std::uint64_t j = 0; j < len; ++j)
                s.push_back(static_cast<char>('a' + rng.next_below(26)));
            return s;
        };
        record.system_message = random_text(20);
        record.instruction_text = random_text(40);
        record.answer_text = random_text(80);
        const std::string rendered = render_training_record(record);
        const auto first = rendered.find(marker);
        REQUIRE(first != std::string::npos);
        CHECK(rendered.find(marker, first + 1) == std::string::npos);
        REQUIRE(rendered.size() >= 4);
        CHECK(rendered.substr(rendered.size() - 4) == "</s>");
    }
}

TEST_CASE("training record golden file") {
    const std::vector<TrainingRecord> fixtures = {
        {"S", "Q", "A"},
        {"", "Q", "A"},
        {"You are a helpful assistant.", "Describe the image in detail.",
         "A small dog sits on a bench."},
        {"sys", "Write a poem about the image.", "Roses are red.\nViolets are blue."},
        {"", "", ""},
    };
    std::string joined;
    for (std::size_t i = 0; i < fixtures.size(); ++i) {
        if (i > 0) joined += "\n====\n";
        joined += render_training_record(fixtures[i]);
    }
    const std::string golden =
        read_file(source_dir() / "tests" / "golden" / "training_records.golden");
    CHECK(joined == golden);
}

TEST_CASE("embeddings are normalized at write time") {
    Vec v(3);
    v << 3.0, 4.0, 0.0;
    const Vec back = embedding_from_json(embedding_to_json(v));
    CHECK(std::abs(back.norm() - 1.0) <= 1e-6);
    CHECK(back[0] == doctest::Approx(0.6));
    CHECK(back[1] == doctest::Approx(0.8));

    Vec zero = Vec::Zero(3);
    CHECK_THROWS(embedding_to_json(zero));
}

TEST_CASE("embedding json round-trip preserves values and checks dim") {
    const Vec v = fixture_embedding("roundtrip", 16);
    const Json j = embedding_to_json(v);
    const Vec back = embedding_from_json(j);
    REQUIRE(back.size() == v.size());
    for (int i = 0; i < v.size(); ++i) CHECK(back[i] == v[i]);

    Json bad = j;
    bad["dim"] = 5;
    CHECK_THROWS_AS(embedding_from_json(bad), ValidationError);
}

TEST_CASE("dataset serialization round-trip is structurally exact") {
    TempDir tmp;
    std::vector<ImageRecord> images;
    for (int i = 0; i < 10; ++i) {
        ImageRecord r;
        r.id = "img-" + std::to_string(i);
        r.uri = "file:///" + std::to_string(i);
        r.width = 100 + i;
        r.height = 200 + i;
        r.raw_caption = "caption " + std::to_string(i);
        r.detailed_description = i % 2 == 0 ? "description" : "";
        if (i % 3 == 0) r.image_embedding = fixture_embedding(r.id, 12);
        images.push_back(std::move(r));
    }
    const auto path = tmp.path() / "images.jsonl";
    save_records(path, kind::images, images, 42);

    JsonlReader reader(path, kind::images);
    CHECK(reader.header().seed == 42);
    CHECK(reader.header().schema_version == kSchemaVersion);

    const auto loaded = load_records<ImageRecord>(path, kind::images);
    REQUIRE(loaded.size() == images.size());
    for (std::size_t i = 0; i < images.size(); ++i) {
        CHECK(loaded[i].id == images[i].id);
        CHECK(loaded[i].uri == images[i].uri);
        CHECK(loaded[i].width == images[i].width);
        CHECK(loaded[i].height == images[i].height);
        CHECK(loaded[i].raw_caption == images[i].raw_caption);
        CHECK(loaded[i].detailed_description == images[i].detailed_description);
        CHECK(loaded[i].image_embedding.has_value() == images[i].image_embedding.has_value());
        if (loaded[i].image_embedding)
            CHECK(*loaded[i].image_embedding == *images[i].image_embedding);
    }
}

TEST_CASE("instance round-trip keeps filter state") {
    TempDir tmp;
    Instance a;
    a.id = "inst-1";
    a.image_id = "img-1";
    a.instruction_id = "con-1";
    a.answer = "Some answer.";
    a.stage = InstanceStage::bulk;
    a.exemplar_ids = {"ex-1", "ex-2"};
    a.filter_status = FilterStatus::rejected;
    a.reject_reason = RejectReason::answer_repetitive;
    const auto path = tmp.path() / "instances.jsonl";
    save_records(path, kind::instances, std::vector<Instance>{a}, 1);
    const auto loaded = load_records<Instance>(path, kind::instances);
    REQUIRE(loaded.size() == 1);
    CHECK(loaded[0].stage == InstanceStage::bulk);
    CHECK(loaded[0].exemplar_ids == a.exemplar_ids);
    CHECK(loaded[0].filter_status == FilterStatus::rejected);
    REQUIRE(loaded[0].reject_reason.has_value());
    CHECK(*loaded[0].reject_reason == RejectReason::answer_repetitive);
}

TEST_CASE("validate_dataset: clean file reports zero violations") {
    TempDir tmp;
    std::vector<ImageRecord> images;
    for (int i = 0; i < 10; ++i) {
        ImageRecord r;
        r.id = "img-" + std::to_string(i);
        r.uri = "u";
        r.width = 100;
        r.height = 100;
        images.push_back(std::move(r));
    }
    const auto path = tmp.path() / "images.jsonl";
    save_records(path, kind::images, images, 0);
    const auto report = validate_dataset(path);
    CHECK(report.checked == 10);
    CHECK(report.ok());
}

TEST_CASE("validate_dataset: width=0 violates the dimension rule") {
    TempDir tmp;
    ImageRecord r;
    r.id = "img-bad";
    r.uri = "u";
    r.width = 0;
    r.height = 50;
    const auto path = tmp.path() / "images.jsonl";
    save_records(path, kind::images, std::vector<ImageRecord>{r}, 0);
    const auto report = validate_dataset(path);
    REQUIRE(report.violations.size() >= 1);
    bool found = false;
    for (const auto& v : report.violations)
        if (v.record_id == "img-bad" && v.rule.find("width") != std::string::npos) found = true;
    CHECK(found);
}

TEST_CASE("validate_dataset: rejected instance without reason violates") {
    TempDir tmp;
    const auto path = tmp.path() / "instances.jsonl";
    {
        JsonlWriter writer(path, JsonlHeader{kSchemaVersion, kind::instances, 0});
        Instance inst;
        inst.id = "inst-x";
        inst.image_id = "img-1";
        inst.instruction_id = "con-1";
        inst.answer = "a.";
        inst.filter_status = FilterStatus::rejected;  // no reason on purpose
        Json j = inst.to_json();
        j.erase("reject_reason");
        writer.write(j);
        writer.close();
    }
    const auto report = validate_dataset(path);
    REQUIRE(report.violations.size() == 1);
    CHECK(report.violations[0].record_id == "inst-x");
    CHECK(report.violations[0].rule.find("reject_reason") != std::string::npos);
}

TEST_CASE("validate_dataset: malformed line reported with line number") {
    TempDir tmp;
    const auto path = tmp.path() / "broken.jsonl";
    {
        std::ofstream out(path);
        out << R"({"schema_version":1,"kind":"images","seed":0})" << "\n";
        out << R"({"id":"img-1","uri":"u","width":5,"height":5,"raw_caption":"",)"
            << R"("detailed_description":""})" << "\n";
        out << "{not json\n";
    }
    const auto report = validate_dataset(path);
    bool found = false;
    for (const auto& v : report.violations)
        if (v.line == 3 && v.rule.find("malformed JSON") != std::string::npos) found = true;
    CHECK(found);
}

TEST_CASE("validate_run_dir: held-out instruction in training is flagged") {
    TempDir tmp;
    {
        Instruction held;
        held.id = "con-1";
        held.text = "text";
        held.origin = Origin::held_out;
        held.parent_ids = {"gen-1"};
        save_records(tmp.path() / "instructions_final.jsonl", kind::instructions,
                     std::vector<Instruction>{held}, 0);
    }
    {
        JsonlWriter writer(tmp.path() / "training.jsonl",
                           JsonlHeader{kSchemaVersion, kind::training, 0});
        Json j;
        j["instance_id"] = "inst-1";
        j["image_id"] = "img-1";
        j["instruction_id"] = "con-1";
        j["image_uri"] = "u";
        j["rendered"] = render_training_record({"", "q", "a"});
        writer.write(j);
        writer.close();
    }
    const auto report = validate_run_dir(tmp.path());
    bool found = false;
    for (const auto& v : report.violations)
        if (v.rule.find("held_out") != std::string::npos) found = true;
    CHECK(found);
}

TEST_CASE("unreadable file raises") {
    CHECK_THROWS_AS(validate_dataset("/nonexistent/never/file.jsonl"), Error);
}

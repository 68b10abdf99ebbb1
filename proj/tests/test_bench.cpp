#include <doctest.h>

#include <cmath>
#include <set>

#include "support/synth.hpp"
#include "vistruct/bench.hpp"
#include "vistruct/error.hpp"
#include "vistruct/mock_backend.hpp"
#include "vistruct/prompts.hpp"

using namespace vistruct;
using vistruct::testsupport::fixture_embedding;

namespace {

std::vector<Instruction> make_held_out(int n) {
    std::vector<Instruction> held;
    for (int i = 0; i < n; ++i) {
        Instruction instr;
        instr.id = "con-" + std::to_string(100 + i);
        instr.text = "Write a report about subject " + std::to_string(i) + " in the scene.";
        instr.origin = Origin::held_out;
        instr.parent_ids = {"gen-x"};
        instr.match_embedding = fixture_embedding("held-" + std::to_string(i));
        held.push_back(std::move(instr));
    }
    return held;
}

std::vector<ImageRecord> make_pool(int n) {
    std::vector<ImageRecord> pool;
    for (int i = 0; i < n; ++i) {
        ImageRecord image;
        image.id = "img-" + std::to_string(1000 + i);
        image.uri = "synth://" + image.id;
        image.width = 640;
        image.height = 480;
        image.raw_caption = "a scene caption with plenty of words";
        image.detailed_description = "The picture contains a scene with detail " +
                                     std::to_string(i) + ".";
        image.image_embedding = fixture_embedding("img-" + std::to_string(i));
        pool.push_back(std::move(image));
    }
    return pool;
}

BenchmarkItem make_item(const std::string& id) {
    BenchmarkItem item;
    item.id = id;
    item.instruction_id = "con-1";
    item.image_id = "img-1";
    item.reference_answer = "A reference answer.";
    return item;
}

Verdict make_verdict(int i, Winner w) {
    Verdict v;
    v.item_id = "item-" + std::to_string(i);
    v.model_a = "ours";
    v.model_b = "baseline";
    v.winner = w;
    return v;
}

}  // namespace

TEST_CASE("build_benchmark: 33 held-out x 3 images = 99 items") {
    MockChatBackend strong(4);
    BenchBuildOptions options;
    options.per_instruction = 3;
    options.answer_template = PromptSet::defaults().answer;
    const auto held = make_held_out(33);
    const auto pool = make_pool(40);
    const auto items = build_benchmark(held, pool, strong, 9, options);
    CHECK(items.size() == 99);
    // (instruction, image) pairs unique; three distinct images per instruction
    std::set<std::pair<std::string, std::string>> pairs;
    for (const auto& item : items) {
        CHECK(pairs.insert({item.instruction_id, item.image_id}).second);
        CHECK(!item.reference_answer.empty());
        CHECK(item.selection == "auto-top-cosine");
    }
}

TEST_CASE("build_benchmark: one instruction, one image") {
    MockChatBackend strong(4);
    BenchBuildOptions options;
    options.per_instruction = 1;
    options.answer_template = PromptSet::defaults().answer;
    const auto items = build_benchmark(make_held_out(1), make_pool(5), strong, 9, options);
    REQUIRE(items.size() == 1);
}

TEST_CASE("build_benchmark validation") {
    MockChatBackend strong(4);
    BenchBuildOptions options;
    options.answer_template = PromptSet::defaults().answer;
    CHECK_THROWS_AS(build_benchmark({}, make_pool(5), strong, 9, options), ValidationError);
    options.per_instruction = 9;
    CHECK_THROWS_AS(build_benchmark(make_held_out(1), make_pool(5), strong, 9, options),
                    ValidationError);
    options.per_instruction = 1;
    auto not_held = make_held_out(1);
    not_held[0].origin = Origin::consolidated;
    CHECK_THROWS_AS(build_benchmark(not_held, make_pool(5), strong, 9, options), ValidationError);
}

TEST_CASE("build_benchmark honors the approval override") {
    MockChatBackend strong(4);
    BenchBuildOptions options;
    options.per_instruction = 2;
    options.answer_template = PromptSet::defaults().answer;
    const auto held = make_held_out(1);
    options.approved_images[held[0].id] = {"img-1003", "img-1001"};
    const auto items = build_benchmark(held, make_pool(5), strong, 9, options);
    REQUIRE(items.size() == 2);
    CHECK(items[0].image_id == "img-1003");
    CHECK(items[1].image_id == "img-1001");
    CHECK(items[0].selection == "approved");
}

TEST_CASE("judge_pair: byte-equal answers tie under a consistent judge") {
    MockChatBackend judge(1, MockChatBackend::JudgePolicy::prefer_longer);
    const auto item = make_item("item-1");
    const auto verdict = judge_pair(item, "Summarize the scene.", "Same answer.", "Same answer.",
                                    "ours", "baseline", judge, 3, PromptSet::defaults().judge);
    CHECK(verdict.winner == Winner::tie);
    CHECK(verdict.judge_raw.find("order_ab") != std::string::npos);
    CHECK(verdict.judge_raw.find("order_ba") != std::string::npos);
}

TEST_CASE("judge_pair: longer-wins judge picks the longer answer in both orders") {
    MockChatBackend judge(1, MockChatBackend::JudgePolicy::prefer_longer);
    const auto item = make_item("item-1");
    const auto a_wins =
        judge_pair(item, "Summarize.", "A noticeably longer and richer answer.", "Short.",
                   "ours", "baseline", judge, 3, PromptSet::defaults().judge);
    CHECK(a_wins.winner == Winner::A);
    const auto b_wins =
        judge_pair(item, "Summarize.", "Short.", "A noticeably longer and richer answer.",
                   "ours", "baseline", judge, 3, PromptSet::defaults().judge);
    CHECK(b_wins.winner == Winner::B);
}

TEST_CASE("judge_pair: position-biased judge always resolves to tie") {
    MockChatBackend judge(1, MockChatBackend::JudgePolicy::prefer_first);
    const auto item = make_item("item-1");
    for (int i = 0; i < 10; ++i) {
        const auto verdict = judge_pair(item, "Summarize.", "Answer one v" + std::to_string(i),
                                        "Answer two.", "ours", "baseline", judge,
                                        static_cast<std::uint64_t>(i),
                                        PromptSet::defaults().judge);
        CHECK(verdict.winner == Winner::tie);
    }
}

TEST_CASE("judge_pair: label swap flips the winner under a consistent judge") {
    MockChatBackend judge(1, MockChatBackend::JudgePolicy::prefer_longer);
    const auto item = make_item("item-1");
    const std::string longer = "A noticeably longer and richer answer.";
    const std::string shorter = "Short.";
    const auto forward = judge_pair(item, "Summarize.", longer, shorter, "ours", "baseline",
                                    judge, 3, PromptSet::defaults().judge);
    const auto swapped = judge_pair(item, "Summarize.", shorter, longer, "baseline", "ours",
                                    judge, 3, PromptSet::defaults().judge);
    CHECK(forward.winner == Winner::A);
    CHECK(swapped.winner == Winner::B);
}

TEST_CASE("judge_pair: unparseable judge output resolves to tie") {
    struct GibberishJudge : ChatBackend {
        std::string chat_complete(const ChatRequest&) override { return "noidea!!"; }
    } judge;
    const auto verdict = judge_pair(make_item("item-1"), "Summarize.", "x.", "y.", "ours",
                                    "baseline", judge, 0, PromptSet::defaults().judge);
    CHECK(verdict.winner == Winner::tie);
}

TEST_CASE("compute_win_rate on the 99-verdict fixture (50/22/27)") {
    std::vector<Verdict> verdicts;
    int i = 0;
    for (int w = 0; w < 50; ++w) verdicts.push_back(make_verdict(i++, Winner::A));
    for (int t = 0; t < 22; ++t) verdicts.push_back(make_verdict(i++, Winner::tie));
    for (int l = 0; l < 27; ++l) verdicts.push_back(make_verdict(i++, Winner::B));
    const auto report = compute_win_rate(verdicts);
    CHECK(report.n == 99);
    CHECK(report.wins == 50);
    CHECK(report.ties == 22);
    CHECK(report.losses == 27);
    CHECK(std::abs(report.win_rate - 50.0 / 99.0) <= 1e-12);
    CHECK(std::abs(report.win_or_tie_rate - 72.0 / 99.0) <= 1e-12);
}

TEST_CASE("compute_win_rate: all wins, empty list, mixed pairs") {
    std::vector<Verdict> verdicts;
    for (int i = 0; i < 10; ++i) verdicts.push_back(make_verdict(i, Winner::A));
    const auto report = compute_win_rate(verdicts);
    CHECK(report.win_rate == 1.0);
    CHECK(report.win_or_tie_rate == 1.0);

    CHECK_THROWS_AS(compute_win_rate({}), ValidationError);

    verdicts.push_back(make_verdict(99, Winner::B));
    verdicts.back().model_b = "someone-else";
    CHECK_THROWS_AS(compute_win_rate(verdicts), ValidationError);
}

TEST_CASE("win rates are complementary under label swap") {
    std::vector<Verdict> verdicts;
    int i = 0;
    for (int w = 0; w < 13; ++w) verdicts.push_back(make_verdict(i++, Winner::A));
    for (int t = 0; t < 5; ++t) verdicts.push_back(make_verdict(i++, Winner::tie));
    for (int l = 0; l < 7; ++l) verdicts.push_back(make_verdict(i++, Winner::B));
    const auto forward = compute_win_rate(verdicts);

    std::vector<Verdict> swapped = verdicts;
    for (auto& v : swapped) {
        std::swap(v.model_a, v.model_b);
        if (v.winner == Winner::A)
            v.winner = Winner::B;
        else if (v.winner == Winner::B)
            v.winner = Winner::A;
    }
    const auto backward = compute_win_rate(swapped);
    CHECK(forward.wins == backward.losses);
    CHECK(forward.losses == backward.wins);
    CHECK(forward.ties == backward.ties);
    const double tie_rate = double(forward.ties) / double(forward.n);
    CHECK(std::abs(forward.win_rate + backward.win_rate + tie_rate - 1.0) <= 1e-12);
}

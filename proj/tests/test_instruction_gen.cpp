#include <doctest.h>

#include <map>
#include <set>

#include "support/synth.hpp"
#include "vistruct/error.hpp"
#include "vistruct/instruction_gen.hpp"
#include "vistruct/mock_backend.hpp"
#include "vistruct/prompts.hpp"
#include "vistruct/rng.hpp"

using namespace vistruct;

namespace {

std::vector<Instruction> make_seeds(int n) {
    std::vector<Instruction> seeds;
    for (int i = 0; i < n; ++i) {
        Instruction s;
        s.id = "seed-" + std::to_string(i);
        s.text = "Seed instruction number " + std::to_string(i) + ".";
        s.origin = Origin::seed;
        seeds.push_back(std::move(s));
    }
    return seeds;
}

InstructionGenOptions default_options() {
    InstructionGenOptions options;
    options.in_context = 3;
    options.template_text = PromptSet::defaults().instruction;
    return options;
}

}  // namespace

TEST_CASE("propose_instruction returns a generated instruction with lineage") {
    MockChatBackend backend(2);
    const auto seeds = make_seeds(5);
    const std::vector<Instruction> examples(seeds.begin(), seeds.begin() + 3);
    const auto result = propose_instruction("gen-img-1", "A quiet garden scene.", examples,
                                            backend, 42, default_options());
    REQUIRE(result.has_value());
    CHECK(result->origin == Origin::generated);
    CHECK(result->id == "gen-img-1");
    CHECK(result->parent_ids == std::vector<std::string>{"seed-0", "seed-1", "seed-2"});
    CHECK(result->text.rfind("MOCK-INSTRUCTION", 0) == 0);
    CHECK(result->text.find('\n') == std::string::npos);
}

TEST_CASE("propose_instruction is deterministic for fixed inputs and seed") {
    MockChatBackend backend(2);
    const auto seeds = make_seeds(3);
    const auto a = propose_instruction("gen-x", "Description.", seeds, backend, 7,
                                       default_options());
    const auto b = propose_instruction("gen-x", "Description.", seeds, backend, 7,
                                       default_options());
    REQUIRE(a.has_value());
    REQUIRE(b.has_value());
    CHECK(a->text == b->text);
    const auto c = propose_instruction("gen-x", "Description.", seeds, backend, 8,
                                       default_options());
    REQUIRE(c.has_value());
    CHECK(c->text != a->text);
}

TEST_CASE("the outgoing prompt embeds all three examples verbatim") {
    MockChatBackend inner(2);
    RecordingChatBackend backend(inner);
    const auto seeds = make_seeds(3);
    propose_instruction("gen-x", "Description text.", seeds, backend, 7, default_options());
    REQUIRE(backend.requests().size() == 1);
    const std::string& prompt = backend.requests().front().messages.front().content;
    for (const auto& s : seeds) CHECK(prompt.find(s.text) != std::string::npos);
    CHECK(prompt.find("Description text.") != std::string::npos);
}

TEST_CASE("empty completions retry once, then the image is skipped") {
    // a counting backend that always returns empty
    struct EmptyBackend : ChatBackend {
        int calls = 0;
        std::string chat_complete(const ChatRequest&) override {
            ++calls;
            return "   ";
        }
    } backend;
    const auto seeds = make_seeds(3);
    const auto result =
        propose_instruction("gen-x", "Description.", seeds, backend, 7, default_options());
    CHECK(!result.has_value());
    CHECK(backend.calls == 2);
}

TEST_CASE("completions are stripped of quotes and collapsed to one line") {
    struct FixedBackend : ChatBackend {
        std::string reply;
        std::string chat_complete(const ChatRequest&) override { return reply; }
    } backend;
    const auto seeds = make_seeds(3);
    backend.reply = "  \"Write a poem\n  about the sea.\"  ";
    const auto result =
        propose_instruction("gen-x", "Description.", seeds, backend, 7, default_options());
    REQUIRE(result.has_value());
    CHECK(result->text == "Write a poem about the sea.");
}

TEST_CASE("propose_instruction enforces the configured example count") {
    MockChatBackend backend(2);
    const auto seeds = make_seeds(2);
    CHECK_THROWS_AS(
        propose_instruction("gen-x", "Description.", seeds, backend, 7, default_options()),
        ValidationError);
    CHECK_THROWS_AS(propose_instruction("gen-x", "", make_seeds(3), backend, 7,
                                        default_options()),
                    ValidationError);
}

TEST_CASE("dedupe_exact folds case and whitespace, keeps first occurrence") {
    std::vector<Instruction> pool;
    auto add = [&](const std::string& id, const std::string& text) {
        Instruction i;
        i.id = id;
        i.text = text;
        pool.push_back(std::move(i));
    };
    add("a", "Write a poem");
    add("b", "write a  poem");
    add("c", "Draw X");
    const auto deduped = dedupe_exact(pool);
    REQUIRE(deduped.size() == 2);
    CHECK(deduped[0].id == "a");
    CHECK(deduped[0].text == "Write a poem");
    CHECK(deduped[1].id == "c");
}

TEST_CASE("dedupe_exact is idempotent and collapses identical pools") {
    std::vector<Instruction> unique_pool;
    for (int i = 0; i < 5; ++i) {
        Instruction instr;
        instr.id = "i" + std::to_string(i);
        instr.text = "Task " + std::to_string(i);
        unique_pool.push_back(std::move(instr));
    }
    CHECK(dedupe_exact(unique_pool).size() == 5);
    const auto once = dedupe_exact(unique_pool);
    const auto twice = dedupe_exact(once);
    REQUIRE(once.size() == twice.size());
    for (std::size_t i = 0; i < once.size(); ++i) CHECK(once[i].id == twice[i].id);

    std::vector<Instruction> same;
    for (int i = 0; i < 9; ++i) {
        Instruction instr;
        instr.id = "i" + std::to_string(i);
        instr.text = "Identical text";
        same.push_back(std::move(instr));
    }
    CHECK(dedupe_exact(same).size() == 1);
}

TEST_CASE("in-context sampling is uniform without replacement") {
    // frequencies over many derived item seeds approach uniform
    const std::size_t seed_count = 10;
    const std::size_t picks = 3;
    std::map<std::size_t, int> counts;
    const int items = 20000;
    for (int item = 0; item < items; ++item) {
        SplitMix64 rng(item_seed(123, "img-" + std::to_string(item)));
        const auto idx = sample_without_replacement(seed_count, picks, rng);
        std::set<std::size_t> distinct(idx.begin(), idx.end());
        CHECK(distinct.size() == picks);  // no replacement
        for (const auto i : idx) counts[i]++;
    }
    const double expected = static_cast<double>(items * picks) / seed_count;
    for (const auto& [index, count] : counts)
        CHECK(std::abs(count - expected) / expected < 0.05);
}

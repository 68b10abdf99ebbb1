#include "vistruct/bench.hpp"

#include <algorithm>
#include <cctype>

#include "vistruct/error.hpp"
#include "vistruct/log.hpp"
#include "vistruct/prompts.hpp"
#include "vistruct/rng.hpp"
#include "vistruct/text.hpp"

namespace vistruct {

Json BenchmarkItem::to_json() const {
    Json j;
    j["id"] = id;
    j["instruction_id"] = instruction_id;
    j["image_id"] = image_id;
    j["reference_answer"] = reference_answer;
    j["selection"] = selection;
    return j;
}

BenchmarkItem BenchmarkItem::from_json(const Json& j) {
    BenchmarkItem item;
    item.id = j.at("id").get<std::string>();
    item.instruction_id = j.at("instruction_id").get<std::string>();
    item.image_id = j.at("image_id").get<std::string>();
    item.reference_answer = j.at("reference_answer").get<std::string>();
    if (j.contains("selection")) item.selection = j["selection"].get<std::string>();
    return item;
}

std::string to_string(Winner w) {
    switch (w) {
        case Winner::A: return "A";
        case Winner::B: return "B";
        case Winner::tie: return "tie";
    }
    throw Error("unknown Winner");
}

Winner winner_from_string(const std::string& s) {
    if (s == "A") return Winner::A;
    if (s == "B") return Winner::B;
    if (s == "tie") return Winner::tie;
    throw ValidationError("invalid winner: " + s);
}

Json Verdict::to_json() const {
    Json j;
    j["item_id"] = item_id;
    j["model_a"] = model_a;
    j["model_b"] = model_b;
    j["winner"] = to_string(winner);
    j["judge_raw"] = judge_raw;
    return j;
}

Verdict Verdict::from_json(const Json& j) {
    Verdict v;
    v.item_id = j.at("item_id").get<std::string>();
    v.model_a = j.at("model_a").get<std::string>();
    v.model_b = j.at("model_b").get<std::string>();
    v.winner = winner_from_string(j.at("winner").get<std::string>());
    if (j.contains("judge_raw")) v.judge_raw = j["judge_raw"].get<std::string>();
    return v;
}

Json WinRateReport::to_json() const {
    Json j;
    j["n"] = n;
    j["wins"] = wins;
    j["ties"] = ties;
    j["losses"] = losses;
    j["win_rate"] = win_rate;
    j["win_or_tie_rate"] = win_or_tie_rate;
    return j;
}

std::vector<BenchmarkItem> build_benchmark(const std::vector<Instruction>& held_out,
                                           const std::vector<ImageRecord>& images,
                                           ChatBackend& strong_backend, std::uint64_t seed,
                                           const BenchBuildOptions& options) {
    if (held_out.empty()) throw ValidationError("build_benchmark: no held-out instructions");
    if (options.per_instruction < 1)
        throw ValidationError("build_benchmark: per_instruction must be >= 1");
    if (static_cast<int>(images.size()) < options.per_instruction)
        throw ValidationError("build_benchmark: need at least " +
                              std::to_string(options.per_instruction) + " images, have " +
                              std::to_string(images.size()));
    for (const auto& instr : held_out)
        if (instr.origin != Origin::held_out)
            throw ValidationError("build_benchmark: instruction " + instr.id +
                                  " is not held out");

    std::vector<BenchmarkItem> items;
    for (const auto& instr : held_out) {
        std::vector<const ImageRecord*> selected;
        std::string selection = "auto-top-cosine";

        const auto approved = options.approved_images.find(instr.id);
        if (approved != options.approved_images.end()) {
            selection = "approved";
            for (const auto& image_id : approved->second) {
                const auto it = std::find_if(images.begin(), images.end(),
                                             [&](const ImageRecord& r) { return r.id == image_id; });
                if (it == images.end())
                    throw ValidationError("build_benchmark: approved image " + image_id +
                                          " not in pool");
                selected.push_back(&*it);
            }
        } else {
            if (!instr.match_embedding)
                throw ValidationError("build_benchmark: instruction " + instr.id +
                                      " has no match_embedding");
            std::vector<std::pair<double, const ImageRecord*>> scored;
            scored.reserve(images.size());
            for (const auto& image : images) {
                if (!image.image_embedding)
                    throw ValidationError("build_benchmark: image " + image.id +
                                          " has no embedding");
                scored.emplace_back(cosine_similarity(*image.image_embedding,
                                                      *instr.match_embedding),
                                    &image);
            }
            std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
                if (a.first != b.first) return a.first > b.first;
                return a.second->id < b.second->id;
            });
            for (int i = 0; i < options.per_instruction; ++i) selected.push_back(scored[i].second);
        }

        for (const auto* image : selected) {
            if (image->detailed_description.empty())
                throw ValidationError("build_benchmark: image " + image->id +
                                      " has no detailed description");
            ChatRequest request;
            request.messages.push_back(
                {Role::user,
                 render_prompt(options.answer_template,
                               {{"instruction", instr.text},
                                {"description", image->detailed_description},
                                {"exemplars", ""}})});
            request.seed = seed ^ fnv1a64(instr.id + "|" + image->id);

            std::string reference;
            try {
                reference = trim_copy(strong_backend.chat_complete(request));
            } catch (const BackendExhausted&) {
                throw;
            } catch (const std::exception& e) {
                log::warn("reference answer failed for " + instr.id + "/" + image->id + ": " +
                          e.what() + "; dropping item");
                continue;
            }
            if (reference.empty()) {
                log::warn("empty reference answer for " + instr.id + "/" + image->id +
                          "; dropping item");
                continue;
            }

            BenchmarkItem item;
            item.id = "bench-" + instr.id + "-" + image->id;
            item.instruction_id = instr.id;
            item.image_id = image->id;
            item.reference_answer = reference;
            item.selection = selection;
            items.push_back(std::move(item));
        }
    }
    return items;
}

namespace {

// first alphabetic token of the reply: "a", "b", "tie", or empty
std::string parse_judge_reply(const std::string& reply) {
    std::string token;
    for (unsigned char c : reply) {
        if (std::isalpha(c)) {
            token.push_back(static_cast<char>(std::tolower(c)));
        } else if (!token.empty()) {
            break;
        }
    }
    if (token == "a" || token == "b" || token == "tie") return token;
    return "";
}

}  // namespace

Verdict judge_pair(const BenchmarkItem& item, const std::string& instruction_text,
                   const std::string& answer_a, const std::string& answer_b,
                   const std::string& model_a, const std::string& model_b,
                   ChatBackend& judge_backend, std::uint64_t seed,
                   const std::string& judge_template) {
    if (answer_a.empty() || answer_b.empty())
        throw ValidationError("judge_pair: answers must be non-empty");

    auto ask = [&](const std::string& first, const std::string& second,
                   std::uint64_t salt) -> std::pair<std::string, std::string> {
        ChatRequest request;
        request.messages.push_back(
            {Role::user, render_prompt(judge_template, {{"instruction", instruction_text},
                                                        {"reference", item.reference_answer},
                                                        {"answer_a", first},
                                                        {"answer_b", second}})});
        request.seed = seed + salt;
        const std::string reply = judge_backend.chat_complete(request);
        return {parse_judge_reply(reply), reply};
    };

    // order 1: (A, B); order 2: (B, A)
    const auto [verdict1, raw1] = ask(answer_a, answer_b, 0);
    const auto [verdict2, raw2] = ask(answer_b, answer_a, 1);

    Verdict verdict;
    verdict.item_id = item.id;
    verdict.model_a = model_a;
    verdict.model_b = model_b;
    verdict.judge_raw = "order_ab: " + raw1 + "\norder_ba: " + raw2;

    if (verdict1.empty() || verdict2.empty()) {
        log::warn("unparseable judge reply for item " + item.id + "; recording tie");
        verdict.winner = Winner::tie;
        return verdict;
    }

    // map position verdicts back to models: in order 2, "a" means model B
    const std::string for1 = verdict1;                                      // a|b|tie
    const std::string for2 = verdict2 == "a" ? "b" : verdict2 == "b" ? "a" : "tie";
    if (for1 == for2 && for1 == "a")
        verdict.winner = Winner::A;
    else if (for1 == for2 && for1 == "b")
        verdict.winner = Winner::B;
    else
        verdict.winner = Winner::tie;  // disagreement or either-order tie
    return verdict;
}

WinRateReport compute_win_rate(const std::vector<Verdict>& verdicts) {
    if (verdicts.empty()) throw ValidationError("compute_win_rate: empty verdict list");
    const std::string& model_a = verdicts.front().model_a;
    const std::string& model_b = verdicts.front().model_b;
    WinRateReport report;
    report.n = verdicts.size();
    for (const auto& v : verdicts) {
        if (v.model_a != model_a || v.model_b != model_b)
            throw ValidationError("compute_win_rate: mixed model pairs in verdict list");
        switch (v.winner) {
            case Winner::A: report.wins++; break;
            case Winner::B: report.losses++; break;
            case Winner::tie: report.ties++; break;
        }
    }
    report.win_rate = static_cast<double>(report.wins) / static_cast<double>(report.n);
    report.win_or_tie_rate =
        static_cast<double>(report.wins + report.ties) / static_cast<double>(report.n);
    return report;
}

}  // namespace vistruct

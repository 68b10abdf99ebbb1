#include "vistruct/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "vistruct/error.hpp"
#include "vistruct/hash.hpp"
#include "vistruct/http_backend.hpp"
#include "vistruct/mock_backend.hpp"

namespace vistruct {

namespace fs = std::filesystem;

namespace {

class SectionReader {
public:
    SectionReader(const Json& j, std::string path) : json_(&j), path_(std::move(path)) {}

    bool has(const std::string& key) const { return json_->contains(key); }

    std::string where(const std::string& key) const {
        return path_.empty() ? key : path_ + "." + key;
    }

    int get_int(const std::string& key, int fallback, int min_value) {
        mark(key);
        if (!has(key)) return fallback;
        const auto& v = (*json_)[key];
        if (!v.is_number_integer())
            throw ValidationError(where(key) + ": expected integer");
        const int value = v.get<int>();
        if (value < min_value)
            throw ValidationError(where(key) + ": expected integer >= " + std::to_string(min_value));
        return value;
    }

    std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) {
        mark(key);
        if (!has(key)) return fallback;
        const auto& v = (*json_)[key];
        if (!v.is_number_unsigned() && !v.is_number_integer())
            throw ValidationError(where(key) + ": expected nonnegative integer");
        if (v.is_number_integer() && v.get<std::int64_t>() < 0)
            throw ValidationError(where(key) + ": expected nonnegative integer");
        return v.get<std::uint64_t>();
    }

    double get_double(const std::string& key, double fallback, double min_value) {
        mark(key);
        if (!has(key)) return fallback;
        const auto& v = (*json_)[key];
        if (!v.is_number()) throw ValidationError(where(key) + ": expected number");
        const double value = v.get<double>();
        if (value < min_value)
            throw ValidationError(where(key) + ": expected number >= " + std::to_string(min_value));
        return value;
    }

    std::string get_string(const std::string& key, const std::string& fallback) {
        mark(key);
        if (!has(key)) return fallback;
        const auto& v = (*json_)[key];
        if (!v.is_string()) throw ValidationError(where(key) + ": expected string");
        return v.get<std::string>();
    }

    bool get_bool(const std::string& key, bool fallback) {
        mark(key);
        if (!has(key)) return fallback;
        const auto& v = (*json_)[key];
        if (!v.is_boolean()) throw ValidationError(where(key) + ": expected boolean");
        return v.get<bool>();
    }

    SectionReader section(const std::string& key) {
        mark(key);
        static const Json empty = Json::object();
        if (!has(key)) return SectionReader(empty, where(key));
        const auto& v = (*json_)[key];
        if (!v.is_object()) throw ValidationError(where(key) + ": expected object");
        return SectionReader(v, where(key));
    }

    void finish() const {
        for (auto it = json_->begin(); it != json_->end(); ++it)
            if (!seen_.count(it.key()))
                throw ValidationError("unknown config key: " + where(it.key()));
    }

private:
    void mark(const std::string& key) { seen_.insert(key); }

    const Json* json_;
    std::string path_;
    std::set<std::string> seen_;
};

BackendConfig read_backend(SectionReader& section, const fs::path& base_dir) {
    BackendConfig b;
    b.endpoint = section.get_string("endpoint", "http://localhost:8000");
    b.model_name = section.get_string("model_name", "default-model");
    b.requests_per_minute = section.get_int("requests_per_minute", 600, 1);
    b.max_retries = section.get_int("max_retries", 3, 0);
    const std::string cache = section.get_string("cache_dir", "");
    if (!cache.empty()) b.cache_dir = base_dir / cache;
    b.permits = section.get_int("permits", 4, 1);
    b.api_key_env = section.get_string("api_key_env", "VISTRUCT_API_KEY");
    return b;
}

fs::path resolve(const fs::path& base_dir, const std::string& p) {
    if (p.empty()) return {};
    fs::path path(p);
    return path.is_absolute() ? path : base_dir / path;
}

}  // namespace

PipelineConfig config_from_json(const Json& j, const fs::path& base_dir) {
    if (!j.is_object()) throw ValidationError("config root: expected object");
    PipelineConfig cfg;
    SectionReader root(j, "");

    auto run = root.section("run");
    cfg.out_dir = resolve(base_dir, run.get_string("out_dir", "out"));
    cfg.seed = run.get_u64("seed", 1);
    cfg.mock = run.get_bool("mock", true);
    cfg.system_message = run.get_string("system_message", "");
    const std::string prompts_dir = run.get_string("prompts_dir", "");
    cfg.prompts_dir = resolve(base_dir, prompts_dir);
    run.finish();

    auto data = root.section("data");
    cfg.images_path = resolve(base_dir, data.get_string("images", ""));
    cfg.seeds_path = resolve(base_dir, data.get_string("seeds", ""));
    data.finish();

    auto backends = root.section("backends");
    {
        auto chat = backends.section("chat");
        cfg.chat = read_backend(chat, base_dir);
        chat.finish();
        auto strong = backends.section("strong_chat");
        cfg.strong_chat = read_backend(strong, base_dir);
        strong.finish();
        auto judge = backends.section("judge_chat");
        cfg.judge_chat = read_backend(judge, base_dir);
        judge.finish();
        auto embed = backends.section("embed");
        cfg.embed = read_backend(embed, base_dir);
        cfg.semantic_model = embed.get_string("semantic_model", "semantic-embedder");
        cfg.joint_model = embed.get_string("joint_model", "joint-embedder");
        cfg.semantic_dim = embed.get_int("semantic_dim", 64, 1);
        cfg.joint_dim = embed.get_int("joint_dim", 64, 1);
        embed.finish();
    }
    backends.finish();

    auto gen = root.section("gen_instructions");
    cfg.gen_in_context = gen.get_int("in_context", 3, 1);
    gen.finish();

    auto cluster = root.section("cluster");
    cfg.k = cluster.get_int("k", 300, 1);
    cfg.cluster_max_iter = cluster.get_int("max_iter", 100, 1);
    cfg.cluster_tol = cluster.get_double("tol", 1e-6, 0.0);
    cluster.finish();

    auto consolidate = root.section("consolidate");
    cfg.holdout = consolidate.get_int("holdout", 0, 0);
    consolidate.finish();

    auto match = root.section("match");
    cfg.top_k = match.get_int("top_k", 5, 1);
    match.finish();

    auto exemplars = root.section("exemplars");
    cfg.exemplar_count = exemplars.get_int("count", 3, 1);
    exemplars.finish();

    auto answers = root.section("gen_answers");
    cfg.answer_in_context = answers.get_int("in_context", 2, 1);
    answers.finish();

    auto filter = root.section("filter");
    cfg.filter.min_dim = filter.get_int("min_dim", 100, 1);
    cfg.filter.min_caption_words = filter.get_int("min_caption_words", 5, 0);
    cfg.filter.repeat_window = filter.get_int("repeat_window", 5, 1);
    cfg.filter.repeat_count = filter.get_int("repeat_count", 3, 2);
    filter.finish();

    auto stats = root.section("stats");
    cfg.length_bin_width = stats.get_int("length_bin_width", 10, 1);
    stats.finish();

    auto bench = root.section("bench");
    cfg.bench_per_instruction = bench.get_int("per_instruction", 3, 1);
    cfg.approved_images_path = resolve(base_dir, bench.get_string("approved_images", ""));
    bench.finish();

    root.finish();

    cfg.chat.validate();
    cfg.strong_chat.validate();
    cfg.judge_chat.validate();
    cfg.embed.validate();

    cfg.prompts = cfg.prompts_dir.empty() ? PromptSet::defaults()
                                          : PromptSet::load_dir(cfg.prompts_dir);
    cfg.filter.match_template = cfg.prompts.match_check;
    return cfg;
}

PipelineConfig load_config(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open config: " + path.string());
    Json j;
    try {
        j = Json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError("config parse error in " + path.string() + ": " + e.what());
    }
    return config_from_json(j, path.parent_path());
}

Json PipelineConfig::to_json() const {
    Json j;
    j["run"] = {{"out_dir", out_dir.string()},
                {"seed", seed},
                {"mock", mock},
                {"system_message", system_message},
                {"prompts_dir", prompts_dir.string()}};
    j["data"] = {{"images", images_path.string()}, {"seeds", seeds_path.string()}};
    auto backend_json = [](const BackendConfig& b) {
        return Json{{"endpoint", b.endpoint},
                    {"model_name", b.model_name},
                    {"requests_per_minute", b.requests_per_minute},
                    {"max_retries", b.max_retries},
                    {"cache_dir", b.cache_dir.string()},
                    {"permits", b.permits},
                    {"api_key_env", b.api_key_env}};
    };
    j["backends"] = {{"chat", backend_json(chat)},
                     {"strong_chat", backend_json(strong_chat)},
                     {"judge_chat", backend_json(judge_chat)},
                     {"embed", backend_json(embed)}};
    j["backends"]["embed"]["semantic_model"] = semantic_model;
    j["backends"]["embed"]["joint_model"] = joint_model;
    j["backends"]["embed"]["semantic_dim"] = semantic_dim;
    j["backends"]["embed"]["joint_dim"] = joint_dim;
    j["gen_instructions"] = {{"in_context", gen_in_context}};
    j["cluster"] = {{"k", k}, {"max_iter", cluster_max_iter}, {"tol", cluster_tol}};
    j["consolidate"] = {{"holdout", holdout}};
    j["match"] = {{"top_k", top_k}};
    j["exemplars"] = {{"count", exemplar_count}};
    j["gen_answers"] = {{"in_context", answer_in_context}};
    j["filter"] = {{"min_dim", filter.min_dim},
                   {"min_caption_words", filter.min_caption_words},
                   {"repeat_window", filter.repeat_window},
                   {"repeat_count", filter.repeat_count}};
    j["stats"] = {{"length_bin_width", length_bin_width}};
    j["bench"] = {{"per_instruction", bench_per_instruction},
                  {"approved_images", approved_images_path.string()}};
    return j;
}

std::string PipelineConfig::config_hash() const {
    // prompt templates participate: editing one invalidates completed stages
    std::string payload = to_json().dump();
    payload += "\x1f" + prompts.caption + "\x1f" + prompts.instruction + "\x1f" +
               prompts.consolidate + "\x1f" + prompts.answer + "\x1f" + prompts.match_check +
               "\x1f" + prompts.judge;
    return sha256_hex(payload);
}

Backends make_backends(const PipelineConfig& config) {
    Backends b;
    if (config.mock) {
        b.chat = std::make_unique<MockChatBackend>(config.seed);
        b.strong_chat = std::make_unique<MockChatBackend>(config.seed ^ 0x5172ull);
        b.judge_chat = std::make_unique<MockChatBackend>(config.seed ^ 0x9f31ull);
        b.embed = std::make_unique<MockEmbedBackend>(config.seed, config.semantic_dim,
                                                     config.joint_dim);
    } else {
        b.chat = std::make_unique<HttpChatBackend>(config.chat);
        b.strong_chat = std::make_unique<HttpChatBackend>(config.strong_chat);
        b.judge_chat = std::make_unique<HttpChatBackend>(config.judge_chat);
        b.embed = std::make_unique<HttpEmbedBackend>(config.embed, config.semantic_dim,
                                                     config.joint_dim, config.semantic_model,
                                                     config.joint_model);
    }
    return b;
}

}  // namespace vistruct

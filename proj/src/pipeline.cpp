#include "vistruct/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <unordered_map>
#include <unordered_set>

#include "vistruct/analytics.hpp"
#include "vistruct/bench.hpp"
#include "vistruct/clustering.hpp"
#include "vistruct/error.hpp"
#include "vistruct/filtering.hpp"
#include "vistruct/hash.hpp"
#include "vistruct/instance_gen.hpp"
#include "vistruct/instruction_gen.hpp"
#include "vistruct/jsonl.hpp"
#include "vistruct/log.hpp"
#include "vistruct/rng.hpp"
#include "vistruct/text.hpp"
#include "vistruct/validate.hpp"

namespace vistruct {

namespace fs = std::filesystem;

const std::vector<std::string>& canonical_stages() {
    static const std::vector<std::string> stages = {
        "caption",   "embed",       "gen-instructions", "cluster", "consolidate", "match",
        "exemplars", "gen-answers", "filter",           "export",  "stats"};
    return stages;
}

Json StageRecord::to_json() const {
    Json j;
    j["fingerprint"] = fingerprint;
    j["inputs"] = inputs;
    j["outputs"] = outputs;
    j["counts"] = counts;
    j["skipped"] = skipped;
    return j;
}

StageRecord StageRecord::from_json(const Json& j) {
    StageRecord r;
    r.fingerprint = j.at("fingerprint").get<std::string>();
    r.inputs = j.at("inputs").get<std::map<std::string, std::string>>();
    r.outputs = j.at("outputs").get<std::map<std::string, std::string>>();
    r.counts = j.at("counts").get<std::map<std::string, std::int64_t>>();
    if (j.contains("skipped")) r.skipped = j["skipped"].get<bool>();
    return r;
}

Json RunManifest::to_json() const {
    Json j;
    j["config_hash"] = config_hash;
    j["seed"] = seed;
    Json stages_json = Json::object();
    for (const auto& [name, record] : stages) stages_json[name] = record.to_json();
    j["stages"] = std::move(stages_json);
    return j;
}

RunManifest RunManifest::from_json(const Json& j) {
    RunManifest m;
    m.config_hash = j.at("config_hash").get<std::string>();
    m.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("stages"))
        for (auto it = j["stages"].begin(); it != j["stages"].end(); ++it)
            m.stages[it.key()] = StageRecord::from_json(it.value());
    return m;
}

RunManifest RunManifest::load(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open manifest: " + path.string());
    return from_json(Json::parse(in));
}

void RunManifest::save(const fs::path& path) const {
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write manifest: " + tmp.string());
        out << to_json().dump(2) << "\n";
    }
    fs::rename(tmp, path);
}

namespace {

// ---------------------------------------------------------------------------
// shared stage helpers

struct StageContext {
    const PipelineConfig& cfg;
    Backends& backends;

    fs::path out(const char* name) const { return cfg.out_dir / name; }
    std::uint64_t stage_seed(const std::string& salt) const { return item_seed(cfg.seed, salt); }
};

template <typename T>
std::vector<T> load_sorted(const fs::path& path, const std::string& kind) {
    auto records = load_records<T>(path, kind);
    std::sort(records.begin(), records.end(),
              [](const T& a, const T& b) { return a.id < b.id; });
    return records;
}

void write_json_file(const fs::path& path, const Json& j) {
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write: " + tmp.string());
        out << j.dump(2) << "\n";
    }
    fs::rename(tmp, path);
}

// Which upstream stage produces each artifact; used for actionable errors.
const std::unordered_map<std::string, std::string>& producer_of() {
    static const std::unordered_map<std::string, std::string> map = {
        {artifact::images_captioned, "caption"},
        {artifact::images_embedded, "embed"},
        {artifact::instructions_raw, "gen-instructions"},
        {artifact::clusters, "cluster"},
        {artifact::instructions_final, "consolidate"},
        {artifact::matches, "match"},
        {artifact::match_audit, "match"},
        {artifact::exemplars, "exemplars"},
        {artifact::instances_raw, "gen-answers"},
        {artifact::instances_passed, "filter"},
        {artifact::instances_rejected, "filter"},
        {artifact::filter_report, "filter"},
        {artifact::training, "export"},
    };
    return map;
}

void require_input(const StageContext& ctx, const std::string& stage, const char* name) {
    const fs::path path = ctx.out(name);
    if (fs::exists(path)) return;
    const auto it = producer_of().find(name);
    if (it != producer_of().end())
        throw Error("stage '" + stage + "' needs " + std::string(name) + "; run stage '" +
                    it->second + "' first");
    throw Error("stage '" + stage + "' needs missing input " + path.string());
}

std::vector<Instruction> consolidated_only(const std::vector<Instruction>& final_set) {
    std::vector<Instruction> out;
    for (const auto& i : final_set)
        if (i.origin == Origin::consolidated) out.push_back(i);
    return out;
}

// ---------------------------------------------------------------------------
// stages

void stage_caption(const StageContext& ctx, StageRecord& record) {
    auto images = load_sorted<ImageRecord>(ctx.cfg.images_path, kind::images);
    std::int64_t captioned = 0;
    for (auto& image : images) {
        if (!image.detailed_description.empty()) continue;
        ChatRequest request;
        request.messages.push_back(
            {Role::user,
             render_prompt(ctx.cfg.prompts.caption, {{"raw_caption", image.raw_caption}})});
        std::string description;
        const std::uint64_t seed = item_seed(ctx.cfg.seed, "caption|" + image.id);
        for (int attempt = 0; attempt < 2; ++attempt) {
            request.seed = seed + static_cast<std::uint64_t>(attempt);
            description = trim_copy(ctx.backends.chat->chat_complete(request));
            if (!description.empty()) break;
        }
        if (description.empty()) {
            log::warn("empty caption completion for image " + image.id);
            continue;
        }
        image.detailed_description = description;
        ++captioned;
    }
    save_records(ctx.out(artifact::images_captioned), kind::images, images, ctx.cfg.seed);
    record.counts["images"] = static_cast<std::int64_t>(images.size());
    record.counts["captioned"] = captioned;
}

void stage_embed(const StageContext& ctx, StageRecord& record) {
    auto images =
        load_sorted<ImageRecord>(ctx.out(artifact::images_captioned), kind::images);
    std::int64_t embedded = 0;
    for (auto& image : images) {
        if (image.image_embedding) continue;
        image.image_embedding = ctx.backends.embed->embed_image(image.uri);
        ++embedded;
    }
    save_records(ctx.out(artifact::images_embedded), kind::images, images, ctx.cfg.seed);
    record.counts["images"] = static_cast<std::int64_t>(images.size());
    record.counts["embedded"] = embedded;
}

void stage_gen_instructions(const StageContext& ctx, StageRecord& record) {
    auto images = load_sorted<ImageRecord>(ctx.out(artifact::images_embedded), kind::images);
    auto seeds = load_sorted<Instruction>(ctx.cfg.seeds_path, kind::instructions);
    if (seeds.empty()) throw ValidationError("seed instruction file is empty");
    for (const auto& s : seeds)
        if (s.origin != Origin::seed)
            throw ValidationError("seed file contains non-seed instruction " + s.id);
    if (static_cast<int>(seeds.size()) < ctx.cfg.gen_in_context)
        throw ValidationError("need at least " + std::to_string(ctx.cfg.gen_in_context) +
                              " seed instructions, have " + std::to_string(seeds.size()));

    InstructionGenOptions options;
    options.in_context = ctx.cfg.gen_in_context;
    options.template_text = ctx.cfg.prompts.instruction;

    std::vector<Instruction> pool;
    std::int64_t skipped = 0;
    for (const auto& image : images) {
        if (image.detailed_description.empty()) {
            ++skipped;
            continue;
        }
        const std::uint64_t seed = item_seed(ctx.cfg.seed, "geninst|" + image.id);
        SplitMix64 rng(seed);
        const auto idx = sample_without_replacement(
            seeds.size(), static_cast<std::size_t>(ctx.cfg.gen_in_context), rng);
        std::vector<Instruction> examples;
        for (const auto i : idx) examples.push_back(seeds[i]);
        auto proposed = propose_instruction("gen-" + image.id, image.detailed_description,
                                            examples, *ctx.backends.chat, seed, options);
        if (proposed)
            pool.push_back(std::move(*proposed));
        else
            ++skipped;
    }

    const std::size_t before_dedupe = pool.size();
    pool = dedupe_exact(pool);

    // semantic embeddings for clustering, one batch per chunk
    constexpr std::size_t kChunk = 64;
    for (std::size_t start = 0; start < pool.size(); start += kChunk) {
        const std::size_t end = std::min(pool.size(), start + kChunk);
        std::vector<std::string> texts;
        for (std::size_t i = start; i < end; ++i) texts.push_back(pool[i].text);
        auto vectors = ctx.backends.embed->embed_text(texts, EmbedSpace::semantic);
        for (std::size_t i = start; i < end; ++i) pool[i].text_embedding = vectors[i - start];
    }

    std::sort(pool.begin(), pool.end(),
              [](const Instruction& a, const Instruction& b) { return a.id < b.id; });
    save_records(ctx.out(artifact::instructions_raw), kind::instructions, pool, ctx.cfg.seed);
    record.counts["proposed"] = static_cast<std::int64_t>(before_dedupe);
    record.counts["deduped"] = static_cast<std::int64_t>(before_dedupe - pool.size());
    record.counts["instructions"] = static_cast<std::int64_t>(pool.size());
    record.counts["skipped_images"] = skipped;
}

void stage_cluster(const StageContext& ctx, StageRecord& record) {
    auto instructions =
        load_sorted<Instruction>(ctx.out(artifact::instructions_raw), kind::instructions);
    if (instructions.empty()) throw ValidationError("no raw instructions to cluster");

    int k = ctx.cfg.k;
    if (k > static_cast<int>(instructions.size())) {
        k = static_cast<int>(instructions.size());
        log::warn("cluster.k clamped to pool size " + std::to_string(k));
    }

    const Mat points = stack_text_embeddings(instructions);
    const auto result = kmeans(points, k, ctx.stage_seed("kmeans"), ctx.cfg.cluster_max_iter,
                               ctx.cfg.cluster_tol);

    std::vector<int> sizes(static_cast<std::size_t>(k), 0);
    for (const int a : result.assignments) sizes[static_cast<std::size_t>(a)]++;
    const auto empty_clusters =
        static_cast<std::int64_t>(std::count(sizes.begin(), sizes.end(), 0));

    JsonlWriter writer(ctx.out(artifact::clusters),
                       JsonlHeader{kSchemaVersion, kind::clusters, ctx.cfg.seed});
    for (std::size_t i = 0; i < instructions.size(); ++i) {
        Json j;
        j["instruction_id"] = instructions[i].id;
        j["cluster_id"] = result.assignments[i];
        writer.write(j);
    }
    writer.close();

    record.counts["instructions"] = static_cast<std::int64_t>(instructions.size());
    record.counts["k"] = k;
    record.counts["iterations"] = result.iterations;
    record.counts["empty_clusters"] = empty_clusters;
    record.counts["inertia_e6"] = static_cast<std::int64_t>(result.inertia * 1e6);
}

void stage_consolidate(const StageContext& ctx, StageRecord& record) {
    auto instructions =
        load_sorted<Instruction>(ctx.out(artifact::instructions_raw), kind::instructions);
    std::unordered_map<std::string, int> assignment;
    {
        JsonlReader reader(ctx.out(artifact::clusters), kind::clusters);
        while (auto j = reader.next())
            assignment[j->at("instruction_id").get<std::string>()] =
                j->at("cluster_id").get<int>();
    }

    std::map<int, std::vector<Instruction>> clusters;
    for (auto& instr : instructions) {
        const auto it = assignment.find(instr.id);
        if (it == assignment.end())
            throw ValidationError("instruction " + instr.id + " missing from cluster assignments");
        instr.cluster_id = it->second;
        clusters[it->second].push_back(instr);
    }

    ConsolidateOptions options;
    options.template_text = ctx.cfg.prompts.consolidate;

    std::vector<Instruction> final_set;
    const int max_cluster_id = clusters.empty() ? 0 : clusters.rbegin()->first;
    int width = 1;
    for (int v = max_cluster_id; v >= 10; v /= 10) ++width;
    std::unordered_set<std::string> texts_seen;
    std::int64_t duplicate_texts = 0;
    for (auto& [cluster_id, members] : clusters) {
        std::string id = std::to_string(cluster_id);
        while (static_cast<int>(id.size()) < width) id.insert(id.begin(), '0');
        auto merged =
            consolidate_cluster("con-" + id, members, *ctx.backends.chat,
                                item_seed(ctx.cfg.seed, "consolidate|" + std::to_string(cluster_id)),
                                options);
        if (!texts_seen.insert(dedupe_key(merged.text)).second) {
            ++duplicate_texts;
            log::info("consolidated instruction " + merged.id +
                      " duplicates an earlier consolidated text (kept)");
        }
        final_set.push_back(std::move(merged));
    }

    // withhold a seeded sample for the benchmark
    std::int64_t held_out = 0;
    if (ctx.cfg.holdout > 0 && !final_set.empty()) {
        const auto n = final_set.size();
        const auto want = std::min<std::size_t>(static_cast<std::size_t>(ctx.cfg.holdout), n);
        SplitMix64 rng(ctx.stage_seed("holdout"));
        for (const auto i : sample_without_replacement(n, want, rng)) {
            final_set[i].origin = Origin::held_out;
            ++held_out;
        }
    }

    // joint-space embeddings for instruction-image matching
    for (auto& instr : final_set)
        instr.match_embedding =
            ctx.backends.embed->embed_text({instr.text}, EmbedSpace::joint).front();

    std::sort(final_set.begin(), final_set.end(),
              [](const Instruction& a, const Instruction& b) { return a.id < b.id; });
    save_records(ctx.out(artifact::instructions_final), kind::instructions, final_set,
                 ctx.cfg.seed);
    record.counts["clusters"] = static_cast<std::int64_t>(clusters.size());
    record.counts["consolidated"] = static_cast<std::int64_t>(final_set.size()) - held_out;
    record.counts["held_out"] = held_out;
    record.counts["duplicate_texts"] = duplicate_texts;
}

void stage_match(const StageContext& ctx, StageRecord& record) {
    auto images = load_sorted<ImageRecord>(ctx.out(artifact::images_embedded), kind::images);
    auto final_set =
        load_sorted<Instruction>(ctx.out(artifact::instructions_final), kind::instructions);
    const auto instructions = consolidated_only(final_set);
    if (instructions.empty()) throw ValidationError("no consolidated instructions to match");

    JsonlWriter matches(ctx.out(artifact::matches),
                        JsonlHeader{kSchemaVersion, kind::matches, ctx.cfg.seed});
    JsonlWriter audit(ctx.out(artifact::match_audit),
                      JsonlHeader{kSchemaVersion, kind::match_audit, ctx.cfg.seed});
    std::int64_t matched = 0;
    for (const auto& image : images) {
        if (!image.image_embedding) {
            log::warn("image " + image.id + " has no embedding; skipping match");
            continue;
        }
        const auto result =
            match_instruction(*image.image_embedding, instructions, ctx.cfg.top_k,
                              item_seed(ctx.cfg.seed, "match|" + image.id));
        Json m;
        m["image_id"] = image.id;
        m["instruction_id"] = result.instruction_id;
        m["score"] = result.score;
        matches.write(m);

        Json a;
        a["image_id"] = image.id;
        a["sampled_instruction_id"] = result.instruction_id;
        Json candidates = Json::array();
        for (const auto& c : result.candidates) {
            Json entry;
            entry["instruction_id"] = c.instruction_id;
            entry["score"] = c.score;
            candidates.push_back(std::move(entry));
        }
        a["candidates"] = std::move(candidates);
        audit.write(a);
        ++matched;
    }
    matches.close();
    audit.close();
    record.counts["matched"] = matched;
}

void stage_exemplars(const StageContext& ctx, StageRecord& record) {
    auto images = load_sorted<ImageRecord>(ctx.out(artifact::images_embedded), kind::images);
    auto final_set =
        load_sorted<Instruction>(ctx.out(artifact::instructions_final), kind::instructions);
    const auto instructions = consolidated_only(final_set);

    ExemplarGenOptions options;
    options.template_text = ctx.cfg.prompts.answer;

    std::vector<Instance> all;
    for (const auto& instr : instructions) {
        if (!instr.match_embedding)
            throw ValidationError("instruction " + instr.id + " has no match_embedding");
        // highest-scoring images supply the grounding descriptions
        std::vector<std::pair<double, const ImageRecord*>> scored;
        for (const auto& image : images) {
            if (!image.image_embedding || image.detailed_description.empty()) continue;
            scored.emplace_back(
                cosine_similarity(*image.image_embedding, *instr.match_embedding), &image);
        }
        if (scored.empty()) {
            log::warn("no usable images for exemplar generation of " + instr.id);
            continue;
        }
        std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
            if (a.first != b.first) return a.first > b.first;
            return a.second->id < b.second->id;
        });
        std::vector<std::pair<std::string, std::string>> top;
        for (std::size_t i = 0; i < scored.size() && i < static_cast<std::size_t>(ctx.cfg.exemplar_count);
             ++i)
            top.emplace_back(scored[i].second->id, scored[i].second->detailed_description);
        auto exemplars =
            gen_exemplars(instr, top, *ctx.backends.strong_chat, ctx.cfg.exemplar_count,
                          item_seed(ctx.cfg.seed, "exemplar|" + instr.id), options);
        for (auto& e : exemplars) all.push_back(std::move(e));
    }
    std::sort(all.begin(), all.end(),
              [](const Instance& a, const Instance& b) { return a.id < b.id; });
    save_records(ctx.out(artifact::exemplars), kind::instances, all, ctx.cfg.seed);
    record.counts["exemplars"] = static_cast<std::int64_t>(all.size());
    record.counts["instructions"] = static_cast<std::int64_t>(instructions.size());
}

void stage_gen_answers(const StageContext& ctx, StageRecord& record) {
    auto images = load_sorted<ImageRecord>(ctx.out(artifact::images_embedded), kind::images);
    auto final_set =
        load_sorted<Instruction>(ctx.out(artifact::instructions_final), kind::instructions);
    auto exemplars = load_sorted<Instance>(ctx.out(artifact::exemplars), kind::instances);

    std::unordered_map<std::string, const ImageRecord*> image_by_id;
    for (const auto& i : images) image_by_id[i.id] = &i;
    std::unordered_map<std::string, const Instruction*> instruction_by_id;
    for (const auto& i : final_set) instruction_by_id[i.id] = &i;
    std::unordered_map<std::string, std::vector<const Instance*>> exemplars_by_instruction;
    for (const auto& e : exemplars) exemplars_by_instruction[e.instruction_id].push_back(&e);

    AnswerGenOptions options;
    options.in_context = ctx.cfg.answer_in_context;
    options.template_text = ctx.cfg.prompts.answer;

    std::vector<std::pair<std::string, std::string>> pairs;  // (image_id, instruction_id)
    {
        JsonlReader reader(ctx.out(artifact::matches), kind::matches);
        while (auto j = reader.next())
            pairs.emplace_back(j->at("image_id").get<std::string>(),
                               j->at("instruction_id").get<std::string>());
    }
    std::sort(pairs.begin(), pairs.end());

    std::vector<Instance> instances;
    std::int64_t skipped = 0;
    for (const auto& [image_id, instruction_id] : pairs) {
        const auto image_it = image_by_id.find(image_id);
        const auto instr_it = instruction_by_id.find(instruction_id);
        if (image_it == image_by_id.end() || instr_it == instruction_by_id.end())
            throw ValidationError("match references unknown image or instruction: " + image_id +
                                  " / " + instruction_id);
        const auto& available = exemplars_by_instruction[instruction_id];
        if (static_cast<int>(available.size()) < options.in_context) {
            log::warn("instruction " + instruction_id + " has only " +
                      std::to_string(available.size()) + " exemplars; skipping image " + image_id);
            ++skipped;
            continue;
        }
        SplitMix64 rng(item_seed(ctx.cfg.seed, "answersel|" + image_id));
        const auto idx = sample_without_replacement(
            available.size(), static_cast<std::size_t>(options.in_context), rng);
        std::vector<Instance> chosen;
        for (const auto i : idx) chosen.push_back(*available[i]);

        auto instance = gen_answer(*instr_it->second, *image_it->second, chosen,
                                   *ctx.backends.chat,
                                   item_seed(ctx.cfg.seed, "answer|" + image_id), options);
        if (instance)
            instances.push_back(std::move(*instance));
        else
            ++skipped;
    }
    std::sort(instances.begin(), instances.end(),
              [](const Instance& a, const Instance& b) { return a.id < b.id; });
    save_records(ctx.out(artifact::instances_raw), kind::instances, instances, ctx.cfg.seed);
    record.counts["instances"] = static_cast<std::int64_t>(instances.size());
    record.counts["skipped"] = skipped;
}

void stage_filter(const StageContext& ctx, StageRecord& record) {
    auto instances = load_sorted<Instance>(ctx.out(artifact::instances_raw), kind::instances);
    auto images = load_sorted<ImageRecord>(ctx.out(artifact::images_embedded), kind::images);
    auto final_set =
        load_sorted<Instruction>(ctx.out(artifact::instructions_final), kind::instructions);

    std::unordered_map<std::string, const ImageRecord*> image_by_id;
    for (const auto& i : images) image_by_id[i.id] = &i;
    std::unordered_map<std::string, const Instruction*> instruction_by_id;
    for (const auto& i : final_set) instruction_by_id[i.id] = &i;

    std::vector<Instance> passed;
    std::vector<Instance> rejected;
    std::map<std::string, std::int64_t> by_reason;
    for (auto& instance : instances) {
        const auto image_it = image_by_id.find(instance.image_id);
        const auto instr_it = instruction_by_id.find(instance.instruction_id);
        if (image_it == image_by_id.end() || instr_it == instruction_by_id.end())
            throw ValidationError("instance " + instance.id + " references unknown records");
        const auto reason =
            apply_filters(instance, *image_it->second, *instr_it->second, *ctx.backends.chat,
                          item_seed(ctx.cfg.seed, "filter|" + instance.id), ctx.cfg.filter);
        if (reason) {
            instance.filter_status = FilterStatus::rejected;
            instance.reject_reason = reason;
            by_reason[to_string(*reason)]++;
            rejected.push_back(instance);
        } else {
            instance.filter_status = FilterStatus::passed;
            passed.push_back(instance);
        }
    }

    save_records(ctx.out(artifact::instances_passed), kind::instances, passed, ctx.cfg.seed);
    save_records(ctx.out(artifact::instances_rejected), kind::instances, rejected, ctx.cfg.seed);

    Json report;
    report["total"] = instances.size();
    report["passed"] = passed.size();
    report["rejected"] = rejected.size();
    report["by_reason"] = by_reason;
    write_json_file(ctx.out(artifact::filter_report), report);

    record.counts["total"] = static_cast<std::int64_t>(instances.size());
    record.counts["passed"] = static_cast<std::int64_t>(passed.size());
    record.counts["rejected"] = static_cast<std::int64_t>(rejected.size());
    for (const auto& [reason, count] : by_reason) record.counts["rejected_" + reason] = count;
}

void stage_export(const StageContext& ctx, StageRecord& record) {
    auto passed = load_sorted<Instance>(ctx.out(artifact::instances_passed), kind::instances);
    auto images = load_sorted<ImageRecord>(ctx.out(artifact::images_embedded), kind::images);
    auto final_set =
        load_sorted<Instruction>(ctx.out(artifact::instructions_final), kind::instructions);

    std::unordered_map<std::string, const ImageRecord*> image_by_id;
    for (const auto& i : images) image_by_id[i.id] = &i;
    std::unordered_map<std::string, const Instruction*> instruction_by_id;
    for (const auto& i : final_set) instruction_by_id[i.id] = &i;

    JsonlWriter writer(ctx.out(artifact::training),
                       JsonlHeader{kSchemaVersion, kind::training, ctx.cfg.seed});
    std::int64_t exported = 0;
    for (const auto& instance : passed) {
        if (instance.stage == InstanceStage::exemplar) continue;  // never exported
        const auto image_it = image_by_id.find(instance.image_id);
        const auto instr_it = instruction_by_id.find(instance.instruction_id);
        if (image_it == image_by_id.end() || instr_it == instruction_by_id.end())
            throw ValidationError("instance " + instance.id + " references unknown records");
        if (instr_it->second->origin == Origin::held_out)
            throw ValidationError("held-out instruction " + instance.instruction_id +
                                  " reached export");
        TrainingRecord tr{ctx.cfg.system_message, instr_it->second->text, instance.answer};
        Json j;
        j["instance_id"] = instance.id;
        j["image_id"] = instance.image_id;
        j["instruction_id"] = instance.instruction_id;
        j["image_uri"] = image_it->second->uri;
        j["rendered"] = render_training_record(tr);
        writer.write(j);
        ++exported;
    }
    writer.close();
    record.counts["exported"] = exported;
}

void stage_stats(const StageContext& ctx, StageRecord& record) {
    auto generated =
        load_sorted<Instruction>(ctx.out(artifact::instructions_raw), kind::instructions);
    auto seeds = load_sorted<Instruction>(ctx.cfg.seeds_path, kind::instructions);
    auto final_set =
        load_sorted<Instruction>(ctx.out(artifact::instructions_final), kind::instructions);
    auto passed = load_sorted<Instance>(ctx.out(artifact::instances_passed), kind::instances);

    std::vector<std::string> answers;
    answers.reserve(passed.size());
    for (const auto& p : passed) answers.push_back(p.answer);

    const auto report =
        diversity_report(generated, seeds, final_set, answers, ctx.cfg.length_bin_width);
    write_json_file(ctx.out(artifact::diversity_report), report.to_json());

    const fs::path hist_dir = ctx.cfg.out_dir / "histograms";
    report.nearest_seed.histogram.write_csv(hist_dir / "nearest_seed_f1.csv");
    report.instruction_lengths.write_csv(hist_dir / "instruction_lengths.csv");
    report.answer_lengths.write_csv(hist_dir / "answer_lengths.csv");

    record.counts["generated"] = static_cast<std::int64_t>(generated.size());
    record.counts["answers"] = static_cast<std::int64_t>(answers.size());
    record.counts["verb_noun_extracted"] = static_cast<std::int64_t>(report.verb_noun_extracted);
}

using StageFn = void (*)(const StageContext&, StageRecord&);

struct StageSpec {
    StageFn fn;
    std::vector<std::string> inputs;   // artifact names in out_dir
    std::vector<std::string> outputs;  // artifact names in out_dir
    bool reads_source_images = false;
    bool reads_seeds = false;
};

const std::map<std::string, StageSpec>& stage_specs() {
    static const std::map<std::string, StageSpec> specs = {
        {"caption", {stage_caption, {}, {artifact::images_captioned}, true, false}},
        {"embed", {stage_embed, {artifact::images_captioned}, {artifact::images_embedded}}},
        {"gen-instructions",
         {stage_gen_instructions,
          {artifact::images_embedded},
          {artifact::instructions_raw},
          false,
          true}},
        {"cluster", {stage_cluster, {artifact::instructions_raw}, {artifact::clusters}}},
        {"consolidate",
         {stage_consolidate,
          {artifact::instructions_raw, artifact::clusters},
          {artifact::instructions_final}}},
        {"match",
         {stage_match,
          {artifact::images_embedded, artifact::instructions_final},
          {artifact::matches, artifact::match_audit}}},
        {"exemplars",
         {stage_exemplars,
          {artifact::images_embedded, artifact::instructions_final},
          {artifact::exemplars}}},
        {"gen-answers",
         {stage_gen_answers,
          {artifact::matches, artifact::images_embedded, artifact::instructions_final,
           artifact::exemplars},
          {artifact::instances_raw}}},
        {"filter",
         {stage_filter,
          {artifact::instances_raw, artifact::images_embedded, artifact::instructions_final},
          {artifact::instances_passed, artifact::instances_rejected, artifact::filter_report}}},
        {"export",
         {stage_export,
          {artifact::instances_passed, artifact::images_embedded, artifact::instructions_final},
          {artifact::training}}},
        {"stats",
         {stage_stats,
          {artifact::instructions_raw, artifact::instructions_final, artifact::instances_passed},
          {artifact::diversity_report, "histograms/nearest_seed_f1.csv",
           "histograms/instruction_lengths.csv", "histograms/answer_lengths.csv"},
          false,
          true}},
    };
    return specs;
}

}  // namespace

RunManifest run_pipeline(const PipelineConfig& config, std::vector<std::string> stages) {
    if (stages.empty()) stages = canonical_stages();
    for (const auto& s : stages)
        if (!stage_specs().count(s)) throw ValidationError("unknown stage: " + s);
    // enforce canonical execution order regardless of the order given
    std::vector<std::string> ordered;
    for (const auto& s : canonical_stages())
        if (std::find(stages.begin(), stages.end(), s) != stages.end()) ordered.push_back(s);

    fs::create_directories(config.out_dir);
    Backends backends = make_backends(config);
    StageContext ctx{config, backends};

    RunManifest manifest;
    const fs::path manifest_path = ctx.out(artifact::manifest);
    if (fs::exists(manifest_path)) {
        try {
            manifest = RunManifest::load(manifest_path);
        } catch (const std::exception& e) {
            log::warn(std::string("could not load manifest, starting fresh: ") + e.what());
        }
    }
    const std::string config_hash = config.config_hash();
    if (manifest.config_hash != config_hash) manifest.stages.clear();
    manifest.config_hash = config_hash;
    manifest.seed = config.seed;

    for (const auto& name : ordered) {
        const auto& spec = stage_specs().at(name);

        StageRecord record;
        if (spec.reads_source_images) {
            if (config.images_path.empty() || !fs::exists(config.images_path))
                throw Error("stage '" + name + "' needs the source image file (data.images): " +
                            config.images_path.string());
            record.inputs["data.images"] = sha256_file(config.images_path);
        }
        if (spec.reads_seeds) {
            if (config.seeds_path.empty() || !fs::exists(config.seeds_path))
                throw Error("stage '" + name + "' needs the seed instruction file (data.seeds): " +
                            config.seeds_path.string());
            record.inputs["data.seeds"] = sha256_file(config.seeds_path);
        }
        for (const auto& input : spec.inputs) {
            require_input(ctx, name, input.c_str());
            record.inputs[input] = sha256_file(ctx.out(input.c_str()));
        }

        std::string fingerprint_payload = config_hash + "|" + name;
        for (const auto& [file, hash] : record.inputs) fingerprint_payload += "|" + file + ":" + hash;
        record.fingerprint = sha256_hex(fingerprint_payload);

        // skip when this exact stage already completed with these inputs
        const auto previous = manifest.stages.find(name);
        if (previous != manifest.stages.end() &&
            previous->second.fingerprint == record.fingerprint) {
            bool outputs_intact = !previous->second.outputs.empty() || spec.outputs.empty();
            for (const auto& [file, hash] : previous->second.outputs) {
                const fs::path path = config.out_dir / file;
                if (!fs::exists(path) || sha256_file(path) != hash) {
                    outputs_intact = false;
                    break;
                }
            }
            if (outputs_intact) {
                log::info("stage '" + name + "' up to date; skipping");
                manifest.stages[name].skipped = true;
                manifest.save(manifest_path);
                continue;
            }
        }

        log::info("running stage '" + name + "'");
        spec.fn(ctx, record);
        for (const auto& output : spec.outputs)
            record.outputs[output] = sha256_file(ctx.out(output.c_str()));
        record.skipped = false;
        manifest.stages[name] = std::move(record);
        manifest.save(manifest_path);
    }
    return manifest;
}

void run_bench_build(const PipelineConfig& config) {
    Backends backends = make_backends(config);
    StageContext ctx{config, backends};

    const fs::path final_path = ctx.out(artifact::instructions_final);
    if (!fs::exists(final_path))
        throw Error("bench-build needs instructions_final.jsonl; run stage 'consolidate' first");
    const fs::path images_path = ctx.out(artifact::images_embedded);
    if (!fs::exists(images_path))
        throw Error("bench-build needs images_embedded.jsonl; run stage 'embed' first");
    const fs::path training_path = ctx.out(artifact::training);
    if (!fs::exists(training_path))
        throw Error("bench-build needs training.jsonl; run stage 'export' first");

    auto final_set = load_sorted<Instruction>(final_path, kind::instructions);
    std::vector<Instruction> held_out;
    for (const auto& i : final_set)
        if (i.origin == Origin::held_out) held_out.push_back(i);
    if (held_out.empty())
        throw ValidationError(
            "no held-out instructions; set consolidate.holdout > 0 and re-run consolidate");

    // benchmark images must be disjoint from the exported training set
    std::unordered_set<std::string> training_images;
    {
        JsonlReader reader(training_path, kind::training);
        while (auto j = reader.next())
            training_images.insert(j->at("image_id").get<std::string>());
    }
    auto images = load_sorted<ImageRecord>(images_path, kind::images);
    std::vector<ImageRecord> pool;
    for (auto& image : images) {
        if (training_images.count(image.id)) continue;
        if (image.detailed_description.empty() || !image.image_embedding) continue;
        // only images that themselves pass the source gates qualify
        if (filter_image_record(image, config.filter.min_dim, config.filter.min_caption_words))
            continue;
        pool.push_back(std::move(image));
    }

    BenchBuildOptions options;
    options.per_instruction = config.bench_per_instruction;
    options.answer_template = config.prompts.answer;
    if (!config.approved_images_path.empty() && fs::exists(config.approved_images_path)) {
        std::ifstream in(config.approved_images_path, std::ios::binary);
        const Json j = Json::parse(in);
        for (auto it = j.begin(); it != j.end(); ++it)
            options.approved_images[it.key()] = it.value().get<std::vector<std::string>>();
    }

    auto items = build_benchmark(held_out, pool, *backends.strong_chat,
                                 item_seed(config.seed, "bench"), options);
    std::sort(items.begin(), items.end(),
              [](const BenchmarkItem& a, const BenchmarkItem& b) { return a.id < b.id; });
    save_records(ctx.out(artifact::benchmark), kind::benchmark, items, config.seed);
    log::info("benchmark built: " + std::to_string(items.size()) + " items");
}

BenchJudgeResult run_bench_judge(const PipelineConfig& config, const fs::path& answers_a,
                                 const fs::path& answers_b, const std::string& model_a,
                                 const std::string& model_b) {
    Backends backends = make_backends(config);
    StageContext ctx{config, backends};

    const fs::path bench_path = ctx.out(artifact::benchmark);
    if (!fs::exists(bench_path)) throw Error("bench-judge needs benchmark.jsonl; run bench-build first");
    auto items = load_sorted<BenchmarkItem>(bench_path, kind::benchmark);

    auto final_set =
        load_sorted<Instruction>(ctx.out(artifact::instructions_final), kind::instructions);
    std::unordered_map<std::string, const Instruction*> instruction_by_id;
    for (const auto& i : final_set) instruction_by_id[i.id] = &i;

    auto load_answers = [](const fs::path& path) {
        std::unordered_map<std::string, std::string> answers;
        JsonlReader reader(path, kind::answers);
        while (auto j = reader.next())
            answers[j->at("item_id").get<std::string>()] = j->at("answer").get<std::string>();
        return answers;
    };
    const auto a_answers = load_answers(answers_a);
    const auto b_answers = load_answers(answers_b);

    std::vector<Verdict> verdicts;
    for (const auto& item : items) {
        const auto a_it = a_answers.find(item.id);
        const auto b_it = b_answers.find(item.id);
        if (a_it == a_answers.end() || b_it == b_answers.end())
            throw ValidationError("missing answer for benchmark item " + item.id);
        const auto instr_it = instruction_by_id.find(item.instruction_id);
        if (instr_it == instruction_by_id.end())
            throw ValidationError("benchmark item " + item.id + " references unknown instruction");
        verdicts.push_back(judge_pair(item, instr_it->second->text, a_it->second, b_it->second,
                                      model_a, model_b, *backends.judge_chat,
                                      item_seed(config.seed, "judge|" + item.id),
                                      config.prompts.judge));
    }

    save_records(ctx.out(artifact::verdicts), kind::verdicts, verdicts, config.seed);
    const auto report = compute_win_rate(verdicts);
    write_json_file(ctx.out(artifact::winrate_report), report.to_json());
    log::info("win rate (" + model_a + " vs " + model_b +
              "): win=" + std::to_string(report.win_rate) +
              " win_or_tie=" + std::to_string(report.win_or_tie_rate));
    return {ctx.out(artifact::verdicts), ctx.out(artifact::winrate_report)};
}

}  // namespace vistruct

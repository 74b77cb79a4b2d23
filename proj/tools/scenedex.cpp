// scenedex: operator CLI for building and querying a scene-indexed corpus.

#include <filesystem>
#include <iostream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "scenedex/config.hpp"
#include "scenedex/error.hpp"
#include "scenedex/pipeline.hpp"

namespace fs = std::filesystem;
using namespace scenedex;

namespace {

enum Exit { kOk = 0, kUsage = 2, kPrerequisite = 3, kProvider = 4, kIntegrity = 5 };

int exit_code(ErrorKind k) {
    switch (k) {
        case ErrorKind::InvalidInput: return kUsage;
        case ErrorKind::Prerequisite:
        case ErrorKind::NotFound: return kPrerequisite;
        case ErrorKind::Transport:
        case ErrorKind::Protocol: return kProvider;
        case ErrorKind::Consistency:
        case ErrorKind::Version:
        case ErrorKind::Extraction:
        case ErrorKind::EmptyTable: return kIntegrity;
    }
    return kIntegrity;
}

void print_report(const StageReport& r, bool json) {
    if (json) {
        std::cout << r.to_json().dump(2) << "\n";
        return;
    }
    for (const auto& line : r.plan) std::cout << line << "\n";
    for (const auto& line : r.notes) std::cout << line << "\n";
    std::cout << fmt::format("{}: {} provider call(s), {} cache hit(s)\n", r.stage, r.provider_calls, r.cache_hits);
}

std::string default_video_id(const fs::path& p) {
    std::string stem = p.stem().string();
    std::replace(stem.begin(), stem.end(), ':', '_');
    return stem.empty() ? "video" : stem;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Scene-aware retrieval over long videos"};
    app.require_subcommand(1);

    std::string config_path;
    std::string workspace;
    int jobs = 1;
    bool dry_run = false;
    bool verbose = false;
    bool json_out = false;
    app.add_option("-c,--config", config_path, "JSON config file (SCENEDEX_* environment variables override it)");
    app.add_option("-w,--workspace", workspace, "corpus directory (default: cache_dir from the config)");
    app.add_option("-j,--jobs", jobs, "parallel provider requests per stage")->check(CLI::PositiveNumber);
    app.add_flag("--dry-run", dry_run, "print the planned provider calls without issuing them");
    app.add_flag("--json", json_out, "machine-readable stage reports");
    app.add_flag("-v,--verbose", verbose, "debug logging");

    auto* ingest = app.add_subcommand("ingest", "register a transcript (.tsv) or transcribe a media file");
    std::string ingest_path, video_id, media;
    double duration_s = 0;
    ingest->add_option("source", ingest_path, "transcript .tsv or media locator")->required();
    ingest->add_option("--video-id", video_id, "video id (default: file stem)");
    ingest->add_option("--duration", duration_s, "video duration in seconds (required for media)");
    ingest->add_option("--media", media, "media locator used for frames when ingesting a transcript");

    auto* segment = app.add_subcommand("segment", "segment transcripts into scenes");
    auto* ground = app.add_subcommand("ground", "caption scenes and build the knowledge graph");
    auto* index = app.add_subcommand("index", "embed scenes and write the store");

    auto* query = app.add_subcommand("query", "answer a question from the indexed corpus");
    std::string query_text;
    std::size_t budget = 0;
    query->add_option("text", query_text, "question")->required();
    query->add_option("--budget", budget, "token budget for retrieved scenes");

    auto* eval = app.add_subcommand("eval", "judge two systems' answers pairwise");
    std::string answers_path, system_a, system_b;
    bool per_domain = false, likert = false;
    eval->add_option("answers", answers_path, "JSON lines of {query_id, system, answer[, query, domain]}")->required();
    eval->add_option("--system", system_a, "system under test")->required();
    eval->add_option("--baseline", system_b, "system compared against")->required();
    eval->add_flag("--per-domain", per_domain, "add one column per domain");
    eval->add_flag("--likert", likert, "also rate --system against --baseline on a 1-5 scale");

    auto* inspect = app.add_subcommand("inspect", "print stored scenes, graph or vectors");
    std::string what;
    std::string graph_format = "json";
    inspect->add_option("what", what, "scenes | graph | vectors")->required()->check(CLI::IsMember({"scenes", "graph", "vectors"}));
    inspect->add_option("--format", graph_format, "graph output: json | edges")->check(CLI::IsMember({"json", "edges"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kOk : kUsage;
    }
    spdlog::set_level(verbose ? spdlog::level::debug : spdlog::level::warn);
    spdlog::set_pattern("%^%l%$: %v");

    try {
        EngineConfig cfg = EngineConfig::load(config_path);
        const fs::path root = workspace.empty() ? fs::path(cfg.cache_dir) : fs::path(workspace);

        if (inspect->parsed()) {
            if (what == "scenes") {
                if (!fs::exists(root / "scenes.json")) fail(ErrorKind::Prerequisite, "no scenes; run `segment` first");
                std::cout << read_file(root / "scenes.json") << "\n";
            } else if (what == "graph") {
                if (!fs::exists(root / "graph.json")) fail(ErrorKind::Prerequisite, "no graph; run `ground` first");
                auto doc = nlohmann::json::parse(read_file(root / "graph.json"), nullptr, false);
                if (doc.is_discarded()) fail(ErrorKind::Consistency, "graph.json is not valid JSON");
                const auto g = KnowledgeGraph::from_json(doc);
                std::cout << (graph_format == "edges" ? g.edge_list() : g.to_json().dump(2) + "\n");
            } else {
                if (!fs::exists(root / "VERSION")) fail(ErrorKind::Prerequisite, "no index; run `index` first");
                const auto b = load_bundle(root);
                b.check_agreement();
                nlohmann::json doc{{"dimension", b.vectors.dimension()}, {"count", b.vectors.size()}};
                for (const auto& id : b.vectors.ids()) {
                    doc["rows"].push_back({{"scene_id", id},
                                           {"start_s", b.vectors.start(id).value()},
                                           {"norm", b.vectors.vector(id).norm()}});
                }
                std::cout << doc.dump(2) << "\n";
            }
            return kOk;
        }

        auto asr = make_provider(cfg.asr_url, cfg);
        auto llm = make_provider(cfg.llm_url, cfg);
        auto vlm = make_provider(cfg.vlm_url, cfg);
        auto emb = make_provider(cfg.embed_url, cfg);
        auto judge = make_provider(cfg.judge_url, cfg);
        Engine engine(cfg, Upstream{asr.get(), llm.get(), vlm.get(), emb.get(), judge.get()}, root, jobs);

        if (ingest->parsed()) {
            const fs::path src = ingest_path;
            const std::string id = video_id.empty() ? default_video_id(src) : video_id;
            StageReport r;
            if (src.extension() == ".tsv") {
                std::optional<Seconds> d;
                if (duration_s > 0) d = Seconds::from_double(duration_s);
                r = engine.ingest_transcript(src, id, d, media);
            } else {
                r = engine.ingest_media(ingest_path, id, Seconds::from_double(duration_s), dry_run);
            }
            print_report(r, json_out);
        } else if (segment->parsed()) {
            print_report(engine.segment(dry_run), json_out);
        } else if (ground->parsed()) {
            print_report(engine.ground(dry_run), json_out);
        } else if (index->parsed()) {
            print_report(engine.index(dry_run), json_out);
        } else if (query->parsed()) {
            if (dry_run) fail(ErrorKind::InvalidInput, "--dry-run is not supported for query");
            std::optional<std::size_t> b;
            if (budget > 0) b = budget;
            const QueryResult res = engine.query(query_text, b);
            std::cout << res.to_json(load_bundle(root)).dump(2) << "\n";
        } else if (eval->parsed()) {
            if (!fs::exists(answers_path)) fail(ErrorKind::NotFound, "answers file not found: " + answers_path);
            const auto records = parse_answer_lines(read_file(answers_path));
            const EvalReport rep = engine.evaluate(records, system_a, system_b, per_domain, likert);
            if (json_out) {
                nlohmann::json doc{{"win_rates", rep.table.to_json()}};
                if (rep.likert) doc["likert"] = *rep.likert;
                std::cout << doc.dump(2) << "\n";
            } else {
                std::cout << rep.table.to_text();
                if (rep.likert) std::cout << "likert: " << rep.likert->dump() << "\n";
            }
        }
        return kOk;
    } catch (const Error& e) {
        spdlog::error("{} ({})", e.what(), to_string(e.kind()));
        return exit_code(e.kind());
    } catch (const std::exception& e) {
        spdlog::error("{}", e.what());
        return kIntegrity;
    }
}

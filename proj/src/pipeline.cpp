#include "scenedex/pipeline.hpp"

#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <set>
#include <thread>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "scenedex/error.hpp"
#include "scenedex/tokenizer.hpp"

namespace fs = std::filesystem;

namespace scenedex {

namespace {

enum ServiceIndex { kAsr, kLlm, kVlm, kEmbed, kJudge, kServiceCount };
constexpr const char* kServiceNames[] = {"asr", "llm", "vlm", "embed", "judge"};

std::string shell_quote(const std::string& s) {
    std::string out = "'";
    for (char c : s) out += c == '\'' ? std::string("'\\''") : std::string(1, c);
    return out + "'";
}

fs::path transcript_path(const fs::path& root, const std::string& video_id) {
    return root / "transcripts" / (sha256_hex(video_id).substr(0, 16) + ".tsv");
}

nlohmann::json scene_knowledge_json(const SceneKnowledge& sk) {
    KnowledgeGraph g;
    g.merge(sk);
    auto doc = g.to_json();
    doc["degraded"] = sk.degraded;
    return doc;
}

}  // namespace

void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn) {
    const std::size_t workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, jobs)));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::atomic<bool> stop{false};
    std::exception_ptr first;
    std::mutex mu;
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i; !stop && (i = next++) < n;) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(mu);
                    if (!first) first = std::current_exception();
                    stop = true;
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (first) std::rethrow_exception(first);
}

std::vector<FrameRef> locate_frames(const std::string& media, const FramePlan& plan, const std::string& command,
                                    const fs::path& out_dir) {
    std::vector<FrameRef> out;
    for (const auto t : plan.timestamps) {
        const std::string ts = format_seconds_fixed(t, 3);
        if (command.empty()) {
            out.push_back({t, media + "#t=" + format_seconds(t)});
            continue;
        }
        fs::create_directories(out_dir);
        const fs::path file = out_dir / fmt::format("{}_{}.jpg", sha256_hex(media).substr(0, 16), t.micros());
        if (!fs::exists(file)) {
            std::string cmd = command;
            for (auto [key, value] : {std::pair<std::string, std::string>{"{media}", shell_quote(media)},
                                      {"{t}", ts},
                                      {"{out}", shell_quote(file.string())}}) {
                for (std::size_t p = 0; (p = cmd.find(key, p)) != std::string::npos; p += value.size())
                    cmd.replace(p, key.size(), value);
            }
            if (std::system(cmd.c_str()) != 0 || !fs::exists(file))
                fail(ErrorKind::Transport, fmt::format("frame command failed for {} at {} s", media, ts));
        }
        out.push_back({t, file.string()});
    }
    return out;
}

nlohmann::json StageReport::to_json() const {
    nlohmann::json doc{{"stage", stage}, {"provider_calls", provider_calls}, {"cache_hits", cache_hits}};
    if (!plan.empty()) doc["plan"] = plan;
    if (!notes.empty()) doc["notes"] = notes;
    return doc;
}

struct Engine::Service {
    Service(Provider& upstream, KvStore& kv) : counting(upstream), cached(counting, kv) {}
    CountingProvider counting;
    CachedProvider cached;
};

Engine::Engine(EngineConfig cfg, Upstream upstream, fs::path root, int jobs)
    : cfg_(std::move(cfg)), root_(std::move(root)), jobs_(std::max(1, jobs)) {
    cfg_.validate();
    fs::create_directories(root_);
    kv_ = KvStore(root_ / "kvcache");
    Provider* ups[] = {upstream.asr, upstream.llm, upstream.vlm, upstream.embed, upstream.judge};
    for (auto* p : ups) services_.push_back(p ? std::make_unique<Service>(*p, kv_) : nullptr);
}

Engine::~Engine() = default;

Provider& Engine::service(int which) {
    if (!services_[which])
        fail(ErrorKind::InvalidInput, fmt::format("no {} provider configured", kServiceNames[which]));
    return services_[which]->cached;
}

std::size_t Engine::upstream_calls() const {
    std::size_t n = 0;
    for (const auto& s : services_) n += s ? s->counting.calls() : 0;
    return n;
}

std::size_t Engine::cache_hits() const {
    std::size_t n = 0;
    for (const auto& s : services_) n += s ? s->cached.hits() : 0;
    return n;
}

StageReport Engine::begin(const std::string& stage) const {
    StageReport r;
    r.stage = stage;
    return r;
}

void Engine::finish(StageReport& r, std::size_t calls0, std::size_t hits0) const {
    r.provider_calls = upstream_calls() - calls0;
    r.cache_hits = cache_hits() - hits0;
    spdlog::info("{}: {} provider call(s), {} cache hit(s)", r.stage, r.provider_calls, r.cache_hits);
}

std::vector<VideoEntry> Engine::videos() const {
    const fs::path p = root_ / "videos.json";
    if (!fs::exists(p)) return {};
    const auto doc = nlohmann::json::parse(read_file(p), nullptr, false);
    if (doc.is_discarded() || !doc.is_array()) fail(ErrorKind::Consistency, "videos.json is corrupt");
    std::vector<VideoEntry> out;
    for (const auto& v : doc) {
        out.push_back({v.at("video_id").get<std::string>(), v.value("media", std::string{}),
                       Seconds::from_micros(v.at("duration_us").get<std::int64_t>())});
    }
    return out;
}

void Engine::write_videos(const std::vector<VideoEntry>& v) const {
    auto doc = nlohmann::json::array();
    for (const auto& e : v) doc.push_back({{"video_id", e.video_id}, {"media", e.media}, {"duration_us", e.duration.micros()}});
    write_file_atomic(root_ / "videos.json", doc.dump(2));
}

std::string Engine::media_for(const std::string& video_id) const {
    for (const auto& v : videos()) {
        if (v.video_id == video_id) return v.media.empty() ? video_id : v.media;
    }
    return video_id;
}

StageReport Engine::ingest_transcript(const fs::path& tsv, const std::string& video_id,
                                      std::optional<Seconds> duration, const std::string& media) {
    StageReport r = begin("ingest");
    if (video_id.empty() || video_id.find(':') != std::string::npos)
        fail(ErrorKind::InvalidInput, "video id must be non-empty and must not contain ':'");
    Transcript t = read_transcript_file(tsv, video_id, duration);
    fs::create_directories(root_ / "transcripts");
    write_file_atomic(transcript_path(root_, video_id), format_transcript(t));

    auto entries = videos();
    auto it = std::find_if(entries.begin(), entries.end(), [&](const VideoEntry& e) { return e.video_id == video_id; });
    VideoEntry entry{video_id, media, t.duration};
    if (it == entries.end()) entries.push_back(entry);
    else *it = entry;
    write_videos(entries);
    r.notes.push_back(fmt::format("{}: {} utterances over {} s", video_id, t.utterances.size(), format_seconds(t.duration)));
    return r;
}

StageReport Engine::ingest_media(const std::string& media, const std::string& video_id, Seconds duration,
                                 bool dry_run) {
    StageReport r = begin("ingest");
    const auto calls0 = upstream_calls();
    const auto hits0 = cache_hits();
    if (!(duration > Seconds{})) fail(ErrorKind::InvalidInput, "media ingest needs a positive --duration");
    const auto chunks = make_chunk_ranges(duration, Seconds::from_double(cfg_.chunk_len_s),
                                          Seconds::from_double(cfg_.overlap_s));
    if (dry_run) {
        for (const auto& c : chunks)
            r.plan.push_back(fmt::format("POST /v1/asr model={} chunk {} [{}, {}]", cfg_.asr_model, c.index,
                                         format_seconds(c.start), format_seconds(c.end)));
        return r;
    }
    std::vector<Transcript> pieces(chunks.size());
    Provider& asr = service(kAsr);
    parallel_for(chunks.size(), jobs_, [&](std::size_t i) {
        const Transcript rel = transcribe(video_id, media, chunks[i], asr, cfg_.asr_model);
        pieces[i] = shift_transcript(rel, chunks[i].start, duration);
    });
    const Transcript joined = join_chunk_transcripts(video_id, duration, chunks, pieces);
    fs::create_directories(root_ / "transcripts");
    const fs::path out = transcript_path(root_, video_id);
    write_file_atomic(out, format_transcript(joined));
    finish(r, calls0, hits0);
    auto entries = videos();
    std::erase_if(entries, [&](const VideoEntry& e) { return e.video_id == video_id; });
    entries.push_back({video_id, media, duration});
    write_videos(entries);
    r.notes.push_back(fmt::format("{}: {} utterances from {} chunk(s)", video_id, joined.utterances.size(), chunks.size()));
    return r;
}

StageReport Engine::segment(bool dry_run) {
    StageReport r = begin("segment");
    const auto entries = videos();
    if (entries.empty()) fail(ErrorKind::Prerequisite, "no ingested videos; run `ingest` first");
    const auto calls0 = upstream_calls();
    const auto hits0 = cache_hits();
    const SegmenterConfig seg = cfg_.segmenter();
    const RefineConfig ref = cfg_.refine();

    std::vector<SceneSet> sets;
    for (const auto& v : entries) {
        const Transcript t = read_transcript_file(transcript_path(root_, v.video_id), v.video_id, v.duration);
        const auto chunks = make_chunk_ranges(t.duration, Seconds::from_double(cfg_.chunk_len_s),
                                              Seconds::from_double(cfg_.overlap_s));
        if (dry_run) {
            for (const auto& c : chunks) {
                const Transcript slice = slice_transcript(t, c);
                if (slice.utterances.empty()) {
                    r.plan.push_back(fmt::format("{} chunk {} [{}, {}]: no speech, no call", v.video_id, c.index,
                                                 format_seconds(c.start), format_seconds(c.end)));
                    continue;
                }
                ProviderRequest req = ProviderRequest::chat(seg.base_model,
                                                            build_segmentation_prompt(slice, seg.delimiters, c.start).text);
                req.temperature = seg.temperature;
                req.top_p = seg.top_p;
                r.plan.push_back(fmt::format("{} chunk {} [{}, {}]: POST /v1/chat model={} ({} prompt tokens, {})",
                                             v.video_id, c.index, format_seconds(c.start), format_seconds(c.end),
                                             seg.base_model, token_length(req.messages[0].content),
                                             kv_.contains(req.cache_key()) ? "cached" : "uncached"));
            }
            continue;
        }
        std::vector<ChunkScenes> per_chunk(chunks.size());
        std::vector<std::string> notes(chunks.size());
        Provider& llm = service(kLlm);
        parallel_for(chunks.size(), jobs_, [&](std::size_t i) {
            const Transcript slice = slice_transcript(t, chunks[i]);
            const auto silences = detect_silences(slice, chunks[i], Seconds::from_double(cfg_.silence_min_gap_s));
            SegmentationOutcome o = segment_chunk(slice, chunks[i], llm, seg);
            if (o.used_fallback) notes[i] = fmt::format("{} chunk {}: default partition", v.video_id, chunks[i].index);
            per_chunk[i] = {chunks[i], refine_chunk(o.scenes, silences, chunks[i], slice, ref)};
        });
        for (auto& n : notes) {
            if (!n.empty()) r.notes.push_back(std::move(n));
        }
        SceneSet set = stitch_chunks(std::move(per_chunk), t.duration, t, ref);
        set.video_id = v.video_id;
        for (std::size_t i = 0; i < set.scenes.size(); ++i) set.scenes[i].id = scene_id(v.video_id, i + 1);
        set.validate();
        r.notes.push_back(fmt::format("{}: {} scenes", v.video_id, set.scenes.size()));
        sets.push_back(std::move(set));
    }
    if (!dry_run) write_file_atomic(root_ / "scenes.json", scene_sets_to_json(sets).dump(2));
    finish(r, calls0, hits0);
    return r;
}

std::vector<SceneSet> Engine::load_scene_sets(const char* needed_by) const {
    const fs::path p = root_ / "scenes.json";
    if (!fs::exists(p)) fail(ErrorKind::Prerequisite, fmt::format("{} needs scenes; run `segment` first", needed_by));
    auto doc = nlohmann::json::parse(read_file(p), nullptr, false);
    if (doc.is_discarded()) fail(ErrorKind::Consistency, "scenes.json is not valid JSON");
    return scene_sets_from_json(doc);
}

StageReport Engine::ground(bool dry_run) {
    StageReport r = begin("ground");
    const auto sets = load_scene_sets("ground");
    const auto calls0 = upstream_calls();
    const auto hits0 = cache_hits();
    const GroundingConfig g = cfg_.grounding();

    std::vector<const Scene*> scenes;
    std::vector<std::string> media;
    for (const auto& set : sets) {
        const std::string m = media_for(set.video_id);
        for (const auto& s : set.scenes) {
            scenes.push_back(&s);
            media.push_back(m);
        }
    }
    if (dry_run) {
        for (const auto* s : scenes) {
            const auto plan = plan_frames(*s, g.frame_interval, g.max_frames);
            r.plan.push_back(fmt::format("{}: POST /v1/caption model={} ({} frames){}", s->id, g.vlm_model,
                                         plan.timestamps.size(),
                                         s->silent() ? "" : fmt::format("; 2-3x POST /v1/chat model={}", g.llm_model)));
        }
        return r;
    }

    std::vector<std::string> captions(scenes.size());
    std::vector<std::optional<SceneKnowledge>> knowledge(scenes.size());
    std::vector<std::vector<std::string>> notes(scenes.size());
    Provider& vlm = service(kVlm);
    Provider& llm = service(kLlm);
    parallel_for(scenes.size(), jobs_, [&](std::size_t i) {
        const Scene& s = *scenes[i];
        const FramePlan plan = plan_frames(s, g.frame_interval, g.max_frames);
        const auto frames = locate_frames(media[i], plan, cfg_.frame_command, root_ / "frames");
        captions[i] = caption_scene(s, plan, frames, vlm, g);
        if (s.silent()) return;
        auto mine = [&](std::string_view text, Modality m) -> Extraction {
            if (trim(text).empty()) return {};
            try {
                return extract_knowledge(text, m, s.id, llm, g);
            } catch (const Error& e) {
                if (e.kind() != ErrorKind::Extraction) throw;
                notes[i].push_back(fmt::format("{}: {} extraction dropped", s.id, to_string(m)));
                return {};
            }
        };
        const Extraction vis = mine(captions[i], Modality::Visual);
        const Extraction asr = mine(s.transcript_text, Modality::Asr);
        knowledge[i] = fuse_scene_knowledge(s.id, vis, asr, llm, g);
        if (knowledge[i]->degraded) notes[i].push_back(s.id + ": mechanical-only fusion");
    });

    KnowledgeGraph graph;
    for (std::size_t i = 0; i < scenes.size(); ++i) {
        kv_.put(caption_key(scenes[i]->id), captions[i]);
        if (knowledge[i]) {
            kv_.put(knowledge_key(scenes[i]->id), scene_knowledge_json(*knowledge[i]).dump());
            graph.merge(*knowledge[i]);
        }
        for (auto& n : notes[i]) r.notes.push_back(std::move(n));
    }
    graph.check_integrity();
    write_file_atomic(root_ / "graph.json", graph.to_json().dump(2));
    r.notes.push_back(fmt::format("graph: {} nodes, {} edges", graph.node_count(), graph.edge_count()));
    finish(r, calls0, hits0);
    return r;
}

StageReport Engine::index(bool dry_run) {
    StageReport r = begin("index");
    auto sets = load_scene_sets("index");
    if (!fs::exists(root_ / "graph.json")) fail(ErrorKind::Prerequisite, "index needs grounding; run `ground` first");
    if (cfg_.embedding_dim <= 0) fail(ErrorKind::InvalidInput, "set embedding_dim in the config before indexing");
    const auto calls0 = upstream_calls();
    const auto hits0 = cache_hits();

    std::vector<const Scene*> scenes;
    for (const auto& set : sets) {
        for (const auto& s : set.scenes) scenes.push_back(&s);
    }
    std::vector<ContextChunk> chunks(scenes.size());
    for (std::size_t i = 0; i < scenes.size(); ++i) {
        auto caption = kv_.get(caption_key(scenes[i]->id));
        if (!caption)
            fail(ErrorKind::Prerequisite, fmt::format("no caption for {}; run `ground` first", scenes[i]->id));
        chunks[i] = build_context_chunk(*scenes[i], *caption);
        if (chunks[i].degraded) r.notes.push_back(scenes[i]->id + ": no caption");
    }
    if (dry_run) {
        for (const auto& c : chunks)
            r.plan.push_back(fmt::format("{}: POST /v1/embed model={} ({} tokens)", c.scene_id, cfg_.embed_model, c.token_len));
        return r;
    }

    StoreBundle bundle;
    bundle.videos = sets;
    auto graph_doc = nlohmann::json::parse(read_file(root_ / "graph.json"), nullptr, false);
    if (graph_doc.is_discarded()) fail(ErrorKind::Consistency, "graph.json is not valid JSON");
    bundle.graph = KnowledgeGraph::from_json(graph_doc);
    const std::size_t condensed = condense_descriptions(bundle.graph, service(kLlm), cfg_.grounding());
    if (condensed) r.notes.push_back(fmt::format("condensed {} entity description(s)", condensed));

    std::vector<EmbeddingVector> vecs(chunks.size());
    Provider& embedder = service(kEmbed);
    parallel_for(chunks.size(), jobs_, [&](std::size_t i) {
        vecs[i] = embed_text(chunks[i].text, embedder, cfg_.embed_model, cfg_.embedding_dim);
    });
    bundle.vectors = VectorIndex(cfg_.embedding_dim);
    for (std::size_t i = 0; i < chunks.size(); ++i) {
        bundle.vectors.upsert(chunks[i].scene_id, scenes[i]->start, vecs[i]);
        kv_.put(chunk_key(chunks[i].scene_id),
                nlohmann::json{{"text", chunks[i].text}, {"token_len", chunks[i].token_len}}.dump());
    }
    bundle.kv = kv_;
    bundle.check_agreement();
    persist(bundle, root_);
    r.notes.push_back(fmt::format("{} vectors of dimension {}", bundle.vectors.size(), cfg_.embedding_dim));
    finish(r, calls0, hits0);
    return r;
}

QueryResult Engine::query(const std::string& text, std::optional<std::size_t> budget, StageReport* report) {
    if (!fs::exists(root_ / "VERSION")) fail(ErrorKind::Prerequisite, "no index found; run `index` first");
    StageReport r = begin("query");
    const auto calls0 = upstream_calls();
    const auto hits0 = cache_hits();
    const StoreBundle stores = load_bundle(root_);
    const RetrievalConfig rc = cfg_.retrieval();

    QueryResult result;
    result.query.text = text;
    result.query.budget_tokens = budget.value_or(static_cast<std::size_t>(cfg_.budget_tokens));
    if (result.query.budget_tokens == 0) fail(ErrorKind::InvalidInput, "budget must be positive");
    bool kw_degraded = false;
    result.query.keywords = extract_query_keywords(text, service(kLlm), rc, &kw_degraded);
    if (kw_degraded) result.degraded_flags.push_back("keywords:fallback");

    const EmbeddingVector qv = embed_text(text, service(kEmbed), cfg_.embed_model, cfg_.embedding_dim);
    std::map<std::string, std::size_t> position;
    std::size_t pos = 0;
    for (const auto* s : stores.all_scenes()) position[s->id] = pos++;
    std::vector<SceneCandidate> candidates;
    for (const auto& hit : stores.vectors.nearest_scenes(qv, stores.vectors.size())) {
        auto rec = stores.kv.get(chunk_key(hit.scene_id));
        if (!rec) fail(ErrorKind::Consistency, "no chunk record for " + hit.scene_id);
        const auto doc = nlohmann::json::parse(*rec);
        candidates.push_back({hit.scene_id, hit.score, doc.at("token_len").get<std::size_t>(), position.at(hit.scene_id)});
    }
    result.selection = select_scenes(std::move(candidates), result.query.budget_tokens);

    std::map<std::string, std::string> captions;
    const GroundingConfig g = cfg_.grounding();
    for (const auto& id : result.selection.scene_ids) {
        const Scene& s = *stores.find_scene(id);
        const std::string generic = stores.kv.get(caption_key(id)).value_or("");
        const std::string video = id.substr(0, id.rfind(':'));
        const auto plan = plan_frames(s, g.frame_interval, g.max_frames);
        std::vector<FrameRef> frames;
        try {
            frames = locate_frames(media_for(video), plan, cfg_.frame_command, root_ / "frames");
        } catch (const Error& e) {
            spdlog::warn("{}: {}", id, e.what());
        }
        FocusedCaption fc = focused_caption(s, result.query.keywords, frames, generic, service(kVlm), rc);
        if (fc.degraded) result.degraded_flags.push_back("focused_caption:" + id);
        captions[id] = std::move(fc.text);
    }
    const AssembledContext ctx = assemble_context(result.selection, stores.graph, stores, captions, rc.relation_depth);
    result.context_tokens = token_length(ctx.rendered);
    result.answer = generate_answer(result.query, ctx, result.selection, service(kLlm), rc);
    finish(r, calls0, hits0);
    if (report) *report = r;
    return result;
}

EvalReport Engine::evaluate(const std::vector<AnswerRecord>& records, const std::string& system_a,
                            const std::string& system_b, bool per_domain, bool likert, StageReport* report) {
    StageReport r = begin("eval");
    const auto calls0 = upstream_calls();
    const auto hits0 = cache_hits();
    struct Pair {
        const AnswerRecord* a = nullptr;
        const AnswerRecord* b = nullptr;
    };
    std::map<std::string, Pair> pairs;
    std::vector<std::string> order;
    for (const auto& rec : records) {
        if (rec.system != system_a && rec.system != system_b) continue;
        if (!pairs.count(rec.query_id)) order.push_back(rec.query_id);
        auto& p = pairs[rec.query_id];
        (rec.system == system_a ? p.a : p.b) = &rec;
    }
    std::vector<std::string> complete;
    for (const auto& id : order) {
        if (pairs[id].a && pairs[id].b) complete.push_back(id);
        else r.notes.push_back(id + ": missing an answer from one system");
    }
    std::vector<Comparison> comparisons(complete.size());
    std::vector<LikertResult> ratings(likert ? complete.size() : 0);
    Provider& judge = service(kJudge);
    const EvalConfig ec = cfg_.eval();
    parallel_for(complete.size(), jobs_, [&](std::size_t i) {
        const Pair& p = pairs.at(complete[i]);
        const std::string& q = p.a->query.empty() ? p.b->query.empty() ? complete[i] : p.b->query : p.a->query;
        if (p.a->answer == p.b->answer) {
            comparisons[i].valid = false;
        } else {
            comparisons[i] = judge_pair(q, p.a->answer, p.b->answer, judge, ec);
        }
        comparisons[i].query_id = complete[i];
        comparisons[i].domain = p.a->domain.empty() ? p.b->domain : p.a->domain;
        if (likert) ratings[i] = likert_score(q, p.a->answer, p.b->answer, judge, ec);
    });
    EvalReport out{aggregate(comparisons, per_domain, system_a, system_b), std::nullopt};
    if (likert) {
        nlohmann::json doc{{"system", system_a}, {"reference", system_b}};
        std::map<Dimension, double> sum;
        std::size_t valid = 0;
        std::size_t clamped = 0;
        for (const auto& lr : ratings) {
            clamped += lr.clamped;
            if (!lr.valid) continue;
            ++valid;
            for (auto [d, v] : lr.scores) sum[d] += v;
        }
        for (auto d : kLikertDimensions) doc["mean"][to_string(d)] = valid ? sum[d] / static_cast<double>(valid) : 0.0;
        doc["valid"] = valid;
        doc["invalid"] = ratings.size() - valid;
        doc["clamped"] = clamped;
        out.likert = std::move(doc);
    }
    finish(r, calls0, hits0);
    if (report) *report = r;
    return out;
}

}  // namespace scenedex

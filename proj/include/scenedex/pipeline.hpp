#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "scenedex/config.hpp"
#include "scenedex/eval.hpp"
#include "scenedex/index.hpp"
#include "scenedex/retrieval.hpp"

namespace scenedex {

/// Runs `fn(i)` for i in [0, n) on up to `jobs` threads; the first exception
/// is rethrown after all workers stop.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn);

/// Frame locators for a plan: `{media}#t=<s>` by default, or files produced
/// by `command` (placeholders {media}, {t}, {out}) under `out_dir`.
std::vector<FrameRef> locate_frames(const std::string& media, const FramePlan& plan, const std::string& command,
                                    const std::filesystem::path& out_dir);

struct Upstream {
    Provider* asr = nullptr;
    Provider* llm = nullptr;
    Provider* vlm = nullptr;
    Provider* embed = nullptr;
    Provider* judge = nullptr;
};

struct VideoEntry {
    std::string video_id;
    std::string media;
    Seconds duration;
};

struct StageReport {
    std::string stage;
    std::size_t provider_calls = 0;  // requests that reached an upstream provider
    std::size_t cache_hits = 0;
    std::vector<std::string> plan;   // dry runs only
    std::vector<std::string> notes;

    nlohmann::json to_json() const;
};

struct EvalReport {
    WinRateTable table;
    std::optional<nlohmann::json> likert;
};

/// One corpus workspace on disk. Stage artifacts live directly under the
/// root, which after `index` is also a loadable StoreBundle directory.
class Engine {
public:
    Engine(EngineConfig cfg, Upstream upstream, std::filesystem::path root, int jobs = 1);
    ~Engine();

    const std::filesystem::path& root() const { return root_; }
    const EngineConfig& config() const { return cfg_; }

    StageReport ingest_transcript(const std::filesystem::path& tsv, const std::string& video_id,
                                  std::optional<Seconds> duration = std::nullopt, const std::string& media = {});
    StageReport ingest_media(const std::string& media, const std::string& video_id, Seconds duration, bool dry_run);
    StageReport segment(bool dry_run = false);
    StageReport ground(bool dry_run = false);
    StageReport index(bool dry_run = false);
    QueryResult query(const std::string& text, std::optional<std::size_t> budget = std::nullopt,
                      StageReport* report = nullptr);
    EvalReport evaluate(const std::vector<AnswerRecord>& records, const std::string& system_a,
                        const std::string& system_b, bool per_domain, bool likert, StageReport* report = nullptr);

    std::vector<VideoEntry> videos() const;
    std::size_t upstream_calls() const;

private:
    struct Service;
    Provider& service(int which);
    std::size_t cache_hits() const;
    StageReport begin(const std::string& stage) const;
    void finish(StageReport& r, std::size_t calls0, std::size_t hits0) const;
    void write_videos(const std::vector<VideoEntry>& v) const;
    std::vector<SceneSet> load_scene_sets(const char* needed_by) const;
    std::string media_for(const std::string& video_id) const;

    EngineConfig cfg_;
    std::filesystem::path root_;
    int jobs_;
    KvStore kv_;
    std::vector<std::unique_ptr<Service>> services_;
};

}  // namespace scenedex

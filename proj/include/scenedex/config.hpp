#pragma once

#include <filesystem>
#include <memory>
#include <string>

#include <json.hpp>

#include "scenedex/eval.hpp"
#include "scenedex/grounding.hpp"
#include "scenedex/refine.hpp"
#include "scenedex/retrieval.hpp"
#include "scenedex/segmenter.hpp"

namespace scenedex {

struct EngineConfig {
    // Endpoints: "mock:" selects the built-in offline provider. Per-service
    // URLs fall back to provider_url when empty.
    std::string provider_url = "mock:";
    std::string asr_url;
    std::string llm_url;
    std::string vlm_url;
    std::string embed_url;
    std::string judge_url;
    std::string api_key;  // usually from SCENEDEX_API_KEY

    std::string asr_model = "distil-whisper";
    std::string llm_base_model = "gpt-4o-mini";
    std::string llm_escalated_model = "gpt-4o";
    std::string vlm_model = "minicpm-v";
    std::string embed_model = "text-embedding";
    std::string judge_model = "gpt-4o-mini";
    double temperature = 0.7;
    double top_p = 0.95;

    double chunk_len_s = 300;
    double overlap_s = 10;
    double epsilon_s = 10;
    double min_scene_s = 10;
    double align_window_s = 3;
    double silence_min_gap_s = 2;
    double seg_min_scene_s = 15;
    double seg_max_scene_s = 60;
    double frame_interval_s = 6;
    int max_frames = 10;
    int budget_tokens = 2400;
    int embedding_dim = 0;  // must be set before indexing
    int relation_depth = 1;
    int condense_threshold = 4;
    std::string record_delimiter = "<|REC|>";
    std::string completion_delimiter = "<|DONE|>";
    std::string cache_dir = ".scenedex";
    /// Optional frame extraction command with {media}, {t} and {out}
    /// placeholders; empty means frames travel as `{media}#t=<seconds>` locators.
    std::string frame_command;
    int http_max_attempts = 3;
    int http_timeout_s = 120;

    /// Throws Error{InvalidInput} on the first broken invariant.
    void validate() const;

    nlohmann::json to_json() const;
    static EngineConfig from_json(const nlohmann::json& doc);

    /// Reads `path` (if non-empty) and applies SCENEDEX_<FIELD> environment
    /// overrides, e.g. SCENEDEX_API_KEY or SCENEDEX_BUDGET_TOKENS.
    static EngineConfig load(const std::filesystem::path& path);

    SegmenterConfig segmenter() const;
    RefineConfig refine() const;
    GroundingConfig grounding() const;
    RetrievalConfig retrieval() const;
    EvalConfig eval() const;
};

/// Builds the provider behind an endpoint string ("mock:" or http(s)://...).
std::unique_ptr<Provider> make_provider(const std::string& url, const EngineConfig& cfg);

}  // namespace scenedex

#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "scenedex/grounding.hpp"
#include "scenedex/index.hpp"

namespace scenedex {

struct Query {
    std::string text;
    std::vector<std::string> keywords;
    std::size_t budget_tokens = 2400;
};

struct RetrievalConfig {
    std::string llm_model = "gpt-4o-mini";
    std::string vlm_model = "vlm";
    std::string embed_model = "text-embedding";
    double temperature = 0.7;
    double top_p = 0.95;
    int relation_depth = 1;
};

/// Lowercased, deduplicated keywords from the LLM. Any provider or parse
/// failure falls back to the stopword-filtered query tokens.
std::vector<std::string> extract_query_keywords(const std::string& query, Provider& llm, const RetrievalConfig& cfg,
                                                bool* degraded = nullptr);
std::vector<std::string> fallback_keywords(const std::string& query);

struct SceneCandidate {
    std::string scene_id;
    double score = 0.0;
    std::size_t tokens = 0;
    std::size_t position = 0;  // corpus order (video, then start time)
};

struct RetrievalSelection {
    std::vector<std::string> scene_ids;  // corpus order
    std::map<std::string, double> scores;
    std::map<std::string, std::size_t> tokens;
    std::size_t total_tokens = 0;
};

/// Greedy budgeted selection: visit by descending score (ties: earlier
/// position, then id), take every scene that still fits. Scenes with a
/// non-positive score are never taken; none is ever truncated.
RetrievalSelection select_scenes(std::vector<SceneCandidate> candidates, std::size_t budget);

/// Map form; ties fall back to id order unless `positions` is given.
RetrievalSelection select_scenes(const std::map<std::string, double>& scores,
                                 const std::map<std::string, std::size_t>& lengths, std::size_t budget,
                                 const std::map<std::string, std::size_t>& positions = {});

struct FocusedCaption {
    std::string text;
    bool degraded = false;  // VLM failed; generic caption used
};

/// Query-conditioned re-caption of a selected scene.
FocusedCaption focused_caption(const Scene& s, const std::vector<std::string>& keywords,
                               const std::vector<FrameRef>& frames, const std::string& generic_caption, Provider& vlm,
                               const RetrievalConfig& cfg);

struct ContextSection {
    std::string scene_id;
    Seconds start;
    Seconds end;
    std::string caption;
    std::string transcript;
    std::vector<Entity> entities;
    std::vector<Relation> relations;
};

struct AssembledContext {
    std::vector<ContextSection> sections;
    std::string rendered;
};

inline constexpr std::string_view kNoScenesSentinel = "No relevant scenes were found for this query.";

/// Sections in corpus order. Each lists the entities its scene sourced; a
/// relation is emitted once, under the first section whose entities reach
/// it within `depth` hops (depth 0: both endpoints are selected-scene entities).
AssembledContext assemble_context(const RetrievalSelection& sel, const KnowledgeGraph& g, const StoreBundle& stores,
                                  const std::map<std::string, std::string>& captions, int depth = 1);

std::string render_context(const std::vector<ContextSection>& sections);

struct Answer {
    std::string text;
    std::vector<std::string> scene_ids;
};

Answer generate_answer(const Query& q, const AssembledContext& ctx, const RetrievalSelection& sel, Provider& llm,
                       const RetrievalConfig& cfg);

struct QueryResult {
    Query query;
    Answer answer;
    RetrievalSelection selection;
    std::vector<std::string> degraded_flags;
    std::size_t context_tokens = 0;

    nlohmann::json to_json(const StoreBundle& stores) const;
};

}  // namespace scenedex

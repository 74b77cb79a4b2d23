#pragma once

#include <map>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "scenedex/provider.hpp"
#include "scenedex/refine.hpp"

namespace scenedex {

struct FramePlan {
    std::string scene_id;
    std::vector<Seconds> timestamps;

    friend bool operator==(const FramePlan&, const FramePlan&) = default;
};

/// Midpoints of consecutive `interval`-long windows across the scene (the
/// last window may be shorter), capped at `max_frames`.
FramePlan plan_frames(const Scene& s, Seconds interval, int max_frames);

enum class Modality { Visual, Asr };

const char* to_string(Modality m);

struct Entity {
    std::string name;
    std::string entity_type;
    std::vector<std::string> description_fragments;
    std::string summary;             // condensed description, if any
    std::size_t summary_covers = 0;  // fragments folded into `summary`
    std::set<std::string> source_scene_ids;
    std::set<Modality> source_modality;

    std::string description() const;
    void absorb(const Entity& other);

    friend bool operator==(const Entity&, const Entity&) = default;
};

struct Relation {
    std::string src_name;
    std::string dst_name;
    std::vector<std::string> description_fragments;
    std::vector<std::string> keywords;
    std::set<std::string> source_scene_ids;

    std::string description() const;
    void absorb(const Relation& other);

    friend bool operator==(const Relation&, const Relation&) = default;
};

/// Unordered endpoint pair, stored sorted.
using EdgeKey = std::pair<std::string, std::string>;
EdgeKey edge_key(const std::string& a, const std::string& b);

/// Uppercase (ASCII), trimmed, internal whitespace collapsed, quotes stripped.
std::string normalize_entity_name(std::string_view raw);

/// Case- and punctuation-insensitive comparison key for near-duplicate names.
std::string loose_name_key(std::string_view name);

struct Extraction {
    std::vector<Entity> entities;
    std::vector<Relation> relations;
    std::size_t dropped_records = 0;
};

struct SceneKnowledge {
    std::string scene_id;
    std::map<std::string, Entity> entities;
    std::map<EdgeKey, Relation> relations;
    bool degraded = false;  // LLM disambiguation unavailable; mechanical fusion only
};

class KnowledgeGraph {
public:
    const std::map<std::string, Entity>& nodes() const { return nodes_; }
    const std::map<EdgeKey, Relation>& edges() const { return edges_; }
    std::size_t node_count() const { return nodes_.size(); }
    std::size_t edge_count() const { return edges_.size(); }

    /// Upserts nodes by name and edges by endpoint pair. Idempotent.
    void merge(const SceneKnowledge& sk);

    void set_summary(const std::string& name, std::string summary);

    /// Throws Error{Consistency} if an edge endpoint is missing or a self-loop exists.
    void check_integrity() const;

    nlohmann::json to_json() const;
    static KnowledgeGraph from_json(const nlohmann::json& doc);

    /// `src<TAB>dst<TAB>description` per edge.
    std::string edge_list() const;

    friend bool operator==(const KnowledgeGraph&, const KnowledgeGraph&) = default;

private:
    std::map<std::string, Entity> nodes_;
    std::map<EdgeKey, Relation> edges_;
};

KnowledgeGraph merge_into_graph(KnowledgeGraph g, const SceneKnowledge& sk);

struct GroundingConfig {
    std::string vlm_model = "vlm";
    std::string llm_model = "gpt-4o-mini";
    double temperature = 0.7;
    double top_p = 0.95;
    Seconds frame_interval = Seconds::whole(6);
    int max_frames = 10;
    std::size_t condense_threshold = 4;
};

/// Caption C_j for a scene from its transcript and planned frames.
std::string caption_scene(const Scene& s, const FramePlan& plan, const std::vector<FrameRef>& frames, Provider& vlm,
                          const GroundingConfig& cfg);

const std::string& extraction_template();

/// Parses delimiter-structured entity and relationship records.
Extraction parse_extraction(std::string_view response, Modality modality, const std::string& scene_id);

/// Entities and relations mined from one modality's text. A fully
/// unparseable reply is retried once, then raises Error{Extraction}.
Extraction extract_knowledge(std::string_view text, Modality modality, const std::string& scene_id, Provider& llm,
                             const GroundingConfig& cfg);

/// Merges the visual and transcript extractions of one scene. Exact and
/// near-duplicate names merge mechanically; remaining cross-modality pairs go
/// to the LLM as a batch, and confirmed pairs take the transcript's name.
SceneKnowledge fuse_scene_knowledge(const std::string& scene_id, const Extraction& vis, const Extraction& asr,
                                    Provider& llm, const GroundingConfig& cfg);

/// LLM-condensed description for an entity with at least two fragments.
/// Falls back to the plain concatenation on any failure.
std::string synthesize_entity_description(const Entity& e, Provider& llm, const GroundingConfig& cfg);

/// Condenses every entity whose fragment count exceeds the threshold and has
/// grown since its last summary. Returns the number of entities condensed.
std::size_t condense_descriptions(KnowledgeGraph& g, Provider& llm, const GroundingConfig& cfg);

}  // namespace scenedex

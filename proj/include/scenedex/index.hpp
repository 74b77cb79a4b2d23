#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "scenedex/grounding.hpp"
#include "scenedex/kv_store.hpp"
#include "scenedex/provider.hpp"
#include "scenedex/refine.hpp"

namespace scenedex {

inline constexpr std::string_view kChunkSeparator = "\n---\n";

struct ContextChunk {
    std::string scene_id;
    std::string text;
    std::size_t token_len = 0;
    bool degraded = false;  // built without a caption

    friend bool operator==(const ContextChunk&, const ContextChunk&) = default;
};

/// caption + "\n---\n" + transcript.
ContextChunk build_context_chunk(const Scene& s, const std::string& caption);

/// Embedding stored in single precision, as on disk.
class EmbeddingVector {
public:
    EmbeddingVector() = default;
    /// Throws Error{Protocol} on non-finite entries or a zero vector.
    static EmbeddingVector from_values(const std::vector<double>& values);
    static EmbeddingVector from_floats(Eigen::VectorXf values);

    Eigen::Index dimension() const { return values_.size(); }
    const Eigen::VectorXf& values() const { return values_; }
    double norm() const;
    std::vector<double> to_doubles() const;

    friend bool operator==(const EmbeddingVector& a, const EmbeddingVector& b) {
        return a.values_.size() == b.values_.size() && a.values_ == b.values_;
    }

private:
    Eigen::VectorXf values_;
};

/// Embeds `text` through the provider's embed route. A reply whose length
/// or announced dimension differs from `dimension` is a protocol error.
EmbeddingVector embed_text(std::string_view text, Provider& embedder, const std::string& model, int dimension);

struct ScoredScene {
    std::string scene_id;
    double score = 0.0;

    friend bool operator==(const ScoredScene&, const ScoredScene&) = default;
};

/// Exact cosine search over every stored row.
class VectorIndex {
public:
    explicit VectorIndex(int dimension = 0) : dimension_(dimension) {}

    int dimension() const { return dimension_; }
    std::size_t size() const { return ids_.size(); }
    bool empty() const { return ids_.empty(); }
    const std::vector<std::string>& ids() const { return ids_; }
    bool contains(const std::string& id) const { return position_.count(id) != 0; }
    const EmbeddingVector& vector(const std::string& id) const;
    Seconds start(const std::string& id) const;

    /// Adds or replaces the row for `id`.
    void upsert(const std::string& id, Seconds start, const EmbeddingVector& v);

    /// Cosine scores sorted descending; ties by ascending start, then id.
    std::vector<ScoredScene> nearest_scenes(const EmbeddingVector& query, std::size_t k) const;

    /// Header line (JSON) followed by little-endian float32 rows.
    std::string serialize() const;
    static VectorIndex deserialize(std::string_view bytes);

    friend bool operator==(const VectorIndex& a, const VectorIndex& b);

private:
    int dimension_;
    std::vector<std::string> ids_;
    std::vector<Seconds> starts_;
    std::vector<EmbeddingVector> rows_;
    std::vector<Eigen::VectorXd> rows_d_;  // double copies for scoring
    std::vector<double> norms_;
    std::map<std::string, std::size_t> position_;
};

/// Everything a built corpus needs at query time.
struct StoreBundle {
    std::vector<SceneSet> videos;
    KnowledgeGraph graph;
    VectorIndex vectors;
    KvStore kv;  // provider cache plus per-scene records

    const Scene* find_scene(const std::string& id) const;
    std::vector<const Scene*> all_scenes() const;

    /// Throws Error{Consistency} unless scene ids, kv scene records and
    /// vector ids coincide, graph sources name only speech scenes, and the
    /// graph is referentially intact.
    void check_agreement() const;

    friend bool operator==(const StoreBundle&, const StoreBundle&) = default;
};

inline constexpr int kStoreVersion = 1;

/// kv keys for per-scene records.
std::string caption_key(const std::string& scene_id);
std::string chunk_key(const std::string& scene_id);
std::string knowledge_key(const std::string& scene_id);

nlohmann::json scene_sets_to_json(const std::vector<SceneSet>& videos);
std::vector<SceneSet> scene_sets_from_json(const nlohmann::json& doc);

/// Writes scenes.json, graph.json, vectors.bin, kvcache/ and VERSION under `dir`.
void persist(StoreBundle& bundle, const std::filesystem::path& dir);

/// Missing directory or file -> Error{NotFound}; other version -> Error{Version}.
StoreBundle load_bundle(const std::filesystem::path& dir);

int read_store_version(const std::filesystem::path& dir);

}  // namespace scenedex

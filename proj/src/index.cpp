#include "scenedex/index.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "scenedex/error.hpp"
#include "scenedex/tokenizer.hpp"

namespace fs = std::filesystem;

namespace scenedex {

static_assert(std::endian::native == std::endian::little, "vectors.bin is written with the host byte order");

ContextChunk build_context_chunk(const Scene& s, const std::string& caption) {
    ContextChunk c;
    c.scene_id = s.id;
    c.text = caption;
    c.text += kChunkSeparator;
    c.text += s.transcript_text;
    c.token_len = token_length(c.text);
    c.degraded = caption.empty();
    if (c.degraded) spdlog::warn("{}: context chunk built without a caption", s.id);
    return c;
}

EmbeddingVector EmbeddingVector::from_values(const std::vector<double>& values) {
    Eigen::VectorXf v(static_cast<Eigen::Index>(values.size()));
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!std::isfinite(values[i])) fail(ErrorKind::Protocol, "embedding has a non-finite entry");
        v[static_cast<Eigen::Index>(i)] = static_cast<float>(values[i]);
    }
    return from_floats(std::move(v));
}

EmbeddingVector EmbeddingVector::from_floats(Eigen::VectorXf values) {
    if (values.size() == 0) fail(ErrorKind::Protocol, "embedding is empty");
    if (!values.allFinite()) fail(ErrorKind::Protocol, "embedding has a non-finite entry");
    EmbeddingVector e;
    e.values_ = std::move(values);
    if (!(e.norm() > 0.0)) fail(ErrorKind::Protocol, "embedding has zero norm");
    return e;
}

double EmbeddingVector::norm() const { return values_.cast<double>().norm(); }

std::vector<double> EmbeddingVector::to_doubles() const {
    std::vector<double> out(static_cast<std::size_t>(values_.size()));
    for (Eigen::Index i = 0; i < values_.size(); ++i) out[static_cast<std::size_t>(i)] = values_[i];
    return out;
}

EmbeddingVector embed_text(std::string_view text, Provider& embedder, const std::string& model, int dimension) {
    if (trim(text).empty()) fail(ErrorKind::InvalidInput, "cannot embed empty text");
    ProviderRequest req;
    req.route = Route::Embed;
    req.model = model;
    req.messages.push_back({"user", std::string(text)});
    const ProviderResponse r = embedder.complete(req);
    if (!r.embedding) fail(ErrorKind::Protocol, "embed reply carries no embedding");
    if (static_cast<int>(r.embedding->size()) != dimension) {
        fail(ErrorKind::Protocol,
             fmt::format("embedding dimension {} does not match configured {}", r.embedding->size(), dimension));
    }
    return EmbeddingVector::from_values(*r.embedding);
}

const EmbeddingVector& VectorIndex::vector(const std::string& id) const {
    auto it = position_.find(id);
    if (it == position_.end()) fail(ErrorKind::NotFound, "no vector for scene " + id);
    return rows_[it->second];
}

Seconds VectorIndex::start(const std::string& id) const {
    auto it = position_.find(id);
    if (it == position_.end()) fail(ErrorKind::NotFound, "no vector for scene " + id);
    return starts_[it->second];
}

void VectorIndex::upsert(const std::string& id, Seconds start, const EmbeddingVector& v) {
    if (dimension_ == 0) dimension_ = static_cast<int>(v.dimension());
    if (v.dimension() != dimension_) {
        fail(ErrorKind::Protocol, fmt::format("vector for {} has dimension {}, index expects {}", id, v.dimension(),
                                              dimension_));
    }
    Eigen::VectorXd d = v.values().cast<double>();
    const double n = d.norm();
    if (auto it = position_.find(id); it != position_.end()) {
        const std::size_t i = it->second;
        starts_[i] = start;
        rows_[i] = v;
        rows_d_[i] = std::move(d);
        norms_[i] = n;
        return;
    }
    position_.emplace(id, ids_.size());
    ids_.push_back(id);
    starts_.push_back(start);
    rows_.push_back(v);
    rows_d_.push_back(std::move(d));
    norms_.push_back(n);
}

std::vector<ScoredScene> VectorIndex::nearest_scenes(const EmbeddingVector& query, std::size_t k) const {
    if (k == 0) fail(ErrorKind::InvalidInput, "k must be at least 1");
    if (ids_.empty()) return {};
    if (query.dimension() != dimension_) {
        fail(ErrorKind::Protocol,
             fmt::format("query has dimension {}, index expects {}", query.dimension(), dimension_));
    }
    const Eigen::VectorXd q = query.values().cast<double>();
    const double qn = q.norm();

    std::vector<std::size_t> order(ids_.size());
    std::vector<double> scores(ids_.size());
    for (std::size_t i = 0; i < ids_.size(); ++i) {
        order[i] = i;
        scores[i] = rows_d_[i].dot(q) / (norms_[i] * qn);
    }
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        if (starts_[a] != starts_[b]) return starts_[a] < starts_[b];
        return ids_[a] < ids_[b];
    });
    order.resize(std::min(k, order.size()));
    std::vector<ScoredScene> out;
    out.reserve(order.size());
    for (auto i : order) out.push_back({ids_[i], scores[i]});
    return out;
}

std::string VectorIndex::serialize() const {
    std::vector<std::int64_t> starts;
    for (auto s : starts_) starts.push_back(s.micros());
    const nlohmann::json header{{"format", "scenedex-vectors"},
                                {"dtype", "float32"},
                                {"dimension", dimension_},
                                {"count", ids_.size()},
                                {"ids", ids_},
                                {"starts_us", starts}};
    std::string out = header.dump();
    out += '\n';
    const std::size_t row_bytes = static_cast<std::size_t>(dimension_) * sizeof(float);
    const std::size_t offset = out.size();
    out.resize(offset + row_bytes * rows_.size());
    for (std::size_t i = 0; i < rows_.size(); ++i) {
        std::memcpy(out.data() + offset + i * row_bytes, rows_[i].values().data(), row_bytes);
    }
    return out;
}

VectorIndex VectorIndex::deserialize(std::string_view bytes) {
    const auto nl = bytes.find('\n');
    if (nl == std::string_view::npos) fail(ErrorKind::Consistency, "vectors.bin has no header line");
    const auto header = nlohmann::json::parse(bytes.substr(0, nl), nullptr, false);
    if (header.is_discarded() || !header.is_object()) fail(ErrorKind::Consistency, "vectors.bin header is not JSON");
    try {
        const int dim = header.at("dimension").get<int>();
        const auto ids = header.at("ids").get<std::vector<std::string>>();
        const auto starts = header.at("starts_us").get<std::vector<std::int64_t>>();
        if (header.at("dtype").get<std::string>() != "float32" || ids.size() != starts.size() ||
            header.at("count").get<std::size_t>() != ids.size()) {
            fail(ErrorKind::Consistency, "vectors.bin header is inconsistent");
        }
        const std::size_t row_bytes = static_cast<std::size_t>(dim) * sizeof(float);
        const std::string_view body = bytes.substr(nl + 1);
        if (body.size() != row_bytes * ids.size()) {
            fail(ErrorKind::Consistency, fmt::format("vectors.bin body has {} bytes, header implies {}", body.size(),
                                                     row_bytes * ids.size()));
        }
        VectorIndex index(dim);
        for (std::size_t i = 0; i < ids.size(); ++i) {
            Eigen::VectorXf v(dim);
            std::memcpy(v.data(), body.data() + i * row_bytes, row_bytes);
            index.upsert(ids[i], Seconds::from_micros(starts[i]), EmbeddingVector::from_floats(std::move(v)));
        }
        return index;
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::Consistency, std::string("vectors.bin header: ") + e.what());
    }
}

bool operator==(const VectorIndex& a, const VectorIndex& b) {
    return a.dimension_ == b.dimension_ && a.ids_ == b.ids_ && a.starts_ == b.starts_ && a.rows_ == b.rows_;
}

const Scene* StoreBundle::find_scene(const std::string& id) const {
    for (const auto& v : videos) {
        for (const auto& s : v.scenes) {
            if (s.id == id) return &s;
        }
    }
    return nullptr;
}

std::vector<const Scene*> StoreBundle::all_scenes() const {
    std::vector<const Scene*> out;
    for (const auto& v : videos) {
        for (const auto& s : v.scenes) out.push_back(&s);
    }
    return out;
}

std::string caption_key(const std::string& scene_id) { return "caption/" + scene_id; }
std::string chunk_key(const std::string& scene_id) { return "chunk/" + scene_id; }
std::string knowledge_key(const std::string& scene_id) { return "knowledge/" + scene_id; }

void StoreBundle::check_agreement() const {
    std::set<std::string> scene_ids;
    std::set<std::string> speech_ids;
    for (const auto* s : all_scenes()) {
        if (!scene_ids.insert(s->id).second) fail(ErrorKind::Consistency, "duplicate scene id " + s->id);
        if (!s->silent()) speech_ids.insert(s->id);
    }
    std::set<std::string> kv_ids;
    for (const auto& key : kv.keys("chunk/")) kv_ids.insert(key.substr(6));
    const std::set<std::string> vector_ids(vectors.ids().begin(), vectors.ids().end());
    if (kv_ids != scene_ids) fail(ErrorKind::Consistency, "kv scene records disagree with the scene manifest");
    if (vector_ids != scene_ids) fail(ErrorKind::Consistency, "vector ids disagree with the scene manifest");
    for (const auto& [name, e] : graph.nodes()) {
        for (const auto& id : e.source_scene_ids) {
            if (!speech_ids.count(id))
                fail(ErrorKind::Consistency, fmt::format("entity {} cites {}, which is not a speech scene", name, id));
        }
    }
    graph.check_integrity();
}

nlohmann::json scene_sets_to_json(const std::vector<SceneSet>& videos) {
    auto doc = nlohmann::json::array();
    for (const auto& v : videos) {
        doc.push_back({{"video_id", v.video_id},
                       {"duration_us", v.duration.micros()},
                       {"scenes", scenes_to_json(v.scenes)}});
    }
    return doc;
}

std::vector<SceneSet> scene_sets_from_json(const nlohmann::json& doc) {
    if (!doc.is_array()) fail(ErrorKind::Consistency, "scenes.json must be a JSON array");
    std::vector<SceneSet> out;
    try {
        for (const auto& v : doc) {
            SceneSet set{v.at("video_id").get<std::string>(), scenes_from_json(v.at("scenes")),
                         Seconds::from_micros(v.at("duration_us").get<std::int64_t>())};
            set.validate();
            out.push_back(std::move(set));
        }
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::Consistency, std::string("scenes.json: ") + e.what());
    }
    return out;
}

void persist(StoreBundle& bundle, const fs::path& dir) {
    fs::create_directories(dir);
    bundle.kv.persist_to(dir / "kvcache");
    write_file_atomic(dir / "scenes.json", scene_sets_to_json(bundle.videos).dump(2));
    write_file_atomic(dir / "graph.json", bundle.graph.to_json().dump(2));
    write_file_atomic(dir / "vectors.bin", bundle.vectors.serialize());
    write_file_atomic(dir / "VERSION", std::to_string(kStoreVersion) + "\n");
}

int read_store_version(const fs::path& dir) {
    if (!fs::exists(dir / "VERSION")) fail(ErrorKind::NotFound, "no store at " + dir.string());
    const std::string text = trim(read_file(dir / "VERSION"));
    try {
        std::size_t used = 0;
        const int v = std::stoi(text, &used);
        if (used == text.size()) return v;
    } catch (const std::exception&) {
    }
    fail(ErrorKind::Version, fmt::format("{}: unreadable store version '{}'", dir.string(), text));
}

StoreBundle load_bundle(const fs::path& dir) {
    if (!fs::is_directory(dir)) fail(ErrorKind::NotFound, "no store at " + dir.string());
    const int version = read_store_version(dir);
    if (version != kStoreVersion) {
        fail(ErrorKind::Version,
             fmt::format("store at {} has version {}, this build reads version {}; re-run `index` with a matching "
                         "build to migrate",
                         dir.string(), version, kStoreVersion));
    }
    for (const char* name : {"scenes.json", "graph.json", "vectors.bin"}) {
        if (!fs::exists(dir / name)) fail(ErrorKind::NotFound, fmt::format("{} missing from {}", name, dir.string()));
    }
    auto parse = [&](const char* name) {
        auto doc = nlohmann::json::parse(read_file(dir / name), nullptr, false);
        if (doc.is_discarded()) fail(ErrorKind::Consistency, fmt::format("{} is not valid JSON", name));
        return doc;
    };
    StoreBundle b;
    b.videos = scene_sets_from_json(parse("scenes.json"));
    b.graph = KnowledgeGraph::from_json(parse("graph.json"));
    b.vectors = VectorIndex::deserialize(read_file(dir / "vectors.bin"));
    b.kv = fs::exists(dir / "kvcache") ? KvStore::load_from(dir / "kvcache") : KvStore(dir / "kvcache");
    return b;
}

}  // namespace scenedex

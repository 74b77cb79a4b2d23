#include "scenedex/config.hpp"

#include <chrono>
#include <cstdlib>
#include <set>

#include <fmt/format.h>

#include "scenedex/error.hpp"
#include "scenedex/http_provider.hpp"
#include "scenedex/offline_provider.hpp"

namespace scenedex {

namespace {

// Field table shared by to_json/from_json/env overrides.
template <class F>
void for_each_field(EngineConfig& c, F&& f) {
    f("provider_url", c.provider_url);
    f("asr_url", c.asr_url);
    f("llm_url", c.llm_url);
    f("vlm_url", c.vlm_url);
    f("embed_url", c.embed_url);
    f("judge_url", c.judge_url);
    f("api_key", c.api_key);
    f("asr_model", c.asr_model);
    f("llm_base_model", c.llm_base_model);
    f("llm_escalated_model", c.llm_escalated_model);
    f("vlm_model", c.vlm_model);
    f("embed_model", c.embed_model);
    f("judge_model", c.judge_model);
    f("temperature", c.temperature);
    f("top_p", c.top_p);
    f("chunk_len_s", c.chunk_len_s);
    f("overlap_s", c.overlap_s);
    f("epsilon_s", c.epsilon_s);
    f("min_scene_s", c.min_scene_s);
    f("align_window_s", c.align_window_s);
    f("silence_min_gap_s", c.silence_min_gap_s);
    f("seg_min_scene_s", c.seg_min_scene_s);
    f("seg_max_scene_s", c.seg_max_scene_s);
    f("frame_interval_s", c.frame_interval_s);
    f("max_frames", c.max_frames);
    f("budget_tokens", c.budget_tokens);
    f("embedding_dim", c.embedding_dim);
    f("relation_depth", c.relation_depth);
    f("condense_threshold", c.condense_threshold);
    f("record_delimiter", c.record_delimiter);
    f("completion_delimiter", c.completion_delimiter);
    f("cache_dir", c.cache_dir);
    f("frame_command", c.frame_command);
    f("http_max_attempts", c.http_max_attempts);
    f("http_timeout_s", c.http_timeout_s);
}

template <class T>
void assign_from_text(const std::string& name, const std::string& text, T& field) {
    if constexpr (std::is_same_v<T, std::string>) {
        field = text;
    } else {
        auto doc = nlohmann::json::parse(text, nullptr, false);
        if (doc.is_discarded() || !doc.is_number())
            fail(ErrorKind::InvalidInput, fmt::format("environment override for {} is not a number: '{}'", name, text));
        field = doc.get<T>();
    }
}

Seconds secs(double s) { return Seconds::from_double(s); }

}  // namespace

void EngineConfig::validate() const {
    auto positive = [](const char* name, double v) {
        if (!(v > 0)) fail(ErrorKind::InvalidInput, fmt::format("{} must be positive", name));
    };
    positive("chunk_len_s", chunk_len_s);
    positive("epsilon_s", epsilon_s);
    positive("min_scene_s", min_scene_s);
    positive("align_window_s", align_window_s);
    positive("silence_min_gap_s", silence_min_gap_s);
    positive("seg_min_scene_s", seg_min_scene_s);
    positive("seg_max_scene_s", seg_max_scene_s);
    positive("frame_interval_s", frame_interval_s);
    if (overlap_s < 0 || overlap_s >= chunk_len_s)
        fail(ErrorKind::InvalidInput, "overlap_s must satisfy 0 <= overlap_s < chunk_len_s");
    if (seg_min_scene_s > seg_max_scene_s)
        fail(ErrorKind::InvalidInput, "seg_min_scene_s must not exceed seg_max_scene_s");
    if (max_frames < 1) fail(ErrorKind::InvalidInput, "max_frames must be at least 1");
    if (budget_tokens <= 0) fail(ErrorKind::InvalidInput, "budget_tokens must be positive");
    if (embedding_dim < 0) fail(ErrorKind::InvalidInput, "embedding_dim must not be negative");
    if (relation_depth < 0) fail(ErrorKind::InvalidInput, "relation_depth must not be negative");
    if (condense_threshold < 1) fail(ErrorKind::InvalidInput, "condense_threshold must be at least 1");
    if (http_max_attempts < 1) fail(ErrorKind::InvalidInput, "http_max_attempts must be at least 1");
    if (record_delimiter.empty() || completion_delimiter.empty() || record_delimiter == completion_delimiter)
        fail(ErrorKind::InvalidInput, "delimiters must be non-empty and distinct");
    if (provider_url.empty()) fail(ErrorKind::InvalidInput, "provider_url is empty");
}

nlohmann::json EngineConfig::to_json() const {
    nlohmann::json doc = nlohmann::json::object();
    EngineConfig copy = *this;
    for_each_field(copy, [&](const char* name, auto& field) { doc[name] = field; });
    doc.erase("api_key");
    return doc;
}

EngineConfig EngineConfig::from_json(const nlohmann::json& doc) {
    if (!doc.is_object()) fail(ErrorKind::InvalidInput, "config must be a JSON object");
    EngineConfig c;
    std::set<std::string> known;
    for_each_field(c, [&](const char* name, auto& field) {
        known.insert(name);
        if (!doc.contains(name)) return;
        try {
            field = doc.at(name).get<std::decay_t<decltype(field)>>();
        } catch (const nlohmann::json::exception&) {
            fail(ErrorKind::InvalidInput, fmt::format("config field {} has the wrong type", name));
        }
    });
    for (const auto& [key, value] : doc.items()) {
        if (!known.count(key)) fail(ErrorKind::InvalidInput, "unknown config field " + key);
    }
    return c;
}

EngineConfig EngineConfig::load(const std::filesystem::path& path) {
    EngineConfig c;
    if (!path.empty()) {
        if (!std::filesystem::exists(path)) fail(ErrorKind::NotFound, "config file not found: " + path.string());
        auto doc = nlohmann::json::parse(read_file(path), nullptr, false);
        if (doc.is_discarded()) fail(ErrorKind::InvalidInput, path.string() + " is not valid JSON");
        c = from_json(doc);
    }
    for_each_field(c, [](const char* name, auto& field) {
        std::string var = "SCENEDEX_";
        for (const char* p = name; *p; ++p) var += static_cast<char>(std::toupper(static_cast<unsigned char>(*p)));
        if (const char* value = std::getenv(var.c_str())) assign_from_text(name, value, field);
    });
    c.validate();
    return c;
}

SegmenterConfig EngineConfig::segmenter() const {
    SegmenterConfig s;
    s.delimiters = {record_delimiter, completion_delimiter};
    s.base_model = llm_base_model;
    s.escalated_model = llm_escalated_model;
    s.temperature = temperature;
    s.top_p = top_p;
    s.min_scene = secs(seg_min_scene_s);
    s.max_scene = secs(seg_max_scene_s);
    return s;
}

RefineConfig EngineConfig::refine() const { return {secs(epsilon_s), secs(min_scene_s), secs(align_window_s)}; }

GroundingConfig EngineConfig::grounding() const {
    GroundingConfig g;
    g.vlm_model = vlm_model;
    g.llm_model = llm_base_model;
    g.temperature = temperature;
    g.top_p = top_p;
    g.frame_interval = secs(frame_interval_s);
    g.max_frames = max_frames;
    g.condense_threshold = static_cast<std::size_t>(condense_threshold);
    return g;
}

RetrievalConfig EngineConfig::retrieval() const {
    RetrievalConfig r;
    r.llm_model = llm_base_model;
    r.vlm_model = vlm_model;
    r.embed_model = embed_model;
    r.temperature = temperature;
    r.top_p = top_p;
    r.relation_depth = relation_depth;
    return r;
}

EvalConfig EngineConfig::eval() const { return {judge_model, temperature, top_p}; }

std::unique_ptr<Provider> make_provider(const std::string& url, const EngineConfig& cfg) {
    const std::string& target = url.empty() ? cfg.provider_url : url;
    if (target.rfind("mock:", 0) == 0) return std::make_unique<OfflineProvider>(cfg.embedding_dim);
    if (target.rfind("http://", 0) == 0 || target.rfind("https://", 0) == 0) {
        HttpProviderOptions o;
        o.base_url = target;
        o.api_key = cfg.api_key;
        o.max_attempts = cfg.http_max_attempts;
        o.timeout = std::chrono::seconds(cfg.http_timeout_s);
        return std::make_unique<HttpProvider>(std::move(o));
    }
    fail(ErrorKind::InvalidInput, "unsupported provider endpoint '" + target + "' (use mock: or http(s)://)");
}

}  // namespace scenedex

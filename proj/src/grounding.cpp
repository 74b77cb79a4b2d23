#include "scenedex/grounding.hpp"

#include <algorithm>
#include <cctype>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "scenedex/error.hpp"

namespace scenedex {

namespace {

constexpr std::string_view kTuple = "<|>";
constexpr std::string_view kRecord = "##";
constexpr std::string_view kComplete = "<|COMPLETE|>";

const std::string kExtractionTemplate =
    "-Goal-\n"
    "Given a text taken from one scene of a video, identify all entities in it and all relationships among the "
    "identified entities.\n"
    "\n"
    "-Steps-\n"
    "1. Identify all entities. For each identified entity, extract the following information:\n"
    "- entity_name: Name of the entity, capitalized\n"
    "- entity_type: One of the following types: [person, organization, location, event, product, concept, object]\n"
    "- entity_description: Comprehensive description of the entity's attributes and activities\n"
    "Format each entity as (\"entity\"<|><entity_name><|><entity_type><|><entity_description>)\n"
    "\n"
    "2. From the entities identified in step 1, identify all pairs of (source_entity, target_entity) that are "
    "*clearly related* to each other. For each pair of related entities, extract the following information:\n"
    "- source_entity: name of the source entity, as identified in step 1\n"
    "- target_entity: name of the target entity, as identified in step 1\n"
    "- relationship_description: explanation as to why the source entity and the target entity are related\n"
    "- relationship_keywords: comma-separated high-level keywords summarizing the relationship\n"
    "Format each relationship as (\"relationship\"<|><source_entity><|><target_entity><|>"
    "<relationship_description><|><relationship_keywords>)\n"
    "\n"
    "3. Return output in English as a single list of all the entities and relationships identified in steps 1 "
    "and 2. Use ## as the list delimiter.\n"
    "\n"
    "4. When finished, output <|COMPLETE|>\n"
    "\n"
    "-Real Data-\n"
    "######################\n"
    "Scene: {scene_id}\n"
    "Source: {source}\n"
    "Text: {input_text}\n"
    "######################\n"
    "Output:\n";

const std::string kExtractionReminder =
    "The previous output could not be parsed. Reply again using only (\"entity\"<|>...) and "
    "(\"relationship\"<|>...) records separated by ## and finish with <|COMPLETE|>.";

const std::string kCaptionTemplate =
    "You are given {frame_count} key frames sampled from one scene of a video (scene {scene_id}, "
    "{start} s to {end} s) together with the scene's transcript. Describe the scene in natural language: the "
    "objects, people, on-screen text, actions and high-level dynamics, and how they relate to what is said.\n"
    "\n"
    "Transcript:\n{transcript}\n";

const std::string kFusionTemplate =
    "Two lists of entities were extracted from the same video scene: one from a visual description and one from "
    "the speech transcript. Decide which visual entities refer to the same real-world entity as a transcript "
    "entity.\n"
    "\n"
    "Visual entities:\n{visual}\n"
    "Transcript entities:\n{asr}\n"
    "Answer with JSON only, in the form {\"matches\": [{\"visual\": \"<visual name>\", \"asr\": \"<transcript "
    "name>\"}]}. Use an empty list when nothing matches.\n";

const std::string kCondenseTemplate =
    "You are a helpful assistant responsible for generating a comprehensive summary of the data provided below. "
    "Given one entity and a list of descriptions gathered from different scenes of a video, write a single, "
    "coherent description in the third person that combines all of them and resolves contradictions.\n"
    "\n"
    "Entity: {name}\n"
    "Description list:\n{descriptions}\n"
    "Output:\n";

void replace_all(std::string& s, std::string_view from, std::string_view to) {
    for (std::size_t pos = 0; (pos = s.find(from, pos)) != std::string::npos; pos += to.size()) {
        s.replace(pos, from.size(), to);
    }
}

std::string strip_quotes(std::string s) {
    s = trim(s);
    while (s.size() >= 2 && ((s.front() == '"' && s.back() == '"') || (s.front() == '\'' && s.back() == '\''))) {
        s = trim(std::string_view(s).substr(1, s.size() - 2));
    }
    return s;
}

template <class T>
void append_unique(std::vector<T>& into, const std::vector<T>& from) {
    for (const auto& x : from) {
        if (std::find(into.begin(), into.end(), x) == into.end()) into.push_back(x);
    }
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
    std::string out;
    for (const auto& p : parts) {
        if (p.empty()) continue;
        if (!out.empty()) out += sep;
        out += p;
    }
    return out;
}

std::vector<std::string> split_records(std::string_view body) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= body.size(); ++i) {
        const bool at_end = i == body.size();
        const bool at_record = !at_end && body.substr(i, kRecord.size()) == kRecord;
        const bool at_newline = !at_end && body[i] == '\n';
        if (at_end || at_record || at_newline) {
            std::string piece = trim(body.substr(start, i - start));
            if (!piece.empty()) out.push_back(std::move(piece));
            if (at_record) i += kRecord.size() - 1;
            start = i + 1;
        }
    }
    return out;
}

std::vector<std::string> split_fields(std::string_view record) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
        auto pos = record.find(kTuple, start);
        out.push_back(strip_quotes(std::string(record.substr(start, pos == std::string_view::npos ? pos : pos - start))));
        if (pos == std::string_view::npos) break;
        start = pos + kTuple.size();
    }
    return out;
}

std::optional<nlohmann::json> json_object_in(std::string_view text) {
    const auto open = text.find('{');
    const auto close = text.rfind('}');
    if (open == std::string_view::npos || close == std::string_view::npos || close < open) return std::nullopt;
    auto doc = nlohmann::json::parse(text.substr(open, close - open + 1), nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) return std::nullopt;
    return doc;
}

}  // namespace

FramePlan plan_frames(const Scene& s, Seconds interval, int max_frames) {
    if (interval <= Seconds{}) fail(ErrorKind::InvalidInput, "frame interval must be positive");
    if (max_frames < 1) fail(ErrorKind::InvalidInput, "max_frames must be at least 1");
    FramePlan plan{s.id, {}};
    for (Seconds w = s.start; w < s.end && static_cast<int>(plan.timestamps.size()) < max_frames; w += interval) {
        plan.timestamps.push_back(midpoint(w, min(w + interval, s.end)));
    }
    return plan;
}

const char* to_string(Modality m) { return m == Modality::Visual ? "visual" : "asr"; }

std::string Entity::description() const {
    if (summary.empty()) return join(description_fragments, "; ");
    std::vector<std::string> rest(description_fragments.begin() +
                                      static_cast<std::ptrdiff_t>(std::min(summary_covers, description_fragments.size())),
                                  description_fragments.end());
    rest.insert(rest.begin(), summary);
    return join(rest, "; ");
}

void Entity::absorb(const Entity& other) {
    if ((entity_type.empty() || entity_type == "UNKNOWN") && !other.entity_type.empty()) entity_type = other.entity_type;
    append_unique(description_fragments, other.description_fragments);
    source_scene_ids.insert(other.source_scene_ids.begin(), other.source_scene_ids.end());
    source_modality.insert(other.source_modality.begin(), other.source_modality.end());
}

std::string Relation::description() const { return join(description_fragments, "; "); }

void Relation::absorb(const Relation& other) {
    append_unique(description_fragments, other.description_fragments);
    append_unique(keywords, other.keywords);
    source_scene_ids.insert(other.source_scene_ids.begin(), other.source_scene_ids.end());
}

EdgeKey edge_key(const std::string& a, const std::string& b) { return a < b ? EdgeKey{a, b} : EdgeKey{b, a}; }

std::string normalize_entity_name(std::string_view raw) {
    const std::string stripped = strip_quotes(std::string(raw));
    std::string out;
    bool pending_space = false;
    for (unsigned char c : stripped) {
        if (std::isspace(c)) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) out += ' ';
        pending_space = false;
        out += static_cast<char>(c < 0x80 ? std::toupper(c) : c);
    }
    return out;
}

std::string loose_name_key(std::string_view name) {
    std::string out;
    for (unsigned char c : name) {
        if (c >= 0x80 || std::isalnum(c)) out += static_cast<char>(c < 0x80 ? std::toupper(c) : c);
    }
    return out;
}

void KnowledgeGraph::merge(const SceneKnowledge& sk) {
    for (const auto& [name, e] : sk.entities) {
        auto [it, inserted] = nodes_.try_emplace(name, e);
        if (!inserted) it->second.absorb(e);
    }
    for (const auto& [key, r] : sk.relations) {
        for (const auto* endpoint : {&r.src_name, &r.dst_name}) {
            if (!nodes_.count(*endpoint)) {
                Entity stub{*endpoint, "UNKNOWN", {}, {}, 0, r.source_scene_ids, {}};
                nodes_.emplace(*endpoint, std::move(stub));
            }
        }
        auto [it, inserted] = edges_.try_emplace(key, r);
        if (!inserted) it->second.absorb(r);
    }
}

void KnowledgeGraph::set_summary(const std::string& name, std::string summary) {
    auto it = nodes_.find(name);
    if (it == nodes_.end()) fail(ErrorKind::Consistency, "no entity named " + name);
    it->second.summary = std::move(summary);
    it->second.summary_covers = it->second.description_fragments.size();
}

void KnowledgeGraph::check_integrity() const {
    for (const auto& [name, e] : nodes_) {
        if (name.empty() || name != e.name) fail(ErrorKind::Consistency, "node key/name mismatch for '" + name + "'");
    }
    for (const auto& [key, r] : edges_) {
        if (r.src_name == r.dst_name) fail(ErrorKind::Consistency, "self-loop on " + r.src_name);
        if (edge_key(r.src_name, r.dst_name) != key) fail(ErrorKind::Consistency, "edge key mismatch");
        if (!nodes_.count(r.src_name) || !nodes_.count(r.dst_name))
            fail(ErrorKind::Consistency, fmt::format("edge {} -- {} has a dangling endpoint", r.src_name, r.dst_name));
    }
}

nlohmann::json KnowledgeGraph::to_json() const {
    auto nodes = nlohmann::json::array();
    for (const auto& [name, e] : nodes_) {
        std::vector<std::string> modality;
        for (auto m : e.source_modality) modality.emplace_back(to_string(m));
        nodes.push_back({{"name", e.name},
                         {"entity_type", e.entity_type},
                         {"description", e.description()},
                         {"description_fragments", e.description_fragments},
                         {"summary", e.summary},
                         {"summary_covers", e.summary_covers},
                         {"source_scene_ids", e.source_scene_ids},
                         {"source_modality", modality}});
    }
    auto edges = nlohmann::json::array();
    for (const auto& [key, r] : edges_) {
        edges.push_back({{"src_name", r.src_name},
                         {"dst_name", r.dst_name},
                         {"description", r.description()},
                         {"description_fragments", r.description_fragments},
                         {"keywords", r.keywords},
                         {"source_scene_ids", r.source_scene_ids}});
    }
    return {{"nodes", std::move(nodes)}, {"edges", std::move(edges)}};
}

KnowledgeGraph KnowledgeGraph::from_json(const nlohmann::json& doc) {
    KnowledgeGraph g;
    try {
        for (const auto& n : doc.at("nodes")) {
            Entity e;
            e.name = n.at("name").get<std::string>();
            e.entity_type = n.at("entity_type").get<std::string>();
            e.description_fragments = n.at("description_fragments").get<std::vector<std::string>>();
            e.summary = n.value("summary", std::string{});
            e.summary_covers = n.value("summary_covers", std::size_t{0});
            e.source_scene_ids = n.at("source_scene_ids").get<std::set<std::string>>();
            for (const auto& m : n.at("source_modality")) {
                e.source_modality.insert(m.get<std::string>() == "visual" ? Modality::Visual : Modality::Asr);
            }
            g.nodes_.emplace(e.name, std::move(e));
        }
        for (const auto& r : doc.at("edges")) {
            Relation rel;
            rel.src_name = r.at("src_name").get<std::string>();
            rel.dst_name = r.at("dst_name").get<std::string>();
            rel.description_fragments = r.at("description_fragments").get<std::vector<std::string>>();
            rel.keywords = r.at("keywords").get<std::vector<std::string>>();
            rel.source_scene_ids = r.at("source_scene_ids").get<std::set<std::string>>();
            g.edges_.emplace(edge_key(rel.src_name, rel.dst_name), std::move(rel));
        }
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::Consistency, std::string("malformed graph document: ") + e.what());
    }
    g.check_integrity();
    return g;
}

std::string KnowledgeGraph::edge_list() const {
    std::string out;
    for (const auto& [key, r] : edges_) {
        std::string desc = r.description();
        std::replace_if(desc.begin(), desc.end(), [](char c) { return c == '\t' || c == '\n' || c == '\r'; }, ' ');
        out += fmt::format("{}\t{}\t{}\n", r.src_name, r.dst_name, desc);
    }
    return out;
}

KnowledgeGraph merge_into_graph(KnowledgeGraph g, const SceneKnowledge& sk) {
    g.merge(sk);
    return g;
}

std::string caption_scene(const Scene& s, const FramePlan& plan, const std::vector<FrameRef>& frames, Provider& vlm,
                          const GroundingConfig& cfg) {
    std::string prompt = kCaptionTemplate;
    replace_all(prompt, "{frame_count}", std::to_string(plan.timestamps.size()));
    replace_all(prompt, "{scene_id}", s.id);
    replace_all(prompt, "{start}", format_seconds(s.start));
    replace_all(prompt, "{end}", format_seconds(s.end));
    replace_all(prompt, "{transcript}", s.transcript_text);

    ProviderRequest req;
    req.route = Route::Caption;
    req.model = cfg.vlm_model;
    req.temperature = cfg.temperature;
    req.top_p = cfg.top_p;
    req.messages.push_back({"user", std::move(prompt)});
    req.frames = frames;
    return trim(vlm.complete(req).content);
}

const std::string& extraction_template() { return kExtractionTemplate; }

Extraction parse_extraction(std::string_view response, Modality modality, const std::string& scene_id) {
    Extraction out;
    std::string_view body = response;
    if (auto cut = body.find(kComplete); cut != std::string_view::npos) body = body.substr(0, cut);

    std::map<std::string, std::size_t> entity_index;
    auto upsert_entity = [&](Entity e) {
        auto it = entity_index.find(e.name);
        if (it == entity_index.end()) {
            entity_index.emplace(e.name, out.entities.size());
            out.entities.push_back(std::move(e));
        } else {
            out.entities[it->second].absorb(e);
        }
    };

    std::vector<Relation> relations;
    for (std::string record : split_records(body)) {
        if (record.front() == '(') record.erase(record.begin());
        if (!record.empty() && record.back() == ')') record.pop_back();
        const auto fields = split_fields(record);
        std::string tag = fields.empty() ? std::string{} : fields[0];
        std::transform(tag.begin(), tag.end(), tag.begin(), [](unsigned char c) { return std::tolower(c); });

        if (tag == "entity" && fields.size() >= 4) {
            Entity e{normalize_entity_name(fields[1]), normalize_entity_name(fields[2]), {}, {}, 0, {scene_id}, {modality}};
            if (e.name.empty()) {
                ++out.dropped_records;
                continue;
            }
            if (!fields[3].empty()) e.description_fragments.push_back(fields[3]);
            upsert_entity(std::move(e));
        } else if ((tag == "relationship" || tag == "relation") && fields.size() >= 4) {
            Relation r{normalize_entity_name(fields[1]), normalize_entity_name(fields[2]), {}, {}, {scene_id}};
            if (r.src_name.empty() || r.dst_name.empty() || r.src_name == r.dst_name) {
                ++out.dropped_records;
                continue;
            }
            if (!fields[3].empty()) r.description_fragments.push_back(fields[3]);
            if (fields.size() >= 5) {
                std::string_view kw = fields[4];
                std::size_t start = 0;
                while (start <= kw.size()) {
                    auto comma = kw.find(',', start);
                    std::string word = trim(kw.substr(start, comma == std::string_view::npos ? comma : comma - start));
                    if (!word.empty() && std::find(r.keywords.begin(), r.keywords.end(), word) == r.keywords.end())
                        r.keywords.push_back(word);
                    if (comma == std::string_view::npos) break;
                    start = comma + 1;
                }
            }
            relations.push_back(std::move(r));
        } else {
            ++out.dropped_records;
        }
    }

    std::map<EdgeKey, std::size_t> relation_index;
    for (auto& r : relations) {
        for (const auto* endpoint : {&r.src_name, &r.dst_name}) {
            if (!entity_index.count(*endpoint)) {
                upsert_entity(Entity{*endpoint, "UNKNOWN", {}, {}, 0, {scene_id}, {modality}});
            }
        }
        const EdgeKey key = edge_key(r.src_name, r.dst_name);
        auto it = relation_index.find(key);
        if (it == relation_index.end()) {
            relation_index.emplace(key, out.relations.size());
            out.relations.push_back(std::move(r));
        } else {
            out.relations[it->second].absorb(r);
        }
    }
    return out;
}

Extraction extract_knowledge(std::string_view text, Modality modality, const std::string& scene_id, Provider& llm,
                             const GroundingConfig& cfg) {
    if (trim(text).empty()) fail(ErrorKind::InvalidInput, "cannot extract knowledge from empty text");

    std::string prompt = kExtractionTemplate;
    replace_all(prompt, "{scene_id}", scene_id);
    replace_all(prompt, "{source}", modality == Modality::Visual ? "visual description" : "speech transcript");
    replace_all(prompt, "{input_text}", text);

    ProviderRequest req = ProviderRequest::chat(cfg.llm_model, std::move(prompt));
    req.temperature = cfg.temperature;
    req.top_p = cfg.top_p;

    for (int attempt = 0; attempt < 2; ++attempt) {
        const std::string reply = llm.complete(req).content;
        Extraction ex = parse_extraction(reply, modality, scene_id);
        const bool complete_marker = reply.find(kComplete) != std::string::npos;
        const bool unparseable = ex.entities.empty() && ex.relations.empty() &&
                                 (ex.dropped_records > 0 || !complete_marker);
        if (!unparseable) {
            if (ex.dropped_records > 0)
                spdlog::warn("{} ({}): dropped {} malformed extraction records", scene_id, to_string(modality),
                             ex.dropped_records);
            return ex;
        }
        req.messages.push_back({"assistant", reply});
        req.messages.push_back({"user", kExtractionReminder});
    }
    fail(ErrorKind::Extraction, fmt::format("{} ({}): extraction reply unparseable after one retry", scene_id,
                                            to_string(modality)));
}

SceneKnowledge fuse_scene_knowledge(const std::string& scene_id, const Extraction& vis, const Extraction& asr,
                                    Provider& llm, const GroundingConfig& cfg) {
    SceneKnowledge sk;
    sk.scene_id = scene_id;
    std::map<std::string, std::string> canonical;  // any surface name -> canonical name

    auto insert = [&](const Entity& e) {
        if (auto it = sk.entities.find(e.name); it != sk.entities.end()) {
            it->second.absorb(e);
            canonical[e.name] = e.name;
            return;
        }
        const std::string key = loose_name_key(e.name);
        for (auto& [name, existing] : sk.entities) {
            if (loose_name_key(name) != key || key.empty()) continue;
            // Transcript surface form wins; otherwise the first one seen stays.
            const bool prefer_new = e.source_modality.count(Modality::Asr) && !existing.source_modality.count(Modality::Asr);
            if (prefer_new) {
                Entity renamed = e;
                renamed.absorb(existing);
                const std::string old = name;
                sk.entities.erase(old);
                for (auto& [surface, canon] : canonical) {
                    if (canon == old) canon = e.name;
                }
                canonical[e.name] = e.name;
                sk.entities.emplace(e.name, std::move(renamed));
            } else {
                existing.absorb(e);
                canonical[e.name] = name;
            }
            return;
        }
        sk.entities.emplace(e.name, e);
        canonical[e.name] = e.name;
    };
    for (const auto& e : asr.entities) insert(e);
    for (const auto& e : vis.entities) insert(e);

    std::vector<std::string> visual_only;
    std::vector<std::string> asr_only;
    for (const auto& [name, e] : sk.entities) {
        if (e.source_modality == std::set<Modality>{Modality::Visual}) visual_only.push_back(name);
        if (e.source_modality == std::set<Modality>{Modality::Asr}) asr_only.push_back(name);
    }

    if (!visual_only.empty() && !asr_only.empty()) {
        auto listing = [&](const std::vector<std::string>& names) {
            std::string out;
            for (std::size_t i = 0; i < names.size(); ++i) {
                const Entity& e = sk.entities.at(names[i]);
                out += fmt::format("{}. {} ({}): {}\n", i + 1, e.name, e.entity_type, e.description());
            }
            return out;
        };
        std::string prompt = kFusionTemplate;
        replace_all(prompt, "{visual}", listing(visual_only));
        replace_all(prompt, "{asr}", listing(asr_only));
        ProviderRequest req = ProviderRequest::chat(cfg.llm_model, std::move(prompt));
        req.temperature = cfg.temperature;
        req.top_p = cfg.top_p;

        std::optional<nlohmann::json> verdict;
        try {
            verdict = json_object_in(llm.complete(req).content);
        } catch (const Error& e) {
            spdlog::warn("{}: entity disambiguation failed ({}); using mechanical fusion only", scene_id, e.what());
        }
        if (!verdict || !verdict->contains("matches") || !(*verdict)["matches"].is_array()) {
            sk.degraded = true;
        } else {
            std::set<std::string> used_asr;
            for (const auto& m : (*verdict)["matches"]) {
                if (!m.is_object() || !m.contains("visual") || !m.contains("asr")) continue;
                if (!m["visual"].is_string() || !m["asr"].is_string()) continue;
                const std::string v = normalize_entity_name(m["visual"].get<std::string>());
                const std::string a = normalize_entity_name(m["asr"].get<std::string>());
                if (std::find(visual_only.begin(), visual_only.end(), v) == visual_only.end()) continue;
                if (std::find(asr_only.begin(), asr_only.end(), a) == asr_only.end()) continue;
                if (!sk.entities.count(v) || used_asr.count(a)) continue;
                used_asr.insert(a);
                sk.entities.at(a).absorb(sk.entities.at(v));
                sk.entities.erase(v);
                for (auto& [surface, canon] : canonical) {
                    if (canon == v) canon = a;
                }
            }
        }
    }

    auto add_relation = [&](const Relation& r, Modality m) {
        Relation c = r;
        c.src_name = canonical.count(r.src_name) ? canonical[r.src_name] : r.src_name;
        c.dst_name = canonical.count(r.dst_name) ? canonical[r.dst_name] : r.dst_name;
        if (c.src_name == c.dst_name) return;
        for (const auto* endpoint : {&c.src_name, &c.dst_name}) {
            if (!sk.entities.count(*endpoint))
                sk.entities.emplace(*endpoint, Entity{*endpoint, "UNKNOWN", {}, {}, 0, {scene_id}, {m}});
        }
        auto [it, inserted] = sk.relations.try_emplace(edge_key(c.src_name, c.dst_name), c);
        if (!inserted) it->second.absorb(c);
    };
    for (const auto& r : asr.relations) add_relation(r, Modality::Asr);
    for (const auto& r : vis.relations) add_relation(r, Modality::Visual);
    return sk;
}

std::string synthesize_entity_description(const Entity& e, Provider& llm, const GroundingConfig& cfg) {
    if (e.description_fragments.size() < 2) return e.description();
    std::string listing;
    for (const auto& f : e.description_fragments) listing += "- " + f + "\n";
    std::string prompt = kCondenseTemplate;
    replace_all(prompt, "{name}", e.name);
    replace_all(prompt, "{descriptions}", listing);
    ProviderRequest req = ProviderRequest::chat(cfg.llm_model, std::move(prompt));
    req.temperature = cfg.temperature;
    req.top_p = cfg.top_p;
    try {
        std::string condensed = trim(llm.complete(req).content);
        if (!condensed.empty()) return condensed;
    } catch (const Error& err) {
        spdlog::warn("{}: description condensation failed ({}); keeping fragments", e.name, err.what());
    }
    return join(e.description_fragments, "; ");
}

std::size_t condense_descriptions(KnowledgeGraph& g, Provider& llm, const GroundingConfig& cfg) {
    std::vector<std::string> due;
    for (const auto& [name, e] : g.nodes()) {
        if (e.description_fragments.size() > cfg.condense_threshold &&
            e.summary_covers != e.description_fragments.size()) {
            due.push_back(name);
        }
    }
    for (const auto& name : due) g.set_summary(name, synthesize_entity_description(g.nodes().at(name), llm, cfg));
    return due.size();
}

}  // namespace scenedex

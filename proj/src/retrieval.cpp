#include "scenedex/retrieval.hpp"

#include <algorithm>
#include <cctype>
#include <set>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "scenedex/error.hpp"
#include "scenedex/tokenizer.hpp"

namespace scenedex {

namespace {

const std::set<std::string> kStopwords = {
    "a",     "about", "above", "after", "again", "all",   "also",  "am",    "an",    "and",   "any",   "are",
    "as",    "at",    "be",    "been",  "before", "being", "both",  "but",   "by",    "can",   "could", "did",
    "do",    "does",  "doing", "during", "each", "few",   "for",   "from",  "had",   "has",   "have",  "having",
    "he",    "her",   "here",  "hers",  "him",   "his",   "how",   "i",     "if",    "in",    "into",  "is",
    "it",    "its",   "just",  "me",    "more",  "most",  "my",    "no",    "nor",   "not",   "of",    "off",
    "on",    "once",  "only",  "or",    "other", "our",   "out",   "over",  "own",   "same",  "she",   "should",
    "so",    "some",  "such",  "than",  "that",  "the",   "their", "them",  "then",  "there", "these", "they",
    "this",  "those", "through", "to",  "too",   "under", "until", "up",    "us",    "very",  "was",   "we",
    "were",  "what",  "when",  "where", "which", "while", "who",   "whom",  "why",   "will",  "with",  "would",
    "you",   "your",  "yours", "tell",  "explain", "describe", "video", "videos",
};

const std::string kKeywordTemplate =
    "Extract the salient keywords of the user's question: the entities, topics and concepts an answer must cover. "
    "Reply with a JSON array of lowercase strings and nothing else.\n"
    "\n"
    "Question: {query}\n";

const std::string kFocusTemplate =
    "You are given key frames and the transcript of one video scene ({start} s to {end} s). Describe what the "
    "scene shows with attention to the following keywords: {keywords}. Mention objects, on-screen text, actions "
    "and anything said that bears on them.\n"
    "\n"
    "Transcript:\n{transcript}\n";

const std::string kAnswerTemplate =
    "---Role---\n"
    "You answer questions about a collection of long videos using only the retrieved evidence below.\n"
    "\n"
    "---Evidence---\n"
    "{context}\n"
    "\n"
    "---Instructions---\n"
    "Answer the question using the evidence. Refer to scenes by their time ranges where useful. If the evidence "
    "does not contain the answer, say so instead of guessing.\n"
    "\n"
    "Question: {query}\n";

void replace_all(std::string& s, std::string_view from, std::string_view to) {
    for (std::size_t pos = 0; (pos = s.find(from, pos)) != std::string::npos; pos += to.size()) {
        s.replace(pos, from.size(), to);
    }
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    return s;
}

void push_keyword(std::vector<std::string>& out, const std::string& raw) {
    std::string k = lower(trim(raw));
    if (!k.empty() && std::find(out.begin(), out.end(), k) == out.end()) out.push_back(std::move(k));
}

std::optional<std::vector<std::string>> parse_keyword_reply(const std::string& reply) {
    auto collect = [](const nlohmann::json& arr, std::vector<std::string>& out) {
        for (const auto& k : arr) {
            if (k.is_string()) push_keyword(out, k.get<std::string>());
        }
    };
    const auto open_arr = reply.find('[');
    const auto open_obj = reply.find('{');
    std::vector<std::string> out;
    if (open_obj != std::string::npos && (open_arr == std::string::npos || open_obj < open_arr)) {
        const auto close = reply.rfind('}');
        if (close == std::string::npos) return std::nullopt;
        const auto doc = nlohmann::json::parse(reply.substr(open_obj, close - open_obj + 1), nullptr, false);
        if (doc.is_discarded() || !doc.is_object()) return std::nullopt;
        for (const auto& [key, value] : doc.items()) {
            if (value.is_array()) collect(value, out);
        }
    } else if (open_arr != std::string::npos) {
        const auto close = reply.rfind(']');
        if (close == std::string::npos) return std::nullopt;
        const auto doc = nlohmann::json::parse(reply.substr(open_arr, close - open_arr + 1), nullptr, false);
        if (doc.is_discarded() || !doc.is_array()) return std::nullopt;
        collect(doc, out);
    } else {
        return std::nullopt;
    }
    if (out.empty()) return std::nullopt;
    return out;
}

std::string join_names(const std::vector<std::string>& v, std::string_view sep) {
    std::string out;
    for (const auto& s : v) {
        if (!out.empty()) out += sep;
        out += s;
    }
    return out;
}

}  // namespace

std::vector<std::string> fallback_keywords(const std::string& query) {
    std::vector<std::string> out;
    std::string word;
    auto flush = [&] {
        if (!word.empty() && !kStopwords.count(word)) push_keyword(out, word);
        word.clear();
    };
    for (unsigned char c : query) {
        if (c >= 0x80 || std::isalnum(c) || c == '-' || c == '\'') {
            word += static_cast<char>(std::tolower(c));
        } else {
            flush();
        }
    }
    flush();
    return out;
}

std::vector<std::string> extract_query_keywords(const std::string& query, Provider& llm, const RetrievalConfig& cfg,
                                                bool* degraded) {
    if (trim(query).empty()) fail(ErrorKind::InvalidInput, "query is empty");
    std::string prompt = kKeywordTemplate;
    replace_all(prompt, "{query}", query);
    ProviderRequest req = ProviderRequest::chat(cfg.llm_model, std::move(prompt));
    req.temperature = cfg.temperature;
    req.top_p = cfg.top_p;
    try {
        if (auto kw = parse_keyword_reply(llm.complete(req).content)) {
            if (degraded) *degraded = false;
            return *kw;
        }
        spdlog::warn("keyword reply unparseable; using query tokens");
    } catch (const Error& e) {
        spdlog::warn("keyword extraction failed ({}); using query tokens", e.what());
    }
    if (degraded) *degraded = true;
    return fallback_keywords(query);
}

RetrievalSelection select_scenes(std::vector<SceneCandidate> candidates, std::size_t budget) {
    if (budget == 0) fail(ErrorKind::InvalidInput, "token budget must be positive");
    std::sort(candidates.begin(), candidates.end(), [](const SceneCandidate& a, const SceneCandidate& b) {
        if (a.score != b.score) return a.score > b.score;
        if (a.position != b.position) return a.position < b.position;
        return a.scene_id < b.scene_id;
    });
    RetrievalSelection sel;
    std::vector<const SceneCandidate*> taken;
    for (const auto& c : candidates) {
        if (!(c.score > 0.0)) break;
        if (c.tokens > budget - sel.total_tokens) continue;
        sel.total_tokens += c.tokens;
        taken.push_back(&c);
    }
    std::sort(taken.begin(), taken.end(), [](const SceneCandidate* a, const SceneCandidate* b) {
        return a->position != b->position ? a->position < b->position : a->scene_id < b->scene_id;
    });
    for (const auto* c : taken) {
        sel.scene_ids.push_back(c->scene_id);
        sel.scores[c->scene_id] = c->score;
        sel.tokens[c->scene_id] = c->tokens;
    }
    return sel;
}

RetrievalSelection select_scenes(const std::map<std::string, double>& scores,
                                 const std::map<std::string, std::size_t>& lengths, std::size_t budget,
                                 const std::map<std::string, std::size_t>& positions) {
    std::vector<SceneCandidate> candidates;
    std::size_t fallback_position = 0;
    for (const auto& [id, score] : scores) {
        auto len = lengths.find(id);
        if (len == lengths.end()) fail(ErrorKind::InvalidInput, "no token length for scene " + id);
        auto pos = positions.find(id);
        candidates.push_back({id, score, len->second, pos == positions.end() ? fallback_position : pos->second});
        ++fallback_position;
    }
    if (lengths.size() != scores.size()) fail(ErrorKind::InvalidInput, "score and length maps disagree");
    return select_scenes(std::move(candidates), budget);
}

FocusedCaption focused_caption(const Scene& s, const std::vector<std::string>& keywords,
                               const std::vector<FrameRef>& frames, const std::string& generic_caption, Provider& vlm,
                               const RetrievalConfig& cfg) {
    std::string prompt = kFocusTemplate;
    replace_all(prompt, "{start}", format_seconds(s.start));
    replace_all(prompt, "{end}", format_seconds(s.end));
    replace_all(prompt, "{keywords}", join_names(keywords, ", "));
    replace_all(prompt, "{transcript}", s.transcript_text);
    ProviderRequest req;
    req.route = Route::Caption;
    req.model = cfg.vlm_model;
    req.temperature = cfg.temperature;
    req.top_p = cfg.top_p;
    req.messages.push_back({"user", std::move(prompt)});
    req.frames = frames;
    try {
        std::string text = trim(vlm.complete(req).content);
        if (!text.empty()) return {std::move(text), false};
        spdlog::warn("{}: empty focused caption; using the generic caption", s.id);
    } catch (const Error& e) {
        spdlog::warn("{}: focused caption failed ({}); using the generic caption", s.id, e.what());
    }
    return {generic_caption, true};
}

AssembledContext assemble_context(const RetrievalSelection& sel, const KnowledgeGraph& g, const StoreBundle& stores,
                                  const std::map<std::string, std::string>& captions, int depth) {
    AssembledContext ctx;
    std::vector<const Scene*> scenes;
    for (const auto& id : sel.scene_ids) {
        const Scene* s = stores.find_scene(id);
        if (!s) fail(ErrorKind::Consistency, "selected scene " + id + " is not in the store");
        scenes.push_back(s);
    }

    // Entities per section, and the set of all selected-scene entities.
    std::vector<std::set<std::string>> owned(scenes.size());
    std::set<std::string> selected_entities;
    for (const auto& [name, e] : g.nodes()) {
        for (std::size_t i = 0; i < scenes.size(); ++i) {
            if (e.source_scene_ids.count(scenes[i]->id)) {
                owned[i].insert(name);
                selected_entities.insert(name);
            }
        }
    }
    std::map<std::string, std::vector<EdgeKey>> incident;
    for (const auto& [key, r] : g.edges()) {
        incident[key.first].push_back(key);
        incident[key.second].push_back(key);
    }

    std::set<EdgeKey> emitted;
    for (std::size_t i = 0; i < scenes.size(); ++i) {
        ContextSection sec;
        sec.scene_id = scenes[i]->id;
        sec.start = scenes[i]->start;
        sec.end = scenes[i]->end;
        auto cap = captions.find(sec.scene_id);
        sec.caption = cap != captions.end() ? cap->second : std::string{};
        sec.transcript = scenes[i]->silent() ? std::string(kSilentMarker) : scenes[i]->transcript_text;
        for (const auto& name : owned[i]) sec.entities.push_back(g.nodes().at(name));

        std::vector<EdgeKey> reached;
        if (depth <= 0) {
            for (const auto& name : owned[i]) {
                for (const auto& key : incident[name]) {
                    if (selected_entities.count(key.first) && selected_entities.count(key.second))
                        reached.push_back(key);
                }
            }
        } else {
            std::set<std::string> frontier = owned[i];
            std::set<std::string> seen = owned[i];
            for (int hop = 0; hop < depth && !frontier.empty(); ++hop) {
                std::set<std::string> next;
                for (const auto& name : frontier) {
                    for (const auto& key : incident[name]) {
                        reached.push_back(key);
                        const std::string& other = key.first == name ? key.second : key.first;
                        if (seen.insert(other).second) next.insert(other);
                    }
                }
                frontier = std::move(next);
            }
        }
        std::sort(reached.begin(), reached.end());
        reached.erase(std::unique(reached.begin(), reached.end()), reached.end());
        for (const auto& key : reached) {
            if (emitted.insert(key).second) sec.relations.push_back(g.edges().at(key));
        }
        ctx.sections.push_back(std::move(sec));
    }
    ctx.rendered = render_context(ctx.sections);
    return ctx;
}

std::string render_context(const std::vector<ContextSection>& sections) {
    if (sections.empty()) return std::string(kNoScenesSentinel) + "\n";
    std::string out;
    for (const auto& sec : sections) {
        out += fmt::format("### Scene {} [{} s - {} s]\n", sec.scene_id, format_seconds(sec.start),
                           format_seconds(sec.end));
        out += "Caption: " + sec.caption + "\n";
        out += "Transcript: " + sec.transcript + "\n";
        if (!sec.entities.empty()) {
            out += "Entities:\n";
            for (const auto& e : sec.entities) out += fmt::format("- {} ({}): {}\n", e.name, e.entity_type, e.description());
        }
        if (!sec.relations.empty()) {
            out += "Relations:\n";
            for (const auto& r : sec.relations) out += fmt::format("- {} -- {}: {}\n", r.src_name, r.dst_name, r.description());
        }
        out += "\n";
    }
    return out;
}

Answer generate_answer(const Query& q, const AssembledContext& ctx, const RetrievalSelection& sel, Provider& llm,
                       const RetrievalConfig& cfg) {
    std::string prompt = kAnswerTemplate;
    replace_all(prompt, "{context}", ctx.rendered.empty() ? std::string(kNoScenesSentinel) : ctx.rendered);
    replace_all(prompt, "{query}", q.text);
    ProviderRequest req = ProviderRequest::chat(cfg.llm_model, std::move(prompt));
    req.temperature = cfg.temperature;
    req.top_p = cfg.top_p;
    return {llm.complete(req).content, sel.scene_ids};
}

nlohmann::json QueryResult::to_json(const StoreBundle& stores) const {
    auto selection_doc = nlohmann::json::array();
    for (const auto& id : selection.scene_ids) {
        const Scene* s = stores.find_scene(id);
        selection_doc.push_back({{"scene_id", id},
                                 {"start_s", s ? s->start.value() : 0.0},
                                 {"end_s", s ? s->end.value() : 0.0},
                                 {"score", selection.scores.at(id)},
                                 {"tokens", selection.tokens.at(id)}});
    }
    return {{"query", query.text},
            {"keywords", query.keywords},
            {"budget_tokens", query.budget_tokens},
            {"answer", answer.text},
            {"provenance", answer.scene_ids},
            {"selection", std::move(selection_doc)},
            {"context_tokens", context_tokens},
            {"degraded_flags", degraded_flags}};
}

}  // namespace scenedex

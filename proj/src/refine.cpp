#include "scenedex/refine.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "scenedex/error.hpp"

namespace scenedex {

Scene make_silent(Seconds start, Seconds end) {
    return {{}, start, end, std::string(kSilentMarker), SceneKind::Silent};
}

void SceneSet::validate() const {
    if (scenes.empty()) fail(ErrorKind::InvalidInput, video_id + ": scene set is empty");
    if (scenes.front().start != Seconds{}) fail(ErrorKind::InvalidInput, video_id + ": first scene does not start at 0");
    if (scenes.back().end != duration)
        fail(ErrorKind::InvalidInput, video_id + ": last scene does not end at the video duration");
    for (std::size_t i = 0; i < scenes.size(); ++i) {
        const auto& s = scenes[i];
        if (!(s.start < s.end)) fail(ErrorKind::InvalidInput, fmt::format("{}: scene {} is empty", video_id, i + 1));
        if (s.silent() && s.transcript_text != kSilentMarker)
            fail(ErrorKind::InvalidInput, fmt::format("{}: silent scene {} lacks the marker", video_id, i + 1));
        if (i > 0) {
            if (scenes[i - 1].end != s.start)
                fail(ErrorKind::InvalidInput, fmt::format("{}: scenes {} and {} do not abut", video_id, i, i + 1));
            if (scenes[i - 1].silent() && s.silent())
                fail(ErrorKind::InvalidInput, fmt::format("{}: scenes {} and {} are both silent", video_id, i, i + 1));
        }
    }
}

std::vector<RawScene> carve_silences(const std::vector<RawScene>& scenes, const std::vector<SilenceInterval>& silences,
                                     Seconds epsilon) {
    std::vector<RawScene> current = scenes;
    for (const auto& gap : silences) {
        if (gap.duration() <= epsilon) continue;
        std::vector<RawScene> next;
        for (auto& s : current) {
            if (s.end <= gap.start || s.start >= gap.end) {
                next.push_back(std::move(s));
                continue;
            }
            const bool left = s.start < gap.start;
            const bool right = gap.end < s.end;
            if (left) next.push_back({s.start, gap.start, s.text});
            if (right) next.push_back({gap.end, s.end, left ? std::string{} : s.text});
        }
        current = std::move(next);
    }
    return current;
}

std::vector<Scene> fill_time_gaps(const std::vector<RawScene>& scenes, const ChunkRange& r, Seconds epsilon) {
    for (std::size_t i = 0; i < scenes.size(); ++i) {
        if (!(scenes[i].start < scenes[i].end))
            fail(ErrorKind::InvalidInput, fmt::format("scene {} has start >= end", i + 1));
        if (scenes[i].start < r.start || scenes[i].end > r.end)
            fail(ErrorKind::InvalidInput, fmt::format("scene {} lies outside the chunk", i + 1));
        if (i > 0 && scenes[i].start < scenes[i - 1].end)
            fail(ErrorKind::InvalidInput, fmt::format("scenes {} and {} overlap", i, i + 1));
    }
    if (scenes.empty()) return {make_silent(r.start, r.end)};

    std::vector<Scene> out;
    auto speech = [](const RawScene& s) { return Scene{{}, s.start, s.end, s.text, SceneKind::Speech}; };

    out.push_back(speech(scenes.front()));
    if (const Seconds lead = scenes.front().start - r.start; lead > Seconds{}) {
        if (lead > epsilon) {
            out.insert(out.begin(), make_silent(r.start, scenes.front().start));
        } else {
            out.front().start = r.start;
        }
    }
    for (std::size_t i = 1; i < scenes.size(); ++i) {
        const Seconds a = scenes[i - 1].end;
        const Seconds b = scenes[i].start;
        Scene next = speech(scenes[i]);
        if (b > a) {
            if (b - a > epsilon) {
                out.push_back(make_silent(a, b));
            } else {
                const Seconds mid = midpoint(a, b);
                out.back().end = mid;
                next.start = mid;
            }
        }
        out.push_back(std::move(next));
    }
    if (const Seconds tail = r.end - scenes.back().end; tail > Seconds{}) {
        if (tail > epsilon) {
            out.push_back(make_silent(scenes.back().end, r.end));
        } else {
            out.back().end = r.end;
        }
    }
    return out;
}

namespace {

struct SpeechEdges {
    Seconds first_start;
    Seconds last_end;
    bool any = false;
};

SpeechEdges speech_edges(const Scene& s, const Transcript& t) {
    SpeechEdges e{s.end, s.start, false};
    for (const auto& u : t.utterances) {
        const Seconds mid = midpoint(u.start, u.end);
        if (mid < s.start || mid >= s.end) continue;
        e.first_start = min(e.first_start, max(u.start, s.start));
        e.last_end = max(e.last_end, min(u.end, s.end));
        e.any = true;
    }
    if (!e.any) {
        e.first_start = s.start;
        e.last_end = s.end;
    }
    return e;
}

Scene merged(const Scene& left, const Scene& right) {
    Scene out{left.id.empty() ? right.id : left.id, left.start, right.end, {}, SceneKind::Speech};
    if (left.silent() && right.silent()) return make_silent(left.start, right.end);
    std::vector<const std::string*> parts;
    if (!left.silent() && !left.transcript_text.empty()) parts.push_back(&left.transcript_text);
    if (!right.silent() && !right.transcript_text.empty()) parts.push_back(&right.transcript_text);
    for (const auto* p : parts) {
        if (!out.transcript_text.empty()) out.transcript_text += ' ';
        out.transcript_text += *p;
    }
    return out;
}

}  // namespace

std::vector<Scene> merge_short_scenes(std::vector<Scene> scenes, Seconds min_dur, const Transcript& t) {
    while (scenes.size() > 1) {
        auto it = std::find_if(scenes.begin(), scenes.end(), [&](const Scene& s) { return s.duration() < min_dur; });
        if (it == scenes.end()) break;
        const std::size_t i = static_cast<std::size_t>(it - scenes.begin());
        const bool has_left = i > 0;
        const bool has_right = i + 1 < scenes.size();

        bool go_left = has_left;
        if (has_left && has_right) {
            const bool left_speech = !scenes[i - 1].silent();
            const bool right_speech = !scenes[i + 1].silent();
            if (left_speech != right_speech) {
                go_left = left_speech;
            } else if (left_speech) {
                const SpeechEdges self = speech_edges(scenes[i], t);
                const Seconds gap_left = self.first_start - speech_edges(scenes[i - 1], t).last_end;
                const Seconds gap_right = speech_edges(scenes[i + 1], t).first_start - self.last_end;
                go_left = gap_left <= gap_right;
            }
        }
        if (go_left) {
            scenes[i - 1] = merged(scenes[i - 1], scenes[i]);
            scenes.erase(scenes.begin() + static_cast<std::ptrdiff_t>(i));
        } else {
            scenes[i + 1] = merged(scenes[i], scenes[i + 1]);
            scenes.erase(scenes.begin() + static_cast<std::ptrdiff_t>(i));
        }
    }
    return scenes;
}

bool ends_sentence(std::string_view text) {
    while (!text.empty()) {
        const unsigned char c = static_cast<unsigned char>(text.back());
        if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '"' || c == '\'' || c == ')' || c == ']') {
            text.remove_suffix(1);
            continue;
        }
        break;
    }
    if (text.empty()) return false;
    const char last = text.back();
    if (last == '.' || last == '!' || last == '?') return true;
    for (std::string_view cjk : {"\xE3\x80\x82", "\xEF\xBC\x81", "\xEF\xBC\x9F", "\xE2\x80\xA6"}) {
        if (text.size() >= cjk.size() && text.substr(text.size() - cjk.size()) == cjk) return true;
    }
    return false;
}

std::vector<Scene> reslice_text(std::vector<Scene> scenes, const Transcript& t) {
    for (auto& s : scenes) {
        if (s.silent()) {
            if (has_speech(t, s.start, s.end)) {
                s.kind = SceneKind::Speech;
                s.transcript_text = text_between(t, s.start, s.end);
            }
        } else {
            s.transcript_text = text_between(t, s.start, s.end);
        }
    }
    return scenes;
}

std::vector<Scene> align_boundaries(std::vector<Scene> scenes, const Transcript& t, Seconds window, Seconds min_dur) {
    for (std::size_t i = 1; i < scenes.size(); ++i) {
        if (scenes[i - 1].silent() || scenes[i].silent()) continue;
        const Seconds boundary = scenes[i].start;
        std::optional<Seconds> best;
        for (const auto& u : t.utterances) {
            if (!ends_sentence(u.text)) continue;
            const Seconds dist = u.end > boundary ? u.end - boundary : boundary - u.end;
            if (dist > window) continue;
            const Seconds best_dist = best ? (*best > boundary ? *best - boundary : boundary - *best) : Seconds{};
            if (!best || dist < best_dist) best = u.end;
        }
        if (!best || *best == boundary) continue;
        const Seconds left_len = *best - scenes[i - 1].start;
        const Seconds right_len = scenes[i].end - *best;
        if (left_len <= Seconds{} || right_len <= Seconds{}) continue;
        if (left_len < min_dur || right_len < min_dur) continue;
        scenes[i - 1].end = *best;
        scenes[i].start = *best;
    }
    return reslice_text(std::move(scenes), t);
}

std::vector<Scene> coalesce_silent_runs(std::vector<Scene> scenes) {
    std::vector<Scene> out;
    for (auto& s : scenes) {
        if (!out.empty() && out.back().silent() && s.silent()) {
            out.back().end = s.end;
        } else {
            out.push_back(std::move(s));
        }
    }
    return out;
}

std::vector<Scene> refine_chunk(const std::vector<RawScene>& raw, const std::vector<SilenceInterval>& silences,
                                const ChunkRange& r, const Transcript& t, const RefineConfig& cfg) {
    auto scenes = fill_time_gaps(carve_silences(raw, silences, cfg.epsilon), r, cfg.epsilon);
    scenes = merge_short_scenes(std::move(scenes), cfg.min_scene, t);
    return align_boundaries(std::move(scenes), t, cfg.align_window, cfg.min_scene);
}

std::string scene_id(const std::string& video_id, std::size_t index) {
    return fmt::format("{}:{:04d}", video_id, index);
}

SceneSet stitch_chunks(std::vector<ChunkScenes> per_chunk, Seconds duration, const Transcript& t,
                       const RefineConfig& cfg) {
    if (per_chunk.empty()) fail(ErrorKind::InvalidInput, "no chunks to stitch");
    std::sort(per_chunk.begin(), per_chunk.end(),
              [](const ChunkScenes& a, const ChunkScenes& b) { return a.first.start < b.first.start; });

    if (per_chunk.front().first.start != Seconds{} || per_chunk.back().first.end != duration)
        fail(ErrorKind::InvalidInput, "chunks do not cover [0, duration]");
    for (std::size_t k = 0; k < per_chunk.size(); ++k) {
        const auto& [r, scenes] = per_chunk[k];
        if (scenes.empty() || scenes.front().start != r.start || scenes.back().end != r.end)
            fail(ErrorKind::InvalidInput, fmt::format("chunk {} scenes do not tile its range", r.index));
        for (std::size_t i = 0; i < scenes.size(); ++i) {
            if (!(scenes[i].start < scenes[i].end) || (i > 0 && scenes[i - 1].end != scenes[i].start))
                fail(ErrorKind::InvalidInput, fmt::format("chunk {} scenes do not tile its range", r.index));
        }
        if (k > 0) {
            const auto& prev = per_chunk[k - 1].first;
            if (r.start > prev.end || r.start <= prev.start)
                fail(ErrorKind::InvalidInput, fmt::format("chunks {} and {} are not overlapping neighbours",
                                                          prev.index, r.index));
        }
    }

    std::vector<Scene> all;
    for (std::size_t k = 0; k < per_chunk.size(); ++k) {
        const auto& [r, scenes] = per_chunk[k];
        const Seconds own_start = k == 0 ? r.start : midpoint(r.start, per_chunk[k - 1].first.end);
        const Seconds own_end = k + 1 == per_chunk.size() ? r.end : midpoint(per_chunk[k + 1].first.start, r.end);
        for (const auto& s : scenes) {
            Scene c = s;
            c.start = max(c.start, own_start);
            c.end = min(c.end, own_end);
            if (c.start < c.end) all.push_back(std::move(c));
        }
    }
    all = coalesce_silent_runs(std::move(all));

    // Silent slivers left by truncation are treated like short gaps.
    for (std::size_t i = 0; i < all.size() && all.size() > 1;) {
        if (!all[i].silent() || all[i].duration() > cfg.epsilon) {
            ++i;
            continue;
        }
        const bool has_left = i > 0;
        const bool has_right = i + 1 < all.size();
        if (has_left && has_right) {
            const Seconds mid = midpoint(all[i].start, all[i].end);
            all[i - 1].end = mid;
            all[i + 1].start = mid;
        } else if (has_left) {
            all[i - 1].end = all[i].end;
        } else {
            all[i + 1].start = all[i].start;
        }
        all.erase(all.begin() + static_cast<std::ptrdiff_t>(i));
        all = coalesce_silent_runs(std::move(all));
        i = 0;
    }

    all = merge_short_scenes(std::move(all), cfg.min_scene, t);
    all = coalesce_silent_runs(reslice_text(std::move(all), t));

    SceneSet set{t.video_id, std::move(all), duration};
    for (std::size_t i = 0; i < set.scenes.size(); ++i) set.scenes[i].id = scene_id(t.video_id, i + 1);
    set.validate();
    return set;
}

nlohmann::json scenes_to_json(const std::vector<Scene>& scenes) {
    auto manifest = nlohmann::json::array();
    for (const auto& s : scenes) {
        manifest.push_back({{"id", s.id},
                            {"start_s", s.start.value()},
                            {"end_s", s.end.value()},
                            {"kind", s.silent() ? "silent" : "speech"},
                            {"transcript_text", s.transcript_text}});
    }
    return manifest;
}

std::vector<Scene> scenes_from_json(const nlohmann::json& manifest) {
    if (!manifest.is_array()) fail(ErrorKind::Consistency, "scene manifest must be a JSON array");
    std::vector<Scene> out;
    for (const auto& item : manifest) {
        const std::string kind = item.at("kind").get<std::string>();
        if (kind != "speech" && kind != "silent") fail(ErrorKind::Consistency, "unknown scene kind " + kind);
        out.push_back({item.at("id").get<std::string>(), Seconds::from_double(item.at("start_s").get<double>()),
                       Seconds::from_double(item.at("end_s").get<double>()),
                       item.at("transcript_text").get<std::string>(),
                       kind == "silent" ? SceneKind::Silent : SceneKind::Speech});
    }
    return out;
}

}  // namespace scenedex

#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "scenedex/ingest.hpp"
#include "scenedex/segmenter.hpp"

namespace scenedex {

enum class SceneKind { Speech, Silent };

inline constexpr std::string_view kSilentMarker = "[SILENT]";

struct Scene {
    std::string id;
    Seconds start;
    Seconds end;
    std::string transcript_text;
    SceneKind kind = SceneKind::Speech;

    Seconds duration() const { return end - start; }
    bool silent() const { return kind == SceneKind::Silent; }

    friend bool operator==(const Scene&, const Scene&) = default;
};

Scene make_silent(Seconds start, Seconds end);

struct SceneSet {
    std::string video_id;
    std::vector<Scene> scenes;
    Seconds duration;

    /// Sorted, disjoint, exactly covering [0, duration], no adjacent silent scenes.
    void validate() const;

    friend bool operator==(const SceneSet&, const SceneSet&) = default;
};

struct RefineConfig {
    Seconds epsilon = Seconds::whole(10);
    Seconds min_scene = Seconds::whole(10);
    Seconds align_window = Seconds::whole(3);
};

/// Removes detected silences longer than `epsilon` from the scene ranges so
/// that they surface as gaps; scenes spanning such a silence are split.
std::vector<RawScene> carve_silences(const std::vector<RawScene>& scenes, const std::vector<SilenceInterval>& silences,
                                     Seconds epsilon);

/// Resolves every uncovered interval of `r`: gaps up to `epsilon` are split at
/// their midpoint between the two neighbours (edge gaps go to the single
/// neighbour); longer gaps become `[SILENT]` scenes. The output tiles `r`.
std::vector<Scene> fill_time_gaps(const std::vector<RawScene>& scenes, const ChunkRange& r, Seconds epsilon);

/// Repeatedly folds the earliest scene shorter than `min_dur` into a
/// neighbour, preferring speech neighbours and, between two, the one whose
/// speech lies closer across the shared boundary (ties go left).
std::vector<Scene> merge_short_scenes(std::vector<Scene> scenes, Seconds min_dur, const Transcript& t);

/// Snaps each interior speech/speech boundary to the nearest sentence-final
/// utterance end within `window`, unless that would leave either side shorter
/// than `min_dur`; then re-slices every scene's text from `t`.
std::vector<Scene> align_boundaries(std::vector<Scene> scenes, const Transcript& t, Seconds window,
                                    Seconds min_dur = Seconds{});

/// Joins runs of adjacent silent scenes.
std::vector<Scene> coalesce_silent_runs(std::vector<Scene> scenes);

/// Rebuilds every scene's text from the transcript utterances whose midpoint
/// it contains. A silent scene that turns out to contain speech becomes speech.
std::vector<Scene> reslice_text(std::vector<Scene> scenes, const Transcript& t);

bool ends_sentence(std::string_view text);

/// carve_silences -> fill_time_gaps -> merge_short_scenes -> align_boundaries.
std::vector<Scene> refine_chunk(const std::vector<RawScene>& raw, const std::vector<SilenceInterval>& silences,
                                const ChunkRange& r, const Transcript& t, const RefineConfig& cfg);

using ChunkScenes = std::pair<ChunkRange, std::vector<Scene>>;

/// Joins per-chunk scene lists into one SceneSet. Inside each overlap the
/// earlier chunk owns time up to the overlap midpoint. Straddling scenes are
/// truncated, silent runs coalesced, silent slivers no longer than epsilon
/// dissolved as short gaps, short scenes merged, text re-sliced and ids
/// assigned as `<video_id>:<0001-based index>`.
SceneSet stitch_chunks(std::vector<ChunkScenes> per_chunk, Seconds duration, const Transcript& t,
                       const RefineConfig& cfg);

std::string scene_id(const std::string& video_id, std::size_t index);

nlohmann::json scenes_to_json(const std::vector<Scene>& scenes);
std::vector<Scene> scenes_from_json(const nlohmann::json& manifest);

}  // namespace scenedex

#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "scenedex/provider.hpp"
#include "scenedex/time.hpp"

namespace scenedex {

struct TimedUtterance {
    Seconds start;
    Seconds end;
    std::string text;

    Seconds duration() const { return end - start; }
    friend bool operator==(const TimedUtterance&, const TimedUtterance&) = default;
};

struct Transcript {
    std::string video_id;
    Seconds duration;
    std::vector<TimedUtterance> utterances;

    /// Throws Error{InvalidInput} naming the first broken invariant.
    void validate() const;

    friend bool operator==(const Transcript&, const Transcript&) = default;
};

struct ChunkRange {
    int index = 1;  // 1-based
    Seconds start;
    Seconds end;

    Seconds length() const { return end - start; }
    friend bool operator==(const ChunkRange&, const ChunkRange&) = default;
};

struct SilenceInterval {
    Seconds start;
    Seconds end;

    Seconds duration() const { return end - start; }
    friend bool operator==(const SilenceInterval&, const SilenceInterval&) = default;
};

/// Overlapping fixed-length windows over [0, duration]. Chunk k starts at
/// (k-1)*(chunk_len - overlap). A final chunk that would add less than
/// `overlap` of new coverage is folded into its predecessor.
std::vector<ChunkRange> make_chunk_ranges(Seconds duration, Seconds chunk_len, Seconds overlap);

/// Utterances intersecting `r`, clipped to its bounds.
Transcript slice_transcript(const Transcript& t, const ChunkRange& r);

/// Moves every utterance by `offset` (chunk-relative to absolute time).
Transcript shift_transcript(const Transcript& t, Seconds offset, Seconds new_duration);

/// Asks the ASR provider for a chunk-relative transcript of `media_ref`
/// within `r`. The result satisfies the Transcript invariants or a protocol
/// error is raised; use `shift_transcript` to move it onto the video timeline.
Transcript transcribe(const std::string& video_id, const std::string& media_ref, const ChunkRange& r,
                      Provider& asr, const std::string& model);

/// Maximal no-speech gaps of at least `min_gap` inside `r`, including the
/// leading and trailing gaps against r's bounds.
std::vector<SilenceInterval> detect_silences(const Transcript& slice, const ChunkRange& r, Seconds min_gap);

/// Joins per-chunk ASR transcripts (already absolute) into one transcript.
/// Inside each overlap, the earlier chunk keeps utterances whose midpoint lies
/// before the overlap midpoint and the later chunk keeps the rest.
Transcript join_chunk_transcripts(const std::string& video_id, Seconds duration,
                                  const std::vector<ChunkRange>& chunks,
                                  const std::vector<Transcript>& pieces);

/// Transcript file: `start_s<TAB>end_s<TAB>text` per line, `#` comments.
Transcript parse_transcript(std::string_view contents, const std::string& video_id,
                            std::optional<Seconds> duration = std::nullopt);
Transcript read_transcript_file(const std::filesystem::path& path, const std::string& video_id,
                                std::optional<Seconds> duration = std::nullopt);
std::string format_transcript(const Transcript& t);

/// Concatenated text of the utterances whose midpoint lies in [start, end).
std::string text_between(const Transcript& t, Seconds start, Seconds end);

/// True if some utterance midpoint lies in [start, end).
bool has_speech(const Transcript& t, Seconds start, Seconds end);

std::string trim(std::string_view s);

}  // namespace scenedex

#pragma once

#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "scenedex/ingest.hpp"
#include "scenedex/provider.hpp"

namespace scenedex {

struct Delimiters {
    std::string record = "<|REC|>";
    std::string completion = "<|DONE|>";
};

struct SegmentationPrompt {
    std::string text;
    std::string record_delimiter;
    std::string completion_delimiter;
};

struct RawScene {
    Seconds start;
    Seconds end;
    std::string text;

    friend bool operator==(const RawScene&, const RawScene&) = default;
};

enum class FaultKind { TooFewSegments, SceneTooShort, SceneTooLong, GapOrOverlap, OutOfBounds, Unparseable };

const char* to_string(FaultKind kind);

struct SegmentationFault {
    FaultKind kind;
    std::string detail;
};

enum class ModelTier { Base, Escalated };

struct RetryState {
    int attempt = 0;
    ModelTier model_tier = ModelTier::Base;
    int escalations = 0;
    std::vector<std::pair<std::string, std::string>> history;  // (prompt, response)
};

struct SegmenterConfig {
    Delimiters delimiters;
    std::string base_model = "gpt-4o-mini";
    std::string escalated_model = "gpt-4o";
    double temperature = 0.7;
    double top_p = 0.95;
    Seconds min_scene = Seconds::whole(15);
    Seconds max_scene = Seconds::whole(60);
    int min_scene_count = 3;
    /// The scene-count rule is enforced only for chunks longer than this.
    Seconds count_rule_above = Seconds::whole(90);
    int max_retries = 4;
    int escalate_after = 2;
    Seconds fallback_interval = Seconds::whole(60);
    /// Token budget for the replayed conversation; oldest repair rounds are
    /// dropped first once exceeded.
    std::size_t max_context_tokens = 100'000;
};

/// The scene-segmentation instruction template with `{input_text}`,
/// `{record_delimiter}` and `{completion_delimiter}` placeholders.
const std::string& segmentation_template();

/// Renders the prompt for a transcript slice. Time marks are written relative
/// to `origin` (the chunk start), as `[start -> end] text` lines.
SegmentationPrompt build_segmentation_prompt(const Transcript& slice, const Delimiters& delimiters,
                                             Seconds origin = Seconds{});

/// Splits an LLM reply into scenes. Accepts `h:mm:ss`, `mm:ss` and plain
/// second time marks. Returns a fault of kind Unparseable on failure.
std::variant<std::vector<RawScene>, SegmentationFault> parse_segmentation_response(std::string_view response,
                                                                                   const Delimiters& delimiters);

/// Inverse of the parser for well-formed scene lists.
std::string render_segmentation_response(const std::vector<RawScene>& scenes, const Delimiters& delimiters);

/// Validates chunk-relative scenes; nullopt means the list is acceptable.
/// Rules in order: scene count, chunk bounds, ordering/overlap, durations.
std::optional<SegmentationFault> check_time_ranges(const std::vector<RawScene>& scenes, Seconds chunk_duration,
                                                   const SegmenterConfig& cfg);

/// Follow-up instruction for a fault. Unparseable replies re-issue
/// `base_prompt` with a format reminder appended.
std::string choose_fix_prompt(const SegmentationFault& fault, const std::string& base_prompt,
                              const Delimiters& delimiters = {});

struct SegmentationOutcome {
    std::vector<RawScene> scenes;  // absolute time
    RetryState state;
    std::vector<SegmentationFault> faults;
    std::size_t calls = 0;
    bool used_fallback = false;
};

/// Uniform `interval`-long partition of `r`; a remainder shorter than
/// `min_tail` is absorbed by the last interval. Scene text comes from `slice`.
std::vector<RawScene> default_partition(const Transcript& slice, const ChunkRange& r, Seconds interval,
                                        Seconds min_tail);

/// Prompt, parse, validate; on a fault send the matching repair prompt with
/// the full conversation and retry, escalating the model tier after
/// `escalate_after` consecutive faults. After `max_retries` retries the
/// default partition is returned. Transport errors propagate.
SegmentationOutcome segment_chunk(const Transcript& slice, const ChunkRange& r, Provider& llm,
                                  const SegmenterConfig& cfg);

}  // namespace scenedex

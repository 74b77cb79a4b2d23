#include "scenedex/segmenter.hpp"

#include <regex>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "scenedex/error.hpp"
#include "scenedex/tokenizer.hpp"

namespace scenedex {

namespace {

const std::string kTemplate =
    "-Goal-\n"
    "The task is to segment the input text into distinct scenes based on the given criteria. The segmentation "
    "should be done purely based on the content provided, without the need for summarization or interpretation.\n"
    "\n"
    "-Steps-\n"
    "\n"
    "1. Scene Identification and Segmentation\n"
    "- Identify distinct scenes in the text, and need to reflect on why these scenes are segmented. The "
    "segmentation should be based solely on the content and structure of the text.\n"
    "- Ensure each scene contains detailed descriptions, dialogues, or events to form a coherent narrative unit, "
    "and must not consist of a single sentence.\n"
    "\n"
    "2. Time Range and Scene Delimiters\n"
    "- For each scene, record the time range (if available) at the beginning in the format "
    "[start_time -> end_time].\n"
    "- Each scene should follow the previous one in a logical time sequence without gaps or overlaps.\n"
    "- Add the scene content after the time range.\n"
    "- The duration of each scene is between 15 and 60 seconds, except for those that you think are special.\n"
    "- End each scene with {record_delimiter} (except the last scene).\n"
    "\n"
    "3. Final Marker\n"
    "- After all scenes, add {completion_delimiter} to indicate the end of the task.\n"
    "\n"
    "4. Output Format\n"
    "- Return the segmented text as a list of scenes.\n"
    "- Output format Example:\n"
    "Scene 1{record_delimiter}\n"
    "Scene 2{record_delimiter}\n"
    "Scene 3{record_delimiter}\n"
    "Scene 4{completion_delimiter}\n"
    "\n"
    "- Output only the segmented text without additional explanations.\n"
    "######################\n"
    "Text: {input_text}\n";

const std::string kTooLittle =
    "Too few time ranges. Need at least 3 segments. The previous output has errors. Please verify and correct "
    "the following:\n"
    "\n"
    "1. Ensure each scene has a duration between 15 and 60 seconds.\n"
    "\n"
    "2. Verify that the scenes are divided correctly based on the content.\n"
    "\n"
    "3. Ensure each scene starts with a time mark.\n"
    "\n"
    "4. Ensure each scene contains detailed descriptions, dialogues, or events to form a coherent narrative unit.\n"
    "\n"
    "Please maintain the required format in your response.";

const std::string kTooShort =
    "Some scenes have been split with time ranges that are too short. Merge scenes that are too short to meet "
    "the minimum duration requirement. Please verify and correct the following:\n"
    "\n"
    "1. Ensure each scene has a duration between 15 and 60 seconds.\n"
    "\n"
    "2. Verify that the scenes are divided correctly based on the content.\n"
    "\n"
    "3. Ensure each scene starts with a time mark.\n"
    "\n"
    "4. Ensure each scene contains detailed descriptions, dialogues, or events to form a coherent narrative unit.\n"
    "\n"
    "5. Each scene should follow the previous one in a logical time sequence without gaps or overlaps.\n"
    "\n"
    "Please maintain the required format in your response.";

const std::string kTooLong =
    "Some scenes have been split with time ranges that are too long. Split scenes that exceed the maximum "
    "duration into smaller segments. Please verify and correct the following:\n"
    "\n"
    "1. The duration of each scene should ideally not exceed 60 seconds.\n"
    "\n"
    "2. Verify that the scenes are divided correctly based on the content.\n"
    "\n"
    "3. Ensure each scene starts with a time mark.\n"
    "\n"
    "4. Ensure each scene contains detailed descriptions, dialogues, or events to form a coherent narrative unit.\n"
    "\n"
    "5. Each scene should follow the previous one in a logical time sequence without gaps or overlaps.\n"
    "\n"
    "Please maintain the required format in your response.";

void replace_all(std::string& s, std::string_view from, std::string_view to) {
    for (std::size_t pos = 0; (pos = s.find(from, pos)) != std::string::npos; pos += to.size()) {
        s.replace(pos, from.size(), to);
    }
}

std::string time_mark(Seconds s) { return format_seconds_fixed(s, 2); }

SegmentationFault fault(FaultKind kind, std::string detail) { return {kind, std::move(detail)}; }

}  // namespace

const char* to_string(FaultKind kind) {
    switch (kind) {
        case FaultKind::TooFewSegments: return "too-few-segments";
        case FaultKind::SceneTooShort: return "scene-too-short";
        case FaultKind::SceneTooLong: return "scene-too-long";
        case FaultKind::GapOrOverlap: return "gap-or-overlap";
        case FaultKind::OutOfBounds: return "out-of-bounds";
        case FaultKind::Unparseable: return "unparseable";
    }
    return "unknown";
}

const std::string& segmentation_template() { return kTemplate; }

SegmentationPrompt build_segmentation_prompt(const Transcript& slice, const Delimiters& delimiters, Seconds origin) {
    if (slice.utterances.empty()) fail(ErrorKind::InvalidInput, "cannot build a segmentation prompt for an empty slice");
    if (delimiters.record.empty() || delimiters.completion.empty())
        fail(ErrorKind::InvalidInput, "segmentation delimiters must be non-empty");
    if (delimiters.record == delimiters.completion)
        fail(ErrorKind::InvalidInput, "record and completion delimiters must differ");

    std::string input;
    for (const auto& u : slice.utterances) {
        if (u.text.find(delimiters.record) != std::string::npos ||
            u.text.find(delimiters.completion) != std::string::npos) {
            fail(ErrorKind::InvalidInput,
                 fmt::format("transcript text at {} contains a segmentation delimiter", format_seconds(u.start)));
        }
        input += fmt::format("[{} -> {}] {}\n", time_mark(u.start - origin), time_mark(u.end - origin), u.text);
    }
    std::string text = kTemplate;
    replace_all(text, "{record_delimiter}", delimiters.record);
    replace_all(text, "{completion_delimiter}", delimiters.completion);
    // Substituted last so transcript text is never scanned for placeholders.
    replace_all(text, "{input_text}", input);
    return {std::move(text), delimiters.record, delimiters.completion};
}

std::variant<std::vector<RawScene>, SegmentationFault> parse_segmentation_response(std::string_view response,
                                                                                   const Delimiters& delimiters) {
    static const std::regex kRange(R"(\[\s*([^\]]*?)\s*-{1,2}>\s*([^\]]*?)\s*\])");

    std::string_view body = response;
    if (auto cut = body.find(delimiters.completion); cut != std::string_view::npos) body = body.substr(0, cut);

    std::vector<RawScene> scenes;
    std::size_t pos = 0;
    int block_no = 0;
    while (pos <= body.size()) {
        auto next = body.find(delimiters.record, pos);
        const std::string block = trim(body.substr(pos, next == std::string_view::npos ? std::string_view::npos : next - pos));
        pos = next == std::string_view::npos ? body.size() + 1 : next + delimiters.record.size();
        ++block_no;
        if (block.empty()) continue;

        std::smatch m;
        if (!std::regex_search(block, m, kRange))
            return fault(FaultKind::Unparseable, fmt::format("scene block {} has no time range", block_no));
        auto a = parse_timestamp(m[1].str());
        auto b = parse_timestamp(m[2].str());
        if (!a || !b)
            return fault(FaultKind::Unparseable, fmt::format("scene block {} has a malformed time range '{}'",
                                                             block_no, m[0].str()));
        scenes.push_back({*a, *b, trim(m.suffix().str())});
    }
    if (scenes.empty()) return fault(FaultKind::Unparseable, "response contains no scenes");
    return scenes;
}

std::string render_segmentation_response(const std::vector<RawScene>& scenes, const Delimiters& delimiters) {
    std::string out;
    for (std::size_t i = 0; i < scenes.size(); ++i) {
        out += fmt::format("[{} -> {}] {}", format_seconds(scenes[i].start), format_seconds(scenes[i].end),
                           scenes[i].text);
        out += i + 1 < scenes.size() ? delimiters.record + "\n" : delimiters.completion;
    }
    return out;
}

std::optional<SegmentationFault> check_time_ranges(const std::vector<RawScene>& scenes, Seconds chunk_duration,
                                                   const SegmenterConfig& cfg) {
    if (scenes.empty()) return fault(FaultKind::TooFewSegments, "no scenes");
    if (chunk_duration > cfg.count_rule_above && static_cast<int>(scenes.size()) < cfg.min_scene_count) {
        return fault(FaultKind::TooFewSegments,
                     fmt::format("{} scenes for a {} s chunk; need at least {}", scenes.size(),
                                 format_seconds(chunk_duration), cfg.min_scene_count));
    }
    for (std::size_t i = 0; i < scenes.size(); ++i) {
        if (scenes[i].start < Seconds{} || scenes[i].end > chunk_duration || scenes[i].start > chunk_duration ||
            scenes[i].end < Seconds{}) {
            return fault(FaultKind::OutOfBounds, fmt::format("scene {} [{}, {}] leaves [0, {}]", i + 1,
                                                             format_seconds(scenes[i].start),
                                                             format_seconds(scenes[i].end),
                                                             format_seconds(chunk_duration)));
        }
    }
    for (std::size_t i = 0; i < scenes.size(); ++i) {
        if (scenes[i].start >= scenes[i].end)
            return fault(FaultKind::GapOrOverlap, fmt::format("scene {} ends before it starts", i + 1));
        if (i > 0 && scenes[i].start < scenes[i - 1].end)
            return fault(FaultKind::GapOrOverlap, fmt::format("scene {} overlaps scene {}", i + 1, i));
    }
    for (std::size_t i = 0; i < scenes.size(); ++i) {
        const Seconds d = scenes[i].end - scenes[i].start;
        if (d < cfg.min_scene)
            return fault(FaultKind::SceneTooShort, fmt::format("scene {} lasts {} s", i + 1, format_seconds(d)));
        if (d > cfg.max_scene)
            return fault(FaultKind::SceneTooLong, fmt::format("scene {} lasts {} s", i + 1, format_seconds(d)));
    }
    return std::nullopt;
}

std::string choose_fix_prompt(const SegmentationFault& f, const std::string& base_prompt, const Delimiters& delimiters) {
    switch (f.kind) {
        case FaultKind::TooFewSegments: return kTooLittle;
        case FaultKind::SceneTooLong: return kTooLong;
        case FaultKind::SceneTooShort:
        case FaultKind::GapOrOverlap:
        case FaultKind::OutOfBounds: return kTooShort;
        case FaultKind::Unparseable: break;
    }
    return base_prompt +
           fmt::format("\nFormat reminder: the previous output could not be parsed. Start every scene with a time "
                       "mark in the format [start_time -> end_time], end each scene with {} (except the last scene), "
                       "and finish with {}.",
                       delimiters.record, delimiters.completion);
}

std::vector<RawScene> default_partition(const Transcript& slice, const ChunkRange& r, Seconds interval,
                                        Seconds min_tail) {
    std::vector<RawScene> out;
    for (Seconds s = r.start; s < r.end; s += interval) {
        const Seconds e = min(s + interval, r.end);
        if (!out.empty() && e - s < min_tail) {
            out.back().end = e;
            break;
        }
        out.push_back({s, e, {}});
    }
    for (auto& scene : out) scene.text = text_between(slice, scene.start, scene.end);
    return out;
}

namespace {

std::size_t conversation_tokens(const std::vector<Message>& messages) {
    std::size_t n = 0;
    for (const auto& m : messages) n += token_length(m.content);
    return n;
}

// messages = [prompt, (reply, repair)*]; drop the oldest (reply, repair) pairs,
// always keeping the latest round.
std::vector<Message> truncate_history(std::vector<Message> messages, std::size_t limit) {
    while (messages.size() > 3 && conversation_tokens(messages) > limit) {
        messages.erase(messages.begin() + 1, messages.begin() + 3);
    }
    return messages;
}

}  // namespace

SegmentationOutcome segment_chunk(const Transcript& slice, const ChunkRange& r, Provider& llm,
                                  const SegmenterConfig& cfg) {
    SegmentationOutcome out;
    if (slice.utterances.empty()) return out;

    const SegmentationPrompt base = build_segmentation_prompt(slice, cfg.delimiters, r.start);
    const Seconds chunk_duration = r.length();
    std::vector<Message> messages{{"user", base.text}};
    std::string current_prompt = base.text;
    int consecutive_faults = 0;

    for (;;) {
        ProviderRequest req;
        req.route = Route::Chat;
        req.model = out.state.model_tier == ModelTier::Base ? cfg.base_model : cfg.escalated_model;
        req.messages = truncate_history(messages, cfg.max_context_tokens);
        req.temperature = cfg.temperature;
        req.top_p = cfg.top_p;

        const ProviderResponse resp = llm.complete(req);
        ++out.calls;
        out.state.history.emplace_back(current_prompt, resp.content);

        std::optional<SegmentationFault> problem;
        auto parsed = parse_segmentation_response(resp.content, cfg.delimiters);
        if (auto* f = std::get_if<SegmentationFault>(&parsed)) {
            problem = *f;
        } else {
            auto& scenes = std::get<std::vector<RawScene>>(parsed);
            problem = check_time_ranges(scenes, chunk_duration, cfg);
            if (!problem) {
                for (auto& s : scenes) {
                    s.start += r.start;
                    s.end += r.start;
                }
                out.scenes = std::move(scenes);
                return out;
            }
        }

        out.faults.push_back(*problem);
        ++consecutive_faults;
        spdlog::debug("chunk {}: attempt {} fault {} ({})", r.index, out.state.attempt, to_string(problem->kind),
                      problem->detail);
        if (out.state.attempt >= cfg.max_retries) break;

        if (consecutive_faults >= cfg.escalate_after && out.state.model_tier == ModelTier::Base) {
            out.state.model_tier = ModelTier::Escalated;
            ++out.state.escalations;
        }
        current_prompt = choose_fix_prompt(*problem, base.text, cfg.delimiters);
        messages.push_back({"assistant", resp.content});
        messages.push_back({"user", current_prompt});
        ++out.state.attempt;
    }

    spdlog::warn("chunk {} [{}, {}]: segmentation exhausted {} attempts, using default partition", r.index,
                 format_seconds(r.start), format_seconds(r.end), out.calls);
    out.used_fallback = true;
    out.scenes = default_partition(slice, r, cfg.fallback_interval, cfg.min_scene);
    return out;
}

}  // namespace scenedex

#include "scenedex/ingest.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "scenedex/error.hpp"

namespace scenedex {

std::string trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return std::string(s);
}

void Transcript::validate() const {
    for (std::size_t i = 0; i < utterances.size(); ++i) {
        const auto& u = utterances[i];
        if (u.start < Seconds{}) fail(ErrorKind::InvalidInput, fmt::format("utterance {} starts before 0", i));
        if (!(u.start < u.end))
            fail(ErrorKind::InvalidInput, fmt::format("utterance {} has start >= end ({} >= {})", i,
                                                      format_seconds(u.start), format_seconds(u.end)));
        if (trim(u.text).empty()) fail(ErrorKind::InvalidInput, fmt::format("utterance {} has empty text", i));
        if (u.end > duration)
            fail(ErrorKind::InvalidInput, fmt::format("utterance {} ends at {} past the duration {}", i,
                                                      format_seconds(u.end), format_seconds(duration)));
        if (i > 0 && utterances[i - 1].end > u.start)
            fail(ErrorKind::InvalidInput, fmt::format("utterances {} and {} overlap or are out of order", i - 1, i));
    }
}

std::vector<ChunkRange> make_chunk_ranges(Seconds duration, Seconds chunk_len, Seconds overlap) {
    if (duration <= Seconds{}) fail(ErrorKind::InvalidInput, "duration must be positive");
    if (chunk_len <= Seconds{}) fail(ErrorKind::InvalidInput, "chunk length must be positive");
    if (overlap < Seconds{} || overlap >= chunk_len)
        fail(ErrorKind::InvalidInput, "overlap must satisfy 0 <= overlap < chunk length");

    const Seconds stride = chunk_len - overlap;
    std::vector<ChunkRange> out;
    for (int k = 1;; ++k) {
        const Seconds start = stride * (k - 1);
        const Seconds end = min(start + chunk_len, duration);
        if (!out.empty() && end - out.back().end < overlap) {
            out.back().end = duration;
            break;
        }
        out.push_back({k, start, end});
        if (end == duration) break;
    }
    return out;
}

Transcript slice_transcript(const Transcript& t, const ChunkRange& r) {
    Transcript out{t.video_id, t.duration, {}};
    for (const auto& u : t.utterances) {
        if (u.end <= r.start || u.start >= r.end) continue;
        out.utterances.push_back({max(u.start, r.start), min(u.end, r.end), u.text});
    }
    return out;
}

Transcript shift_transcript(const Transcript& t, Seconds offset, Seconds new_duration) {
    Transcript out{t.video_id, new_duration, t.utterances};
    for (auto& u : out.utterances) {
        u.start += offset;
        u.end += offset;
    }
    return out;
}

Transcript transcribe(const std::string& video_id, const std::string& media_ref, const ChunkRange& r,
                      Provider& asr, const std::string& model) {
    ProviderRequest req;
    req.route = Route::Asr;
    req.model = model;
    req.messages.push_back({"user", media_ref});
    req.media = MediaRef{media_ref, r.start, r.end};
    const ProviderResponse resp = asr.complete(req);
    if (!resp.utterances || !resp.utterances->is_array())
        fail(ErrorKind::Protocol, "ASR response carries no utterance list");

    Transcript t{video_id, r.length(), {}};
    for (const auto& item : *resp.utterances) {
        if (!item.is_object() || !item.contains("start_s") || !item.contains("end_s") || !item.contains("text"))
            fail(ErrorKind::Protocol, "ASR utterance is missing fields");
        t.utterances.push_back({Seconds::from_double(item["start_s"].get<double>()),
                                Seconds::from_double(item["end_s"].get<double>()),
                                trim(item["text"].get<std::string>())});
    }
    try {
        t.validate();
    } catch (const Error& e) {
        fail(ErrorKind::Protocol, std::string("ASR transcript rejected: ") + e.what());
    }
    return t;
}

std::vector<SilenceInterval> detect_silences(const Transcript& slice, const ChunkRange& r, Seconds min_gap) {
    std::vector<SilenceInterval> out;
    Seconds cursor = r.start;
    auto emit = [&](Seconds a, Seconds b) {
        if (b - a >= min_gap && a < b) out.push_back({a, b});
    };
    for (const auto& u : slice.utterances) {
        const Seconds s = max(u.start, r.start);
        const Seconds e = min(u.end, r.end);
        if (e <= cursor) continue;
        if (s > cursor) emit(cursor, s);
        cursor = max(cursor, e);
    }
    emit(cursor, r.end);
    return out;
}

Transcript join_chunk_transcripts(const std::string& video_id, Seconds duration,
                                  const std::vector<ChunkRange>& chunks,
                                  const std::vector<Transcript>& pieces) {
    if (chunks.size() != pieces.size()) fail(ErrorKind::InvalidInput, "chunk/transcript count mismatch");
    Transcript out{video_id, duration, {}};
    for (std::size_t k = 0; k < chunks.size(); ++k) {
        const Seconds own_start = k == 0 ? Seconds{} : midpoint(chunks[k].start, chunks[k - 1].end);
        const Seconds own_end = k + 1 == chunks.size() ? duration : midpoint(chunks[k + 1].start, chunks[k].end);
        for (const auto& u : pieces[k].utterances) {
            const Seconds mid = midpoint(u.start, u.end);
            if (mid < own_start || mid >= own_end) continue;
            TimedUtterance v = u;
            if (!out.utterances.empty() && out.utterances.back().end > v.start) v.start = out.utterances.back().end;
            v.end = min(v.end, duration);
            if (v.start < v.end) out.utterances.push_back(std::move(v));
        }
    }
    out.validate();
    return out;
}

Transcript parse_transcript(std::string_view contents, const std::string& video_id, std::optional<Seconds> duration) {
    Transcript t{video_id, Seconds{}, {}};
    std::optional<Seconds> header_duration;
    std::istringstream in{std::string(contents)};
    std::string line;
    int lineno = 0;
    auto parse_time = [&](const std::string& field) {
        const auto dot = field.find('.');
        if (dot != std::string::npos && field.size() - dot - 1 > 2)
            fail(ErrorKind::InvalidInput, fmt::format("line {}: more than 2 fraction digits in '{}'", lineno, field));
        auto v = parse_decimal_seconds(field);
        if (!v) fail(ErrorKind::InvalidInput, fmt::format("line {}: bad time '{}'", lineno, field));
        return *v;
    };
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;
        if (line.front() == '#') {
            const auto pos = line.find("duration_s=");
            if (pos != std::string::npos && !duration) {
                const std::string field = trim(line.substr(pos + 11));
                if (auto v = parse_decimal_seconds(field.substr(0, field.find(' ')))) header_duration = *v;
            }
            continue;
        }
        const auto t1 = line.find('\t');
        const auto t2 = t1 == std::string::npos ? std::string::npos : line.find('\t', t1 + 1);
        if (t2 == std::string::npos)
            fail(ErrorKind::InvalidInput, fmt::format("line {}: expected start<TAB>end<TAB>text", lineno));
        t.utterances.push_back({parse_time(line.substr(0, t1)), parse_time(line.substr(t1 + 1, t2 - t1 - 1)),
                                trim(line.substr(t2 + 1))});
    }
    if (duration) {
        t.duration = *duration;
    } else if (header_duration) {
        t.duration = *header_duration;
    } else {
        t.duration = t.utterances.empty() ? Seconds{} : t.utterances.back().end;
    }
    t.validate();
    return t;
}

Transcript read_transcript_file(const std::filesystem::path& path, const std::string& video_id,
                                std::optional<Seconds> duration) {
    std::ifstream probe(path);
    if (!probe) fail(ErrorKind::NotFound, "transcript not found: " + path.string());
    std::ostringstream ss;
    ss << probe.rdbuf();
    return parse_transcript(ss.str(), video_id, duration);
}

std::string format_transcript(const Transcript& t) {
    auto fmt_time = [](Seconds s) {
        std::string v = format_seconds_fixed(s, 2);
        while (v.back() == '0') v.pop_back();
        if (v.back() == '.') v.pop_back();
        return v;
    };
    std::string out = fmt::format("# video_id={} duration_s={}\n", t.video_id, fmt_time(t.duration));
    for (const auto& u : t.utterances) out += fmt::format("{}\t{}\t{}\n", fmt_time(u.start), fmt_time(u.end), u.text);
    return out;
}

std::string text_between(const Transcript& t, Seconds start, Seconds end) {
    std::string out;
    for (const auto& u : t.utterances) {
        const Seconds mid = midpoint(u.start, u.end);
        if (mid < start || mid >= end) continue;
        if (!out.empty()) out += ' ';
        out += u.text;
    }
    return out;
}

bool has_speech(const Transcript& t, Seconds start, Seconds end) {
    return std::any_of(t.utterances.begin(), t.utterances.end(), [&](const TimedUtterance& u) {
        const Seconds mid = midpoint(u.start, u.end);
        return mid >= start && mid < end;
    });
}

}  // namespace scenedex

#include "scenedex/offline_provider.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <regex>
#include <set>

#include <fmt/format.h>

#include "scenedex/error.hpp"
#include "scenedex/ingest.hpp"
#include "scenedex/kv_store.hpp"
#include "scenedex/retrieval.hpp"
#include "scenedex/segmenter.hpp"
#include "scenedex/tokenizer.hpp"

namespace scenedex {

namespace {

const std::set<std::string> kCommonCapitalized = {
    "A", "An", "And", "As", "At", "But", "By", "For", "From", "He", "Her", "His", "How", "I", "If", "In", "It",
    "Its", "Just", "Let", "Let's", "Now", "Of", "Oh", "Ok", "Okay", "On", "One", "Or", "Our", "She", "So", "That",
    "The", "Then", "There", "These", "They", "This", "To", "Um", "Uh", "We", "What", "When", "Where", "Which",
    "Why", "With", "Yeah", "Yes", "You", "Your", "Scene", "Text", "Source", "Output",
};

std::string between(const std::string& s, std::string_view open, std::string_view close) {
    auto a = s.find(open);
    if (a == std::string::npos) return {};
    a += open.size();
    auto b = s.find(close, a);
    return s.substr(a, b == std::string::npos ? std::string::npos : b - a);
}

std::string clip(std::string s, std::size_t n) {
    if (s.size() <= n) return s;
    auto cut = s.rfind(' ', n);
    s.resize(cut == std::string::npos ? n : cut);
    return s + " ...";
}

std::vector<std::string> sentences(const std::string& text) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : text) {
        cur += c;
        if (c == '.' || c == '!' || c == '?' || c == '\n') {
            if (auto t = trim(cur); !t.empty()) out.push_back(t);
            cur.clear();
        }
    }
    if (auto t = trim(cur); !t.empty()) out.push_back(t);
    return out;
}

// Scene grouping over "[a -> b] text" lines of a segmentation prompt.
std::string segment(const std::string& prompt) {
    static const std::regex rec_re(R"(End each scene with (.*?) \(except the last scene\))");
    static const std::regex done_re(R"(- After all scenes, add (.*?) to indicate)");
    static const std::regex line_re(R"(^\[([0-9.:]+) -> ([0-9.:]+)\] (.*)$)");
    std::smatch m;
    Delimiters d;
    if (std::regex_search(prompt, m, rec_re)) d.record = m[1];
    if (std::regex_search(prompt, m, done_re)) d.completion = m[1];

    std::vector<RawScene> lines;
    const std::string body = prompt.substr(std::min(prompt.size(), prompt.rfind("Text: ") + 6));
    std::size_t start = 0;
    while (start < body.size()) {
        auto nl = body.find('\n', start);
        std::string line = body.substr(start, nl == std::string::npos ? std::string::npos : nl - start);
        start = nl == std::string::npos ? body.size() : nl + 1;
        if (std::regex_match(line, m, line_re)) {
            auto a = parse_timestamp(m[1].str());
            auto b = parse_timestamp(m[2].str());
            if (a && b) lines.push_back({*a, *b, m[3]});
        }
    }
    if (lines.empty()) return "no input" + d.completion;

    const Seconds target = Seconds::whole(30);
    const Seconds floor = Seconds::whole(15);
    std::vector<RawScene> scenes;
    RawScene cur = lines.front();
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (cur.end - cur.start >= target && ends_sentence(cur.text)) {
            scenes.push_back(cur);
            cur = lines[i];
        } else {
            cur.end = lines[i].end;
            cur.text += " " + lines[i].text;
        }
    }
    if (!scenes.empty() && cur.end - cur.start < floor) {
        scenes.back().end = cur.end;
        scenes.back().text += " " + cur.text;
    } else {
        scenes.push_back(cur);
    }
    // Close the gaps so consecutive ranges touch.
    for (std::size_t i = 0; i + 1 < scenes.size(); ++i) scenes[i].end = scenes[i + 1].start;
    return render_segmentation_response(scenes, d);
}

std::vector<std::string> capitalized_phrases(const std::string& sentence) {
    std::vector<std::string> out;
    std::string phrase;
    std::string word;
    auto flush_phrase = [&] {
        if (!phrase.empty() && std::find(out.begin(), out.end(), phrase) == out.end()) out.push_back(phrase);
        phrase.clear();
    };
    auto flush_word = [&] {
        if (word.empty()) return;
        const bool cap = std::isupper(static_cast<unsigned char>(word[0])) && word.size() > 1 &&
                         !kCommonCapitalized.count(word);
        if (cap) {
            phrase += phrase.empty() ? word : " " + word;
        } else {
            flush_phrase();
        }
        word.clear();
    };
    for (unsigned char c : sentence) {
        if (std::isalnum(c) || c == '\'' || c == '-' || c >= 0x80) {
            word += static_cast<char>(c);
        } else {
            flush_word();
            if (c != ' ') flush_phrase();
        }
    }
    flush_word();
    flush_phrase();
    return out;
}

std::string extract(const std::string& prompt) {
    const std::string text = trim(between(prompt, "Text: ", "\n######################"));
    std::map<std::string, std::string> entities;  // name -> first sentence
    std::vector<std::string> order;
    std::set<std::pair<std::string, std::string>> seen_rel;
    std::vector<std::string> records;
    for (const auto& s : sentences(text)) {
        const auto names = capitalized_phrases(s);
        for (const auto& n : names) {
            if (entities.size() >= 8) break;
            if (entities.emplace(n, s).second) order.push_back(n);
        }
        for (std::size_t i = 0; i + 1 < names.size(); ++i) {
            if (!entities.count(names[i]) || !entities.count(names[i + 1]) || names[i] == names[i + 1]) continue;
            if (seen_rel.insert({names[i], names[i + 1]}).second) {
                records.push_back(fmt::format("(\"relationship\"<|>{}<|>{}<|>{}<|>co-mentioned)", names[i],
                                              names[i + 1], clip(s, 160)));
            }
        }
    }
    std::vector<std::string> out;
    for (const auto& n : order) {
        out.push_back(fmt::format("(\"entity\"<|>{}<|>concept<|>{}", n, clip(entities[n], 160)) + ")");
    }
    out.insert(out.end(), records.begin(), records.end());
    std::string reply;
    for (std::size_t i = 0; i < out.size(); ++i) reply += (i ? "##\n" : "") + out[i];
    return reply + "\n<|COMPLETE|>";
}

std::string keywords(const std::string& prompt) {
    const std::string q = trim(between(prompt, "Question: ", "\n"));
    return nlohmann::json(fallback_keywords(q)).dump();
}

std::string answer(const std::string& prompt) {
    const std::string evidence = between(prompt, "---Evidence---\n", "\n---Instructions---");
    std::size_t scenes = 0;
    for (std::size_t p = 0; (p = evidence.find("### Scene ", p)) != std::string::npos; ++p) ++scenes;
    if (scenes == 0) return "No supporting scenes were retrieved, so the question cannot be answered from the videos.";
    std::string transcript = between(evidence, "Transcript: ", "\n");
    return fmt::format("Drawing on {} retrieved scene(s): {}", scenes, clip(transcript, 400));
}

std::string judge_pair(const std::string& prompt) {
    const auto first = between(prompt, "Answer 1:\n", "\n\nAnswer 2:");
    const auto second = between(prompt, "Answer 2:\n", "\n\nReply with JSON");
    const std::string w = first.size() > second.size() ? "Answer 1" : first.size() < second.size() ? "Answer 2" : "Tie";
    nlohmann::json doc;
    for (const char* d : {"Comprehensiveness", "Empowerment", "Trustworthiness", "Depth", "Density", "Overall Winner"})
        doc[d] = {{"Winner", w}, {"Explanation", "offline judge prefers the longer answer"}};
    return doc.dump();
}

std::string caption(const ProviderRequest& r) {
    const std::string& p = r.messages.back().content;
    const std::string transcript = trim(between(p, "Transcript:\n", "\n\n"));
    if (transcript.empty() || transcript == "[SILENT]") {
        return fmt::format("A passage without speech; {} frame(s) sampled.", r.frames.size());
    }
    const auto s = sentences(transcript);
    std::string lead = s.empty() ? transcript : s.front();
    if (p.find("attention to the following keywords: ") != std::string::npos) {
        const std::string kw = between(p, "keywords: ", ". Mention");
        return fmt::format("Focused on {}: {}", kw, clip(transcript, 300));
    }
    return fmt::format("{} frame(s) show the speaker presenting. {}", r.frames.size(), clip(lead, 240));
}

ProviderResponse transcribe(const ProviderRequest& r) {
    if (!r.media) fail(ErrorKind::Protocol, "ASR request without media");
    const std::filesystem::path path = r.media->locator;
    if (path.extension() != ".tsv" || !std::filesystem::exists(path))
        fail(ErrorKind::Protocol, "offline ASR only reads transcript files (.tsv): " + r.media->locator);
    const Transcript t = read_transcript_file(path, "offline");
    const Transcript slice = slice_transcript(t, ChunkRange{1, r.media->start, r.media->end});
    auto utterances = nlohmann::json::array();
    for (const auto& u : slice.utterances) {
        utterances.push_back({{"start_s", (u.start - r.media->start).value()},
                              {"end_s", (u.end - r.media->start).value()},
                              {"text", u.text}});
    }
    return {"", std::nullopt, std::move(utterances)};
}

}  // namespace

std::vector<double> OfflineProvider::embed(std::string_view text) const {
    std::vector<double> v(static_cast<std::size_t>(dim_), 0.0);
    std::string word;
    auto flush = [&] {
        if (word.empty()) return;
        const std::string h = sha256_hex(word);
        const auto bucket = std::stoull(h.substr(0, 12), nullptr, 16) % static_cast<unsigned long long>(dim_);
        v[bucket] += (h[12] < '8') ? 1.0 : -1.0;
        word.clear();
    };
    for (unsigned char c : text) {
        if (std::isalnum(c) || c >= 0x80) word += static_cast<char>(std::tolower(c));
        else flush();
    }
    flush();
    double n = 0.0;
    for (double x : v) n += x * x;
    if (n == 0.0) {
        v[0] = 1.0;
        return v;
    }
    n = std::sqrt(n);
    for (double& x : v) x /= n;
    return v;
}

ProviderResponse OfflineProvider::complete(const ProviderRequest& r) {
    switch (r.route) {
        case Route::Asr: return transcribe(r);
        case Route::Embed: {
            const std::string& text = r.messages.empty() ? std::string{} : r.messages.back().content;
            return {"", embed(text), std::nullopt};
        }
        case Route::Caption: return ProviderResponse::text(caption(r));
        case Route::Chat: break;
    }
    const std::string& p = r.messages.front().content;
    if (p.find("segment the input text into distinct scenes") != std::string::npos) return ProviderResponse::text(segment(p));
    if (p.find("identify all entities") != std::string::npos) return ProviderResponse::text(extract(p));
    if (p.find("\"matches\"") != std::string::npos) return ProviderResponse::text(R"({"matches": []})");
    if (p.find("Description list:") != std::string::npos) {
        std::string joined;
        for (const auto& line : sentences(between(p, "Description list:\n", "\nOutput:"))) {
            joined += (joined.empty() ? "" : " ") + std::string(line.rfind("- ", 0) == 0 ? line.substr(2) : line);
        }
        return ProviderResponse::text(clip(joined, 600));
    }
    if (p.find("Extract the salient keywords") != std::string::npos) return ProviderResponse::text(keywords(p));
    if (p.find("---Evidence---") != std::string::npos) return ProviderResponse::text(answer(p));
    if (p.find("Reference answer:") != std::string::npos) {
        return ProviderResponse::text(
            R"({"Comprehensiveness": 3, "Empowerment": 3, "Trustworthiness": 3, "Depth": 3, "Density": 3})");
    }
    if (p.find("Answer 1:") != std::string::npos) return ProviderResponse::text(judge_pair(p));
    return ProviderResponse::text("OK");
}

}  // namespace scenedex

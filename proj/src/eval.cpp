#include "scenedex/eval.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "scenedex/error.hpp"
#include "scenedex/ingest.hpp"

namespace scenedex {

namespace {

const std::string kPairTemplate =
    "---Role---\n"
    "You are an expert evaluating two answers to the same question about a collection of videos on six criteria: "
    "Comprehensiveness, Empowerment, Trustworthiness, Depth, Density and Overall.\n"
    "\n"
    "---Criteria---\n"
    "- Comprehensiveness: how much detail does the answer provide to cover all aspects of the question?\n"
    "- Empowerment: how well does the answer help the reader understand and make informed judgments about the "
    "topic?\n"
    "- Trustworthiness: does the answer provide sufficient detail and align with common knowledge, so that it is "
    "credible?\n"
    "- Depth: does the answer go beyond surface facts into analysis and insight?\n"
    "- Density: does the answer convey information concisely, without redundancy?\n"
    "- Overall: which answer is better when all of the above are weighed together?\n"
    "\n"
    "For each criterion choose \"Answer 1\", \"Answer 2\" or \"Tie\" and explain why.\n"
    "\n"
    "Question: {query}\n"
    "\n"
    "Answer 1:\n{first}\n"
    "\n"
    "Answer 2:\n{second}\n"
    "\n"
    "Reply with JSON only:\n"
    "{\n"
    "  \"Comprehensiveness\": {\"Winner\": \"Answer 1|Answer 2|Tie\", \"Explanation\": \"...\"},\n"
    "  \"Empowerment\": {\"Winner\": \"...\", \"Explanation\": \"...\"},\n"
    "  \"Trustworthiness\": {\"Winner\": \"...\", \"Explanation\": \"...\"},\n"
    "  \"Depth\": {\"Winner\": \"...\", \"Explanation\": \"...\"},\n"
    "  \"Density\": {\"Winner\": \"...\", \"Explanation\": \"...\"},\n"
    "  \"Overall Winner\": {\"Winner\": \"...\", \"Explanation\": \"...\"}\n"
    "}\n";

const std::string kLikertTemplate =
    "---Role---\n"
    "You are an expert rating an answer to a question about a collection of videos. A reference answer is given "
    "as a baseline; it corresponds to a score of 3 on every criterion.\n"
    "\n"
    "Rate the answer from 1 (much worse than the reference) to 5 (much better) on: Comprehensiveness, "
    "Empowerment, Trustworthiness, Depth, Density.\n"
    "\n"
    "Question: {query}\n"
    "\n"
    "Reference answer:\n{reference}\n"
    "\n"
    "Answer to rate:\n{answer}\n"
    "\n"
    "Reply with JSON only, e.g. {\"Comprehensiveness\": 4, \"Empowerment\": 3, \"Trustworthiness\": 4, "
    "\"Depth\": 3, \"Density\": 5}\n";

const std::string kReask = "Your reply could not be parsed. Reply again with the JSON object only, covering every criterion.";

void replace_all(std::string& s, std::string_view from, std::string_view to) {
    for (std::size_t pos = 0; (pos = s.find(from, pos)) != std::string::npos; pos += to.size()) {
        s.replace(pos, from.size(), to);
    }
}

std::string squash(std::string_view s) {
    std::string out;
    for (unsigned char c : s) {
        if (std::isalnum(c)) out += static_cast<char>(std::tolower(c));
    }
    return out;
}

std::optional<Dimension> dimension_from(std::string_view key) {
    const std::string k = squash(key);
    if (k == "comprehensiveness") return Dimension::Comprehensiveness;
    if (k == "empowerment") return Dimension::Empowerment;
    if (k == "trustworthiness") return Dimension::Trustworthiness;
    if (k == "depth") return Dimension::Depth;
    if (k == "density") return Dimension::Density;
    if (k == "overall" || k == "overallwinner") return Dimension::Overall;
    return std::nullopt;
}

std::optional<nlohmann::json> json_object_in(std::string_view text) {
    const auto open = text.find('{');
    const auto close = text.rfind('}');
    if (open == std::string_view::npos || close == std::string_view::npos || close < open) return std::nullopt;
    auto doc = nlohmann::json::parse(text.substr(open, close - open + 1), nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) return std::nullopt;
    return doc;
}

enum class Slot { First, Second, Tie };

std::optional<Slot> slot_from(std::string_view raw) {
    const std::string w = squash(raw);
    if (w == "answer1" || w == "1" || w == "first") return Slot::First;
    if (w == "answer2" || w == "2" || w == "second") return Slot::Second;
    if (w == "tie" || w == "draw" || w == "equal") return Slot::Tie;
    return std::nullopt;
}

struct PositionalVerdict {
    Slot slot;
    std::string rationale;
};

std::optional<std::map<Dimension, PositionalVerdict>> parse_pair_reply(std::string_view reply) {
    auto doc = json_object_in(reply);
    if (!doc) return std::nullopt;
    std::map<Dimension, PositionalVerdict> out;
    for (const auto& [key, value] : doc->items()) {
        auto dim = dimension_from(key);
        if (!dim) continue;
        std::optional<Slot> slot;
        std::string rationale;
        if (value.is_object()) {
            for (const auto& [k, v] : value.items()) {
                if (squash(k) == "winner" && v.is_string()) slot = slot_from(v.get<std::string>());
                if (squash(k) == "explanation" && v.is_string()) rationale = v.get<std::string>();
            }
        } else if (value.is_string()) {
            slot = slot_from(value.get<std::string>());
        }
        if (!slot) return std::nullopt;
        out[*dim] = {*slot, rationale};
    }
    if (out.size() != kAllDimensions.size()) return std::nullopt;
    return out;
}

template <class Parsed, class Parser>
std::optional<Parsed> ask_with_reask(ProviderRequest req, Provider& judge, Parser parse) {
    for (int attempt = 0; attempt < 2; ++attempt) {
        const std::string reply = judge.complete(req).content;
        if (auto parsed = parse(reply)) return parsed;
        req.messages.push_back({"assistant", reply});
        req.messages.push_back({"user", kReask});
    }
    return std::nullopt;
}

}  // namespace

const char* to_string(Dimension d) {
    switch (d) {
        case Dimension::Comprehensiveness: return "Comprehensiveness";
        case Dimension::Empowerment: return "Empowerment";
        case Dimension::Trustworthiness: return "Trustworthiness";
        case Dimension::Depth: return "Depth";
        case Dimension::Density: return "Density";
        case Dimension::Overall: return "Overall Winner";
    }
    return "?";
}

Comparison judge_pair(const std::string& query, const std::string& answer_a, const std::string& answer_b,
                      Provider& judge, const EvalConfig& cfg) {
    if (answer_a == answer_b) fail(ErrorKind::InvalidInput, "judge_pair needs two distinct answers");
    Comparison c;
    std::map<Dimension, double> points;
    for (bool a_first : {true, false}) {
        std::string prompt = kPairTemplate;
        replace_all(prompt, "{query}", query);
        // Substitute the second slot first so answer text containing "{second}" is left alone.
        replace_all(prompt, "{second}", a_first ? answer_b : answer_a);
        replace_all(prompt, "{first}", a_first ? answer_a : answer_b);
        ProviderRequest req = ProviderRequest::chat(cfg.judge_model, std::move(prompt));
        req.temperature = cfg.temperature;
        req.top_p = cfg.top_p;
        auto parsed = ask_with_reask<std::map<Dimension, PositionalVerdict>>(req, judge, parse_pair_reply);
        if (!parsed) {
            spdlog::warn("judge reply unparseable after one re-ask; comparison excluded");
            c.valid = false;
            c.verdicts.clear();
            c.share_a.clear();
            return c;
        }
        for (const auto& [dim, pv] : *parsed) {
            Winner w = Winner::Tie;
            if (pv.slot == Slot::First) w = a_first ? Winner::A : Winner::B;
            if (pv.slot == Slot::Second) w = a_first ? Winner::B : Winner::A;
            c.verdicts.push_back({dim, w, a_first, pv.rationale});
            points[dim] += w == Winner::A ? 1.0 : w == Winner::Tie ? 0.5 : 0.0;
        }
    }
    for (auto dim : kAllDimensions) c.share_a[dim] = points[dim] / 2.0;
    c.valid = true;
    return c;
}

LikertResult likert_score(const std::string& query, const std::string& answer, const std::string& reference_answer,
                          Provider& judge, const EvalConfig& cfg) {
    std::string prompt = kLikertTemplate;
    replace_all(prompt, "{query}", query);
    replace_all(prompt, "{answer}", answer);
    replace_all(prompt, "{reference}", reference_answer);
    ProviderRequest req = ProviderRequest::chat(cfg.judge_model, std::move(prompt));
    req.temperature = cfg.temperature;
    req.top_p = cfg.top_p;

    auto parse = [](std::string_view reply) -> std::optional<LikertResult> {
        auto doc = json_object_in(reply);
        if (!doc) return std::nullopt;
        LikertResult r;
        for (const auto& [key, value] : doc->items()) {
            auto dim = dimension_from(key);
            if (!dim || *dim == Dimension::Overall) continue;
            const nlohmann::json* v = &value;
            if (value.is_object() && value.contains("score")) v = &value["score"];
            double raw = 0.0;
            if (v->is_number()) {
                raw = v->get<double>();
            } else if (v->is_string()) {
                auto parsed = parse_decimal_seconds(trim(v->get<std::string>()));
                if (!parsed) return std::nullopt;
                raw = parsed->value();
            } else {
                return std::nullopt;
            }
            if (!std::isfinite(raw)) return std::nullopt;
            long score = std::lround(raw);
            if (score < 1 || score > 5) {
                spdlog::warn("Likert score {} for {} clamped to [1, 5]", raw, to_string(*dim));
                score = std::clamp(score, 1L, 5L);
                ++r.clamped;
            }
            r.scores[*dim] = static_cast<int>(score);
        }
        if (r.scores.size() != kLikertDimensions.size()) return std::nullopt;
        r.valid = true;
        return r;
    };
    if (auto r = ask_with_reask<LikertResult>(req, judge, parse)) return *r;
    spdlog::warn("Likert reply unusable after one re-ask; rating marked invalid");
    return {};
}

WinRateTable aggregate(const std::vector<Comparison>& comparisons, bool per_domain, const std::string& system_a,
                       const std::string& system_b) {
    WinRateTable t;
    t.system_a = system_a;
    t.system_b = system_b;
    auto add = [&](const std::string& group, const Comparison& c) {
        if (std::find(t.groups.begin(), t.groups.end(), group) == t.groups.end()) t.groups.push_back(group);
        for (auto dim : kAllDimensions) {
            DimensionTally& cell = t.cells[group][dim];
            const double share = c.share_a.at(dim);
            ++cell.comparisons;
            cell.a_points += share;
            if (share > 0.5) ++cell.a_wins;
            else if (share < 0.5) ++cell.b_wins;
            else ++cell.ties;
        }
    };
    for (const auto& c : comparisons) {
        if (!c.valid) {
            ++t.excluded;
            continue;
        }
        if (per_domain) add(c.domain.empty() ? std::string("default") : c.domain, c);
    }
    for (const auto& c : comparisons) {
        if (c.valid) add("All", c);
    }
    if (!t.cells.count("All")) fail(ErrorKind::EmptyTable, "no valid comparisons to aggregate");
    return t;
}

nlohmann::json WinRateTable::to_json() const {
    nlohmann::json doc{{"system_a", system_a}, {"system_b", system_b}, {"excluded", excluded}};
    auto groups_doc = nlohmann::json::object();
    for (const auto& g : groups) {
        auto dims = nlohmann::json::object();
        for (auto dim : kAllDimensions) {
            const auto& cell = cells.at(g).at(dim);
            dims[to_string(dim)] = {{system_a, cell.pct_a()},
                                    {system_b, cell.pct_b()},
                                    {"comparisons", cell.comparisons},
                                    {"a_wins", cell.a_wins},
                                    {"b_wins", cell.b_wins},
                                    {"ties", cell.ties}};
        }
        groups_doc[g] = std::move(dims);
    }
    doc["groups"] = std::move(groups_doc);
    doc["group_order"] = groups;
    return doc;
}

std::string WinRateTable::to_text() const {
    std::size_t label_w = std::string_view("Overall Winner").size();
    label_w = std::max({label_w, system_a.size() + 2, system_b.size() + 2});
    std::string out = fmt::format("{:<{}}", "", label_w + 2);
    for (const auto& g : groups) out += fmt::format(" | {:>9}", g.substr(0, 9));
    out += "\n";
    for (auto dim : kAllDimensions) {
        out += fmt::format("{:<{}}\n", to_string(dim), label_w + 2);
        for (bool a : {true, false}) {
            out += fmt::format("  {:<{}}", a ? system_a : system_b, label_w);
            for (const auto& g : groups) {
                const auto& cell = cells.at(g).at(dim);
                out += fmt::format(" | {:>8.1f}%", a ? cell.pct_a() : cell.pct_b());
            }
            out += "\n";
        }
        out += fmt::format("  {:<{}}", "ties", label_w);
        for (const auto& g : groups) out += fmt::format(" | {:>9}", cells.at(g).at(dim).ties);
        out += "\n";
    }
    if (excluded) out += fmt::format("excluded comparisons: {}\n", excluded);
    return out;
}

std::vector<AnswerRecord> parse_answer_lines(std::string_view text) {
    std::vector<AnswerRecord> out;
    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start <= text.size()) {
        auto nl = text.find('\n', start);
        const std::string line = trim(text.substr(start, nl == std::string_view::npos ? nl : nl - start));
        ++line_no;
        start = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        if (line.empty()) continue;
        auto doc = nlohmann::json::parse(line, nullptr, false);
        if (doc.is_discarded() || !doc.is_object())
            fail(ErrorKind::InvalidInput, fmt::format("answers line {}: not a JSON object", line_no));
        try {
            AnswerRecord r;
            r.query_id = doc.at("query_id").is_string() ? doc.at("query_id").get<std::string>()
                                                        : doc.at("query_id").dump();
            r.system = doc.at("system").get<std::string>();
            r.answer = doc.at("answer").get<std::string>();
            r.query = doc.value("query", std::string{});
            r.domain = doc.value("domain", std::string{});
            out.push_back(std::move(r));
        } catch (const nlohmann::json::exception& e) {
            fail(ErrorKind::InvalidInput, fmt::format("answers line {}: {}", line_no, e.what()));
        }
    }
    return out;
}

}  // namespace scenedex

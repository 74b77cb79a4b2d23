#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "scenedex/provider.hpp"

namespace scenedex {

enum class Dimension { Comprehensiveness, Empowerment, Trustworthiness, Depth, Density, Overall };

inline constexpr std::array<Dimension, 6> kAllDimensions = {
    Dimension::Comprehensiveness, Dimension::Empowerment, Dimension::Trustworthiness,
    Dimension::Depth,             Dimension::Density,     Dimension::Overall};
inline constexpr std::array<Dimension, 5> kLikertDimensions = {Dimension::Comprehensiveness, Dimension::Empowerment,
                                                               Dimension::Trustworthiness, Dimension::Depth,
                                                               Dimension::Density};

/// Label used in prompts and JSON, e.g. "Comprehensiveness", "Overall Winner".
const char* to_string(Dimension d);

enum class Winner { A, B, Tie };

struct JudgeVerdict {
    Dimension dimension;
    Winner winner;       // in system terms, after undoing the presentation order
    bool a_first;        // presentation order of this call
    std::string rationale;
};

struct EvalConfig {
    std::string judge_model = "gpt-4o-mini";
    double temperature = 0.7;
    double top_p = 0.95;
};

struct Comparison {
    std::string query_id;
    std::string domain;
    bool valid = false;
    std::vector<JudgeVerdict> verdicts;       // both orders
    std::map<Dimension, double> share_a;      // A's averaged points in [0, 1]
};

/// Judges the two answers twice, once in each order. An unparseable reply is
/// re-asked once; a second failure marks the comparison invalid.
Comparison judge_pair(const std::string& query, const std::string& answer_a, const std::string& answer_b,
                      Provider& judge, const EvalConfig& cfg);

struct LikertResult {
    bool valid = false;
    std::map<Dimension, int> scores;
    std::size_t clamped = 0;
};

/// 1..5 per dimension for `answer`, with `reference_answer` as the anchor.
LikertResult likert_score(const std::string& query, const std::string& answer, const std::string& reference_answer,
                          Provider& judge, const EvalConfig& cfg);

struct DimensionTally {
    std::size_t comparisons = 0;
    std::size_t a_wins = 0;
    std::size_t b_wins = 0;
    std::size_t ties = 0;
    double a_points = 0.0;

    double pct_a() const { return comparisons ? 100.0 * a_points / static_cast<double>(comparisons) : 0.0; }
    double pct_b() const { return comparisons ? 100.0 - pct_a() : 0.0; }
};

struct WinRateTable {
    std::string system_a;
    std::string system_b;
    std::vector<std::string> groups;  // domains in first-seen order, then "All"
    std::map<std::string, std::map<Dimension, DimensionTally>> cells;
    std::size_t excluded = 0;

    nlohmann::json to_json() const;
    std::string to_text() const;
};

/// Win rates over valid comparisons; ties count half for each side. Per-domain
/// columns are added when `per_domain`; the "All" column is always present.
/// No valid comparison -> Error{EmptyTable}.
WinRateTable aggregate(const std::vector<Comparison>& comparisons, bool per_domain, const std::string& system_a = "A",
                       const std::string& system_b = "B");

struct AnswerRecord {
    std::string query_id;
    std::string system;
    std::string answer;
    std::string query;
    std::string domain;
};

/// JSON lines of {query_id, system, answer[, query, domain]}.
std::vector<AnswerRecord> parse_answer_lines(std::string_view text);

}  // namespace scenedex

#include "scenedex/time.hpp"

#include <cctype>
#include <cmath>
#include <vector>

#include <fmt/format.h>

namespace scenedex {

Seconds Seconds::from_double(double s) {
    return Seconds{static_cast<std::int64_t>(std::llround(s * 1e6))};
}

std::string format_seconds(Seconds s) {
    std::int64_t us = s.micros();
    std::string sign;
    if (us < 0) {
        sign = "-";
        us = -us;
    }
    const std::int64_t whole = us / 1'000'000;
    std::int64_t frac = us % 1'000'000;
    if (frac == 0) return fmt::format("{}{}", sign, whole);
    std::string digits = fmt::format("{:06d}", frac);
    while (!digits.empty() && digits.back() == '0') digits.pop_back();
    return fmt::format("{}{}.{}", sign, whole, digits);
}

std::string format_seconds_fixed(Seconds s, int digits) {
    std::int64_t us = s.micros();
    const bool neg = us < 0;
    if (neg) us = -us;
    std::int64_t scale = 1;
    for (int i = digits; i < 6; ++i) scale *= 10;
    const std::int64_t units = (us + scale / 2) / scale;
    std::int64_t denom = 1;
    for (int i = 0; i < digits; ++i) denom *= 10;
    const std::string body = digits == 0
        ? fmt::format("{}", units)
        : fmt::format("{}.{:0{}d}", units / denom, units % denom, digits);
    return neg ? "-" + body : body;
}

std::optional<Seconds> parse_decimal_seconds(std::string_view text) {
    if (text.empty()) return std::nullopt;
    std::int64_t whole = 0;
    std::size_t i = 0;
    bool any_digit = false;
    for (; i < text.size() && std::isdigit(static_cast<unsigned char>(text[i])); ++i) {
        whole = whole * 10 + (text[i] - '0');
        if (whole > 1'000'000'000) return std::nullopt;
        any_digit = true;
    }
    std::int64_t frac = 0;
    int frac_digits = 0;
    bool round_up = false;
    if (i < text.size() && text[i] == '.') {
        ++i;
        for (; i < text.size() && std::isdigit(static_cast<unsigned char>(text[i])); ++i) {
            any_digit = true;
            if (frac_digits < 6) {
                frac = frac * 10 + (text[i] - '0');
                ++frac_digits;
            } else if (frac_digits == 6) {
                round_up = text[i] >= '5';
                ++frac_digits;
            }
        }
    }
    if (!any_digit || i != text.size()) return std::nullopt;
    for (int d = std::min(frac_digits, 6); d < 6; ++d) frac *= 10;
    return Seconds::from_micros(whole * 1'000'000 + frac + (round_up ? 1 : 0));
}

std::optional<Seconds> parse_timestamp(std::string_view text) {
    while (!text.empty() && std::isspace(static_cast<unsigned char>(text.front()))) text.remove_prefix(1);
    while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back()))) text.remove_suffix(1);
    if (!text.empty() && (text.back() == 's' || text.back() == 'S')) text.remove_suffix(1);
    if (text.empty()) return std::nullopt;

    std::vector<std::string_view> parts;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= text.size(); ++i) {
        if (i == text.size() || text[i] == ':') {
            parts.push_back(text.substr(start, i - start));
            start = i + 1;
        }
    }
    if (parts.size() > 3) return std::nullopt;

    // Every field but the last must be a plain integer; minutes and seconds
    // fields of a clock form must be below 60.
    std::int64_t total_us = 0;
    for (std::size_t p = 0; p + 1 < parts.size(); ++p) {
        auto field = parse_decimal_seconds(parts[p]);
        if (!field || field->micros() % 1'000'000 != 0) return std::nullopt;
        if (parts[p].find('.') != std::string_view::npos) return std::nullopt;
        const std::int64_t v = field->micros() / 1'000'000;
        if (p > 0 && v >= 60) return std::nullopt;
        total_us = total_us * 60 + v * 1'000'000;
    }
    auto last = parse_decimal_seconds(parts.back());
    if (!last) return std::nullopt;
    if (parts.size() > 1) {
        if (last->micros() >= 60'000'000) return std::nullopt;
        total_us *= 60;
    }
    return Seconds::from_micros(total_us + last->micros());
}

}  // namespace scenedex

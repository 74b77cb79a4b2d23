#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace scenedex {

/// A point or span on the video timeline, stored as whole microseconds.
///
/// Integer storage keeps interval algebra exact: midpoints of inputs with up
/// to five fraction digits are representable, and threshold comparisons such
/// as `gap <= epsilon` never suffer from binary rounding.
class Seconds {
public:
    constexpr Seconds() = default;

    static constexpr Seconds from_micros(std::int64_t us) { return Seconds{us}; }
    static Seconds from_double(double s);
    static constexpr Seconds whole(std::int64_t s) { return Seconds{s * 1'000'000}; }

    constexpr std::int64_t micros() const { return us_; }
    constexpr double value() const { return static_cast<double>(us_) / 1e6; }

    constexpr Seconds operator+(Seconds o) const { return Seconds{us_ + o.us_}; }
    constexpr Seconds operator-(Seconds o) const { return Seconds{us_ - o.us_}; }
    constexpr Seconds operator*(std::int64_t k) const { return Seconds{us_ * k}; }
    constexpr Seconds& operator+=(Seconds o) { us_ += o.us_; return *this; }
    constexpr Seconds& operator-=(Seconds o) { us_ -= o.us_; return *this; }

    constexpr auto operator<=>(const Seconds&) const = default;

private:
    constexpr explicit Seconds(std::int64_t us) : us_(us) {}
    std::int64_t us_ = 0;
};

/// Exact midpoint; rounds toward negative infinity on an odd microsecond sum.
constexpr Seconds midpoint(Seconds a, Seconds b) {
    const std::int64_t sum = a.micros() + b.micros();
    return Seconds::from_micros(sum >= 0 ? sum / 2 : -((-sum + 1) / 2));
}

constexpr Seconds min(Seconds a, Seconds b) { return a < b ? a : b; }
constexpr Seconds max(Seconds a, Seconds b) { return a < b ? b : a; }

/// Shortest decimal rendering: "0", "23.96", "291.5".
std::string format_seconds(Seconds s);

/// Fixed rendering with exactly `digits` fraction digits (rounded half away from zero).
std::string format_seconds_fixed(Seconds s, int digits);

/// Parses "12", "12.5", "1:06", "0:01:06.25" (and an optional trailing 's').
/// Decimal digits beyond microseconds are rounded. Returns nullopt on any
/// malformed input.
std::optional<Seconds> parse_timestamp(std::string_view text);

/// Parses a plain non-negative decimal number of seconds without going through
/// binary floating point.
std::optional<Seconds> parse_decimal_seconds(std::string_view text);

}  // namespace scenedex

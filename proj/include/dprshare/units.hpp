#pragma once

// Unit-safe scalar types used throughout the model.
//
// Durations are integer picoseconds so that sums of slice components are
// associative and the simulator can reproduce closed-form values exactly.
// Sizes are integer bytes; rates and frequencies are doubles.

#include <cmath>
#include <compare>
#include <cstdint>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace dprshare {

class Duration {
public:
    constexpr Duration() = default;

    static constexpr Duration from_ps(std::int64_t ps) { return Duration(ps); }
    static Duration from_seconds(double s) {
        if (!std::isfinite(s)) throw std::domain_error("non-finite duration");
        return Duration(static_cast<std::int64_t>(std::llround(s * 1e12)));
    }
    static Duration from_ms(double ms) { return from_seconds(ms * 1e-3); }
    static Duration from_us(double us) { return from_seconds(us * 1e-6); }
    static constexpr Duration zero() { return Duration(0); }
    static constexpr Duration max() { return Duration(std::numeric_limits<std::int64_t>::max()); }

    constexpr std::int64_t ps() const { return ps_; }
    double seconds() const { return static_cast<double>(ps_) * 1e-12; }
    double ms() const { return static_cast<double>(ps_) * 1e-9; }
    double us() const { return static_cast<double>(ps_) * 1e-6; }

    constexpr Duration& operator+=(Duration o) { ps_ += o.ps_; return *this; }
    constexpr Duration& operator-=(Duration o) { ps_ -= o.ps_; return *this; }
    friend constexpr Duration operator+(Duration a, Duration b) { return Duration(a.ps_ + b.ps_); }
    friend constexpr Duration operator-(Duration a, Duration b) { return Duration(a.ps_ - b.ps_); }
    friend constexpr Duration operator-(Duration a) { return Duration(-a.ps_); }
    friend constexpr Duration operator*(Duration a, std::int64_t k) { return Duration(a.ps_ * k); }
    friend constexpr Duration operator*(std::int64_t k, Duration a) { return Duration(a.ps_ * k); }
    friend constexpr auto operator<=>(Duration, Duration) = default;

private:
    constexpr explicit Duration(std::int64_t ps) : ps_(ps) {}
    std::int64_t ps_ = 0;
};

inline std::ostream& operator<<(std::ostream& os, Duration d) { return os << d.ms() << " ms"; }

struct Bytes {
    std::int64_t value = 0;
    friend constexpr Bytes operator+(Bytes a, Bytes b) { return {a.value + b.value}; }
    friend constexpr Bytes operator-(Bytes a, Bytes b) { return {a.value - b.value}; }
    friend constexpr auto operator<=>(Bytes, Bytes) = default;
};

struct Frequency {
    double hz = 0.0;
    static constexpr Frequency mhz(double v) { return {v * 1e6}; }
    friend constexpr auto operator<=>(Frequency, Frequency) = default;
};

struct ByteRate {
    double bytes_per_second = 0.0;
    static constexpr ByteRate mb_per_s(double v) { return {v * 1e6}; }
    static constexpr ByteRate gb_per_s(double v) { return {v * 1e9}; }
    friend constexpr ByteRate operator+(ByteRate a, ByteRate b) {
        return {a.bytes_per_second + b.bytes_per_second};
    }
    friend constexpr ByteRate operator*(ByteRate a, double k) { return {a.bytes_per_second * k}; }
    friend constexpr auto operator<=>(ByteRate, ByteRate) = default;
};

// Time to move `size` at `rate`.
inline Duration transfer_time(Bytes size, ByteRate rate) {
    if (rate.bytes_per_second <= 0.0) throw std::domain_error("transfer rate must be positive");
    return Duration::from_seconds(static_cast<double>(size.value) / rate.bytes_per_second);
}

// Time to clock `cycles` at `clock`.
inline Duration cycle_time(double cycles, Frequency clock) {
    if (clock.hz <= 0.0) throw std::domain_error("clock must be positive");
    return Duration::from_seconds(cycles / clock.hz);
}

}  // namespace dprshare

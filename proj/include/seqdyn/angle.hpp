#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>

#include "seqdyn/util.hpp"

namespace seqdyn::rays {

/// External angle in turns, kept as an exact rational p/q in [0,1) whenever
/// possible so that pushforwards theta -> D * theta (mod 1) stay exact at
/// arbitrary composition degree. Non-rational inputs fall back to double
/// arithmetic (adequate for shallow pushforwards).
class Angle {
public:
    Angle() = default;

    static Angle rational(std::uint64_t num, std::uint64_t den) {
        if (den == 0) throw std::invalid_argument("Angle: zero denominator");
        num %= den;
        const std::uint64_t g = std::gcd(num == 0 ? den : num, den);
        Angle a;
        a.num_ = num / g;
        a.den_ = den / g;
        a.value_ = static_cast<double>(a.num_) / static_cast<double>(a.den_);
        return a;
    }

    static Angle from_turns(double turns) {
        turns -= std::floor(turns);
        Angle a;
        a.value_ = turns;
        a.den_ = 0;
        return a;
    }

    // "p/q" or a decimal; decimals become exact rationals over a power of ten.
    static Angle parse(const std::string& s) {
        const auto slash = s.find('/');
        if (slash != std::string::npos) {
            const std::uint64_t p = std::stoull(s.substr(0, slash));
            const std::uint64_t q = std::stoull(s.substr(slash + 1));
            return rational(p, q);
        }
        const auto dot = s.find('.');
        if (dot != std::string::npos && s.size() - dot - 1 <= 15) {
            std::uint64_t den = 1;
            for (std::size_t i = dot + 1; i < s.size(); ++i) den *= 10;
            const std::string digits = s.substr(0, dot) + s.substr(dot + 1);
            return rational(std::stoull(digits.empty() ? "0" : digits), den);
        }
        return rational(std::stoull(s), 1);
    }

    bool exact() const { return den_ != 0; }
    double turns() const { return value_; }
    std::uint64_t num() const { return num_; }
    std::uint64_t den() const { return den_; }

    /// D * theta mod 1 for D given as (exact residue mod den, floating value).
    Angle pushforward(std::uint64_t d_mod_den, double d_value) const {
        if (exact()) {
            const auto prod = static_cast<unsigned __int128>(num_) * d_mod_den;
            return rational(static_cast<std::uint64_t>(prod % den_), den_);
        }
        return from_turns(
            static_cast<double>(std::fmod(static_cast<long double>(value_) *
                                              static_cast<long double>(d_value),
                                          1.0L)));
    }

    bool operator==(const Angle& o) const {
        if (exact() && o.exact()) return num_ == o.num_ && den_ == o.den_;
        return value_ == o.value_;
    }

    std::string str() const {
        if (exact()) return std::to_string(num_) + "/" + std::to_string(den_);
        return std::to_string(value_);
    }

private:
    double value_ = 0.0;
    std::uint64_t num_ = 0;
    std::uint64_t den_ = 1;
};

} // namespace seqdyn::rays

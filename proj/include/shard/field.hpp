#pragma once

#include <bit>
#include <cstdint>
#include <string>

#include "shard/common.hpp"

namespace shard {

// 2^61 - 1, a Mersenne prime. Keeps every intermediate product inside 128
// bits while leaving room for values much larger than any realistic gradient
// coordinate. Small primes (13, 5, ...) are accepted too, which is what the
// exhaustive privacy tests run on.
inline constexpr std::uint64_t kDefaultModulus = (std::uint64_t{1} << 61) - 1;

// Moduli must stay below 2^62 so that a+b never overflows a 64-bit word.
inline constexpr std::uint64_t kMaxModulus = std::uint64_t{1} << 62;

namespace detail {

inline std::uint64_t mul_mod(std::uint64_t a, std::uint64_t b, std::uint64_t p) {
    const unsigned __int128 prod = static_cast<unsigned __int128>(a) * b;
    if (p == kDefaultModulus) {
        // 2^61 = 1 mod p, so fold the 61-bit limbs instead of dividing.
        const std::uint64_t lo = static_cast<std::uint64_t>(prod) & kDefaultModulus;
        const std::uint64_t mid = static_cast<std::uint64_t>(prod >> 61) & kDefaultModulus;
        const std::uint64_t hi = static_cast<std::uint64_t>(prod >> 122);
        std::uint64_t r = lo + mid + hi;
        r = (r & kDefaultModulus) + (r >> 61);
        if (r >= kDefaultModulus) r -= kDefaultModulus;
        return r;
    }
    return static_cast<std::uint64_t>(prod % p);
}

inline std::uint64_t pow_mod(std::uint64_t base, std::uint64_t exp, std::uint64_t p) {
    std::uint64_t acc = 1 % p;
    std::uint64_t sq = base % p;
    while (exp != 0) {
        if (exp & 1) acc = mul_mod(acc, sq, p);
        sq = mul_mod(sq, sq, p);
        exp >>= 1;
    }
    return acc;
}

}  // namespace detail

// Deterministic Miller-Rabin; this witness set is exact for all 64-bit inputs.
inline bool is_prime(std::uint64_t n) {
    if (n < 2) return false;
    for (std::uint64_t q : {2ull, 3ull, 5ull, 7ull, 11ull, 13ull, 17ull, 19ull, 23ull, 29ull, 31ull, 37ull}) {
        if (n % q == 0) return n == q;
    }
    std::uint64_t d = n - 1;
    int r = 0;
    while ((d & 1) == 0) {
        d >>= 1;
        ++r;
    }
    for (std::uint64_t a : {2ull, 3ull, 5ull, 7ull, 11ull, 13ull, 17ull, 19ull, 23ull, 29ull, 31ull, 37ull}) {
        std::uint64_t x = detail::pow_mod(a, d, n);
        if (x == 1 || x == n - 1) continue;
        bool witness = true;
        for (int i = 1; i < r; ++i) {
            x = detail::mul_mod(x, x, n);
            if (x == n - 1) {
                witness = false;
                break;
            }
        }
        if (witness) return false;
    }
    return true;
}

// An element of F_p in canonical (always reduced) form. Carries its modulus
// so cross-field mixups surface as ConfigError instead of silent garbage.
class FieldElement {
public:
    FieldElement() : value_(0), modulus_(kDefaultModulus) {}
    FieldElement(std::uint64_t value, std::uint64_t modulus)
        : value_(value % modulus), modulus_(modulus) {}

    std::uint64_t value() const { return value_; }
    std::uint64_t modulus() const { return modulus_; }

    friend FieldElement operator+(FieldElement a, FieldElement b) {
        check_same(a, b);
        std::uint64_t s = a.value_ + b.value_;
        if (s >= a.modulus_) s -= a.modulus_;
        return raw(s, a.modulus_);
    }

    friend FieldElement operator-(FieldElement a, FieldElement b) {
        check_same(a, b);
        std::uint64_t s = a.value_ >= b.value_ ? a.value_ - b.value_ : a.value_ + a.modulus_ - b.value_;
        return raw(s, a.modulus_);
    }

    FieldElement operator-() const { return raw(value_ == 0 ? 0 : modulus_ - value_, modulus_); }

    friend FieldElement operator*(FieldElement a, FieldElement b) {
        check_same(a, b);
        return raw(detail::mul_mod(a.value_, b.value_, a.modulus_), a.modulus_);
    }

    FieldElement& operator+=(FieldElement o) { return *this = *this + o; }
    FieldElement& operator-=(FieldElement o) { return *this = *this - o; }
    FieldElement& operator*=(FieldElement o) { return *this = *this * o; }

    FieldElement pow(std::uint64_t e) const { return raw(detail::pow_mod(value_, e, modulus_), modulus_); }

    // Multiplicative inverse; p is prime so a^(p-2) works everywhere but 0.
    FieldElement inv() const {
        if (value_ == 0) throw DomainError("field: inverse of zero");
        return pow(modulus_ - 2);
    }

    friend bool operator==(FieldElement a, FieldElement b) {
        return a.value_ == b.value_ && a.modulus_ == b.modulus_;
    }
    friend bool operator!=(FieldElement a, FieldElement b) { return !(a == b); }

private:
    static FieldElement raw(std::uint64_t v, std::uint64_t p) {
        FieldElement e;
        e.value_ = v;
        e.modulus_ = p;
        return e;
    }

    static void check_same(FieldElement a, FieldElement b) {
        if (a.modulus_ != b.modulus_) {
            throw ConfigError("field: operands belong to different moduli (" +
                              std::to_string(a.modulus_) + " vs " + std::to_string(b.modulus_) + ")");
        }
    }

    std::uint64_t value_;
    std::uint64_t modulus_;
};

// Field context: validates the modulus once and mints elements.
struct Field {
    std::uint64_t p;

    explicit Field(std::uint64_t modulus = kDefaultModulus) : p(modulus) {
        if (p < 2 || p >= kMaxModulus) {
            throw ConfigError("field: modulus must be in [2, 2^62)");
        }
        if (!is_prime(p)) {
            throw ConfigError("field: modulus " + std::to_string(p) + " is not prime");
        }
    }

    FieldElement elem(std::uint64_t v) const { return FieldElement(v, p); }
    FieldElement zero() const { return elem(0); }
    FieldElement one() const { return elem(1); }

    // Uniform over [0, p); deterministic under the caller's generator.
    template <UniformBitRng R>
    FieldElement random(R& rng) const {
        return elem(rng.below(p));
    }

    // Bits needed to encode one element (61 for the default modulus).
    int bits() const { return std::bit_width(p - 1); }
    std::size_t bytes_per_element() const { return (static_cast<std::size_t>(bits()) + 7) / 8; }
};

}  // namespace shard

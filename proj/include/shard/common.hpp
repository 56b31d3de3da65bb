#pragma once

#include <bit>
#include <concepts>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace shard {

using ClientId = std::uint32_t;

// Reserved receiver id for messages addressed to the aggregation server.
inline constexpr ClientId kServerId = 0xffffffffu;

// Invalid run configuration: mismatched fields, malformed flags, bad wiring.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Mathematically undefined request (inverse of zero, out-of-range args).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// No parameter assignment can satisfy the requested constraints. `binding`
// names the constraint that could not be met, when known.
class InfeasibleError : public std::runtime_error {
public:
    explicit InfeasibleError(const std::string& msg, std::string binding_constraint = "")
        : std::runtime_error(msg), binding(std::move(binding_constraint)) {}
    std::string binding;
};

// Fewer shares supplied than the sharing threshold requires.
class ThresholdError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Anything with a below(bound) draw can drive the sharing and shuffling
// templates; tests substitute scripted tapes for the real generator.
template <typename R>
concept UniformBitRng = requires(R r, std::uint64_t b) {
    { r.below(b) } -> std::convertible_to<std::uint64_t>;
};

// Deterministic random source. mt19937_64 is fully specified by the standard,
// and the masked-rejection below() replaces std::uniform_int_distribution
// (whose output is implementation-defined), so sequences are identical on
// every platform for a given seed.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    // Independent stream derived from (seed, stream); used to give each
    // purpose in a simulation its own reproducible tape.
    Rng(std::uint64_t seed, std::uint64_t stream) {
        std::seed_seq seq{static_cast<std::uint32_t>(seed),
                          static_cast<std::uint32_t>(seed >> 32),
                          static_cast<std::uint32_t>(stream),
                          static_cast<std::uint32_t>(stream >> 32)};
        eng_.seed(seq);
    }

    static Rng from_bytes(std::span<const std::uint8_t> bytes) {
        std::vector<std::uint32_t> words((bytes.size() + 3) / 4 + 1, 0);
        words[0] = static_cast<std::uint32_t>(bytes.size());
        for (std::size_t i = 0; i < bytes.size(); ++i) {
            words[1 + i / 4] |= static_cast<std::uint32_t>(bytes[i]) << (8 * (i % 4));
        }
        std::seed_seq seq(words.begin(), words.end());
        return Rng(seq);
    }

    std::uint64_t next() { return eng_(); }

    // Uniform over [0, bound) by masked rejection.
    std::uint64_t below(std::uint64_t bound) {
        if (bound == 0) throw DomainError("Rng::below: bound must be positive");
        if (bound == 1) return 0;
        const int bits = std::bit_width(bound - 1);
        const std::uint64_t mask = bits >= 64 ? ~std::uint64_t{0} : ((std::uint64_t{1} << bits) - 1);
        for (;;) {
            const std::uint64_t v = eng_() & mask;
            if (v < bound) return v;
        }
    }

    // Chance in [0,1); 53-bit resolution.
    double chance() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::swap(v[i - 1], v[below(i)]);
        }
    }

private:
    explicit Rng(std::seed_seq& seq) : eng_(seq) {}
    std::mt19937_64 eng_;
};

}  // namespace shard

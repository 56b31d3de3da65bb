#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <utility>

#include "shard/common.hpp"
#include "shard/hypergeom.hpp"

namespace shard {

// Translates the administrator-facing knobs (failure exponents, corrupt and
// dropout fractions, federation size, pack width) into a concrete group size
// and threshold, and evaluates how many bits of security/availability a
// given (g, t) actually delivers.

// Cap reported when a failure event is impossible (e.g. zero adversaries).
inline constexpr double kInfinityBits = 1024.0;

// Group sizes past this make the protocol pointless; fail loudly instead.
inline constexpr std::uint32_t kGroupSizeCap = 100000;

struct SecurityConfig {
    double sigma = 40.0;  // P[privacy failure] < 2^-sigma
    double eta = 20.0;    // P[availability failure] < 2^-eta
    double gamma = 0.0;   // assumed corrupt fraction
    double delta = 0.0;   // assumed dropout fraction
    std::uint64_t n = 0;  // federation size
    std::uint32_t k = 1;  // pack width
    std::uint32_t m = 2;  // shard rounds
    bool malicious = false;

    void validate() const {
        if (sigma < 1.0 || eta < 1.0) throw ConfigError("params: sigma and eta must be >= 1");
        if (gamma < 0.0 || gamma >= 1.0) throw ConfigError("params: gamma must be in [0, 1)");
        if (delta < 0.0 || delta >= 1.0) throw ConfigError("params: delta must be in [0, 1)");
        if (gamma + delta >= 1.0) throw ConfigError("params: gamma + delta must be below 1");
        if (n < 2) throw ConfigError("params: federation needs at least 2 clients");
        if (k < 1) throw ConfigError("params: pack width must be >= 1");
        if (m < 2) throw ConfigError("params: need at least 2 shard rounds");
    }
};

struct ProtocolParams {
    std::uint32_t g = 0;
    std::uint32_t t = 0;
    std::uint32_t k = 1;
    std::uint32_t m = 2;
    std::uint64_t n = 0;
    bool malicious = false;
    double achieved_sigma = 0.0;
    double achieved_eta = 0.0;

    // Shares needed to rebuild a group sum; malicious reconstruction takes
    // one extra.
    std::uint32_t required_shares() const { return t + k - (malicious ? 0 : 1); }
    // One group per shard round, so each client talks to m*g peers (2g at the
    // default m=2).
    std::uint64_t total_neighbors() const { return static_cast<std::uint64_t>(m) * g; }
};

namespace detail {

// gamma*n and delta*n are counts; floor, with a hair of slack so products
// that land within 1e-9 of an integer round to it.
inline std::uint64_t count_from_fraction(double fraction, std::uint64_t n) {
    const double scaled = fraction * static_cast<double>(n);
    return static_cast<std::uint64_t>(std::floor(scaled + 1e-9));
}

// Turn a per-group failure log-probability into overall bits across
// `total_groups` groups: p_fail = 1 - (1 - eps)^groups, composed through
// log1p/expm1 so eps near 2^-60 keeps its relative precision.
inline double bits_from_group_failure(LogProb per_group_failure_log, double total_groups) {
    if (per_group_failure_log == kLogZero) return kInfinityBits;
    const double eps = std::exp(per_group_failure_log);
    const double ln_success = std::log1p(-eps);
    const double p_fail = -std::expm1(total_groups * ln_success);
    if (p_fail <= 0.0) return kInfinityBits;
    if (p_fail >= 1.0) return 0.0;
    return std::min(kInfinityBits, -std::log2(p_fail));
}

}  // namespace detail

// Bits of security delivered by groups of size g with threshold t: a group is
// corrupted when at least t of its members are adversarial, and the event is
// tallied over all m*n/g groups.
inline double achieved_security(std::uint32_t g, std::uint32_t t, std::uint64_t n, double gamma,
                                std::uint32_t m) {
    if (g < 1 || t < 1 || n < 2) throw ConfigError("params: invalid g/t/n");
    if (gamma < 0.0 || gamma >= 1.0) throw ConfigError("params: gamma must be in [0, 1)");
    const std::uint64_t corrupt = detail::count_from_fraction(gamma, n);
    const std::uint64_t draws = std::min<std::uint64_t>(g, n - 1);
    const LogProb group_fail = hg_log_sf(static_cast<std::int64_t>(t) - 1, n - 1, corrupt, draws);
    return detail::bits_from_group_failure(group_fail,
                                           static_cast<double>(m) * static_cast<double>(n) / g);
}

// Bits of availability: a group fails when its dropouts exceed the allowance
// g - required_shares. `literal_pnd` instead evaluates the complemented
// per-group expression for side-by-side comparison; it is not used by the
// search.
inline double achieved_availability(std::uint32_t g, std::uint32_t t, std::uint32_t k,
                                    std::uint64_t n, double delta, std::uint32_t m, bool malicious,
                                    bool literal_pnd = false) {
    if (g < 1 || t < 1 || k < 1 || n < 2) throw ConfigError("params: invalid g/t/k/n");
    if (delta < 0.0 || delta >= 1.0) throw ConfigError("params: delta must be in [0, 1)");
    const std::uint64_t required = static_cast<std::uint64_t>(t) + k - (malicious ? 0 : 1);
    if (required > g) return 0.0;
    const std::int64_t allowance = static_cast<std::int64_t>(g - required);
    const std::uint64_t dropouts = detail::count_from_fraction(delta, n);
    const std::uint64_t draws = std::min<std::uint64_t>(g, n - 1);
    const LogProb group_fail = hg_log_sf(allowance, n - 1, dropouts, draws);
    const double total_groups = static_cast<double>(m) * static_cast<double>(n) / g;
    if (!literal_pnd) {
        return detail::bits_from_group_failure(group_fail, total_groups);
    }
    // Literal reading: per-group "success" = 1 - CDF(allowance). Exponentiate
    // that instead; kept only so the two interpretations can be compared.
    const double ln_pnd = group_fail;  // log(1 - CDF) == log SF
    if (ln_pnd == kLogZero) return 0.0;
    const double p_fail = -std::expm1(total_groups * ln_pnd);
    if (p_fail <= 0.0) return kInfinityBits;
    if (p_fail >= 1.0) return 0.0;
    return std::min(kInfinityBits, -std::log2(p_fail));
}

// Communication blow-up relative to sending the raw vector: each client ships
// 2g shares per k packed values, field_bits bits each.
inline double expansion_factor(std::uint32_t g, std::uint32_t k, std::uint32_t field_bits) {
    if (k < 1) throw ConfigError("params: pack width must be >= 1");
    return 2.0 * static_cast<double>(g) / static_cast<double>(k) *
           static_cast<double>(field_bits);
}

// Smallest group size (with a balanced threshold) meeting both failure
// budgets: group size grows by doubling until feasible, then binary
// refinement; the threshold is picked to balance the sigma and eta slack.
inline ProtocolParams find_params(const SecurityConfig& cfg) {
    cfg.validate();
    const std::uint32_t extra = cfg.malicious ? 1 : 0;
    const std::uint32_t g_floor = std::max<std::uint32_t>(2, cfg.k + extra);
    if (static_cast<std::uint64_t>(cfg.m) * g_floor > cfg.n) {
        throw InfeasibleError("params: federation of " + std::to_string(cfg.n) +
                                  " cannot host " + std::to_string(cfg.m) + " rounds of groups of " +
                                  std::to_string(g_floor),
                              "federation-size");
    }
    const std::uint32_t g_cap =
        static_cast<std::uint32_t>(std::min<std::uint64_t>(cfg.n, kGroupSizeCap));

    std::map<std::pair<std::uint32_t, std::uint32_t>, std::pair<double, double>> memo;
    auto eval = [&](std::uint32_t g, std::uint32_t t) {
        auto it = memo.find({g, t});
        if (it != memo.end()) return it->second;
        std::pair<double, double> bits{achieved_security(g, t, cfg.n, cfg.gamma, cfg.m),
                                       achieved_availability(g, t, cfg.k, cfg.n, cfg.delta, cfg.m,
                                                             cfg.malicious)};
        memo.emplace(std::pair{g, t}, bits);
        return bits;
    };

    struct Probe {
        bool ok = false;
        std::uint32_t t_lo = 0;
        std::uint32_t t_hi = 0;
        const char* binding = "";
    };
    // Security bits rise with t while availability bits fall, so both
    // boundaries are binary-searchable.
    auto probe = [&](std::uint32_t g) -> Probe {
        const std::uint32_t t_max = g + 1 - cfg.k - extra;
        if (eval(g, t_max).first < cfg.sigma) return {false, 0, 0, "sigma"};
        std::uint32_t lo = 1, hi = t_max;
        while (lo < hi) {
            const std::uint32_t mid = lo + (hi - lo) / 2;
            if (eval(g, mid).first >= cfg.sigma) {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        const std::uint32_t t_sec = lo;
        if (eval(g, t_sec).second < cfg.eta) return {false, 0, 0, "eta"};
        std::uint32_t alo = t_sec, ahi = t_max;
        while (alo < ahi) {
            const std::uint32_t mid = alo + (ahi - alo + 1) / 2;
            if (eval(g, mid).second >= cfg.eta) {
                alo = mid;
            } else {
                ahi = mid - 1;
            }
        }
        return {true, t_sec, alo, ""};
    };

    std::uint32_t lo = g_floor;
    std::uint32_t hi = g_floor;
    Probe found = probe(hi);
    const char* last_binding = found.binding;
    while (!found.ok) {
        if (hi >= g_cap) {
            throw InfeasibleError(
                std::string("params: no feasible group size up to ") + std::to_string(g_cap) +
                    "; binding constraint: " + last_binding,
                last_binding);
        }
        lo = hi + 1;
        hi = std::min<std::uint64_t>(static_cast<std::uint64_t>(hi) * 2, g_cap);
        found = probe(hi);
        if (!found.ok) last_binding = found.binding;
    }
    while (lo < hi) {
        const std::uint32_t mid = lo + (hi - lo) / 2;
        const Probe p = probe(mid);
        if (p.ok) {
            hi = mid;
            found = p;
        } else {
            lo = mid + 1;
        }
    }
    const std::uint32_t g = hi;
    if (lo == hi && !found.ok) found = probe(g);

    // Balanced slack over the feasible threshold range; ties break low.
    std::uint32_t best_t = found.t_lo;
    double best_slack = -kInfinityBits;
    for (std::uint32_t t = found.t_lo; t <= found.t_hi; ++t) {
        const auto [sec, avail] = eval(g, t);
        if (sec < cfg.sigma || avail < cfg.eta) continue;
        const double slack = std::min(sec - cfg.sigma, avail - cfg.eta);
        if (slack > best_slack) {
            best_slack = slack;
            best_t = t;
        }
    }

    ProtocolParams out;
    out.g = g;
    out.t = best_t;
    out.k = cfg.k;
    out.m = cfg.m;
    out.n = cfg.n;
    out.malicious = cfg.malicious;
    const auto [sec, avail] = eval(g, best_t);
    out.achieved_sigma = sec;
    out.achieved_eta = avail;
    if (sec < cfg.sigma || avail < cfg.eta) {
        throw InfeasibleError("params: search produced parameters below target", "search");
    }
    return out;
}

}  // namespace shard

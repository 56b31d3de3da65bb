#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "shard/common.hpp"

namespace shard {

// Natural log of a probability; -infinity encodes exact zero. Everything in
// this header stays in log space so tails near 2^-60 keep full relative
// precision at populations up to 10^8.
using LogProb = double;

inline constexpr LogProb kLogZero = -std::numeric_limits<double>::infinity();

namespace detail {

inline double log_choose(std::uint64_t n, std::uint64_t k) {
    if (k > n) return kLogZero;
    return std::lgamma(static_cast<double>(n) + 1.0) -
           std::lgamma(static_cast<double>(k) + 1.0) -
           std::lgamma(static_cast<double>(n - k) + 1.0);
}

// log(sum_i exp(terms[i])) anchored at the max term.
inline double log_sum_exp(const std::vector<double>& terms) {
    double m = kLogZero;
    for (double t : terms) m = std::max(m, t);
    if (m == kLogZero) return kLogZero;
    double acc = 0.0;
    for (double t : terms) acc += std::exp(t - m);
    return m + std::log(acc);
}

inline void check_hg_args(std::uint64_t N, std::uint64_t K, std::uint64_t draws) {
    if (K > N) throw DomainError("hypergeometric: successes K exceed population N");
    if (draws > N) throw DomainError("hypergeometric: draws exceed population N");
}

}  // namespace detail

// ln P[X = i] for X ~ Hypergeometric(population N, successes K, draws).
inline LogProb hg_log_pmf(std::int64_t i, std::uint64_t N, std::uint64_t K, std::uint64_t draws) {
    detail::check_hg_args(N, K, draws);
    const std::uint64_t lo = draws > N - K ? draws - (N - K) : 0;
    const std::uint64_t hi = std::min(K, draws);
    if (i < 0 || static_cast<std::uint64_t>(i) < lo || static_cast<std::uint64_t>(i) > hi) {
        return kLogZero;
    }
    const std::uint64_t u = static_cast<std::uint64_t>(i);
    return detail::log_choose(K, u) + detail::log_choose(N - K, draws - u) -
           detail::log_choose(N, draws);
}

// ln P[X <= x], summed over the lower tail.
inline LogProb hg_log_cdf(std::int64_t x, std::uint64_t N, std::uint64_t K, std::uint64_t draws) {
    detail::check_hg_args(N, K, draws);
    const std::uint64_t lo = draws > N - K ? draws - (N - K) : 0;
    const std::uint64_t hi = std::min(K, draws);
    if (x < 0 || static_cast<std::uint64_t>(x) < lo) return kLogZero;
    if (static_cast<std::uint64_t>(x) >= hi) return 0.0;
    std::vector<double> terms;
    terms.reserve(static_cast<std::size_t>(x) - lo + 1);
    for (std::uint64_t i = lo; i <= static_cast<std::uint64_t>(x); ++i) {
        terms.push_back(hg_log_pmf(static_cast<std::int64_t>(i), N, K, draws));
    }
    return std::min(0.0, detail::log_sum_exp(terms));
}

// ln P[X > x]. Summed directly over the upper tail, never as 1 - CDF, so a
// survival probability of 2^-60 comes back with ~1e-6 relative accuracy
// instead of underflowing to zero.
inline LogProb hg_log_sf(std::int64_t x, std::uint64_t N, std::uint64_t K, std::uint64_t draws) {
    detail::check_hg_args(N, K, draws);
    const std::uint64_t lo = draws > N - K ? draws - (N - K) : 0;
    const std::uint64_t hi = std::min(K, draws);
    if (x >= 0 && static_cast<std::uint64_t>(x) >= hi) return kLogZero;
    if (x < 0 || static_cast<std::uint64_t>(x) < lo) return 0.0;
    std::vector<double> terms;
    terms.reserve(hi - static_cast<std::uint64_t>(x));
    for (std::uint64_t i = static_cast<std::uint64_t>(x) + 1; i <= hi; ++i) {
        terms.push_back(hg_log_pmf(static_cast<std::int64_t>(i), N, K, draws));
    }
    return std::min(0.0, detail::log_sum_exp(terms));
}

}  // namespace shard

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "shard/common.hpp"
#include "shard/field.hpp"

namespace shard {

// Packed (batched) Shamir sharing: k secrets ride one polynomial of degree
// t+k-2. Secrets sit at the reserved points {p-1, ..., p-k}, shares at
// {1, ..., n}; the two sets never collide as long as n + k < p. Any t+k-1
// shares reconstruct, any t-1 reveal nothing.

struct Share {
    FieldElement point;
    FieldElement value;
};

struct PackedShareSet {
    std::uint32_t t = 1;  // privacy threshold
    std::uint32_t k = 1;  // pack width
    std::vector<Share> shares;
};

inline FieldElement secret_point(std::uint64_t modulus, std::uint32_t slot) {
    return FieldElement(modulus - 1 - slot, modulus);
}

inline FieldElement share_point(std::uint64_t modulus, std::uint32_t index) {
    return FieldElement(static_cast<std::uint64_t>(index) + 1, modulus);
}

inline FieldElement secret_point(const Field& field, std::uint32_t slot) {
    return secret_point(field.p, slot);
}

inline FieldElement share_point(const Field& field, std::uint32_t index) {
    return share_point(field.p, index);
}

namespace detail {

// Lagrange interpolation helper bound to one set of evaluation points:
// precomputes the inverted denominators once, then coefficients for any
// target x cost O(q). The same basis serves every block of a vector sharing.
class LagrangeBasis {
public:
    explicit LagrangeBasis(std::span<const FieldElement> xs) : xs_(xs.begin(), xs.end()) {
        const std::size_t q = xs_.size();
        inv_denom_.reserve(q);
        for (std::size_t i = 0; i < q; ++i) {
            FieldElement d(1, xs_[i].modulus());
            for (std::size_t j = 0; j < q; ++j) {
                if (j == i) continue;
                const FieldElement diff = xs_[i] - xs_[j];
                if (diff.value() == 0) {
                    throw ConfigError("shamir: evaluation points must be pairwise distinct");
                }
                d *= diff;
            }
            inv_denom_.push_back(d.inv());
        }
    }

    // Coefficients c_i with f(x) = sum_i c_i * y_i for any polynomial of
    // degree < q interpolating (xs_i, y_i).
    std::vector<FieldElement> coefficients_at(FieldElement x) const {
        const std::size_t q = xs_.size();
        const FieldElement one(1, x.modulus());
        // prefix_i = prod_{j<i} (x - xs_j), suffix_i = prod_{j>i} (x - xs_j)
        std::vector<FieldElement> prefix(q + 1, one);
        for (std::size_t i = 0; i < q; ++i) prefix[i + 1] = prefix[i] * (x - xs_[i]);
        std::vector<FieldElement> coeffs(q, FieldElement(0, x.modulus()));
        FieldElement suffix = one;
        for (std::size_t i = q; i-- > 0;) {
            coeffs[i] = prefix[i] * suffix * inv_denom_[i];
            suffix *= x - xs_[i];
        }
        return coeffs;
    }

    std::size_t size() const { return xs_.size(); }

private:
    std::vector<FieldElement> xs_;
    std::vector<FieldElement> inv_denom_;
};

inline FieldElement eval_with(const std::vector<FieldElement>& coeffs,
                              std::span<const FieldElement> ys) {
    FieldElement acc(0, ys[0].modulus());
    for (std::size_t i = 0; i < coeffs.size(); ++i) acc += coeffs[i] * ys[i];
    return acc;
}

// Sharing machine for a fixed (t, n, k) layout: the secret-point basis, the
// per-share-point interpolation coefficients and the vanishing-polynomial
// values are all block-independent, so they are computed once and reused for
// every block of a vector.
class PackedSharer {
public:
    PackedSharer(const Field& field, std::uint32_t t, std::uint32_t n, std::uint32_t k)
        : field_(field), t_(t), n_(n), k_(k) {
        if (k < 1) throw ConfigError("shamir: need at least one secret per block");
        if (t < 1) throw ConfigError("shamir: threshold must be at least 1");
        if (static_cast<std::uint64_t>(t) + k - 1 > n) {
            throw InfeasibleError("shamir: t + k - 1 = " + std::to_string(t + k - 1) +
                                      " exceeds share count " + std::to_string(n),
                                  "threshold");
        }
        if (static_cast<std::uint64_t>(n) + k >= field.p) {
            throw InfeasibleError("shamir: field of size " + std::to_string(field.p) +
                                      " too small for " + std::to_string(n) + " shares packing " +
                                      std::to_string(k),
                                  "field-size");
        }
        std::vector<FieldElement> secret_xs;
        secret_xs.reserve(k);
        for (std::uint32_t j = 0; j < k; ++j) secret_xs.push_back(secret_point(field, j));
        const LagrangeBasis base(secret_xs);
        xs_.reserve(n);
        base_coeffs_.reserve(n);
        vanish_.reserve(n);
        for (std::uint32_t i = 0; i < n; ++i) {
            const FieldElement x = share_point(field, i);
            xs_.push_back(x);
            base_coeffs_.push_back(base.coefficients_at(x));
            FieldElement z = field.one();
            for (const FieldElement& sx : secret_xs) z *= x - sx;
            vanish_.push_back(z);
        }
        mask_.resize(t >= 1 ? t - 1 : 0, field.zero());
    }

    const Field& field() const { return field_; }
    std::uint32_t n() const { return n_; }

    // One block: f = interp(secrets) + Z(x)*R(x) with R random of degree
    // <= t-2. Writes share i's value into out[i].
    template <UniformBitRng R>
    void share_block(std::span<const FieldElement> secrets, R& rng,
                     std::span<FieldElement> out) {
        if (secrets.size() != k_) throw ConfigError("shamir: block width mismatch");
        if (out.size() != n_) throw ConfigError("shamir: output span must hold n shares");
        for (FieldElement& c : mask_) c = field_.random(rng);
        for (std::uint32_t i = 0; i < n_; ++i) {
            FieldElement y = eval_with(base_coeffs_[i], secrets);
            if (!mask_.empty()) {
                FieldElement r = field_.zero();
                for (std::size_t c = mask_.size(); c-- > 0;) r = r * xs_[i] + mask_[c];
                y += vanish_[i] * r;
            }
            out[i] = y;
        }
    }

private:
    Field field_;
    std::uint32_t t_, n_, k_;
    std::vector<FieldElement> xs_;
    std::vector<std::vector<FieldElement>> base_coeffs_;
    std::vector<FieldElement> vanish_;
    std::vector<FieldElement> mask_;
};

}  // namespace detail

// Split k secrets into n shares with threshold t. The polynomial is the
// interpolation of the secrets at the reserved points plus Z(x)*R(x), where
// Z vanishes on the reserved points and R carries the t-1 random degrees of
// freedom; t=1 therefore degenerates to the plain interpolation.
template <UniformBitRng R>
PackedShareSet share_packed(std::uint32_t t, std::uint32_t n,
                            std::span<const FieldElement> secrets, R& rng) {
    const std::uint32_t k = static_cast<std::uint32_t>(secrets.size());
    if (k == 0) throw ConfigError("shamir: need at least one secret");
    const Field field{secrets[0].modulus()};
    for (const FieldElement& s : secrets) {
        if (s.modulus() != field.p) throw ConfigError("shamir: secrets from mixed fields");
    }
    detail::PackedSharer sharer(field, t, n, k);
    std::vector<FieldElement> values(n, field.zero());
    sharer.share_block(secrets, rng, values);
    PackedShareSet out;
    out.t = t;
    out.k = k;
    out.shares.reserve(n);
    for (std::uint32_t i = 0; i < n; ++i) out.shares.push_back(Share{share_point(field, i), values[i]});
    return out;
}

// Recover the k packed secrets from any t+k-1 shares (the first t+k-1 of the
// supplied order are used; honest inputs make every qualified subset agree).
inline std::vector<FieldElement> reconstruct(std::span<const Share> shares, std::uint32_t t,
                                             std::uint32_t k) {
    const std::size_t quorum = static_cast<std::size_t>(t) + k - 1;
    if (shares.size() < quorum) {
        throw ThresholdError("shamir: reconstruction needs " + std::to_string(quorum) +
                             " shares, got " + std::to_string(shares.size()));
    }
    const std::uint64_t modulus = shares[0].point.modulus();
    std::vector<FieldElement> xs, ys;
    xs.reserve(quorum);
    ys.reserve(quorum);
    for (std::size_t i = 0; i < quorum; ++i) {
        xs.push_back(shares[i].point);
        ys.push_back(shares[i].value);
    }
    const detail::LagrangeBasis base(xs);
    std::vector<FieldElement> secrets;
    secrets.reserve(k);
    for (std::uint32_t j = 0; j < k; ++j) {
        secrets.push_back(detail::eval_with(base.coefficients_at(secret_point(modulus, j)), ys));
    }
    return secrets;
}

struct ReconstructionOutcome {
    bool tampered = false;
    std::vector<FieldElement> secrets;  // empty when tampered
};

// Error-detecting reconstruction: takes one share beyond the plain quorum,
// checks every extra share against the interpolated polynomial, and repeats
// the interpolation from a second qualified subset. Any single inconsistent
// share flips the outcome to tampered; honest inputs always pass.
inline ReconstructionOutcome reconstruct_verified(std::span<const Share> shares, std::uint32_t t,
                                                  std::uint32_t k) {
    const std::size_t quorum = static_cast<std::size_t>(t) + k - 1;
    if (shares.size() < quorum + 1) {
        throw ThresholdError("shamir: verified reconstruction needs " + std::to_string(quorum + 1) +
                             " shares, got " + std::to_string(shares.size()));
    }
    const std::uint64_t modulus = shares[0].point.modulus();
    std::vector<FieldElement> xs, ys;
    xs.reserve(quorum);
    ys.reserve(quorum);
    for (std::size_t i = 0; i < quorum; ++i) {
        xs.push_back(shares[i].point);
        ys.push_back(shares[i].value);
    }
    const detail::LagrangeBasis base(xs);
    for (std::size_t i = quorum; i < shares.size(); ++i) {
        const FieldElement expect = detail::eval_with(base.coefficients_at(shares[i].point), ys);
        if (expect != shares[i].value) return {true, {}};
    }

    std::vector<FieldElement> secrets;
    secrets.reserve(k);
    for (std::uint32_t j = 0; j < k; ++j) {
        secrets.push_back(detail::eval_with(base.coefficients_at(secret_point(modulus, j)), ys));
    }

    // Reconstruction twice: the trailing quorum must tell the same story.
    std::vector<FieldElement> xs2, ys2;
    xs2.reserve(quorum);
    ys2.reserve(quorum);
    for (std::size_t i = shares.size() - quorum; i < shares.size(); ++i) {
        xs2.push_back(shares[i].point);
        ys2.push_back(shares[i].value);
    }
    const detail::LagrangeBasis base2(xs2);
    for (std::uint32_t j = 0; j < k; ++j) {
        const FieldElement again =
            detail::eval_with(base2.coefficients_at(secret_point(modulus, j)), ys2);
        if (again != secrets[j]) return {true, {}};
    }
    return {false, std::move(secrets)};
}

// Pointwise sum of two share slices over identical evaluation points;
// reconstructing the result yields the sum of the underlying secrets.
inline std::vector<Share> add_shares(std::span<const Share> a, std::span<const Share> b) {
    if (a.size() != b.size()) throw ConfigError("shamir: share slices differ in length");
    std::vector<Share> out;
    out.reserve(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i].point != b[i].point) {
            throw ConfigError("shamir: share slices have mismatched evaluation points");
        }
        out.push_back(Share{a[i].point, a[i].value + b[i].value});
    }
    return out;
}

// Block-wise packed sharing of a length-L vector: ceil(L/k) polynomials, the
// last block zero-padded. rows[i] holds share-holder i's value per block;
// holder i sits at evaluation point i+1.
struct ShareVector {
    std::uint32_t t = 1;
    std::uint32_t k = 1;
    std::uint32_t n = 0;
    std::size_t length = 0;
    std::vector<std::vector<FieldElement>> rows;

    std::size_t blocks() const { return (length + k - 1) / k; }
};

template <UniformBitRng R>
ShareVector share_vector(std::uint32_t t, std::uint32_t n, std::uint32_t k,
                         std::span<const FieldElement> v, R& rng) {
    if (v.empty()) throw ConfigError("shamir: empty vector");
    const Field field{v[0].modulus()};
    ShareVector out;
    out.t = t;
    out.k = k;
    out.n = n;
    out.length = v.size();
    const std::size_t blocks = out.blocks();
    out.rows.assign(n, std::vector<FieldElement>(blocks, field.zero()));
    detail::PackedSharer sharer(field, t, n, k);
    std::vector<FieldElement> secrets(k, field.zero());
    std::vector<FieldElement> column(n, field.zero());
    for (std::size_t b = 0; b < blocks; ++b) {
        for (std::uint32_t j = 0; j < k; ++j) {
            const std::size_t idx = b * k + j;
            secrets[j] = idx < v.size() ? v[idx] : field.zero();
        }
        sharer.share_block(secrets, rng, column);
        for (std::uint32_t i = 0; i < n; ++i) out.rows[i][b] = column[i];
    }
    return out;
}

// Reconstruct a length-`length` vector from per-holder block rows. `points`
// gives each row's evaluation point; the Lagrange basis is shared across
// blocks. Padding introduced by share_vector is stripped.
inline std::vector<FieldElement> reconstruct_rows(std::span<const FieldElement> points,
                                                  std::span<const std::vector<FieldElement>> rows,
                                                  std::uint32_t t, std::uint32_t k,
                                                  std::size_t length) {
    const std::size_t quorum = static_cast<std::size_t>(t) + k - 1;
    if (points.size() != rows.size()) throw ConfigError("shamir: points/rows size mismatch");
    if (rows.size() < quorum) {
        throw ThresholdError("shamir: reconstruction needs " + std::to_string(quorum) +
                             " rows, got " + std::to_string(rows.size()));
    }
    const std::uint64_t modulus = points[0].modulus();
    const std::size_t blocks = rows[0].size();
    const detail::LagrangeBasis base(points.subspan(0, quorum));
    std::vector<std::vector<FieldElement>> coeffs;
    coeffs.reserve(k);
    for (std::uint32_t j = 0; j < k; ++j) {
        coeffs.push_back(base.coefficients_at(secret_point(modulus, j)));
    }

    std::vector<FieldElement> out(length, FieldElement(0, modulus));
    std::vector<FieldElement> ys(quorum, FieldElement(0, modulus));
    for (std::size_t b = 0; b < blocks; ++b) {
        for (std::size_t i = 0; i < quorum; ++i) ys[i] = rows[i][b];
        for (std::uint32_t j = 0; j < k; ++j) {
            const std::size_t idx = b * k + j;
            if (idx < length) out[idx] = detail::eval_with(coeffs[j], ys);
        }
    }
    return out;
}

struct VectorReconstruction {
    bool tampered = false;
    std::vector<FieldElement> values;
};

// Verified variant of reconstruct_rows: every row beyond the quorum must sit
// on each block's polynomial and a second quorum must reproduce the same
// values.
inline VectorReconstruction reconstruct_rows_verified(
    std::span<const FieldElement> points, std::span<const std::vector<FieldElement>> rows,
    std::uint32_t t, std::uint32_t k, std::size_t length) {
    const std::size_t quorum = static_cast<std::size_t>(t) + k - 1;
    if (points.size() != rows.size()) throw ConfigError("shamir: points/rows size mismatch");
    if (rows.size() < quorum + 1) {
        throw ThresholdError("shamir: verified reconstruction needs " + std::to_string(quorum + 1) +
                             " rows, got " + std::to_string(rows.size()));
    }
    const std::uint64_t modulus = points[0].modulus();
    const std::size_t blocks = rows[0].size();
    const detail::LagrangeBasis base(points.subspan(0, quorum));
    std::vector<FieldElement> ys(quorum, FieldElement(0, modulus));

    // extra rows against the interpolated polynomials
    for (std::size_t i = quorum; i < rows.size(); ++i) {
        const std::vector<FieldElement> ci = base.coefficients_at(points[i]);
        for (std::size_t b = 0; b < blocks; ++b) {
            for (std::size_t q = 0; q < quorum; ++q) ys[q] = rows[q][b];
            if (detail::eval_with(ci, ys) != rows[i][b]) return {true, {}};
        }
    }

    std::vector<FieldElement> first =
        reconstruct_rows(points.subspan(0, quorum), rows.subspan(0, quorum), t, k, length);
    std::vector<FieldElement> second = reconstruct_rows(points.subspan(rows.size() - quorum),
                                                        rows.subspan(rows.size() - quorum), t, k,
                                                        length);
    if (first != second) return {true, {}};
    return {false, std::move(first)};
}

// Convenience wrapper matching share_vector: reconstruct from a subset of
// holder indices.
inline std::vector<FieldElement> reconstruct_vector(const ShareVector& sv,
                                                    std::span<const std::uint32_t> holders) {
    if (sv.rows.empty()) throw ConfigError("shamir: empty share vector");
    const std::uint64_t modulus = sv.rows[0][0].modulus();
    std::vector<FieldElement> points;
    std::vector<std::vector<FieldElement>> rows;
    points.reserve(holders.size());
    rows.reserve(holders.size());
    for (std::uint32_t h : holders) {
        if (h >= sv.n) throw ConfigError("shamir: holder index out of range");
        points.push_back(share_point(modulus, h));
        rows.push_back(sv.rows[h]);
    }
    return reconstruct_rows(points, rows, sv.t, sv.k, sv.length);
}

}  // namespace shard

#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include "shard/common.hpp"

namespace shard {

// Deterministic group assignment from one shared permutation. In round 0 the
// client at permuted index i joins group i/g; in round r >= 1 the j-th member
// of each base group moves r*j groups forward (mod the group count), which
// spreads every group's members across distinct groups and keeps the honest
// communication graph connected. When g does not divide n the short tail is
// merged into the previous group, so sizes stay within [g, 2g).

struct GroupAssignment {
    std::uint32_t round = 0;
    std::uint32_t n = 0;
    std::uint32_t g = 0;
    std::vector<std::vector<ClientId>> groups;
    std::vector<std::uint32_t> group_of;        // client id -> group index
    std::vector<std::uint32_t> index_in_group;  // client id -> slot within group
};

inline std::vector<ClientId> derive_permutation(std::uint64_t seed, std::uint32_t n) {
    if (n < 1) throw ConfigError("groups: federation must have at least one client");
    std::vector<ClientId> perm(n);
    std::iota(perm.begin(), perm.end(), 0u);
    Rng rng(seed, /*stream=*/0x7065726du);  // "perm"
    rng.shuffle(perm);
    return perm;
}

inline std::vector<ClientId> derive_permutation(std::span<const std::uint8_t> seed_bytes,
                                                std::uint32_t n) {
    if (n < 1) throw ConfigError("groups: federation must have at least one client");
    std::vector<ClientId> perm(n);
    std::iota(perm.begin(), perm.end(), 0u);
    Rng rng = Rng::from_bytes(seed_bytes);
    rng.shuffle(perm);
    return perm;
}

inline GroupAssignment assign_round(std::span<const ClientId> perm, std::uint32_t g,
                                    std::uint32_t round) {
    if (g < 2) throw ConfigError("groups: group size must be at least 2");
    const std::uint32_t n = static_cast<std::uint32_t>(perm.size());
    const std::uint32_t num_groups = std::max<std::uint32_t>(1, n / g);

    GroupAssignment out;
    out.round = round;
    out.n = n;
    out.g = g;
    out.groups.resize(num_groups);
    out.group_of.assign(n, 0);
    out.index_in_group.assign(n, 0);

    for (std::uint32_t i = 0; i < n; ++i) {
        const std::uint32_t base = i / g;
        const std::uint32_t member = i % g;
        std::uint32_t grp;
        if (round == 0) {
            grp = std::min(base, num_groups - 1);  // merge the short tail
        } else {
            grp = (base + static_cast<std::uint64_t>(round) * member) % num_groups;
        }
        const ClientId id = perm[i];
        out.group_of[id] = grp;
        out.index_in_group[id] = static_cast<std::uint32_t>(out.groups[grp].size());
        out.groups[grp].push_back(id);
    }
    return out;
}

inline GroupAssignment assign_round1(std::span<const ClientId> perm, std::uint32_t g) {
    return assign_round(perm, g, 0);
}

inline GroupAssignment assign_round2(std::span<const ClientId> perm, std::uint32_t g) {
    return assign_round(perm, g, 1);
}

// Graph over honest clients with an edge wherever two of them share a group
// in any round. Undirected, no self-loops.
struct HonestGraph {
    std::vector<ClientId> vertices;
    std::vector<std::vector<std::uint32_t>> adjacency;  // indices into vertices
};

inline HonestGraph build_honest_graph(std::span<const GroupAssignment> rounds,
                                      const std::vector<bool>& honest) {
    HonestGraph graph;
    std::vector<std::uint32_t> vertex_index(honest.size(), 0xffffffffu);
    for (ClientId id = 0; id < honest.size(); ++id) {
        if (honest[id]) {
            vertex_index[id] = static_cast<std::uint32_t>(graph.vertices.size());
            graph.vertices.push_back(id);
        }
    }
    graph.adjacency.resize(graph.vertices.size());

    std::vector<std::uint32_t> members;
    for (const GroupAssignment& assignment : rounds) {
        for (const std::vector<ClientId>& group : assignment.groups) {
            members.clear();
            for (ClientId id : group) {
                if (id < honest.size() && honest[id]) members.push_back(vertex_index[id]);
            }
            for (std::size_t a = 0; a < members.size(); ++a) {
                for (std::size_t b = a + 1; b < members.size(); ++b) {
                    graph.adjacency[members[a]].push_back(members[b]);
                    graph.adjacency[members[b]].push_back(members[a]);
                }
            }
        }
    }
    for (std::vector<std::uint32_t>& adj : graph.adjacency) {
        std::sort(adj.begin(), adj.end());
        adj.erase(std::unique(adj.begin(), adj.end()), adj.end());
    }
    return graph;
}

inline HonestGraph build_honest_graph(const GroupAssignment& round1, const GroupAssignment& round2,
                                      const std::vector<bool>& honest) {
    const GroupAssignment rounds[2] = {round1, round2};
    return build_honest_graph(std::span<const GroupAssignment>(rounds, 2), honest);
}

// True iff the graph has a single connected component (vacuously true for
// zero or one vertex). A disconnected component is exactly the condition
// under which a strict subset sum becomes recoverable.
inline bool is_connected(const HonestGraph& graph) {
    if (graph.vertices.size() <= 1) return true;
    std::vector<bool> seen(graph.vertices.size(), false);
    std::vector<std::uint32_t> frontier{0};
    seen[0] = true;
    std::size_t visited = 1;
    while (!frontier.empty()) {
        const std::uint32_t v = frontier.back();
        frontier.pop_back();
        for (std::uint32_t w : graph.adjacency[v]) {
            if (!seen[w]) {
                seen[w] = true;
                ++visited;
                frontier.push_back(w);
            }
        }
    }
    return visited == graph.vertices.size();
}

}  // namespace shard

#pragma once

#include <array>
#include <chrono>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "shard/common.hpp"
#include "shard/field.hpp"
#include "shard/groups.hpp"
#include "shard/params.hpp"
#include "shard/protocol.hpp"

namespace shard {

// In-process federation simulator. One seed fixes the permutation, inputs,
// dropout draw, adversary choices and delivery order, so a run is exactly
// reproducible. The driver is phase-synchronous: every share delivery lands
// before any broadcast, every broadcast before any report. Message order
// within a phase is seed-shuffled and nothing may depend on it.

// Full simulations above this size need run_scaled_benchmark instead.
inline constexpr std::uint64_t kMaxFullSimulation = 1000000;

// 4 client steps (share, broadcast, report, abort scan) + 1 server step,
// independent of how many clients drop.
inline constexpr std::uint32_t kProtocolPhases = 5;

enum class DropoutTiming : std::uint8_t { BeforeShares, AfterShares, Mixed };

struct DropoutModel {
    double fraction = 0.0;  // injected; independent of the budgeted delta
    DropoutTiming timing = DropoutTiming::BeforeShares;
};

enum class AdversaryKind : std::uint8_t { None, SemiHonestObserver, MaliciousMutator };

inline constexpr std::uint32_t kMutateShares = 1u << 0;
inline constexpr std::uint32_t kMutateBroadcasts = 1u << 1;
inline constexpr std::uint32_t kMutateReports = 1u << 2;

struct AdversaryModel {
    AdversaryKind kind = AdversaryKind::None;
    // observer: which clients the coalition controls
    double corrupt_fraction = 0.0;
    std::vector<ClientId> forced_corrupt;
    // mutator: either a per-message rate or an exact number of single-message
    // mutations, applied to the targeted kinds
    double mutation_rate = 0.0;
    std::optional<std::uint32_t> mutate_exactly;
    std::uint32_t target_kinds = kMutateShares | kMutateBroadcasts | kMutateReports;
};

enum class InputModel : std::uint8_t { Random, Fixed, File };

struct SimulationConfig {
    std::optional<ProtocolParams> params;    // explicit parameters ...
    std::optional<SecurityConfig> security;  // ... or targets resolved via find_params
    std::uint64_t modulus = kDefaultModulus;
    std::size_t length = 1;  // L
    std::uint64_t seed = 1;
    DropoutModel dropouts;
    AdversaryModel adversary;
    InputModel input_model = InputModel::Random;
    std::vector<std::uint64_t> fixed_inputs;  // n*L values, client-major
    std::string input_path;
    // fixture hook: bypass the seed-derived permutation
    std::optional<std::vector<ClientId>> permutation_override;
};

struct TraceEntry {
    MsgKind kind;
    ClientId sender;
    ClientId receiver;
    std::uint32_t round;
    std::size_t payload_len;
    std::vector<std::uint64_t> values;  // populated only when revealing
};

struct MessageCounters {
    std::array<std::uint64_t, 4> messages{};
    std::array<std::uint64_t, 4> bytes{};
    std::uint64_t client_uplink_messages = 0;
    std::uint64_t client_uplink_bytes = 0;
    std::uint64_t server_rx_messages = 0;
    std::uint64_t server_rx_bytes = 0;
    std::uint64_t server_tx_bytes = 0;
    std::vector<std::uint64_t> uplink_bytes_per_client;

    std::uint64_t total_bytes() const {
        std::uint64_t sum = 0;
        for (std::uint64_t b : bytes) sum += b;
        return sum;
    }
};

enum class Verdict : std::uint8_t { Output, AbortTamper, AbortAvailability };

inline const char* verdict_name(Verdict v) {
    switch (v) {
        case Verdict::Output: return "ok";
        case Verdict::AbortTamper: return "abort_tamper";
        case Verdict::AbortAvailability: return "abort_availability";
    }
    return "?";
}

struct SimulationReport {
    ProtocolParams params;
    std::uint64_t modulus = kDefaultModulus;
    int field_bits = 61;
    std::size_t length = 1;
    std::uint64_t seed = 0;

    Verdict verdict = Verdict::Output;
    std::string abort_reason;
    std::vector<std::uint64_t> output;      // empty on abort
    std::vector<std::uint64_t> oracle_sum;  // plaintext sum over the covered set
    bool match = false;                     // computed, never asserted

    // which inputs the output covers: everyone whose shares went out
    std::uint64_t covered_count = 0;
    std::vector<ClientId> excluded_before_shares;
    std::vector<ClientId> dropped_after_shares;

    MessageCounters counters;

    std::uint32_t dropouts_injected = 0;
    std::uint32_t dropouts_before = 0;
    std::uint32_t dropouts_after = 0;
    std::vector<std::vector<std::uint32_t>> group_dropouts;  // [round][group]
    std::vector<std::vector<std::uint32_t>> failed_groups;   // [round] -> group ids

    std::vector<ClientId> corrupt_ids;
    std::vector<std::vector<std::uint32_t>> observed_shares;      // [round][client], observer runs
    std::vector<std::vector<std::uint32_t>> group_corrupt_counts;  // [round][group]
    std::uint32_t mutations_applied = 0;
    // recorded when it cannot be re-derived from the seed or when the ledger
    // will want it (observer runs)
    std::vector<ClientId> permutation;

    std::uint32_t phases = kProtocolPhases;

    struct Timing {
        double client_total_ms = 0.0;
        double client_avg_ms = 0.0;
        double client_max_ms = 0.0;
        double server_ms = 0.0;
    } timing;

    nlohmann::json to_json(bool include_timing = true) const;
    std::string to_csv_row() const;
    static std::string csv_header();
};

namespace detail {

struct ScopedTimer {
    explicit ScopedTimer(double& sink_ms)
        : sink(sink_ms), start(std::chrono::steady_clock::now()) {}
    ~ScopedTimer() {
        const auto end = std::chrono::steady_clock::now();
        sink += std::chrono::duration<double, std::milli>(end - start).count();
    }
    double& sink;
    std::chrono::steady_clock::time_point start;
};

// rng stream tags
inline constexpr std::uint64_t kStreamInputs = 0x696e7075;
inline constexpr std::uint64_t kStreamDropouts = 0x64726f70;
inline constexpr std::uint64_t kStreamCorrupt = 0x636f7272;
inline constexpr std::uint64_t kStreamDelivery = 0x64656c76;
inline constexpr std::uint64_t kStreamAdversary = 0x61647665;
inline constexpr std::uint64_t kStreamClientBase = 0x10000000;

struct MutationTarget {
    MsgKind kind;
    ClientId sender;
    ClientId receiver;
    std::uint32_t round;
};

}  // namespace detail

// Input vectors from a newline-delimited decimal file: L values per client,
// clients concatenated. Values are reduced into the field.
inline std::vector<std::vector<FieldElement>> load_input_file(const std::string& path,
                                                              std::uint32_t n, std::size_t length,
                                                              const Field& field) {
    std::ifstream in(path);
    if (!in) throw ConfigError("simulation: cannot open input file " + path);
    std::vector<std::vector<FieldElement>> inputs(n);
    std::uint64_t value = 0;
    for (std::uint32_t id = 0; id < n; ++id) {
        inputs[id].reserve(length);
        for (std::size_t e = 0; e < length; ++e) {
            if (!(in >> value)) {
                throw ConfigError("simulation: input file ends early (need " +
                                  std::to_string(static_cast<std::uint64_t>(n) * length) +
                                  " values)");
            }
            inputs[id].push_back(field.elem(value));
        }
    }
    return inputs;
}

inline ProtocolParams resolve_simulation_params(const SimulationConfig& cfg) {
    if (cfg.params.has_value()) return *cfg.params;
    if (cfg.security.has_value()) return find_params(*cfg.security);
    throw ConfigError("simulation: either explicit params or a security config is required");
}

inline SimulationReport run_simulation(const SimulationConfig& cfg,
                                       std::vector<TraceEntry>* trace = nullptr,
                                       bool reveal_payloads = false) {
    const ProtocolParams params = resolve_simulation_params(cfg);
    if (params.n > kMaxFullSimulation) {
        throw ConfigError("simulation: n > 10^6 needs run_scaled_benchmark");
    }
    if (params.n < 2 || params.g < 2 || params.t < 1 || params.k < 1 || params.m < 2) {
        throw ConfigError("simulation: malformed protocol parameters");
    }
    if (params.g > params.n) throw ConfigError("simulation: group size exceeds federation");
    if (cfg.length < 1) throw ConfigError("simulation: vector length must be >= 1");
    if (cfg.dropouts.fraction < 0.0 || cfg.dropouts.fraction >= 1.0) {
        throw ConfigError("simulation: dropout fraction must be in [0, 1)");
    }
    const std::uint32_t n = static_cast<std::uint32_t>(params.n);
    const Field field(cfg.modulus);
    const ProtocolConfig pcfg{params, field, cfg.length};

    // group layout, fixed before any protocol step
    std::vector<ClientId> perm;
    if (cfg.permutation_override.has_value()) {
        perm = *cfg.permutation_override;
        if (perm.size() != n) throw ConfigError("simulation: permutation override size mismatch");
        std::vector<bool> seen(n, false);
        for (ClientId id : perm) {
            if (id >= n || seen[id]) throw ConfigError("simulation: override is not a permutation");
            seen[id] = true;
        }
    } else {
        perm = derive_permutation(cfg.seed, n);
    }
    std::vector<GroupAssignment> assignments;
    assignments.reserve(params.m);
    std::size_t max_group = 0;
    for (std::uint32_t r = 0; r < params.m; ++r) {
        assignments.push_back(assign_round(perm, params.g, r));
        for (const auto& group : assignments.back().groups) {
            max_group = std::max(max_group, group.size());
            if (group.size() < pcfg.required_shares()) {
                throw InfeasibleError("simulation: a round-" + std::to_string(r) + " group of " +
                                          std::to_string(group.size()) + " cannot reach " +
                                          std::to_string(pcfg.required_shares()) + " shares",
                                      "group-size");
            }
        }
    }
    if (max_group + params.k >= field.p || params.m + 1ull >= field.p) {
        throw InfeasibleError("simulation: field too small for the sharing layout", "field-size");
    }

    // inputs
    std::vector<std::vector<FieldElement>> inputs;
    switch (cfg.input_model) {
        case InputModel::Random: {
            Rng rng(cfg.seed, detail::kStreamInputs);
            inputs.resize(n);
            for (std::uint32_t id = 0; id < n; ++id) {
                inputs[id].reserve(cfg.length);
                for (std::size_t e = 0; e < cfg.length; ++e) inputs[id].push_back(field.random(rng));
            }
            break;
        }
        case InputModel::Fixed: {
            if (cfg.fixed_inputs.size() != static_cast<std::size_t>(n) * cfg.length) {
                throw ConfigError("simulation: fixed input block must hold n*L values");
            }
            inputs.resize(n);
            for (std::uint32_t id = 0; id < n; ++id) {
                inputs[id].reserve(cfg.length);
                for (std::size_t e = 0; e < cfg.length; ++e) {
                    inputs[id].push_back(field.elem(cfg.fixed_inputs[id * cfg.length + e]));
                }
            }
            break;
        }
        case InputModel::File:
            inputs = load_input_file(cfg.input_path, n, cfg.length, field);
            break;
    }

    // dropout draw
    std::vector<bool> dropped_before(n, false), dropped_after(n, false);
    std::uint32_t before_count = 0, after_count = 0;
    const std::uint32_t injected = static_cast<std::uint32_t>(
        shard::detail::count_from_fraction(cfg.dropouts.fraction, n));
    {
        Rng rng(cfg.seed, detail::kStreamDropouts);
        std::vector<ClientId> ids(n);
        for (std::uint32_t i = 0; i < n; ++i) ids[i] = i;
        rng.shuffle(ids);
        for (std::uint32_t i = 0; i < injected; ++i) {
            const bool before = cfg.dropouts.timing == DropoutTiming::BeforeShares ||
                                (cfg.dropouts.timing == DropoutTiming::Mixed && rng.below(2) == 0);
            if (before) {
                dropped_before[ids[i]] = true;
                ++before_count;
            } else {
                dropped_after[ids[i]] = true;
                ++after_count;
            }
        }
    }

    // coalition membership (semi-honest observer)
    std::vector<bool> corrupt(n, false);
    std::vector<ClientId> corrupt_ids;
    if (cfg.adversary.kind == AdversaryKind::SemiHonestObserver) {
        for (ClientId id : cfg.adversary.forced_corrupt) {
            if (id >= n) throw ConfigError("simulation: forced corrupt id out of range");
            if (!corrupt[id]) {
                corrupt[id] = true;
                corrupt_ids.push_back(id);
            }
        }
        const std::uint64_t want =
            shard::detail::count_from_fraction(cfg.adversary.corrupt_fraction, n);
        if (want > corrupt_ids.size()) {
            Rng rng(cfg.seed, detail::kStreamCorrupt);
            std::vector<ClientId> ids(n);
            for (std::uint32_t i = 0; i < n; ++i) ids[i] = i;
            rng.shuffle(ids);
            for (ClientId id : ids) {
                if (corrupt_ids.size() >= want) break;
                if (!corrupt[id]) {
                    corrupt[id] = true;
                    corrupt_ids.push_back(id);
                }
            }
        }
        std::sort(corrupt_ids.begin(), corrupt_ids.end());
    }

    // mutation plan
    Rng adv_rng(cfg.seed, detail::kStreamAdversary);
    std::vector<detail::MutationTarget> mutation_targets;
    const bool mutator = cfg.adversary.kind == AdversaryKind::MaliciousMutator;
    if (mutator && cfg.adversary.mutate_exactly.has_value()) {
        std::vector<MsgKind> kinds;
        if (cfg.adversary.target_kinds & kMutateShares) kinds.push_back(MsgKind::ShareDelivery);
        if (cfg.adversary.target_kinds & kMutateBroadcasts) kinds.push_back(MsgKind::SumBroadcast);
        if (cfg.adversary.target_kinds & kMutateReports) kinds.push_back(MsgKind::GroupSumReport);
        if (kinds.empty()) throw ConfigError("simulation: mutator with no target kinds");
        std::vector<ClientId> live_share, live_late;
        for (ClientId id = 0; id < n; ++id) {
            if (!dropped_before[id]) live_share.push_back(id);
            if (!dropped_before[id] && !dropped_after[id]) live_late.push_back(id);
        }
        for (std::uint32_t i = 0; i < *cfg.adversary.mutate_exactly; ++i) {
            detail::MutationTarget target;
            target.kind = kinds[adv_rng.below(kinds.size())];
            target.round = static_cast<std::uint32_t>(adv_rng.below(params.m));
            const std::vector<ClientId>& pool =
                target.kind == MsgKind::ShareDelivery ? live_share : live_late;
            if (pool.empty()) throw ConfigError("simulation: no live client to impersonate");
            target.sender = pool[adv_rng.below(pool.size())];
            const GroupAssignment& assignment = assignments[target.round];
            const auto& members = assignment.groups[assignment.group_of[target.sender]];
            if (target.kind == MsgKind::GroupSumReport) {
                target.receiver = kServerId;
            } else if (target.kind == MsgKind::ShareDelivery) {
                target.receiver = members[adv_rng.below(members.size())];
            } else {
                ClientId peer = target.sender;
                while (peer == target.sender) peer = members[adv_rng.below(members.size())];
                target.receiver = peer;
            }
            mutation_targets.push_back(target);
        }
    }

    // ledger + counters
    SimulationReport report;
    report.params = params;
    report.modulus = field.p;
    report.field_bits = field.bits();
    report.length = cfg.length;
    report.seed = cfg.seed;
    report.dropouts_injected = injected;
    report.dropouts_before = before_count;
    report.dropouts_after = after_count;
    report.corrupt_ids = corrupt_ids;
    report.counters.uplink_bytes_per_client.assign(n, 0);
    report.group_dropouts.resize(params.m);
    report.group_corrupt_counts.resize(params.m);
    for (std::uint32_t r = 0; r < params.m; ++r) {
        report.group_dropouts[r].assign(assignments[r].groups.size(), 0);
        report.group_corrupt_counts[r].assign(assignments[r].groups.size(), 0);
        for (ClientId id = 0; id < n; ++id) {
            if (dropped_before[id] || dropped_after[id]) {
                report.group_dropouts[r][assignments[r].group_of[id]] += 1;
            }
            if (!corrupt_ids.empty() && corrupt[id]) {
                report.group_corrupt_counts[r][assignments[r].group_of[id]] += 1;
            }
        }
    }
    const bool observer = cfg.adversary.kind == AdversaryKind::SemiHonestObserver;
    if (observer) {
        report.observed_shares.assign(params.m, std::vector<std::uint32_t>(n, 0));
    }
    if (observer || cfg.permutation_override.has_value()) report.permutation = perm;

    // participants
    std::vector<ClientState> clients;
    clients.reserve(n);
    std::vector<double> client_ms(n, 0.0);
    for (ClientId id = 0; id < n; ++id) {
        std::vector<GroupView> views;
        views.reserve(params.m);
        for (std::uint32_t r = 0; r < params.m; ++r) views.push_back(make_group_view(assignments[r], id));
        clients.emplace_back(id, &pcfg, inputs[id], std::move(views));
    }
    ServerState server(&pcfg, assignments);

    const std::size_t elem_bytes = field.bytes_per_element();
    Rng delivery_rng(cfg.seed, detail::kStreamDelivery);

    auto eligible_for_rate = [&](MsgKind kind) {
        switch (kind) {
            case MsgKind::ShareDelivery: return (cfg.adversary.target_kinds & kMutateShares) != 0;
            case MsgKind::SumBroadcast: return (cfg.adversary.target_kinds & kMutateBroadcasts) != 0;
            case MsgKind::GroupSumReport: return (cfg.adversary.target_kinds & kMutateReports) != 0;
            default: return false;
        }
    };

    auto deliver_burst = [&](std::vector<Message>&& burst) {
        std::vector<std::size_t> order(burst.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        delivery_rng.shuffle(order);
        for (std::size_t i : order) {
            Message& msg = burst[i];
            if (mutator && !msg.payload.empty()) {
                bool hit = false;
                if (!mutation_targets.empty()) {
                    for (auto it = mutation_targets.begin(); it != mutation_targets.end(); ++it) {
                        if (it->kind == msg.kind && it->sender == msg.sender &&
                            it->receiver == msg.receiver && it->round == msg.round) {
                            hit = true;
                            mutation_targets.erase(it);
                            break;
                        }
                    }
                } else if (cfg.adversary.mutation_rate > 0.0 && eligible_for_rate(msg.kind)) {
                    hit = adv_rng.chance() < cfg.adversary.mutation_rate;
                }
                if (hit) {
                    const std::size_t at = adv_rng.below(msg.payload.size());
                    msg.payload[at] += field.elem(1 + adv_rng.below(field.p - 1));
                    report.mutations_applied += 1;
                }
            }

            const std::size_t kind_idx = static_cast<std::size_t>(msg.kind);
            const std::uint64_t nbytes = msg.payload.size() * elem_bytes;
            report.counters.messages[kind_idx] += 1;
            report.counters.bytes[kind_idx] += nbytes;
            if (msg.sender != kServerId) {
                report.counters.client_uplink_messages += 1;
                report.counters.client_uplink_bytes += nbytes;
                report.counters.uplink_bytes_per_client[msg.sender] += nbytes;
            }
            if (trace != nullptr) {
                TraceEntry entry{msg.kind, msg.sender, msg.receiver, msg.round, msg.payload.size(), {}};
                if (reveal_payloads) {
                    entry.values.reserve(msg.payload.size());
                    for (const FieldElement& v : msg.payload) entry.values.push_back(v.value());
                }
                trace->push_back(std::move(entry));
            }

            if (msg.receiver == kServerId) {
                report.counters.server_rx_messages += 1;
                report.counters.server_rx_bytes += nbytes;
                server.receive(msg);
                continue;
            }
            if (dropped_before[msg.receiver]) continue;  // nobody home
            if (observer && msg.kind == MsgKind::ShareDelivery && corrupt[msg.receiver] &&
                !corrupt[msg.sender] && msg.receiver != msg.sender) {
                report.observed_shares[msg.round][msg.sender] += 1;
            }
            clients[msg.receiver].receive(msg);
        }
    };

    // phase 1: share distribution (all m rounds ship atomically)
    {
        std::vector<ClientId> order(n);
        for (std::uint32_t i = 0; i < n; ++i) order[i] = i;
        delivery_rng.shuffle(order);
        for (ClientId id : order) {
            if (dropped_before[id]) continue;
            Rng crng(cfg.seed, detail::kStreamClientBase + id);
            std::vector<Message> burst;
            {
                detail::ScopedTimer timer(client_ms[id]);
                burst = clients[id].distribute_shares(crng);
            }
            deliver_burst(std::move(burst));
        }
    }

    // phase 2: sum broadcasts
    {
        std::vector<ClientId> order(n);
        for (std::uint32_t i = 0; i < n; ++i) order[i] = i;
        delivery_rng.shuffle(order);
        for (ClientId id : order) {
            if (dropped_before[id] || dropped_after[id]) continue;
            std::vector<Message> burst;
            {
                detail::ScopedTimer timer(client_ms[id]);
                burst = clients[id].broadcast_sums();
            }
            deliver_burst(std::move(burst));
        }
    }

    // phase 3: group sum reports
    {
        std::vector<ClientId> order(n);
        for (std::uint32_t i = 0; i < n; ++i) order[i] = i;
        delivery_rng.shuffle(order);
        for (ClientId id : order) {
            if (dropped_before[id] || dropped_after[id]) continue;
            std::vector<Message> burst;
            {
                detail::ScopedTimer timer(client_ms[id]);
                burst = clients[id].report_sums();
            }
            deliver_burst(std::move(burst));
        }
    }

    // phase 4: surviving clients surface any abort raised after reporting
    for (ClientId id = 0; id < n; ++id) {
        if (dropped_before[id] || dropped_after[id]) continue;
        deliver_burst(clients[id].flush_abort());
    }

    // phase 5: server verdict
    ServerOutcome outcome;
    {
        detail::ScopedTimer timer(report.timing.server_ms);
        outcome = server.finalize();
    }

    switch (outcome.status) {
        case ServerStatus::Output: report.verdict = Verdict::Output; break;
        case ServerStatus::AbortTamper: report.verdict = Verdict::AbortTamper; break;
        case ServerStatus::AbortAvailability: report.verdict = Verdict::AbortAvailability; break;
    }
    report.abort_reason = outcome.reason;
    report.failed_groups = outcome.failed_groups;

    // plaintext oracle over the covered set (everyone whose shares shipped)
    std::vector<FieldElement> oracle(cfg.length, field.zero());
    for (ClientId id = 0; id < n; ++id) {
        if (dropped_before[id]) {
            report.excluded_before_shares.push_back(id);
            continue;
        }
        if (dropped_after[id]) report.dropped_after_shares.push_back(id);
        report.covered_count += 1;
        for (std::size_t e = 0; e < cfg.length; ++e) oracle[e] += inputs[id][e];
    }
    report.oracle_sum.reserve(cfg.length);
    for (const FieldElement& v : oracle) report.oracle_sum.push_back(v.value());
    if (report.verdict == Verdict::Output) {
        report.output.reserve(cfg.length);
        for (const FieldElement& v : outcome.output) report.output.push_back(v.value());
        report.match = report.output == report.oracle_sum;
    }

    double total = 0.0, peak = 0.0;
    for (double ms : client_ms) {
        total += ms;
        peak = std::max(peak, ms);
    }
    report.timing.client_total_ms = total;
    report.timing.client_max_ms = peak;
    report.timing.client_avg_ms = n > 0 ? total / n : 0.0;
    return report;
}

// Privacy accounting over a finished observer run: every honest client's
// share exposure must equal the number of corrupt members in its group, and a
// group becomes corruption-exposed exactly when it holds >= t corrupt
// members. Also re-checks honest-graph connectivity.
struct LedgerVerdict {
    bool clean = true;
    std::uint64_t accounting_violations = 0;
    bool connectivity_ok = true;
    struct Exposure {
        std::uint32_t round;
        std::uint32_t group;
        std::uint32_t corrupt_members;
    };
    std::vector<Exposure> exposures;
};

inline LedgerVerdict verify_privacy_ledger(const SimulationReport& report) {
    LedgerVerdict verdict;
    const std::uint32_t n = static_cast<std::uint32_t>(report.params.n);
    const std::vector<ClientId> perm =
        report.permutation.empty() ? derive_permutation(report.seed, n) : report.permutation;
    std::vector<bool> corrupt(n, false);
    for (ClientId id : report.corrupt_ids) corrupt[id] = true;
    std::vector<bool> gone(n, false);
    for (ClientId id : report.excluded_before_shares) gone[id] = true;

    std::vector<GroupAssignment> assignments;
    for (std::uint32_t r = 0; r < report.params.m; ++r) {
        assignments.push_back(assign_round(perm, report.params.g, r));
    }

    for (std::uint32_t r = 0; r < report.params.m; ++r) {
        const GroupAssignment& assignment = assignments[r];
        std::vector<std::uint32_t> corrupt_in_group(assignment.groups.size(), 0);
        for (ClientId id = 0; id < n; ++id) {
            if (corrupt[id]) corrupt_in_group[assignment.group_of[id]] += 1;
        }
        for (std::uint32_t gi = 0; gi < assignment.groups.size(); ++gi) {
            if (corrupt_in_group[gi] >= report.params.t) {
                verdict.exposures.push_back({r, gi, corrupt_in_group[gi]});
            }
        }
        if (!report.observed_shares.empty()) {
            for (ClientId id = 0; id < n; ++id) {
                if (corrupt[id] || gone[id]) continue;
                // expected views: corrupt group mates that were alive to receive
                std::uint32_t expected = 0;
                for (ClientId peer : assignment.groups[assignment.group_of[id]]) {
                    if (peer != id && corrupt[peer] && !gone[peer]) expected += 1;
                }
                const std::uint32_t seen = report.observed_shares[r][id];
                if (seen != expected ||
                    (seen >= report.params.t &&
                     corrupt_in_group[assignment.group_of[id]] < report.params.t)) {
                    verdict.accounting_violations += 1;
                }
            }
        }
    }

    std::vector<bool> honest(n, false);
    for (ClientId id = 0; id < n; ++id) honest[id] = !corrupt[id];
    verdict.connectivity_ok = is_connected(build_honest_graph(assignments, honest));
    verdict.clean = verdict.accounting_violations == 0 && verdict.connectivity_ok;
    return verdict;
}

// --- scaled benchmark ------------------------------------------------------

struct BenchReport {
    std::uint64_t n = 0;
    std::size_t length = 1;
    ProtocolParams params;
    std::uint32_t groups_sampled = 0;
    std::uint64_t total_groups = 0;
    double sampling_factor = 1.0;
    double client_ms_per_client = 0.0;
    double server_ms = 0.0;
    std::uint64_t reports_processed = 0;

    nlohmann::json to_json() const;
    std::string to_csv_row() const;
    static std::string csv_header();
};

// Timing at federation scale: client-side work runs for `groups_sampled`
// representative groups only, while the server-side aggregation consumes a
// synthesized-but-consistent report stream for every group of every round.
inline BenchReport run_scaled_benchmark(const SimulationConfig& cfg, std::uint32_t groups_sampled) {
    const ProtocolParams params = resolve_simulation_params(cfg);
    const Field field(cfg.modulus);
    const ProtocolConfig pcfg{params, field, cfg.length};
    const std::uint64_t groups_per_round = std::max<std::uint64_t>(1, params.n / params.g);
    const std::uint64_t total_groups = groups_per_round * params.m;
    if (groups_sampled < 1 || groups_sampled > total_groups) {
        throw ConfigError("benchmark: groups_sampled must be in [1, total groups]");
    }
    if (params.g + params.k >= field.p) {
        throw InfeasibleError("benchmark: field too small for the sharing layout", "field-size");
    }

    BenchReport report;
    report.n = params.n;
    report.length = cfg.length;
    report.params = params;
    report.groups_sampled = groups_sampled;
    report.total_groups = total_groups;
    report.sampling_factor = static_cast<double>(total_groups) / groups_sampled;

    Rng rng(cfg.seed, detail::kStreamInputs);
    const std::uint32_t g = params.g;
    const std::size_t blocks = pcfg.blocks();

    // client side: full per-client work (shard split, share generation, share
    // summing, group-sum reconstruction) inside sampled pods of g clients
    double client_ms = 0.0;
    std::uint64_t clients_timed = 0;
    for (std::uint32_t pod = 0; pod < groups_sampled; ++pod) {
        std::vector<std::vector<FieldElement>> pod_inputs(g);
        for (std::uint32_t i = 0; i < g; ++i) {
            pod_inputs[i].reserve(cfg.length);
            for (std::size_t e = 0; e < cfg.length; ++e) pod_inputs[i].push_back(field.random(rng));
        }
        detail::ScopedTimer timer(client_ms);
        // received[j][r] accumulates what member j holds of round r
        std::vector<std::vector<std::vector<FieldElement>>> received(
            g, std::vector<std::vector<FieldElement>>(params.m,
                                                      std::vector<FieldElement>(blocks, field.zero())));
        for (std::uint32_t i = 0; i < g; ++i) {
            auto shards = client_shard_split(std::span<const FieldElement>(pod_inputs[i]), params.m, rng);
            for (std::uint32_t r = 0; r < params.m; ++r) {
                ShareVector sv = share_vector(params.t, g, params.k, shards[r], rng);
                for (std::uint32_t j = 0; j < g; ++j) {
                    for (std::size_t b = 0; b < blocks; ++b) received[j][r][b] += sv.rows[j][b];
                }
            }
        }
        std::vector<FieldElement> points;
        points.reserve(g);
        for (std::uint32_t j = 0; j < g; ++j) points.push_back(share_point(field, j));
        for (std::uint32_t i = 0; i < g; ++i) {
            for (std::uint32_t r = 0; r < params.m; ++r) {
                std::vector<std::vector<FieldElement>> rows;
                rows.reserve(g);
                for (std::uint32_t j = 0; j < g; ++j) rows.push_back(received[j][r]);
                if (params.malicious) {
                    (void)reconstruct_rows_verified(points, rows, params.t, params.k, cfg.length);
                } else {
                    (void)reconstruct_rows(points, rows, params.t, params.k, cfg.length);
                }
            }
        }
        clients_timed += g;
    }
    report.client_ms_per_client = clients_timed > 0 ? client_ms / clients_timed : 0.0;

    // server side: verify-and-add over every group's reports, in batches so
    // memory stays flat, then reconstruct across rounds
    std::vector<std::vector<FieldElement>> round_sums(
        params.m, std::vector<FieldElement>(cfg.length, field.zero()));
    const std::uint64_t batch = 4096;
    std::vector<std::vector<FieldElement>> batch_rows;
    for (std::uint32_t r = 0; r < params.m; ++r) {
        std::uint64_t done = 0;
        while (done < groups_per_round) {
            const std::uint64_t count = std::min(batch, groups_per_round - done);
            batch_rows.assign(count, {});
            for (std::uint64_t i = 0; i < count; ++i) {
                batch_rows[i].reserve(cfg.length);
                for (std::size_t e = 0; e < cfg.length; ++e) batch_rows[i].push_back(field.random(rng));
            }
            detail::ScopedTimer timer(report.server_ms);
            std::vector<FieldElement> scratch;
            for (std::uint64_t i = 0; i < count; ++i) {
                const std::vector<FieldElement>& common = batch_rows[i];
                bool consistent = true;
                for (std::uint32_t member = 0; member < g; ++member) {
                    // ingest each member's copy and check it against the first
                    scratch = common;
                    consistent = consistent && std::equal(scratch.begin(), scratch.end(), common.begin());
                }
                if (consistent) {
                    for (std::size_t e = 0; e < cfg.length; ++e) round_sums[r][e] += common[e];
                }
                report.reports_processed += g;
            }
            done += count;
        }
    }
    {
        detail::ScopedTimer timer(report.server_ms);
        std::vector<FieldElement> points;
        points.reserve(params.m);
        for (std::uint32_t r = 0; r < params.m; ++r) points.push_back(share_point(field, r));
        (void)reconstruct_rows(points, round_sums, params.m, 1, cfg.length);
    }
    return report;
}

// --- serialization ---------------------------------------------------------

inline nlohmann::json SimulationReport::to_json(bool include_timing) const {
    nlohmann::json j;
    j["params"] = {{"g", params.g},
                   {"t", params.t},
                   {"k", params.k},
                   {"m", params.m},
                   {"n", params.n},
                   {"malicious", params.malicious},
                   {"neighbors", params.total_neighbors()},
                   {"required_shares", params.required_shares()}};
    j["field"] = {{"modulus", modulus}, {"bits", field_bits}};
    j["length"] = length;
    j["seed"] = seed;
    j["verdict"] = verdict_name(verdict);
    j["abort_reason"] = abort_reason;
    j["output"] = output;
    j["oracle_sum"] = oracle_sum;
    j["match"] = match;
    j["covered"] = {{"count", covered_count},
                    {"excluded_before_shares", excluded_before_shares},
                    {"dropped_after_shares", dropped_after_shares}};
    j["counters"] = {
        {"messages",
         {{"share", counters.messages[0]},
          {"broadcast", counters.messages[1]},
          {"report", counters.messages[2]},
          {"abort", counters.messages[3]}}},
        {"bytes",
         {{"share", counters.bytes[0]},
          {"broadcast", counters.bytes[1]},
          {"report", counters.bytes[2]},
          {"abort", counters.bytes[3]}}},
        {"total_bytes", counters.total_bytes()},
        {"client_uplink_messages", counters.client_uplink_messages},
        {"client_uplink_bytes", counters.client_uplink_bytes},
        {"server_rx_messages", counters.server_rx_messages},
        {"server_rx_bytes", counters.server_rx_bytes},
        {"server_tx_bytes", counters.server_tx_bytes}};
    j["dropouts"] = {{"injected", dropouts_injected},
                     {"before_shares", dropouts_before},
                     {"after_shares", dropouts_after},
                     {"per_group", group_dropouts},
                     {"failed_groups", failed_groups}};
    j["adversary"] = {{"corrupt_ids", corrupt_ids},
                      {"group_corrupt_counts", group_corrupt_counts},
                      {"mutations_applied", mutations_applied}};
    if (!observed_shares.empty()) j["adversary"]["observed_shares"] = observed_shares;
    j["phases"] = phases;
    if (include_timing) {
        j["timing"] = {{"client_total_ms", timing.client_total_ms},
                       {"client_avg_ms", timing.client_avg_ms},
                       {"client_max_ms", timing.client_max_ms},
                       {"server_ms", timing.server_ms}};
    }
    return j;
}

inline std::string SimulationReport::csv_header() {
    return "n,g,t,k,m,malicious,length,seed,verdict,match,covered,client_uplink_bytes,"
           "server_rx_bytes,client_avg_ms,server_ms";
}

inline std::string SimulationReport::to_csv_row() const {
    std::ostringstream row;
    row << params.n << ',' << params.g << ',' << params.t << ',' << params.k << ',' << params.m
        << ',' << (params.malicious ? 1 : 0) << ',' << length << ',' << seed << ','
        << verdict_name(verdict) << ',' << (match ? 1 : 0) << ',' << covered_count << ','
        << counters.client_uplink_bytes << ',' << counters.server_rx_bytes << ','
        << timing.client_avg_ms << ',' << timing.server_ms;
    return row.str();
}

inline nlohmann::json BenchReport::to_json() const {
    return nlohmann::json{{"n", n},
                          {"length", length},
                          {"g", params.g},
                          {"t", params.t},
                          {"k", params.k},
                          {"m", params.m},
                          {"malicious", params.malicious},
                          {"groups_sampled", groups_sampled},
                          {"total_groups", total_groups},
                          {"sampling_factor", sampling_factor},
                          {"client_ms_per_client", client_ms_per_client},
                          {"server_ms", server_ms},
                          {"reports_processed", reports_processed}};
}

inline std::string BenchReport::csv_header() {
    return "n,length,mode,g,t,k,client_ms_per_client,server_ms,sampled_groups,total_groups";
}

inline std::string BenchReport::to_csv_row() const {
    std::ostringstream row;
    row << n << ',' << length << ',' << (params.malicious ? "malicious" : "semi-honest") << ','
        << params.g << ',' << params.t << ',' << params.k << ',' << client_ms_per_client << ','
        << server_ms << ',' << groups_sampled << ',' << total_groups;
    return row.str();
}

}  // namespace shard

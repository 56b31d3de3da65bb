#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "shard/common.hpp"
#include "shard/field.hpp"
#include "shard/groups.hpp"
#include "shard/params.hpp"
#include "shard/shamir.hpp"

namespace shard {

// Message-passing state machines for the aggregation protocol. A client
// splits its input vector into m shards (an element-wise m-of-m sharing),
// then aggregates shard r inside its round-r group: packed shares go to every
// group member, members broadcast their share sums, everyone reconstructs the
// group sum and reports it to the server. The server checks that co-grouped
// reports agree, adds the group sums per round, and reconstructs the final
// output from the m round sums.
//
// All m share deliveries leave a client in one step, so a later dropout
// leaves either none or all of its shards in the aggregate; that is what
// makes dropouts free of any recovery phase.

enum class MsgKind : std::uint8_t { ShareDelivery, SumBroadcast, GroupSumReport, Abort };

inline const char* msg_kind_name(MsgKind k) {
    switch (k) {
        case MsgKind::ShareDelivery: return "share";
        case MsgKind::SumBroadcast: return "broadcast";
        case MsgKind::GroupSumReport: return "report";
        case MsgKind::Abort: return "abort";
    }
    return "?";
}

struct Message {
    MsgKind kind = MsgKind::Abort;
    ClientId sender = 0;
    ClientId receiver = 0;
    std::uint32_t round = 0;
    std::vector<FieldElement> payload;
};

struct ProtocolConfig {
    ProtocolParams params;
    Field field{kDefaultModulus};
    std::size_t length = 1;  // L

    std::size_t blocks() const { return (length + params.k - 1) / params.k; }
    std::uint32_t required_shares() const { return params.required_shares(); }
};

// One client's slot in its round-r group.
struct GroupView {
    std::uint32_t group_id = 0;
    std::vector<ClientId> members;
    std::uint32_t my_index = 0;
};

inline GroupView make_group_view(const GroupAssignment& assignment, ClientId id) {
    GroupView view;
    view.group_id = assignment.group_of[id];
    view.members = assignment.groups[view.group_id];
    view.my_index = assignment.index_in_group[id];
    return view;
}

// Element-wise m-of-m split of a vector; the m shard vectors reconstruct the
// input and any m-1 of them are uniformly random.
template <UniformBitRng R>
std::vector<std::vector<FieldElement>> client_shard_split(std::span<const FieldElement> v,
                                                          std::uint32_t m, R& rng) {
    if (m < 2) throw ConfigError("protocol: need at least 2 shards");
    ShareVector sv = share_vector(m, m, 1, v, rng);
    return std::move(sv.rows);
}

enum class ClientPhase : std::uint8_t { Init, SharesSent, SumsBroadcast, Reported };

class ClientState {
public:
    ClientState(ClientId id, const ProtocolConfig* cfg, std::vector<FieldElement> input,
                std::vector<GroupView> groups)
        : id_(id), cfg_(cfg), input_(std::move(input)), groups_(std::move(groups)) {
        if (input_.size() != cfg_->length) throw ConfigError("protocol: input length mismatch");
        if (groups_.size() != cfg_->params.m) throw ConfigError("protocol: need one group per round");
        for (const GroupView& gv : groups_) {
            if (gv.members.size() < cfg_->required_shares()) {
                throw InfeasibleError("protocol: group of " + std::to_string(gv.members.size()) +
                                          " cannot reach " + std::to_string(cfg_->required_shares()) +
                                          " shares",
                                      "group-size");
            }
        }
        const std::uint32_t m = cfg_->params.m;
        received_shares_.resize(m);
        received_broadcasts_.resize(m);
        sum_rows_.resize(m);
        round_failed_.assign(m, false);
        for (std::uint32_t r = 0; r < m; ++r) {
            received_shares_[r].resize(groups_[r].members.size());
            received_broadcasts_[r].resize(groups_[r].members.size());
        }
    }

    ClientId id() const { return id_; }
    ClientPhase phase() const { return phase_; }
    bool aborted() const { return aborted_; }
    const std::string& abort_reason() const { return abort_reason_; }
    bool round_failed(std::uint32_t r) const { return round_failed_[r]; }
    const std::vector<FieldElement>& group_sum(std::uint32_t r) const { return group_sums_[r]; }
    const GroupView& group(std::uint32_t r) const { return groups_[r]; }

    std::uint32_t missing_share_senders(std::uint32_t r) const {
        std::uint32_t missing = 0;
        for (const auto& row : received_shares_[r]) {
            if (!row.has_value()) ++missing;
        }
        return missing;
    }

    // Round 1: shard the input and emit one packed share row per group member
    // (own row included) for every shard round, all in one burst.
    template <UniformBitRng R>
    std::vector<Message> distribute_shares(R& rng) {
        if (phase_ != ClientPhase::Init) throw ConfigError("protocol: shares already sent");
        phase_ = ClientPhase::SharesSent;
        shards_ = client_shard_split(input_, cfg_->params.m, rng);

        std::vector<Message> out;
        for (std::uint32_t r = 0; r < cfg_->params.m; ++r) {
            const GroupView& gv = groups_[r];
            ShareVector sv = share_vector(cfg_->params.t, static_cast<std::uint32_t>(gv.members.size()),
                                          cfg_->params.k, shards_[r], rng);
            for (std::uint32_t j = 0; j < gv.members.size(); ++j) {
                out.push_back(Message{MsgKind::ShareDelivery, id_, gv.members[j], r,
                                      std::move(sv.rows[j])});
            }
        }
        return out;
    }

    // Any ill-formed or untimely message poisons the client; it will emit a
    // single Abort at its next turn to speak and otherwise stay silent.
    // Peers within a phase act in arbitrary order, so a message is timely
    // while this client is at most one step behind the sender.
    void receive(const Message& msg) {
        if (aborted_) return;
        switch (msg.kind) {
            case MsgKind::ShareDelivery:
                if (phase_ != ClientPhase::Init && phase_ != ClientPhase::SharesSent) {
                    return abort("untimely share delivery");
                }
                return accept_row(received_shares_, msg, "share");
            case MsgKind::SumBroadcast:
                if (phase_ != ClientPhase::SharesSent && phase_ != ClientPhase::SumsBroadcast) {
                    return abort("untimely sum broadcast");
                }
                return accept_row(received_broadcasts_, msg, "broadcast");
            default:
                return abort("unexpected message kind");
        }
    }

    // Round 2: sum whatever share rows arrived and broadcast the result to
    // the group. Missing senders are dropouts; they simply contribute
    // nothing.
    std::vector<Message> broadcast_sums() {
        if (aborted_) return abort_burst();
        if (phase_ != ClientPhase::SharesSent) throw ConfigError("protocol: broadcast out of order");
        phase_ = ClientPhase::SumsBroadcast;

        std::vector<Message> out;
        for (std::uint32_t r = 0; r < cfg_->params.m; ++r) {
            const GroupView& gv = groups_[r];
            std::vector<FieldElement> sum(cfg_->blocks(), cfg_->field.zero());
            for (const auto& row : received_shares_[r]) {
                if (!row.has_value()) continue;
                for (std::size_t b = 0; b < sum.size(); ++b) sum[b] += (*row)[b];
            }
            sum_rows_[r] = sum;
            received_broadcasts_[r][gv.my_index] = sum;  // own broadcast, applied locally
            for (std::uint32_t j = 0; j < gv.members.size(); ++j) {
                if (j == gv.my_index) continue;
                out.push_back(Message{MsgKind::SumBroadcast, id_, gv.members[j], r, sum});
            }
        }
        return out;
    }

    // Last chance to speak: surfaces a pending Abort raised after the report
    // went out, otherwise stays silent.
    std::vector<Message> flush_abort() {
        if (aborted_) return abort_burst();
        return {};
    }

    // Round 3: reconstruct each group sum from the broadcast shares and
    // report it to the server. Plain reconstruction in semi-honest mode,
    // error-detecting reconstruction in malicious mode.
    std::vector<Message> report_sums() {
        if (aborted_) return abort_burst();
        if (phase_ != ClientPhase::SumsBroadcast) throw ConfigError("protocol: report out of order");
        phase_ = ClientPhase::Reported;

        group_sums_.assign(cfg_->params.m, {});
        std::vector<Message> out;
        for (std::uint32_t r = 0; r < cfg_->params.m; ++r) {
            std::vector<FieldElement> points;
            std::vector<std::vector<FieldElement>> rows;
            for (std::uint32_t j = 0; j < received_broadcasts_[r].size(); ++j) {
                if (!received_broadcasts_[r][j].has_value()) continue;
                points.push_back(share_point(cfg_->field, j));
                rows.push_back(*received_broadcasts_[r][j]);
            }
            if (points.size() < cfg_->required_shares()) {
                round_failed_[r] = true;  // availability event, not a privacy one
                continue;
            }
            std::vector<FieldElement> sum;
            if (cfg_->params.malicious) {
                VectorReconstruction rec = reconstruct_rows_verified(points, rows, cfg_->params.t,
                                                                     cfg_->params.k, cfg_->length);
                if (rec.tampered) {
                    abort("tampered broadcast in round " + std::to_string(r));
                    return abort_burst();
                }
                sum = std::move(rec.values);
            } else {
                sum = reconstruct_rows(points, rows, cfg_->params.t, cfg_->params.k, cfg_->length);
            }
            group_sums_[r] = sum;
            out.push_back(Message{MsgKind::GroupSumReport, id_, kServerId, r, std::move(sum)});
        }
        return out;
    }

private:
    using RowSlots = std::vector<std::optional<std::vector<FieldElement>>>;

    void abort(std::string reason) {
        if (!aborted_) {
            aborted_ = true;
            abort_reason_ = std::move(reason);
        }
    }

    std::vector<Message> abort_burst() {
        if (abort_sent_) return {};
        abort_sent_ = true;
        return {Message{MsgKind::Abort, id_, kServerId, 0, {}}};
    }

    void accept_row(std::vector<RowSlots>& sink, const Message& msg, const char* what) {
        if (msg.round >= cfg_->params.m) return abort(std::string(what) + ": round out of range");
        const GroupView& gv = groups_[msg.round];
        std::uint32_t idx = 0;
        for (; idx < gv.members.size(); ++idx) {
            if (gv.members[idx] == msg.sender) break;
        }
        if (idx == gv.members.size()) return abort(std::string(what) + ": sender outside group");
        if (msg.payload.size() != cfg_->blocks()) return abort(std::string(what) + ": bad payload size");
        for (const FieldElement& v : msg.payload) {
            if (v.modulus() != cfg_->field.p) return abort(std::string(what) + ": foreign field");
        }
        if (sink[msg.round][idx].has_value()) return abort(std::string(what) + ": duplicate sender");
        sink[msg.round][idx] = msg.payload;
    }

    ClientId id_;
    const ProtocolConfig* cfg_;
    std::vector<FieldElement> input_;
    std::vector<GroupView> groups_;
    std::vector<std::vector<FieldElement>> shards_;
    std::vector<RowSlots> received_shares_;
    std::vector<RowSlots> received_broadcasts_;
    std::vector<std::vector<FieldElement>> sum_rows_;
    std::vector<std::vector<FieldElement>> group_sums_;
    std::vector<bool> round_failed_;
    ClientPhase phase_ = ClientPhase::Init;
    bool aborted_ = false;
    bool abort_sent_ = false;
    std::string abort_reason_;
};

enum class ServerStatus : std::uint8_t { Output, AbortTamper, AbortAvailability };

struct ServerOutcome {
    ServerStatus status = ServerStatus::Output;
    std::string reason;
    std::vector<FieldElement> output;                    // valid when status == Output
    std::vector<std::vector<std::uint32_t>> failed_groups;  // per round, group ids without reports
};

class ServerState {
public:
    ServerState(const ProtocolConfig* cfg, std::vector<GroupAssignment> assignments)
        : cfg_(cfg), assignments_(std::move(assignments)) {
        if (assignments_.size() != cfg_->params.m) {
            throw ConfigError("protocol: need one assignment per shard round");
        }
        reports_.resize(assignments_.size());
        for (std::uint32_t r = 0; r < assignments_.size(); ++r) {
            reports_[r].resize(assignments_[r].groups.size());
        }
    }

    void receive(const Message& msg) {
        switch (msg.kind) {
            case MsgKind::Abort:
                abort_count_ += 1;
                return;
            case MsgKind::GroupSumReport: {
                if (msg.round >= assignments_.size()) return flag_tamper("report: round out of range");
                const GroupAssignment& assignment = assignments_[msg.round];
                if (msg.sender >= assignment.n) return flag_tamper("report: unknown sender");
                if (msg.payload.size() != cfg_->length) return flag_tamper("report: bad payload size");
                auto& group = reports_[msg.round][assignment.group_of[msg.sender]];
                if (group.count(msg.sender) != 0) return flag_tamper("report: duplicate sender");
                group.emplace(msg.sender, msg.payload);
                return;
            }
            default:
                return flag_tamper("server: unexpected message kind");
        }
    }

    std::uint32_t abort_count() const { return abort_count_; }

    // Verify the co-grouped reports agree, add up the per-round sums, and
    // reconstruct the output from the m round sums. A group with no reports
    // at all is an availability failure: its contribution is unrecoverable
    // and reconstruction across rounds would no longer cover a consistent
    // client set.
    ServerOutcome finalize() const {
        ServerOutcome out;
        out.failed_groups.resize(assignments_.size());
        if (abort_count_ > 0 || !tamper_reason_.empty()) {
            out.status = ServerStatus::AbortTamper;
            out.reason = !tamper_reason_.empty()
                             ? tamper_reason_
                             : std::to_string(abort_count_) + " client abort(s)";
            return out;
        }

        std::vector<std::vector<FieldElement>> round_sums;
        bool any_failed = false;
        for (std::uint32_t r = 0; r < assignments_.size(); ++r) {
            std::vector<FieldElement> sum(cfg_->length, cfg_->field.zero());
            for (std::uint32_t gi = 0; gi < reports_[r].size(); ++gi) {
                const auto& group = reports_[r][gi];
                if (group.empty()) {
                    out.failed_groups[r].push_back(gi);
                    any_failed = true;
                    continue;
                }
                const std::vector<FieldElement>& first = group.begin()->second;
                for (const auto& [sender, payload] : group) {
                    if (payload != first) {
                        out.status = ServerStatus::AbortTamper;
                        out.reason = "report mismatch in round " + std::to_string(r) + " group " +
                                     std::to_string(gi);
                        return out;
                    }
                }
                for (std::size_t e = 0; e < sum.size(); ++e) sum[e] += first[e];
            }
            round_sums.push_back(std::move(sum));
        }
        if (any_failed) {
            out.status = ServerStatus::AbortAvailability;
            out.reason = "group(s) below reconstruction threshold";
            return out;
        }

        std::vector<FieldElement> points;
        points.reserve(round_sums.size());
        for (std::uint32_t r = 0; r < round_sums.size(); ++r) {
            points.push_back(share_point(cfg_->field, r));
        }
        out.output = reconstruct_rows(points, round_sums, cfg_->params.m, 1, cfg_->length);
        return out;
    }

private:
    void flag_tamper(std::string reason) {
        if (tamper_reason_.empty()) tamper_reason_ = std::move(reason);
    }

    const ProtocolConfig* cfg_;
    std::vector<GroupAssignment> assignments_;
    std::vector<std::vector<std::map<ClientId, std::vector<FieldElement>>>> reports_;
    std::uint32_t abort_count_ = 0;
    std::string tamper_reason_;
};

}  // namespace shard

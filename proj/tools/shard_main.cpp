// Command-line front end: parameter planning, federation simulation,
// benchmarking, expansion-factor tables and protocol trace dumps.
//
// Exit codes: 0 success, 2 configuration error, 3 infeasible parameters,
// 4 protocol abort.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "shard/shard.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitInfeasible = 3;
constexpr int kExitAbort = 4;

struct CommonFlags {
    double n = 1000;
    std::uint32_t k = 1;
    std::uint32_t m = 2;
    std::size_t length = 1;
    double sigma = 40.0;
    double eta = 20.0;
    double gamma = 0.0;
    double delta = 0.0;
    bool malicious = false;
    std::uint64_t modulus = shard::kDefaultModulus;
    std::optional<std::uint64_t> seed;
    std::optional<std::uint32_t> g;
    std::optional<std::uint32_t> t;
    std::string out;
    std::string format = "json";
};

std::uint64_t parse_count(double value, const char* what) {
    if (value < 0 || value > 1e18) throw shard::ConfigError(std::string(what) + " out of range");
    return static_cast<std::uint64_t>(value + 0.5);
}

std::uint64_t pick_seed(const std::optional<std::uint64_t>& seed) {
    if (seed.has_value()) return *seed;
    std::random_device rd;
    const std::uint64_t chosen = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
    std::cerr << "no --seed given; using seed " << chosen << " (rerun with --seed " << chosen
              << " to reproduce)\n";
    return chosen;
}

int emit(const std::string& out_path, const std::string& text) {
    if (out_path.empty()) {
        std::cout << text << "\n";
        return kExitOk;
    }
    std::ofstream f(out_path);
    if (!f) {
        std::cerr << "error: cannot write " << out_path << "\n";
        return kExitConfig;
    }
    f << text << "\n";
    return kExitOk;
}

shard::SecurityConfig to_security(const CommonFlags& flags) {
    shard::SecurityConfig cfg;
    cfg.sigma = flags.sigma;
    cfg.eta = flags.eta;
    cfg.gamma = flags.gamma;
    cfg.delta = flags.delta;
    cfg.n = parse_count(flags.n, "--n");
    cfg.k = flags.k;
    cfg.m = flags.m;
    cfg.malicious = flags.malicious;
    return cfg;
}

// Explicit --g/--t beat the search; --t alone defaults to the largest legal
// threshold for the group.
std::optional<shard::ProtocolParams> explicit_params(const CommonFlags& flags) {
    if (!flags.g.has_value()) return std::nullopt;
    shard::ProtocolParams params;
    params.g = *flags.g;
    params.k = flags.k;
    params.m = flags.m;
    params.n = parse_count(flags.n, "--n");
    params.malicious = flags.malicious;
    const std::uint32_t extra = flags.malicious ? 1 : 0;
    if (*flags.g + 1 < flags.k + extra + 1) {
        throw shard::ConfigError("--g too small for --k in this mode");
    }
    params.t = flags.t.value_or(*flags.g + 1 - flags.k - extra);
    return params;
}

int cmd_params(const CommonFlags& flags, bool literal_pnd) {
    const shard::SecurityConfig cfg = to_security(flags);
    try {
        const shard::ProtocolParams params = shard::find_params(cfg);
        const shard::Field field(flags.modulus);
        nlohmann::json j{
            {"n", cfg.n},
            {"k", cfg.k},
            {"m", cfg.m},
            {"malicious", cfg.malicious},
            {"sigma", cfg.sigma},
            {"eta", cfg.eta},
            {"gamma", cfg.gamma},
            {"delta", cfg.delta},
            {"corrupt_count", static_cast<std::uint64_t>(std::floor(cfg.gamma * double(cfg.n) + 1e-9))},
            {"dropout_count", static_cast<std::uint64_t>(std::floor(cfg.delta * double(cfg.n) + 1e-9))},
            {"g", params.g},
            {"t", params.t},
            {"neighbors", params.total_neighbors()},
            {"achieved_sigma", params.achieved_sigma},
            {"achieved_eta", params.achieved_eta},
            {"field_bits", field.bits()},
            {"expansion_factor", shard::expansion_factor(params.g, params.k, field.bits())}};
        if (literal_pnd) {
            j["achieved_eta_literal_pnd"] = shard::achieved_availability(
                params.g, params.t, params.k, params.n, cfg.delta, params.m, params.malicious,
                /*literal_pnd=*/true);
        }
        return emit(flags.out, j.dump(2));
    } catch (const shard::InfeasibleError& e) {
        nlohmann::json j{{"error", e.what()}, {"binding_constraint", e.binding}};
        emit(flags.out, j.dump(2));
        return kExitInfeasible;
    }
}

shard::SimulationConfig to_sim_config(const CommonFlags& flags, std::uint64_t seed) {
    shard::SimulationConfig cfg;
    cfg.modulus = flags.modulus;
    cfg.length = flags.length;
    cfg.seed = seed;
    if (auto params = explicit_params(flags)) {
        cfg.params = *params;
    } else {
        cfg.security = to_security(flags);
    }
    return cfg;
}

struct SimulateFlags {
    double inject_dropouts = 0.0;
    std::string dropout_timing = "before";
    std::string adversary = "none";
    double corrupt_frac = 0.0;
    std::vector<std::uint32_t> forced_corrupt;
    double mutation_rate = 0.0;
    std::optional<std::uint32_t> mutate_count;
    std::string mutate_kinds = "share,broadcast,report";
    std::string inputs_file;
    std::vector<std::uint64_t> input_values;
    bool identity_perm = false;
};

std::uint32_t parse_kinds(const std::string& csv) {
    std::uint32_t mask = 0;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item == "share") {
            mask |= shard::kMutateShares;
        } else if (item == "broadcast") {
            mask |= shard::kMutateBroadcasts;
        } else if (item == "report") {
            mask |= shard::kMutateReports;
        } else if (!item.empty()) {
            throw shard::ConfigError("unknown message kind '" + item + "' in --mutate-kinds");
        }
    }
    if (mask == 0) throw shard::ConfigError("--mutate-kinds selected nothing");
    return mask;
}

void apply_simulate_flags(shard::SimulationConfig& cfg, const SimulateFlags& sim) {
    cfg.dropouts.fraction = sim.inject_dropouts;
    if (sim.dropout_timing == "before") {
        cfg.dropouts.timing = shard::DropoutTiming::BeforeShares;
    } else if (sim.dropout_timing == "after") {
        cfg.dropouts.timing = shard::DropoutTiming::AfterShares;
    } else if (sim.dropout_timing == "mixed") {
        cfg.dropouts.timing = shard::DropoutTiming::Mixed;
    } else {
        throw shard::ConfigError("--dropout-timing must be before|after|mixed");
    }
    if (sim.adversary == "none") {
        cfg.adversary.kind = shard::AdversaryKind::None;
    } else if (sim.adversary == "observe") {
        cfg.adversary.kind = shard::AdversaryKind::SemiHonestObserver;
        cfg.adversary.corrupt_fraction = sim.corrupt_frac;
        cfg.adversary.forced_corrupt.assign(sim.forced_corrupt.begin(), sim.forced_corrupt.end());
    } else if (sim.adversary == "mutate") {
        cfg.adversary.kind = shard::AdversaryKind::MaliciousMutator;
        cfg.adversary.mutation_rate = sim.mutation_rate;
        cfg.adversary.mutate_exactly = sim.mutate_count;
        cfg.adversary.target_kinds = parse_kinds(sim.mutate_kinds);
        if (!sim.mutate_count.has_value() && sim.mutation_rate <= 0.0) {
            cfg.adversary.mutate_exactly = 1;  // one tampered message by default
        }
    } else {
        throw shard::ConfigError("--adversary must be none|observe|mutate");
    }
    if (!sim.inputs_file.empty()) {
        cfg.input_model = shard::InputModel::File;
        cfg.input_path = sim.inputs_file;
    } else if (!sim.input_values.empty()) {
        cfg.input_model = shard::InputModel::Fixed;
        cfg.fixed_inputs = sim.input_values;
    }
}

int cmd_simulate(const CommonFlags& flags, const SimulateFlags& sim) {
    const std::uint64_t seed = pick_seed(flags.seed);
    shard::SimulationConfig cfg = to_sim_config(flags, seed);
    apply_simulate_flags(cfg, sim);
    if (sim.identity_perm) {
        std::vector<shard::ClientId> identity(parse_count(flags.n, "--n"));
        std::iota(identity.begin(), identity.end(), 0u);
        cfg.permutation_override = identity;
    }

    const shard::SimulationReport report = shard::run_simulation(cfg);
    std::cout << "verdict: " << shard::verdict_name(report.verdict);
    if (report.verdict == shard::Verdict::Output) {
        std::cout << (report.match ? " (output matches the plaintext sum over "
                                   : " (OUTPUT MISMATCH against the plaintext sum over ")
                  << report.covered_count << " covered inputs)";
    } else {
        std::cout << " (" << report.abort_reason << ")";
    }
    std::cout << "\n";

    const std::string text =
        flags.format == "csv" ? shard::SimulationReport::csv_header() + "\n" + report.to_csv_row()
                              : report.to_json().dump(2);
    const int rc = emit(flags.out, text);
    if (rc != kExitOk) return rc;
    return report.verdict == shard::Verdict::Output ? kExitOk : kExitAbort;
}

int cmd_bench(const CommonFlags& flags, std::uint32_t groups_sampled) {
    const std::uint64_t seed = pick_seed(flags.seed);
    shard::SimulationConfig cfg = to_sim_config(flags, seed);
    shard::BenchReport bench;
    if (groups_sampled > 0) {
        bench = shard::run_scaled_benchmark(cfg, groups_sampled);
    } else {
        const std::uint64_t n = parse_count(flags.n, "--n");
        if (n > shard::kMaxFullSimulation) {
            throw shard::ConfigError("full bench capped at n = 10^6; pass --groups-sampled");
        }
        const shard::SimulationReport report = shard::run_simulation(cfg);
        bench.n = report.params.n;
        bench.length = report.length;
        bench.params = report.params;
        bench.total_groups =
            static_cast<std::uint64_t>(report.params.m) *
            std::max<std::uint64_t>(1, report.params.n / report.params.g);
        bench.groups_sampled = static_cast<std::uint32_t>(bench.total_groups);
        bench.sampling_factor = 1.0;
        bench.client_ms_per_client = report.timing.client_avg_ms;
        bench.server_ms = report.timing.server_ms;
        bench.reports_processed = report.counters.server_rx_messages;
    }
    const std::string text = flags.format == "json"
                                 ? bench.to_json().dump(2)
                                 : shard::BenchReport::csv_header() + "\n" + bench.to_csv_row();
    return emit(flags.out, text);
}

int cmd_expansion(const CommonFlags& flags, std::vector<std::uint32_t> k_list,
                  std::uint32_t field_bits) {
    if (!flags.g.has_value()) throw shard::ConfigError("expansion needs --g");
    if (k_list.empty()) k_list.push_back(flags.k);
    nlohmann::json rows = nlohmann::json::array();
    std::ostringstream csv;
    csv << "g,k,field_bits,expansion_factor";
    for (std::uint32_t k : k_list) {
        const double ex = shard::expansion_factor(*flags.g, k, field_bits);
        rows.push_back({{"g", *flags.g}, {"k", k}, {"field_bits", field_bits}, {"expansion_factor", ex}});
        csv << "\n" << *flags.g << ',' << k << ',' << field_bits << ',' << ex;
    }
    if (flags.format == "csv") return emit(flags.out, csv.str());
    return emit(flags.out, nlohmann::json{{"g", *flags.g}, {"rows", rows}}.dump(2));
}

int cmd_trace(const CommonFlags& flags, const SimulateFlags& sim, bool reveal) {
    const std::uint64_t seed = pick_seed(flags.seed);
    shard::SimulationConfig cfg = to_sim_config(flags, seed);
    apply_simulate_flags(cfg, sim);
    const std::uint32_t n = static_cast<std::uint32_t>(parse_count(flags.n, "--n"));
    std::vector<shard::ClientId> perm;
    if (sim.identity_perm) {
        perm.resize(n);
        std::iota(perm.begin(), perm.end(), 0u);
        cfg.permutation_override = perm;
    } else {
        perm = shard::derive_permutation(seed, n);
    }

    std::vector<shard::TraceEntry> entries;
    const shard::SimulationReport report = shard::run_simulation(cfg, &entries, reveal);

    const std::uint32_t m = report.params.m;
    nlohmann::json rounds = nlohmann::json::array();
    std::vector<shard::GroupAssignment> assignments;
    for (std::uint32_t r = 0; r < m; ++r) {
        assignments.push_back(shard::assign_round(perm, report.params.g, r));
        rounds.push_back({{"round", r}, {"groups", assignments.back().groups}});
    }
    const std::vector<bool> honest(n, true);
    const bool connected = shard::is_connected(shard::build_honest_graph(assignments, honest));

    nlohmann::json messages = nlohmann::json::array();
    for (const shard::TraceEntry& e : entries) {
        nlohmann::json msg{{"kind", shard::msg_kind_name(e.kind)},
                           {"sender", e.sender},
                           {"receiver", e.receiver == shard::kServerId ? -1 : int64_t(e.receiver)},
                           {"round", e.round},
                           {"payload_len", e.payload_len}};
        if (reveal) msg["values"] = e.values;
        messages.push_back(std::move(msg));
    }

    nlohmann::json j{{"seed", seed},
                     {"n", n},
                     {"g", report.params.g},
                     {"t", report.params.t},
                     {"k", report.params.k},
                     {"m", m},
                     {"permutation", perm},
                     {"rounds", rounds},
                     {"honest_graph_connected", connected},
                     {"verdict", shard::verdict_name(report.verdict)},
                     {"match", report.match},
                     {"messages", messages}};
    std::cout << "honest graph connected: " << (connected ? "true" : "false") << "\n";
    std::cout << "verdict: " << shard::verdict_name(report.verdict) << "\n";
    const int rc = emit(flags.out, j.dump(2));
    if (rc != kExitOk) return rc;
    return report.verdict == shard::Verdict::Output ? kExitOk : kExitAbort;
}

void add_common(CLI::App* cmd, CommonFlags& flags, bool with_field = true) {
    cmd->add_option("--n", flags.n, "federation size (accepts 1e8 style)");
    cmd->add_option("--k", flags.k, "pack width: values shared per polynomial");
    cmd->add_option("--m", flags.m, "shard rounds");
    cmd->add_option("--l", flags.length, "input vector length per client");
    cmd->add_option("--sigma", flags.sigma, "security bits: P[privacy failure] < 2^-sigma");
    cmd->add_option("--eta", flags.eta, "availability bits: P[output failure] < 2^-eta");
    cmd->add_option("--gamma", flags.gamma, "assumed corrupt fraction");
    cmd->add_option("--delta", flags.delta, "assumed dropout fraction");
    cmd->add_flag("--malicious", flags.malicious, "malicious mode (verified reconstruction)");
    cmd->add_option("--seed", flags.seed, "master seed; omitted -> random, printed");
    cmd->add_option("--g", flags.g, "explicit group size (skips the parameter search)");
    cmd->add_option("--t", flags.t, "explicit threshold (with --g)");
    cmd->add_option("--out", flags.out, "write output to this path instead of stdout");
    cmd->add_option("--format", flags.format, "json or csv")
        ->check(CLI::IsMember({"json", "csv"}));
    if (with_field) cmd->add_option("--p", flags.modulus, "field modulus (prime)");
}

void add_simulate(CLI::App* cmd, SimulateFlags& sim) {
    cmd->add_option("--inject-dropouts", sim.inject_dropouts, "injected dropout fraction");
    cmd->add_option("--dropout-timing", sim.dropout_timing, "before|after|mixed")
        ->check(CLI::IsMember({"before", "after", "mixed"}));
    cmd->add_option("--adversary", sim.adversary, "none|observe|mutate")
        ->check(CLI::IsMember({"none", "observe", "mutate"}));
    cmd->add_option("--corrupt-frac", sim.corrupt_frac, "observer: corrupt fraction");
    cmd->add_option("--forced-corrupt", sim.forced_corrupt,
                    "observer: client ids forced into the coalition")
        ->delimiter(',');
    cmd->add_option("--mutation-rate", sim.mutation_rate, "mutator: per-message rate");
    cmd->add_option("--mutate-count", sim.mutate_count, "mutator: mutate exactly this many messages");
    cmd->add_option("--mutate-kinds", sim.mutate_kinds, "targets: share,broadcast,report");
    cmd->add_option("--inputs", sim.inputs_file, "input vector file (decimal, L per client)");
    cmd->add_option("--input-values", sim.input_values, "inline inputs, n*L values")
        ->delimiter(',');
    cmd->add_flag("--identity-perm", sim.identity_perm, "use the identity permutation");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"secure aggregation via sharded secret sharing"};
    app.require_subcommand(1);

    CommonFlags params_flags, sim_flags_common, bench_flags, exp_flags, trace_flags;
    SimulateFlags sim_flags, trace_sim;
    bool literal_pnd = false;
    bool reveal = false;
    std::uint32_t groups_sampled = 0;
    std::vector<std::uint32_t> k_list;
    std::uint32_t exp_field_bits = 61;

    CLI::App* params_cmd = app.add_subcommand("params", "group size and threshold from targets");
    add_common(params_cmd, params_flags, /*with_field=*/true);
    params_cmd->add_flag("--literal-pnd", literal_pnd,
                         "also report availability under the literal per-group formula");

    CLI::App* simulate_cmd = app.add_subcommand("simulate", "run one full federation simulation");
    add_common(simulate_cmd, sim_flags_common);
    add_simulate(simulate_cmd, sim_flags);

    CLI::App* bench_cmd = app.add_subcommand("bench", "timing at scale");
    add_common(bench_cmd, bench_flags);
    bench_flags.format = "csv";
    bench_cmd->add_option("--groups-sampled", groups_sampled,
                          "sample this many groups for client-side timing (0 = full run)");

    CLI::App* expansion_cmd = app.add_subcommand("expansion", "expansion factor table");
    add_common(expansion_cmd, exp_flags, /*with_field=*/false);
    expansion_cmd->add_option("--k-list", k_list, "pack widths to tabulate")->delimiter(',');
    expansion_cmd->add_option("--field-bits", exp_field_bits, "bits per field element");

    CLI::App* trace_cmd = app.add_subcommand("trace", "group assignments + message trace");
    add_common(trace_cmd, trace_flags);
    add_simulate(trace_cmd, trace_sim);
    trace_cmd->add_flag("--reveal", reveal, "include payload values in the trace");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (params_cmd->parsed()) return cmd_params(params_flags, literal_pnd);
        if (simulate_cmd->parsed()) return cmd_simulate(sim_flags_common, sim_flags);
        if (bench_cmd->parsed()) return cmd_bench(bench_flags, groups_sampled);
        if (expansion_cmd->parsed()) return cmd_expansion(exp_flags, k_list, exp_field_bits);
        if (trace_cmd->parsed()) return cmd_trace(trace_flags, trace_sim, reveal);
    } catch (const shard::InfeasibleError& e) {
        std::cerr << "infeasible: " << e.what() << "\n";
        return kExitInfeasible;
    } catch (const shard::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const shard::DomainError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    }
    return kExitConfig;
}

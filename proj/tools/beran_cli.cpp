// beran: key generation, ledger inspection, handshake demos, scenario runs
// and overhead reports for the BE-RAN / BeMutual stack.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

#include "beran/bemutual.hpp"
#include "beran/overhead.hpp"
#include "beran/simnet.hpp"

namespace {

using namespace beran;

constexpr int kExitOk = 0;
constexpr int kExitDomainFailure = 1;
constexpr int kExitUsage = 2;

std::optional<std::string> read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return std::nullopt;
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

bool write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) return false;
    out << content;
    return out.good();
}

Seed256 seed_from_word(uint64_t word) {
    ByteWriter w;
    w.u64(word);
    const char tag[] = "beran-cli-seed";
    w.raw(std::span<const uint8_t>(reinterpret_cast<const uint8_t*>(tag), sizeof(tag) - 1));
    Bytes material = w.take();
    return sha256(material);
}

int cmd_keygen(const std::string& suite_name_str, std::optional<uint64_t> seed,
               const std::string& out_path) {
    auto kind = suite_from_name(suite_name_str);
    if (!kind) {
        std::cerr << "unknown suite: " << suite_name_str << "\n";
        return kExitUsage;
    }
    CryptoSuite suite = CryptoSuite::of(*kind);
    std::optional<Seed256> seed_bytes;
    if (seed) seed_bytes = seed_from_word(*seed);
    KeyPair key = generate_keypair(suite, seed_bytes);
    BcAddress bc = derive_bc_address(key.public_key);

    std::ostringstream out;
    out << "suite " << suite_name(suite.kind) << "\n"
        << "label " << suite.signature_scheme_label << "\n"
        << "public_key " << to_hex(key.public_key) << "\n"
        << "private_key " << to_hex(key.private_key) << "\n"
        << "bc_address " << bc.hex() << "\n";
    if (!write_file(out_path, out.str())) {
        std::cerr << "cannot write " << out_path << "\n";
        return kExitDomainFailure;
    }
    std::cout << bc.hex() << "\n";
    return kExitOk;
}

int cmd_ledger(const std::string& action, const std::string& chain_path,
               const std::string& out_path) {
    auto text = read_file(chain_path);
    if (!text) {
        std::cerr << "cannot read " << chain_path << "\n";
        return kExitUsage;
    }
    auto ledger = Ledger::import_text(*text);
    if (!ledger) {
        if (action == "verify") {
            std::cout << "invalid\n";
            return kExitDomainFailure;
        }
        std::cerr << "chain file failed validation\n";
        return kExitDomainFailure;
    }
    if (action == "verify") {
        auto bad = ledger->verify_chain();
        if (bad) {
            std::cout << "invalid at height " << *bad << "\n";
            return kExitDomainFailure;
        }
        std::cout << "valid height=" << ledger->height() << "\n";
        return kExitOk;
    }
    if (action == "inspect") {
        std::cout << "height " << ledger->height() << "\n"
                  << "blocks " << ledger->chain().size() << "\n"
                  << "bindings " << ledger->binding_index().size() << "\n";
        for (const auto& [bc, record] : ledger->binding_index()) {
            std::cout << "binding " << bc.hex() << " -> "
                      << record.physical_address.to_string()
                      << " seq=" << record.sequence_number << "\n";
        }
        for (const auto& [bc, balance] : ledger->balances())
            std::cout << "balance " << bc.hex() << " " << balance << "\n";
        return kExitOk;
    }
    // export: rewrite canonically
    if (!write_file(out_path, ledger->export_text())) {
        std::cerr << "cannot write " << out_path << "\n";
        return kExitDomainFailure;
    }
    std::cout << "exported " << ledger->chain().size() << " blocks\n";
    return kExitOk;
}

int cmd_handshake(const std::string& action, const std::string& suite_name_str, uint64_t seed,
                  const std::string& field) {
    auto kind = suite_from_name(suite_name_str);
    if (!kind) {
        std::cerr << "unknown suite: " << suite_name_str << "\n";
        return kExitUsage;
    }
    CryptoSuite suite = CryptoSuite::of(*kind);
    SeededRng rng(seed);
    Bytes ip_a(16, 0x0a), ip_b(16, 0x0b);
    Identity alice = make_identity(suite, PhysicalAddress::ipv6(ip_a), rng.seed256());
    Identity bob = make_identity(suite, PhysicalAddress::ipv6(ip_b), rng.seed256());
    std::cout << "alice " << alice.bc.hex() << "\nbob   " << bob.bc.hex() << "\n";

    if (action == "demo") {
        HandshakeRun run = run_handshake(alice, bob, rng);
        if (!run.ok) {
            std::cout << "handshake failed: " << to_string(*run.error) << "\n";
            return kExitDomainFailure;
        }
        OpCounters total = run.initiator_ops;
        total += run.responder_ops;
        std::cout << "established, session keys match: "
                  << (run.initiator_key == run.responder_key ? "yes" : "no") << "\n"
                  << "session_key " << to_hex(run.initiator_key.bits) << "\n"
                  << "ops sign=" << total.sign << " verify=" << total.verify
                  << " addr_hash=" << total.addr_hash << " kem_seal=" << total.kem_seal
                  << " kem_open=" << total.kem_open << "\n";
        return run.initiator_key == run.responder_key ? kExitOk : kExitDomainFailure;
    }

    // tamper: mutate one field of message 1 or 2 and show the typed failure.
    NonceCache alice_seen, bob_seen;
    auto [state, request] = initiate(alice, bob.bc, rng);
    std::optional<HandshakeError> failure;
    if (field == "pk") {
        Identity mallory = make_identity(suite, alice.address, rng.seed256());
        request.sender_public_key = mallory.keys.public_key;
        auto r = respond(bob, alice.bc, request, bob_seen, rng);
        if (!is_ok(r)) failure = error_of(r);
    } else if (field == "nonce1") {
        request.nonce1.bytes[0] ^= 1;
        auto r = respond(bob, alice.bc, request, bob_seen, rng);
        if (!is_ok(r)) failure = error_of(r);
    } else if (field == "signature") {
        request.signature_bytes[0] ^= 1;
        auto r = respond(bob, alice.bc, request, bob_seen, rng);
        if (!is_ok(r)) failure = error_of(r);
    } else if (field == "replay") {
        auto first = respond(bob, alice.bc, request, bob_seen, rng);
        if (!is_ok(first)) {
            failure = error_of(first);
        } else {
            auto second = respond(bob, alice.bc, request, bob_seen, rng);
            if (!is_ok(second)) failure = error_of(second);
        }
    } else if (field == "nonce2") {
        auto r = respond(bob, alice.bc, request, bob_seen, rng);
        if (is_ok(r)) {
            auto resp = std::get<RespondOk>(r).response;
            resp.nonce2.bytes[0] ^= 1;
            auto c = confirm(state, resp, alice_seen, rng);
            if (!is_ok(c)) failure = error_of(c);
        }
    } else if (field == "key_material") {
        auto r = respond(bob, alice.bc, request, bob_seen, rng);
        if (is_ok(r)) {
            auto& ok = std::get<RespondOk>(r);
            auto c = confirm(state, ok.response, alice_seen, rng);
            if (is_ok(c)) {
                auto msg = std::get<ConfirmOk>(c).message;
                msg.encrypted_key_material[msg.encrypted_key_material.size() / 2] ^= 1;
                auto f = finalize(ok.state, msg);
                if (!is_ok(f)) failure = error_of(f);
            }
        }
    } else {
        std::cerr << "unknown --field (pk, nonce1, signature, replay, nonce2, key_material)\n";
        return kExitUsage;
    }

    if (failure) {
        std::cout << "tampered field '" << field << "' rejected: " << to_string(*failure)
                  << "\n";
        return kExitDomainFailure;  // the handshake did fail, by design
    }
    std::cout << "tampering was not detected\n";
    return kExitOk;
}

int cmd_scenario(const std::string& config_path, const std::string& trace_out) {
    auto text = read_file(config_path);
    if (!text) {
        std::cerr << "cannot read " << config_path << "\n";
        return kExitUsage;
    }
    auto cfg = SimConfig::parse(*text);
    if (std::holds_alternative<std::string>(cfg)) {
        std::cerr << std::get<std::string>(cfg) << "\n";
        return kExitUsage;
    }
    auto sim = Simulation::build(std::get<SimConfig>(cfg));
    if (std::holds_alternative<std::string>(sim)) {
        std::cerr << std::get<std::string>(sim) << "\n";
        return kExitUsage;
    }
    Trace trace = std::get<Simulation>(sim).run_configured_scenario();
    if (!write_file(trace_out, trace.to_text())) {
        std::cerr << "cannot write " << trace_out << "\n";
        return kExitDomainFailure;
    }
    if (trace.established) {
        std::cout << "established (" << trace.events.size() << " events)\n";
        return kExitOk;
    }
    std::cout << trace.failure << "\n";
    return kExitDomainFailure;
}

std::optional<ParamTable> load_params(const std::string& params_path) {
    if (params_path.empty()) return ParamTable{};
    auto text = read_file(params_path);
    if (!text) return std::nullopt;
    return ParamTable::from_text(*text);
}

int cmd_bench_comm(const std::string& params_path, const std::string& out_path,
                   const std::string& format) {
    auto params = load_params(params_path);
    if (!params) {
        std::cerr << "cannot read params file\n";
        return kExitUsage;
    }
    OverheadReport report = build_comm_report(*params);
    std::string rendered = render_report(
        report, format == "text" ? ReportFormat::Text : ReportFormat::Csv);
    if (!write_file(out_path, rendered)) {
        std::cerr << "cannot write " << out_path << "\n";
        return kExitDomainFailure;
    }
    for (const auto& e : report.entries) {
        std::cout << to_string(e.comm.protocol) << " " << suite_name(e.comm.suite) << " "
                  << e.comm.total_bytes << " bytes\n";
    }
    return kExitOk;
}

int cmd_bench_compute(const std::string& params_path, const std::string& out_path,
                      const std::string& format, int repetitions,
                      const std::string& timings_out) {
    auto params = load_params(params_path);
    if (!params) {
        std::cerr << "cannot read params file\n";
        return kExitUsage;
    }
    std::vector<PrimitiveTimings> timings;
    for (SuiteKind kind : {SuiteKind::FiniteField, SuiteKind::EllipticCurve})
        timings.push_back(measure_primitives(CryptoSuite::of(kind), repetitions));
    if (!timings_out.empty() && !write_file(timings_out, timings_to_text(timings))) {
        std::cerr << "cannot write " << timings_out << "\n";
        return kExitDomainFailure;
    }
    OverheadReport report = build_full_report(*params, timings, /*measure=*/true, repetitions);
    std::string rendered = render_report(
        report, format == "text" ? ReportFormat::Text : ReportFormat::Csv);
    if (!write_file(out_path, rendered)) {
        std::cerr << "cannot write " << out_path << "\n";
        return kExitDomainFailure;
    }
    for (const auto& e : report.entries) {
        std::cout << to_string(e.comm.protocol) << " " << suite_name(e.comm.suite)
                  << " predicted_us=" << (e.predicted_us ? *e.predicted_us : 0);
        if (e.measured_us) std::cout << " measured_us=" << *e.measured_us;
        std::cout << "\n";
    }
    return kExitOk;
}

int cmd_report(const std::string& timings_path, const std::string& params_path,
               const std::string& out_path, const std::string& format) {
    auto params = load_params(params_path);
    if (!params) {
        std::cerr << "cannot read params file\n";
        return kExitUsage;
    }
    auto text = read_file(timings_path);
    if (!text) {
        std::cerr << "cannot read " << timings_path << "\n";
        return kExitUsage;
    }
    auto timings = timings_from_text(*text);
    if (!timings) {
        std::cerr << "bad timings file\n";
        return kExitUsage;
    }
    OverheadReport report = build_full_report(*params, *timings, /*measure=*/false, 0);
    std::string rendered = render_report(
        report, format == "text" ? ReportFormat::Text : ReportFormat::Csv);
    if (!write_file(out_path, rendered)) {
        std::cerr << "cannot write " << out_path << "\n";
        return kExitDomainFailure;
    }
    std::cout << "report written to " << out_path << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"BE-RAN identity, ledger, handshake and overhead toolkit"};
    app.require_subcommand(1);

    // keygen
    std::string kg_suite = "ec", kg_out = "identity.txt";
    std::optional<uint64_t> kg_seed;
    auto* keygen = app.add_subcommand("keygen", "Generate a key pair and its BC address");
    keygen->add_option("--suite", kg_suite, "ec or ff");
    keygen->add_option("--seed", kg_seed, "deterministic test-mode seed");
    keygen->add_option("--out", kg_out, "identity file path");

    // ledger
    std::string lg_action, lg_chain, lg_out = "chain.txt";
    auto* ledger_cmd = app.add_subcommand("ledger", "Inspect, verify or re-export a chain file");
    ledger_cmd->add_option("action", lg_action, "inspect | verify | export")
        ->required()
        ->check(CLI::IsMember({"inspect", "verify", "export"}));
    ledger_cmd->add_option("--chain", lg_chain, "chain file")->required();
    ledger_cmd->add_option("--out", lg_out, "output path (export)");

    // handshake
    std::string hs_action, hs_suite = "ec", hs_field = "pk";
    uint64_t hs_seed = 1;
    auto* handshake_cmd = app.add_subcommand("handshake", "Run a mutual authentication demo");
    handshake_cmd->add_option("action", hs_action, "demo | tamper")
        ->required()
        ->check(CLI::IsMember({"demo", "tamper"}));
    handshake_cmd->add_option("--suite", hs_suite, "ec or ff");
    handshake_cmd->add_option("--seed", hs_seed, "rng seed");
    handshake_cmd->add_option("--field", hs_field,
                              "tamper target: pk, nonce1, signature, replay, nonce2, "
                              "key_material");

    // scenario
    std::string sc_config, sc_out = "trace.txt";
    auto* scenario_cmd = app.add_subcommand("scenario", "Run a simulated scenario");
    auto* sc_run = scenario_cmd->add_subcommand("run", "Run the config's scenario");
    sc_run->add_option("--config", sc_config, "topology/scenario config")->required();
    sc_run->add_option("--out", sc_out, "trace output path");
    scenario_cmd->require_subcommand(1);

    // bench
    std::string bn_params, bn_format = "csv";
    std::string bn_comm_out = "report_comm.csv", bn_compute_out = "report_compute.csv";
    std::string bn_timings_out = "timings.txt";
    int bn_reps = 33;
    auto* bench_cmd = app.add_subcommand("bench", "Overhead benchmarks");
    auto* bn_comm = bench_cmd->add_subcommand("comm", "Analytic communication overhead");
    bn_comm->add_option("--params", bn_params, "parameter override file");
    bn_comm->add_option("--out", bn_comm_out, "report path");
    bn_comm->add_option("--format", bn_format, "csv or text")
        ->check(CLI::IsMember({"csv", "text"}));
    auto* bn_compute = bench_cmd->add_subcommand("compute", "Measured computation overhead");
    bn_compute->add_option("--params", bn_params, "parameter override file");
    bn_compute->add_option("--out", bn_compute_out, "report path");
    bn_compute->add_option("--format", bn_format, "csv or text")
        ->check(CLI::IsMember({"csv", "text"}));
    bn_compute->add_option("--repetitions", bn_reps, "timing repetitions")
        ->check(CLI::PositiveNumber);
    bn_compute->add_option("--timings-out", bn_timings_out, "primitive timings output");
    bench_cmd->require_subcommand(1);

    // report
    std::string rp_timings, rp_params, rp_out = "report.csv", rp_format = "csv";
    auto* report_cmd = app.add_subcommand("report", "Build a report from saved timings");
    report_cmd->add_option("--timings", rp_timings, "timings key-value file")->required();
    report_cmd->add_option("--params", rp_params, "parameter override file");
    report_cmd->add_option("--out", rp_out, "report path");
    report_cmd->add_option("--format", rp_format, "csv or text")
        ->check(CLI::IsMember({"csv", "text"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (keygen->parsed()) return cmd_keygen(kg_suite, kg_seed, kg_out);
        if (ledger_cmd->parsed()) return cmd_ledger(lg_action, lg_chain, lg_out);
        if (handshake_cmd->parsed()) return cmd_handshake(hs_action, hs_suite, hs_seed, hs_field);
        if (scenario_cmd->parsed()) return cmd_scenario(sc_config, sc_out);
        if (bench_cmd->parsed()) {
            if (bn_comm->parsed()) return cmd_bench_comm(bn_params, bn_comm_out, bn_format);
            return cmd_bench_compute(bn_params, bn_compute_out, bn_format, bn_reps,
                                     bn_timings_out);
        }
        if (report_cmd->parsed()) return cmd_report(rp_timings, rp_params, rp_out, rp_format);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitDomainFailure;
    }
    return kExitUsage;
}

#pragma once

#include <string>
#include <vector>

#include "beran/bemutual.hpp"
#include "beran/timings.hpp"

namespace beran {

/// Bit widths driving the per-signal overhead formulas. Defaults are the
/// standard parameter set: 256-bit nonces and hashes, IPv6 identities,
/// X.509v3 certificate at 5592 bits, 3072-bit finite-field and 256-bit
/// elliptic-curve public keys, 272-bit blockchain addresses.
struct ParamTable {
    int nonce_bits = 256;
    int address_bits = 128;
    int prf_bits = 256;
    int cert_bits = 5592;
    int pk_ff_bits = 3072;
    int sk_ff_bits = 256;
    int pk_ec_bits = 256;
    int sk_ec_bits = 256;
    int bc_addr_bits = 272;
    int hash_bits = 256;
    int hmac_bits = 256;
    int dh_param_ff_bits = 3072;
    int dh_param_ec_bits = 256;

    /// "key = value" lines; unknown keys are errors.
    static std::optional<ParamTable> from_text(const std::string& text);
    std::string to_text() const;
};

enum class Protocol { BeRan, IkeV2, Tls13 };
enum class CertMode { Certificate, RawPublicKey };

const char* to_string(Protocol p);
const char* to_string(CertMode m);

struct SignalBreakdown {
    Protocol protocol;
    SuiteKind suite;
    CertMode cert_mode;
    std::vector<long> signal_bits;  // one entry per signal slot
    long total_bits = 0;
    long total_bytes = 0;  // ceil(total_bits / 8)
};

/// Evaluate a protocol's per-signal formulas. BE-RAN has 2 signals; IKEv2
/// has 4; TLS 1.3 has 9 slots with slot 3 contributing zero. cert_mode only
/// affects the TLS certificate slots.
SignalBreakdown comm_overhead(Protocol protocol, SuiteKind suite, const ParamTable& params,
                              CertMode cert_mode = CertMode::Certificate);

/// The primitive multiset each handshake executes.
PrimitiveCounts compute_composition(Protocol protocol);

/// Composition dotted with timings; see predicted_compute_us for the dh
/// resolution rule.
double predict_compute(Protocol protocol, SuiteKind suite, const PrimitiveTimings& timings);

struct HandshakeMeasurement {
    SuiteKind suite;
    int repetitions = 0;
    double total_us = 0;        // full 3-message handshake, median
    double signals12_us = 0;    // less key-material encapsulation and KDF
    double key_transport_us = 0;  // message-3 encapsulation + decapsulation
};

/// Median wall time of full in-process handshakes. The message-3 key
/// transport is timed inside the run and reported separately.
HandshakeMeasurement measure_beran_handshake(const CryptoSuite& suite, int repetitions);

struct OverheadEntry {
    SignalBreakdown comm;
    std::optional<double> predicted_us;
    std::optional<double> measured_us;  // BE-RAN only
};

struct OverheadReport {
    std::vector<OverheadEntry> entries;
};

/// Comm-only report over all six (protocol, suite) pairs. EC TLS defaults to
/// raw-public-key mode, FF TLS to certificate mode.
OverheadReport build_comm_report(const ParamTable& params);

/// Full report: predicted columns from the timings, measured column from
/// in-process BE-RAN handshakes when `measure` is set.
OverheadReport build_full_report(const ParamTable& params,
                                 const std::vector<PrimitiveTimings>& timings, bool measure,
                                 int repetitions);

enum class ReportFormat { Csv, Text };

/// Byte-stable rendering. CSV column order: protocol, suite, mode,
/// signal_index, bits, total_bits, total_bytes, predicted_us, measured_us.
std::string render_report(const OverheadReport& report, ReportFormat format);

}  // namespace beran

#pragma once

#include <iosfwd>
#include <optional>
#include <string>

#include "beran/crypto.hpp"

namespace beran {

/// Per-suite primitive durations in microseconds. When populated by
/// measure_primitives the DH entries are derived from their component
/// operations: t_dh = 2*t_exp, t_ecdh = 2*t_pm.
struct PrimitiveTimings {
    SuiteKind suite = SuiteKind::EllipticCurve;
    double t_sign_us = 0;
    double t_verify_us = 0;
    double t_hash_us = 0;
    double t_sym_us = 0;
    double t_hmac_us = 0;
    double t_pm_us = 0;
    double t_exp_us = 0;
    double t_dh_us = 0;
    double t_ecdh_us = 0;
};

/// Median-of-repetitions timing of each primitive on this host. Symmetric,
/// hash and hmac operations run over payload_bytes of input. Single-threaded.
PrimitiveTimings measure_primitives(const CryptoSuite& suite, int repetitions,
                                    size_t payload_bytes = 1024);

/// The published reference timings (desk hardware of the original
/// measurement; values are transcribed, so the DH rows do not obey the
/// 2x component identities). Input for host-independent predictions.
PrimitiveTimings reference_timings(SuiteKind suite);

/// Flat key-value text: one primitive per line, "name suite microseconds".
std::string timings_to_text(const PrimitiveTimings& t);
std::string timings_to_text(const std::vector<PrimitiveTimings>& all);
std::optional<std::vector<PrimitiveTimings>> timings_from_text(const std::string& text);

/// How many of each primitive a protocol handshake performs. The dh slot
/// stands for one full (EC)DH agreement.
struct PrimitiveCounts {
    int sign = 0;
    int verify = 0;
    int hash = 0;
    int sym = 0;
    int hmac = 0;
    int dh = 0;

    bool operator==(const PrimitiveCounts&) const = default;
};

/// Dot product of a primitive composition with per-primitive timings. The dh
/// term resolves to t_dh for FiniteField and t_ecdh for EllipticCurve.
/// Throws std::invalid_argument when a needed entry is missing (non-finite
/// or negative).
double predicted_compute_us(const PrimitiveCounts& counts, const PrimitiveTimings& timings);

}  // namespace beran

#include "beran/timings.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace beran {

namespace {

using Clock = std::chrono::steady_clock;

double median_us(std::vector<double>& samples) {
    std::sort(samples.begin(), samples.end());
    size_t n = samples.size();
    if (n == 0) return 0;
    if (n % 2 == 1) return samples[n / 2];
    return 0.5 * (samples[n / 2 - 1] + samples[n / 2]);
}

template <typename F>
double timed_median(int repetitions, F&& op) {
    std::vector<double> samples;
    samples.reserve(repetitions);
    for (int i = 0; i < repetitions; ++i) {
        auto t0 = Clock::now();
        op(i);
        auto t1 = Clock::now();
        samples.push_back(std::chrono::duration<double, std::micro>(t1 - t0).count());
    }
    return median_us(samples);
}

}  // namespace

PrimitiveTimings measure_primitives(const CryptoSuite& suite, int repetitions,
                                    size_t payload_bytes) {
    if (repetitions < 1) throw std::invalid_argument("repetitions must be >= 1");

    SeededRng rng(0x7134a1u);
    Bytes payload(payload_bytes);
    rng.fill(payload);

    KeyPair key = generate_keypair(suite, rng.seed256());
    SignedContent content;
    content.add("payload", payload);
    Signature sig = sign(key, content);

    PrimitiveTimings t;
    t.suite = suite.kind;
    t.t_sign_us = timed_median(repetitions, [&](int) { sign(key, content); });
    t.t_verify_us =
        timed_median(repetitions, [&](int) { verify(suite, key.public_key, sig, content); });
    t.t_hash_us = timed_median(repetitions, [&](int) { sha256(payload); });

    std::array<uint8_t, 32> sym_key{};
    rng.fill(sym_key);
    t.t_sym_us = timed_median(repetitions, [&](int) { secretbox_encrypt(sym_key, payload); });
    t.t_hmac_us = timed_median(repetitions, [&](int) { hmac_sha256(sym_key, payload); });

    std::array<uint8_t, 32> scalar{};
    rng.fill(scalar);
    scalar[0] &= 0x7f;
    std::array<uint8_t, 32> point{};
    t.t_pm_us = timed_median(repetitions, [&](int) { x25519_scalarmult_base(scalar, point); });

    std::array<uint8_t, 32> exponent{};
    rng.fill(exponent);
    t.t_exp_us = timed_median(repetitions, [&](int) { modexp_group(exponent); });

    // A DH agreement is two of its component operations: one per side.
    t.t_dh_us = 2.0 * t.t_exp_us;
    t.t_ecdh_us = 2.0 * t.t_pm_us;
    return t;
}

PrimitiveTimings reference_timings(SuiteKind suite) {
    PrimitiveTimings t;
    t.suite = suite;
    t.t_sign_us = suite == SuiteKind::FiniteField ? 1506.0 : 16.0;
    t.t_verify_us = suite == SuiteKind::FiniteField ? 30.0 : 100.0;
    t.t_hash_us = 0.5;
    t.t_sym_us = 3.0;
    t.t_hmac_us = 1.4;
    t.t_pm_us = 906.0;
    t.t_exp_us = 925.0;
    t.t_dh_us = 1812.0;
    t.t_ecdh_us = 2132.0;
    return t;
}

namespace {

const std::pair<const char*, double PrimitiveTimings::*> kTimingFields[] = {
    {"t_sign", &PrimitiveTimings::t_sign_us},   {"t_verify", &PrimitiveTimings::t_verify_us},
    {"t_hash", &PrimitiveTimings::t_hash_us},   {"t_sym", &PrimitiveTimings::t_sym_us},
    {"t_hmac", &PrimitiveTimings::t_hmac_us},   {"t_pm", &PrimitiveTimings::t_pm_us},
    {"t_exp", &PrimitiveTimings::t_exp_us},     {"t_dh", &PrimitiveTimings::t_dh_us},
    {"t_ecdh", &PrimitiveTimings::t_ecdh_us},
};

}  // namespace

std::string timings_to_text(const PrimitiveTimings& t) {
    std::string out;
    char line[96];
    for (const auto& [name, member] : kTimingFields) {
        std::snprintf(line, sizeof(line), "%s %s %.6f\n", name, suite_name(t.suite), t.*member);
        out += line;
    }
    return out;
}

std::string timings_to_text(const std::vector<PrimitiveTimings>& all) {
    std::string out;
    for (const auto& t : all) out += timings_to_text(t);
    return out;
}

double predicted_compute_us(const PrimitiveCounts& counts, const PrimitiveTimings& timings) {
    double dh_us = timings.suite == SuiteKind::FiniteField ? timings.t_dh_us : timings.t_ecdh_us;
    const std::pair<int, double> terms[] = {
        {counts.sign, timings.t_sign_us}, {counts.verify, timings.t_verify_us},
        {counts.hash, timings.t_hash_us}, {counts.sym, timings.t_sym_us},
        {counts.hmac, timings.t_hmac_us}, {counts.dh, dh_us},
    };
    double total = 0;
    for (const auto& [n, us] : terms) {
        if (n == 0) continue;
        if (!std::isfinite(us) || us < 0) throw std::invalid_argument("missing timing entry");
        total += n * us;
    }
    return total;
}

std::optional<std::vector<PrimitiveTimings>> timings_from_text(const std::string& text) {
    std::map<SuiteKind, PrimitiveTimings> by_suite;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        std::string name, suite_str;
        double value;
        if (!(ls >> name >> suite_str >> value)) return std::nullopt;
        auto kind = suite_from_name(suite_str);
        if (!kind) return std::nullopt;
        auto& t = by_suite[*kind];
        t.suite = *kind;
        bool matched = false;
        for (const auto& [field_name, member] : kTimingFields) {
            if (name == field_name) {
                t.*member = value;
                matched = true;
                break;
            }
        }
        if (!matched) return std::nullopt;
    }
    std::vector<PrimitiveTimings> out;
    for (auto& [kind, t] : by_suite) out.push_back(t);
    return out;
}

}  // namespace beran

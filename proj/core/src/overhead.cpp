#include "beran/overhead.hpp"

#include <chrono>
#include <cstdio>
#include <map>
#include <sstream>

namespace beran {

namespace {

int pk_bits(const ParamTable& p, SuiteKind suite) {
    return suite == SuiteKind::FiniteField ? p.pk_ff_bits : p.pk_ec_bits;
}

int dh_param_bits(const ParamTable& p, SuiteKind suite) {
    return suite == SuiteKind::FiniteField ? p.dh_param_ff_bits : p.dh_param_ec_bits;
}

int cert_or_pk_bits(const ParamTable& p, SuiteKind suite, CertMode mode) {
    return mode == CertMode::Certificate ? p.cert_bits : pk_bits(p, suite);
}

double median_of(std::vector<double>& v) {
    std::sort(v.begin(), v.end());
    size_t n = v.size();
    if (n == 0) return 0;
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

const char* to_string(Protocol p) {
    switch (p) {
        case Protocol::BeRan: return "BE-RAN";
        case Protocol::IkeV2: return "IKEv2";
        case Protocol::Tls13: return "TLS1.3";
    }
    return "?";
}

const char* to_string(CertMode m) {
    return m == CertMode::Certificate ? "cert" : "raw-pk";
}

std::string ParamTable::to_text() const {
    std::ostringstream out;
    out << "nonce_bits = " << nonce_bits << "\n"
        << "address_bits = " << address_bits << "\n"
        << "prf_bits = " << prf_bits << "\n"
        << "cert_bits = " << cert_bits << "\n"
        << "pk_ff_bits = " << pk_ff_bits << "\n"
        << "sk_ff_bits = " << sk_ff_bits << "\n"
        << "pk_ec_bits = " << pk_ec_bits << "\n"
        << "sk_ec_bits = " << sk_ec_bits << "\n"
        << "bc_addr_bits = " << bc_addr_bits << "\n"
        << "hash_bits = " << hash_bits << "\n"
        << "hmac_bits = " << hmac_bits << "\n"
        << "dh_param_ff_bits = " << dh_param_ff_bits << "\n"
        << "dh_param_ec_bits = " << dh_param_ec_bits << "\n";
    return out.str();
}

std::optional<ParamTable> ParamTable::from_text(const std::string& text) {
    ParamTable p;
    std::map<std::string, int*> fields{
        {"nonce_bits", &p.nonce_bits},
        {"address_bits", &p.address_bits},
        {"prf_bits", &p.prf_bits},
        {"cert_bits", &p.cert_bits},
        {"pk_ff_bits", &p.pk_ff_bits},
        {"sk_ff_bits", &p.sk_ff_bits},
        {"pk_ec_bits", &p.pk_ec_bits},
        {"sk_ec_bits", &p.sk_ec_bits},
        {"bc_addr_bits", &p.bc_addr_bits},
        {"hash_bits", &p.hash_bits},
        {"hmac_bits", &p.hmac_bits},
        {"dh_param_ff_bits", &p.dh_param_ff_bits},
        {"dh_param_ec_bits", &p.dh_param_ec_bits},
    };
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        std::string key, eq;
        int value;
        if (!(ls >> key >> eq >> value) || eq != "=") return std::nullopt;
        auto it = fields.find(key);
        if (it == fields.end()) return std::nullopt;
        *it->second = value;
    }
    return p;
}

SignalBreakdown comm_overhead(Protocol protocol, SuiteKind suite, const ParamTable& p,
                              CertMode cert_mode) {
    SignalBreakdown out;
    out.protocol = protocol;
    out.suite = suite;
    out.cert_mode = cert_mode;

    long pk = pk_bits(p, suite);
    long dh = dh_param_bits(p, suite);
    long registry_core = 2L * p.nonce_bits + p.bc_addr_bits;  // the 784-bit constant

    switch (protocol) {
        case Protocol::BeRan:
            out.signal_bits = {
                registry_core + 2L * p.address_bits + pk,
                registry_core + 4L * p.address_bits + pk,
            };
            break;
        case Protocol::IkeV2: {
            long init = dh + p.nonce_bits;
            long auth = 2L * p.address_bits + 2L * p.cert_bits + p.nonce_bits + p.prf_bits;
            out.signal_bits = {init, init, auth, auth};
            break;
        }
        case Protocol::Tls13: {
            long hello = dh + p.nonce_bits;
            long cert = cert_or_pk_bits(p, suite, cert_mode);
            // Slot 3 (certificate request) contributes nothing.
            out.signal_bits = {hello,       hello, 0,           cert,       p.hash_bits,
                               p.hmac_bits, cert,  p.hash_bits, p.hmac_bits};
            break;
        }
    }
    for (long bits : out.signal_bits) out.total_bits += bits;
    out.total_bytes = (out.total_bits + 7) / 8;
    return out;
}

PrimitiveCounts compute_composition(Protocol protocol) {
    PrimitiveCounts c;
    switch (protocol) {
        case Protocol::BeRan:
            c.sign = 2;
            c.verify = 2;
            c.hash = 2;
            break;
        case Protocol::IkeV2:
            c.dh = 1;
            c.sym = 4;
            c.hmac = 4;
            c.sign = 2;
            c.verify = 2;
            break;
        case Protocol::Tls13:
            c.dh = 1;
            c.sym = 14;
            c.sign = 2;
            c.hash = 2;
            c.verify = 2;
            c.hmac = 2;
            break;
    }
    return c;
}

double predict_compute(Protocol protocol, SuiteKind suite, const PrimitiveTimings& timings) {
    PrimitiveTimings t = timings;
    t.suite = suite;
    return predicted_compute_us(compute_composition(protocol), t);
}

HandshakeMeasurement measure_beran_handshake(const CryptoSuite& suite, int repetitions) {
    if (repetitions < 1) throw std::invalid_argument("repetitions must be >= 1");
    using Clock = std::chrono::steady_clock;

    SeededRng setup_rng(0x6b7a11u);
    Bytes ip_a(16, 0x0a), ip_b(16, 0x0b);
    Identity a = make_identity(suite, PhysicalAddress::ipv6(ip_a), setup_rng.seed256());
    Identity b = make_identity(suite, PhysicalAddress::ipv6(ip_b), setup_rng.seed256());

    SystemRng rng;
    std::vector<double> total, signals12, transport;
    for (int i = 0; i < repetitions; ++i) {
        auto t0 = Clock::now();
        HandshakeRun run = run_handshake(a, b, rng);
        auto t1 = Clock::now();
        if (!run.ok) throw std::runtime_error("handshake failed during measurement");
        double wall = std::chrono::duration<double, std::micro>(t1 - t0).count();
        OpCounters ops = run.initiator_ops;
        ops += run.responder_ops;
        total.push_back(wall);
        transport.push_back(ops.kem_us);
        signals12.push_back(wall - ops.kem_us - ops.kdf_us);
    }

    HandshakeMeasurement m;
    m.suite = suite.kind;
    m.repetitions = repetitions;
    m.total_us = median_of(total);
    m.signals12_us = median_of(signals12);
    m.key_transport_us = median_of(transport);
    return m;
}

namespace {

CertMode default_cert_mode(Protocol protocol, SuiteKind suite) {
    if (protocol == Protocol::Tls13 && suite == SuiteKind::EllipticCurve)
        return CertMode::RawPublicKey;
    return CertMode::Certificate;
}

}  // namespace

OverheadReport build_comm_report(const ParamTable& params) {
    OverheadReport report;
    for (Protocol protocol : {Protocol::BeRan, Protocol::IkeV2, Protocol::Tls13}) {
        for (SuiteKind suite : {SuiteKind::FiniteField, SuiteKind::EllipticCurve}) {
            OverheadEntry e;
            e.comm = comm_overhead(protocol, suite, params, default_cert_mode(protocol, suite));
            report.entries.push_back(std::move(e));
        }
    }
    return report;
}

OverheadReport build_full_report(const ParamTable& params,
                                 const std::vector<PrimitiveTimings>& timings, bool measure,
                                 int repetitions) {
    OverheadReport report = build_comm_report(params);
    std::map<SuiteKind, PrimitiveTimings> by_suite;
    for (const auto& t : timings) by_suite[t.suite] = t;

    std::map<SuiteKind, double> measured;
    if (measure) {
        for (SuiteKind suite : {SuiteKind::FiniteField, SuiteKind::EllipticCurve}) {
            measured[suite] =
                measure_beran_handshake(CryptoSuite::of(suite), repetitions).signals12_us;
        }
    }

    for (auto& e : report.entries) {
        auto it = by_suite.find(e.comm.suite);
        if (it != by_suite.end())
            e.predicted_us = predict_compute(e.comm.protocol, e.comm.suite, it->second);
        if (e.comm.protocol == Protocol::BeRan && measured.count(e.comm.suite))
            e.measured_us = measured[e.comm.suite];
    }
    return report;
}

std::string render_report(const OverheadReport& report, ReportFormat format) {
    std::string out;
    char buf[160];
    if (format == ReportFormat::Csv) {
        out += "protocol,suite,mode,signal_index,bits,total_bits,total_bytes,predicted_us,"
               "measured_us\n";
        for (const auto& e : report.entries) {
            std::string predicted =
                e.predicted_us ? (std::snprintf(buf, sizeof(buf), "%.3f", *e.predicted_us), buf)
                               : "";
            std::string measured =
                e.measured_us ? (std::snprintf(buf, sizeof(buf), "%.3f", *e.measured_us), buf)
                              : "";
            for (size_t i = 0; i < e.comm.signal_bits.size(); ++i) {
                std::snprintf(buf, sizeof(buf), "%s,%s,%s,%zu,%ld,%ld,%ld,%s,%s\n",
                              to_string(e.comm.protocol), suite_name(e.comm.suite),
                              to_string(e.comm.cert_mode), i + 1, e.comm.signal_bits[i],
                              e.comm.total_bits, e.comm.total_bytes, predicted.c_str(),
                              measured.c_str());
                out += buf;
            }
        }
        return out;
    }

    for (const auto& e : report.entries) {
        std::snprintf(buf, sizeof(buf), "%s %s mode=%s total_bits=%ld total_bytes=%ld",
                      to_string(e.comm.protocol), suite_name(e.comm.suite),
                      to_string(e.comm.cert_mode), e.comm.total_bits, e.comm.total_bytes);
        out += buf;
        if (e.predicted_us) {
            std::snprintf(buf, sizeof(buf), " predicted_us=%.3f", *e.predicted_us);
            out += buf;
        }
        if (e.measured_us) {
            std::snprintf(buf, sizeof(buf), " measured_us=%.3f", *e.measured_us);
            out += buf;
        }
        out += "\n  signals:";
        for (size_t i = 0; i < e.comm.signal_bits.size(); ++i) {
            std::snprintf(buf, sizeof(buf), " %zu=%ld", i + 1, e.comm.signal_bits[i]);
            out += buf;
        }
        out += "\n";
    }
    return out;
}

}  // namespace beran

#pragma once

#include <functional>
#include <variant>

#include "beran/ledger.hpp"

namespace beran {

enum class FrameKind : uint8_t { Registry = 1, Connect = 2, Data = 3, Control = 4 };

/// L2 frame with blockchain addresses alongside the MAC fields. Header
/// layout: kind byte, flags byte (bit0 dest-MAC present, bits1-2 bridge hop
/// count), 34-byte dest BC ADD, 34-byte src BC ADD, 6-byte src MAC,
/// optional 6-byte dest MAC, 2-byte payload length, payload, and for
/// Registry frames a binding extension (sequence, public key, signature).
struct BeMacFrame {
    FrameKind kind = FrameKind::Data;
    BcAddress destination_bc;
    BcAddress source_bc;
    std::array<uint8_t, 6> source_mac{};
    std::optional<std::array<uint8_t, 6>> destination_mac;
    uint8_t bridge_hops = 0;  // capped at 3 by the wire format
    Bytes payload;

    struct RegistryExtension {
        uint64_t sequence = 0;
        SuiteKind suite = SuiteKind::EllipticCurve;
        Bytes public_key;
        Bytes signature_bytes;
    };
    std::optional<RegistryExtension> registry;

    Bytes serialize() const;
};

enum class FrameErrorKind { TooShort, BadKind, LengthMismatch };

struct FrameError {
    FrameErrorKind kind;
};

const char* to_string(FrameErrorKind e);

std::variant<BeMacFrame, FrameError> parse_frame(std::span<const uint8_t> bytes);

/// Builds a Registry frame announcing a (BC ADD, MAC) binding signed by the
/// owner's key.
BeMacFrame make_registry_frame(const KeyPair& key, const std::array<uint8_t, 6>& mac,
                               uint64_t sequence);

/// One frame per line: tick, port, lowercase hex. The golden-trace dump
/// format.
std::string frame_hex_line(uint64_t tick, const std::string& port, const BeMacFrame& frame);

using PortId = std::string;

enum class RegisterError { NotRegistryFrame, AddressKeyMismatch, BadSignature, StaleSequence };
const char* to_string(RegisterError e);

struct Deliver {
    PortId port;
};
struct BridgeTo {
    PortId port;
};
enum class DropReason { UnknownDestination, AccessDenied };
struct Drop {
    DropReason reason;
};
using ForwardDecision = std::variant<Deliver, BridgeTo, Drop>;

const char* to_string(DropReason r);

/// Ledger-backed L2 switch. Bindings learned from Registry frames become
/// forwardable only once the BC node commits them; until then they sit in a
/// staging area. The table is therefore always a projection of the ledger.
class BeSwitch {
public:
    struct Entry {
        std::array<uint8_t, 6> mac{};
        PortId port;
        uint64_t last_seen = 0;
    };

    /// The switch reads and writes through the DU's BC node ledger.
    explicit BeSwitch(Ledger& ledger) : ledger_(ledger) {}

    void add_bridge_port(const PortId& port);
    const std::vector<PortId>& bridge_ports() const { return bridge_ports_; }

    /// Optional billing gate: frames from sources failing the balance check
    /// are dropped.
    void set_access_policy(int64_t minimum_balance) { min_balance_ = minimum_balance; }

    /// Submit the frame's binding to the BC node and stage the port mapping.
    std::optional<RegisterError> register_from_frame(const BeMacFrame& frame,
                                                     const PortId& ingress_port, uint64_t tick);

    /// Pull staged entries whose bindings have been committed into the live
    /// table, and refresh entries the ledger has since rebound.
    void sync_with_ledger(uint64_t tick);

    ForwardDecision forward(const BeMacFrame& frame) const;

    const std::map<BcAddress, Entry>& table() const { return table_; }
    Ledger& ledger() { return ledger_; }

private:
    Ledger& ledger_;
    std::map<BcAddress, Entry> table_;
    std::map<BcAddress, Entry> staged_;
    std::vector<PortId> bridge_ports_;
    std::optional<int64_t> min_balance_;
};

}  // namespace beran

#include "beran/beswitch.hpp"

#include <cstdio>

namespace beran {

namespace {

constexpr uint8_t kFlagDestMac = 0x01;
constexpr uint8_t kHopShift = 1;
constexpr uint8_t kHopMask = 0x06;

bool known_kind(uint8_t k) {
    return k >= static_cast<uint8_t>(FrameKind::Registry) &&
           k <= static_cast<uint8_t>(FrameKind::Control);
}

}  // namespace

const char* to_string(FrameErrorKind e) {
    switch (e) {
        case FrameErrorKind::TooShort: return "TooShort";
        case FrameErrorKind::BadKind: return "BadKind";
        case FrameErrorKind::LengthMismatch: return "LengthMismatch";
    }
    return "?";
}

const char* to_string(RegisterError e) {
    switch (e) {
        case RegisterError::NotRegistryFrame: return "NotRegistryFrame";
        case RegisterError::AddressKeyMismatch: return "AddressKeyMismatch";
        case RegisterError::BadSignature: return "BadSignature";
        case RegisterError::StaleSequence: return "StaleSequence";
    }
    return "?";
}

const char* to_string(DropReason r) {
    switch (r) {
        case DropReason::UnknownDestination: return "UnknownDestination";
        case DropReason::AccessDenied: return "AccessDenied";
    }
    return "?";
}

Bytes BeMacFrame::serialize() const {
    ByteWriter w;
    w.u8(static_cast<uint8_t>(kind));
    uint8_t flags = 0;
    if (destination_mac) flags |= kFlagDestMac;
    flags |= static_cast<uint8_t>((bridge_hops & 0x03) << kHopShift);
    w.u8(flags);
    w.raw(destination_bc.bytes);
    w.raw(source_bc.bytes);
    w.raw(source_mac);
    if (destination_mac) w.raw(*destination_mac);
    w.u16(static_cast<uint16_t>(payload.size()));
    w.raw(payload);
    if (kind == FrameKind::Registry && registry) {
        w.u64(registry->sequence);
        w.u8(static_cast<uint8_t>(registry->suite));
        w.u16(static_cast<uint16_t>(registry->public_key.size()));
        w.raw(registry->public_key);
        w.u16(static_cast<uint16_t>(registry->signature_bytes.size()));
        w.raw(registry->signature_bytes);
    }
    return w.take();
}

std::variant<BeMacFrame, FrameError> parse_frame(std::span<const uint8_t> bytes) {
    // Fixed header through the payload length field.
    ByteReader r(bytes);
    BeMacFrame f;
    uint8_t kind = 0, flags = 0;
    if (!r.u8(kind)) return FrameError{FrameErrorKind::TooShort};
    if (!known_kind(kind)) return FrameError{FrameErrorKind::BadKind};
    f.kind = static_cast<FrameKind>(kind);
    if (!r.u8(flags)) return FrameError{FrameErrorKind::TooShort};
    f.bridge_hops = (flags & kHopMask) >> kHopShift;
    if (!r.raw(f.destination_bc.bytes) || !r.raw(f.source_bc.bytes) || !r.raw(f.source_mac))
        return FrameError{FrameErrorKind::TooShort};
    if (flags & kFlagDestMac) {
        std::array<uint8_t, 6> dmac{};
        if (!r.raw(dmac)) return FrameError{FrameErrorKind::TooShort};
        f.destination_mac = dmac;
    }
    uint16_t payload_len = 0;
    if (!r.u16(payload_len)) return FrameError{FrameErrorKind::TooShort};
    if (!r.raw(f.payload, payload_len)) return FrameError{FrameErrorKind::LengthMismatch};

    if (f.kind == FrameKind::Registry) {
        BeMacFrame::RegistryExtension ext;
        uint8_t suite = 0;
        uint16_t n = 0;
        if (!r.u64(ext.sequence) || !r.u8(suite)) return FrameError{FrameErrorKind::TooShort};
        if (suite != static_cast<uint8_t>(SuiteKind::FiniteField) &&
            suite != static_cast<uint8_t>(SuiteKind::EllipticCurve))
            return FrameError{FrameErrorKind::LengthMismatch};
        ext.suite = static_cast<SuiteKind>(suite);
        if (!r.u16(n)) return FrameError{FrameErrorKind::TooShort};
        if (!r.raw(ext.public_key, n)) return FrameError{FrameErrorKind::LengthMismatch};
        if (!r.u16(n)) return FrameError{FrameErrorKind::TooShort};
        if (!r.raw(ext.signature_bytes, n)) return FrameError{FrameErrorKind::LengthMismatch};
        f.registry = std::move(ext);
    }
    if (!r.done()) return FrameError{FrameErrorKind::LengthMismatch};
    return f;
}

BeMacFrame make_registry_frame(const KeyPair& key, const std::array<uint8_t, 6>& mac,
                               uint64_t sequence) {
    BeMacFrame f;
    f.kind = FrameKind::Registry;
    f.source_bc = derive_bc_address(key.public_key);
    f.destination_bc = f.source_bc;  // registry frames address the local DU
    f.source_mac = mac;

    PhysicalAddress phys = PhysicalAddress::mac48(mac);
    Signature sig = sign(key, binding_signed_content(f.source_bc, phys));
    BeMacFrame::RegistryExtension ext;
    ext.sequence = sequence;
    ext.suite = key.suite.kind;
    ext.public_key = key.public_key;
    ext.signature_bytes = sig.bytes;
    f.registry = std::move(ext);
    return f;
}

std::string frame_hex_line(uint64_t tick, const std::string& port, const BeMacFrame& frame) {
    Bytes wire = frame.serialize();
    char head[64];
    std::snprintf(head, sizeof(head), "%llu %s ", static_cast<unsigned long long>(tick),
                  port.c_str());
    return head + to_hex(wire) + "\n";
}

void BeSwitch::add_bridge_port(const PortId& port) {
    for (const auto& p : bridge_ports_)
        if (p == port) return;
    bridge_ports_.push_back(port);
}

std::optional<RegisterError> BeSwitch::register_from_frame(const BeMacFrame& frame,
                                                           const PortId& ingress_port,
                                                           uint64_t tick) {
    if (frame.kind != FrameKind::Registry || !frame.registry)
        return RegisterError::NotRegistryFrame;
    const auto& ext = *frame.registry;

    BindingRecord record;
    record.bc_address = frame.source_bc;
    record.physical_address = PhysicalAddress::mac48(frame.source_mac);
    record.public_key = ext.public_key;
    record.signature.suite = CryptoSuite::of(ext.suite);
    record.signature.bytes = ext.signature_bytes;
    record.signature.signed_content_descriptor =
        binding_signed_content(record.bc_address, record.physical_address).labels();
    record.sequence_number = ext.sequence;
    record.timestamp = tick;

    switch (ledger_.submit_binding(record)) {
        case SubmitResult::AddressKeyMismatch: return RegisterError::AddressKeyMismatch;
        case SubmitResult::BadSignature: return RegisterError::BadSignature;
        case SubmitResult::StaleSequence: return RegisterError::StaleSequence;
        case SubmitResult::Accepted: break;
    }
    staged_[frame.source_bc] = Entry{frame.source_mac, ingress_port, tick};
    return std::nullopt;
}

void BeSwitch::sync_with_ledger(uint64_t tick) {
    for (auto it = staged_.begin(); it != staged_.end();) {
        auto bound = ledger_.lookup_by_bc(it->first);
        if (bound && bound->kind == PhysKind::Mac48 &&
            std::equal(bound->bytes.begin(), bound->bytes.end(), it->second.mac.begin())) {
            it->second.last_seen = tick;
            table_[it->first] = it->second;
            it = staged_.erase(it);
        } else {
            ++it;
        }
    }
    // Entries whose binding was superseded on the ledger stop resolving.
    for (auto it = table_.begin(); it != table_.end();) {
        auto bound = ledger_.lookup_by_bc(it->first);
        if (!bound || bound->kind != PhysKind::Mac48 ||
            !std::equal(bound->bytes.begin(), bound->bytes.end(), it->second.mac.begin())) {
            it = table_.erase(it);
        } else {
            ++it;
        }
    }
}

ForwardDecision BeSwitch::forward(const BeMacFrame& frame) const {
    if (min_balance_ && !ledger_.check_access(frame.source_bc, *min_balance_))
        return Drop{DropReason::AccessDenied};

    auto it = table_.find(frame.destination_bc);
    if (it != table_.end()) return Deliver{it->second.port};

    // Unknown destination: hand to a bridge unless the frame already
    // crossed one (loop guard in the two-domain topology).
    if (!bridge_ports_.empty() && frame.bridge_hops == 0) return BridgeTo{bridge_ports_.front()};
    return Drop{DropReason::UnknownDestination};
}

}  // namespace beran

#pragma once

#include <deque>
#include <map>
#include <set>
#include <variant>

#include "beran/crypto.hpp"
#include "beran/ledger.hpp"
#include "beran/timings.hpp"

namespace beran {

/// Certificateless mutual authentication: three messages, no CA. Each side
/// holds the peer's blockchain address out-of-band; the handshake proves the
/// peer owns the key behind that address and agrees a 256-bit session key.

struct Identity {
    KeyPair keys;
    PhysicalAddress address;
    BcAddress bc;
};

Identity make_identity(const CryptoSuite& suite, PhysicalAddress address,
                       std::optional<Seed256> seed = std::nullopt);

/// Message 1. ADD_A and nonce1 travel both in plaintext and inside the
/// signed copy; receivers compare the two, which is what makes field
/// tampering distinguishable from signature corruption.
struct AuthRequest {
    BcAddress trusted_peer_bc;       // the target's address, pre-trusted
    PhysicalAddress sender_address;  // ADD_A
    SuiteKind suite = SuiteKind::EllipticCurve;
    Bytes sender_public_key;  // PK_A
    Nonce nonce1;
    Bytes signed_fields;     // canonical image of (sender_address, nonce1)
    Bytes signature_bytes;   // over signed_fields, by SK_A
};

/// Message 2, mirroring message 1 with the responder's identity and the
/// echoed (now verified) initiator address.
struct AuthResponse {
    BcAddress trusted_peer_bc;         // the initiator's address
    PhysicalAddress echoed_sender_address;  // ADD_A, verified by the responder
    PhysicalAddress responder_address;      // ADD_B
    SuiteKind suite = SuiteKind::EllipticCurve;
    Bytes responder_public_key;  // PK_B
    Nonce nonce2;
    Bytes signed_fields;    // canonical image of (ADD_A, ADD_B, nonce2)
    Bytes signature_bytes;  // by SK_B
};

/// Message 3: key material encrypted to the responder's key.
struct SessionKeyConfirm {
    BcAddress peer_bc;                     // the responder's address
    PhysicalAddress verified_responder_address;  // ADD_B
    PhysicalAddress sender_address;              // ADD_A
    Bytes encrypted_key_material;
};

struct SessionKey {
    std::array<uint8_t, 32> bits{};
    BcAddress peer_bc;
    uint64_t established_at = 0;

    bool operator==(const SessionKey& o) const { return bits == o.bits; }
};

enum class Role { Initiator, Responder };
enum class Phase { Idle, AwaitingResponse, AwaitingConfirm, Established, Failed };

enum class HandshakeError {
    AddressKeyMismatch,
    SignatureInvalid,
    FieldMismatch,
    NonceReplay,
    DecryptFailed,
    WrongPhase,
};

const char* to_string(HandshakeError e);
const char* to_string(Phase p);

/// Instrumented primitive usage, with accumulated wall time per class so a
/// handshake's crypto cost can be split from its message-3 encapsulation.
struct OpCounters {
    uint64_t sign = 0;
    uint64_t verify = 0;
    uint64_t addr_hash = 0;
    uint64_t kem_seal = 0;
    uint64_t kem_open = 0;
    uint64_t kdf = 0;
    double sign_us = 0;
    double verify_us = 0;
    double addr_hash_us = 0;
    double kem_us = 0;
    double kdf_us = 0;

    OpCounters& operator+=(const OpCounters& o);
    PrimitiveCounts table_counts() const;  // {sign, verify, hash} view
};

/// Bounded per-peer record of nonces already consumed; the replay window.
class NonceCache {
public:
    explicit NonceCache(size_t capacity_per_peer = 1024)
        : capacity_(capacity_per_peer) {}

    bool contains(const BcAddress& peer, const Nonce& n) const;
    void insert(const BcAddress& peer, const Nonce& n);

private:
    struct PerPeer {
        std::deque<Nonce> order;
        std::set<Nonce> members;
    };
    size_t capacity_;
    std::map<BcAddress, PerPeer> peers_;
};

struct HandshakeState {
    Role role = Role::Initiator;
    Phase phase = Phase::Idle;
    Identity self;
    BcAddress trusted_peer;
    std::optional<PhysicalAddress> peer_address;
    std::optional<Nonce> nonce1;
    std::optional<Nonce> nonce2;
    std::optional<SessionKey> session_key;
    OpCounters counters;
};

template <typename T>
using HandshakeResult = std::variant<T, HandshakeError>;

template <typename T>
bool is_ok(const HandshakeResult<T>& r) {
    return std::holds_alternative<T>(r);
}
template <typename T>
HandshakeError error_of(const HandshakeResult<T>& r) {
    return std::get<HandshakeError>(r);
}

/// Start a handshake toward a pre-trusted peer address. The caller is
/// responsible for having registered its own binding on its ledger view.
std::pair<HandshakeState, AuthRequest> initiate(const Identity& self,
                                                const BcAddress& trusted_peer, Rng& rng);

struct RespondOk {
    HandshakeState state;
    AuthResponse response;
};

/// Process message 1 at the responder. `expected_peer` is the pre-trusted
/// address of the party this node is willing to talk to.
HandshakeResult<RespondOk> respond(const Identity& self, const BcAddress& expected_peer,
                                   const AuthRequest& request, NonceCache& seen, Rng& rng);

struct ConfirmOk {
    SessionKeyConfirm message;
    SessionKey key;
};

/// Process message 2 at the initiator; on success the state is Established
/// and message 3 is ready to send.
HandshakeResult<ConfirmOk> confirm(HandshakeState& state, const AuthResponse& response,
                                   NonceCache& seen, Rng& rng);

/// Process message 3 at the responder; on success both sides hold the same
/// session key.
HandshakeResult<SessionKey> finalize(HandshakeState& state, const SessionKeyConfirm& msg);

/// The primitive composition of one full mutual authentication, identical
/// for both suites: two signatures, two verifications, two address
/// derivations. Message 3's asymmetric encryption is tracked separately.
PrimitiveCounts handshake_cost_model(const CryptoSuite& suite);

// ---- codec ----------------------------------------------------------------

/// Two accounting conventions for message sizes. PaperAccounting counts a
/// signature as the raw bit-length of the fields it covers; Concrete counts
/// the real signature bytes. The wire layout is identical; the leading tag
/// records the producer's convention so traces replay byte-exactly.
enum class CodecMode : uint8_t { Concrete = 1, PaperAccounting = 2 };

Bytes encode(const AuthRequest& m, CodecMode mode);
Bytes encode(const AuthResponse& m, CodecMode mode);
Bytes encode(const SessionKeyConfirm& m, CodecMode mode);
std::optional<std::pair<AuthRequest, CodecMode>> decode_request(std::span<const uint8_t> wire);
std::optional<std::pair<AuthResponse, CodecMode>> decode_response(std::span<const uint8_t> wire);
std::optional<std::pair<SessionKeyConfirm, CodecMode>> decode_confirm(
    std::span<const uint8_t> wire);

/// Size accounting. Paper mode: plain fields plus the signature's covered
/// fields at raw width; framing and length prefixes are not counted.
size_t accounting_bits(const AuthRequest& m, CodecMode mode);
size_t accounting_bits(const AuthResponse& m, CodecMode mode);
size_t accounting_bits(const SessionKeyConfirm& m, CodecMode mode);

// ---- whole-run helper ------------------------------------------------------

struct HandshakeRun {
    bool ok = false;
    std::optional<HandshakeError> error;
    SessionKey initiator_key;
    SessionKey responder_key;
    OpCounters initiator_ops;
    OpCounters responder_ops;
};

/// One fault-free in-process handshake between two identities.
HandshakeRun run_handshake(const Identity& initiator, const Identity& responder, Rng& rng);

}  // namespace beran

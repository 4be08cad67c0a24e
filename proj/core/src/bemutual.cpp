#include "beran/bemutual.hpp"

#include <chrono>

namespace beran {

namespace {

using Clock = std::chrono::steady_clock;

constexpr std::string_view kSessionKeyInfo = "beran-session-v1";

class ScopedTimer {
public:
    ScopedTimer(double& acc_us, uint64_t& count) : acc_us_(acc_us), start_(Clock::now()) {
        ++count;
    }
    ~ScopedTimer() {
        acc_us_ += std::chrono::duration<double, std::micro>(Clock::now() - start_).count();
    }

private:
    double& acc_us_;
    Clock::time_point start_;
};

int addr_bits(const PhysicalAddress& a) { return a.kind == PhysKind::Mac48 ? 48 : 128; }

SignedContent request_content(const PhysicalAddress& sender, const Nonce& nonce1) {
    SignedContent c;
    Bytes enc = sender.encoded();
    c.add("sender_address", enc);
    c.add("nonce1", nonce1.bytes);
    return c;
}

SignedContent response_content(const PhysicalAddress& sender, const PhysicalAddress& responder,
                               const Nonce& nonce2) {
    SignedContent c;
    Bytes sender_enc = sender.encoded();
    Bytes responder_enc = responder.encoded();
    c.add("sender_address", sender_enc);
    c.add("responder_address", responder_enc);
    c.add("nonce2", nonce2.bytes);
    return c;
}

SessionKey derive_session_key(std::span<const uint8_t> key_material, const Nonce& nonce1,
                              const Nonce& nonce2, const BcAddress& peer, uint64_t tick,
                              OpCounters& ops) {
    ScopedTimer t(ops.kdf_us, ops.kdf);
    ByteWriter w;
    w.raw(std::span<const uint8_t>(reinterpret_cast<const uint8_t*>(kSessionKeyInfo.data()),
                                   kSessionKeyInfo.size()));
    w.raw(key_material);
    w.raw(nonce1.bytes);
    w.raw(nonce2.bytes);
    Bytes material = w.take();
    SessionKey key;
    key.bits = sha256(material);
    key.peer_bc = peer;
    key.established_at = tick;
    return key;
}

BcAddress timed_derive(std::span<const uint8_t> pk, OpCounters& ops) {
    ScopedTimer t(ops.addr_hash_us, ops.addr_hash);
    return derive_bc_address(pk);
}

bool timed_verify(const CryptoSuite& suite, std::span<const uint8_t> pk,
                  std::span<const uint8_t> sig, std::span<const uint8_t> msg, OpCounters& ops) {
    ScopedTimer t(ops.verify_us, ops.verify);
    return verify_raw(suite, pk, sig, msg);
}

Signature timed_sign(const KeyPair& key, const SignedContent& content, OpCounters& ops) {
    ScopedTimer t(ops.sign_us, ops.sign);
    return sign(key, content);
}

}  // namespace

const char* to_string(HandshakeError e) {
    switch (e) {
        case HandshakeError::AddressKeyMismatch: return "AddressKeyMismatch";
        case HandshakeError::SignatureInvalid: return "SignatureInvalid";
        case HandshakeError::FieldMismatch: return "FieldMismatch";
        case HandshakeError::NonceReplay: return "NonceReplay";
        case HandshakeError::DecryptFailed: return "DecryptFailed";
        case HandshakeError::WrongPhase: return "WrongPhase";
    }
    return "?";
}

const char* to_string(Phase p) {
    switch (p) {
        case Phase::Idle: return "Idle";
        case Phase::AwaitingResponse: return "AwaitingResponse";
        case Phase::AwaitingConfirm: return "AwaitingConfirm";
        case Phase::Established: return "Established";
        case Phase::Failed: return "Failed";
    }
    return "?";
}

OpCounters& OpCounters::operator+=(const OpCounters& o) {
    sign += o.sign;
    verify += o.verify;
    addr_hash += o.addr_hash;
    kem_seal += o.kem_seal;
    kem_open += o.kem_open;
    kdf += o.kdf;
    sign_us += o.sign_us;
    verify_us += o.verify_us;
    addr_hash_us += o.addr_hash_us;
    kem_us += o.kem_us;
    kdf_us += o.kdf_us;
    return *this;
}

PrimitiveCounts OpCounters::table_counts() const {
    PrimitiveCounts c;
    c.sign = static_cast<int>(sign);
    c.verify = static_cast<int>(verify);
    c.hash = static_cast<int>(addr_hash);
    return c;
}

bool NonceCache::contains(const BcAddress& peer, const Nonce& n) const {
    auto it = peers_.find(peer);
    return it != peers_.end() && it->second.members.count(n);
}

void NonceCache::insert(const BcAddress& peer, const Nonce& n) {
    PerPeer& pp = peers_[peer];
    if (pp.members.count(n)) return;
    pp.order.push_back(n);
    pp.members.insert(n);
    while (pp.order.size() > capacity_) {
        pp.members.erase(pp.order.front());
        pp.order.pop_front();
    }
}

Identity make_identity(const CryptoSuite& suite, PhysicalAddress address,
                       std::optional<Seed256> seed) {
    Identity id;
    id.keys = generate_keypair(suite, seed);
    id.address = std::move(address);
    id.bc = derive_bc_address(id.keys.public_key);
    return id;
}

std::pair<HandshakeState, AuthRequest> initiate(const Identity& self,
                                                const BcAddress& trusted_peer, Rng& rng) {
    HandshakeState st;
    st.role = Role::Initiator;
    st.phase = Phase::AwaitingResponse;
    st.self = self;
    st.trusted_peer = trusted_peer;
    st.nonce1 = rng.nonce();

    SignedContent content = request_content(self.address, *st.nonce1);
    Signature sig = timed_sign(self.keys, content, st.counters);

    AuthRequest req;
    req.trusted_peer_bc = trusted_peer;
    req.sender_address = self.address;
    req.suite = self.keys.suite.kind;
    req.sender_public_key = self.keys.public_key;
    req.nonce1 = *st.nonce1;
    req.signed_fields = content.canonical();
    req.signature_bytes = sig.bytes;
    return {std::move(st), std::move(req)};
}

HandshakeResult<RespondOk> respond(const Identity& self, const BcAddress& expected_peer,
                                   const AuthRequest& request, NonceCache& seen, Rng& rng) {
    OpCounters ops;

    // The request must be aimed at this node's own address.
    if (request.trusted_peer_bc != self.bc) return HandshakeError::AddressKeyMismatch;
    // The claimed key must hash to the pre-trusted peer address.
    if (timed_derive(request.sender_public_key, ops) != expected_peer)
        return HandshakeError::AddressKeyMismatch;
    CryptoSuite peer_suite = CryptoSuite::of(request.suite);
    if (!timed_verify(peer_suite, request.sender_public_key, request.signature_bytes,
                      request.signed_fields, ops))
        return HandshakeError::SignatureInvalid;
    // Signed copies must agree with the plaintext fields.
    auto covered = canonical_fields(request.signed_fields);
    if (!covered || covered->size() != 2) return HandshakeError::FieldMismatch;
    if ((*covered)[0] != request.sender_address.encoded()) return HandshakeError::FieldMismatch;
    if ((*covered)[1] != Bytes(request.nonce1.bytes.begin(), request.nonce1.bytes.end()))
        return HandshakeError::FieldMismatch;
    if (seen.contains(expected_peer, request.nonce1)) return HandshakeError::NonceReplay;
    seen.insert(expected_peer, request.nonce1);

    HandshakeState st;
    st.role = Role::Responder;
    st.phase = Phase::AwaitingConfirm;
    st.self = self;
    st.trusted_peer = expected_peer;
    st.peer_address = request.sender_address;
    st.nonce1 = request.nonce1;
    st.nonce2 = rng.nonce();

    SignedContent content = response_content(request.sender_address, self.address, *st.nonce2);
    Signature sig = timed_sign(self.keys, content, ops);
    st.counters = ops;

    AuthResponse resp;
    resp.trusted_peer_bc = expected_peer;
    resp.echoed_sender_address = request.sender_address;
    resp.responder_address = self.address;
    resp.suite = self.keys.suite.kind;
    resp.responder_public_key = self.keys.public_key;
    resp.nonce2 = *st.nonce2;
    resp.signed_fields = content.canonical();
    resp.signature_bytes = sig.bytes;
    return RespondOk{std::move(st), std::move(resp)};
}

HandshakeResult<ConfirmOk> confirm(HandshakeState& state, const AuthResponse& response,
                                   NonceCache& seen, Rng& rng) {
    if (state.phase != Phase::AwaitingResponse) return HandshakeError::WrongPhase;
    auto fail = [&](HandshakeError e) {
        state.phase = Phase::Failed;
        return e;
    };

    if (response.trusted_peer_bc != state.self.bc)
        return fail(HandshakeError::AddressKeyMismatch);
    if (timed_derive(response.responder_public_key, state.counters) != state.trusted_peer)
        return fail(HandshakeError::AddressKeyMismatch);
    CryptoSuite peer_suite = CryptoSuite::of(response.suite);
    if (!timed_verify(peer_suite, response.responder_public_key, response.signature_bytes,
                      response.signed_fields, state.counters))
        return fail(HandshakeError::SignatureInvalid);

    auto covered = canonical_fields(response.signed_fields);
    if (!covered || covered->size() != 3) return fail(HandshakeError::FieldMismatch);
    // Signed ADD_A must be this node's own address; signed ADD_B and nonce2
    // must match their plaintext copies.
    if ((*covered)[0] != state.self.address.encoded()) return fail(HandshakeError::FieldMismatch);
    if (response.echoed_sender_address != state.self.address)
        return fail(HandshakeError::FieldMismatch);
    if ((*covered)[1] != response.responder_address.encoded())
        return fail(HandshakeError::FieldMismatch);
    if ((*covered)[2] != Bytes(response.nonce2.bytes.begin(), response.nonce2.bytes.end()))
        return fail(HandshakeError::FieldMismatch);
    if (seen.contains(state.trusted_peer, response.nonce2))
        return fail(HandshakeError::NonceReplay);
    seen.insert(state.trusted_peer, response.nonce2);

    state.nonce2 = response.nonce2;
    state.peer_address = response.responder_address;

    std::array<uint8_t, 32> key_material{};
    rng.fill(key_material);
    Bytes ciphertext;
    {
        ScopedTimer t(state.counters.kem_us, state.counters.kem_seal);
        ciphertext = kem_seal(peer_suite, response.responder_public_key, key_material, rng);
    }

    SessionKey key = derive_session_key(key_material, *state.nonce1, *state.nonce2,
                                        state.trusted_peer, 0, state.counters);
    state.session_key = key;
    state.phase = Phase::Established;

    SessionKeyConfirm msg;
    msg.peer_bc = state.trusted_peer;
    msg.verified_responder_address = response.responder_address;
    msg.sender_address = state.self.address;
    msg.encrypted_key_material = std::move(ciphertext);
    return ConfirmOk{std::move(msg), key};
}

HandshakeResult<SessionKey> finalize(HandshakeState& state, const SessionKeyConfirm& msg) {
    if (state.phase != Phase::AwaitingConfirm) return HandshakeError::WrongPhase;
    auto fail = [&](HandshakeError e) {
        state.phase = Phase::Failed;
        return e;
    };

    std::optional<Bytes> key_material;
    {
        ScopedTimer t(state.counters.kem_us, state.counters.kem_open);
        key_material = kem_open(state.self.keys, msg.encrypted_key_material);
    }
    if (!key_material || key_material->size() != 32) return fail(HandshakeError::DecryptFailed);

    if (msg.verified_responder_address != state.self.address)
        return fail(HandshakeError::FieldMismatch);
    if (msg.peer_bc != state.self.bc) return fail(HandshakeError::FieldMismatch);
    if (state.peer_address && msg.sender_address != *state.peer_address)
        return fail(HandshakeError::FieldMismatch);

    SessionKey key = derive_session_key(*key_material, *state.nonce1, *state.nonce2,
                                        state.trusted_peer, 0, state.counters);
    state.session_key = key;
    state.phase = Phase::Established;
    return key;
}

PrimitiveCounts handshake_cost_model(const CryptoSuite&) {
    PrimitiveCounts c;
    c.sign = 2;
    c.verify = 2;
    c.hash = 2;
    return c;
}

// ---- codec ----------------------------------------------------------------

namespace {

constexpr uint8_t kKindRequest = 1;
constexpr uint8_t kKindResponse = 2;
constexpr uint8_t kKindConfirm = 3;

void put_phys(ByteWriter& w, const PhysicalAddress& a) {
    Bytes enc = a.encoded();
    w.u8(static_cast<uint8_t>(enc.size()));
    w.raw(enc);
}

bool get_phys(ByteReader& r, PhysicalAddress& out) {
    uint8_t n = 0;
    if (!r.u8(n)) return false;
    Bytes enc;
    if (!r.raw(enc, n)) return false;
    auto decoded = PhysicalAddress::decode(enc);
    if (!decoded) return false;
    out = std::move(*decoded);
    return true;
}

void put_blob16(ByteWriter& w, const Bytes& b) {
    w.u16(static_cast<uint16_t>(b.size()));
    w.raw(b);
}

bool get_blob16(ByteReader& r, Bytes& out) {
    uint16_t n = 0;
    if (!r.u16(n)) return false;
    return r.raw(out, n);
}

bool valid_mode(uint8_t tag) {
    return tag == static_cast<uint8_t>(CodecMode::Concrete) ||
           tag == static_cast<uint8_t>(CodecMode::PaperAccounting);
}

}  // namespace

Bytes encode(const AuthRequest& m, CodecMode mode) {
    ByteWriter w;
    w.u8(static_cast<uint8_t>(mode));
    w.u8(kKindRequest);
    w.u8(static_cast<uint8_t>(m.suite));
    w.raw(m.trusted_peer_bc.bytes);
    put_phys(w, m.sender_address);
    put_blob16(w, m.sender_public_key);
    w.raw(m.nonce1.bytes);
    put_blob16(w, m.signed_fields);
    put_blob16(w, m.signature_bytes);
    return w.take();
}

Bytes encode(const AuthResponse& m, CodecMode mode) {
    ByteWriter w;
    w.u8(static_cast<uint8_t>(mode));
    w.u8(kKindResponse);
    w.u8(static_cast<uint8_t>(m.suite));
    w.raw(m.trusted_peer_bc.bytes);
    put_phys(w, m.echoed_sender_address);
    put_phys(w, m.responder_address);
    put_blob16(w, m.responder_public_key);
    w.raw(m.nonce2.bytes);
    put_blob16(w, m.signed_fields);
    put_blob16(w, m.signature_bytes);
    return w.take();
}

Bytes encode(const SessionKeyConfirm& m, CodecMode mode) {
    ByteWriter w;
    w.u8(static_cast<uint8_t>(mode));
    w.u8(kKindConfirm);
    w.raw(m.peer_bc.bytes);
    put_phys(w, m.verified_responder_address);
    put_phys(w, m.sender_address);
    put_blob16(w, m.encrypted_key_material);
    return w.take();
}

std::optional<std::pair<AuthRequest, CodecMode>> decode_request(std::span<const uint8_t> wire) {
    ByteReader r(wire);
    uint8_t mode = 0, kind = 0, suite = 0;
    AuthRequest m;
    if (!r.u8(mode) || !valid_mode(mode)) return std::nullopt;
    if (!r.u8(kind) || kind != kKindRequest) return std::nullopt;
    if (!r.u8(suite)) return std::nullopt;
    if (suite != static_cast<uint8_t>(SuiteKind::FiniteField) &&
        suite != static_cast<uint8_t>(SuiteKind::EllipticCurve))
        return std::nullopt;
    m.suite = static_cast<SuiteKind>(suite);
    if (!r.raw(m.trusted_peer_bc.bytes)) return std::nullopt;
    if (!get_phys(r, m.sender_address)) return std::nullopt;
    if (!get_blob16(r, m.sender_public_key)) return std::nullopt;
    if (!r.raw(m.nonce1.bytes)) return std::nullopt;
    if (!get_blob16(r, m.signed_fields)) return std::nullopt;
    if (!get_blob16(r, m.signature_bytes)) return std::nullopt;
    if (!r.done()) return std::nullopt;
    return std::make_pair(std::move(m), static_cast<CodecMode>(mode));
}

std::optional<std::pair<AuthResponse, CodecMode>> decode_response(std::span<const uint8_t> wire) {
    ByteReader r(wire);
    uint8_t mode = 0, kind = 0, suite = 0;
    AuthResponse m;
    if (!r.u8(mode) || !valid_mode(mode)) return std::nullopt;
    if (!r.u8(kind) || kind != kKindResponse) return std::nullopt;
    if (!r.u8(suite)) return std::nullopt;
    if (suite != static_cast<uint8_t>(SuiteKind::FiniteField) &&
        suite != static_cast<uint8_t>(SuiteKind::EllipticCurve))
        return std::nullopt;
    m.suite = static_cast<SuiteKind>(suite);
    if (!r.raw(m.trusted_peer_bc.bytes)) return std::nullopt;
    if (!get_phys(r, m.echoed_sender_address)) return std::nullopt;
    if (!get_phys(r, m.responder_address)) return std::nullopt;
    if (!get_blob16(r, m.responder_public_key)) return std::nullopt;
    if (!r.raw(m.nonce2.bytes)) return std::nullopt;
    if (!get_blob16(r, m.signed_fields)) return std::nullopt;
    if (!get_blob16(r, m.signature_bytes)) return std::nullopt;
    if (!r.done()) return std::nullopt;
    return std::make_pair(std::move(m), static_cast<CodecMode>(mode));
}

std::optional<std::pair<SessionKeyConfirm, CodecMode>> decode_confirm(
    std::span<const uint8_t> wire) {
    ByteReader r(wire);
    uint8_t mode = 0, kind = 0;
    SessionKeyConfirm m;
    if (!r.u8(mode) || !valid_mode(mode)) return std::nullopt;
    if (!r.u8(kind) || kind != kKindConfirm) return std::nullopt;
    if (!r.raw(m.peer_bc.bytes)) return std::nullopt;
    if (!get_phys(r, m.verified_responder_address)) return std::nullopt;
    if (!get_phys(r, m.sender_address)) return std::nullopt;
    if (!get_blob16(r, m.encrypted_key_material)) return std::nullopt;
    if (!r.done()) return std::nullopt;
    return std::make_pair(std::move(m), static_cast<CodecMode>(mode));
}

size_t accounting_bits(const AuthRequest& m, CodecMode mode) {
    size_t plain = 272 + addr_bits(m.sender_address) + m.sender_public_key.size() * 8 + 256;
    size_t sig = mode == CodecMode::PaperAccounting
                     ? addr_bits(m.sender_address) + 256
                     : m.signature_bytes.size() * 8;
    return plain + sig;
}

size_t accounting_bits(const AuthResponse& m, CodecMode mode) {
    size_t plain = 272 + addr_bits(m.echoed_sender_address) + addr_bits(m.responder_address) +
                   m.responder_public_key.size() * 8 + 256;
    size_t sig = mode == CodecMode::PaperAccounting
                     ? addr_bits(m.echoed_sender_address) + addr_bits(m.responder_address) + 256
                     : m.signature_bytes.size() * 8;
    return plain + sig;
}

size_t accounting_bits(const SessionKeyConfirm& m, CodecMode) {
    return 272 + addr_bits(m.verified_responder_address) + addr_bits(m.sender_address) +
           m.encrypted_key_material.size() * 8;
}

HandshakeRun run_handshake(const Identity& initiator, const Identity& responder, Rng& rng) {
    HandshakeRun run;
    NonceCache initiator_seen, responder_seen;

    auto [ist, request] = initiate(initiator, responder.bc, rng);
    auto responded = respond(responder, initiator.bc, request, responder_seen, rng);
    if (!is_ok(responded)) {
        run.error = error_of(responded);
        return run;
    }
    auto& rok = std::get<RespondOk>(responded);
    auto confirmed = confirm(ist, rok.response, initiator_seen, rng);
    if (!is_ok(confirmed)) {
        run.error = error_of(confirmed);
        return run;
    }
    auto& cok = std::get<ConfirmOk>(confirmed);
    auto finalized = finalize(rok.state, cok.message);
    if (!is_ok(finalized)) {
        run.error = error_of(finalized);
        return run;
    }
    run.ok = true;
    run.initiator_key = cok.key;
    run.responder_key = std::get<SessionKey>(finalized);
    run.initiator_ops = ist.counters;
    run.responder_ops = rok.state.counters;
    return run;
}

}  // namespace beran

#include "beran/ledger.hpp"

#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace beran {

namespace {

constexpr const char* kBcLabel = "bc_address";
constexpr const char* kPhysLabel = "physical_address";

// Record-level invariants shared by submit and chain validation.
bool record_valid(const BindingRecord& r) {
    if (r.public_key.empty()) return false;
    if (derive_bc_address(r.public_key) != r.bc_address) return false;
    SignedContent content = binding_signed_content(r.bc_address, r.physical_address);
    return verify(r.signature.suite, r.public_key, r.signature, content);
}

}  // namespace

PhysicalAddress PhysicalAddress::mac48(std::span<const uint8_t> b) {
    if (b.size() != 6) throw std::invalid_argument("Mac48 must be 6 bytes");
    return {PhysKind::Mac48, Bytes(b.begin(), b.end())};
}

PhysicalAddress PhysicalAddress::ipv6(std::span<const uint8_t> b) {
    if (b.size() != 16) throw std::invalid_argument("Ipv6 must be 16 bytes");
    return {PhysKind::Ipv6, Bytes(b.begin(), b.end())};
}

Bytes PhysicalAddress::encoded() const {
    Bytes out;
    out.reserve(1 + bytes.size());
    out.push_back(static_cast<uint8_t>(kind));
    out.insert(out.end(), bytes.begin(), bytes.end());
    return out;
}

std::optional<PhysicalAddress> PhysicalAddress::decode(std::span<const uint8_t> enc) {
    if (enc.empty()) return std::nullopt;
    auto kind = static_cast<PhysKind>(enc[0]);
    size_t want = kind == PhysKind::Mac48 ? 6 : kind == PhysKind::Ipv6 ? 16 : 0;
    if (want == 0 || enc.size() != 1 + want) return std::nullopt;
    return PhysicalAddress{kind, Bytes(enc.begin() + 1, enc.end())};
}

std::string PhysicalAddress::to_string() const {
    std::string out;
    char buf[4];
    for (size_t i = 0; i < bytes.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%02x", bytes[i]);
        if (i) out += kind == PhysKind::Mac48 ? ":" : "";
        out += buf;
    }
    return out;
}

SignedContent binding_signed_content(const BcAddress& bc, const PhysicalAddress& phys) {
    SignedContent content;
    content.add(kBcLabel, bc.bytes);
    Bytes phys_enc = phys.encoded();
    content.add(kPhysLabel, phys_enc);
    return content;
}

BindingRecord make_binding(const KeyPair& key, const PhysicalAddress& phys, uint64_t sequence,
                           uint64_t timestamp) {
    BindingRecord r;
    r.bc_address = derive_bc_address(key.public_key);
    r.physical_address = phys;
    r.public_key = key.public_key;
    r.signature = sign(key, binding_signed_content(r.bc_address, phys));
    r.sequence_number = sequence;
    r.timestamp = timestamp;
    return r;
}

Bytes BindingRecord::canonical() const {
    CanonicalWriter w;
    w.field(bc_address.bytes);
    Bytes phys_enc = physical_address.encoded();
    w.field(phys_enc);
    w.field(public_key);
    w.field_u8(static_cast<uint8_t>(signature.suite.kind));
    w.field(signature.bytes);
    w.field_u64(sequence_number);
    w.field_u64(timestamp);
    return w.take();
}

std::optional<BindingRecord> BindingRecord::from_canonical(std::span<const uint8_t> image) {
    auto fields = canonical_fields(image);
    if (!fields || fields->size() != 7) return std::nullopt;
    auto& f = *fields;
    if (f[0].size() != 34 || f[3].size() != 1 || f[5].size() != 8 || f[6].size() != 8)
        return std::nullopt;
    auto phys = PhysicalAddress::decode(f[1]);
    if (!phys) return std::nullopt;
    auto kind = static_cast<SuiteKind>(f[3][0]);
    if (kind != SuiteKind::FiniteField && kind != SuiteKind::EllipticCurve) return std::nullopt;

    BindingRecord r;
    std::copy(f[0].begin(), f[0].end(), r.bc_address.bytes.begin());
    r.physical_address = *phys;
    r.public_key = f[2];
    r.signature.suite = CryptoSuite::of(kind);
    r.signature.bytes = f[4];
    r.signature.signed_content_descriptor = {kBcLabel, kPhysLabel};
    auto u64_of = [](const Bytes& b) {
        uint64_t v = 0;
        for (uint8_t byte : b) v = (v << 8) | byte;
        return v;
    };
    r.sequence_number = u64_of(f[5]);
    r.timestamp = u64_of(f[6]);
    return r;
}

Bytes Block::hash_image() const {
    CanonicalWriter w;
    w.field_u64(height);
    w.field(previous_hash);
    w.field_u64(records.size());
    for (const auto& r : records) {
        Bytes img = r.canonical();
        w.field(img);
    }
    w.field_u64(balance_deltas.size());
    for (const auto& d : balance_deltas) {
        w.field(d.account.bytes);
        w.field_i64(d.amount);
    }
    return w.take();
}

Bytes Block::canonical() const {
    CanonicalWriter w;
    Bytes img = hash_image();
    w.field(img);
    w.field(block_hash);
    return w.take();
}

std::optional<Block> Block::from_canonical(std::span<const uint8_t> image) {
    auto outer = canonical_fields(image);
    if (!outer || outer->size() != 2 || (*outer)[1].size() != 32) return std::nullopt;
    auto inner = canonical_fields((*outer)[0]);
    if (!inner || inner->size() < 4) return std::nullopt;
    auto& f = *inner;
    auto u64_of = [](const Bytes& b) -> std::optional<uint64_t> {
        if (b.size() != 8) return std::nullopt;
        uint64_t v = 0;
        for (uint8_t byte : b) v = (v << 8) | byte;
        return v;
    };

    Block blk;
    auto height = u64_of(f[0]);
    if (!height || f[1].size() != 32) return std::nullopt;
    blk.height = *height;
    std::copy(f[1].begin(), f[1].end(), blk.previous_hash.begin());

    auto n_records = u64_of(f[2]);
    if (!n_records) return std::nullopt;
    size_t pos = 3;
    for (uint64_t i = 0; i < *n_records; ++i) {
        if (pos >= f.size()) return std::nullopt;
        auto rec = BindingRecord::from_canonical(f[pos++]);
        if (!rec) return std::nullopt;
        blk.records.push_back(std::move(*rec));
    }
    if (pos >= f.size()) return std::nullopt;
    auto n_deltas = u64_of(f[pos++]);
    if (!n_deltas) return std::nullopt;
    for (uint64_t i = 0; i < *n_deltas; ++i) {
        if (pos + 1 >= f.size() + 1 || pos + 2 > f.size()) return std::nullopt;
        if (f[pos].size() != 34) return std::nullopt;
        BalanceDelta d;
        std::copy(f[pos].begin(), f[pos].end(), d.account.bytes.begin());
        auto amt = u64_of(f[pos + 1]);
        if (!amt) return std::nullopt;
        d.amount = static_cast<int64_t>(*amt);
        blk.balance_deltas.push_back(d);
        pos += 2;
    }
    if (pos != f.size()) return std::nullopt;
    std::copy((*outer)[1].begin(), (*outer)[1].end(), blk.block_hash.begin());
    return blk;
}

const char* to_string(SubmitResult r) {
    switch (r) {
        case SubmitResult::Accepted: return "Accepted";
        case SubmitResult::AddressKeyMismatch: return "AddressKeyMismatch";
        case SubmitResult::BadSignature: return "BadSignature";
        case SubmitResult::StaleSequence: return "StaleSequence";
    }
    return "?";
}

const char* to_string(SyncResult r) {
    switch (r) {
        case SyncResult::Merged: return "Merged";
        case SyncResult::InvalidChain: return "InvalidChain";
        case SyncResult::NotLonger: return "NotLonger";
    }
    return "?";
}

Ledger::Ledger(std::vector<BalanceDelta> genesis_grants) {
    Block genesis;
    genesis.height = 0;
    genesis.previous_hash = Hash256{};
    genesis.balance_deltas = std::move(genesis_grants);
    Bytes img = genesis.hash_image();
    genesis.block_hash = sha256(img);
    chain_.push_back(std::move(genesis));
    apply_block(chain_.back());
}

std::optional<Ledger> Ledger::from_chain(std::vector<Block> chain) {
    if (validate_chain(chain)) return std::nullopt;  // non-null -> bad height
    Ledger ledger;
    ledger.chain_.clear();
    ledger.binding_index_.clear();
    ledger.reverse_index_.clear();
    ledger.balances_.clear();
    for (auto& block : chain) {
        ledger.chain_.push_back(std::move(block));
        ledger.apply_block(ledger.chain_.back());
    }
    return ledger;
}

std::optional<uint64_t> Ledger::effective_sequence(const BcAddress& bc) const {
    std::optional<uint64_t> seq;
    auto it = binding_index_.find(bc);
    if (it != binding_index_.end()) seq = it->second.sequence_number;
    for (const auto& r : pending_records_) {
        if (r.bc_address == bc && (!seq || r.sequence_number > *seq)) seq = r.sequence_number;
    }
    return seq;
}

SubmitResult Ledger::submit_binding(const BindingRecord& record) {
    if (record.public_key.empty() ||
        derive_bc_address(record.public_key) != record.bc_address)
        return SubmitResult::AddressKeyMismatch;
    SignedContent content =
        binding_signed_content(record.bc_address, record.physical_address);
    if (!verify(record.signature.suite, record.public_key, record.signature, content))
        return SubmitResult::BadSignature;
    auto last = effective_sequence(record.bc_address);
    if (last && record.sequence_number <= *last) return SubmitResult::StaleSequence;
    pending_records_.push_back(record);
    return SubmitResult::Accepted;
}

void Ledger::credit(const BcAddress& account, int64_t amount) {
    pending_deltas_.push_back({account, amount});
}

const Block& Ledger::commit_block() {
    Block block;
    block.height = chain_.back().height + 1;
    block.previous_hash = chain_.back().block_hash;
    block.records = std::move(pending_records_);
    block.balance_deltas = std::move(pending_deltas_);
    pending_records_.clear();
    pending_deltas_.clear();
    Bytes img = block.hash_image();
    block.block_hash = sha256(img);
    chain_.push_back(std::move(block));
    apply_block(chain_.back());
    return chain_.back();
}

void Ledger::apply_block(const Block& block) {
    for (const auto& r : block.records) {
        auto prev = binding_index_.find(r.bc_address);
        if (prev != binding_index_.end()) {
            // Old physical address stops resolving to this owner.
            auto rev = reverse_index_.find(prev->second.physical_address.encoded());
            if (rev != reverse_index_.end() && rev->second == r.bc_address)
                reverse_index_.erase(rev);
        }
        binding_index_[r.bc_address] = r;
        reverse_index_[r.physical_address.encoded()] = r.bc_address;
    }
    for (const auto& d : block.balance_deltas) {
        int64_t& bal = balances_[d.account];
        bal += d.amount;
        if (bal < 0) bal = 0;
    }
}

std::optional<PhysicalAddress> Ledger::lookup_by_bc(const BcAddress& bc) const {
    auto it = binding_index_.find(bc);
    if (it == binding_index_.end()) return std::nullopt;
    return it->second.physical_address;
}

std::optional<BcAddress> Ledger::lookup_by_phys(const PhysicalAddress& phys) const {
    auto it = reverse_index_.find(phys.encoded());
    if (it == reverse_index_.end()) return std::nullopt;
    return it->second;
}

const BindingRecord* Ledger::latest_binding(const BcAddress& bc) const {
    auto it = binding_index_.find(bc);
    return it == binding_index_.end() ? nullptr : &it->second;
}

std::optional<uint64_t> Ledger::validate_chain(const std::vector<Block>& chain) {
    if (chain.empty()) return 0;
    std::map<BcAddress, std::optional<uint64_t>> seq_watermark;
    for (size_t i = 0; i < chain.size(); ++i) {
        const Block& b = chain[i];
        if (b.height != i) return i;
        if (i == 0) {
            if (b.previous_hash != Hash256{}) return 0;
        } else if (b.previous_hash != chain[i - 1].block_hash) {
            return i;
        }
        Bytes img = b.hash_image();
        if (sha256(img) != b.block_hash) return i;
        for (const auto& r : b.records) {
            if (!record_valid(r)) return i;
            auto& mark = seq_watermark[r.bc_address];
            if (mark && r.sequence_number <= *mark) return i;
            mark = r.sequence_number;
        }
    }
    return std::nullopt;
}

std::optional<uint64_t> Ledger::verify_chain() const { return validate_chain(chain_); }

bool Ledger::check_access(const BcAddress& bc, int64_t minimum_balance) const {
    if (minimum_balance < 0) throw std::invalid_argument("minimum_balance must be >= 0");
    bool registered = binding_index_.count(bc) || balances_.count(bc);
    if (!registered) return false;
    return balance(bc) >= minimum_balance;
}

int64_t Ledger::balance(const BcAddress& bc) const {
    auto it = balances_.find(bc);
    return it == balances_.end() ? 0 : it->second;
}

SyncResult Ledger::sync_from(const std::vector<Block>& peer_chain) {
    if (validate_chain(peer_chain)) return SyncResult::InvalidChain;
    if (peer_chain.size() <= chain_.size()) return SyncResult::NotLonger;

    std::vector<BindingRecord> old_pending = std::move(pending_records_);
    auto adopted = from_chain(peer_chain);
    if (!adopted) return SyncResult::InvalidChain;
    *this = std::move(*adopted);
    // Pending submissions are re-validated against the adopted state.
    for (const auto& r : old_pending) submit_binding(r);
    return SyncResult::Merged;
}

std::string Ledger::export_text() const {
    std::string out;
    for (const auto& block : chain_) {
        Bytes img = block.canonical();
        out += to_hex(img);
        out += '\n';
    }
    return out;
}

std::optional<Ledger> Ledger::import_text(const std::string& text) {
    std::vector<Block> chain;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto raw = from_hex(line);
        if (!raw) return std::nullopt;
        auto block = Block::from_canonical(*raw);
        if (!block) return std::nullopt;
        chain.push_back(std::move(*block));
    }
    return from_chain(std::move(chain));
}

}  // namespace beran

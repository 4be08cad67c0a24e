#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "beran/crypto.hpp"

namespace beran {

enum class PhysKind : uint8_t { Mac48 = 1, Ipv6 = 2 };

struct PhysicalAddress {
    PhysKind kind = PhysKind::Mac48;
    Bytes bytes;  // 6 for Mac48, 16 for Ipv6

    static PhysicalAddress mac48(std::span<const uint8_t> b);
    static PhysicalAddress ipv6(std::span<const uint8_t> b);

    Bytes encoded() const;  // kind byte + raw bytes
    static std::optional<PhysicalAddress> decode(std::span<const uint8_t> enc);
    std::string to_string() const;

    auto operator<=>(const PhysicalAddress&) const = default;
};

/// Signed claim binding a blockchain address to a physical address. The
/// signature covers (bc_address, physical_address); sequence numbers order
/// re-registrations of the same bc_address.
struct BindingRecord {
    BcAddress bc_address;
    PhysicalAddress physical_address;
    Bytes public_key;
    Signature signature;
    uint64_t sequence_number = 0;
    uint64_t timestamp = 0;

    Bytes canonical() const;
    static std::optional<BindingRecord> from_canonical(std::span<const uint8_t> image);
    bool operator==(const BindingRecord& other) const { return canonical() == other.canonical(); }
};

/// The content a binding signature covers.
SignedContent binding_signed_content(const BcAddress& bc, const PhysicalAddress& phys);

/// Convenience: build a fully signed record for a key pair.
BindingRecord make_binding(const KeyPair& key, const PhysicalAddress& phys, uint64_t sequence,
                           uint64_t timestamp);

struct BalanceDelta {
    BcAddress account;
    int64_t amount = 0;
    bool operator==(const BalanceDelta&) const = default;
};

struct Block {
    uint64_t height = 0;
    Hash256 previous_hash{};
    std::vector<BindingRecord> records;
    std::vector<BalanceDelta> balance_deltas;
    Hash256 block_hash{};

    /// Image the block hash is computed over (everything but block_hash).
    Bytes hash_image() const;
    /// Full canonical image including block_hash; the export unit.
    Bytes canonical() const;
    static std::optional<Block> from_canonical(std::span<const uint8_t> image);
};

enum class SubmitResult { Accepted, AddressKeyMismatch, BadSignature, StaleSequence };
enum class SyncResult { Merged, InvalidChain, NotLonger };

const char* to_string(SubmitResult r);
const char* to_string(SyncResult r);

/// Append-only hash-chained registry of bindings and balances.
/// Single-writer, multi-reader; reads are const.
class Ledger {
public:
    /// Fresh chain whose genesis block carries the given balance grants.
    explicit Ledger(std::vector<BalanceDelta> genesis_grants = {});

    /// Rebuilds a ledger by folding a full chain. Returns nullopt when the
    /// chain fails validation.
    static std::optional<Ledger> from_chain(std::vector<Block> chain);

    SubmitResult submit_binding(const BindingRecord& record);
    /// Stage a balance change for the next block. Balances floor at zero.
    void credit(const BcAddress& account, int64_t amount);

    const Block& commit_block();

    std::optional<PhysicalAddress> lookup_by_bc(const BcAddress& bc) const;
    std::optional<BcAddress> lookup_by_phys(const PhysicalAddress& phys) const;
    const BindingRecord* latest_binding(const BcAddress& bc) const;

    /// nullopt when every hash link checks out; otherwise the first
    /// inconsistent height.
    std::optional<uint64_t> verify_chain() const;
    static std::optional<uint64_t> validate_chain(const std::vector<Block>& chain);

    bool check_access(const BcAddress& bc, int64_t minimum_balance) const;
    int64_t balance(const BcAddress& bc) const;

    SyncResult sync_from(const std::vector<Block>& peer_chain);

    const std::vector<Block>& chain() const { return chain_; }
    uint64_t height() const { return chain_.back().height; }
    size_t pending_count() const { return pending_records_.size() + pending_deltas_.size(); }

    const std::map<BcAddress, BindingRecord>& binding_index() const { return binding_index_; }
    const std::map<Bytes, BcAddress>& reverse_index() const { return reverse_index_; }
    const std::map<BcAddress, int64_t>& balances() const { return balances_; }

    /// Line-delimited chain export: one block per line, lowercase hex of the
    /// canonical block image.
    std::string export_text() const;
    static std::optional<Ledger> import_text(const std::string& text);

private:
    void apply_block(const Block& block);
    std::optional<uint64_t> effective_sequence(const BcAddress& bc) const;

    std::vector<Block> chain_;
    std::vector<BindingRecord> pending_records_;
    std::vector<BalanceDelta> pending_deltas_;
    std::map<BcAddress, BindingRecord> binding_index_;
    std::map<Bytes, BcAddress> reverse_index_;
    std::map<BcAddress, int64_t> balances_;
};

}  // namespace beran

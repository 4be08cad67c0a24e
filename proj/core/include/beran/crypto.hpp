#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "beran/bytes.hpp"

namespace beran {

enum class SuiteKind : uint8_t { FiniteField = 1, EllipticCurve = 2 };

const char* suite_name(SuiteKind kind);  // "ff" / "ec"
std::optional<SuiteKind> suite_from_name(std::string_view name);

/// A signature suite. FiniteField is DSA over a fixed 3072-bit group with a
/// 256-bit subgroup; EllipticCurve is Ed25519. Key lengths are part of the
/// contract: 3072/256-bit public keys, 256-bit private keys.
struct CryptoSuite {
    SuiteKind kind;
    int public_key_bits;
    int private_key_bits;
    std::string signature_scheme_label;

    static CryptoSuite finite_field();
    static CryptoSuite elliptic_curve();
    static CryptoSuite of(SuiteKind kind);
};

using Seed256 = std::array<uint8_t, 32>;

struct KeyPair {
    CryptoSuite suite;
    Bytes public_key;   // suite.public_key_bits wide, fixed length
    Bytes private_key;  // suite.private_key_bits wide, fixed length
};

/// 272-bit blockchain address: 1-byte version, 32-byte hash of the public
/// key, 1-byte checksum.
struct BcAddress {
    std::array<uint8_t, 34> bytes{};

    std::string hex() const { return to_hex(bytes); }
    auto operator<=>(const BcAddress&) const = default;
};

struct Nonce {
    std::array<uint8_t, 32> bytes{};
    auto operator<=>(const Nonce&) const = default;
};

/// Ordered field list covered by a signature. The canonical image is the
/// length-prefixed concatenation of the fields in declared order.
struct SignedContent {
    std::vector<std::pair<std::string, Bytes>> fields;

    void add(std::string label, std::span<const uint8_t> bytes);
    Bytes canonical() const;
    std::vector<std::string> labels() const;
};

struct Signature {
    CryptoSuite suite;
    Bytes bytes;
    std::vector<std::string> signed_content_descriptor;
};

/// Randomness source. SystemRng draws from the OS; SeededRng is a
/// deterministic SHA-256 counter stream for reproducible runs.
class Rng {
public:
    virtual ~Rng() = default;
    virtual void fill(std::span<uint8_t> out) = 0;

    Nonce nonce();
    Seed256 seed256();
};

class SystemRng final : public Rng {
public:
    void fill(std::span<uint8_t> out) override;
};

class SeededRng final : public Rng {
public:
    explicit SeededRng(const Seed256& seed) : seed_(seed) {}
    explicit SeededRng(uint64_t seed);
    void fill(std::span<uint8_t> out) override;

private:
    Seed256 seed_{};
    uint64_t counter_ = 0;
    std::array<uint8_t, 32> block_{};
    size_t block_used_ = 32;
};

/// Key generation. With a seed the output is reproducible; without one the
/// system entropy source is used.
/// Throws std::invalid_argument on an unsupported suite.
KeyPair generate_keypair(const CryptoSuite& suite,
                         std::optional<Seed256> seed = std::nullopt);

/// Hash a public key down to its 272-bit address.
/// Throws std::invalid_argument on empty input.
BcAddress derive_bc_address(std::span<const uint8_t> public_key);

/// Sign the canonical image of `content`. Throws std::invalid_argument on a
/// malformed key.
Signature sign(const KeyPair& key, const SignedContent& content);

/// True iff `sig` verifies under `public_key` over exactly `content`.
/// Malformed input of any kind yields false, never a throw.
bool verify(const CryptoSuite& suite, std::span<const uint8_t> public_key,
            const Signature& sig, const SignedContent& content);
bool verify_raw(const CryptoSuite& suite, std::span<const uint8_t> public_key,
                std::span<const uint8_t> sig_bytes, std::span<const uint8_t> message);

/// Asymmetric encryption of small key material to a public key.
/// EllipticCurve uses an X25519 sealed box; FiniteField uses an
/// ephemeral-static DH encapsulation over the DSA group with an
/// XSalsa20-Poly1305 payload.
Bytes kem_seal(const CryptoSuite& suite, std::span<const uint8_t> public_key,
               std::span<const uint8_t> plaintext, Rng& rng);
std::optional<Bytes> kem_open(const KeyPair& key, std::span<const uint8_t> ciphertext);

Hash256 sha256(std::span<const uint8_t> data);
Hash256 hmac_sha256(std::span<const uint8_t> key, std::span<const uint8_t> data);

/// One symmetric authenticated-encryption pass (XSalsa20-Poly1305); used by
/// the primitive timing harness.
Bytes secretbox_encrypt(const std::array<uint8_t, 32>& key, std::span<const uint8_t> plaintext);

/// X25519 scalar multiplication and modular exponentiation over the DSA
/// group; the component operations behind the (EC)DH timing entries.
void x25519_scalarmult_base(const std::array<uint8_t, 32>& scalar, std::array<uint8_t, 32>& out);
Bytes modexp_group(std::span<const uint8_t> exponent);

/// Fixed DSA group (3072-bit p, 256-bit q). Exposed for the benchmark and
/// tests; hex, lowercase.
const std::string& dsa_group_p_hex();
const std::string& dsa_group_q_hex();
const std::string& dsa_group_g_hex();

}  // namespace beran

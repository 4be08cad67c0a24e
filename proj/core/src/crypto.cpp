#include "beran/crypto.hpp"

#include <sodium.h>

#include <openssl/bn.h>
#include <openssl/core_names.h>
#include <openssl/evp.h>
#include <openssl/param_build.h>

#include <cstring>
#include <memory>
#include <mutex>
#include <stdexcept>

namespace beran {

namespace {

void ensure_sodium() {
    static std::once_flag flag;
    std::call_once(flag, [] {
        if (sodium_init() < 0) throw std::runtime_error("libsodium init failed");
    });
}

constexpr size_t kFfPublicKeyBytes = 384;   // 3072 bits
constexpr size_t kFfPrivateKeyBytes = 32;   // 256 bits
constexpr size_t kEcKeyBytes = 32;

struct BnDeleter {
    void operator()(BIGNUM* b) const { BN_free(b); }
};
using BnPtr = std::unique_ptr<BIGNUM, BnDeleter>;

struct DsaGroup {
    BnPtr p, q, g;
};

BnPtr bn_from_hex(const std::string& hex) {
    BIGNUM* b = nullptr;
    if (!BN_hex2bn(&b, hex.c_str())) throw std::runtime_error("BN_hex2bn failed");
    return BnPtr(b);
}

const DsaGroup& dsa_group() {
    static const DsaGroup group{bn_from_hex(dsa_group_p_hex()), bn_from_hex(dsa_group_q_hex()),
                                bn_from_hex(dsa_group_g_hex())};
    return group;
}

Bytes bn_to_fixed(const BIGNUM* b, size_t width) {
    Bytes out(width);
    if (BN_bn2binpad(b, out.data(), static_cast<int>(width)) < 0)
        throw std::runtime_error("BN_bn2binpad failed");
    return out;
}

struct EvpPkeyDeleter {
    void operator()(EVP_PKEY* k) const { EVP_PKEY_free(k); }
};
using PkeyPtr = std::unique_ptr<EVP_PKEY, EvpPkeyDeleter>;

// Builds an OpenSSL DSA key over the fixed group. `priv` may be null for a
// verify-only key.
PkeyPtr make_dsa_pkey(const BIGNUM* pub, const BIGNUM* priv) {
    const DsaGroup& grp = dsa_group();
    OSSL_PARAM_BLD* bld = OSSL_PARAM_BLD_new();
    if (!bld) throw std::runtime_error("OSSL_PARAM_BLD_new failed");
    bool ok = OSSL_PARAM_BLD_push_BN(bld, OSSL_PKEY_PARAM_FFC_P, grp.p.get()) &&
              OSSL_PARAM_BLD_push_BN(bld, OSSL_PKEY_PARAM_FFC_Q, grp.q.get()) &&
              OSSL_PARAM_BLD_push_BN(bld, OSSL_PKEY_PARAM_FFC_G, grp.g.get()) &&
              OSSL_PARAM_BLD_push_BN(bld, OSSL_PKEY_PARAM_PUB_KEY, pub);
    if (ok && priv) ok = OSSL_PARAM_BLD_push_BN(bld, OSSL_PKEY_PARAM_PRIV_KEY, priv);
    OSSL_PARAM* params = ok ? OSSL_PARAM_BLD_to_param(bld) : nullptr;
    OSSL_PARAM_BLD_free(bld);
    if (!params) throw std::runtime_error("DSA param build failed");

    EVP_PKEY_CTX* ctx = EVP_PKEY_CTX_new_from_name(nullptr, "DSA", nullptr);
    EVP_PKEY* pkey = nullptr;
    bool built = ctx && EVP_PKEY_fromdata_init(ctx) > 0 &&
                 EVP_PKEY_fromdata(ctx, &pkey, EVP_PKEY_KEYPAIR, params) > 0;
    EVP_PKEY_CTX_free(ctx);
    OSSL_PARAM_free(params);
    if (!built || !pkey) throw std::runtime_error("DSA key construction failed");
    return PkeyPtr(pkey);
}

// Scalar in [1, q-1] from 32 raw bytes.
BnPtr scalar_mod_q(std::span<const uint8_t> raw) {
    const DsaGroup& grp = dsa_group();
    BnPtr x(BN_bin2bn(raw.data(), static_cast<int>(raw.size()), nullptr));
    if (!x) throw std::runtime_error("BN_bin2bn failed");
    BnPtr qm1(BN_dup(grp.q.get()));
    BN_sub_word(qm1.get(), 1);
    BN_CTX* ctx = BN_CTX_new();
    BnPtr r(BN_new());
    if (!ctx || !BN_mod(r.get(), x.get(), qm1.get(), ctx)) {
        BN_CTX_free(ctx);
        throw std::runtime_error("BN_mod failed");
    }
    BN_CTX_free(ctx);
    BN_add_word(r.get(), 1);
    return r;
}

Bytes dsa_public_from_private(const BIGNUM* x) {
    const DsaGroup& grp = dsa_group();
    BN_CTX* ctx = BN_CTX_new();
    BnPtr y(BN_new());
    if (!ctx || !BN_mod_exp(y.get(), grp.g.get(), x, grp.p.get(), ctx)) {
        BN_CTX_free(ctx);
        throw std::runtime_error("BN_mod_exp failed");
    }
    BN_CTX_free(ctx);
    return bn_to_fixed(y.get(), kFfPublicKeyBytes);
}

// Ed25519 secret key (64 bytes) regrown from the stored 32-byte seed.
std::array<uint8_t, 64> ed25519_secret(const Bytes& seed) {
    if (seed.size() != kEcKeyBytes) throw std::invalid_argument("malformed key");
    std::array<uint8_t, 64> sk{};
    std::array<uint8_t, 32> pk{};
    crypto_sign_seed_keypair(pk.data(), sk.data(), seed.data());
    return sk;
}

constexpr std::string_view kFfKemInfo = "beran-ff-kem-v1";

}  // namespace

const char* suite_name(SuiteKind kind) {
    return kind == SuiteKind::FiniteField ? "ff" : "ec";
}

std::optional<SuiteKind> suite_from_name(std::string_view name) {
    if (name == "ff") return SuiteKind::FiniteField;
    if (name == "ec") return SuiteKind::EllipticCurve;
    return std::nullopt;
}

CryptoSuite CryptoSuite::finite_field() {
    return {SuiteKind::FiniteField, 3072, 256, "DSA-3072/256"};
}

CryptoSuite CryptoSuite::elliptic_curve() {
    return {SuiteKind::EllipticCurve, 256, 256, "Ed25519"};
}

CryptoSuite CryptoSuite::of(SuiteKind kind) {
    return kind == SuiteKind::FiniteField ? finite_field() : elliptic_curve();
}

void SignedContent::add(std::string label, std::span<const uint8_t> bytes) {
    fields.emplace_back(std::move(label), Bytes(bytes.begin(), bytes.end()));
}

Bytes SignedContent::canonical() const {
    CanonicalWriter w;
    for (const auto& [label, bytes] : fields) w.field(bytes);
    return w.take();
}

std::vector<std::string> SignedContent::labels() const {
    std::vector<std::string> out;
    out.reserve(fields.size());
    for (const auto& [label, bytes] : fields) out.push_back(label);
    return out;
}

Nonce Rng::nonce() {
    Nonce n;
    fill(n.bytes);
    return n;
}

Seed256 Rng::seed256() {
    Seed256 s;
    fill(s);
    return s;
}

void SystemRng::fill(std::span<uint8_t> out) {
    ensure_sodium();
    randombytes_buf(out.data(), out.size());
}

SeededRng::SeededRng(uint64_t seed) {
    for (int i = 0; i < 8; ++i) seed_[i] = static_cast<uint8_t>(seed >> (8 * i));
}

void SeededRng::fill(std::span<uint8_t> out) {
    ensure_sodium();
    for (uint8_t& b : out) {
        if (block_used_ == block_.size()) {
            ByteWriter w;
            w.raw(seed_);
            w.u64(counter_++);
            Bytes material = w.take();
            Hash256 h = sha256(material);
            std::copy(h.begin(), h.end(), block_.begin());
            block_used_ = 0;
        }
        b = block_[block_used_++];
    }
}

KeyPair generate_keypair(const CryptoSuite& suite, std::optional<Seed256> seed) {
    ensure_sodium();
    if (suite.kind != SuiteKind::FiniteField && suite.kind != SuiteKind::EllipticCurve)
        throw std::invalid_argument("unsupported suite kind");

    if (suite.kind == SuiteKind::EllipticCurve) {
        Seed256 s;
        if (seed) {
            s = *seed;
        } else {
            SystemRng().fill(s);
        }
        std::array<uint8_t, 64> sk{};
        std::array<uint8_t, 32> pk{};
        crypto_sign_seed_keypair(pk.data(), sk.data(), s.data());
        return {suite, Bytes(pk.begin(), pk.end()), Bytes(s.begin(), s.end())};
    }

    Seed256 raw;
    if (seed) {
        // Stretch the seed once so FF and EC keys from the same seed are unrelated.
        ByteWriter w;
        w.raw(*seed);
        const char tag[] = "beran-dsa-x";
        w.raw(std::span<const uint8_t>(reinterpret_cast<const uint8_t*>(tag), sizeof(tag) - 1));
        Bytes material = w.take();
        raw = sha256(material);
    } else {
        SystemRng().fill(raw);
    }
    BnPtr x = scalar_mod_q(raw);
    Bytes pub = dsa_public_from_private(x.get());
    return {suite, std::move(pub), bn_to_fixed(x.get(), kFfPrivateKeyBytes)};
}

BcAddress derive_bc_address(std::span<const uint8_t> public_key) {
    ensure_sodium();
    if (public_key.empty()) throw std::invalid_argument("empty public key");
    BcAddress addr;
    addr.bytes[0] = 0x01;  // address format version
    Hash256 h = sha256(public_key);
    std::copy(h.begin(), h.end(), addr.bytes.begin() + 1);
    Hash256 check = sha256(std::span<const uint8_t>(addr.bytes.data(), 33));
    addr.bytes[33] = check[0];
    return addr;
}

Signature sign(const KeyPair& key, const SignedContent& content) {
    ensure_sodium();
    if (key.private_key.empty() || content.fields.empty())
        throw std::invalid_argument("malformed key or empty content");
    Bytes message = content.canonical();

    if (key.suite.kind == SuiteKind::EllipticCurve) {
        if (key.private_key.size() != kEcKeyBytes) throw std::invalid_argument("malformed key");
        auto sk = ed25519_secret(key.private_key);
        Bytes sig(crypto_sign_BYTES);
        unsigned long long siglen = 0;
        crypto_sign_detached(sig.data(), &siglen, message.data(), message.size(), sk.data());
        sig.resize(siglen);
        return {key.suite, std::move(sig), content.labels()};
    }

    if (key.private_key.size() != kFfPrivateKeyBytes) throw std::invalid_argument("malformed key");
    BnPtr x(BN_bin2bn(key.private_key.data(), static_cast<int>(key.private_key.size()), nullptr));
    if (!x || BN_is_zero(x.get())) throw std::invalid_argument("malformed key");
    BnPtr y(BN_bin2bn(key.public_key.data(), static_cast<int>(key.public_key.size()), nullptr));
    PkeyPtr pkey = make_dsa_pkey(y.get(), x.get());

    EVP_MD_CTX* md = EVP_MD_CTX_new();
    if (!md) throw std::runtime_error("EVP_MD_CTX_new failed");
    size_t siglen = 0;
    bool ok = EVP_DigestSignInit(md, nullptr, EVP_sha256(), nullptr, pkey.get()) > 0 &&
              EVP_DigestSign(md, nullptr, &siglen, message.data(), message.size()) > 0;
    Bytes sig(siglen);
    ok = ok && EVP_DigestSign(md, sig.data(), &siglen, message.data(), message.size()) > 0;
    EVP_MD_CTX_free(md);
    if (!ok) throw std::runtime_error("DSA sign failed");
    sig.resize(siglen);
    return {key.suite, std::move(sig), content.labels()};
}

bool verify_raw(const CryptoSuite& suite, std::span<const uint8_t> public_key,
                std::span<const uint8_t> sig_bytes, std::span<const uint8_t> message) {
    ensure_sodium();
    try {
        if (suite.kind == SuiteKind::EllipticCurve) {
            if (public_key.size() != kEcKeyBytes || sig_bytes.size() != crypto_sign_BYTES)
                return false;
            return crypto_sign_verify_detached(sig_bytes.data(), message.data(), message.size(),
                                               public_key.data()) == 0;
        }
        if (suite.kind != SuiteKind::FiniteField) return false;
        if (public_key.size() != kFfPublicKeyBytes || sig_bytes.empty()) return false;
        BnPtr y(BN_bin2bn(public_key.data(), static_cast<int>(public_key.size()), nullptr));
        if (!y) return false;
        PkeyPtr pkey = make_dsa_pkey(y.get(), nullptr);
        EVP_MD_CTX* md = EVP_MD_CTX_new();
        if (!md) return false;
        bool ok = EVP_DigestVerifyInit(md, nullptr, EVP_sha256(), nullptr, pkey.get()) > 0 &&
                  EVP_DigestVerify(md, sig_bytes.data(), sig_bytes.size(), message.data(),
                                   message.size()) > 0;
        EVP_MD_CTX_free(md);
        return ok;
    } catch (...) {
        return false;
    }
}

bool verify(const CryptoSuite& suite, std::span<const uint8_t> public_key, const Signature& sig,
            const SignedContent& content) {
    if (sig.suite.kind != suite.kind) return false;
    if (sig.signed_content_descriptor != content.labels()) return false;
    Bytes message = content.canonical();
    return verify_raw(suite, public_key, sig.bytes, message);
}

Bytes kem_seal(const CryptoSuite& suite, std::span<const uint8_t> public_key,
               std::span<const uint8_t> plaintext, Rng& rng) {
    ensure_sodium();
    if (suite.kind == SuiteKind::EllipticCurve) {
        if (public_key.size() != kEcKeyBytes) throw std::invalid_argument("malformed key");
        std::array<uint8_t, crypto_box_PUBLICKEYBYTES> xpk{};
        if (crypto_sign_ed25519_pk_to_curve25519(xpk.data(), public_key.data()) != 0)
            throw std::invalid_argument("malformed key");
        Bytes ct(plaintext.size() + crypto_box_SEALBYTES);
        if (crypto_box_seal(ct.data(), plaintext.data(), plaintext.size(), xpk.data()) != 0)
            throw std::runtime_error("seal failed");
        return ct;
    }

    if (public_key.size() != kFfPublicKeyBytes) throw std::invalid_argument("malformed key");
    // Ephemeral-static DH over the DSA group, then a secretbox payload.
    Seed256 eraw = rng.seed256();
    BnPtr e = scalar_mod_q(eraw);
    const DsaGroup& grp = dsa_group();
    BN_CTX* ctx = BN_CTX_new();
    BnPtr c1(BN_new());
    BnPtr y(BN_bin2bn(public_key.data(), static_cast<int>(public_key.size()), nullptr));
    BnPtr shared(BN_new());
    bool ok = ctx && y && BN_mod_exp(c1.get(), grp.g.get(), e.get(), grp.p.get(), ctx) &&
              BN_mod_exp(shared.get(), y.get(), e.get(), grp.p.get(), ctx);
    BN_CTX_free(ctx);
    if (!ok) throw std::runtime_error("DH encapsulation failed");

    Bytes c1_bytes = bn_to_fixed(c1.get(), kFfPublicKeyBytes);
    Bytes shared_bytes = bn_to_fixed(shared.get(), kFfPublicKeyBytes);
    ByteWriter kdf_in;
    kdf_in.raw(std::span<const uint8_t>(reinterpret_cast<const uint8_t*>(kFfKemInfo.data()),
                                        kFfKemInfo.size()));
    kdf_in.raw(c1_bytes);
    kdf_in.raw(shared_bytes);
    Bytes kdf_material = kdf_in.take();
    Hash256 kek = sha256(kdf_material);

    std::array<uint8_t, crypto_secretbox_NONCEBYTES> nonce{};
    rng.fill(nonce);
    Bytes boxed(plaintext.size() + crypto_secretbox_MACBYTES);
    crypto_secretbox_easy(boxed.data(), plaintext.data(), plaintext.size(), nonce.data(),
                          kek.data());

    ByteWriter out;
    out.raw(c1_bytes);
    out.raw(nonce);
    out.raw(boxed);
    return out.take();
}

std::optional<Bytes> kem_open(const KeyPair& key, std::span<const uint8_t> ciphertext) {
    ensure_sodium();
    try {
        if (key.suite.kind == SuiteKind::EllipticCurve) {
            if (ciphertext.size() < crypto_box_SEALBYTES) return std::nullopt;
            auto sk64 = ed25519_secret(key.private_key);
            std::array<uint8_t, crypto_box_SECRETKEYBYTES> xsk{};
            std::array<uint8_t, crypto_box_PUBLICKEYBYTES> xpk{};
            if (crypto_sign_ed25519_sk_to_curve25519(xsk.data(), sk64.data()) != 0)
                return std::nullopt;
            if (crypto_sign_ed25519_pk_to_curve25519(xpk.data(), key.public_key.data()) != 0)
                return std::nullopt;
            Bytes pt(ciphertext.size() - crypto_box_SEALBYTES);
            if (crypto_box_seal_open(pt.data(), ciphertext.data(), ciphertext.size(), xpk.data(),
                                     xsk.data()) != 0)
                return std::nullopt;
            return pt;
        }

        constexpr size_t kHeader = kFfPublicKeyBytes + crypto_secretbox_NONCEBYTES;
        if (ciphertext.size() < kHeader + crypto_secretbox_MACBYTES) return std::nullopt;
        std::span<const uint8_t> c1_bytes = ciphertext.subspan(0, kFfPublicKeyBytes);
        std::span<const uint8_t> nonce =
            ciphertext.subspan(kFfPublicKeyBytes, crypto_secretbox_NONCEBYTES);
        std::span<const uint8_t> boxed = ciphertext.subspan(kHeader);

        const DsaGroup& grp = dsa_group();
        BnPtr c1(BN_bin2bn(c1_bytes.data(), static_cast<int>(c1_bytes.size()), nullptr));
        BnPtr x(BN_bin2bn(key.private_key.data(), static_cast<int>(key.private_key.size()),
                          nullptr));
        if (!c1 || !x) return std::nullopt;
        BN_CTX* ctx = BN_CTX_new();
        BnPtr shared(BN_new());
        bool ok = ctx && BN_mod_exp(shared.get(), c1.get(), x.get(), grp.p.get(), ctx);
        BN_CTX_free(ctx);
        if (!ok) return std::nullopt;

        Bytes shared_bytes = bn_to_fixed(shared.get(), kFfPublicKeyBytes);
        ByteWriter kdf_in;
        kdf_in.raw(std::span<const uint8_t>(reinterpret_cast<const uint8_t*>(kFfKemInfo.data()),
                                            kFfKemInfo.size()));
        kdf_in.raw(c1_bytes);
        kdf_in.raw(shared_bytes);
        Bytes kdf_material = kdf_in.take();
        Hash256 kek = sha256(kdf_material);

        Bytes pt(boxed.size() - crypto_secretbox_MACBYTES);
        if (crypto_secretbox_open_easy(pt.data(), boxed.data(), boxed.size(), nonce.data(),
                                       kek.data()) != 0)
            return std::nullopt;
        return pt;
    } catch (...) {
        return std::nullopt;
    }
}

Hash256 sha256(std::span<const uint8_t> data) {
    ensure_sodium();
    Hash256 out;
    crypto_hash_sha256(out.data(), data.data(), data.size());
    return out;
}

Hash256 hmac_sha256(std::span<const uint8_t> key, std::span<const uint8_t> data) {
    ensure_sodium();
    Hash256 out;
    crypto_auth_hmacsha256_state st;
    crypto_auth_hmacsha256_init(&st, key.data(), key.size());
    crypto_auth_hmacsha256_update(&st, data.data(), data.size());
    crypto_auth_hmacsha256_final(&st, out.data());
    return out;
}

Bytes secretbox_encrypt(const std::array<uint8_t, 32>& key, std::span<const uint8_t> plaintext) {
    ensure_sodium();
    std::array<uint8_t, crypto_secretbox_NONCEBYTES> nonce{};  // timing surface only
    Bytes ct(plaintext.size() + crypto_secretbox_MACBYTES);
    crypto_secretbox_easy(ct.data(), plaintext.data(), plaintext.size(), nonce.data(), key.data());
    return ct;
}

void x25519_scalarmult_base(const std::array<uint8_t, 32>& scalar, std::array<uint8_t, 32>& out) {
    ensure_sodium();
    crypto_scalarmult_base(out.data(), scalar.data());
}

Bytes modexp_group(std::span<const uint8_t> exponent) {
    const DsaGroup& grp = dsa_group();
    BnPtr e(BN_bin2bn(exponent.data(), static_cast<int>(exponent.size()), nullptr));
    if (!e) throw std::invalid_argument("bad exponent");
    BN_CTX* ctx = BN_CTX_new();
    BnPtr r(BN_new());
    bool ok = ctx && BN_mod_exp(r.get(), grp.g.get(), e.get(), grp.p.get(), ctx);
    BN_CTX_free(ctx);
    if (!ok) throw std::runtime_error("BN_mod_exp failed");
    return bn_to_fixed(r.get(), kFfPublicKeyBytes);
}

}  // namespace beran

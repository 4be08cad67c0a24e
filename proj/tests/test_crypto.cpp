#include <doctest.h>

#include <set>

#include "beran/crypto.hpp"
#include "beran/timings.hpp"

using namespace beran;

namespace {

Seed256 seed_of(uint64_t n) {
    Seed256 s{};
    for (int i = 0; i < 8; ++i) s[i] = static_cast<uint8_t>(n >> (8 * i));
    return s;
}

SignedContent content_of(const Bytes& msg) {
    SignedContent c;
    c.add("msg", msg);
    return c;
}

}  // namespace

TEST_CASE("suite parameters") {
    CryptoSuite ff = CryptoSuite::finite_field();
    CHECK(ff.public_key_bits == 3072);
    CHECK(ff.private_key_bits == 256);
    CryptoSuite ec = CryptoSuite::elliptic_curve();
    CHECK(ec.public_key_bits == 256);
    CHECK(ec.private_key_bits == 256);
}

TEST_CASE("keypair generation is reproducible under a fixed seed") {
    for (auto kind : {SuiteKind::EllipticCurve, SuiteKind::FiniteField}) {
        CryptoSuite suite = CryptoSuite::of(kind);
        KeyPair a = generate_keypair(suite, seed_of(7));
        KeyPair b = generate_keypair(suite, seed_of(7));
        CHECK(a.public_key == b.public_key);
        CHECK(a.private_key == b.private_key);
    }
}

TEST_CASE("unseeded finite-field key is 3072 bits") {
    KeyPair k = generate_keypair(CryptoSuite::finite_field());
    CHECK(k.public_key.size() * 8 == 3072);
    CHECK(k.private_key.size() * 8 == 256);
}

TEST_CASE("distinct seeds give pairwise distinct public keys") {
    std::set<Bytes> seen;
    for (uint64_t i = 0; i < 100; ++i) {
        KeyPair k = generate_keypair(CryptoSuite::elliptic_curve(), seed_of(i));
        CHECK(seen.insert(k.public_key).second);
    }
    CHECK(seen.size() == 100);
}

TEST_CASE("bc address: deterministic, 34 bytes") {
    KeyPair k = generate_keypair(CryptoSuite::elliptic_curve(), seed_of(3));
    BcAddress a = derive_bc_address(k.public_key);
    BcAddress b = derive_bc_address(k.public_key);
    CHECK(a == b);
    CHECK(a.bytes.size() == 34);
    CHECK(a.hex().size() == 68);
    CHECK_THROWS_AS(derive_bc_address(Bytes{}), std::invalid_argument);
}

TEST_CASE("bc address: each of the first 64 bit flips changes the address") {
    KeyPair k = generate_keypair(CryptoSuite::elliptic_curve(), seed_of(5));
    BcAddress base = derive_bc_address(k.public_key);
    for (int bit = 0; bit < 64; ++bit) {
        Bytes mutated = k.public_key;
        mutated[bit / 8] ^= static_cast<uint8_t>(1u << (bit % 8));
        CHECK(derive_bc_address(mutated) != base);
    }
}

TEST_CASE("sign/verify round trip and rejection") {
    for (auto kind : {SuiteKind::EllipticCurve, SuiteKind::FiniteField}) {
        CryptoSuite suite = CryptoSuite::of(kind);
        KeyPair k = generate_keypair(suite, seed_of(11));
        SignedContent c = content_of({1, 2, 3, 4});
        Signature sig = sign(k, c);
        CHECK(verify(suite, k.public_key, sig, c));

        // a different key pair's public key rejects
        KeyPair other = generate_keypair(suite, seed_of(12));
        CHECK_FALSE(verify(suite, other.public_key, sig, c));

        // truncated signature rejects
        Signature cut = sig;
        cut.bytes.resize(cut.bytes.size() / 2);
        CHECK_FALSE(verify(suite, k.public_key, cut, c));
    }
}

TEST_CASE("verify: mutating any content field fails") {
    CryptoSuite suite = CryptoSuite::elliptic_curve();
    KeyPair k = generate_keypair(suite, seed_of(21));
    SignedContent c;
    c.add("addr", Bytes{0xaa, 0xbb});
    c.add("nonce", Bytes{0x01, 0x02, 0x03});
    Signature sig = sign(k, c);
    REQUIRE(verify(suite, k.public_key, sig, c));

    for (size_t field = 0; field < c.fields.size(); ++field) {
        SignedContent mutated = c;
        mutated.fields[field].second[0] ^= 1;
        CHECK_FALSE(verify(suite, k.public_key, sig, mutated));
    }
}

TEST_CASE("sign/verify property: 1000 random messages per suite") {
    for (auto kind : {SuiteKind::EllipticCurve, SuiteKind::FiniteField}) {
        CryptoSuite suite = CryptoSuite::of(kind);
        KeyPair k = generate_keypair(suite, seed_of(31));
        SeededRng rng(99);
        int cases = kind == SuiteKind::EllipticCurve ? 1000 : 200;
        for (int i = 0; i < cases; ++i) {
            Bytes msg(1 + (i % 96));
            rng.fill(msg);
            SignedContent c = content_of(msg);
            Signature sig = sign(k, c);
            CHECK(verify(suite, k.public_key, sig, c));
        }
    }
}

TEST_CASE("single-bit mutations of message, signature, or key all fail") {
    SeededRng rng(123);
    for (auto kind : {SuiteKind::EllipticCurve, SuiteKind::FiniteField}) {
        CryptoSuite suite = CryptoSuite::of(kind);
        KeyPair k = generate_keypair(suite, seed_of(41));
        Bytes msg(48);
        rng.fill(msg);
        SignedContent c = content_of(msg);
        Signature sig = sign(k, c);

        for (int trial = 0; trial < 64; ++trial) {
            uint8_t which[1], pos[2];
            rng.fill(which);
            rng.fill(pos);
            size_t offset = (size_t(pos[0]) << 8 | pos[1]);
            switch (which[0] % 3) {
                case 0: {
                    SignedContent m = c;
                    m.fields[0].second[offset % msg.size()] ^= uint8_t(1u << (pos[1] % 8));
                    CHECK_FALSE(verify(suite, k.public_key, sig, m));
                    break;
                }
                case 1: {
                    Signature s = sig;
                    s.bytes[offset % s.bytes.size()] ^= uint8_t(1u << (pos[1] % 8));
                    CHECK_FALSE(verify(suite, k.public_key, s, c));
                    break;
                }
                case 2: {
                    Bytes pk = k.public_key;
                    pk[offset % pk.size()] ^= uint8_t(1u << (pos[1] % 8));
                    CHECK_FALSE(verify(suite, pk, sig, c));
                    break;
                }
            }
        }
    }
}

TEST_CASE("kem round trip and tamper rejection") {
    SeededRng rng(55);
    for (auto kind : {SuiteKind::EllipticCurve, SuiteKind::FiniteField}) {
        CryptoSuite suite = CryptoSuite::of(kind);
        KeyPair k = generate_keypair(suite, seed_of(61));
        Bytes secret(32);
        rng.fill(secret);
        Bytes ct = kem_seal(suite, k.public_key, secret, rng);
        auto pt = kem_open(k, ct);
        REQUIRE(pt.has_value());
        CHECK(*pt == secret);

        Bytes corrupted = ct;
        corrupted[corrupted.size() / 2] ^= 1;
        CHECK_FALSE(kem_open(k, corrupted).has_value());

        KeyPair wrong = generate_keypair(suite, seed_of(62));
        CHECK_FALSE(kem_open(wrong, ct).has_value());
    }
}

TEST_CASE("measure_primitives: positive, finite, dh identities hold") {
    for (int reps : {1, 9}) {
        PrimitiveTimings t = measure_primitives(CryptoSuite::elliptic_curve(), reps, 256);
        for (double v : {t.t_sign_us, t.t_verify_us, t.t_hash_us, t.t_sym_us, t.t_hmac_us,
                         t.t_pm_us, t.t_exp_us}) {
            CHECK(v > 0);
            CHECK(std::isfinite(v));
        }
        CHECK(t.t_dh_us == 2 * t.t_exp_us);
        CHECK(t.t_ecdh_us == 2 * t.t_pm_us);
    }
    CHECK_THROWS_AS(measure_primitives(CryptoSuite::elliptic_curve(), 0),
                    std::invalid_argument);
}

TEST_CASE("timings text round trip") {
    PrimitiveTimings t = reference_timings(SuiteKind::FiniteField);
    PrimitiveTimings e = reference_timings(SuiteKind::EllipticCurve);
    std::string text = timings_to_text({t, e});
    auto parsed = timings_from_text(text);
    REQUIRE(parsed.has_value());
    REQUIRE(parsed->size() == 2);
    for (const auto& p : *parsed) {
        const PrimitiveTimings& want = p.suite == SuiteKind::FiniteField ? t : e;
        CHECK(p.t_sign_us == want.t_sign_us);
        CHECK(p.t_verify_us == want.t_verify_us);
        CHECK(p.t_dh_us == want.t_dh_us);
        CHECK(p.t_ecdh_us == want.t_ecdh_us);
    }
    CHECK_FALSE(timings_from_text("t_bogus ec 1.0\n").has_value());
}

TEST_CASE("reference timings match the published table") {
    PrimitiveTimings ff = reference_timings(SuiteKind::FiniteField);
    CHECK(ff.t_sign_us == 1506.0);   // 1.506 ms
    CHECK(ff.t_verify_us == 30.0);
    PrimitiveTimings ec = reference_timings(SuiteKind::EllipticCurve);
    CHECK(ec.t_sign_us == 16.0);
    CHECK(ec.t_verify_us == 100.0);
    CHECK(ec.t_hash_us == 0.5);
    CHECK(ec.t_sym_us == 3.0);
    CHECK(ec.t_hmac_us == 1.4);
    CHECK(ec.t_pm_us == 906.0);
    CHECK(ec.t_exp_us == 925.0);
    CHECK(ec.t_dh_us == 1812.0);
    CHECK(ec.t_ecdh_us == 2132.0);
}

#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace beran {

using Bytes = std::vector<uint8_t>;
using Hash256 = std::array<uint8_t, 32>;

std::string to_hex(std::span<const uint8_t> data);
std::optional<Bytes> from_hex(std::string_view hex);

/// Canonical serialization used everywhere a deterministic byte image is
/// needed (signed content, block hashing, chain export): each field is
/// emitted as a 4-byte big-endian length followed by the raw bytes, in
/// declared order.
class CanonicalWriter {
public:
    void field(std::span<const uint8_t> bytes);
    void field_u8(uint8_t v);
    void field_u64(uint64_t v);
    void field_i64(int64_t v);

    const Bytes& bytes() const { return out_; }
    Bytes take() { return std::move(out_); }

private:
    Bytes out_;
};

/// Parses a CanonicalWriter image back into its field list. Returns
/// nullopt on truncation or trailing garbage.
std::optional<std::vector<Bytes>> canonical_fields(std::span<const uint8_t> image);

/// Cursor-style big-endian reader for wire codecs. All getters return
/// false once the input is exhausted; the error sticks.
class ByteReader {
public:
    explicit ByteReader(std::span<const uint8_t> data) : data_(data) {}

    bool u8(uint8_t& v);
    bool u16(uint16_t& v);
    bool u32(uint32_t& v);
    bool u64(uint64_t& v);
    bool raw(std::span<uint8_t> out);
    bool raw(Bytes& out, size_t n);

    size_t remaining() const { return data_.size() - pos_; }
    bool done() const { return pos_ == data_.size() && !failed_; }
    bool ok() const { return !failed_; }

private:
    bool take(size_t n, const uint8_t*& p);
    std::span<const uint8_t> data_;
    size_t pos_ = 0;
    bool failed_ = false;
};

class ByteWriter {
public:
    void u8(uint8_t v);
    void u16(uint16_t v);
    void u32(uint32_t v);
    void u64(uint64_t v);
    void raw(std::span<const uint8_t> data);

    const Bytes& bytes() const { return out_; }
    Bytes take() { return std::move(out_); }

private:
    Bytes out_;
};

}  // namespace beran

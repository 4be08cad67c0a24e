#include "beran/bytes.hpp"

#include <cstring>

namespace beran {

static constexpr char kHexDigits[] = "0123456789abcdef";

std::string to_hex(std::span<const uint8_t> data) {
    std::string out;
    out.reserve(data.size() * 2);
    for (uint8_t b : data) {
        out.push_back(kHexDigits[b >> 4]);
        out.push_back(kHexDigits[b & 0x0f]);
    }
    return out;
}

static int hex_nibble(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
}

std::optional<Bytes> from_hex(std::string_view hex) {
    if (hex.size() % 2 != 0) return std::nullopt;
    Bytes out(hex.size() / 2);
    for (size_t i = 0; i < out.size(); ++i) {
        int hi = hex_nibble(hex[2 * i]);
        int lo = hex_nibble(hex[2 * i + 1]);
        if (hi < 0 || lo < 0) return std::nullopt;
        out[i] = static_cast<uint8_t>((hi << 4) | lo);
    }
    return out;
}

void CanonicalWriter::field(std::span<const uint8_t> bytes) {
    uint32_t n = static_cast<uint32_t>(bytes.size());
    out_.push_back(static_cast<uint8_t>(n >> 24));
    out_.push_back(static_cast<uint8_t>(n >> 16));
    out_.push_back(static_cast<uint8_t>(n >> 8));
    out_.push_back(static_cast<uint8_t>(n));
    out_.insert(out_.end(), bytes.begin(), bytes.end());
}

void CanonicalWriter::field_u8(uint8_t v) {
    field(std::span<const uint8_t>(&v, 1));
}

void CanonicalWriter::field_u64(uint64_t v) {
    uint8_t buf[8];
    for (int i = 7; i >= 0; --i) {
        buf[i] = static_cast<uint8_t>(v & 0xff);
        v >>= 8;
    }
    field(buf);
}

void CanonicalWriter::field_i64(int64_t v) {
    field_u64(static_cast<uint64_t>(v));
}

std::optional<std::vector<Bytes>> canonical_fields(std::span<const uint8_t> image) {
    std::vector<Bytes> fields;
    size_t pos = 0;
    while (pos < image.size()) {
        if (image.size() - pos < 4) return std::nullopt;
        uint32_t n = (uint32_t(image[pos]) << 24) | (uint32_t(image[pos + 1]) << 16) |
                     (uint32_t(image[pos + 2]) << 8) | uint32_t(image[pos + 3]);
        pos += 4;
        if (image.size() - pos < n) return std::nullopt;
        fields.emplace_back(image.begin() + pos, image.begin() + pos + n);
        pos += n;
    }
    return fields;
}

bool ByteReader::take(size_t n, const uint8_t*& p) {
    if (failed_ || data_.size() - pos_ < n) {
        failed_ = true;
        return false;
    }
    p = data_.data() + pos_;
    pos_ += n;
    return true;
}

bool ByteReader::u8(uint8_t& v) {
    const uint8_t* p;
    if (!take(1, p)) return false;
    v = p[0];
    return true;
}

bool ByteReader::u16(uint16_t& v) {
    const uint8_t* p;
    if (!take(2, p)) return false;
    v = static_cast<uint16_t>((uint16_t(p[0]) << 8) | p[1]);
    return true;
}

bool ByteReader::u32(uint32_t& v) {
    const uint8_t* p;
    if (!take(4, p)) return false;
    v = (uint32_t(p[0]) << 24) | (uint32_t(p[1]) << 16) | (uint32_t(p[2]) << 8) | p[3];
    return true;
}

bool ByteReader::u64(uint64_t& v) {
    const uint8_t* p;
    if (!take(8, p)) return false;
    v = 0;
    for (int i = 0; i < 8; ++i) v = (v << 8) | p[i];
    return true;
}

bool ByteReader::raw(std::span<uint8_t> out) {
    const uint8_t* p;
    if (!take(out.size(), p)) return false;
    std::memcpy(out.data(), p, out.size());
    return true;
}

bool ByteReader::raw(Bytes& out, size_t n) {
    const uint8_t* p;
    if (!take(n, p)) return false;
    out.assign(p, p + n);
    return true;
}

void ByteWriter::u8(uint8_t v) { out_.push_back(v); }

void ByteWriter::u16(uint16_t v) {
    out_.push_back(static_cast<uint8_t>(v >> 8));
    out_.push_back(static_cast<uint8_t>(v));
}

void ByteWriter::u32(uint32_t v) {
    out_.push_back(static_cast<uint8_t>(v >> 24));
    out_.push_back(static_cast<uint8_t>(v >> 16));
    out_.push_back(static_cast<uint8_t>(v >> 8));
    out_.push_back(static_cast<uint8_t>(v));
}

void ByteWriter::u64(uint64_t v) {
    for (int i = 7; i >= 0; --i) out_.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

void ByteWriter::raw(std::span<const uint8_t> data) {
    out_.insert(out_.end(), data.begin(), data.end());
}

}  // namespace beran

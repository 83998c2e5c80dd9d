#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "dlkd/errors.hpp"

namespace dlkd {

/// Appends little-endian encoded primitives to a byte buffer. All binary
/// formats in this project are little-endian regardless of host order.
class ByteWriter {
public:
    void u8(std::uint8_t v) { buf_.push_back(v); }

    void u16(std::uint16_t v) {
        buf_.push_back(static_cast<std::uint8_t>(v & 0xFF));
        buf_.push_back(static_cast<std::uint8_t>((v >> 8) & 0xFF));
    }

    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xFF));
    }

    void u64(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xFF));
    }

    void f32(float v) {
        std::uint32_t bits;
        std::memcpy(&bits, &v, 4);
        u32(bits);
    }

    void bytes(const void* p, std::size_t n) {
        const auto* b = static_cast<const std::uint8_t*>(p);
        buf_.insert(buf_.end(), b, b + n);
    }

    void str(const std::string& s) { bytes(s.data(), s.size()); }

    const std::vector<std::uint8_t>& buffer() const { return buf_; }

    void write_file(const std::string& path) const {
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot open '" + path + "' for writing");
        out.write(reinterpret_cast<const char*>(buf_.data()),
                  static_cast<std::streamsize>(buf_.size()));
        if (!out) throw Error("write failed for '" + path + "'");
    }

private:
    std::vector<std::uint8_t> buf_;
};

/// Reads little-endian primitives from a byte buffer, throwing FormatError
/// with the current byte offset on truncation.
class ByteReader {
public:
    explicit ByteReader(std::vector<std::uint8_t> buf) : buf_(std::move(buf)) {}

    static ByteReader from_file(const std::string& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw Error("cannot open '" + path + "' for reading");
        std::vector<std::uint8_t> buf((std::istreambuf_iterator<char>(in)),
                                      std::istreambuf_iterator<char>());
        return ByteReader(std::move(buf));
    }

    std::size_t offset() const { return pos_; }
    std::size_t remaining() const { return buf_.size() - pos_; }
    bool at_end() const { return pos_ == buf_.size(); }

    std::uint8_t u8() {
        need(1, "u8");
        return buf_[pos_++];
    }

    std::uint16_t u16() {
        need(2, "u16");
        std::uint16_t v = static_cast<std::uint16_t>(buf_[pos_] | (buf_[pos_ + 1] << 8));
        pos_ += 2;
        return v;
    }

    std::uint32_t u32() {
        need(4, "u32");
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(buf_[pos_ + i]) << (8 * i);
        pos_ += 4;
        return v;
    }

    std::uint64_t u64() {
        need(8, "u64");
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf_[pos_ + i]) << (8 * i);
        pos_ += 8;
        return v;
    }

    float f32() {
        std::uint32_t bits = u32();
        float v;
        std::memcpy(&v, &bits, 4);
        return v;
    }

    std::string str(std::size_t n) {
        need(n, "string");
        std::string s(reinterpret_cast<const char*>(buf_.data() + pos_), n);
        pos_ += n;
        return s;
    }

    void expect_magic(const char (&magic)[5]) {
        std::size_t at = pos_;
        std::string got = str(4);
        if (got != std::string(magic, 4))
            throw FormatError("bad magic: expected '" + std::string(magic, 4) + "', got '" + got + "'", at);
    }

    void expect_end() {
        if (!at_end())
            throw FormatError("trailing bytes after end of record", pos_);
    }

private:
    void need(std::size_t n, const char* what) {
        if (pos_ + n > buf_.size())
            throw FormatError(std::string("truncated file: need ") + std::to_string(n) +
                                  " byte(s) for " + what,
                              pos_);
    }

    std::vector<std::uint8_t> buf_;
    std::size_t pos_ = 0;
};

} // namespace dlkd

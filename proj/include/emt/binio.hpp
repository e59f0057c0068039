#pragma once

#include <cstdint>
#include <cstring>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace emt {

// Little-endian binary container helpers shared by the model, dataset and
// fingerprint snapshot formats.

uint32_t crc32(std::span<const uint8_t> data, uint32_t seed = 0);

class ByteWriter {
public:
    void u8(uint8_t v) { buf_.push_back(v); }
    void u16(uint16_t v) { raw(&v, 2); }
    void u32(uint32_t v) { raw(&v, 4); }
    void u64(uint64_t v) { raw(&v, 8); }
    void i32(int32_t v) { raw(&v, 4); }
    void f32(float v) { raw(&v, 4); }
    void f64(double v) { raw(&v, 8); }
    void str(const std::string& s) {
        u32(static_cast<uint32_t>(s.size()));
        raw(s.data(), s.size());
    }
    void bytes(std::span<const uint8_t> b) { raw(b.data(), b.size()); }

    // Appends a CRC32 of everything written so far.
    void finish_with_crc() { u32(crc32(buf_)); }

    const std::vector<uint8_t>& data() const { return buf_; }
    std::vector<uint8_t> take() { return std::move(buf_); }

private:
    void raw(const void* p, size_t n) {
        const auto* b = static_cast<const uint8_t*>(p);
        buf_.insert(buf_.end(), b, b + n);
    }
    std::vector<uint8_t> buf_;
};

struct ChecksumFailure : std::runtime_error {
    ChecksumFailure() : std::runtime_error("container checksum mismatch or truncated file") {}
};
struct VersionMismatch : std::runtime_error {
    explicit VersionMismatch(uint16_t got, uint16_t want)
        : std::runtime_error("container version " + std::to_string(got) +
                             ", expected " + std::to_string(want)) {}
};

class ByteReader {
public:
    explicit ByteReader(std::span<const uint8_t> data) : data_(data) {}

    uint8_t u8() { return take<uint8_t>(); }
    uint16_t u16() { return take<uint16_t>(); }
    uint32_t u32() { return take<uint32_t>(); }
    uint64_t u64() { return take<uint64_t>(); }
    int32_t i32() { return take<int32_t>(); }
    float f32() { return take<float>(); }
    double f64() { return take<double>(); }
    std::string str() {
        uint32_t n = u32();
        need(n);
        std::string s(reinterpret_cast<const char*>(data_.data() + pos_), n);
        pos_ += n;
        return s;
    }

    // Validates the trailing CRC32 over the whole payload before any field is
    // consumed. Call immediately after construction.
    void check_crc() {
        if (data_.size() < 4) throw ChecksumFailure{};
        size_t body = data_.size() - 4;
        uint32_t stored;
        std::memcpy(&stored, data_.data() + body, 4);
        if (crc32(data_.subspan(0, body)) != stored) throw ChecksumFailure{};
        data_ = data_.subspan(0, body);
    }

    size_t remaining() const { return data_.size() - pos_; }

private:
    template <class T>
    T take() {
        need(sizeof(T));
        T v;
        std::memcpy(&v, data_.data() + pos_, sizeof(T));
        pos_ += sizeof(T);
        return v;
    }
    void need(size_t n) const {
        if (pos_ + n > data_.size()) throw ChecksumFailure{};
    }
    std::span<const uint8_t> data_;
    size_t pos_ = 0;
};

std::vector<uint8_t> read_file(const std::string& path);
void write_file(const std::string& path, std::span<const uint8_t> data);

}  // namespace emt

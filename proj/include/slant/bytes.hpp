#pragma once

// Little-endian byte buffer primitives for the versioned binary artifacts.

#include <cstdint>
#include <cstring>
#include <string>
#include <vector>

#include "slant/common.hpp"

namespace slant {

struct ByteWriter {
    std::vector<std::uint8_t> bytes;

    void put_raw(const void* data, std::size_t len) {
        const auto* p = static_cast<const std::uint8_t*>(data);
        bytes.insert(bytes.end(), p, p + len);
    }
    void put_u8(std::uint8_t v) { bytes.push_back(v); }
    void put_u16(std::uint16_t v) { put_raw(&v, sizeof(v)); }
    void put_u32(std::uint32_t v) { put_raw(&v, sizeof(v)); }
    void put_u64(std::uint64_t v) { put_raw(&v, sizeof(v)); }
    void put_i32(std::int32_t v) { put_raw(&v, sizeof(v)); }
    void put_i64(std::int64_t v) { put_raw(&v, sizeof(v)); }
    void put_f32(float v) { put_raw(&v, sizeof(v)); }
    void put_f64(double v) { put_raw(&v, sizeof(v)); }
    void put_string(const std::string& s) {
        put_u64(s.size());
        put_raw(s.data(), s.size());
    }
    void put_tag(const char (&tag)[5]) { put_raw(tag, 4); }
};

struct ByteReader {
    const std::uint8_t* data;
    std::size_t size;
    std::size_t pos = 0;

    ByteReader(const std::uint8_t* d, std::size_t n) : data(d), size(n) {}
    explicit ByteReader(const std::vector<std::uint8_t>& v) : data(v.data()), size(v.size()) {}

    bool at_end() const { return pos >= size; }

    void get_raw(void* out, std::size_t len) {
        if (pos + len > size) raise("truncated binary data");
        std::memcpy(out, data + pos, len);
        pos += len;
    }
    std::uint8_t get_u8() { std::uint8_t v; get_raw(&v, 1); return v; }
    std::uint16_t get_u16() { std::uint16_t v; get_raw(&v, sizeof(v)); return v; }
    std::uint32_t get_u32() { std::uint32_t v; get_raw(&v, sizeof(v)); return v; }
    std::uint64_t get_u64() { std::uint64_t v; get_raw(&v, sizeof(v)); return v; }
    std::int32_t get_i32() { std::int32_t v; get_raw(&v, sizeof(v)); return v; }
    std::int64_t get_i64() { std::int64_t v; get_raw(&v, sizeof(v)); return v; }
    float get_f32() { float v; get_raw(&v, sizeof(v)); return v; }
    double get_f64() { double v; get_raw(&v, sizeof(v)); return v; }
    std::string get_string() {
        const auto len = get_u64();
        if (pos + len > size) raise("truncated binary string");
        std::string s(reinterpret_cast<const char*>(data + pos), len);
        pos += len;
        return s;
    }
    std::string get_tag() {
        char t[5] = {0};
        get_raw(t, 4);
        return t;
    }
};

}  // namespace slant

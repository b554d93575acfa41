// Little-endian binary primitives shared by the .aftd / .aftc / .aftl file
// formats. All on-disk floats are IEEE-754 binary32 unless a writer says
// otherwise; counts are fixed-width unsigned little-endian.
#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace aft::io {

static_assert(std::endian::native == std::endian::little ||
                  std::endian::native == std::endian::big,
              "mixed-endian platforms unsupported");

template <typename T>
inline T byteswap_int(T v) {
    T r;
    auto* s = reinterpret_cast<const unsigned char*>(&v);
    auto* d = reinterpret_cast<unsigned char*>(&r);
    for (size_t i = 0; i < sizeof(T); ++i) d[i] = s[sizeof(T) - 1 - i];
    return r;
}

template <typename T>
inline T to_le(T v) {
    if constexpr (std::endian::native == std::endian::big) return byteswap_int(v);
    return v;
}

class Writer {
public:
    explicit Writer(const std::string& path) : out_(path, std::ios::binary) {
        if (!out_) throw std::runtime_error("cannot open for writing: " + path);
        path_ = path;
    }

    void bytes(const void* p, size_t n) { out_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n)); }

    void u16(uint16_t v) { v = to_le(v); bytes(&v, 2); }
    void u32(uint32_t v) { v = to_le(v); bytes(&v, 4); }
    void u64(uint64_t v) { v = to_le(v); bytes(&v, 8); }

    void f32(float v) {
        uint32_t bits;
        std::memcpy(&bits, &v, 4);
        u32(bits);
    }
    void f64(double v) {
        uint64_t bits;
        std::memcpy(&bits, &v, 8);
        u64(bits);
    }

    void magic(const char (&m)[5]) { bytes(m, 4); }

    void close() {
        out_.close();
        if (!out_) throw std::runtime_error("write failed: " + path_);
    }

private:
    std::ofstream out_;
    std::string path_;
};

class Reader {
public:
    explicit Reader(const std::string& path) : in_(path, std::ios::binary) {
        if (!in_) throw std::runtime_error("cannot open for reading: " + path);
        path_ = path;
    }

    void bytes(void* p, size_t n) {
        in_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
        if (static_cast<size_t>(in_.gcount()) != n)
            throw std::runtime_error("unexpected end of file: " + path_);
    }

    uint16_t u16() { uint16_t v; bytes(&v, 2); return to_le(v); }
    uint32_t u32() { uint32_t v; bytes(&v, 4); return to_le(v); }
    uint64_t u64() { uint64_t v; bytes(&v, 8); return to_le(v); }

    float f32() {
        uint32_t bits = u32();
        float v;
        std::memcpy(&v, &bits, 4);
        return v;
    }
    double f64() {
        uint64_t bits = u64();
        double v;
        std::memcpy(&v, &bits, 8);
        return v;
    }

    void expect_magic(const char (&m)[5]) {
        char got[4];
        bytes(got, 4);
        if (std::memcmp(got, m, 4) != 0)
            throw std::runtime_error(std::string("bad magic in ") + path_ + ", expected " + m);
    }

    const std::string& path() const { return path_; }

private:
    std::ifstream in_;
    std::string path_;
};

}  // namespace aft::io

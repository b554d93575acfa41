// Seed derivation, portable variate generation, and binary file round trips.
#include <cstdio>
#include <filesystem>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "aft/io.hpp"
#include "aft/rng.hpp"
#include "doctest.h"

using namespace aft;

namespace {
std::string temp_file(const char* name) {
    return (std::filesystem::temp_directory_path() / name).string();
}
}  // namespace

TEST_CASE("mix64 matches the SplitMix64 finalizer") {
    // Frozen outputs of the reference finalizer (independently computed).
    CHECK(mix64(0) == 0xe220a8397b1dcdafULL);
    CHECK(mix64(1) == 0x910a2dec89025cc1ULL);
    CHECK(mix64(42) == 0xbdd732262feb6e95ULL);
}

TEST_CASE("derive_seed is stable and separates indices and tags") {
    CHECK(derive_seed(1, 2, 3) == 0x5ce85fa2cccf25ceULL);
    std::set<uint64_t> seen;
    for (uint64_t idx = 0; idx < 100; ++idx)
        for (uint64_t tag : {0ULL, 1ULL, 0x74617000ULL}) seen.insert(derive_seed(7, idx, tag));
    CHECK(seen.size() == 300);  // no collisions across a small grid
    CHECK(derive_seed(7, 0, 1) != derive_seed(7, 1, 0));
}

TEST_CASE("Rng streams are reproducible and well-ranged") {
    Rng a(123), b(123);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());

    Rng r(9);
    for (int i = 0; i < 1000; ++i) {
        const double u = r.uniform();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
    }
    for (int i = 0; i < 1000; ++i) CHECK(r.below(17) < 17);

    const double lo = 2.5, hi = 6.5;
    for (int i = 0; i < 100; ++i) {
        const double u = r.uniform(lo, hi);
        CHECK(u >= lo);
        CHECK(u < hi);
    }
}

TEST_CASE("Rng gaussian has standard moments") {
    Rng r(2024);
    const int n = 200000;
    double s1 = 0.0, s2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double g = r.gaussian();
        s1 += g;
        s2 += g * g;
    }
    const double mean = s1 / n;
    const double var = s2 / n - mean * mean;
    CHECK(std::abs(mean) < 0.01);
    CHECK(std::abs(var - 1.0) < 0.02);
}

TEST_CASE("binary writer/reader round trip") {
    const std::string path = temp_file("aft_io_roundtrip.bin");
    {
        io::Writer w(path);
        w.magic("AFTT");
        w.u16(0x1234);
        w.u32(0xdeadbeefu);
        w.u64(0x0123456789abcdefULL);
        w.f32(1.5f);
        w.f64(-2.25);
        const char payload[] = {'x', 'y', 'z'};
        w.bytes(payload, 3);
        w.close();
    }
    {
        io::Reader r(path);
        r.expect_magic("AFTT");
        CHECK(r.u16() == 0x1234);
        CHECK(r.u32() == 0xdeadbeefu);
        CHECK(r.u64() == 0x0123456789abcdefULL);
        CHECK(r.f32() == 1.5f);
        CHECK(r.f64() == -2.25);
        char buf[3];
        r.bytes(buf, 3);
        CHECK(buf[0] == 'x');
        CHECK(buf[2] == 'z');
    }
    {
        io::Reader r(path);
        CHECK_THROWS_AS(r.expect_magic("NOPE"), std::runtime_error);
    }
    std::filesystem::remove(path);
}

#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <vector>

#include "nrmc/rng.hpp"

using nrmc::PhiloxRng;

TEST_CASE("philox known-answer vectors") {
    // Published test vectors for the 10-round 4x32 variant.
    {
        auto out = PhiloxRng::block(0, 0, 0);
        CHECK(out[0] == 0x6627e8d5u);
        CHECK(out[1] == 0xe169c58du);
        CHECK(out[2] == 0xbc57ac4cu);
        CHECK(out[3] == 0x9b00dbd8u);
    }
    {
        const std::uint64_t ones = ~std::uint64_t{0};
        auto out = PhiloxRng::block(ones, ones, ones);
        CHECK(out[0] == 0x408f276du);
        CHECK(out[1] == 0x41c83b0eu);
        CHECK(out[2] == 0xa20bc7c6u);
        CHECK(out[3] == 0x6d5451fdu);
    }
    {
        // key {a4093822, 299f31d0}, counter {243f6a88, 85a308d3, 13198a2e, 03707344}
        const std::uint64_t seed = (std::uint64_t{0x299f31d0u} << 32) | 0xa4093822u;
        const std::uint64_t block_index = (std::uint64_t{0x85a308d3u} << 32) | 0x243f6a88u;
        const std::uint64_t stream = (std::uint64_t{0x03707344u} << 32) | 0x13198a2eu;
        auto out = PhiloxRng::block(seed, stream, block_index);
        CHECK(out[0] == 0xd16cfe09u);
        CHECK(out[1] == 0x94fdccebu);
        CHECK(out[2] == 0x5001e420u);
        CHECK(out[3] == 0x24126ea1u);
    }
}

TEST_CASE("uniform lies strictly inside (0,1) and has the right mean") {
    PhiloxRng rng(42, 0);
    double sum = 0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        double u = rng.uniform();
        REQUIRE(u > 0.0);
        REQUIRE(u < 1.0);
        sum += u;
    }
    // mean 1/2, sd of the mean = 1/sqrt(12 n); allow 5 sigma
    CHECK(std::abs(sum / n - 0.5) < 5.0 / std::sqrt(12.0 * n));
}

TEST_CASE("streams with the same seed are distinct and reproducible") {
    PhiloxRng a(7, 0), b(7, 1), a2(7, 0);
    int equal = 0;
    for (int i = 0; i < 1000; ++i) {
        std::uint64_t x = a.next_u64();
        if (x == b.next_u64()) ++equal;
        CHECK(x == a2.next_u64());
    }
    CHECK(equal == 0);
}

TEST_CASE("position and seek round-trip mid-block") {
    PhiloxRng rng(123, 5);
    for (int i = 0; i < 7; ++i) rng.next_u64();
    const std::uint64_t pos = rng.position();
    std::vector<std::uint64_t> tail;
    for (int i = 0; i < 16; ++i) tail.push_back(rng.next_u64());

    PhiloxRng fresh(123, 5);
    fresh.seek(pos);
    for (int i = 0; i < 16; ++i) CHECK(fresh.next_u64() == tail[static_cast<size_t>(i)]);
}

TEST_CASE("below() covers the full range without bias at small bounds") {
    PhiloxRng rng(99, 0);
    std::vector<int> counts(5, 0);
    const int n = 50000;
    for (int i = 0; i < n; ++i) ++counts[static_cast<size_t>(rng.below(5))];
    for (int c : counts) {
        CHECK(c > 0);
        // 5 sigma around n/5 with binomial sd
        CHECK(std::abs(c - n / 5.0) < 5.0 * std::sqrt(n * 0.2 * 0.8));
    }
}

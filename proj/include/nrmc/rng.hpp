#ifndef NRMC_RNG_HPP
#define NRMC_RNG_HPP

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>

namespace nrmc {

// Counter-based generator (Philox 4x32, 10 rounds). One instance per chain,
// keyed by (seed, stream); streams with the same seed are independent.
// The whole state is the output position n_, so serializing a generator
// amounts to storing a single 64-bit integer.
class PhiloxRng {
public:
    using result_type = std::uint64_t;

    explicit PhiloxRng(std::uint64_t seed, std::uint64_t stream = 0) noexcept
        : seed_(seed), stream_(stream) {}

    std::uint64_t next_u64() {
        const std::uint64_t block_index = n_ >> 1;
        if (block_index != cache_index_) {
            cache_ = block(seed_, stream_, block_index);
            cache_index_ = block_index;
        }
        const unsigned lane = static_cast<unsigned>(n_ & 1);
        ++n_;
        return static_cast<std::uint64_t>(cache_[2 * lane]) |
               (static_cast<std::uint64_t>(cache_[2 * lane + 1]) << 32);
    }

    // Uniform on the open interval (0,1); never returns 0 or 1, so log(u)
    // and log(-log(u)) are always finite.
    double uniform() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1p-53;
    }

    // Unbiased uniform integer on [0, bound), bound >= 1.
    std::uint64_t below(std::uint64_t bound) {
        const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                    std::numeric_limits<std::uint64_t>::max() % bound;
        for (;;) {
            const std::uint64_t x = next_u64();
            if (x < limit) return x % bound;
        }
    }

    double gumbel() { return -std::log(-std::log(uniform())); }

    // Count of 64-bit outputs consumed; restorable via seek().
    std::uint64_t position() const noexcept { return n_; }
    void seek(std::uint64_t n) noexcept {
        n_ = n;
        cache_index_ = ~std::uint64_t{0};
    }

    std::uint64_t seed() const noexcept { return seed_; }
    std::uint64_t stream() const noexcept { return stream_; }

    result_type operator()() { return next_u64(); }
    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return ~result_type{0}; }

    // Raw 128-bit block for key (seed) and counter (block_index, stream).
    static std::array<std::uint32_t, 4> block(std::uint64_t seed, std::uint64_t stream,
                                              std::uint64_t block_index) noexcept {
        std::uint32_t k0 = static_cast<std::uint32_t>(seed);
        std::uint32_t k1 = static_cast<std::uint32_t>(seed >> 32);
        std::array<std::uint32_t, 4> c = {
            static_cast<std::uint32_t>(block_index),
            static_cast<std::uint32_t>(block_index >> 32),
            static_cast<std::uint32_t>(stream),
            static_cast<std::uint32_t>(stream >> 32),
        };
        for (int round = 0; round < 10; ++round) {
            if (round) {
                k0 += 0x9E3779B9u;
                k1 += 0xBB67AE85u;
            }
            const std::uint64_t p0 = std::uint64_t{0xD2511F53u} * c[0];
            const std::uint64_t p1 = std::uint64_t{0xCD9E8D57u} * c[2];
            c = {static_cast<std::uint32_t>(p1 >> 32) ^ c[1] ^ k0,
                 static_cast<std::uint32_t>(p1),
                 static_cast<std::uint32_t>(p0 >> 32) ^ c[3] ^ k1,
                 static_cast<std::uint32_t>(p0)};
        }
        return c;
    }

private:
    std::uint64_t seed_;
    std::uint64_t stream_;
    std::uint64_t n_ = 0;
    std::array<std::uint32_t, 4> cache_{};
    std::uint64_t cache_index_ = ~std::uint64_t{0};
};

} // namespace nrmc

#endif

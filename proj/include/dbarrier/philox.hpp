#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace dbarrier {

/// Philox4x32-10 counter-based block cipher.
struct Philox4x32 {
    using Counter = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    static Counter block(Counter ctr, Key key) {
        constexpr std::uint32_t m0 = 0xD2511F53u, m1 = 0xCD9E8D57u;
        constexpr std::uint32_t w0 = 0x9E3779B9u, w1 = 0xBB67AE85u;
        for (int r = 0; r < 10; ++r) {
            const std::uint64_t p0 = std::uint64_t(m0) * ctr[0];
            const std::uint64_t p1 = std::uint64_t(m1) * ctr[2];
            ctr = {std::uint32_t(p1 >> 32) ^ ctr[1] ^ key[0], std::uint32_t(p1),
                   std::uint32_t(p0 >> 32) ^ ctr[3] ^ key[1], std::uint32_t(p0)};
            key[0] += w0;
            key[1] += w1;
        }
        return ctr;
    }
};

/**
 * One reproducible random stream, keyed by (seed, path_index, stream_id).
 *
 * The draw counter occupies 56 bits of the Philox counter and the stream id
 * its top 8 bits, so the n-th draw of a stream is a pure function of n.
 */
class RandomStream {
public:
    RandomStream(std::uint64_t seed, std::uint64_t path_index, std::uint8_t stream_id)
        : key_{std::uint32_t(seed), std::uint32_t(seed >> 32)},
          path_lo_(std::uint32_t(path_index)), path_hi_(std::uint32_t(path_index >> 32)),
          stream_(std::uint64_t(stream_id) << 56) {}

    std::uint64_t next_u64() {
        if (slot_ == 2) refill();
        return buf_[slot_++];
    }

    /// Uniform on (0, 1) from the top 52 bits; never 0 or 1.
    double uniform() { return to_open_unit(next_u64()); }

    static double to_open_unit(std::uint64_t bits) {
        return (double(bits >> 12) + 0.5) * 0x1.0p-52;
    }

    double exponential(double rate) { return -std::log(uniform()) / rate; }

    /// Standard normal by Box-Muller; the second variate is cached.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double th = 2.0 * 3.14159265358979323846 * u2;
        spare_ = r * std::sin(th);
        has_spare_ = true;
        return r * std::cos(th);
    }

private:
    void refill() {
        const std::uint64_t c = stream_ | (block_ & 0x00FFFFFFFFFFFFFFull);
        ++block_;
        const auto out = Philox4x32::block({std::uint32_t(c), std::uint32_t(c >> 32), path_lo_, path_hi_}, key_);
        buf_[0] = (std::uint64_t(out[1]) << 32) | out[0];
        buf_[1] = (std::uint64_t(out[3]) << 32) | out[2];
        slot_ = 0;
    }

    Philox4x32::Key key_;
    std::uint32_t path_lo_, path_hi_;
    std::uint64_t stream_;
    std::uint64_t block_ = 0;
    std::uint64_t buf_[2] = {0, 0};
    int slot_ = 2;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace dbarrier

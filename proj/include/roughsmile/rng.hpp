#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace roughsmile {

// Philox4x32-10 counter-based generator. Each (seed, stream) pair is an
// independent stream, so per-path streams are reproducible regardless of how
// paths are distributed over threads.
class PhiloxRng {
  public:
    PhiloxRng(std::uint64_t seed, std::uint64_t stream) {
        key_[0] = static_cast<std::uint32_t>(seed);
        key_[1] = static_cast<std::uint32_t>(seed >> 32);
        ctr_ = {0u, 0u, static_cast<std::uint32_t>(stream),
                static_cast<std::uint32_t>(stream >> 32)};
    }

    std::uint32_t next_u32() {
        if (idx_ == 4) {
            block_ = philox(ctr_, key_);
            if (++ctr_[0] == 0u) ++ctr_[1];
            idx_ = 0;
        }
        return block_[idx_++];
    }

    // uniform in (0, 1]
    double next_uniform() {
        const std::uint64_t hi = next_u32();
        const std::uint64_t lo = next_u32();
        return (((hi << 21) | (lo >> 11)) + 1.0) * 0x1p-53;
    }

    // standard normal via Box-Muller
    double next_normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = next_uniform();
        const double u2 = next_uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * M_PI * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

  private:
    static std::array<std::uint32_t, 4> philox(std::array<std::uint32_t, 4> c,
                                               std::array<std::uint32_t, 2> k) {
        constexpr std::uint32_t M0 = 0xD2511F53u, M1 = 0xCD9E8D57u;
        constexpr std::uint32_t W0 = 0x9E3779B9u, W1 = 0xBB67AE85u;
        for (int round = 0; round < 10; ++round) {
            const std::uint64_t p0 = static_cast<std::uint64_t>(M0) * c[0];
            const std::uint64_t p1 = static_cast<std::uint64_t>(M1) * c[2];
            const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
            const std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
            const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
            const std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
            c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
            k[0] += W0;
            k[1] += W1;
        }
        return c;
    }

    std::array<std::uint32_t, 2> key_{};
    std::array<std::uint32_t, 4> ctr_{};
    std::array<std::uint32_t, 4> block_{};
    int idx_ = 4;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace roughsmile

#pragma once

#include <array>
#include <cstdint>

namespace nckernel {

/// Philox4x32-10 block function (Salmon et al., "Parallel random numbers:
/// as easy as 1, 2, 3"). Maps a 128-bit counter and a 64-bit key to 128
/// pseudo-random bits.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter, std::array<std::uint32_t, 2> key);

/// Independent random stream keyed by (seed, stream, substream).
///
/// The seed is the Philox key; stream and substream occupy the high counter
/// words and the draw index the low two, so streams never overlap and a
/// stream's draws do not depend on how many draws any other stream made.
class RandomStream {
public:
    RandomStream(std::uint64_t seed, std::uint32_t stream, std::uint32_t substream);

    std::uint64_t next_u64();
    /// Uniform on (0, 1); never returns 0 or 1.
    double uniform();
    double uniform(double lo, double hi);
    /// Standard normal via Box-Muller.
    double normal();
    bool bernoulli(double p);

private:
    std::array<std::uint32_t, 2> key_;
    std::uint32_t stream_;
    std::uint32_t substream_;
    std::uint64_t block_ = 0;
    std::array<std::uint32_t, 4> buffer_{};
    int buffered_ = 0;
    double spare_normal_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace nckernel

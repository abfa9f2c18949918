#pragma once

#include <array>
#include <cstdint>

namespace expem {

// Identifies one Brownian trajectory's random stream. Draw k of stream
// (seed, i) is a pure function of (seed, i, k), so trajectory i is
// reproducible without generating trajectories 0..i-1 and independent of
// the thread that asks for it.
struct StreamId {
    std::uint64_t master_seed = 0;
    std::uint64_t trajectory_index = 0;
};

// Philox-4x32 with 10 rounds (Salmon et al., "Parallel random numbers:
// as easy as 1, 2, 3", SC'11). Returns the encrypted counter.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key);

// Inverse of the standard normal CDF, Wichura's PPND16 rational
// approximation (algorithm AS 241). Relative accuracy about 1e-16,
// identical across platforms. u must lie in (0,1).
double inverse_normal_cdf(double u);

// Draw k of the stream, uniform on the open interval (0,1).
double uniform_draw(const StreamId& id, std::uint64_t k);

// Draw k of the stream, standard normal via inverse-CDF transform.
double normal_draw(const StreamId& id, std::uint64_t k);

} // namespace expem

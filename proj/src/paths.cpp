#include "expem/paths.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace expem {

double TimeGrid::eta(double t) const {
    if (t <= 0.0) return 0.0;
    const double e = dt * std::floor(t / dt);
    return e > horizon ? horizon : e;
}

TimeGrid make_grid(double T, int q) {
    if (!(T > 0.0)) throw std::invalid_argument("make_grid: T must be > 0");
    if (q < 0 || q > 62) throw std::invalid_argument("make_grid: level q outside [0,62]");
    TimeGrid g;
    g.horizon = T;
    g.level = q;
    g.steps = std::size_t{1} << q;
    g.dt = T / static_cast<double>(g.steps);
    return g;
}

TimeGrid make_grid_steps(double T, std::size_t n_steps) {
    if (!(T > 0.0)) throw std::invalid_argument("make_grid_steps: T must be > 0");
    if (n_steps == 0) throw std::invalid_argument("make_grid_steps: need at least one step");
    TimeGrid g;
    g.horizon = T;
    g.steps = n_steps;
    g.dt = T / static_cast<double>(n_steps);
    g.level = -1;
    // Recover the dyadic level when there is one.
    if ((n_steps & (n_steps - 1)) == 0) {
        int q = 0;
        for (std::size_t s = n_steps; s > 1; s >>= 1) ++q;
        g.level = q;
    }
    return g;
}

double pairwise_sum(std::span<const double> values) {
    const std::size_t n = values.size();
    if (n == 0) return 0.0;
    if (n == 1) return values[0];
    const std::size_t half = n / 2;
    return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

double BrownianPath::terminal() const { return pairwise_sum(increments); }

void sample_brownian_into(const TimeGrid& grid, const StreamId& stream, std::span<double> out) {
    if (out.size() != grid.steps)
        throw std::invalid_argument("sample_brownian_into: buffer size mismatch");
    const double sd = std::sqrt(grid.dt);
    // Two draws share one Philox block; walk blockwise to encrypt each once.
    const std::array<std::uint32_t, 2> key = {static_cast<std::uint32_t>(stream.master_seed),
                                              static_cast<std::uint32_t>(stream.master_seed >> 32)};
    const std::uint32_t traj_lo = static_cast<std::uint32_t>(stream.trajectory_index);
    const std::uint32_t traj_hi = static_cast<std::uint32_t>(stream.trajectory_index >> 32);
    for (std::size_t k = 0; k < grid.steps; k += 2) {
        const std::uint64_t block = k >> 1;
        const auto words = philox4x32({static_cast<std::uint32_t>(block),
                                       static_cast<std::uint32_t>(block >> 32), traj_lo, traj_hi},
                                      key);
        const std::uint64_t lane0 = (static_cast<std::uint64_t>(words[1]) << 32) | words[0];
        out[k] = sd * inverse_normal_cdf((static_cast<double>(lane0 >> 11) + 0.5) * 0x1.0p-53);
        if (k + 1 < grid.steps) {
            const std::uint64_t lane1 = (static_cast<std::uint64_t>(words[3]) << 32) | words[2];
            out[k + 1] =
                sd * inverse_normal_cdf((static_cast<double>(lane1 >> 11) + 0.5) * 0x1.0p-53);
        }
    }
}

BrownianPath sample_brownian(const TimeGrid& grid, const StreamId& stream) {
    BrownianPath path;
    path.grid = grid;
    path.stream = stream;
    path.increments.resize(grid.steps);
    sample_brownian_into(grid, stream, path.increments);
    return path;
}

void coarsen_into(std::span<const double> fine, int levels, std::vector<double>& out) {
    if (levels < 0) throw std::domain_error("coarsen: levels must be >= 0");
    if (levels == 0) {
        out.assign(fine.begin(), fine.end());
        return;
    }
    std::size_t check = fine.size();
    for (int l = 0; l < levels; ++l) {
        if (check % 2 != 0) throw std::domain_error("coarsen: step count not divisible by 2^levels");
        check /= 2;
    }
    // First halving reads the source, later ones run in place.
    std::size_t n = fine.size() / 2;
    out.resize(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = fine[2 * i] + fine[2 * i + 1];
    for (int l = 1; l < levels; ++l) {
        n /= 2;
        for (std::size_t i = 0; i < n; ++i) out[i] = out[2 * i] + out[2 * i + 1];
    }
    out.resize(n);
}

BrownianPath coarsen(const BrownianPath& path, int levels) {
    if (levels < 0) throw std::domain_error("coarsen: levels must be >= 0");
    if (path.grid.level >= 0 && levels > path.grid.level)
        throw std::domain_error("coarsen: levels exceeds the path's grid level");
    BrownianPath out;
    out.stream = path.stream;
    coarsen_into(path.increments, levels, out.increments);
    out.grid = make_grid_steps(path.grid.horizon, path.grid.steps >> levels);
    return out;
}

namespace {
constexpr std::uint32_t kDumpMagic = 0x42505448u; // "BPTH"
}

void write_increments(const BrownianPath& path, const std::string& filename) {
    std::ofstream out(filename, std::ios::binary);
    if (!out) throw std::runtime_error("write_increments: cannot open " + filename);
    const std::uint32_t magic = kDumpMagic;
    const std::int32_t level = path.grid.level;
    const std::uint64_t steps = path.increments.size();
    out.write(reinterpret_cast<const char*>(&magic), sizeof magic);
    out.write(reinterpret_cast<const char*>(&level), sizeof level);
    out.write(reinterpret_cast<const char*>(&path.grid.horizon), sizeof(double));
    out.write(reinterpret_cast<const char*>(&path.stream.master_seed), sizeof(std::uint64_t));
    out.write(reinterpret_cast<const char*>(&path.stream.trajectory_index), sizeof(std::uint64_t));
    out.write(reinterpret_cast<const char*>(&steps), sizeof steps);
    out.write(reinterpret_cast<const char*>(path.increments.data()),
              static_cast<std::streamsize>(steps * sizeof(double)));
    if (!out) throw std::runtime_error("write_increments: write failed on " + filename);
}

BrownianPath read_increments(const std::string& filename) {
    std::ifstream in(filename, std::ios::binary);
    if (!in) throw std::runtime_error("read_increments: cannot open " + filename);
    std::uint32_t magic = 0;
    std::int32_t level = 0;
    double horizon = 0;
    BrownianPath path;
    std::uint64_t steps = 0;
    in.read(reinterpret_cast<char*>(&magic), sizeof magic);
    if (magic != kDumpMagic) throw std::runtime_error("read_increments: bad magic in " + filename);
    in.read(reinterpret_cast<char*>(&level), sizeof level);
    in.read(reinterpret_cast<char*>(&horizon), sizeof horizon);
    in.read(reinterpret_cast<char*>(&path.stream.master_seed), sizeof(std::uint64_t));
    in.read(reinterpret_cast<char*>(&path.stream.trajectory_index), sizeof(std::uint64_t));
    in.read(reinterpret_cast<char*>(&steps), sizeof steps);
    path.increments.resize(steps);
    in.read(reinterpret_cast<char*>(path.increments.data()),
            static_cast<std::streamsize>(steps * sizeof(double)));
    if (!in) throw std::runtime_error("read_increments: truncated file " + filename);
    path.grid = make_grid_steps(horizon, steps);
    return path;
}

} // namespace expem
